"""Text formats for signatures, structures, modules, systems, and runs.

Grammar (line-oriented, UTF-8, ``#`` comments; labels with spaces are
written with underscores and mapped back for display):

    signature <name> {
      sets A, B, ...;
      subsets S of pow(T);
      consts k: <sort>, ...;
      fns f: <sort> [, <sort>]* -> <sort>, ...;
    }

    structure <name> of <sig> {
      <S> = {a, b, ...};            # carrier
      <S> = pow(T);                 # subset carrier shorthand
      <f> = {a -> x, (a, b) -> y};  # function table
      <k> = <value>;                # constant
    }

    module <name> of <sig> {
      left  { place <label> = <inner>; trans <label> = <inner>; }
      right { ... }
      places { <p> [: <sort>] [init <term> [, <term>]*]; }
      trans  { <t> [guard <atom> [and <atom>]*] [free x: <sort>, ...]; }
      arcs   { <p> -> <t> : <term> [, <term>]*; <t> -> <p> : ...; }
    }

    system <name> { <signature> <structure> <module> marking { <p>: <value>, ...; } }

    run <name> of <system> {
      conditions { b1 = <place> <value>; ... }
      events     { e1 = <transition> [x=<value>, ...]; ... }
      flow       { b1 -> e1; e1 -> b2; ... }
      left  { place <label> = b1; ... }
      right { ... }
    }

Sorts are ``<name>``, ``pow(<name>)``, or tuples ``(<sort>, <sort>, ...)``.
Terms are identifiers, applications ``f(x)``, tuples ``(a, b)``, set
literals ``{a, b}``, and top-level ``elm(...)``.  Guard atoms are
``true``, ``t = t``, ``t in t``, or ``t sub t``.

Parsing normalizes entry order (sorted by name or id) everywhere except
interfaces, which keep declaration order; together with the canonical
printer this makes parse/print round-trips stable.  Every parse error
carries a span pointing into the offending token.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import ParseError
from .modules import InterfaceElement, Module, PLACE, TRANSITION
from .nets import Arc, Condition, Event, Marking, OccurrenceNet, Place, \
    SchematicNet, Transition
from .signature import PowSort, Signature, Sort, SortName, Structure, \
    TupleSort, make_structure
from .spans import SourceSpan
from .terms import App, Binding, Elm, Guard, GuardAtom, Ident, SetTerm, Term, \
    TupleTerm, render_term
from .values import Atom, Multiset, SetValue, TupleValue, Value

SECTION_KEYWORDS = ("left", "right", "places", "trans", "arcs")


# ---------------------------------------------------------------------------
# Documents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StructureEntry:
    symbol: str
    kind: str  # "value" | "table" | "pow"
    value: Value | None = None
    table: tuple[tuple[Value, Value], ...] = ()
    pow_of: str = ""
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class StructureDoc:
    name: str
    sig_name: str
    entries: tuple[StructureEntry, ...]
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SystemDoc:
    name: str
    signature: Signature
    structure: StructureDoc
    module: Module
    marking: Marking
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ModelDocument:
    kind: str  # signature | structure | module | system | run
    body: Signature | StructureDoc | Module | SystemDoc
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TWO_CHAR = ("->", "<=", ">=", "!=")
_ONE_CHAR = "{}()[],;:=<>"


@dataclass(frozen=True)
class _Token:
    type: str  # IDENT | STRING | INT | punctuation text | EOF
    text: str
    line: int
    col: int

    @property
    def end_col(self) -> int:
        return self.col + max(len(self.text), 1)

    def span(self, filename: str) -> SourceSpan:
        return SourceSpan(filename, self.line, self.col, self.line, self.end_col)


def _lex(source: str, filename: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, i = 1, 1, 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        if source[i:i + 2] in _TWO_CHAR:
            tokens.append(_Token(source[i:i + 2], source[i:i + 2], line, col))
            i += 2
            col += 2
            continue
        if ch in _ONE_CHAR:
            tokens.append(_Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        if ch == '"':
            start_col = col
            i += 1
            col += 1
            buf = []
            while i < n and source[i] != '"':
                if source[i] == "\n":
                    raise ParseError("unterminated string",
                                     SourceSpan(filename, line, start_col,
                                                line, col))
                if source[i] == "\\" and i + 1 < n:
                    i += 1
                    col += 1
                buf.append(source[i])
                i += 1
                col += 1
            if i == n:
                raise ParseError("unterminated string",
                                 SourceSpan(filename, line, start_col, line, col))
            i += 1
            col += 1
            tokens.append(_Token("STRING", "".join(buf), line, start_col))
            continue
        if ch.isalpha() or ch == "_":
            start = i
            start_col = col
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
                col += 1
            tokens.append(_Token("IDENT", source[start:i], line, start_col))
            continue
        if ch.isdigit():
            start = i
            start_col = col
            while i < n and source[i].isdigit():
                i += 1
                col += 1
            tokens.append(_Token("INT", source[start:i], line, start_col))
            continue
        raise ParseError(f"unexpected character {ch!r}",
                         SourceSpan(filename, line, col, line, col + 1))
    tokens.append(_Token("EOF", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _sort_symbol_names(sort: Sort):
    if isinstance(sort, SortName):
        yield sort.name
    elif isinstance(sort, PowSort):
        yield sort.base
    elif isinstance(sort, TupleSort):
        for c in sort.components:
            yield from _sort_symbol_names(c)


def _id_key(node_id: str) -> tuple[int, str]:
    return (len(node_id), node_id)


class _Parser:
    def __init__(self, source: str, filename: str):
        self.filename = filename
        self.tokens = _lex(source, filename)
        self.pos = 0

    # token plumbing -------------------------------------------------------

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.type != "EOF":
            self.pos += 1
        return tok

    def at(self, type_: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.type == type_ and (text is None or tok.text == text)

    def at_keyword(self, word: str) -> bool:
        return self.at("IDENT", word)

    def accept(self, type_: str, text: str | None = None) -> _Token | None:
        if self.at(type_, text):
            return self.next()
        return None

    def expect(self, type_: str, text: str | None = None,
               what: str | None = None) -> _Token:
        tok = self.peek()
        if not self.at(type_, text):
            wanted = what if what is not None else repr(text or type_)
            found = tok.text if tok.type != "EOF" else "end of input"
            raise self.error(f"expected {wanted}, found {found!r}")
        return self.next()

    def expect_keyword(self, word: str) -> _Token:
        return self.expect("IDENT", word, what=f"keyword {word!r}")

    def error(self, message: str, token: _Token | None = None) -> ParseError:
        tok = token or self.peek()
        return ParseError(message, tok.span(self.filename))

    def span_from(self, start: _Token) -> SourceSpan:
        end = self.tokens[max(self.pos - 1, 0)]
        return SourceSpan(self.filename, start.line, start.col,
                          end.line, end.end_col)

    # entry point ----------------------------------------------------------

    def document(self) -> ModelDocument:
        tok = self.peek()
        if tok.type == "EOF":
            raise self.error("expected document kind")
        if self.at_keyword("signature"):
            body: object = self.signature_doc()
            kind = "signature"
        elif self.at_keyword("structure"):
            body = self.structure_doc()
            kind = "structure"
        elif self.at_keyword("module"):
            body = self.module_doc()
            kind = "module"
        elif self.at_keyword("system"):
            body = self.system_doc()
            kind = "system"
        elif self.at_keyword("run"):
            body = self.run_doc()
            kind = "run"
        else:
            raise self.error("expected document kind (signature, structure, "
                             "module, system, or run)")
        self.expect("EOF", what="end of document")
        return ModelDocument(kind, body, body.span)  # type: ignore[union-attr]

    # signatures -----------------------------------------------------------

    def signature_doc(self) -> Signature:
        start = self.expect_keyword("signature")
        name = self.expect("IDENT", what="signature name").text
        self.expect("{")
        sets: list[str] = []
        subsets: list[tuple[str, str]] = []
        consts: list[tuple[str, Sort]] = []
        fns: list[tuple[str, tuple[Sort, ...], Sort]] = []
        spans: dict[str, _Token] = {}
        sort_starts: dict[str, _Token] = {}

        def declare(tok: _Token) -> str:
            if tok.text in spans:
                raise self.error(f"duplicate symbol name {tok.text!r}", tok)
            spans[tok.text] = tok
            return tok.text

        while not self.at("}"):
            if self.at_keyword("sets"):
                self.next()
                while True:
                    sets.append(declare(self.expect("IDENT", what="set symbol")))
                    if not self.accept(","):
                        break
                self.expect(";")
            elif self.at_keyword("subsets"):
                self.next()
                sym = declare(self.expect("IDENT", what="subset symbol"))
                self.expect_keyword("of")
                self.expect_keyword("pow")
                self.expect("(")
                base = self.expect("IDENT", what="base set symbol")
                self.expect(")")
                self.expect(";")
                subsets.append((sym, base.text))
            elif self.at_keyword("consts"):
                self.next()
                while True:
                    sym = declare(self.expect("IDENT", what="constant symbol"))
                    self.expect(":")
                    sort_starts[sym] = self.peek()
                    consts.append((sym, self.sort()))
                    if not self.accept(","):
                        break
                self.expect(";")
            elif self.at_keyword("fns"):
                self.next()
                while True:
                    sym = declare(self.expect("IDENT", what="function symbol"))
                    self.expect(":")
                    sort_starts[sym] = self.peek()
                    args = [self.sort()]
                    while self.accept(","):
                        if self.peek().type == "IDENT" and self.peek(1).type == ":":
                            self.pos -= 1  # this comma separates declarations
                            break
                        args.append(self.sort())
                    self.expect("->")
                    result = self.sort()
                    fns.append((sym, tuple(args), result))
                    if not self.accept(","):
                        break
                self.expect(";")
            else:
                raise self.error("expected sets, subsets, consts, or fns")
        self.expect("}")
        for sym, base in subsets:
            if base not in sets:
                raise self.error(f"subset base {base!r} is not a declared set "
                                 "symbol", spans[sym])
        declared = set(sets) | {n for n, _ in subsets}
        for sym, sort in [(n, s) for n, s in consts] + \
                [(n, s) for n, args, res in fns for s in (*args, res)]:
            self._check_sort_symbols(sort, declared, sort_starts.get(sym))
        return Signature(
            name,
            sets=tuple(sorted(sets)),
            subsets=tuple(sorted(subsets)),
            constants=tuple(sorted(consts)),
            functions=tuple(sorted(fns)),
            span=self.span_from(start),
        )

    def _check_sort_symbols(self, sort: Sort, declared: set[str],
                            at: _Token | None) -> None:
        for name in _sort_symbol_names(sort):
            if name not in declared:
                raise ParseError(
                    f"unknown sort symbol {name!r}",
                    at.span(self.filename) if at is not None else None)

    def sort(self) -> Sort:
        if self.at_keyword("pow"):
            self.next()
            self.expect("(")
            base = self.expect("IDENT", what="sort symbol").text
            self.expect(")")
            return PowSort(base)
        if self.accept("("):
            components = [self.sort()]
            while self.accept(","):
                components.append(self.sort())
            self.expect(")")
            if len(components) < 2:
                raise self.error("a tuple sort needs at least two components")
            return TupleSort(tuple(components))
        name = self.expect("IDENT", what="sort").text
        return SortName(name)

    # structures -----------------------------------------------------------

    def structure_doc(self) -> StructureDoc:
        start = self.expect_keyword("structure")
        name = self.expect("IDENT", what="structure name").text
        self.expect_keyword("of")
        sig_name = self.expect("IDENT", what="signature name").text
        self.expect("{")
        entries: list[StructureEntry] = []
        seen: set[str] = set()
        while not self.at("}"):
            sym_tok = self.expect("IDENT", what="symbol name")
            if sym_tok.text in seen:
                raise self.error(f"duplicate entry for {sym_tok.text!r}", sym_tok)
            seen.add(sym_tok.text)
            self.expect("=")
            entry = self._structure_rhs(sym_tok)
            self.expect(";")
            entries.append(entry)
        self.expect("}")
        entries.sort(key=lambda e: e.symbol)
        return StructureDoc(name, sig_name, tuple(entries),
                            span=self.span_from(start))

    def _structure_rhs(self, sym_tok: _Token) -> StructureEntry:
        span = sym_tok.span(self.filename)
        if self.at_keyword("pow") and self.peek(1).type == "(":
            self.next()
            self.expect("(")
            base = self.expect("IDENT", what="set symbol").text
            self.expect(")")
            return StructureEntry(sym_tok.text, "pow", pow_of=base, span=span)
        if self.at("{"):
            self.next()
            if self.accept("}"):
                return StructureEntry(sym_tok.text, "value", value=SetValue(),
                                      span=span)
            first = self.value()
            if self.at("->"):
                pairs = []
                self.expect("->")
                pairs.append((first, self.value()))
                while self.accept(","):
                    key = self.value()
                    self.expect("->")
                    pairs.append((key, self.value()))
                self.expect("}")
                pairs.sort(key=lambda kv: (kv[0].key(), kv[1].key()))
                return StructureEntry(sym_tok.text, "table", table=tuple(pairs),
                                      span=span)
            elements = [first]
            while self.accept(","):
                elements.append(self.value())
            self.expect("}")
            return StructureEntry(sym_tok.text, "value",
                                  value=SetValue(elements), span=span)
        return StructureEntry(sym_tok.text, "value", value=self.value(), span=span)

    def value(self) -> Value:
        term = self.term()
        return self._term_to_value(term)

    def _term_to_value(self, term: Term) -> Value:
        if isinstance(term, Ident):
            return Atom(term.name)
        if isinstance(term, TupleTerm):
            return TupleValue(self._term_to_value(t) for t in term.items)
        if isinstance(term, SetTerm):
            return SetValue(self._term_to_value(t) for t in term.elements)
        raise ParseError(f"expected a ground value, found {render_term(term)}",
                         getattr(term, "span", None))

    # terms ----------------------------------------------------------------

    def term(self) -> Term:
        tok = self.peek()
        if tok.type == "IDENT" and self.peek(1).type == "(":
            name = self.next()
            self.expect("(")
            args = [self.term()]
            while self.accept(","):
                args.append(self.term())
            self.expect(")")
            span = self.span_from(name)
            if name.text == "elm":
                if len(args) != 1:
                    raise ParseError("elm takes exactly one argument", span)
                return Elm(args[0], span)
            return App(name.text, tuple(args), span)
        if tok.type == "IDENT":
            self.next()
            return Ident(tok.text, tok.span(self.filename))
        if tok.type == "(":
            start = self.next()
            items = [self.term()]
            while self.accept(","):
                items.append(self.term())
            self.expect(")")
            if len(items) < 2:
                raise ParseError("a tuple needs at least two components",
                                 self.span_from(start))
            return TupleTerm(tuple(items), self.span_from(start))
        if tok.type == "{":
            start = self.next()
            elements = []
            if not self.at("}"):
                elements.append(self.term())
                while self.accept(","):
                    elements.append(self.term())
            self.expect("}")
            return SetTerm(tuple(elements), self.span_from(start))
        raise self.error("expected a term")

    def guard(self) -> Guard:
        start = self.peek()
        atoms: list[GuardAtom] = []
        while True:
            if self.at_keyword("true"):
                self.next()
            else:
                left = self.term()
                op_tok = self.peek()
                if self.accept("="):
                    op = "="
                elif self.accept("IDENT", "in"):
                    op = "in"
                elif self.accept("IDENT", "sub"):
                    op = "sub"
                else:
                    raise self.error("expected '=', 'in', or 'sub'", op_tok)
                right = self.term()
                atoms.append(GuardAtom(op, left, right,
                                       op_tok.span(self.filename)))
            if not self.accept("IDENT", "and"):
                break
        key = lambda a: (render_term(a.left), a.op, render_term(a.right))
        return Guard(tuple(sorted(atoms, key=key)),
                     span=start.span(self.filename))

    # modules --------------------------------------------------------------

    def module_doc(self) -> Module:
        start = self.expect_keyword("module")
        name = self.expect("IDENT", what="module name").text
        sig_name = ""
        if self.accept("IDENT", "of"):
            sig_name = self.expect("IDENT", what="signature name").text
        self.expect("{")
        left: list[InterfaceElement] | None = None
        right: list[InterfaceElement] | None = None
        places: list[Place] | None = None
        transitions: list[Transition] | None = None
        arcs: list[Arc] | None = None
        while not self.at("}"):
            section = self.expect("IDENT", what="a module section "
                                  "(left, right, places, trans, arcs)")
            if section.text not in SECTION_KEYWORDS:
                raise self.error(f"unknown module section {section.text!r}",
                                 section)
            if section.text == "left":
                if left is not None:
                    raise self.error("duplicate left section", section)
                left = self.interface_items()
            elif section.text == "right":
                if right is not None:
                    raise self.error("duplicate right section", section)
                right = self.interface_items()
            elif section.text == "places":
                if places is not None:
                    raise self.error("duplicate places section", section)
                places = self.place_items()
            elif section.text == "trans":
                if transitions is not None:
                    raise self.error("duplicate trans section", section)
                transitions = self.trans_items()
            else:
                if arcs is not None:
                    raise self.error("duplicate arcs section", section)
                arcs = self.arc_items()
        close = self.expect("}")
        module = Module(
            name, sig_name,
            SchematicNet(
                places=tuple(sorted(places or [], key=lambda p: p.name)),
                transitions=tuple(sorted(transitions or [], key=lambda t: t.name)),
                arcs=tuple(sorted(arcs or [], key=lambda a: (a.source, a.target))),
            ),
            left=tuple(left or []),
            right=tuple(right or []),
            span=self.span_from(start),
        )
        self._check_module(module, close)
        return module

    def interface_items(self) -> list[InterfaceElement]:
        self.expect("{")
        items: list[InterfaceElement] = []
        seen: set[tuple[str, str]] = set()
        seen_refs: set[str] = set()
        while not self.at("}"):
            kind_tok = self.expect("IDENT", what="'place' or 'trans'")
            if kind_tok.text == "place":
                kind = PLACE
            elif kind_tok.text == "trans":
                kind = TRANSITION
            else:
                raise self.error("expected 'place' or 'trans'", kind_tok)
            label_tok = self.peek()
            if self.at("STRING"):
                label = self.next().text
                if not label:
                    raise self.error("interface labels must be non-empty",
                                     label_tok)
            else:
                label = self.expect("IDENT", what="interface label").text
            if (kind, label) in seen:
                raise self.error(f"duplicate {kind} label {label!r} in interface",
                                 label_tok)
            seen.add((kind, label))
            self.expect("=")
            ref_tok = self.expect("IDENT", what="inner element name")
            if ref_tok.text in seen_refs:
                raise self.error(f"element {ref_tok.text!r} appears twice in "
                                 "this interface", ref_tok)
            seen_refs.add(ref_tok.text)
            self.expect(";")
            items.append(InterfaceElement(kind, label, ref_tok.text,
                                          label_tok.span(self.filename)))
        self.expect("}")
        return items

    def place_items(self) -> list[Place]:
        self.expect("{")
        items: list[Place] = []
        while not self.at("}"):
            name_tok = self.expect("IDENT", what="place name")
            sort = None
            init: tuple[Term, ...] = ()
            if self.accept(":"):
                sort = self.sort()
            if self.accept("IDENT", "init"):
                terms = [self.term()]
                while self.accept(","):
                    terms.append(self.term())
                init = tuple(sorted(terms, key=render_term))
            self.expect(";")
            items.append(Place(name_tok.text, sort, init,
                               span=name_tok.span(self.filename)))
        self.expect("}")
        return items

    def trans_items(self) -> list[Transition]:
        self.expect("{")
        items: list[Transition] = []
        while not self.at("}"):
            name_tok = self.expect("IDENT", what="transition name")
            guard = Guard()
            free: list[tuple[str, Sort]] = []
            if self.accept("IDENT", "guard"):
                guard = self.guard()
            if self.accept("IDENT", "free"):
                while True:
                    var = self.expect("IDENT", what="variable name").text
                    self.expect(":")
                    free.append((var, self.sort()))
                    if not self.accept(","):
                        break
            self.expect(";")
            items.append(Transition(name_tok.text, guard,
                                    tuple(sorted(free)),
                                    span=name_tok.span(self.filename)))
        self.expect("}")
        return items

    def arc_items(self) -> list[Arc]:
        self.expect("{")
        merged: dict[tuple[str, str], Arc] = {}
        while not self.at("}"):
            src_tok = self.expect("IDENT", what="arc source")
            self.expect("->")
            tgt = self.expect("IDENT", what="arc target").text
            self.expect(":")
            terms = [self.term()]
            while self.accept(","):
                terms.append(self.term())
            self.expect(";")
            key = (src_tok.text, tgt)
            inscription = tuple(terms)
            if key in merged:
                inscription = merged[key].inscription + inscription
            merged[key] = Arc(src_tok.text, tgt,
                              tuple(sorted(inscription, key=render_term)),
                              span=src_tok.span(self.filename))
        self.expect("}")
        return list(merged.values())

    def _check_module(self, module: Module, close: _Token) -> None:
        inner = module.inner
        assert isinstance(inner, SchematicNet)
        names: dict[str, _Token | None] = {}
        for p in inner.places:
            if p.name in names:
                raise ParseError(f"duplicate element name {p.name!r}", p.span)
            names[p.name] = None
        for t in inner.transitions:
            if t.name in names:
                raise ParseError(f"duplicate element name {t.name!r}", t.span)
            names[t.name] = None
        for a in inner.arcs:
            src_place, tgt_place = inner.has_place(a.source), inner.has_place(a.target)
            src_trans, tgt_trans = inner.has_transition(a.source), \
                inner.has_transition(a.target)
            if not ((src_place and tgt_trans) or (src_trans and tgt_place)):
                raise ParseError(
                    f"arc {a.source} -> {a.target} must connect a place and "
                    "a transition", a.span)
        for side_name, side in (("left", module.left), ("right", module.right)):
            for e in side:
                if e.ref not in names:
                    raise ParseError(
                        f"{side_name} interface exposes unknown element {e.ref!r}",
                        e.span)
                is_place = inner.has_place(e.ref)
                if (e.kind == PLACE) != is_place:
                    raise ParseError(
                        f"{side_name} interface exposes {e.ref!r} as {e.kind}, "
                        f"but it is a {'place' if is_place else 'transition'}",
                        e.span)

    # systems ----------------------------------------------------------------

    def system_doc(self) -> SystemDoc:
        start = self.expect_keyword("system")
        name = self.expect("IDENT", what="system name").text
        self.expect("{")
        signature = self.signature_doc()
        structure = self.structure_doc()
        module = self.module_doc()
        self.expect_keyword("marking")
        self.expect("{")
        per_place: dict[str, list[Value]] = {}
        while not self.at("}"):
            place_tok = self.expect("IDENT", what="place name")
            if place_tok.text in per_place:
                raise self.error(f"duplicate marking entry for {place_tok.text!r}",
                                 place_tok)
            self.expect(":")
            tokens = [self.value()]
            while self.accept(","):
                tokens.append(self.value())
            self.expect(";")
            per_place[place_tok.text] = tokens
        self.expect("}")
        self.expect("}")
        return SystemDoc(name, signature, structure, module,
                         Marking({p: Multiset(vs) for p, vs in per_place.items()}),
                         span=self.span_from(start))

    # runs -------------------------------------------------------------------

    def run_doc(self) -> Module:
        start = self.expect_keyword("run")
        name = self.expect("IDENT", what="run name").text
        of_name = ""
        if self.accept("IDENT", "of"):
            of_name = self.expect("IDENT", what="system name").text
        self.expect("{")
        conditions: list[Condition] | None = None
        events: list[Event] | None = None
        flow: list[tuple[str, str]] | None = None
        left: list[InterfaceElement] | None = None
        right: list[InterfaceElement] | None = None
        while not self.at("}"):
            section = self.expect("IDENT", what="a run section (conditions, "
                                  "events, flow, left, right)")
            if section.text == "conditions":
                if conditions is not None:
                    raise self.error("duplicate conditions section", section)
                conditions = self.condition_items()
            elif section.text == "events":
                if events is not None:
                    raise self.error("duplicate events section", section)
                events = self.event_items()
            elif section.text == "flow":
                if flow is not None:
                    raise self.error("duplicate flow section", section)
                flow = self.flow_items()
            elif section.text == "left":
                if left is not None:
                    raise self.error("duplicate left section", section)
                left = self.interface_items()
            elif section.text == "right":
                if right is not None:
                    raise self.error("duplicate right section", section)
                right = self.interface_items()
            else:
                raise self.error(f"unknown run section {section.text!r}", section)
        self.expect("}")
        inner = OccurrenceNet(
            conditions=tuple(sorted(conditions or [], key=lambda c: _id_key(c.id))),
            events=tuple(sorted(events or [], key=lambda e: _id_key(e.id))),
            flow=tuple(sorted(set(flow or []),
                              key=lambda f: (_id_key(f[0]), _id_key(f[1])))),
        )
        run = Module(name, of_name, inner, tuple(left or []), tuple(right or []),
                     span=self.span_from(start))
        self._check_run(run)
        return run

    def condition_items(self) -> list[Condition]:
        self.expect("{")
        items: list[Condition] = []
        seen: set[str] = set()
        while not self.at("}"):
            id_tok = self.expect("IDENT", what="condition id")
            if id_tok.text in seen:
                raise self.error(f"duplicate condition id {id_tok.text!r}", id_tok)
            seen.add(id_tok.text)
            self.expect("=")
            place = self.expect("IDENT", what="place name").text
            value = self.value()
            self.expect(";")
            items.append(Condition(id_tok.text, place, value,
                                   span=id_tok.span(self.filename)))
        self.expect("}")
        return items

    def event_items(self) -> list[Event]:
        self.expect("{")
        items: list[Event] = []
        seen: set[str] = set()
        while not self.at("}"):
            id_tok = self.expect("IDENT", what="event id")
            if id_tok.text in seen:
                raise self.error(f"duplicate event id {id_tok.text!r}", id_tok)
            seen.add(id_tok.text)
            self.expect("=")
            transition = self.expect("IDENT", what="transition name").text
            self.expect("[")
            binding = self.binding_pairs(closing="]")
            self.expect("]")
            self.expect(";")
            items.append(Event(id_tok.text, transition, binding,
                               span=id_tok.span(self.filename)))
        self.expect("}")
        return items

    def binding_pairs(self, closing: str) -> Binding:
        pairs: dict[str, Value] = {}
        while not self.at(closing):
            name_tok = self.expect("IDENT", what="variable name")
            if name_tok.text in pairs:
                raise self.error(f"duplicate binding for {name_tok.text!r}",
                                 name_tok)
            self.expect("=")
            pairs[name_tok.text] = self.value()
            self.accept(",")
        return Binding(pairs)

    def flow_items(self) -> list[tuple[str, str]]:
        self.expect("{")
        items: list[tuple[str, str]] = []
        while not self.at("}"):
            src = self.expect("IDENT", what="flow source").text
            self.expect("->")
            tgt = self.expect("IDENT", what="flow target").text
            self.expect(";")
            items.append((src, tgt))
        self.expect("}")
        return items

    def _check_run(self, run: Module) -> None:
        inner = run.inner
        assert isinstance(inner, OccurrenceNet)
        ids = {c.id for c in inner.conditions} | {e.id for e in inner.events}
        if len(ids) != len(inner.conditions) + len(inner.events):
            raise ParseError("condition and event ids overlap", run.span)
        for src, tgt in inner.flow:
            for node in (src, tgt):
                if node not in ids:
                    raise ParseError(f"flow mentions unknown node {node!r}",
                                     run.span)
        for side_name, side in (("left", run.left), ("right", run.right)):
            for e in side:
                if e.ref not in ids:
                    raise ParseError(
                        f"{side_name} interface exposes unknown node {e.ref!r}",
                        e.span)


def parse(text: str, filename: str = "<input>") -> ModelDocument:
    return _Parser(text, filename).document()


# ---------------------------------------------------------------------------
# Binding documents to semantic objects
# ---------------------------------------------------------------------------

def bind_structure(doc: StructureDoc, sig: Signature,
                   powerset_cap: int | None = None) -> Structure:
    """Turn a parsed structure document into a Structure over ``sig``.

    Entry kinds are classified by the symbol's declaration: carriers for
    set and subset symbols (``pow(S)`` expands to the full powerset),
    tables for function symbols, plain values for constants.
    """
    if doc.sig_name != sig.name:
        raise ParseError(
            f"structure {doc.name!r} interprets {doc.sig_name!r}, "
            f"not {sig.name!r}", doc.span)
    carriers: dict[str, list[Value]] = {}
    functions: dict[str, dict[tuple[Value, ...], Value]] = {}
    constants: dict[str, Value] = {}
    for entry in doc.entries:
        kind = sig.symbol_kind(entry.symbol)
        if kind is None:
            raise ParseError(f"unknown symbol {entry.symbol!r} in structure",
                             entry.span)
        if kind in ("set", "subset"):
            if entry.kind == "pow":
                base_symbol = entry.pow_of
                declared_base = sig.subset_base(entry.symbol)
                if declared_base != base_symbol:
                    raise ParseError(
                        f"{entry.symbol!r} is declared as a subset of "
                        f"pow({declared_base}), not pow({base_symbol})", entry.span)
                base = carriers.get(base_symbol)
                if base is None:
                    raise ParseError(
                        f"carrier of {base_symbol!r} must be given before "
                        f"{entry.symbol!r} = pow({base_symbol})", entry.span)
                carriers[entry.symbol] = [
                    SetValue(combo)
                    for r in range(len(base) + 1)
                    for combo in itertools.combinations(base, r)]
            elif entry.kind == "value" and isinstance(entry.value, SetValue):
                carriers[entry.symbol] = list(entry.value.elements)
            else:
                raise ParseError(
                    f"carrier of {entry.symbol!r} must be a set", entry.span)
        elif kind == "function":
            if entry.kind != "table":
                if entry.kind == "value" and entry.value == SetValue():
                    functions[entry.symbol] = {}
                    continue
                raise ParseError(
                    f"{entry.symbol!r} is a function symbol and needs a "
                    "table {a -> x, ...}", entry.span)
            fsig = sig.function_signature(entry.symbol)
            assert fsig is not None
            arg_sorts, _ = fsig
            table: dict[tuple[Value, ...], Value] = {}
            for key, result in entry.table:
                if len(arg_sorts) == 1:
                    args = (key,)
                elif isinstance(key, TupleValue) and len(key.items) == len(arg_sorts):
                    args = key.items
                else:
                    raise ParseError(
                        f"table key for {entry.symbol!r} must be a "
                        f"{len(arg_sorts)}-tuple", entry.span)
                if args in table:
                    raise ParseError(
                        f"duplicate table entry for {entry.symbol!r}", entry.span)
                table[args] = result
            functions[entry.symbol] = table
        else:  # constant
            if entry.kind != "value" or entry.value is None:
                raise ParseError(
                    f"{entry.symbol!r} is a constant and needs a value", entry.span)
            constants[entry.symbol] = entry.value
    kwargs = {} if powerset_cap is None else {"powerset_cap": powerset_cap}
    return make_structure(doc.name, sig, carriers, functions, constants, **kwargs)


def structure_to_doc(s: Structure) -> StructureDoc:
    """Inverse of :func:`bind_structure`, used when printing systems."""
    entries: list[StructureEntry] = []
    for sym in s.carriers:
        entries.append(StructureEntry(sym, "value",
                                      value=SetValue(s.carriers[sym])))
    for sym, table in s.functions.items():
        pairs = []
        for args, result in table.items():
            key: Value = args[0] if len(args) == 1 else TupleValue(args)
            pairs.append((key, result))
        pairs.sort(key=lambda kv: (kv[0].key(), kv[1].key()))
        entries.append(StructureEntry(sym, "table", table=tuple(pairs)))
    for sym, value in s.constants.items():
        entries.append(StructureEntry(sym, "value", value=value))
    entries.sort(key=lambda e: e.symbol)
    return StructureDoc(s.name, s.signature.name, tuple(entries))


# ---------------------------------------------------------------------------
# Scripts and predicates
# ---------------------------------------------------------------------------

def parse_script(text: str, filename: str = "<script>") -> list[tuple[str, Binding]]:
    """A simulation script: one ``transition [name=value ...]`` per line."""
    steps: list[tuple[str, Binding]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        p = _Parser(line, filename)
        p.tokens = [_Token(t.type, t.text, lineno, t.col) for t in p.tokens]
        name = p.expect("IDENT", what="transition name").text
        binding = p.binding_pairs(closing="EOF")
        steps.append((name, binding))
    return steps


def parse_predicate(text: str, filename: str = "<predicate>"):
    """Marking predicates for reachability reports.

    Grammar: ``contains(place, value)``, ``count(place) <cmp> n``,
    ``tokens(place, value) <cmp> n`` combined with ``and``, ``or``,
    ``not``, and parentheses.  Returns a ``Marking -> bool`` callable.
    """
    p = _Parser(text, filename)
    pred = _parse_pred_or(p)
    p.expect("EOF", what="end of predicate")
    return pred


_CMP = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _parse_pred_or(p: _Parser):
    left = _parse_pred_and(p)
    while p.accept("IDENT", "or"):
        right = _parse_pred_and(p)
        left = (lambda f, g: lambda m: f(m) or g(m))(left, right)
    return left


def _parse_pred_and(p: _Parser):
    left = _parse_pred_unary(p)
    while p.accept("IDENT", "and"):
        right = _parse_pred_unary(p)
        left = (lambda f, g: lambda m: f(m) and g(m))(left, right)
    return left


def _parse_pred_unary(p: _Parser):
    if p.accept("IDENT", "not"):
        inner = _parse_pred_unary(p)
        return lambda m: not inner(m)
    if p.accept("("):
        inner = _parse_pred_or(p)
        p.expect(")")
        return inner
    head = p.expect("IDENT", what="contains, count, or tokens")
    if head.text == "contains":
        p.expect("(")
        place = p.expect("IDENT", what="place name").text
        p.expect(",")
        value = p.value()
        p.expect(")")
        return lambda m: m.get(place).count(value) > 0
    if head.text == "count":
        p.expect("(")
        place = p.expect("IDENT", what="place name").text
        p.expect(")")
        op = _parse_cmp(p)
        n = int(p.expect("INT", what="a number").text)
        return lambda m: op(m.get(place).total(), n)
    if head.text == "tokens":
        p.expect("(")
        place = p.expect("IDENT", what="place name").text
        p.expect(",")
        value = p.value()
        p.expect(")")
        op = _parse_cmp(p)
        n = int(p.expect("INT", what="a number").text)
        return lambda m: op(m.get(place).count(value), n)
    raise p.error("expected contains, count, or tokens", head)


def _parse_cmp(p: _Parser):
    for text in ("<=", ">=", "!=", "=", "<", ">"):
        if p.accept(text):
            return _CMP[text]
    raise p.error("expected a comparison operator")

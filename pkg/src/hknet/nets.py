"""Schematic high-level nets, markings, occurrence nets, and firing.

A schematic net's places are predicates: under a structure, the tokens
on a place are the values the predicate currently holds of.  Arcs carry
multisets of terms (each possibly ``elm``-wrapped at top level) and
transitions carry a guard plus declarations of free-choice variables.

Enabling and firing are pure functions of (net, marking, structure).
Nets must be *resolved* against a signature first: resolution classifies
identifier leaves, infers variable sorts from input-arc terms and
function signatures, and records the full variable list per transition.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .errors import EvalError, FiringError, SortError, Violation
from .signature import (PowSort, Signature, Sort, SortName, Structure,
                        TupleSort, carrier_of, render_sort, sorts_compatible,
                        value_in_sort)
from .spans import SourceSpan
from .terms import (App, Binding, ConstRef, Elm, Guard, GuardAtom, Ident,
                    SetTerm, SymbolRef, Term, TupleTerm, Var, eval_guard,
                    evaluate, guard_variables, inscription_tokens, render_term,
                    term_variables)
from .values import Multiset, SetValue, Value, render_value


# ---------------------------------------------------------------------------
# Schematic nets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Place:
    name: str
    sort: Sort | None = None
    init: tuple[Term, ...] = ()
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    @property
    def display(self) -> str:
        return self.name.replace("_", " ")


@dataclass(frozen=True)
class Transition:
    name: str
    guard: Guard = Guard()
    free: tuple[tuple[str, Sort], ...] = ()
    # full (name, sort) list, filled in by resolve_net; derived, not compared
    variables: tuple[tuple[str, Sort], ...] | None = field(
        default=None, compare=False, repr=False)
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    @property
    def display(self) -> str:
        return self.name.replace("_", " ")


@dataclass(frozen=True)
class Arc:
    source: str
    target: str
    inscription: tuple[Term, ...]
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SchematicNet:
    places: tuple[Place, ...] = ()
    transitions: tuple[Transition, ...] = ()
    arcs: tuple[Arc, ...] = ()

    def place(self, name: str) -> Place:
        for p in self.places:
            if p.name == name:
                return p
        raise KeyError(f"no place {name!r}")

    def transition(self, name: str) -> Transition:
        for t in self.transitions:
            if t.name == name:
                return t
        raise KeyError(f"no transition {name!r}")

    def has_place(self, name: str) -> bool:
        return any(p.name == name for p in self.places)

    def has_transition(self, name: str) -> bool:
        return any(t.name == name for t in self.transitions)

    def arcs_into(self, transition: str) -> tuple[Arc, ...]:
        return tuple(a for a in self.arcs if a.target == transition)

    def arcs_out_of(self, transition: str) -> tuple[Arc, ...]:
        return tuple(a for a in self.arcs if a.source == transition)

    def is_empty(self) -> bool:
        return not (self.places or self.transitions or self.arcs)


# ---------------------------------------------------------------------------
# Markings
# ---------------------------------------------------------------------------

class Marking:
    """An immutable per-place multiset of values; hashable, canonical."""

    __slots__ = ("_entries",)

    def __init__(self, per_place: Mapping[str, Multiset | Iterable[Value]] = ()):
        entries = []
        items = per_place.items() if isinstance(per_place, Mapping) else per_place
        for place, tokens in items:
            ms = tokens if isinstance(tokens, Multiset) else Multiset(tokens)
            if ms:
                entries.append((place, ms))
        self._entries = tuple(sorted(entries))

    def get(self, place: str) -> Multiset:
        for name, ms in self._entries:
            if name == place:
                return ms
        return Multiset()

    def items(self) -> tuple[tuple[str, Multiset], ...]:
        return self._entries

    def places(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self._entries)

    def total(self) -> int:
        return sum(ms.total() for _, ms in self._entries)

    def updated(self, remove: Mapping[str, Multiset],
                add: Mapping[str, Multiset]) -> "Marking":
        per_place = {name: ms for name, ms in self._entries}
        for place, ms in remove.items():
            per_place[place] = per_place.get(place, Multiset()) - ms
        for place, ms in add.items():
            per_place[place] = per_place.get(place, Multiset()) + ms
        return Marking(per_place)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Marking) and other._entries == self._entries

    def __hash__(self) -> int:
        return hash(self._entries)

    def __repr__(self) -> str:
        inner = "; ".join(
            f"{p}: " + ", ".join(render_value(v) for v in ms)
            for p, ms in self._entries)
        return f"Marking({inner})"


def marking_violations(net: SchematicNet, m: Marking, s: Structure) -> list[Violation]:
    """Tokens on sorted places must lie in the carrier of the place sort."""
    out: list[Violation] = []
    for place_name, ms in m.items():
        if not net.has_place(place_name):
            out.append(Violation("unknown-place", f"marking mentions {place_name!r}"))
            continue
        place = net.place(place_name)
        if place.sort is None:
            continue
        for v in ms.distinct():
            if not value_in_sort(v, place.sort, s):
                out.append(Violation(
                    "token-sort",
                    f"token {render_value(v)} on {place_name!r} is outside "
                    f"sort {render_sort(place.sort)}"))
    return out


# ---------------------------------------------------------------------------
# Resolution: identifier classification and variable sort inference
# ---------------------------------------------------------------------------

def resolve_net(net: SchematicNet, sig: Signature) -> tuple[SchematicNet, list[Violation]]:
    """Classify identifiers, infer variable sorts, and well-form the net.

    Returns the resolved net together with all violations found.  The
    returned net is usable only if the violation list is empty.
    """
    violations: list[Violation] = []

    for p in net.places:
        if p.sort is not None:
            _check_sort_declared(p.sort, sig, f"place {p.name!r}", p.span, violations)

    for a in net.arcs:
        src_place = net.has_place(a.source)
        tgt_place = net.has_place(a.target)
        src_trans = net.has_transition(a.source)
        tgt_trans = net.has_transition(a.target)
        if not ((src_place and tgt_trans) or (src_trans and tgt_place)):
            violations.append(Violation(
                "arc-endpoints",
                f"arc {a.source} -> {a.target} must connect a place and a "
                "transition", a.span))

    new_places = []
    for p in net.places:
        init = tuple(_resolve_term(t, sig, top_level=True, violations=violations)
                     for t in p.init)
        for t in init:
            for name in sorted(term_variables(t)):
                violations.append(Violation(
                    "open-init",
                    f"initial inscription of {p.name!r} contains variable {name!r}",
                    p.span))
        new_places.append(replace(p, init=init))

    new_transitions = []
    new_arcs: dict[tuple[str, str], Arc] = {}
    for t in net.transitions:
        env: dict[str, Sort | None] = {}
        for name, sort in t.free:
            _check_sort_declared(sort, sig, f"free variable {name!r}", t.span, violations)
            env[name] = sort

        ins = [a for a in net.arcs if a.target == t.name and net.has_place(a.source)]
        outs = [a for a in net.arcs if a.source == t.name and net.has_place(a.target)]

        resolved_arcs: dict[tuple[str, str], tuple[Term, ...]] = {}
        for arc, place_name in [(a, a.source) for a in ins] + [(a, a.target) for a in outs]:
            place = net.place(place_name)
            terms = []
            for raw in arc.inscription:
                term = _resolve_term(raw, sig, top_level=True, violations=violations)
                _infer(term, place.sort, env, sig, violations, top_level=True)
                terms.append(term)
            key = (arc.source, arc.target)
            resolved_arcs[key] = resolved_arcs.get(key, ()) + tuple(terms)

        guard_atoms = []
        for atom in t.guard.atoms:
            left = _resolve_term(atom.left, sig, top_level=False, violations=violations)
            right = _resolve_term(atom.right, sig, top_level=False, violations=violations)
            guard_atoms.append(GuardAtom(atom.op, left, right, atom.span))
        guard = Guard(tuple(guard_atoms), t.guard.span)

        input_vars: set[str] = set()
        for a in ins:
            key = (a.source, a.target)
            for term in resolved_arcs.get(key, ()):
                input_vars |= term_variables(term)
        used_later: set[str] = set(guard_variables(guard))
        for a in outs:
            key = (a.source, a.target)
            for term in resolved_arcs.get(key, ()):
                used_later |= term_variables(term)
        free_names = {name for name, _ in t.free}
        for name in sorted(used_later - input_vars - free_names):
            violations.append(Violation(
                "free-variable",
                f"variable {name!r} of transition {t.name!r} occurs only in "
                "outputs or the guard; declare it free or bind it on an input arc",
                t.span))
        for name in sorted((input_vars | used_later) - set(env)):
            env.setdefault(name, None)

        unresolved = [n for n, s_ in sorted(env.items()) if s_ is None]
        for name in unresolved:
            violations.append(Violation(
                "unsorted-variable",
                f"cannot infer a sort for variable {name!r} of transition {t.name!r}",
                t.span))

        variables = tuple((n, s_) for n, s_ in sorted(env.items()) if s_ is not None)
        new_transitions.append(replace(t, guard=guard, variables=variables))

        for (src, tgt), terms in resolved_arcs.items():
            old = next(a for a in net.arcs if a.source == src and a.target == tgt)
            key_fn = render_term
            merged = tuple(sorted(terms, key=key_fn))
            new_arcs[(src, tgt)] = replace(old, inscription=merged)

    # keep arcs that failed endpoint checks so printing stays faithful
    for a in net.arcs:
        new_arcs.setdefault((a.source, a.target), a)

    resolved = SchematicNet(
        places=tuple(sorted(new_places, key=lambda p: p.name)),
        transitions=tuple(sorted(new_transitions, key=lambda t: t.name)),
        arcs=tuple(sorted(new_arcs.values(), key=lambda a: (a.source, a.target))),
    )
    return resolved, violations


def _check_sort_declared(sort: Sort, sig: Signature, where: str,
                         span: SourceSpan | None, violations: list[Violation]) -> None:
    if isinstance(sort, SortName):
        if not sig.declares_carrier(sort.name):
            violations.append(Violation(
                "undeclared-sort", f"{where}: unknown sort symbol {sort.name!r}", span))
    elif isinstance(sort, PowSort):
        if not sig.declares_carrier(sort.base):
            violations.append(Violation(
                "undeclared-sort", f"{where}: unknown sort symbol {sort.base!r}", span))
    elif isinstance(sort, TupleSort):
        for c in sort.components:
            _check_sort_declared(c, sig, where, span, violations)


def _resolve_term(t: Term, sig: Signature, top_level: bool,
                  violations: list[Violation]) -> Term:
    if isinstance(t, Ident):
        kind = sig.symbol_kind(t.name)
        if kind in ("set", "subset"):
            return SymbolRef(t.name, t.span)
        if kind == "constant":
            return ConstRef(t.name, t.span)
        if kind == "function":
            violations.append(Violation(
                "bare-function",
                f"function symbol {t.name!r} used without arguments", t.span))
            return t
        return Var(t.name, sort=None, span=t.span)  # type: ignore[arg-type]
    if isinstance(t, (Var, ConstRef, SymbolRef)):
        return t
    if isinstance(t, App):
        if sig.function_signature(t.function) is None:
            violations.append(Violation(
                "unknown-function", f"unknown function symbol {t.function!r}", t.span))
        args = tuple(_resolve_term(a, sig, False, violations) for a in t.args)
        return App(t.function, args, t.span)
    if isinstance(t, TupleTerm):
        return TupleTerm(tuple(_resolve_term(a, sig, False, violations)
                               for a in t.items), t.span)
    if isinstance(t, SetTerm):
        return SetTerm(tuple(_resolve_term(a, sig, False, violations)
                             for a in t.elements), t.span)
    if isinstance(t, Elm):
        if not top_level:
            violations.append(Violation(
                "nested-elm", "elm(...) is only permitted at the top level of an "
                "arc or initial-marking inscription", t.span))
        return Elm(_resolve_term(t.inner, sig, False, violations), t.span)
    raise TypeError(f"not a term: {t!r}")


def _infer(term: Term, expected: Sort | None, env: dict[str, Sort | None],
           sig: Signature, violations: list[Violation], top_level: bool = False) -> None:
    """Propagate expected sorts into variables; record conflicts."""
    if isinstance(term, Var):
        known = env.get(term.name)
        if known is None:
            if expected is not None:
                env[term.name] = expected
            else:
                env.setdefault(term.name, None)
        elif expected is not None and not sorts_compatible(known, expected, sig):
            violations.append(Violation(
                "sort-conflict",
                f"variable {term.name!r} used both as {render_sort(known)} "
                f"and as {render_sort(expected)}", term.span))
        return
    if isinstance(term, ConstRef):
        declared = sig.constant_sort(term.name)
        if declared is not None and expected is not None \
                and not sorts_compatible(declared, expected, sig):
            violations.append(Violation(
                "sort-conflict",
                f"constant {term.name!r} of sort {render_sort(declared)} used "
                f"where {render_sort(expected)} is expected", term.span))
        return
    if isinstance(term, SymbolRef):
        actual = PowSort(term.name)
        if expected is not None and not sorts_compatible(actual, expected, sig):
            violations.append(Violation(
                "sort-conflict",
                f"symbol {term.name!r} denotes a set of sort {render_sort(actual)}, "
                f"used where {render_sort(expected)} is expected", term.span))
        return
    if isinstance(term, App):
        fsig = sig.function_signature(term.function)
        if fsig is None:
            return
        arg_sorts, result = fsig
        if expected is not None and not sorts_compatible(result, expected, sig):
            violations.append(Violation(
                "sort-conflict",
                f"{term.function}(...) yields {render_sort(result)}, used where "
                f"{render_sort(expected)} is expected", term.span))
        if len(term.args) != len(arg_sorts):
            violations.append(Violation(
                "arity",
                f"{term.function} expects {len(arg_sorts)} arguments, "
                f"got {len(term.args)}", term.span))
            return
        for arg, arg_sort in zip(term.args, arg_sorts):
            _infer(arg, arg_sort, env, sig, violations)
        return
    if isinstance(term, TupleTerm):
        if isinstance(expected, TupleSort) and len(expected.components) == len(term.items):
            for item, comp in zip(term.items, expected.components):
                _infer(item, comp, env, sig, violations)
        elif expected is not None and not isinstance(expected, TupleSort):
            violations.append(Violation(
                "sort-conflict",
                f"tuple term used where {render_sort(expected)} is expected",
                term.span))
        else:
            for item in term.items:
                _infer(item, None, env, sig, violations)
        return
    if isinstance(term, SetTerm):
        element_sort: Sort | None = None
        if isinstance(expected, PowSort):
            element_sort = SortName(expected.base)
        elif isinstance(expected, SortName):
            base = sig.subset_base(expected.name)
            if base is not None:
                element_sort = SortName(base)
        for e in term.elements:
            _infer(e, element_sort, env, sig, violations)
        return
    if isinstance(term, Elm):
        # elm expands a set of S into tokens of S
        inner_expected: Sort | None = None
        if isinstance(expected, SortName):
            inner_expected = PowSort(expected.name)
        _infer(term.inner, inner_expected, env, sig, violations)
        return
    if isinstance(term, Ident):
        return
    raise TypeError(f"not a term: {term!r}")


def check_net(net: SchematicNet, sig: Signature) -> list[Violation]:
    _, violations = resolve_net(net, sig)
    return violations


# ---------------------------------------------------------------------------
# Enabling and firing
# ---------------------------------------------------------------------------

def _require_resolved(net: SchematicNet, t: Transition) -> Transition:
    if t.variables is None:
        raise SortError(
            f"transition {t.name!r} is unresolved; call resolve_net first")
    return t


def enabled_bindings(net: SchematicNet, m: Marking,
                     transition: Transition | str, s: Structure) -> list[Binding]:
    """All total bindings of the transition's variables such that the
    guard holds and every evaluated input inscription is contained in
    the marking.

    Enumerates variable domains in lexicographic name order with early
    pruning: as soon as all variables of an input-arc term or guard atom
    are assigned, the partial requirement is checked.  A candidate that
    makes a function application fall outside its table is simply not
    enabled.
    """
    t = net.transition(transition) if isinstance(transition, str) else transition
    t = _require_resolved(net, t)
    variables = t.variables or ()
    names = [n for n, _ in variables]
    domains = [carrier_of(sort, s) for _, sort in variables]
    index = {n: i for i, n in enumerate(names)}

    def ready_at(vars_used: set[str]) -> int:
        return max((index[v] for v in vars_used), default=-1)

    term_checks: dict[int, list[tuple[str, Term]]] = {}
    for arc in net.arcs_into(t.name):
        for term in arc.inscription:
            term_checks.setdefault(
                ready_at(term_variables(term)), []).append((arc.source, term))
    atom_checks: dict[int, list[Guard]] = {}
    for atom in t.guard.atoms:
        used = term_variables(atom.left) | term_variables(atom.right)
        atom_checks.setdefault(ready_at(used), []).append(Guard((atom,)))

    available = {place: dict(m.get(place).pairs()) for place, _ in m.items()}
    results: list[Binding] = []

    def feasible(level: int, partial: dict[str, Value],
                 taken: dict[str, dict[Value, int]]) -> bool:
        # a plain dict stands in for a Binding here: evaluation only
        # needs .get, and building a sorted Binding per probe is costly
        try:
            for single in atom_checks.get(level, ()):
                if not eval_guard(single, s, partial):
                    return False
            for place, term in term_checks.get(level, ()):
                if isinstance(term, Elm):
                    value = evaluate(term.inner, s, partial)
                    if not isinstance(value, SetValue):
                        raise EvalError("elm expects a set value")
                    needed: tuple[Value, ...] = value.elements
                else:
                    needed = (evaluate(term, s, partial),)
                have = available.get(place, {})
                bucket = taken.setdefault(place, {})
                for v in needed:
                    bucket[v] = bucket.get(v, 0) + 1
                    if bucket[v] > have.get(v, 0):
                        return False
        except EvalError:
            return False
        return True

    def descend(level: int, partial: dict[str, Value],
                taken: dict[str, dict[Value, int]]) -> None:
        if level == len(names):
            results.append(Binding(partial))
            return
        name = names[level]
        for value in domains[level]:
            partial[name] = value
            snapshot = {p: dict(c) for p, c in taken.items()}
            if feasible(level, partial, taken):
                descend(level + 1, partial, taken)
            taken.clear()
            taken.update(snapshot)
        partial.pop(name, None)

    root_taken: dict[str, dict[Value, int]] = {}
    if feasible(-1, {}, root_taken):
        descend(0, {}, root_taken)
    return results


def fire(net: SchematicNet, m: Marking, transition: Transition | str,
         b: Binding, s: Structure) -> Marking:
    """Fire one transition occurrence; pure, raises if not enabled."""
    t = net.transition(transition) if isinstance(transition, str) else transition
    t = _require_resolved(net, t)
    for name, _ in t.variables or ():
        if name not in b:
            raise FiringError(
                f"binding does not assign variable {name!r} of {t.name!r}")
    if not eval_guard(t.guard, s, b):
        raise FiringError(f"guard of {t.name!r} is false under {b!r}")
    consumed: dict[str, Multiset] = {}
    for arc in net.arcs_into(t.name):
        tokens = inscription_tokens(arc.inscription, s, b)
        consumed[arc.source] = consumed.get(arc.source, Multiset()) + tokens
    for place, needed in consumed.items():
        if not needed <= m.get(place):
            raise FiringError(
                f"{t.name!r} is not enabled: {place!r} lacks required tokens")
    produced: dict[str, Multiset] = {}
    for arc in net.arcs_out_of(t.name):
        tokens = inscription_tokens(arc.inscription, s, b)
        produced[arc.target] = produced.get(arc.target, Multiset()) + tokens
    for place_name, tokens in produced.items():
        place = net.place(place_name)
        if place.sort is None:
            continue
        for v in tokens.distinct():
            if not value_in_sort(v, place.sort, s):
                raise FiringError(
                    f"{t.name!r} would put {render_value(v)} on {place_name!r}, "
                    f"outside sort {render_sort(place.sort)}")
    return m.updated(consumed, produced)


def successors(net: SchematicNet, m: Marking,
               s: Structure) -> list[tuple[str, Binding, Marking]]:
    """All enabled (transition, binding) pairs with their successor
    markings, in deterministic order."""
    out = []
    for t in sorted(net.transitions, key=lambda t: t.name):
        for b in enabled_bindings(net, m, t, s):
            out.append((t.name, b, fire(net, m, t, b, s)))
    return out


# ---------------------------------------------------------------------------
# Occurrence nets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Condition:
    id: str
    place: str
    value: Value
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Event:
    id: str
    transition: str
    binding: Binding
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class OccurrenceNet:
    """An acyclic condition/event net with unbranched conditions."""

    conditions: tuple[Condition, ...] = ()
    events: tuple[Event, ...] = ()
    flow: tuple[tuple[str, str], ...] = ()

    def condition(self, node_id: str) -> Condition:
        for c in self.conditions:
            if c.id == node_id:
                return c
        raise KeyError(f"no condition {node_id!r}")

    def event(self, node_id: str) -> Event:
        for e in self.events:
            if e.id == node_id:
                return e
        raise KeyError(f"no event {node_id!r}")

    def has_node(self, node_id: str) -> bool:
        return any(c.id == node_id for c in self.conditions) or \
            any(e.id == node_id for e in self.events)

    def pre(self, node_id: str) -> tuple[str, ...]:
        return tuple(src for src, tgt in self.flow if tgt == node_id)

    def post(self, node_id: str) -> tuple[str, ...]:
        return tuple(tgt for src, tgt in self.flow if src == node_id)

    def is_empty(self) -> bool:
        return not (self.conditions or self.events or self.flow)

    def topo_levels(self) -> list[str] | None:
        """All node ids in one topological order, or None if cyclic."""
        succ: dict[str, list[str]] = {}
        indeg: dict[str, int] = {}
        ids = [c.id for c in self.conditions] + [e.id for e in self.events]
        for i in ids:
            indeg[i] = 0
        for src, tgt in self.flow:
            succ.setdefault(src, []).append(tgt)
            if tgt in indeg:
                indeg[tgt] += 1
        frontier = sorted(i for i in ids if indeg[i] == 0)
        order: list[str] = []
        while frontier:
            node = frontier.pop(0)
            order.append(node)
            for nxt in sorted(succ.get(node, ())):
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    frontier.append(nxt)
            frontier.sort()
        if len(order) != len(ids):
            return None
        return order

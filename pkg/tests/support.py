"""Seeded random generators shared by property and acceptance tests."""

from __future__ import annotations

import random
import zlib

from hknet import (Arc, Atom, Binding, Condition, Event, Guard, GuardAtom,
                   Ident, InterfaceElement, Marking, Module, Multiset,
                   OccurrenceNet, Place, PowSort, SchematicNet, SetTerm,
                   SetValue, Signature, SortName, Transition, TupleSort,
                   TupleTerm, TupleValue, render_term)
from hknet.modules import PLACE, TRANSITION
from hknet.parser import ModelDocument, StructureDoc, StructureEntry, SystemDoc

ATOMS = ["a", "b", "c", "d", "e1", "e2"]


# ---------------------------------------------------------------------------
# Random modules with compatible interfaces
# ---------------------------------------------------------------------------

def _stable(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def _sort_for_label(label: str):
    """Deterministic per label, so both fusion partners agree."""
    return [None, SortName("S"), SortName("T")][_stable(label) % 3]


def _random_ground_term(rng: random.Random):
    kind = rng.randrange(3)
    if kind == 0:
        return Ident(rng.choice(ATOMS))
    if kind == 1:
        return TupleTerm((Ident(rng.choice(ATOMS)), Ident(rng.choice(ATOMS))))
    return SetTerm(tuple(Ident(a) for a in rng.sample(ATOMS, rng.randrange(3))))


def _random_inscription(rng: random.Random):
    terms = [_random_ground_term(rng) for _ in range(rng.randrange(1, 3))]
    if rng.random() < 0.2:
        terms[0] = SetTerm(tuple(Ident(a) for a in rng.sample(ATOMS, 2)))
    return tuple(terms)


def random_module(rng: random.Random, name: str,
                  left_spec: list[tuple[str, str]],
                  right_spec: list[tuple[str, str]]) -> Module:
    """A small schematic module exposing exactly the given interfaces.

    Inner ids are generic (p0, t0, ...) in every module, so composition
    must rename; decorations of interface elements are derived from the
    label, which keeps fusion compatible by construction.
    """
    iface_nodes: dict[tuple[str, str], str] = {}
    places: list[Place] = []
    transitions: list[Transition] = []
    counter = 0
    for kind, label in dict.fromkeys(left_spec + right_spec):
        node_id = f"{'p' if kind == PLACE else 't'}{counter}"
        counter += 1
        iface_nodes[(kind, label)] = node_id
        if kind == PLACE:
            init = (_random_ground_term(rng),) if _stable(label) % 2 else ()
            places.append(Place(node_id, _sort_for_label(label), init))
        else:
            guard = Guard()
            if _stable(label) % 3 == 0:
                guard = Guard((GuardAtom("in", Ident(f"v_{label}"), Ident("S")),))
            free = ((f"v_{label}", SortName("S")),) if _stable(label) % 3 == 0 else ()
            transitions.append(Transition(node_id, guard, free))
    for _ in range(rng.randrange(3)):
        node_id = f"p{counter}"
        counter += 1
        init = (_random_ground_term(rng),) if rng.random() < 0.5 else ()
        places.append(Place(node_id, rng.choice([None, SortName("S")]), init))
    for _ in range(rng.randrange(2)):
        node_id = f"t{counter}"
        counter += 1
        transitions.append(Transition(node_id))

    arcs: dict[tuple[str, str], Arc] = {}
    if places and transitions:
        for _ in range(rng.randrange(1, 5)):
            p = rng.choice(places).name
            t = rng.choice(transitions).name
            src, tgt = (p, t) if rng.random() < 0.5 else (t, p)
            if (src, tgt) not in arcs:
                arcs[(src, tgt)] = Arc(src, tgt, _random_inscription(rng))

    left = tuple(InterfaceElement(kind, label, iface_nodes[(kind, label)])
                 for kind, label in left_spec)
    right = tuple(InterfaceElement(kind, label, iface_nodes[(kind, label)])
                  for kind, label in right_spec)
    return Module(name, "toy", SchematicNet(
        tuple(places), tuple(transitions),
        tuple(arcs.values())), left, right)


def compatible_triple(rng: random.Random) -> tuple[Module, Module, Module]:
    """Three modules whose two association orders are both defined.

    Shared label pools: s1 joins A.right with B.left, s2 joins B.right
    with C.left, s3 passes from A.right through to C.left.  All other
    labels are globally unique, so no result interface ever collides.
    """
    serial = 0

    def fresh(pool: str, n: int) -> list[tuple[str, str]]:
        nonlocal serial
        out = []
        for _ in range(n):
            kind = rng.choice([PLACE, TRANSITION])
            out.append((kind, f"{pool}{serial}"))
            serial += 1
        return out

    s1 = fresh("s1_", rng.randrange(1, 3))
    s2 = fresh("s2_", rng.randrange(1, 3))
    s3 = fresh("s3_", rng.randrange(2))
    a_left, a_right = fresh("al_", rng.randrange(2)), fresh("ar_", rng.randrange(2))
    b_left, b_right = fresh("bl_", rng.randrange(2)), fresh("br_", rng.randrange(2))
    c_left, c_right = fresh("cl_", rng.randrange(2)), fresh("cr_", rng.randrange(2))

    def shuffled(items: list) -> list:
        items = list(items)
        rng.shuffle(items)
        return items

    a = random_module(rng, "A", shuffled(a_left), shuffled(s1 + s3 + a_right))
    b = random_module(rng, "B", shuffled(s1 + b_left), shuffled(s2 + b_right))
    c = random_module(rng, "C", shuffled(s2 + s3 + c_left), shuffled(c_right))
    return a, b, c


# ---------------------------------------------------------------------------
# Random well-formed documents
# ---------------------------------------------------------------------------

def _random_value(rng: random.Random, depth: int = 0):
    kind = rng.randrange(4 if depth < 2 else 1)
    if kind == 0:
        return Atom(rng.choice(ATOMS))
    if kind == 1:
        return TupleValue((_random_value(rng, depth + 1),
                           _random_value(rng, depth + 1)))
    return SetValue(_random_value(rng, depth + 1)
                    for _ in range(rng.randrange(3)))


def _random_sort(rng: random.Random, names: list[str], depth: int = 0):
    kind = rng.randrange(3 if depth == 0 else 2)
    if kind == 0:
        return SortName(rng.choice(names))
    if kind == 1:
        return PowSort(rng.choice(names))
    return TupleSort((_random_sort(rng, names, 1), _random_sort(rng, names, 1)))


def _random_signature(rng: random.Random) -> Signature:
    n_sets = rng.randrange(1, 4)
    sets = [f"Set{i}" for i in range(n_sets)]
    subsets = []
    for i in range(rng.randrange(2)):
        subsets.append((f"Sub{i}", rng.choice(sets)))
    names = sets + [s for s, _ in subsets]
    constants = [(f"k{i}", _random_sort(rng, names))
                 for i in range(rng.randrange(2))]
    functions = []
    for i in range(rng.randrange(3)):
        args = tuple(_random_sort(rng, names)
                     for _ in range(rng.randrange(1, 3)))
        functions.append((f"f{i}", args, _random_sort(rng, names)))
    return Signature(f"sig{rng.randrange(100)}", tuple(sorted(sets)),
                     tuple(sorted(subsets)), tuple(sorted(constants)),
                     tuple(sorted(functions)))


def _random_structure_doc(rng: random.Random) -> StructureDoc:
    entries = []
    used = set()
    for _ in range(rng.randrange(1, 5)):
        sym = f"S{rng.randrange(20)}"
        if sym in used:
            continue
        used.add(sym)
        kind = rng.randrange(3)
        if kind == 0:
            entries.append(StructureEntry(
                sym, "value", value=SetValue(_random_value(rng)
                                             for _ in range(rng.randrange(3)))))
        elif kind == 1:
            keys = []
            pairs = []
            for _ in range(rng.randrange(1, 4)):
                key = _random_value(rng)
                if key in keys:
                    continue
                keys.append(key)
                pairs.append((key, _random_value(rng)))
            pairs.sort(key=lambda kv: (kv[0].key(), kv[1].key()))
            entries.append(StructureEntry(sym, "table", table=tuple(pairs)))
        else:
            entries.append(StructureEntry(sym, "pow", pow_of=f"Base{rng.randrange(3)}"))
    entries.sort(key=lambda e: e.symbol)
    return StructureDoc(f"st{rng.randrange(100)}", "somesig", tuple(entries))


def _random_term(rng: random.Random, depth: int = 0):
    kind = rng.randrange(5 if depth < 2 else 1)
    if kind == 0:
        return Ident(rng.choice(ATOMS + ["x", "y", "Menu"]))
    if kind == 1:
        return TupleTerm((_random_term(rng, depth + 1), _random_term(rng, depth + 1)))
    if kind == 2:
        return SetTerm(tuple(_random_term(rng, depth + 1)
                             for _ in range(rng.randrange(3))))
    return Ident(rng.choice(ATOMS))


def _random_module_doc(rng: random.Random) -> Module:
    sort_names = ["S", "T", "U"]
    places = []
    for i in range(rng.randrange(1, 5)):
        sort = rng.choice([None, _random_sort(rng, sort_names)])
        init = tuple(sorted((_random_term(rng)
                             for _ in range(rng.randrange(2))),
                            key=render_term))
        places.append(Place(f"p{i}", sort, init))
    transitions = []
    for i in range(rng.randrange(1, 4)):
        atoms = []
        for _ in range(rng.randrange(2)):
            atoms.append(GuardAtom(rng.choice(["=", "in", "sub"]),
                                   _random_term(rng), _random_term(rng)))
        atoms.sort(key=lambda a: (render_term(a.left), a.op, render_term(a.right)))
        free = tuple(sorted((f"v{j}", _random_sort(rng, sort_names))
                            for j in range(rng.randrange(2))))
        transitions.append(Transition(f"t{i}", Guard(tuple(atoms)), free))
    arcs = {}
    for _ in range(rng.randrange(4)):
        p = rng.choice(places).name
        t = rng.choice(transitions).name
        src, tgt = (p, t) if rng.random() < 0.5 else (t, p)
        terms = tuple(sorted((_random_term(rng)
                              for _ in range(rng.randrange(1, 3))),
                             key=render_term))
        arcs[(src, tgt)] = Arc(src, tgt, terms)
    left, right = [], []
    labels = [f"L{i}" for i in range(3)] + ["label with space", "menu:{a, b}#1"]
    for side in (left, right):
        seen = set()
        seen_refs = set()
        for _ in range(rng.randrange(3)):
            if rng.random() < 0.5 and places:
                kind, ref = PLACE, rng.choice(places).name
            else:
                kind, ref = TRANSITION, rng.choice(transitions).name
            label = rng.choice(labels)
            if (kind, label) in seen or ref in seen_refs:
                continue
            seen.add((kind, label))
            seen_refs.add(ref)
            side.append(InterfaceElement(kind, label, ref))
    return Module(
        f"m{rng.randrange(100)}", rng.choice(["", "sig_x"]),
        SchematicNet(
            tuple(sorted(places, key=lambda p: p.name)),
            tuple(sorted(transitions, key=lambda t: t.name)),
            tuple(sorted(arcs.values(), key=lambda a: (a.source, a.target)))),
        tuple(left), tuple(right))


def _random_run_doc(rng: random.Random) -> Module:
    conditions = [Condition(f"c{i}", f"pl{rng.randrange(3)}", _random_value(rng))
                  for i in range(rng.randrange(1, 5))]
    events = [Event(f"e{i}", f"tr{rng.randrange(3)}",
                    Binding({f"v{j}": _random_value(rng)
                             for j in range(rng.randrange(3))}))
              for i in range(rng.randrange(1, 4))]
    flow = set()
    for _ in range(rng.randrange(4)):
        c = rng.choice(conditions).id
        e = rng.choice(events).id
        flow.add((c, e) if rng.random() < 0.5 else (e, c))
    left, right = [], []
    for side in (left, right):
        seen = set()
        seen_refs = set()
        for _ in range(rng.randrange(3)):
            c = rng.choice(conditions)
            label = f"{c.place}:{rng.randrange(5)}"
            if (PLACE, label) in seen or c.id in seen_refs:
                continue
            seen.add((PLACE, label))
            seen_refs.add(c.id)
            side.append(InterfaceElement(PLACE, label, c.id))
    key = lambda i: (len(i), i)
    return Module(
        f"r{rng.randrange(100)}", rng.choice(["", "sys_x"]),
        OccurrenceNet(
            tuple(sorted(conditions, key=lambda c: key(c.id))),
            tuple(sorted(events, key=lambda e: key(e.id))),
            tuple(sorted(flow, key=lambda f: (key(f[0]), key(f[1]))))),
        tuple(left), tuple(right))


def random_document(rng: random.Random) -> ModelDocument:
    kind = rng.randrange(5)
    if kind == 0:
        return ModelDocument("signature", _random_signature(rng))
    if kind == 1:
        return ModelDocument("structure", _random_structure_doc(rng))
    if kind == 2:
        return ModelDocument("module", _random_module_doc(rng))
    if kind == 3:
        return ModelDocument("run", _random_run_doc(rng))
    sig = _random_signature(rng)
    struct = _random_structure_doc(rng)
    struct = StructureDoc(struct.name, sig.name, struct.entries)
    module = _random_module_doc(rng)
    module = Module(module.name, sig.name, module.inner, module.left, module.right)
    inner = module.inner
    marking = Marking({p.name: Multiset([_random_value(rng)])
                       for p in inner.places if rng.random() < 0.5})
    return ModelDocument("system", SystemDoc(
        f"sys{rng.randrange(100)}", sig, struct, module, marking))


# ---------------------------------------------------------------------------
# Replay oracle
# ---------------------------------------------------------------------------

def replay(system, steps) -> Marking:
    """Sequentially fire a list of (transition, binding) from the initial
    marking; raises if any step is not enabled."""
    m = system.initial
    for name, binding in steps:
        m = system.fire(m, name, binding)
    return m

import random

from hknet import (Arc, Atom, Ident, Module, Place, SchematicNet,
                   Signature, SortName, Transition, TupleValue, explore,
                   explore_grounded, ground, in_span, instantiate,
                   make_structure, nullspace, place_invariants,
                   transition_invariants)


def test_ground_expands_free_tables_per_carrier(sys0):
    g = ground(sys0)
    free = [pv for pv in g.places if pv[0] == "free_tables"]
    assert len(free) == len(sys0.structure.carrier("Tables")) == 4


def test_ground_without_transitions_has_zero_columns():
    sig = Signature("still", sets=("A",), constants=(("k", SortName("A")),))
    s = make_structure("s", sig, {"A": (Atom("a"),)}, constants={"k": Atom("a")})
    module = Module("m", "still", SchematicNet(
        places=(Place("p", SortName("A"), (Ident("k"),)),)))
    g = ground(instantiate(module, s))
    assert len(g.transitions) == 0
    assert g.incidence == ((),)
    assert g.initial == (1,)


def test_grounded_transitions_respect_guards(sys_tiny):
    g = ground(sys_tiny)
    hand_overs = [(n, b) for n, b in g.transitions if n == "hand_over"]
    # oracle: Y is forced to equal X by g(Y) = X, so one per (c, t, X)
    assert len(hand_overs) == 1 * 1 * 2
    for _, b in hand_overs:
        assert b["Y"] == b["X"]


def test_grounded_initial_vector_matches_marking(sys0):
    g = ground(sys0)
    assert g.initial == g.marking_vector(sys0.initial)
    assert sum(g.initial) == sys0.initial.total()


def test_nullspace_of_zero_matrix_is_standard_basis():
    basis = nullspace([[0, 0, 0], [0, 0, 0]], width=3)
    assert basis == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]


def test_nullspace_known_kernel():
    # x + y - z = 0 and y - z = 0  =>  kernel spanned by (0, 1, 1)
    basis = nullspace([[1, 1, -1], [0, 1, -1]], width=3)
    assert basis == [(0, 1, 1)]


def test_nullspace_vectors_are_primitive_integers():
    basis = nullspace([[2, -4]], width=2)
    assert basis == [(2, 1)]


def test_place_invariants_annihilate_incidence(sys_tiny):
    g = ground(sys_tiny)
    basis = place_invariants(g)
    assert basis
    c = g.incidence
    for vec in basis:
        for t in range(len(g.transitions)):
            assert sum(vec[p] * c[p][t] for p in range(len(g.places))) == 0


def test_per_table_conservation_along_random_walks(sys_small):
    g = ground(sys_small)
    # the table-conservation vector: each table is in exactly one of its
    # life-cycle places
    t1 = Atom("t1")
    vec = []
    for place, value in g.places:
        held = (place in ("free_tables", "offered_tables") and value == t1) or (
            place in ("clients_ready_to_order", "waiting", "eating")
            and isinstance(value, TupleValue) and value.items[1] == t1)
        vec.append(1 if held else 0)
    m0 = g.initial
    weight = sum(a * b for a, b in zip(vec, m0))
    assert weight == 1
    # oracle: 100 random firing sequences never change the weight
    rng = random.Random(99)
    for _ in range(20):
        m = sys_small.initial
        for _ in range(5):
            succ = sys_small.successors(m)
            if not succ:
                break
            _, _, m = succ[rng.randrange(len(succ))]
            current = sum(a * b for a, b in zip(vec, g.marking_vector(m)))
            assert current == weight
    assert in_span(place_invariants(g), vec)


def test_transition_invariants_of_acyclic_net_are_trivial():
    sig = Signature("line", sets=("A",), constants=(("k", SortName("A")),))
    s = make_structure("s", sig, {"A": (Atom("a"),)}, constants={"k": Atom("a")})
    net = SchematicNet(
        places=(Place("p", SortName("A"), (Ident("k"),)), Place("q", SortName("A"))),
        transitions=(Transition("step"),),
        arcs=(Arc("p", "step", (Ident("x"),)), Arc("step", "q", (Ident("x"),))),
    )
    g = ground(instantiate(Module("m", "line", net), s))
    assert transition_invariants(g) == []


def test_transition_invariants_of_a_cycle():
    # p -> forth -> q -> back -> p reproduces the marking: basis (1, 1)
    sig = Signature("ring", sets=("A",), constants=(("k", SortName("A")),))
    s = make_structure("s", sig, {"A": (Atom("a"),)}, constants={"k": Atom("a")})
    net = SchematicNet(
        places=(Place("p", SortName("A"), (Ident("k"),)), Place("q", SortName("A"))),
        transitions=(Transition("back"), Transition("forth")),
        arcs=(Arc("p", "forth", (Ident("x"),)), Arc("forth", "q", (Ident("x"),)),
              Arc("q", "back", (Ident("x"),)), Arc("back", "p", (Ident("x"),))),
    )
    g = ground(instantiate(Module("m", "ring", net), s))
    assert transition_invariants(g) == [(1, 1)]
    c = g.incidence
    for p in range(len(g.places)):
        assert sum(c[p][t] for t in range(len(g.transitions))) == 0


def test_explore_truncates_at_caps(sys0):
    graph = explore(sys0, max_nodes=1, max_edges=0)
    assert len(graph.markings) == 1
    assert graph.edges == ()
    assert graph.truncated


def test_explore_edge_count_is_successor_sum(sys_tiny):
    graph = explore(sys_tiny, max_nodes=1000, max_edges=10000)
    assert not graph.truncated
    total = sum(len(sys_tiny.successors(m)) for m in graph.markings)
    assert len(graph.edges) == total


def test_tiny_instance_runs_forever_without_deadlock(sys_tiny):
    graph = explore(sys_tiny, max_nodes=1000, max_edges=10000)
    assert not graph.truncated
    assert graph.deadlocks == ()
    assert graph.markings[0] == sys_tiny.initial


def test_explore_is_deterministic(sys_tiny):
    g1 = explore(sys_tiny, max_nodes=1000, max_edges=10000)
    g2 = explore(sys_tiny, max_nodes=1000, max_edges=10000)
    assert g1 == g2


def test_explore_reports_predicate_hits(sys_tiny):
    eating = lambda m: m.get("eating").total() > 0
    graph = explore(sys_tiny, max_nodes=1000, max_edges=10000, predicate=eating)
    assert graph.predicate_hits
    for idx in graph.predicate_hits:
        assert graph.markings[idx].get("eating").total() > 0


def test_grounded_exploration_matches_high_level(sys_tiny):
    g = ground(sys_tiny)
    hl = explore(sys_tiny, max_nodes=10000, max_edges=100000)
    gr = explore_grounded(g, max_nodes=10000, max_edges=100000)
    assert len(hl.markings) == len(gr.vectors)
    assert len(hl.edges) == len(gr.edges)
    translated = {g.marking_vector(m) for m in hl.markings}
    assert translated == set(gr.vectors)


def test_invariants_hold_on_every_reachable_marking(sys_tiny):
    g = ground(sys_tiny)
    basis = place_invariants(g)
    graph = explore(sys_tiny, max_nodes=1000, max_edges=10000)
    for vec in basis:
        weights = {sum(a * b for a, b in zip(vec, g.marking_vector(m)))
                   for m in graph.markings}
        assert len(weights) == 1

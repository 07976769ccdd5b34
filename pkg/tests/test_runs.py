import pytest

from hknet import (Arc, Atom, Binding, CompositionError, Ident, ModelError,
                   Module, Multiset, Place, SchematicNet, ScriptError,
                   SetValue, Signature, SortName, Transition, canonical_equal,
                   compose_runs, empty_run, final_cut, find_event, initial_cut,
                   instantiate, linearize, make_structure, ordered,
                   random_policy, scripted_policy, simulate, validate_run)
from hknet.nets import OccurrenceNet

from support import replay


def one_shot_system(place: str, transition: str, out: str, token: str):
    sig = Signature("tiny_" + transition, sets=("A",),
                    constants=(("seedval", SortName("A")),))
    s = make_structure("only", sig, {"A": (Atom(token),)},
                       constants={"seedval": Atom(token)})
    net = SchematicNet(
        places=(Place(place, SortName("A"), (Ident("seedval"),)),
                Place(out, SortName("A"))),
        transitions=(Transition(transition),),
        arcs=(Arc(place, transition, (Ident("x"),)),
              Arc(transition, out, (Ident("x"),))),
    )
    return instantiate(Module("m_" + transition, sig.name, net), s)


def test_zero_steps_records_only_the_initial_cut(sys0):
    run = simulate(sys0, random_policy(seed=3, steps=0))
    assert len(run.inner.conditions) == 5
    assert len(run.inner.events) == 0
    assert initial_cut(run) == sys0.initial == final_cut(run)
    assert len(run.left) == len(run.right) == 5


def test_event_count_equals_firings(sys0):
    for steps in (1, 4, 9):
        run = simulate(sys0, random_policy(seed=steps, steps=steps))
        assert len(run.inner.events) == steps


def test_simulated_runs_validate_for_any_seed(sys0):
    for seed in range(6):
        run = simulate(sys0, random_policy(seed=seed, steps=12))
        assert validate_run(run, sys0) == []


def test_final_cut_equals_sequential_replay(sys0):
    for seed in range(4):
        run = simulate(sys0, random_policy(seed=seed, steps=15))
        seq = linearize(run, seed)
        assert replay(sys0, seq) == final_cut(run)


def test_script_must_be_enabled(sys0):
    steps = [("enter", Binding({"c": Atom("Alice"), "t": Atom("t1")}))]
    with pytest.raises(ScriptError, match="not enabled"):
        simulate(sys0, scripted_policy(steps))


def test_ambiguous_script_step_is_rejected(sys0):
    steps = [("offer_table", Binding({"t": Atom("t1")})),
             ("enter", Binding({"t": Atom("t1")}))]  # c left open: two clients
    with pytest.raises(ScriptError, match="disambiguate"):
        simulate(sys0, scripted_policy(steps))


def test_partial_script_bindings_resolve_when_unique(sys0):
    steps = [("offer_table", Binding({"t": Atom("t2")})),
             ("enter", Binding({"c": Atom("Bob")}))]  # t forced by the token
    run = simulate(sys0, scripted_policy(steps))
    event = find_event(run, "enter")
    assert event.binding == Binding({"c": Atom("Bob"), "t": Atom("t2")})


def test_equal_tokens_are_consumed_oldest_first(sys0, a0_script):
    run = simulate(sys0, scripted_policy(a0_script))
    cook_rice_first = find_event(run, "hand_over", Binding({"c": Atom("Bob")}))
    rice_inputs = [run.inner.condition(cid)
                   for cid in run.inner.pre(cook_rice_first.id)
                   if run.inner.condition(cid).place == "cooked"
                   and run.inner.condition(cid).value == Atom("rice")]
    assert len(rice_inputs) == 1
    # the first cooked rice stems from Alice's strand, so Bob eats it
    producer = run.inner.pre(rice_inputs[0].id)[0]
    alice_unfold = find_event(run, "unfold", Binding({"t": Atom("t1")}))
    assert ordered(run, alice_unfold, producer) == "before"


def test_validate_reference_run(sys0, a0):
    assert validate_run(a0, sys0) == []


def test_validate_rejects_false_guard(sys0, a0):
    inner = a0.inner
    bad_events = []
    for e in inner.events:
        if e.transition == "hand_over" and e.binding["c"] == Atom("Alice"):
            pairs = dict(e.binding.pairs())
            pairs["Y"] = SetValue([Atom("salad")])
            e = type(e)(e.id, e.transition, Binding(pairs))
        bad_events.append(e)
    bad = Module(a0.name, a0.sig, OccurrenceNet(
        inner.conditions, tuple(bad_events), inner.flow), a0.left, a0.right)
    codes = {v.code for v in validate_run(bad, sys0)}
    assert "guard" in codes


def test_validate_rejects_branching_conditions(sys0, a0):
    inner = a0.inner
    # let one menu condition be consumed by both selects
    menu_start = next(c for c in inner.conditions
                      if c.place == "menu" and not inner.pre(c.id))
    selects = [e for e in inner.events if e.transition == "select"]
    extra = (menu_start.id, selects[1].id)
    bad = Module(a0.name, a0.sig, OccurrenceNet(
        inner.conditions, inner.events, inner.flow + (extra,)),
        a0.left, a0.right)
    codes = {v.code for v in validate_run(bad, sys0)}
    assert "branching" in codes


def test_validate_rejects_oversized_initial_cut(sys0, a0):
    inner = a0.inner
    ghost = type(inner.conditions[0])("b_extra", "free_tables", Atom("t1"))
    bad = Module(a0.name, a0.sig, OccurrenceNet(
        inner.conditions + (ghost,), inner.events, inner.flow),
        a0.left, a0.right)
    codes = {v.code for v in validate_run(bad, sys0)}
    assert "initial-cut" in codes


def test_compose_with_empty_run_is_neutral(a0):
    assert compose_runs(a0, empty_run()) == a0
    assert compose_runs(empty_run(), a0) == a0


def test_composing_independent_runs_keeps_events_unordered():
    sys_a = one_shot_system("pa", "ta", "qa", "va")
    sys_b = one_shot_system("pb", "tb", "qb", "vb")
    run_a = simulate(sys_a, random_policy(seed=0, steps=1))
    run_b = simulate(sys_b, random_policy(seed=0, steps=1))
    combined = compose_runs(run_a, run_b)
    assert len(combined.inner.events) == 2
    ea, eb = combined.inner.events
    assert ordered(combined, ea.id, eb.id) == "independent"


def test_fused_conditions_must_agree_on_values(a0_segments):
    begin, middle, end = a0_segments
    inner = middle.inner
    changed = tuple(
        type(c)(c.id, c.place, Atom("t9")) if c.id == "m1" else c
        for c in inner.conditions)
    tampered = Module(middle.name, middle.sig, OccurrenceNet(
        changed, inner.events, inner.flow), middle.left, middle.right)
    with pytest.raises(CompositionError, match="disagree"):
        compose_runs(begin, tampered)


def test_composing_runs_must_not_branch():
    sys_a = one_shot_system("pa", "ta", "qa", "va")
    run_a = simulate(sys_a, random_policy(seed=0, steps=1))
    # a twin whose left interface exposes its *produced* condition: fusing
    # would give that condition two producing events
    twin = Module(run_a.name, run_a.sig, run_a.inner, run_a.right, ())
    with pytest.raises(CompositionError, match="branch"):
        compose_runs(run_a, twin)


def test_linearize_single_event_run():
    system = one_shot_system("p", "go", "q", "v")
    run = simulate(system, random_policy(seed=0, steps=1))
    assert linearize(run) == [("go", Binding({"x": Atom("v")}))]


def test_linearize_covers_all_interleavings():
    sys_a = one_shot_system("pa", "ta", "qa", "va")
    sys_b = one_shot_system("pb", "tb", "qb", "vb")
    combined = compose_runs(simulate(sys_a, random_policy(0, 1)),
                            simulate(sys_b, random_policy(0, 1)))
    # oracle: a 2-antichain has exactly two topological orders
    seen = {tuple(name for name, _ in linearize(combined, seed))
            for seed in range(16)}
    assert seen == {("ta", "tb"), ("tb", "ta")}


def test_linearizations_replay_from_reference(sys0, a0):
    for seed in (0, 1, 2):
        assert replay(sys0, linearize(a0, seed)) == final_cut(a0)


def test_causal_order_in_reference_run(a0):
    offer_t1 = find_event(a0, "offer_table", Binding({"t": Atom("t1")}))
    enter_alice = find_event(a0, "enter", Binding({"c": Atom("Alice")}))
    offer_t2 = find_event(a0, "offer_table", Binding({"t": Atom("t2")}))
    enter_bob = find_event(a0, "enter", Binding({"c": Atom("Bob")}))
    assert ordered(a0, offer_t1, enter_alice) == "before"
    assert ordered(a0, enter_alice, offer_t1) == "after"
    assert ordered(a0, offer_t1, offer_t2) == "independent"
    assert ordered(a0, enter_alice, enter_bob) == "independent"
    assert ordered(a0, offer_t1, enter_bob) == "independent"


def test_an_event_is_before_itself_by_convention(a0):
    e = find_event(a0, "cook", Binding({"y": Atom("salad")}))
    assert ordered(a0, e, e) == "before"


def test_ordered_rejects_unknown_events(a0):
    with pytest.raises(KeyError):
        ordered(a0, "ev1", "nowhere")


def test_cyclic_run_cannot_linearize():
    from hknet import Condition, Event
    inner = OccurrenceNet(
        conditions=(Condition("c1", "p", Atom("a")),
                    Condition("c2", "p", Atom("a"))),
        events=(Event("e1", "t", Binding()), Event("e2", "t", Binding())),
        flow=(("c1", "e1"), ("e1", "c2"), ("c2", "e2"), ("e2", "c1")),
    )
    cyclic = Module("loop", "", inner)
    with pytest.raises(ModelError, match="cyclic|linearize"):
        linearize(cyclic)


def test_validate_rejects_ill_sorted_condition_values(sys0, a0):
    from hknet import Condition
    inner = a0.inner
    changed = tuple(
        Condition(c.id, c.place, Atom("pizza"))
        if c.id == "b13" else c  # an ordered_items entry
        for c in inner.conditions)
    bad = Module(a0.name, a0.sig, OccurrenceNet(
        changed, inner.events, inner.flow), a0.left, a0.right)
    codes = {v.code for v in validate_run(bad, sys0)}
    assert "token-sort" in codes


def test_validate_rejects_unknown_places(sys0, a0):
    from hknet import Condition
    inner = a0.inner
    ghost = Condition("bx", "warehouse", Atom("t1"))
    bad = Module(a0.name, a0.sig, OccurrenceNet(
        inner.conditions + (ghost,), inner.events, inner.flow),
        a0.left, a0.right)
    codes = {v.code for v in validate_run(bad, sys0)}
    assert "unknown-place" in codes

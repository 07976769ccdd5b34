from hknet import empty_module, export_dot


def test_branch_export_shows_cluster_and_boundary(branch):
    dot = export_dot(branch)
    assert "subgraph cluster_module" in dot
    assert '"enter"' in dot and '"leave"' in dot
    assert "rank=min" in dot and "rank=max" in dot
    # boundary transitions are emphasized
    assert dot.count("penwidth=2") == 2


def test_empty_module_exports_valid_cluster():
    dot = export_dot(empty_module())
    assert dot.startswith("digraph")
    assert "cluster_module" in dot
    assert dot.rstrip().endswith("}")


def test_node_count_matches_element_count(branch):
    dot = export_dot(branch)
    inner = branch.inner
    shapes = dot.count("shape=ellipse") + dot.count("shape=box")
    assert shapes == len(inner.places) + len(inner.transitions)


def test_system_export_includes_tokens(sys0):
    dot = export_dot(sys0)
    assert "{meat, rice, salad}" in dot
    assert "free tables" in dot  # underscores map back to display labels


def test_run_export_is_left_to_right_and_deterministic(a0):
    one = export_dot(a0)
    two = export_dot(a0)
    assert one == two
    assert "rankdir=LR" in one
    shapes = one.count("shape=ellipse") + one.count("shape=box")
    assert shapes == len(a0.inner.conditions) + len(a0.inner.events)

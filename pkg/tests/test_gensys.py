import json

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from endwalk.arrangement import Configuration, enumerate_configurations
from endwalk.errors import InvariantViolation
from endwalk.gensys import (Canonicalizer, PolynomialSystem, build_dependency_digraph,
                            build_system, bundled_system, config_image, derivative,
                            jacobian_symbolic, nonboring_classes, prune_unproductive,
                            system_to_dict)
from endwalk.template import BUNDLED, bundled_template


def test_double_ray_polynomials():
    s, d = bundled_system("double_ray")
    assert [c.tags() for c in s.configs] == [["I", "simple"], ["I", "simple"]]
    # P_c = z + z * y_other
    assert s.polys == [{(1, ()): 1, (1, ((1, 1),)): 1}, {(1, ()): 1, (1, ((0, 1),)): 1}]
    assert s.root_saw == {(1, ()): 2, (2, ()): 2, (3, ()): 2,
                          (3, ((0, 1),)): 1, (3, ((1, 1),)): 1}
    assert s.root_sar == {(1, ()): 2}
    assert d.persistent_single_component


@pytest.mark.parametrize("name,size", [("double_ray", 2), ("t3", 12), ("triangle_edge", 12),
                                       ("k4_edge", 16), ("hex_cactus", 96)])
def test_class_counts(name, size):
    s, _ = bundled_system(name)
    assert s.size == size
    assert not s.pruned


@pytest.mark.parametrize("name", BUNDLED)
def test_no_u_to_i_arcs(name):
    s, d = bundled_system(name)
    kinds = [c.kind for c in s.configs]
    assert not any(kinds[u] == "U" and kinds[v] == "I" for u, v in d.graph.edges)


@pytest.mark.parametrize("name", BUNDLED)
def test_persistent_component_holds_all_simple(name):
    s, d = bundled_system(name)
    assert d.persistent_single_component
    (k,) = d.persistent_components
    simple = {i for i, c in enumerate(s.configs) if c.is_simple}
    assert simple and simple <= set(d.components[k])


@pytest.mark.parametrize("name", BUNDLED)
def test_component_order_is_reverse_topological(name):
    _, d = bundled_system(name)
    pos = {k: i for i, k in enumerate(d.order)}
    for u, v in d.graph.edges:
        cu, cv = d.component_of[u], d.component_of[v]
        if cu != cv:
            assert pos[cv] < pos[cu]


@pytest.mark.parametrize("name", BUNDLED)
def test_polynomials_have_no_constant_term(name):
    s, _ = bundled_system(name)
    for poly in s.polys + [s.root_saw]:
        assert (0, ()) not in poly
        assert all(coeff > 0 for coeff in poly.values())


@pytest.mark.parametrize("name", BUNDLED)
def test_i_block_of_jacobian_uses_only_u(name):
    s, _ = bundled_system(name)
    jac = jacobian_symbolic(s)
    kinds = [c.kind for c in s.configs]
    for (c, v), poly in jac.items():
        if kinds[c] == kinds[v] == "I":
            assert all(kinds[u] == "U" for (_, exps) in poly for u, _ in exps)


def test_hex_cactus_has_u_components():
    _, d = bundled_system("hex_cactus")
    assert d.classes.count("U") >= 1
    assert "I_transient" in d.classes


def test_root_returns_use_only_u():
    for name in BUNDLED:
        s, _ = bundled_system(name)
        assert all(s.configs[v].kind == "U" for (_, exps) in s.root_sar for v, _ in exps)


def test_derivative():
    p = {(2, ((0, 2), (1, 1))): 3, (1, ()): 1}
    assert derivative(p, 0) == {(2, ((0, 1), (1, 1))): 6}
    assert derivative(p, 1) == {(2, ((0, 2),)): 3}
    assert derivative(p, 5) == {}


def test_mixed_component_detected():
    s, _ = bundled_system("hex_cactus")
    u = next(i for i, c in enumerate(s.configs) if c.kind == "U")
    i = next(i for i, c in enumerate(s.configs) if c.kind == "I")
    polys = [dict(p) for p in s.polys]
    polys[u][(1, ((i, 1),))] = 1
    bad = PolynomialSystem(s.template, s.configs, polys, s.root_saw, s.root_sar)
    with pytest.raises(InvariantViolation):
        build_dependency_digraph(bad)


def test_pruning_drops_unproductive_classes():
    s, _ = bundled_system("double_ray")
    # a class whose only monomial feeds itself never produces a walk
    extra = Configuration(0, (0,), (), 1, 1)
    polys = [dict(p) for p in s.polys] + [{(1, ((2, 1),)): 1}]
    raw = PolynomialSystem(s.template, list(s.configs) + [extra], polys, s.root_saw, s.root_sar)
    pruned = prune_unproductive(raw)
    assert pruned.size == 2 and list(pruned.pruned) == [extra]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(enumerate_configurations(1, pair=0) + enumerate_configurations(1, pair=1)))
def test_canonicalizer_is_idempotent_and_invariant(c):
    t = bundled_template("double_ray")
    canon = Canonicalizer(t)
    rep = canon(c)
    assert canon(rep) == rep
    for g in t.symmetry_group():
        assert canon(config_image(t, g, c)) == rep


def test_double_ray_symmetry_merges_classes():
    t = bundled_template("double_ray")
    assert len(nonboring_classes(t, Canonicalizer(t))) == 2


def test_system_dump_is_deterministic():
    s, d = bundled_system("triangle_edge")
    a = json.dumps(system_to_dict(s, d), sort_keys=True)
    s2 = prune_unproductive(build_system(bundled_template("triangle_edge")))
    b = json.dumps(system_to_dict(s2, build_dependency_digraph(s2)), sort_keys=True)
    assert a == b
    assert "persistent" in a


def test_dependency_graph_matches_networkx_scc():
    s, d = bundled_system("hex_cactus")
    comps = {frozenset(c) for c in nx.strongly_connected_components(d.graph)}
    assert comps == {frozenset(c) for c in d.components}

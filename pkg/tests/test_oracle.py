import pytest

from endwalk.errors import HorizonExceeded
from endwalk.graph_core import enumerate_saws
from endwalk.oracle import (_representatives, brute_counts, count_walks, displacement_stats,
                            growth_report, oracle_for_template)
from endwalk.template import BUNDLED, build_patch_for_horizon, bundled_template


def test_double_ray_counts(patches):
    r = brute_counts(patches("double_ray", 6), 6)
    assert r.c == [2] * 6
    assert r.sar == [2, 0, 0, 0, 0, 0]
    assert r.sap == [0] * 6


def test_tree_counts(patches):
    r = brute_counts(patches("t3", 4), 4)
    assert r.c == [3, 6, 12, 24]
    assert r.sup_p == [0] * 4


def test_triangle_edge_degree(patches):
    r = brute_counts(patches("triangle_edge", 2), 2)
    assert r.c[0] == 3


def test_horizon_enforced(patches):
    p = patches("triangle_edge", 4)
    with pytest.raises(HorizonExceeded):
        brute_counts(p, 40)
    with pytest.raises(HorizonExceeded):
        displacement_stats(p, 40)


def test_parallel_totals_are_identical(patches):
    p = patches("k4_edge", 7)
    assert count_walks(p.graph, p.origin, 7, jobs=1) == count_walks(p.graph, p.origin, 7, jobs=3)


def test_env_overrides_jobs(patches, monkeypatch):
    p = patches("triangle_edge", 6)
    monkeypatch.setenv("ENDWALK_JOBS", "2")
    assert count_walks(p.graph, p.origin, 6, jobs=1) == count_walks(p.graph, p.origin, 6)


@pytest.mark.parametrize("name", BUNDLED)
def test_radius_stability(name):
    t = bundled_template(name)
    a = brute_counts(build_patch_for_horizon(t, 6), 6, with_sup_p=False)
    b = brute_counts(build_patch_for_horizon(t, 8), 6, with_sup_p=False)
    assert (a.c, a.sar, a.sap) == (b.c, b.sar, b.sap)


@pytest.mark.parametrize("name", BUNDLED)
def test_submultiplicativity(name):
    t = bundled_template(name)
    N = 8
    p = build_patch_for_horizon(t, N + 4)
    reps = _representatives(p)
    per_vertex = [enumerate_saws(p.graph, x, N) for x in reps]
    best = [max(col) for col in zip(*per_vertex)]
    c = enumerate_saws(p.graph, p.origin, N)
    for m in range(1, N):
        for n in range(1, N - m + 1):
            assert c[m + n] <= c[m] * best[n]


def test_polygons_in_k4_edge():
    r = oracle_for_template(bundled_template("k4_edge"), 5)
    # the origin lies on three triangles and three quadrilaterals of its K4
    assert r.sap[2] == 3 and r.sap[3] == 3
    assert r.sup_p[2] >= r.sap[2]


@pytest.mark.parametrize("name", ["double_ray", "t3"])
def test_geodesic_displacement_on_trees(patches, name):
    p = patches(name, 7)
    for n in range(1, 7):
        s = displacement_stats(p, n)
        assert s.histogram == {n: s.total}
        assert s.mean_over_n == 1.0


@pytest.mark.parametrize("name", ["triangle_edge", "k4_edge", "hex_cactus"])
def test_displacement_support_and_mass(patches, name):
    p = patches(name, 8)
    c = enumerate_saws(p.graph, p.origin, 8)
    for n in range(1, 9):
        s = displacement_stats(p, n)
        assert s.total == c[n]
        assert min(s.histogram) >= 0 and max(s.histogram) <= n


def test_growth_report_trees(patches):
    r = brute_counts(patches("t3", 6), 6)
    g = growth_report(r, 2.0)
    assert g.sap_root == [0.0] * 6
    assert g.polygon_gap
    # SAR_1 = 3 exceeds mu_w = 2 on the 3-regular tree
    assert g.sar_gap is False
    assert g.c_root[0] == pytest.approx(3.0)


def test_growth_report_without_mu(patches):
    g = growth_report(brute_counts(patches("double_ray", 4), 4))
    assert g.sar_gap is None and g.polygon_gap is None and g.max_sar_root == pytest.approx(2.0)

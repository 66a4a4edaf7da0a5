import numpy as np
import pytest

from gridshare.errors import ConfigError, DegenerateError, InputError
from gridshare.percolation import (argmax_threshold, cluster_moments, curve_to_csv,
                                   percolation_curve, resilience_of_series,
                                   strength_and_susceptibility)
from gridshare.visibility import VisibilityGraph, build_visibility_fast

from oracles import (complete_edges, complete_graph_moments, cycle_edges, exact_curve,
                     exact_threshold, exhaustive_moments, path_edges)


def graph(n, edges):
    return VisibilityGraph(n, np.array(sorted(edges), dtype=np.int64).reshape(-1, 2))


def test_single_edge_literal_normalisation():
    c = percolation_curve(graph(2, [(0, 1)]), trials=7, seed=0, normalization="literal")
    assert c.strength[0] == 7.0  # T * 2 / (2 * 1)
    assert c.strength[1] == 3.5  # isolated nodes


def test_triangle_one_removal_is_deterministic():
    c = percolation_curve(graph(3, complete_edges(3)), trials=300, seed=1)
    assert c.s_sum[1] == 3 * 300
    assert np.all(c.susceptibility == 0.0)
    assert c.threshold == 0.0  # flat curve: ties go to the smallest p


def test_all_edges_removed_leaves_singletons():
    g = build_visibility_fast(np.random.default_rng(0).random(40))
    c = percolation_curve(g, trials=50, seed=2)
    assert c.s_sum[-1] == 50 and c.s2_sum[-1] == 50
    assert np.all(np.diff(c.p_grid) > 0) and c.p_grid[0] == 0 and c.p_grid[-1] == 1


def test_threshold_tie_breaks_to_smaller_p():
    assert argmax_threshold([0, 0.5, 1.0], [1, 1, 1], [0.1, 0.3, 0.3]) == 0.5
    assert argmax_threshold([0, 0.5, 1.0], [1, 0.5, 0.2], [0.0, 0.2, 0.1]) == 0.5


def test_undefined_points_are_skipped():
    assert argmax_threshold([0, 0.5, 1.0], [0, 1, 1], [9.0, 0.1, 0.2]) == 1.0
    with pytest.raises(DegenerateError):
        argmax_threshold([0, 1], [0, 0], [0, 0])
    assert argmax_threshold([0, 0.5, 1], [1, 1, 1], [0, 0, 0]) == 0


def test_errors():
    with pytest.raises(InputError):
        percolation_curve(graph(3, []), trials=10)
    with pytest.raises(ConfigError):
        percolation_curve(graph(2, [(0, 1)]), trials=0)
    with pytest.raises(ConfigError):
        strength_and_susceptibility([1], [1], 2, 1, 1, normalization="bogus")


def test_curve_is_deterministic_and_batch_independent():
    g = build_visibility_fast(np.random.default_rng(3).random(80))
    a = percolation_curve(g, trials=130, seed=5)
    b = percolation_curve(g, trials=130, seed=5)
    assert np.array_equal(a.s_sum, b.s_sum) and a.threshold == b.threshold
    # the first 64 trials of a longer run are the same trials
    s64, _ = cluster_moments(g.edges, g.node_count, 64, 5)
    s1, _ = cluster_moments(g.edges, g.node_count, 1, 5)
    assert s64[0] == 64 * g.node_count and s1[0] == g.node_count


@pytest.mark.parametrize("name,n,edges", [
    ("P4", 4, path_edges(4)), ("P6", 6, path_edges(6)), ("C5", 5, cycle_edges(5)),
    ("K4", 4, complete_edges(4)), ("K5", 5, complete_edges(5)),
])
def test_monte_carlo_within_three_standard_errors(name, n, edges):
    m1, _ = exhaustive_moments(n, edges)
    c = percolation_curve(graph(n, edges), trials=5000, seed=17)
    mean = c.mean_cluster()
    se = c.std_error()
    for e, exact in enumerate(m1):
        exact = float(exact)
        if se[e] == 0:
            assert mean[e] == exact
        else:
            assert abs(mean[e] - exact) <= 3 * se[e], (name, e)


def test_path_threshold_matches_exhaustive_oracle():
    m1, m2 = exhaustive_moments(4, path_edges(4))
    c = percolation_curve(graph(4, path_edges(4)), trials=2000, seed=0)
    assert c.threshold == pytest.approx(float(exact_threshold(4, m1, m2)))


def test_counting_oracle_agrees_with_enumeration():
    for n in (4, 5, 6):
        assert complete_graph_moments(n) == exhaustive_moments(n, complete_edges(n))


def test_denser_graphs_have_higher_oracle_threshold():
    for n in range(4, 9):
        k = exact_threshold(n, *complete_graph_moments(n))
        p = exact_threshold(n, *exhaustive_moments(n, path_edges(n)))
        assert k >= p, n


def test_exact_strength_is_nonincreasing():
    for n, edges in [(6, path_edges(6)), (5, complete_edges(5)), (6, cycle_edges(6))]:
        strength, _ = exact_curve(n, *exhaustive_moments(n, edges))
        assert all(a >= b for a, b in zip(strength, strength[1:]))


def test_smoothed_monte_carlo_strength_is_nonincreasing():
    g = build_visibility_fast(np.random.default_rng(8).random(60))
    c = percolation_curve(g, trials=400, seed=3)
    smooth = np.convolve(c.strength, np.ones(5) / 5, mode="valid")
    assert np.all(np.diff(smooth) <= 3 * c.std_error().max() / g.node_count)


def test_argmax_invariant_to_strength_rescaling():
    g = build_visibility_fast(np.random.default_rng(4).random(50))
    c = percolation_curve(g, trials=300, seed=9)
    for k in (0.5, 3.0, 1000.0):
        s, chi = strength_and_susceptibility(c.s_sum * k, c.s2_sum * k * k, g.node_count,
                                             g.edge_count, c.trials)
        assert argmax_threshold(c.p_grid, s, chi) == c.threshold


def test_literal_mode_is_available_and_rescales_strength():
    g = build_visibility_fast(np.random.default_rng(4).random(50))
    c = percolation_curve(g, trials=100, seed=9)
    lit = c.renormalized("literal")
    assert np.allclose(lit.strength, c.strength * c.trials / g.edge_count)


def test_resilience_of_constant_series_matches_path_oracle():
    m1, m2 = exhaustive_moments(10, path_edges(10))
    rho = resilience_of_series([1.0] * 10, trials=5000, seed=0)
    assert rho == pytest.approx(float(exact_threshold(10, m1, m2)))


def test_resilience_of_convex_series_matches_k6_oracle():
    rho = resilience_of_series([t * t for t in range(6)], trials=5000, seed=0)
    assert rho == pytest.approx(float(exact_threshold(6, *complete_graph_moments(6))))


def test_resilience_is_reproducible_and_needs_three_points():
    xs = np.random.default_rng(1).random(30)
    assert resilience_of_series(xs, 200, 4) == resilience_of_series(xs, 200, 4)
    with pytest.raises(InputError):
        resilience_of_series([1.0, 2.0], 10, 0)


def test_curve_csv(tmp_path):
    c = percolation_curve(graph(3, complete_edges(3)), trials=20, seed=0)
    text = curve_to_csv(c, tmp_path / "c.csv")
    lines = text.splitlines()
    assert lines[0] == "e,p,strength,susceptibility"
    assert len(lines) == 1 + 4 + 1 and lines[-1].startswith("threshold,")
    assert (tmp_path / "c.csv").read_text() == text

"""Lifts, Chen/geometric identities, grid norms, translation."""

import numpy as np
import pytest

from oracles import level2_integrals_dense
from roughball import (
    CMPath,
    chen_defect,
    dyadic_holder_bound,
    g2_inverse,
    g2_log,
    g2_multiply,
    geometric_defect,
    holder_distance,
    holder_norm,
    lift_piecewise_linear,
    translate,
    trivial_rough_path,
)
from roughball.paths import all_pair_indices, dyadic_pair_indices, increment


def _random_lift(rng, n_points=65, dim=2):
    times = np.linspace(0.0, 1.0, n_points)
    values = rng.standard_normal((n_points, dim)).cumsum(axis=0) * np.sqrt(times[1])
    values -= values[0]
    return lift_piecewise_linear(CMPath(times, values))


def test_lift_level2_matches_oracle(rng):
    for dim in (1, 2, 3):
        times = np.linspace(0.0, 1.0, 17)
        values = rng.standard_normal((17, dim)).cumsum(axis=0)
        values -= values[0]
        lift = lift_piecewise_linear(CMPath(times, values))
        expected = level2_integrals_dense(times, values)
        assert np.abs(lift.prefix_level2[-1] - expected).max() <= 1e-12
        # interior prefix too, via the truncated path
        k = 9
        partial = level2_integrals_dense(times[: k + 1], values[: k + 1])
        assert np.abs(lift.prefix_level2[k] - partial).max() <= 1e-12


def test_chen_and_geometric_identities(rng):
    x = _random_lift(rng, n_points=129, dim=3)
    assert chen_defect(x, n_triples=300, seed=3) <= 1e-13
    assert geometric_defect(x) <= 1e-13


def test_increment_composition_exact(rng):
    x = _random_lift(rng, n_points=33, dim=2)
    a = increment(x, 2, 10)
    b = increment(x, 10, 25)
    ab = g2_multiply(a, b)
    whole = increment(x, 2, 25)
    assert np.abs(ab.level1 - whole.level1).max() <= 1e-14
    assert np.abs(ab.level2 - whole.level2).max() <= 1e-14


def test_trivial_path_has_zero_norm():
    x = trivial_rough_path(np.linspace(0.0, 1.0, 9), 2)
    assert holder_norm(x, 0.4) == 0.0


def test_dyadic_pairs_subset_of_all_pairs():
    di, dj = dyadic_pair_indices(17)
    ai, aj = all_pair_indices(17)
    all_set = set(zip(ai.tolist(), aj.tolist()))
    assert set(zip(di.tolist(), dj.tolist())) <= all_set
    assert len(all_set) == 17 * 16 // 2
    assert np.all(di < dj)


def test_dyadic_norm_below_all_pairs(rng):
    x = _random_lift(rng, n_points=65)
    for alpha in (0.35, 0.45):
        assert holder_norm(x, alpha, pair_set="dyadic") <= holder_norm(x, alpha, pair_set="all")


def test_discretisation_bound_dominates_all_pairs(rng):
    for _ in range(5):
        x = _random_lift(rng, n_points=129)
        alpha = 0.4
        bound = dyadic_holder_bound(x, alpha, eps=0.5)
        assert bound.value >= holder_norm(x, alpha, pair_set="all") - 1e-12
        assert bound.coarse_term >= 0 and bound.fine_term >= 0


def test_distance_basic_properties(rng):
    x = _random_lift(rng)
    y = _random_lift(rng)
    d_xy = holder_distance(x, y, 0.4)
    assert d_xy == pytest.approx(holder_distance(y, x, 0.4), rel=1e-7)
    assert holder_distance(x, x, 0.4) == 0.0
    assert d_xy > 0


def test_translate_by_zero_is_identity(rng):
    x = _random_lift(rng)
    h = CMPath(x.times, np.zeros((len(x.times), 2)))
    tx = translate(x, h)
    assert np.abs(tx.prefix_level1 - x.prefix_level1).max() == 0.0
    assert np.abs(tx.prefix_level2 - x.prefix_level2).max() <= 1e-15


def test_translate_level1_adds_drift(rng):
    x = _random_lift(rng)
    h_vals = np.stack([x.times**2, np.sin(x.times)], axis=1)
    tx = translate(x, CMPath(x.times, h_vals))
    assert np.abs(tx.prefix_level1 - (x.prefix_level1 + h_vals)).max() <= 1e-14


def test_translation_invariance_dim1(rng):
    # one-dimensional group is abelian: translation drops out of differences.
    # The level-2 log coordinate of the difference vanishes identically here,
    # so the sqrt in the norm amplifies ulp-level residue to ~1e-8; the
    # tolerance budgets for that, not for any genuine drift.
    times = np.linspace(0.0, 1.0, 65)
    mk = lambda: lift_piecewise_linear(
        CMPath(times, rng.standard_normal((65, 1)).cumsum(axis=0))
    )
    x, y = mk(), mk()
    h = CMPath(times, (times**2).reshape(-1, 1))
    base = holder_distance(x, y, 0.4)
    shifted = holder_distance(translate(x, h), translate(y, h), 0.4)
    assert abs(base - shifted) <= 1e-6


def _levy_coordinate_of_difference(x, y):
    """Antisymmetric log coordinate (0,1) of the full-interval group difference."""
    n = len(x.times) - 1
    diff = g2_multiply(g2_inverse(x.increment(0, n)), y.increment(0, n))
    a = g2_log(diff).level2
    return 0.5 * (a[0, 1] - a[1, 0])


def test_translation_changes_difference_area_dim2():
    """Regression pin for the known non-invariance in dimension >= 2.

    For x_t = t e1, y_t = t e2, h_t = t^2 e2 the area coordinate of the
    group difference is -1/2 before translation and -7/6 after: the cross
    integrals between h and the level-1 difference survive in the
    antisymmetric part.  The grid discretisation of t^2 costs O(N^-2).
    """
    n_points = 1025
    t = np.linspace(0.0, 1.0, n_points)
    e = np.zeros((n_points, 2))
    x_vals = e.copy()
    x_vals[:, 0] = t
    y_vals = e.copy()
    y_vals[:, 1] = t
    x = lift_piecewise_linear(CMPath(t, x_vals))
    y = lift_piecewise_linear(CMPath(t, y_vals))
    h_vals = e.copy()
    h_vals[:, 1] = t**2
    h = CMPath(t, h_vals)
    before = _levy_coordinate_of_difference(x, y)
    after = _levy_coordinate_of_difference(translate(x, h), translate(y, h))
    assert before == pytest.approx(-0.5, abs=1e-4)
    assert after == pytest.approx(-7.0 / 6.0, abs=1e-4)


@pytest.mark.xfail(
    strict=True,
    reason="homogeneous-distance translation invariance fails in dimension >= 2; "
    "the difference element itself changes (see the area regression above)",
)
def test_translation_invariance_dim2(rng):
    times = np.linspace(0.0, 1.0, 257)
    mk = lambda: lift_piecewise_linear(
        CMPath(times, rng.standard_normal((257, 2)).cumsum(axis=0) * 0.06)
    )
    worst = 0.0
    for _ in range(10):
        x, y = mk(), mk()
        h_vals = np.stack([np.sin(times), times**2], axis=1)
        h = CMPath(times, h_vals)
        base = holder_distance(x, y, 0.4)
        shifted = holder_distance(translate(x, h), translate(y, h), 0.4)
        worst = max(worst, abs(base - shifted))
    assert worst <= 1e-11


def test_q_variation_of_smooth_path():
    from roughball.paths import q_variation

    t = np.linspace(0.0, 1.0, 513)
    vals = t.reshape(-1, 1)  # straight line: 1-variation is exactly the length
    assert q_variation(vals, 1.0) == pytest.approx(1.0, abs=1e-12)
    # higher q can only shrink the variation of a monotone line
    assert q_variation(vals, 2.0) <= 1.0 + 1e-12

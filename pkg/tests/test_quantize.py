"""Lifted sample sets, covers, entropy bounds, codebooks, transport, rates."""

import numpy as np
import pytest

from oracles import brute_force_transport
from roughball import (
    CMPath,
    DiscreteMeasure,
    LiftedSet,
    SBPTransform,
    brownian_model,
    cm_ball_mesh,
    cover_growth_curve,
    embed_constant_increment,
    empirical_measures,
    empirical_rate_experiment,
    entropy_bounds_from_sbp,
    greedy_cover,
    holder_distance,
    lift_piecewise_linear,
    lloyd_codebook,
    pairwise_distance,
    quantization_error,
    wasserstein,
)
from roughball.smallball import synthetic_curve


def _brownian_set(n, seed, n_steps=64, dim=1):
    return LiftedSet.from_model(brownian_model(dim=dim), n, seed, n_steps=n_steps)


# ---------------------------------------------------------------- lifted sets


def test_constant_increment_distance_is_euclidean(rng):
    pts = rng.standard_normal((30, 1))
    ls = embed_constant_increment(pts)
    D = pairwise_distance(ls, ls, alpha=0.4)
    expected = np.abs(pts - pts.T)
    # the vanishing level-2 coordinate leaves sqrt(ulp) residue, hence 1e-7
    assert np.abs(D - expected).max() <= 1e-7


def test_pairwise_matches_pathwise_distance(rng):
    xs = _brownian_set(6, 11)
    ys = _brownian_set(5, 12)
    D = pairwise_distance(xs, ys, alpha=0.4)
    for i in range(6):
        for j in range(5):
            direct = holder_distance(xs.path(i), ys.path(j), 0.4, pair_set="dyadic")
            assert D[i, j] == pytest.approx(direct, rel=1e-10, abs=1e-12)


def test_pairwise_chunking_is_invisible(rng):
    xs = _brownian_set(7, 21)
    full = pairwise_distance(xs, xs, alpha=0.4)
    chunked = pairwise_distance(xs, xs, alpha=0.4, chunk_floats=2000)
    assert np.array_equal(full, chunked)
    assert np.abs(np.diag(full)).max() == 0.0
    assert np.abs(full - full.T).max() <= 1e-7


def test_lifted_set_from_paths_roundtrip(rng):
    xs = _brownian_set(4, 31, dim=2)
    rebuilt = LiftedSet.from_paths([xs.path(i) for i in range(4)])
    assert np.array_equal(rebuilt.B, xs.B)
    assert np.array_equal(rebuilt.C, xs.C)
    sub = xs.subset([2, 0])
    assert np.array_equal(sub.B[0], xs.B[2])
    assert sub.size == 2


def test_lifted_set_requires_power_of_two_steps():
    times = np.linspace(0.0, 1.0, 6)  # 5 steps
    vals = np.zeros((3, 6, 1))
    with pytest.raises(ValueError):
        LiftedSet.from_values(times, vals)


# ------------------------------------------------------------------- covering


def test_mesh_respects_radius_and_origin():
    mesh = cm_ball_mesh(brownian_model(), eta=1.5, n_steps=32, mesh_size=40, seed=2)
    assert mesh.lifted.size == 40
    assert np.all(mesh.cm_norms <= 1.5 + 1e-9)
    assert mesh.cm_norms[0] == 0.0  # zero path rides along
    assert mesh.radius == 1.5


def test_mesh_degenerates_at_zero_radius():
    mesh = cm_ball_mesh(brownian_model(), eta=0.0, n_steps=32, mesh_size=40, seed=2)
    assert mesh.lifted.size == 1
    assert np.abs(mesh.lifted.B).max() == 0.0


def test_greedy_cover_monotone_and_certified():
    mesh = cm_ball_mesh(brownian_model(), eta=1.0, n_steps=32, mesh_size=60, seed=4)
    eps_grid = [0.4, 0.7, 1.1, 1.8]
    counts = []
    for eps in eps_grid:
        res = greedy_cover(mesh, alpha=0.4, eps=eps)
        counts.append(res.n_centers)
        assert res.certified
        assert res.certificate_radius <= eps + 1e-12
        # every mesh point is within certificate radius of some chosen center
        centers = mesh.lifted.subset(list(res.center_indices))
        D = pairwise_distance(mesh.lifted, centers, alpha=0.4)
        assert D.min(axis=1).max() <= res.certificate_radius + 1e-12
    assert counts == sorted(counts, reverse=True)


def test_cover_curve_counts_align_with_direct_calls():
    mesh = cm_ball_mesh(brownian_model(), eta=1.0, n_steps=32, mesh_size=50, seed=6)
    eps_grid = [0.5, 0.9, 1.5]
    curve = cover_growth_curve(mesh, alpha=0.4, eps_grid=eps_grid)
    assert curve["probe_size"] == 50
    for eps, count in zip(curve["eps"], curve["n_centers"]):
        direct = greedy_cover(mesh, alpha=0.4, eps=float(eps))
        assert count == direct.n_centers
    assert curve["eps"] == sorted(curve["eps"], reverse=True)


def test_greedy_cover_accepts_spec_dict():
    res = greedy_cover(
        {"model": brownian_model(), "eta": 1.0, "n_steps": 32, "mesh_size": 30, "seed": 1},
        alpha=0.4,
        eps=0.8,
    )
    assert res.n_centers >= 1 and res.probe_size == 30


# ------------------------------------------------------------- entropy bounds


def _reciprocal_transform():
    eps = np.geomspace(0.05, 4.0, 60)
    return SBPTransform(synthetic_curve(eps, np.exp(-1.0 / eps)))


def test_transform_inverts_reciprocal_curve():
    tr = _reciprocal_transform()
    for target in (np.log(8.0), np.log(30.0), 5.0):
        assert tr.inverse(target) == pytest.approx(1.0 / target, rel=1e-9)
    for eps in (0.1, 0.5, 2.0):
        assert tr.value(eps) == pytest.approx(1.0 / eps, rel=1e-9)


def test_transform_flags_resolution_edges():
    tr = _reciprocal_transform()
    with pytest.raises(ValueError, match="resolution"):
        tr.value(1e-4)
    with pytest.raises(ValueError, match="resolution"):
        tr.inverse(1e9)


def test_entropy_upper_matches_dilation_identity():
    tr = _reciprocal_transform()
    eps = 0.5
    b = tr.value(eps)
    res = entropy_bounds_from_sbp(tr, eta=np.sqrt(2.0 * b), eps=eps)
    assert res["upper"] == pytest.approx(2.0 * b, rel=1e-9)
    assert res["dilation_identity"]["eps_over_eta"] == pytest.approx(
        eps / np.sqrt(2.0 * b), rel=1e-12
    )


def test_entropy_lower_at_zero_radius():
    tr = _reciprocal_transform()
    eps = 0.5
    res = entropy_bounds_from_sbp(tr, eta=0.0, eps=eps)
    expected = tr.value(2 * eps) - tr.value(eps)
    assert res["lower"] == pytest.approx(expected, rel=1e-9)
    assert res["lower"] <= 0.0  # ball of radius 0: the bound degenerates


# ------------------------------------------------------------------ codebooks


def test_lloyd_medoid_history_is_monotone():
    samples = _brownian_set(80, 17)
    cb = lloyd_codebook(samples, 4, seed=3, mode="medoid", max_iter=15)
    hist = np.array(cb.history)
    assert np.all(np.diff(hist) <= 1e-12)
    assert cb.mode == "medoid"
    assert cb.distortion == pytest.approx(hist[-1])


def test_lloyd_mean_mode_polish_snaps_to_members():
    samples = _brownian_set(120, 19)
    cb = lloyd_codebook(samples, 3, seed=5, mode="mean", max_iter=15)
    hist = np.array(cb.history)
    # the accelerated update is heuristic and may wobble; the contract is the
    # final snap to sample medoids plus a net improvement over the start
    assert cb.distortion <= hist[0] + 1e-12
    assert cb.distortion == pytest.approx(hist[-1])
    D = pairwise_distance(cb.centers, samples, alpha=cb.alpha)
    assert D.min(axis=1).max() <= 1e-7  # every center is an actual sample


def test_lloyd_exact_fit_when_codebook_covers_samples():
    samples = _brownian_set(5, 23)
    cb = lloyd_codebook(samples, 5, seed=1)
    assert cb.distortion == pytest.approx(0.0, abs=1e-12)


def test_lloyd_static_gaussian_small_run():
    pts = np.random.default_rng(8).standard_normal((200000, 1))
    cb = lloyd_codebook(embed_constant_increment(pts), 2, seed=2, tol=1e-8)
    codepoints = np.sort(cb.centers.B[:, -1, 0])
    assert codepoints[1] == pytest.approx(np.sqrt(2 / np.pi), abs=2e-2)
    assert codepoints[0] == pytest.approx(-np.sqrt(2 / np.pi), abs=2e-2)
    assert cb.distortion**2 == pytest.approx(1 - 2 / np.pi, abs=2e-2)


def test_codebook_dict_roundtrip():
    samples = _brownian_set(30, 29, dim=2)
    cb = lloyd_codebook(samples, 3, seed=7, mode="medoid", max_iter=8)
    again = type(cb).from_dict(cb.to_dict())
    assert np.array_equal(again.centers.B, cb.centers.B)
    # level-2 prefixes are rebuilt from per-step increments: last-bit rounding
    assert np.abs(again.centers.C - cb.centers.C).max() <= 1e-15
    assert again.distortion == cb.distortion
    assert again.history == cb.history


def test_quantization_error_reports_bound():
    eps = np.geomspace(0.2, 6.0, 40)
    tr_curve = synthetic_curve(eps, np.exp(-1.0 / eps))
    samples = _brownian_set(100, 31)
    cb = lloyd_codebook(samples, 8, seed=3, mode="medoid")
    out = quantization_error(cb, _brownian_set(150, 37), sbp_curve=tr_curve)
    assert out["n_centers"] == 8 and out["n_fresh"] == 150
    assert out["lower_bound"] == pytest.approx(1.0 / np.log(16.0), rel=1e-6)
    assert out["E_hat"] > 0 and out["E_hat_se"] > 0
    no_bound = quantization_error(cb, _brownian_set(150, 37))
    assert no_bound.get("lower_bound") is None


# ------------------------------------------------------------------ transport


def test_weights_must_sum_to_one():
    atoms = embed_constant_increment(np.array([[0.0], [1.0]]))
    with pytest.raises(ValueError, match="weights must sum to 1"):
        DiscreteMeasure(atoms, np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        DiscreteMeasure(atoms, np.array([-0.1, 1.1]))


def test_scalar_transport_toy():
    atoms = embed_constant_increment(np.array([[0.0], [1.0]]))
    mu = DiscreteMeasure(atoms, np.array([0.5, 0.5]))
    nu = DiscreteMeasure(atoms, np.array([0.25, 0.75]))
    assert wasserstein(mu, nu, r=1.0, alpha=0.4) == pytest.approx(0.25, abs=1e-9)
    assert wasserstein(mu, mu, r=1.0, alpha=0.4) == pytest.approx(0.0, abs=1e-12)


def test_transport_matches_enumeration_oracle(rng):
    # total support <= 6 keeps the spanning-tree enumeration tiny
    for _ in range(25):
        m = int(rng.integers(1, 4))
        n = int(rng.integers(1, 4))
        pts_mu = rng.standard_normal((m, 1))
        pts_nu = rng.standard_normal((n, 1))
        w1 = rng.random(m)
        w2 = rng.random(n)
        mu = DiscreteMeasure(embed_constant_increment(pts_mu), w1 / w1.sum())
        nu = DiscreteMeasure(embed_constant_increment(pts_nu), w2 / w2.sum())
        got = wasserstein(mu, nu, r=1.0, alpha=0.4)
        want = brute_force_transport(np.abs(pts_mu - pts_nu.T), mu.weights, nu.weights)
        assert got == pytest.approx(want, abs=1e-7)


def test_transport_cost_matrix_override(rng):
    a = embed_constant_increment(np.array([[0.0], [1.0]]))
    b = embed_constant_increment(np.array([[5.0], [9.0]]))
    mu = DiscreteMeasure(a, np.array([0.5, 0.5]))
    nu = DiscreteMeasure(b, np.array([0.5, 0.5]))
    flat = wasserstein(mu, nu, r=1.0, alpha=0.4, cost_matrix=np.ones((2, 2)))
    assert flat == pytest.approx(1.0, abs=1e-9)


def test_transport_triangle_inequality(rng):
    pts = rng.standard_normal((4, 1))
    atoms = embed_constant_increment(pts)
    ws = [rng.random(4) for _ in range(3)]
    mus = [DiscreteMeasure(atoms, w / w.sum()) for w in ws]
    d01 = wasserstein(mus[0], mus[1], 1.0, 0.4)
    d12 = wasserstein(mus[1], mus[2], 1.0, 0.4)
    d02 = wasserstein(mus[0], mus[2], 1.0, 0.4)
    assert d02 <= d01 + d12 + 1e-9


# ------------------------------------------------------------ empirical rates


def test_empirical_measures_weighting():
    model = brownian_model()
    atoms = LiftedSet.from_model(model, 3, 41, n_steps=32)
    out = empirical_measures(model, atoms, 400, 0.4, seed=9)
    for key in ("weighted", "uniform"):
        assert out[key].weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(out["uniform"].weights, 1 / 3)
    assert not np.allclose(out["weighted"].weights, 1 / 3)


def test_empirical_measures_tie_goes_to_lowest_index():
    pts = np.array([[0.0], [0.0], [5.0]])  # first two atoms identical
    atoms = embed_constant_increment(pts)
    out = empirical_measures(brownian_model(), atoms, 300, 0.4, seed=2)
    w = out["weighted"].weights
    assert w[1] == 0.0  # duplicates lose every tie to the earlier atom
    assert w[0] > 0.0


def test_rate_experiment_schema_and_domination():
    res = empirical_rate_experiment(
        brownian_model(), 0.4, 1.0, [4, 8], reps=2, m_weights=300,
        test_size=64, seed=3, n_steps=32, bootstrap=4,
    )
    rows = res["rows"]
    assert len(rows) == 4
    for row in rows:
        assert set(row) >= {"n", "rep", "W_weighted", "W_uniform", "prediction", "seed",
                            "weight_se", "dominates_within_noise"}
        assert row["dominates_within_noise"]
    assert res["beta"] == pytest.approx(1.0 / 2.0 - 0.4)
    assert set(res["summary"]) == {4, 8}
    for cell in res["summary"].values():
        assert cell["W_weighted_se"] > 0
    preds = [row["prediction"] for row in sorted(rows, key=lambda r: r["n"])]
    assert preds[0] >= preds[-1]


def test_rate_experiment_rejects_flat_exponent():
    with pytest.raises(ValueError, match="alpha must lie below"):
        empirical_rate_experiment(
            brownian_model(), 0.5, 1.0, [4], reps=1, m_weights=50, test_size=16, n_steps=32
        )

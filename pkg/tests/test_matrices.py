import numpy as np
import pytest

from coinlab.bounds import Params
from coinlab.matrices import (
    ConvergenceError,
    build_G,
    build_H,
    export_csv,
    norm_2x2,
    spectral_norm,
    verify_norm_bound,
)
from coinlab.walks import StoppingStrategy

ADV = StoppingStrategy.omniscient_extreme(direction=-1)


def test_build_H_decomposition():
    H = build_H(16, 3, ADV, seed=4)
    H.validate()
    assert H.stopped.shape == (16, 16)
    assert np.array_equal(H.stopped, H.unstopped + H.correction)
    # correction wipes entries strictly below each stop point
    for j, k in H.stop_points.items():
        assert np.array_equal(H.stopped[:k, j], H.unstopped[:k, j])
        assert not H.stopped[k:, j].any()
    untouched = [j for j in range(16) if j not in H.stopped_columns]
    assert not H.correction[:, untouched].any()


def test_build_H_custom_columns():
    H = build_H(10, 2, ADV, seed=1, stopped_columns=(4, 7))
    assert H.stopped_columns == (4, 7)
    assert set(H.stop_points) == {4, 7}
    with pytest.raises(ValueError):
        build_H(10, 2, ADV, seed=1, stopped_columns=(4,))
    with pytest.raises(ValueError):
        build_H(10, 11, ADV, seed=1)


def test_build_H_stop_points_follow_strategy():
    # direction -1 stops at the running minimum of each stopped column
    H = build_H(20, 4, ADV, seed=8)
    for j, k in H.stop_points.items():
        prefix = np.cumsum(H.unstopped[:, j])
        value = prefix[k - 1] if k >= 1 else 0
        assert value == prefix.min() or k == 0
        assert H.stopped[:, j].sum() == value


def test_build_G_decomposition():
    params = Params(n=12, t=2, m=8)
    G = build_G(params, ADV, seed=4)
    G.validate()
    assert G.stopped_sums.shape == (8, 12)
    assert np.array_equal(G.stopped_sums, G.full_sums + G.correction_sums)
    assert G.bad_columns == (10, 11)
    # bad columns are zeroed in every round
    assert not G.stopped_sums[:, [10, 11]].any()
    assert not G.full_sums[:, [10, 11]].any()


def test_build_G_bad_column_overlap_rejected():
    params = Params(n=12, t=2, m=4)
    with pytest.raises(ValueError):
        build_G(params, ADV, seed=0, bad_columns=(0, 5))  # 0 is a stopped column


def test_build_G_deterministic():
    params = Params(n=12, t=2, m=8)
    a = build_G(params, ADV, seed=4)
    b = build_G(params, ADV, seed=4)
    assert np.array_equal(a.stopped_sums, b.stopped_sums)
    c = build_G(params, ADV, seed=5)
    assert not np.array_equal(a.stopped_sums, c.stopped_sums)


def test_norm_2x2_against_numpy():
    rng = np.random.default_rng(31)
    for _ in range(200):
        m = rng.normal(size=(2, 2))
        assert norm_2x2(m) == pytest.approx(np.linalg.norm(m, 2), rel=1e-10, abs=1e-12)


def test_norm_2x2_shape_check():
    with pytest.raises(ValueError):
        norm_2x2(np.ones((3, 3)))


def test_spectral_norm_matches_2x2_oracle_thousand_matrices():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        m = rng.integers(-9, 10, size=(2, 2))
        if not np.any(m):
            m[0, 0] = 1
        expected = norm_2x2(m)
        estimate = spectral_norm(m, rel_tol=1e-6)
        worst = max(worst, abs(estimate.value - expected) / expected)
    assert worst <= 1e-6


def test_spectral_norm_matches_numpy_on_rectangles():
    rng = np.random.default_rng(6)
    for shape in ((5, 3), (3, 5), (8, 8), (1, 4)):
        m = rng.normal(size=shape)
        est = spectral_norm(m, rel_tol=1e-9)
        assert est.value == pytest.approx(np.linalg.norm(m, 2), rel=1e-7)


def test_spectral_norm_reports_certified_error():
    m = np.random.default_rng(1).normal(size=(6, 6))
    est = spectral_norm(m, rel_tol=1e-6)
    truth = np.linalg.norm(m, 2)
    assert abs(est.value - truth) / truth <= est.relative_error_bound + 1e-12
    assert est.relative_error_bound <= 1e-6
    assert est.iterations_used >= 1


def test_spectral_norm_deterministic():
    m = np.random.default_rng(9).normal(size=(7, 4))
    assert spectral_norm(m).value == spectral_norm(m).value


def test_spectral_norm_input_checks():
    with pytest.raises(ValueError):
        spectral_norm(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        spectral_norm(np.ones(4))
    with pytest.raises(ValueError):
        spectral_norm(np.ones((2, 2)), rel_tol=0.0)
    with pytest.raises(ValueError):
        spectral_norm(np.empty((0, 3)))


def test_spectral_norm_convergence_error_carries_best():
    m = np.random.default_rng(3).normal(size=(10, 10))
    with pytest.raises(ConvergenceError) as info:
        spectral_norm(m, rel_tol=1e-6, max_power_iters=1)
    assert info.value.best is not None
    assert info.value.best.value > 0


def test_verify_norm_bound_smoke():
    params = Params(n=16, t=1, m=16, epsilon=0.1)
    report = verify_norm_bound(params, trials=64, seed=2, workers=1)
    assert report.exceedance.verdict in ("pass", "inconclusive")
    assert report.triangle_checked
    assert report.probability_bound == pytest.approx(2 / 32)
    assert report.mean_norms["stopped_sums"] > 0
    # correction norms exist because one column is stopped every round
    assert report.mean_norms["correction_sums"] > 0


def test_verify_norm_bound_worker_invariance():
    params = Params(n=16, t=1, m=16, epsilon=0.1)
    a = verify_norm_bound(params, trials=128, seed=2, workers=1)
    b = verify_norm_bound(params, trials=128, seed=2, workers=3)
    assert a.exceedance.empirical.successes == b.exceedance.empirical.successes
    assert a.mean_norms == b.mean_norms


def test_export_csv_roundtrip(tmp_path):
    H = build_H(8, 1, ADV, seed=0)
    path = tmp_path / "h.csv"
    export_csv(H.stopped, path)
    back = np.loadtxt(path, delimiter=",", dtype=np.int64)
    assert np.array_equal(back, H.stopped)

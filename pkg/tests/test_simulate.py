import numpy as np
import pytest

from jtt.dataset import complete_graph
from jtt.errors import DatasetError
from jtt.simulate import (
    SimulationConfig,
    calibrate_nu,
    check_delta_min,
    evaluate_snr,
    generate_dataset,
    make_true_clusters,
    noncentrality,
    psi_matrix,
    run_monte_carlo,
    theoretical_baseline_mse,
)
from jtt import reference


def test_psi_matrix_examples():
    psi, root = psi_matrix(0.5, 3)
    expect = np.array([[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]])
    assert np.allclose(psi, expect)
    assert np.allclose(root @ root, psi, atol=1e-12)
    assert np.allclose(root, root.T, atol=1e-12)
    psi0, _ = psi_matrix(0.0, 4)
    assert np.array_equal(psi0, np.eye(4))


def test_psi_matrix_rejects_bad_args():
    with pytest.raises(ValueError):
        psi_matrix(1.0, 3)
    with pytest.raises(ValueError):
        psi_matrix(0.5, 0)


def test_make_true_clusters_block_sizes():
    blocks = make_true_clusters(20, 0.3)
    assert tuple(len(b) for b in blocks) == (4, 4, 3, 3, 3, 3)
    blocks = make_true_clusters(20, 0.6)
    assert tuple(len(b) for b in blocks) == (2,) * 8 + (1,) * 4
    assert make_true_clusters(6, 0.5) == ((1, 2), (3, 4), (5, 6))
    # contiguity and full coverage
    flat = [v for b in make_true_clusters(20, 0.3) for v in b]
    assert flat == list(range(1, 21))


def test_make_true_clusters_rejects_non_integral():
    with pytest.raises(DatasetError, match="non-integral"):
        make_true_clusters(20, 0.33)


def test_calibrate_nu_hand_value():
    # two clusters, p = 2, rho irrelevant for 1-dim slopes: S_idx = 1,
    # S_psi = 1, #pairs = 1, so nu = sqrt(3 * target).
    blocks = ((1,), (2,))
    assert calibrate_nu(blocks, 2, 0.5, 3.0) == pytest.approx(3.0)
    assert calibrate_nu(blocks, 2, 0.5, 1.0) == pytest.approx(np.sqrt(3.0))


def test_calibrate_nu_inverts_snr():
    for m, ratio, p, rho, target in [
        (20, 0.3, 20, 0.5, 3.0),
        (12, 0.5, 5, 0.5, 1.5),
        (9, 1 / 3, 8, 0.5, 10.0),
    ]:
        blocks = make_true_clusters(m, ratio)
        nu = calibrate_nu(blocks, p, rho, target)
        assert evaluate_snr(nu, blocks, p, rho) == pytest.approx(target, rel=1e-10)


def test_generate_dataset_shapes_and_intercept():
    cfg = SimulationConfig(m=6, p=4, n0=12, ratio=0.5, iterations=1)
    d, tm = generate_dataset(cfg, 7)
    assert (d.m, d.p, d.n0) == (6, 4, 12)
    for g in d.groups:
        assert np.all(g.X[:, 0] == 1.0)
        assert np.all(np.abs(g.X[:, 1:]) < 4.0)  # bounded uniform mixture
    assert tm.clusters == ((1, 2), (3, 4), (5, 6))
    assert np.allclose(tm.beta(1), tm.beta(2))
    assert not np.allclose(tm.beta(2), tm.beta(3))


def test_generate_dataset_noise_free_hook():
    cfg = SimulationConfig(m=4, p=3, n0=10, ratio=0.5, noise_sigma=0.0)
    d, tm = generate_dataset(cfg, 11)
    for j in range(1, 5):
        g = d.group(j)
        assert np.allclose(g.y, g.X @ tm.beta(j), atol=1e-12)


def test_generate_dataset_deterministic():
    cfg = SimulationConfig(m=6, p=4, n0=12, ratio=0.5)
    d1, _ = generate_dataset(cfg, 3)
    d2, _ = generate_dataset(cfg, 3)
    for a, b in zip(d1.groups, d2.groups):
        assert np.array_equal(a.y, b.y) and np.array_equal(a.X, b.X)
    d3, _ = generate_dataset(cfg, 4)
    assert not np.array_equal(d1.group(1).y, d3.group(1).y)


def test_noncentrality_zero_on_true_edges():
    cfg = SimulationConfig(m=6, p=4, n0=12, ratio=0.5)
    d, tm = generate_dataset(cfg, 5)
    for edge in tm.true_edges:
        assert noncentrality(d, tm, edge) == pytest.approx(0.0, abs=1e-10)
    assert noncentrality(d, tm, (1, 3)) > 1.0


def test_noncentrality_matches_projection_oracle():
    cfg = SimulationConfig(m=4, p=3, n0=12, ratio=0.5)
    d, tm = generate_dataset(cfg, 9)
    for edge in ((1, 3), (2, 4), (3, 4)):
        k, l = edge
        gk, gl = d.group(k), d.group(l)
        eta = np.concatenate([gk.X @ tm.beta(k), gl.X @ tm.beta(l)])
        P = reference.projection_matrix(np.vstack([gk.X, gl.X]))
        expected = float(eta @ (np.eye(len(eta)) - P) @ eta)
        assert noncentrality(d, tm, edge) == pytest.approx(expected, abs=1e-8)


def test_check_delta_min_structure():
    cfg = SimulationConfig(m=6, p=4, n0=12, ratio=0.5)
    d, tm = generate_dataset(cfg, 5)
    rep = check_delta_min(d, tm)
    assert rep.edges == complete_graph(6).edges
    non_true = [dv for dv, t in zip(rep.delta, rep.is_true_edge) if not t]
    assert rep.delta_min == pytest.approx(min(non_true))
    for dv, t, lb in zip(rep.delta, rep.is_true_edge, rep.lower_bound):
        if t:
            assert dv == pytest.approx(0.0, abs=1e-10) and lb == 0.0
        else:
            assert dv >= lb - 1e-8 * (1.0 + dv)


def test_theoretical_baseline_identity_designs():
    cfg = SimulationConfig(m=4, p=3, n0=12, ratio=0.5)
    d, _ = generate_dataset(cfg, 2)
    mse_f, mse_c = theoretical_baseline_mse(d)
    assert mse_f == pytest.approx(4 * 3 / 48)
    tr = sum(
        float(np.trace(np.linalg.inv(g.X.T @ g.X))) for g in d.groups
    )
    assert mse_c == pytest.approx(tr / 12)


def test_run_monte_carlo_small_cell():
    cfg = SimulationConfig(m=6, p=4, n0=60, ratio=0.5, iterations=4, base_seed=100)
    rep = run_monte_carlo(cfg)
    assert rep.m_star == 3
    assert rep.iteration_seeds == (100, 101, 102, 103)
    assert len(rep.accuracy_per_iteration) == 4
    assert 0.0 <= rep.accuracy_pct <= 100.0
    for method in ("jtt1", "jtt2"):
        assert rep.mse_f[method] > 0 and rep.mse_c[method] > 0
        assert rep.rmse_f[method] == pytest.approx(
            100.0 * rep.mse_f[method] / rep.baseline_mse_f
        )
    assert not rep.failures


def test_run_monte_carlo_reproducible_and_worker_invariant():
    cfg1 = SimulationConfig(m=4, p=3, n0=30, ratio=0.5, iterations=3, base_seed=7)
    rep1 = run_monte_carlo(cfg1)
    rep2 = run_monte_carlo(cfg1)
    assert rep1.mse_f == rep2.mse_f and rep1.mse_c == rep2.mse_c
    cfg2 = SimulationConfig(
        m=4, p=3, n0=30, ratio=0.5, iterations=3, base_seed=7, workers=2
    )
    rep3 = run_monte_carlo(cfg2)
    assert rep3.mse_f == rep1.mse_f
    assert rep3.accuracy_pct == rep1.accuracy_pct


def test_report_serialization(tmp_path):
    cfg = SimulationConfig(m=4, p=3, n0=30, ratio=0.5, iterations=2, base_seed=1)
    rep = run_monte_carlo(cfg)
    out = tmp_path / "report.json"
    rep.save_json(out)
    import json

    payload = json.loads(out.read_text())
    assert payload["config"]["m"] == 4
    assert set(payload["rmse_f"]) == {"jtt1", "jtt2"}

    table = tmp_path / "table.csv"
    rep.save_table_csv(table)
    lines = table.read_text().strip().splitlines()
    assert lines[0] == "m,n0,p,ratio,method,accuracy,rmse_f,rmse_c,runtime_s"
    assert len(lines) == 3

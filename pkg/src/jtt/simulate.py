"""Synthetic benchmark: data generation, diagnostics, Monte Carlo harness.

The generator draws group designs with an intercept plus correlated uniform
columns, assigns true coefficients that are constant within contiguous
cluster blocks, and calibrates the coefficient spacing so the signal-to-noise
ratio over true-cluster differences hits a target (3 by default). The harness
repeats generate -> fit -> score and reports clustering accuracy, MSEs, and
MSEs relative to the group-wise OLS baselines.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import GraphSpec, GroupData, GroupDataset, complete_graph
from .errors import DatasetError, JTTError
from .estimate import fit_jtt
from .gcp import fit_groups

__all__ = [
    "TrueModel",
    "SimulationConfig",
    "SimulationReport",
    "NoncentralityReport",
    "psi_matrix",
    "make_true_clusters",
    "calibrate_nu",
    "evaluate_snr",
    "generate_dataset",
    "noncentrality",
    "check_delta_min",
    "theoretical_baseline_mse",
    "run_monte_carlo",
]


def psi_matrix(rho: float, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """AR(1)-style correlation matrix with entries rho^|i-j| and its
    symmetric square root."""
    if not abs(rho) < 1:
        raise ValueError(f"|rho| must be < 1, got {rho}")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    idx = np.arange(dim)
    psi = rho ** np.abs(idx[:, None] - idx[None, :])
    w, Q = np.linalg.eigh(psi)
    root = (Q * np.sqrt(np.maximum(w, 0.0))) @ Q.T
    return psi, root


def make_true_clusters(m: int, ratio: float) -> tuple[tuple[int, ...], ...]:
    """Contiguous balanced blocks; the remainder goes to the lowest-indexed
    blocks. ``ratio * m`` must be integral."""
    m_star_f = ratio * m
    m_star = round(m_star_f)
    if abs(m_star_f - m_star) > 1e-9 or m_star < 1:
        raise DatasetError(f"non-integral cluster count: ratio={ratio}, m={m}")
    base, rem = divmod(m, m_star)
    sizes = [base + 1] * rem + [base] * (m_star - rem)
    blocks = []
    start = 1
    for size in sizes:
        blocks.append(tuple(range(start, start + size)))
        start += size
    return tuple(blocks)


def _cluster_edge_sums(m_star: int, p: int, rho: float) -> tuple[int, float, int]:
    """(sum of (k-l)^2 over cluster pairs, 1'Psi 1 over dim p-1, #pairs)."""
    pairs = [(k, l) for k in range(1, m_star + 1) for l in range(k + 1, m_star + 1)]
    s_idx = sum((k - l) ** 2 for k, l in pairs)
    psi, _ = psi_matrix(rho, p - 1)
    s_psi = float(np.sum(psi))
    return s_idx, s_psi, len(pairs)


def calibrate_nu(
    partition: tuple[tuple[int, ...], ...], p: int, rho: float, target_snr: float
) -> float:
    """Coefficient spacing that achieves the target signal-to-noise ratio."""
    m_star = len(partition)
    if m_star < 2:
        raise DatasetError(f"need at least 2 true clusters, got {m_star}")
    if p < 2:
        raise DatasetError(f"need p >= 2 (intercept plus slopes), got p={p}")
    s_idx, s_psi, n_pairs = _cluster_edge_sums(m_star, p, rho)
    return math.sqrt(target_snr * 3.0 * (p - 1) * n_pairs / (s_idx * s_psi))


def evaluate_snr(
    nu: float, partition: tuple[tuple[int, ...], ...], p: int, rho: float
) -> float:
    """Direct numeric evaluation of the SNR definition, for cross-checking."""
    m_star = len(partition)
    psi, _ = psi_matrix(rho, p - 1)
    pairs = [(k, l) for k in range(1, m_star + 1) for l in range(k + 1, m_star + 1)]
    total = 0.0
    for k, l in pairs:
        theta_diff = nu * (k - l) * np.ones(p - 1)
        total += float(theta_diff @ psi @ theta_diff)
    return total / (3.0 * (p - 1) * len(pairs))


@dataclass(frozen=True)
class TrueModel:
    clusters: tuple[tuple[int, ...], ...]
    nu: float
    p: int
    sigma2: float = 1.0

    @property
    def m_star(self) -> int:
        return len(self.clusters)

    @property
    def true_edges(self) -> frozenset[tuple[int, int]]:
        out = set()
        for block in self.clusters:
            for a in block:
                for b in block:
                    if a < b:
                        out.add((a, b))
        return frozenset(out)

    def xi(self, i: int) -> np.ndarray:
        """Common coefficient vector of the i-th true cluster."""
        return self.nu * i * np.ones(self.p)

    def beta(self, j: int) -> np.ndarray:
        for i, block in enumerate(self.clusters, start=1):
            if j in block:
                return self.xi(i)
        raise KeyError(f"vertex {j} not in any true cluster")


@dataclass(frozen=True)
class SimulationConfig:
    m: int = 20
    p: int = 20
    n0: int = 200
    ratio: float = 0.3
    snr: float = 3.0
    rho: float = 0.5
    iterations: int = 100
    base_seed: int = 0
    workers: int = 1
    alpha: object = "hat"
    noise_sigma: float = 1.0  # test hook; 0 gives noise-free responses

    def __post_init__(self):
        if self.p < 2:
            raise DatasetError(f"p must be >= 2, got {self.p}")
        if self.n0 < self.p:
            raise DatasetError(f"n0 must be >= p, got n0={self.n0}, p={self.p}")
        if self.iterations < 1:
            raise DatasetError("iterations must be >= 1")
        if self.workers < 1:
            raise DatasetError("workers must be >= 1")


_MAX_REGEN = 5


def generate_dataset(
    cfg: SimulationConfig, iteration_seed: int
) -> tuple[GroupDataset, TrueModel]:
    """One synthetic replication, deterministic given the seed.

    Designs are ``(1, Z Psi(rho)^{1/2})`` with Z entries uniform on (-1, 1);
    responses are Gaussian around the group's true mean. A rank-deficient
    draw (vanishingly rare) is regenerated from a perturbed seed.
    """
    clusters = make_true_clusters(cfg.m, cfg.ratio)
    nu = calibrate_nu(clusters, cfg.p, cfg.rho, cfg.snr)
    tm = TrueModel(clusters=clusters, nu=nu, p=cfg.p)
    _, psi_root = psi_matrix(cfg.rho, cfg.p - 1)
    for attempt in range(_MAX_REGEN):
        rng = np.random.default_rng(iteration_seed + attempt * 1_000_003)
        groups = []
        ok = True
        for j in range(1, cfg.m + 1):
            Z = rng.uniform(-1.0, 1.0, size=(cfg.n0, cfg.p - 1))
            X = np.column_stack([np.ones(cfg.n0), Z @ psi_root])
            mean = X @ tm.beta(j)
            y = mean + cfg.noise_sigma * rng.standard_normal(cfg.n0)
            if np.linalg.matrix_rank(X) < cfg.p:
                ok = False
                break
            groups.append(GroupData(index=j, y=y, X=X))
        if ok:
            return GroupDataset(groups=tuple(groups)), tm
    raise JTTError("could not generate a full-rank design after retries")


def noncentrality(d: GroupDataset, tm: TrueModel, edge: tuple[int, int]) -> float:
    """Mean-shift parameter of the edge statistic.

    Zero on true edges; positive whenever the two groups' true mean vectors
    are not jointly representable by one pooled coefficient vector.
    """
    k, l = edge
    gk, gl = d.group(k), d.group(l)
    eta = np.concatenate([gk.X @ tm.beta(k), gl.X @ tm.beta(l)])
    Xkl = np.vstack([gk.X, gl.X])
    coef, _, _, _ = np.linalg.lstsq(Xkl, eta, rcond=None)
    resid = eta - Xkl @ coef
    return float(resid @ resid) / tm.sigma2


@dataclass(frozen=True)
class NoncentralityReport:
    edges: tuple[tuple[int, int], ...]
    delta: tuple[float, ...]
    is_true_edge: tuple[bool, ...]
    lower_bound: tuple[float, ...]  # eigenvalue bound; 0.0 on true edges
    delta_min: float  # over non-true edges; inf if all edges are true

    def to_dict(self) -> dict:
        return {
            "delta_min": self.delta_min,
            "edges": [
                {
                    "k": e[0],
                    "l": e[1],
                    "delta": dv,
                    "true_edge": t,
                    "lower_bound": lb,
                }
                for e, dv, t, lb in zip(
                    self.edges, self.delta, self.is_true_edge, self.lower_bound
                )
            ],
        }

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def check_delta_min(
    d: GroupDataset, tm: TrueModel, graph: GraphSpec | None = None
) -> NoncentralityReport:
    """Noncentrality of every edge plus the eigenvalue lower bound.

    For a non-true edge the bound is ``lambda_min(M_k M_kl^{-1} M_l)`` times
    the squared coefficient gap over the noise variance.
    """
    if graph is None:
        graph = complete_graph(d.m)
    true_edges = tm.true_edges
    deltas, truth, bounds = [], [], []
    for edge in graph.edges:
        k, l = edge
        delta = noncentrality(d, tm, edge)
        is_true = edge in true_edges
        if is_true:
            bound = 0.0
        else:
            Mk = d.group(k).X.T @ d.group(k).X
            Ml = d.group(l).X.T @ d.group(l).X
            A = Mk @ np.linalg.solve(Mk + Ml, Ml)
            lam_min = float(np.linalg.eigvalsh(0.5 * (A + A.T))[0])
            gamma = tm.beta(k) - tm.beta(l)
            bound = lam_min * float(gamma @ gamma) / tm.sigma2
        deltas.append(delta)
        truth.append(is_true)
        bounds.append(bound)
    non_true = [dv for dv, t in zip(deltas, truth) if not t]
    delta_min = min(non_true) if non_true else float("inf")
    return NoncentralityReport(
        edges=graph.edges,
        delta=tuple(deltas),
        is_true_edge=tuple(truth),
        lower_bound=tuple(bounds),
        delta_min=delta_min,
    )


def theoretical_baseline_mse(d: GroupDataset) -> tuple[float, float]:
    """Expected MSEs of group-wise OLS: fitted values and coefficients."""
    mse_f = d.m * d.p / d.n
    tr_sum = 0.0
    for g in d.groups:
        M = g.X.T @ g.X
        tr_sum += float(np.trace(np.linalg.inv(M)))
    return mse_f, tr_sum / (d.m * d.p)


@dataclass(frozen=True)
class SimulationReport:
    config: SimulationConfig
    accuracy_pct: float
    mean_m_hat: float
    m_star: int
    mse_f: dict[str, float]
    mse_c: dict[str, float]
    rmse_f: dict[str, float]
    rmse_c: dict[str, float]
    baseline_mse_f: float
    baseline_mse_c: float
    empirical_baseline_mse_f: float
    empirical_baseline_mse_c: float
    accuracy_per_iteration: tuple[bool, ...]
    iteration_seeds: tuple[int, ...]
    mean_fit_seconds: float
    failures: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        cfg = self.config
        return {
            "config": {
                "m": cfg.m, "p": cfg.p, "n0": cfg.n0, "ratio": cfg.ratio,
                "snr": cfg.snr, "rho": cfg.rho, "iterations": cfg.iterations,
                "base_seed": cfg.base_seed,
                "alpha": cfg.alpha if isinstance(cfg.alpha, str) else float(cfg.alpha),
            },
            "accuracy_pct": self.accuracy_pct,
            "mean_m_hat": self.mean_m_hat,
            "m_star": self.m_star,
            "mse_f": self.mse_f,
            "mse_c": self.mse_c,
            "rmse_f": self.rmse_f,
            "rmse_c": self.rmse_c,
            "baseline_mse_f": self.baseline_mse_f,
            "baseline_mse_c": self.baseline_mse_c,
            "empirical_baseline_mse_f": self.empirical_baseline_mse_f,
            "empirical_baseline_mse_c": self.empirical_baseline_mse_c,
            "mean_fit_seconds": self.mean_fit_seconds,
            "iteration_seeds": list(self.iteration_seeds),
            "failures": list(self.failures),
        }

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def table_rows(self) -> list[dict]:
        cfg = self.config
        rows = []
        for method in ("jtt1", "jtt2"):
            rows.append(
                {
                    "m": cfg.m, "n0": cfg.n0, "p": cfg.p, "ratio": cfg.ratio,
                    "method": method,
                    "accuracy": round(self.accuracy_pct, 1),
                    "rmse_f": round(self.rmse_f[method], 1),
                    "rmse_c": round(self.rmse_c[method], 1),
                    "runtime_s": round(self.mean_fit_seconds, 4),
                }
            )
        return rows

    def save_table_csv(self, path: str | Path) -> None:
        rows = self.table_rows()
        with Path(path).open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)


def _one_iteration(cfg: SimulationConfig, seed: int) -> dict:
    d, tm = generate_dataset(cfg, seed)
    graph = complete_graph(cfg.m)
    t0 = time.perf_counter()
    fit = fit_jtt(d, graph, alpha=cfg.alpha, variant="both")
    fit_seconds = time.perf_counter() - t0

    exact = fit.assignment.members == tm.clusters
    n, m, p = d.n, d.m, d.p

    def mse_pair(betas: dict[int, np.ndarray]) -> tuple[float, float]:
        sf = 0.0
        sc = 0.0
        for j in range(1, m + 1):
            diff = tm.beta(j) - betas[j]
            sf += float(np.sum((d.group(j).X @ diff) ** 2))
            sc += float(diff @ diff)
        return sf / n, sc / (m * p)

    gols = {j: f.beta_hat for j, f in fit_groups(d).items()}
    out = {
        "exact": exact,
        "m_hat": fit.assignment.m_hat,
        "fit_seconds": fit_seconds,
        "jtt1": mse_pair(fit.beta_jtt1),
        "jtt2": mse_pair(fit.beta_jtt2),
        "gols": mse_pair(gols),
        "baseline": theoretical_baseline_mse(d),
    }
    return out


def _safe_iteration(args) -> tuple[int, dict | None, str | None]:
    cfg, seed = args
    try:
        return seed, _one_iteration(cfg, seed), None
    except JTTError as exc:
        return seed, None, f"seed {seed}: {exc}"


def run_monte_carlo(cfg: SimulationConfig) -> SimulationReport:
    """Repeat generate -> fit -> score; iteration seeds are
    ``base_seed + index`` so results do not depend on the worker count."""
    seeds = [cfg.base_seed + i for i in range(cfg.iterations)]
    jobs = [(cfg, s) for s in seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            raw = list(pool.map(_safe_iteration, jobs))
    else:
        raw = [_safe_iteration(j) for j in jobs]

    results = [r for _, r, err in raw if err is None]
    failures = tuple(err for _, _, err in raw if err is not None)
    if not results:
        raise JTTError("every Monte Carlo iteration failed: " + "; ".join(failures))

    k = len(results)
    accuracy = 100.0 * sum(r["exact"] for r in results) / k
    mean_m_hat = sum(r["m_hat"] for r in results) / k
    mse_f = {}
    mse_c = {}
    for method in ("jtt1", "jtt2", "gols"):
        mse_f[method] = math.fsum(r[method][0] for r in results) / k
        mse_c[method] = math.fsum(r[method][1] for r in results) / k
    base_f = math.fsum(r["baseline"][0] for r in results) / k
    base_c = math.fsum(r["baseline"][1] for r in results) / k
    rmse_f = {m_: 100.0 * mse_f[m_] / base_f for m_ in ("jtt1", "jtt2")}
    rmse_c = {m_: 100.0 * mse_c[m_] / base_c for m_ in ("jtt1", "jtt2")}

    clusters = make_true_clusters(cfg.m, cfg.ratio)
    return SimulationReport(
        config=cfg,
        accuracy_pct=accuracy,
        mean_m_hat=mean_m_hat,
        m_star=len(clusters),
        mse_f=mse_f,
        mse_c=mse_c,
        rmse_f=rmse_f,
        rmse_c=rmse_c,
        baseline_mse_f=base_f,
        baseline_mse_c=base_c,
        empirical_baseline_mse_f=mse_f["gols"],
        empirical_baseline_mse_c=mse_c["gols"],
        accuracy_per_iteration=tuple(bool(r["exact"]) for r in results),
        iteration_seeds=tuple(seeds),
        mean_fit_seconds=math.fsum(r["fit_seconds"] for r in results) / k,
        failures=failures,
    )

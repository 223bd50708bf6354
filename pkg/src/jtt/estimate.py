"""Post-selection estimation.

After edge selection and clustering, coefficients are estimated either by
cluster-wise OLS (JTT1) or by ridge shrinkage toward a distance-weighted
average of neighboring clusters' OLS estimates, with the shrinkage strength
chosen per cluster by a modified C_p criterion (JTT2).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import GraphSpec, GroupDataset, validate_dataset
from .errors import DatasetError, RankDeficientError
from .gcp import PenaltyParams, alpha_check, alpha_hat, fit_groups, select_edges
from .partition import ClusterAssignment, ClusterGraph, connected_components, derive_cluster_edges

__all__ = [
    "ClusterDesign",
    "ClusterEstimate",
    "FitResult",
    "build_cluster_design",
    "cluster_ols",
    "edge_weight",
    "weighted_anchor",
    "ridge_to_anchor",
    "mcp_criterion",
    "optimize_lambda",
    "fit_jtt",
]


@dataclass(frozen=True)
class ClusterDesign:
    """Stacked design of one cluster with its spectral decomposition.

    ``d`` holds the squared singular values of the stacked design, so
    ``X = U diag(sqrt(d)) V'``. ``z = U'y``. ``s2`` is the OLS residual
    variance with ``n_tilde - p`` degrees of freedom (NaN when the cluster
    has no residual degrees of freedom).
    """

    index: int
    y: np.ndarray
    X: np.ndarray
    U: np.ndarray
    d: np.ndarray
    V: np.ndarray
    z: np.ndarray
    s2: float

    @property
    def n_tilde(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def mcp_defined(self) -> bool:
        return self.n_tilde - self.p - 2 > 0 and np.isfinite(self.s2) and self.s2 > 0


@dataclass(frozen=True)
class ClusterEstimate:
    index: int
    xi_ols: np.ndarray
    anchor: np.ndarray | None
    lambda_hat: float
    xi_pen: np.ndarray
    mcp_fallback: bool = False  # True when MC_p was undefined and OLS was used


@dataclass(frozen=True)
class FitResult:
    assignment: ClusterAssignment
    cluster_graph: ClusterGraph
    estimates: tuple[ClusterEstimate, ...]
    alpha: float
    selection: "object"
    beta_jtt1: dict[int, np.ndarray]
    beta_jtt2: dict[int, np.ndarray] | None
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "alpha": self.alpha,
            "clusters": [list(b) for b in self.assignment.members],
            "per_cluster": [
                {
                    "cluster": est.index,
                    "xi_ols": est.xi_ols.tolist(),
                    "lambda_hat": est.lambda_hat,
                    "xi_pen": est.xi_pen.tolist(),
                }
                for est in self.estimates
            ],
            "per_group_beta": {
                "jtt1": {str(j): b.tolist() for j, b in sorted(self.beta_jtt1.items())},
                "jtt2": (
                    {str(j): b.tolist() for j, b in sorted(self.beta_jtt2.items())}
                    if self.beta_jtt2 is not None
                    else None
                ),
            },
        }
        return out

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def build_cluster_design(d: GroupDataset, index: int, members) -> ClusterDesign:
    """Stack the cluster's groups and decompose the design."""
    Xs = np.vstack([d.group(j).X for j in members])
    ys = np.concatenate([d.group(j).y for j in members])
    U, sv, Vt = np.linalg.svd(Xs, full_matrices=False)
    tol = max(Xs.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
    if sv.size == 0 or sv[-1] <= tol:
        raise RankDeficientError(f"stacked design of cluster {index} is rank deficient")
    z = U.T @ ys
    df = ys.shape[0] - Xs.shape[1]
    if df > 0:
        rss0 = float(ys @ ys - z @ z)
        s2 = max(rss0, 0.0) / df
    else:
        s2 = float("nan")
    return ClusterDesign(
        index=index, y=ys, X=Xs, U=U, d=sv**2, V=Vt.T, z=z, s2=s2
    )


def cluster_ols(cd: ClusterDesign) -> np.ndarray:
    """Least squares for the stacked cluster, evaluated spectrally."""
    return cd.V @ (cd.z / np.sqrt(cd.d))


def edge_weight(xi_k: np.ndarray, xi_l: np.ndarray) -> float:
    """Inverse-distance weight, clamped so coincident estimates stay finite."""
    dist = float(np.linalg.norm(xi_k - xi_l))
    eps_w = 1e-12 * (1.0 + float(np.linalg.norm(xi_k)) + float(np.linalg.norm(xi_l)))
    return 1.0 / max(dist, eps_w)


def weighted_anchor(
    i: int, xi_by_cluster: dict[int, np.ndarray], cg: ClusterGraph
) -> np.ndarray | None:
    """Distance-weighted average of the neighboring clusters' OLS estimates.

    Returns None for a cluster with no incident cluster-level edge.
    """
    neighbors = cg.neighbors(i)
    if not neighbors:
        return None
    xi_i = xi_by_cluster[i]
    num = np.zeros_like(xi_i)
    den = 0.0
    for nb in neighbors:
        w = edge_weight(xi_i, xi_by_cluster[nb])
        num += w * xi_by_cluster[nb]
        den += w
    return num / den


def ridge_to_anchor(cd: ClusterDesign, b: np.ndarray, lam: float) -> np.ndarray:
    """Shrunk estimate ``(X'X + lam I)^{-1} (X'y + lam b)``, spectrally.

    ``lam = 0`` is admitted and reproduces the OLS estimate.
    """
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    wb = cd.V.T @ b
    t = (np.sqrt(cd.d) * cd.z + lam * wb) / (cd.d + lam)
    return cd.V @ t


def mcp_criterion(cd: ClusterDesign, b: np.ndarray, lam: float) -> float:
    """Modified C_p in its spectral form (no matrix inversion).

    Requires ``n_tilde - p - 2 > 0``; the shrinkage residual term uses the
    rotated anchor coordinates ``sqrt(d) * (V'b)``.
    """
    nt, p = cd.n_tilde, cd.p
    if nt - p - 2 <= 0:
        raise ValueError(f"MC_p undefined: n_tilde - p - 2 = {nt - p - 2}")
    shrink = lam / (cd.d + lam)
    a = cd.z - np.sqrt(cd.d) * (cd.V.T @ b)
    fit_term = float(np.sum(shrink**2 * a**2)) / cd.s2
    df_term = 2.0 * (nt - p) / (nt - p - 2) * (p - float(np.sum(shrink)))
    return nt - p + fit_term + df_term


_GRID_POINTS = 81
_GOLDEN = (3.0 - np.sqrt(5.0)) / 2.0


def _golden_section(f, lo: float, hi: float, tol: float = 1e-8) -> tuple[float, float]:
    """Golden-section minimization of ``f`` on [lo, hi]."""
    x1 = lo + _GOLDEN * (hi - lo)
    x2 = hi - _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol * (1.0 + abs(lo) + abs(hi)):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = lo + _GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = hi - _GOLDEN * (hi - lo)
            f2 = f(x2)
    xm = 0.5 * (lo + hi)
    return xm, f(xm)


def optimize_lambda(cd: ClusterDesign, b: np.ndarray) -> tuple[float, bool]:
    """Minimize MC_p over lambda > 0; returns (lambda_hat, fallback_flag).

    Coarse geometric grid, then golden-section refinement of the bracketing
    interval in log-lambda. Returns 0 (plain OLS) when no positive lambda
    improves on the lambda -> 0 limit, or when MC_p is undefined for this
    cluster (flag set).
    """
    if not cd.mcp_defined:
        return 0.0, True
    scale = cd.s2 * float(cd.d[-1])
    grid = np.geomspace(1e-8, 1e8, _GRID_POINTS) * scale
    vals = np.array([mcp_criterion(cd, b, lam) for lam in grid])
    i = int(np.argmin(vals))
    lam_best, val_best = float(grid[i]), float(vals[i])
    lo = np.log(grid[max(i - 1, 0)])
    hi = np.log(grid[min(i + 1, len(grid) - 1)])
    if hi > lo:
        t, ft = _golden_section(lambda t: mcp_criterion(cd, b, float(np.exp(t))), lo, hi)
        if ft < val_best:
            lam_best, val_best = float(np.exp(t)), float(ft)
    if val_best >= mcp_criterion(cd, b, 0.0):
        return 0.0, False
    return lam_best, False


def _resolve_alpha(alpha, d: GroupDataset) -> PenaltyParams:
    if isinstance(alpha, PenaltyParams):
        return alpha
    if alpha == "hat":
        return alpha_hat(d.N, d.p, d.m, d.n0)
    if alpha == "check":
        return alpha_check(d.p, d.m, d.n0)
    return PenaltyParams(alpha=float(alpha))


def fit_jtt(
    d: GroupDataset,
    g: GraphSpec,
    alpha="hat",
    variant: str = "both",
) -> FitResult:
    """End-to-end pipeline: edge selection, clustering, estimation.

    ``alpha`` is ``"hat"``, ``"check"``, a positive float, or PenaltyParams.
    ``variant`` is ``"jtt1"``, ``"jtt2"``, or ``"both"``; JTT2 always also
    produces the JTT1 (cluster OLS) estimates, since they anchor the ridge.
    """
    if variant not in ("jtt1", "jtt2", "both"):
        raise ValueError(f"unknown variant {variant!r}")
    report = validate_dataset(d)
    if not report.passed:
        raise DatasetError("dataset validation failed: " + "; ".join(report.messages))
    params = _resolve_alpha(alpha, d)

    t0 = time.perf_counter()
    fits = fit_groups(d)
    sel = select_edges(d, g, params, fits=fits)
    assignment = connected_components(d.m, sel.selected)
    cg = derive_cluster_edges(g, assignment)
    t_select = time.perf_counter() - t0

    designs = {
        i: build_cluster_design(d, i, members)
        for i, members in enumerate(assignment.members, start=1)
    }
    xi_ols = {i: cluster_ols(cd) for i, cd in designs.items()}
    t_jtt1 = time.perf_counter() - t0 - t_select

    estimates = []
    want_jtt2 = variant in ("jtt2", "both")
    for i, cd in designs.items():
        anchor = weighted_anchor(i, xi_ols, cg) if want_jtt2 else None
        if anchor is None:
            lam, fallback = 0.0, False
            xi_pen = xi_ols[i]
        else:
            lam, fallback = optimize_lambda(cd, anchor)
            xi_pen = ridge_to_anchor(cd, anchor, lam) if lam > 0 else xi_ols[i]
        estimates.append(
            ClusterEstimate(
                index=i, xi_ols=xi_ols[i], anchor=anchor,
                lambda_hat=lam, xi_pen=xi_pen, mcp_fallback=fallback,
            )
        )
    t_jtt2 = time.perf_counter() - t0 - t_select - t_jtt1

    v2c = assignment.vertex_to_cluster
    beta_jtt1 = {j: xi_ols[v2c[j]] for j in range(1, d.m + 1)}
    beta_jtt2 = (
        {j: estimates[v2c[j] - 1].xi_pen for j in range(1, d.m + 1)}
        if want_jtt2
        else None
    )
    return FitResult(
        assignment=assignment,
        cluster_graph=cg,
        estimates=tuple(estimates),
        alpha=params.alpha,
        selection=sel,
        beta_jtt1=beta_jtt1,
        beta_jtt2=beta_jtt2,
        timings={
            "select_s": t_select,
            "jtt1_s": t_jtt1,
            "jtt2_s": t_jtt2,
            "total_s": time.perf_counter() - t0,
        },
    )

"""Edge scoring: group-wise OLS, GC_p criteria, penalty parameters, selection.

The decision for edge (k, l) compares the model in which every group keeps
its own coefficient vector against the model that pools groups k and l. With
the pooled variance estimate the comparison reduces to a single statistic per
edge, ``delta_stat = (joint_rss - rss_k - rss_l) / s^2``; the edge is kept
whenever ``delta_stat <= alpha * p``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import GraphSpec, GroupData, GroupDataset
from .errors import DegenerateVarianceError, RankDeficientError

__all__ = [
    "GroupFit",
    "PenaltyParams",
    "EdgeScore",
    "SelectionResult",
    "group_ols",
    "joint_rss",
    "pooled_variance",
    "gcp_base",
    "gcp_candidate",
    "gcp_edge_difference",
    "alpha_hat",
    "alpha_check",
    "select_edges",
]


@dataclass(frozen=True)
class GroupFit:
    """OLS fit of one group: coefficients, residual sum of squares, Q factor."""

    beta_hat: np.ndarray
    rss: float
    Q: np.ndarray  # thin orthogonal factor of the design, cached for reuse


@dataclass(frozen=True)
class PenaltyParams:
    """Penalty strength for the GC_p comparison.

    ``beta_offset`` and ``B`` are populated only for the data-adaptive
    ``alpha_hat`` rule; other construction routes leave them as None.
    """

    alpha: float
    beta_offset: float | None = None
    B: float | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class EdgeScore:
    edge: tuple[int, int]
    joint_rss: float
    rss_sum: float  # rss_k + rss_l
    delta_stat: float  # (joint_rss - rss_k - rss_l) / s^2
    gcp_diff: float  # delta_stat - alpha * p

    @property
    def selected(self) -> bool:
        # Ties select the edge.
        return self.gcp_diff <= 0.0


@dataclass(frozen=True)
class SelectionResult:
    s2: float
    alpha: float
    scores: tuple[EdgeScore, ...]
    selected: tuple[tuple[int, int], ...]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "s2": self.s2,
            "edges": [
                {
                    "k": sc.edge[0],
                    "l": sc.edge[1],
                    "delta_stat": sc.delta_stat,
                    "gcp_diff": sc.gcp_diff,
                    "selected": sc.selected,
                }
                for sc in self.scores
            ],
        }

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def _qr_rss(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Least squares via thin QR. Returns (beta, Q, rss)."""
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or np.min(diag) <= max(X.shape) * np.finfo(float).eps * np.max(diag):
        raise RankDeficientError(f"design of shape {X.shape} is rank deficient")
    beta = np.linalg.solve(R, Q.T @ y)
    resid = y - X @ beta
    return beta, Q, float(resid @ resid)


def group_ols(g: GroupData) -> GroupFit:
    """Per-group least squares through an orthogonal factorization."""
    beta, Q, rss = _qr_rss(g.X, g.y)
    return GroupFit(beta_hat=beta, rss=rss, Q=Q)


def joint_rss(gk: GroupData, gl: GroupData) -> float:
    """Residual sum of squares of the pooled fit on the stacked pair."""
    if gk.p != gl.p:
        raise RankDeficientError(f"p mismatch: {gk.p} vs {gl.p}")
    X = np.vstack([gk.X, gl.X])
    y = np.concatenate([gk.y, gl.y])
    _, _, rss = _qr_rss(X, y)
    return rss


def pooled_variance(fits: list[GroupFit] | tuple[GroupFit, ...], N: int) -> float:
    """Unbiased variance estimate ``s^2 = sum(rss_j) / N``."""
    if N <= 0:
        raise DegenerateVarianceError(f"nonpositive degrees of freedom N={N}")
    s2 = sum(f.rss for f in fits) / N
    if s2 <= 0.0:
        raise DegenerateVarianceError("degenerate: zero residual variance")
    return s2


def gcp_base(alpha: float, N: int, m: int, p: int) -> float:
    """Criterion of the all-distinct model; the scaled RSS term is exactly N."""
    return N + alpha * m * p


def gcp_candidate(
    edge: tuple[int, int],
    alpha: float,
    fits: dict[int, GroupFit],
    joint: float,
    s2: float,
    N: int,
    m: int,
    p: int,
) -> float:
    """Criterion of the model pooling the edge's two groups."""
    k, l = edge
    extra = (joint - fits[k].rss - fits[l].rss) / s2
    return N + extra + alpha * (m - 1) * p


def gcp_edge_difference(
    edge: tuple[int, int],
    alpha: float,
    fits: dict[int, GroupFit],
    joint: float,
    s2: float,
    p: int,
) -> EdgeScore:
    """Candidate-minus-base score; negative or zero means the edge is kept."""
    k, l = edge
    rss_sum = fits[k].rss + fits[l].rss
    delta_stat = (joint - rss_sum) / s2
    return EdgeScore(
        edge=edge,
        joint_rss=joint,
        rss_sum=rss_sum,
        delta_stat=delta_stat,
        gcp_diff=delta_stat - alpha * p,
    )


def alpha_hat(N: int, p: int, m: int, n0: int) -> PenaltyParams:
    """Data-adaptive penalty ``N/(N-2) + B * m^{1/4} * log(n0) / sqrt(p)``.

    ``B = N * sqrt(N + p - 2) / ((N - 2) * sqrt(N - 4))`` standardizes the
    per-edge score under the shared-coefficients hypothesis. Natural log.
    """
    if N - 4 <= 0:
        raise ValueError(f"alpha_hat requires N - 4 > 0, got N={N}")
    if p < 1 or m < 2 or n0 < 2:
        raise ValueError(f"invalid dimensions p={p}, m={m}, n0={n0}")
    B = N * math.sqrt(N + p - 2) / ((N - 2) * math.sqrt(N - 4))
    beta = B * m ** 0.25 * math.log(n0) / math.sqrt(p)
    return PenaltyParams(alpha=N / (N - 2) + beta, beta_offset=beta, B=B)


def alpha_check(p: int, m: int, n0: int) -> PenaltyParams:
    """Simpler penalty ``2 + m^{1/4} * log(n0) / sqrt(p)`` (no B factor)."""
    if p < 1 or m < 2 or n0 < 2:
        raise ValueError(f"invalid dimensions p={p}, m={m}, n0={n0}")
    return PenaltyParams(alpha=2.0 + m ** 0.25 * math.log(n0) / math.sqrt(p))


def fit_groups(d: GroupDataset) -> dict[int, GroupFit]:
    """OLS fits for every group, keyed by vertex id."""
    return {g.index: group_ols(g) for g in d.groups}


def select_edges(
    d: GroupDataset,
    g: GraphSpec,
    params: PenaltyParams,
    fits: dict[int, GroupFit] | None = None,
) -> SelectionResult:
    """Score every edge and return the kept subset.

    Deterministic for fixed input: edges are evaluated and reported in the
    graph's sorted order.
    """
    if fits is None:
        fits = fit_groups(d)
    s2 = pooled_variance(list(fits.values()), d.N)
    scores = []
    for edge in g.edges:
        k, l = edge
        joint = joint_rss(d.group(k), d.group(l))
        scores.append(gcp_edge_difference(edge, params.alpha, fits, joint, s2, d.p))
    selected = tuple(sc.edge for sc in scores if sc.selected)
    return SelectionResult(
        s2=s2, alpha=params.alpha, scores=tuple(scores), selected=selected
    )

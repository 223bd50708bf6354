"""Slow explicit-projection reference implementations for tests.

Everything here builds dense n x n projection matrices, so a hard size guard
rejects instances with a stacked sample size above ``SIZE_GUARD``. These
routines exist to cross-check the fast path and are never used by the CLI.
"""

from __future__ import annotations

import numpy as np

from .dataset import GroupDataset
from .errors import JTTError

__all__ = [
    "SIZE_GUARD",
    "projection_matrix",
    "u_coefficient_matrix",
    "u_statistic",
    "v_statistic",
    "brute_force_edge_difference",
    "mcp_criterion_direct",
]

SIZE_GUARD = 200


def _check_size(n: int) -> None:
    if n > SIZE_GUARD:
        raise JTTError(f"reference oracle limited to n <= {SIZE_GUARD}, got {n}")


def projection_matrix(X: np.ndarray) -> np.ndarray:
    """Explicit hat matrix X (X'X)^{-1} X'."""
    _check_size(X.shape[0])
    M = X.T @ X
    return X @ np.linalg.solve(M, X.T)


def u_coefficient_matrix(Xk: np.ndarray, Xl: np.ndarray) -> np.ndarray:
    """Coefficient matrix diag(P_k, P_l) - P_kl of the edge statistic."""
    nk, nl = Xk.shape[0], Xl.shape[0]
    _check_size(nk + nl)
    Pk = projection_matrix(Xk)
    Pl = projection_matrix(Xl)
    Pkl = projection_matrix(np.vstack([Xk, Xl]))
    block = np.zeros((nk + nl, nk + nl))
    block[:nk, :nk] = Pk
    block[nk:, nk:] = Pl
    return block - Pkl


def u_statistic(
    edge: tuple[int, int], d: GroupDataset, sigma2: float = 1.0
) -> float:
    """Quadratic form y_kl' {diag(P_k, P_l) - P_kl} y_kl / sigma^2."""
    k, l = edge
    gk, gl = d.group(k), d.group(l)
    Q = u_coefficient_matrix(gk.X, gl.X)
    y = np.concatenate([gk.y, gl.y])
    return float(y @ Q @ y) / sigma2


def v_statistic(d: GroupDataset, sigma2: float = 1.0) -> float:
    """Sum of y_j' (I - P_j) y_j over all groups, divided by sigma^2."""
    total = 0.0
    for g in d.groups:
        _check_size(g.n)
        P = projection_matrix(g.X)
        r = g.y - P @ g.y
        total += float(g.y @ r)
    return total / sigma2


def brute_force_edge_difference(
    edge: tuple[int, int], alpha: float, d: GroupDataset
) -> float:
    """Candidate-minus-base criterion difference via full literal evaluation."""
    _check_size(d.n)
    k, l = edge
    rss = {}
    for g in d.groups:
        P = projection_matrix(g.X)
        rss[g.index] = float(g.y @ (g.y - P @ g.y))
    s2 = sum(rss.values()) / d.N
    base = sum(rss.values()) / s2 + alpha * d.m * d.p
    gk, gl = d.group(k), d.group(l)
    Xkl = np.vstack([gk.X, gl.X])
    ykl = np.concatenate([gk.y, gl.y])
    Pkl = projection_matrix(Xkl)
    joint = float(ykl @ (ykl - Pkl @ ykl))
    others = sum(rss[j] for j in rss if j not in (k, l))
    cand = (joint + others) / s2 + alpha * (d.m - 1) * d.p
    return cand - base


def mcp_criterion_direct(
    X: np.ndarray, y: np.ndarray, b: np.ndarray, lam: float
) -> float:
    """Modified C_p evaluated from its defining (inverse-matrix) form."""
    _check_size(X.shape[0])
    nt, p = X.shape
    if nt - p - 2 <= 0:
        raise ValueError(f"MC_p undefined: n_tilde - p - 2 = {nt - p - 2}")
    M = X.T @ X
    xi_lam = np.linalg.solve(M + lam * np.eye(p), X.T @ y + lam * b)
    xi_ols = np.linalg.solve(M, X.T @ y)
    s2 = float((y - X @ xi_ols) @ (y - X @ xi_ols)) / (nt - p)
    H = np.linalg.solve(M + lam * np.eye(p), M)
    resid = y - X @ xi_lam
    return float(resid @ resid) / s2 + 2.0 * (nt - p) / (nt - p - 2) * float(np.trace(H))

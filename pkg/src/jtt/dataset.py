"""Group-wise regression data and the relationship graph.

Vertex ids are 1-based everywhere; group ``j`` of a dataset is vertex ``j``
of the graph. All containers are immutable after construction and safe to
share across parallel workers.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DatasetError

__all__ = [
    "GroupData",
    "GroupDataset",
    "GraphSpec",
    "ValidationReport",
    "load_dataset",
    "validate_dataset",
    "complete_graph",
    "load_graph",
    "write_long_csv",
    "numeric_rank",
]


def numeric_rank(X: np.ndarray) -> int:
    """Numeric rank of ``X`` with the standard SVD tolerance.

    Singular values below ``max(X.shape) * eps * sigma_max`` count as zero.
    """
    s = np.linalg.svd(X, compute_uv=False)
    if s.size == 0:
        return 0
    tol = max(X.shape) * np.finfo(X.dtype).eps * s[0]
    return int(np.sum(s > tol))


@dataclass(frozen=True)
class GroupData:
    """Response vector and design matrix of one group (one graph vertex)."""

    index: int  # 1-based vertex id
    y: np.ndarray  # shape (n_j,)
    X: np.ndarray  # shape (n_j, p)
    name: str | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise DatasetError(f"group {self.index}: design must be 2-D")
        if y.shape[0] != X.shape[0]:
            raise DatasetError(
                f"group {self.index}: y has {y.shape[0]} rows but X has {X.shape[0]}"
            )
        if y.shape[0] == 0:
            raise DatasetError(f"group {self.index}: empty group")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class GroupDataset:
    """All groups together with the global dimension bookkeeping.

    ``N = n - m*p`` is the residual degrees of freedom of the model in which
    every group has its own coefficient vector.
    """

    groups: tuple[GroupData, ...]

    def __post_init__(self):
        groups = tuple(self.groups)
        if len(groups) < 2:
            raise DatasetError("need at least 2 groups")
        p = groups[0].p
        for g in groups:
            if g.p != p:
                raise DatasetError(
                    f"column-count mismatch: group {g.index} has p={g.p}, expected {p}"
                )
        object.__setattr__(self, "groups", groups)

    @property
    def m(self) -> int:
        return len(self.groups)

    @property
    def p(self) -> int:
        return self.groups[0].p

    @property
    def n(self) -> int:
        return sum(g.n for g in self.groups)

    @property
    def N(self) -> int:
        return self.n - self.m * self.p

    @property
    def n0(self) -> int:
        return min(g.n for g in self.groups)

    def group(self, j: int) -> GroupData:
        """Group by 1-based vertex id."""
        return self.groups[j - 1]


@dataclass(frozen=True)
class GraphSpec:
    """Vertex count and ordered edge list with ``k < l``."""

    m: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.m < 2:
            raise DatasetError("graph needs at least 2 vertices")
        seen = set()
        for k, l in self.edges:
            if k == l:
                raise DatasetError(f"self-loop ({k},{l})")
            if not (1 <= k < l <= self.m):
                raise DatasetError(f"vertex out of range in edge ({k},{l}) for m={self.m}")
            if (k, l) in seen:
                raise DatasetError(f"duplicate edge ({k},{l})")
            seen.add((k, l))
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))

    @property
    def q(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class GroupCheck:
    index: int
    n: int
    rank: int
    p: int

    @property
    def full_rank(self) -> bool:
        return self.rank == self.p and self.n >= self.p


@dataclass(frozen=True)
class ValidationReport:
    """Per-group rank diagnostics plus the global degrees-of-freedom check."""

    groups: tuple[GroupCheck, ...]
    N: int
    passed: bool
    messages: tuple[str, ...] = field(default_factory=tuple)


def validate_dataset(d: GroupDataset) -> ValidationReport:
    """Check full column rank per group and ``N - 4 > 0``.

    Returns a report instead of raising; callers treat a failing report as
    fatal before fitting.
    """
    checks = []
    messages = []
    ok = True
    for g in d.groups:
        rank = numeric_rank(g.X)
        checks.append(GroupCheck(index=g.index, n=g.n, rank=rank, p=g.p))
        if rank < g.p or g.n < g.p:
            ok = False
            messages.append(f"group {g.index}: rank {rank} < p={g.p} (n_j={g.n})")
    if d.N - 4 <= 0:
        ok = False
        messages.append(f"N-4>0 violated: N={d.N}")
    return ValidationReport(
        groups=tuple(checks), N=d.N, passed=ok, messages=tuple(messages)
    )


def complete_graph(m: int) -> GraphSpec:
    """All pairs (k, l) with k < l, in lexicographic order."""
    if m < 2:
        raise DatasetError(f"complete graph needs m >= 2, got {m}")
    edges = tuple((k, l) for k in range(1, m + 1) for l in range(k + 1, m + 1))
    return GraphSpec(m=m, edges=edges)


def load_graph(path: str | Path, m: int) -> GraphSpec:
    """Read a headerless CSV of ``k,l`` pairs.

    Pairs are normalized to ``k < l`` and deduplicated; self-loops and
    out-of-range vertices are errors.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"edge file not found: {path}")
    edges: set[tuple[int, int]] = set()
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise DatasetError(f"{path}:{lineno}: expected two columns")
            try:
                k, l = int(row[0]), int(row[1])
            except ValueError as exc:
                raise DatasetError(f"{path}:{lineno}: non-integer vertex id") from exc
            if k == l:
                raise DatasetError(f"{path}:{lineno}: self-loop ({k},{l})")
            if not (1 <= k <= m and 1 <= l <= m):
                raise DatasetError(f"{path}:{lineno}: vertex out of range for m={m}")
            edges.add((min(k, l), max(k, l)))
    return GraphSpec(m=m, edges=tuple(sorted(edges)))


def _read_group_csv(path: Path, add_intercept: bool) -> tuple[np.ndarray, np.ndarray]:
    if not path.exists():
        raise DatasetError(f"group file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DatasetError(f"{path}: empty file")
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise DatasetError(f"{path}: non-numeric cell") from exc
    y = data[:, 0]
    X = data[:, 1:]
    if add_intercept:
        X = np.column_stack([np.ones(len(y)), X])
    if X.shape[1] == 0:
        raise DatasetError(f"{path}: no explanatory columns")
    return y, X


def _read_long_csv(path: Path, add_intercept: bool) -> list[GroupData]:
    if not path.exists():
        raise DatasetError(f"data file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise DatasetError(f"{path}: expected columns group,y,x1,...")
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    by_group: dict[str, list[list[float]]] = {}
    order: list[str] = []
    for lineno, r in enumerate(rows, start=2):
        if len(r) != len(header):
            raise DatasetError(f"{path}:{lineno}: column-count mismatch")
        key = r[0].strip()
        try:
            vals = [float(c) for c in r[1:]]
        except ValueError as exc:
            raise DatasetError(f"{path}:{lineno}: non-numeric cell") from exc
        if key not in by_group:
            by_group[key] = []
            order.append(key)
        by_group[key].append(vals)
    groups = []
    for j, key in enumerate(order, start=1):
        data = np.array(by_group[key], dtype=float)
        y, X = data[:, 0], data[:, 1:]
        if add_intercept:
            X = np.column_stack([np.ones(len(y)), X])
        groups.append(GroupData(index=j, y=y, X=X, name=key))
    return groups


def load_dataset(manifest_path: str | Path) -> GroupDataset:
    """Load a dataset from a JSON manifest or a long-format CSV.

    A ``.json`` manifest maps group names to per-group CSV paths
    (``{"groups": {name: path, ...}, "add_intercept": bool}``) or points at a
    long CSV (``{"long": path, "add_intercept": bool}``). Per-group CSVs have a
    header row with the response in the first column. A bare ``.csv`` path is
    read as long format with columns ``group,y,x1,...`` and no intercept added.
    Group ordering follows the manifest (or first appearance) and defines the
    1-based vertex ids.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DatasetError(f"manifest not found: {manifest_path}")
    if manifest_path.suffix.lower() == ".json":
        try:
            manifest = json.loads(manifest_path.read_text())
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{manifest_path}: invalid JSON") from exc
        add_intercept = bool(manifest.get("add_intercept", False))
        base = manifest_path.parent
        if "long" in manifest:
            groups = _read_long_csv(base / manifest["long"], add_intercept)
        elif "groups" in manifest:
            groups = []
            for j, (name, rel) in enumerate(manifest["groups"].items(), start=1):
                y, X = _read_group_csv(base / rel, add_intercept)
                groups.append(GroupData(index=j, y=y, X=X, name=name))
        else:
            raise DatasetError(f"{manifest_path}: manifest needs 'groups' or 'long'")
    else:
        groups = _read_long_csv(manifest_path, add_intercept=False)
    return GroupDataset(groups=tuple(groups))


def write_long_csv(d: GroupDataset, path: str | Path) -> None:
    """Serialize a dataset as a canonical long-format CSV.

    Uses ``repr`` floats so that load -> write -> load is bit-for-bit stable.
    """
    path = Path(path)
    p = d.p
    header = ["group", "y"] + [f"x{i}" for i in range(1, p + 1)]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for g in d.groups:
            name = g.name if g.name is not None else str(g.index)
            for i in range(g.n):
                writer.writerow(
                    [name, repr(float(g.y[i]))] + [repr(float(v)) for v in g.X[i]]
                )

"""Functional map estimation, pointwise conversion, and training losses.

Direction bookkeeping, fixed package-wide:

* C maps coefficients on shape 1 to coefficients on shape 2 and has shape
  (k2, k1): it acts as A2 ~ C A1.
* Pointwise maps go the other way: a hard map assigns every vertex of
  shape 2 a vertex of shape 1 (indices of length n2 into [0, n1)); a soft
  map is a row-stochastic (n2, n1) matrix.
* The properness projection of a pointwise map is C = Phi2^T M2 (Pi Phi1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .errors import LengthMismatch, ParseError, RankDeficient
from .mesh import _fmt, _meaningful_lines

# relative eigenvalue threshold below which an unregularized Gram matrix is
# declared singular
RANK_RTOL = 1e-10

DEFAULT_TAU = 0.07
DEFAULT_MU = 1e-3

_NN_BLOCK = 2048


@dataclass
class FunctionalMap:
    """Coefficient-space map C (k2, k1) with optional basis bookkeeping."""

    C: np.ndarray
    source_id: str | None = None
    target_id: str | None = None

    def __post_init__(self):
        self.C = np.asarray(self.C, dtype=np.float64)
        if self.C.ndim != 2:
            raise LengthMismatch(f"C must be 2-D, got shape {self.C.shape}")

    @property
    def k1(self) -> int:
        return self.C.shape[1]

    @property
    def k2(self) -> int:
        return self.C.shape[0]


@dataclass
class PointMap:
    """Vertex assignment from shape 2 onto shape 1.

    kind 'hard': indices is (n2,) int64 into [0, n_source).
    kind 'soft': matrix is (n2, n_source), rows non-negative, summing to 1.
    """

    kind: str
    n_source: int
    indices: np.ndarray | None = None
    matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind == "hard":
            if self.indices is None:
                raise LengthMismatch("hard map needs indices")
            self.indices = np.asarray(self.indices, dtype=np.int64).ravel()
            if self.indices.size and (
                self.indices.min() < 0 or self.indices.max() >= self.n_source
            ):
                raise LengthMismatch(
                    f"hard map indices outside [0, {self.n_source})"
                )
        elif self.kind == "soft":
            if self.matrix is None:
                raise LengthMismatch("soft map needs a matrix")
            self.matrix = np.asarray(self.matrix, dtype=np.float64)
            if self.matrix.ndim != 2 or self.matrix.shape[1] != self.n_source:
                raise LengthMismatch(
                    f"soft map matrix must be (n2, {self.n_source}), got {self.matrix.shape}"
                )
            if np.any(self.matrix < 0) or np.any(
                np.abs(self.matrix.sum(axis=1) - 1.0) > 1e-9
            ):
                raise LengthMismatch("soft map rows must be non-negative and sum to 1")
        else:
            raise LengthMismatch(f"unknown point map kind {self.kind!r}")

    @property
    def n_target(self) -> int:
        return len(self.indices) if self.kind == "hard" else self.matrix.shape[0]

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Pull shape-1 vertex values back onto shape 2 (Pi @ values)."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape[0] != self.n_source:
            raise LengthMismatch(
                f"{values.shape[0]} rows for a map with n_source {self.n_source}"
            )
        return values[self.indices] if self.kind == "hard" else self.matrix @ values


def _feature_values(f) -> np.ndarray:
    values = getattr(f, "values", f)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise LengthMismatch(f"expected (n, d) array, got shape {values.shape}")
    return values


def solve_fmap(A1: np.ndarray, A2: np.ndarray,
               lam1: np.ndarray | None = None, lam2: np.ndarray | None = None,
               mu: float = DEFAULT_MU) -> np.ndarray:
    """Least-squares functional map with a commutativity regularizer.

    Minimizes ||C A1 - A2||_F^2 + mu sum_pq C[p,q]^2 (lam2[p] - lam1[q])^2.
    Each row p of C has the closed form
    (A1 A1^T + mu D_p)^-1 A1 A2[p]^T with D_p = diag((lam2[p]-lam1)^2),
    solved as one batched dense system.

    With mu = 0 the eigenvalues are not needed, but A1 must have full row
    rank: a Gram matrix singular beyond a 1e-10 relative eigenvalue
    threshold raises RankDeficient.
    """
    A1 = np.asarray(A1, dtype=np.float64)
    A2 = np.asarray(A2, dtype=np.float64)
    if A1.ndim != 2 or A2.ndim != 2 or A1.shape[1] != A2.shape[1]:
        raise LengthMismatch(
            f"coefficient shapes {A1.shape} and {A2.shape} do not share d"
        )
    if mu < 0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    k1 = A1.shape[0]
    gram = A1 @ A1.T
    rhs = A2 @ A1.T                                   # (k2, k1)
    if mu == 0:
        ev = np.linalg.eigvalsh(gram)
        if ev[-1] <= 0 or ev[0] < RANK_RTOL * ev[-1]:
            raise RankDeficient(
                "A1 A1^T is singular at the 1e-10 relative threshold; "
                "supply mu > 0 or a fuller descriptor stack"
            )
        return np.linalg.solve(gram, rhs.T).T
    if lam1 is None or lam2 is None:
        raise ValueError("mu > 0 needs both eigenvalue vectors")
    lam1 = np.asarray(lam1, dtype=np.float64).ravel()
    lam2 = np.asarray(lam2, dtype=np.float64).ravel()
    if lam1.size != k1 or lam2.size != A2.shape[0]:
        raise LengthMismatch("eigenvalue lengths do not match coefficient rows")
    penalties = (lam2[:, None] - lam1[None, :]) ** 2  # (k2, k1)
    mats = np.broadcast_to(gram, (lam2.size, k1, k1)).copy()
    diag = np.arange(k1)
    mats[:, diag, diag] += mu * penalties
    try:
        return np.linalg.solve(mats, rhs[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError as exc:
        raise RankDeficient(f"regularized row system is singular: {exc}") from exc


def nearest_rows(queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Index of the nearest row of `points` for every row of `queries`.

    Squared Euclidean metric, computed coordinate-difference-wise (so values
    agree bit for bit with a naive double loop); ties resolve to the lowest
    index. Block-wise to bound memory.
    """
    queries = np.asarray(queries, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    if queries.shape[1] != points.shape[1]:
        raise LengthMismatch(
            f"dimension mismatch: {queries.shape[1]} vs {points.shape[1]}"
        )
    out = np.empty(len(queries), dtype=np.int64)
    for start in range(0, len(queries), _NN_BLOCK):
        block = queries[start:start + _NN_BLOCK]
        d = cdist(block, points, metric="sqeuclidean")
        out[start:start + _NN_BLOCK] = np.argmin(d, axis=1)
    return out


def convert_adjoint(C: np.ndarray, phi1: np.ndarray, phi2: np.ndarray) -> PointMap:
    """Pointwise map from C by the adjoint rule.

    Each row of Phi2 C (the shape-2 vertices pushed into shape 1's
    coefficient space) is matched to its nearest row of Phi1.
    """
    C = np.asarray(C, dtype=np.float64)
    phi1 = np.asarray(phi1, dtype=np.float64)
    phi2 = np.asarray(phi2, dtype=np.float64)
    if phi2.shape[1] != C.shape[0] or phi1.shape[1] != C.shape[1]:
        raise LengthMismatch(
            f"C {C.shape} incompatible with phi1 {phi1.shape} / phi2 {phi2.shape}"
        )
    idx = nearest_rows(phi2 @ C, phi1)
    return PointMap("hard", n_source=phi1.shape[0], indices=idx)


def convert_feature_nn(F1, F2) -> PointMap:
    """Pointwise map by nearest neighbors between descriptor rows."""
    v1, v2 = _feature_values(F1), _feature_values(F2)
    idx = nearest_rows(v2, v1)
    return PointMap("hard", n_source=v1.shape[0], indices=idx)


def soft_map(G1, G2, tau: float = DEFAULT_TAU) -> PointMap:
    """Row-stochastic soft assignment from inner-product similarities.

    Pi[i, j] = exp(<G2[i], G1[j]> / tau) / sum_k exp(<G2[i], G1[k]> / tau),
    computed with a per-row max shift so large similarities cannot overflow.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    v1, v2 = _feature_values(G1), _feature_values(G2)
    if v1.shape[1] != v2.shape[1]:
        raise LengthMismatch(f"dimension mismatch: {v1.shape[1]} vs {v2.shape[1]}")
    s = (v2 @ v1.T) / tau
    s -= s.max(axis=1, keepdims=True)
    p = np.exp(s)
    p /= p.sum(axis=1, keepdims=True)
    return PointMap("soft", n_source=v1.shape[0], matrix=p)


def properness_project(pi: PointMap, phi1: np.ndarray, phi2: np.ndarray,
                       mass2: np.ndarray) -> np.ndarray:
    """Proper functional map of a pointwise map: C = Phi2^T M2 (Pi Phi1)."""
    phi1 = np.asarray(phi1, dtype=np.float64)
    phi2 = np.asarray(phi2, dtype=np.float64)
    mass2 = np.asarray(mass2, dtype=np.float64).ravel()
    pulled = pi.apply(phi1)
    if pulled.shape[0] != phi2.shape[0] or mass2.size != phi2.shape[0]:
        raise LengthMismatch("point map target size does not match phi2/mass2")
    return phi2.T @ (mass2[:, None] * pulled)


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

def loss_supervised(C_pred: np.ndarray, C_gt: np.ndarray) -> float:
    """Squared Frobenius distance to a ground-truth map."""
    C_pred = np.asarray(C_pred, dtype=np.float64)
    C_gt = np.asarray(C_gt, dtype=np.float64)
    if C_pred.shape != C_gt.shape:
        raise LengthMismatch(f"shapes differ: {C_pred.shape} vs {C_gt.shape}")
    return float(np.sum((C_pred - C_gt) ** 2))


def loss_properness(C_pred: np.ndarray, C_proper: np.ndarray) -> float:
    """Squared Frobenius distance between a map and its proper projection."""
    return loss_supervised(C_pred, C_proper)


def loss_unsupervised(C12: np.ndarray, C21: np.ndarray) -> float:
    """Bijectivity + orthogonality energy on a map pair.

    ||C12 C21 - I||^2 + ||C21 C12 - I||^2 + ||C12^T C12 - I||^2
    + ||C21^T C21 - I||^2 (all squared Frobenius).
    """
    C12 = np.asarray(C12, dtype=np.float64)
    C21 = np.asarray(C21, dtype=np.float64)
    if C12.shape != C21.T.shape:
        raise LengthMismatch(f"C12 {C12.shape} and C21 {C21.shape} do not compose")
    k2, k1 = C12.shape
    i1, i2 = np.eye(k1), np.eye(k2)
    return float(
        np.sum((C12 @ C21 - i2) ** 2)
        + np.sum((C21 @ C12 - i1) ** 2)
        + np.sum((C12.T @ C12 - i1) ** 2)
        + np.sum((C21.T @ C21 - i2) ** 2)
    )


def grad_unsupervised(C12: np.ndarray, C21: np.ndarray):
    """Analytic gradient of loss_unsupervised w.r.t. both maps."""
    C12 = np.asarray(C12, dtype=np.float64)
    C21 = np.asarray(C21, dtype=np.float64)
    if C12.shape != C21.T.shape:
        raise LengthMismatch(f"C12 {C12.shape} and C21 {C21.shape} do not compose")
    k2, k1 = C12.shape
    i1, i2 = np.eye(k1), np.eye(k2)
    r_12_21 = C12 @ C21 - i2
    r_21_12 = C21 @ C12 - i1
    o_12 = C12.T @ C12 - i1
    o_21 = C21.T @ C21 - i2
    g12 = 2.0 * r_12_21 @ C21.T + 2.0 * C21.T @ r_21_12 + 4.0 * C12 @ o_12
    g21 = 2.0 * C12.T @ r_12_21 + 2.0 * r_21_12 @ C12.T + 4.0 * C21 @ o_21
    return g12, g21


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def save_fmap(C: np.ndarray, path) -> None:
    """'FMAP k2 k1' header then k2 rows of k1 decimals."""
    C = np.asarray(C, dtype=np.float64)
    lines = [f"FMAP {C.shape[0]} {C.shape[1]}"]
    lines += [" ".join(_fmt(x) for x in row) for row in C]
    Path(path).write_text("\n".join(lines) + "\n")


def load_fmap(path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise ParseError(f"map file not found: {path}") from exc
    lines = list(_meaningful_lines(text))
    if not lines:
        raise ParseError(f"{path}: empty map file")
    no, header = lines[0]
    toks = header.split()
    if len(toks) != 3 or toks[0] != "FMAP":
        raise ParseError(f"{path}:{no}: expected 'FMAP k2 k1' header")
    try:
        k2, k1 = int(toks[1]), int(toks[2])
    except ValueError as exc:
        raise ParseError(f"{path}:{no}: bad sizes in {header!r}") from exc
    if len(lines) != 1 + k2:
        raise ParseError(f"{path}: expected {k2} rows, got {len(lines) - 1}")
    C = np.empty((k2, k1))
    for i, (no, line) in enumerate(lines[1:]):
        toks = line.split()
        if len(toks) != k1:
            raise ParseError(f"{path}:{no}: expected {k1} values, got {len(toks)}")
        try:
            C[i] = [float(x) for x in toks]
        except ValueError as exc:
            raise ParseError(f"{path}:{no}: bad number") from exc
    return C

"""Spectral machinery: cotangent Laplacian, eigenbasis, heat diffusion.

Conventions, fixed once and relied on everywhere:

* W is the positive-semidefinite stiffness matrix: off-diagonal entries are
  -(cot a + cot b)/2 for the two angles opposite the edge, diagonal entries
  make every row sum to zero.
* M is the lumped mass: each vertex gets one third of its incident triangle
  areas, stored as a plain vector (the matrix is diagonal).
* The basis solves W phi = lambda M phi with Phi^T M Phi = I, eigenvalues
  ascending and non-negative; each eigenvector is sign-fixed so its largest
  magnitude entry is positive (ties broken by lowest index). The generalized
  problem is reduced to an ordinary symmetric one through the M^(-1/2)
  similarity transform and handed to a dense solver; meshes are capped near
  5000 vertices, which that solver handles comfortably.
* The left pseudo-inverse of Phi is Phi^T M; `project` and `reconstruct`
  implement coefficient analysis/synthesis against it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from .errors import InvalidK, ParseError, SolverFailure
from .mesh import TriMesh, _fmt, _meaningful_lines

# cot of angles is clamped to +-cot(1e-6 rad): slivers below the mesh area
# floor never get here, but directly constructed bad geometry stays finite.
COT_CLAMP = 1.0 / np.tan(1e-6)

# dense eigensolver guard
MAX_DENSE_VERTICES = 5000


@dataclass
class LaplacianPair:
    """Stiffness matrix W (sparse, symmetric, PSD) and lumped mass vector."""

    W: sparse.csr_matrix
    mass: np.ndarray

    def __post_init__(self):
        self.mass = np.asarray(self.mass, dtype=np.float64).ravel()
        if self.W.shape != (self.mass.size, self.mass.size):
            raise SolverFailure(
                f"W shape {self.W.shape} does not match mass length {self.mass.size}"
            )
        if np.any(self.mass <= 0):
            raise SolverFailure("mass vector must be strictly positive")

    @property
    def n(self) -> int:
        return self.mass.size

    @property
    def M(self) -> sparse.csr_matrix:
        return sparse.diags(self.mass).tocsr()


def build_laplacian(mesh: TriMesh) -> LaplacianPair:
    """Cotangent stiffness + one-third-area lumped mass for a mesh.

    Row sums of W are zero by construction; the matrix is symmetric and
    positive semidefinite (cot values clamped to +-cot(1e-6)).
    """
    v, t = mesh.vertices, mesh.triangles
    # corner c of each triangle is opposite the edge formed by the other two
    cots = np.empty((len(t), 3))
    for c in range(3):
        a, b = (c + 1) % 3, (c + 2) % 3
        ea = v[t[:, a]] - v[t[:, c]]
        eb = v[t[:, b]] - v[t[:, c]]
        cross = np.linalg.norm(np.cross(ea, eb), axis=1)
        cots[:, c] = np.einsum("ij,ij->i", ea, eb) / np.maximum(cross, 1e-300)
    np.clip(cots, -COT_CLAMP, COT_CLAMP, out=cots)

    n = mesh.n_vertices
    rows, cols, vals = [], [], []
    for c in range(3):
        a, b = (c + 1) % 3, (c + 2) % 3
        w = -0.5 * cots[:, c]
        rows += [t[:, a], t[:, b]]
        cols += [t[:, b], t[:, a]]
        vals += [w, w]
    W = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    W = W - sparse.diags(np.asarray(W.sum(axis=1)).ravel())
    return LaplacianPair(W.tocsr(), mesh.vertex_areas())


@dataclass
class SpectralBasis:
    """Truncated eigenbasis of (W, M).

    phi is (n, k) with Phi^T M Phi = I; lam is ascending and non-negative.
    mass may be None for a basis loaded from a cache file without its mesh;
    operations that need the pseudo-inverse then refuse to run.
    """

    lam: np.ndarray
    phi: np.ndarray
    mass: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=np.float64).ravel()
        self.phi = np.asarray(self.phi, dtype=np.float64)
        if self.phi.ndim != 2 or self.phi.shape[1] != self.lam.size:
            raise SolverFailure(
                f"phi shape {self.phi.shape} inconsistent with {self.lam.size} eigenvalues"
            )
        if self.mass is not None:
            self.mass = np.asarray(self.mass, dtype=np.float64).ravel()

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    @property
    def k(self) -> int:
        return self.phi.shape[1]

    def _need_mass(self) -> np.ndarray:
        if self.mass is None:
            raise SolverFailure("basis has no mass vector; load it with its mesh")
        return self.mass

    def project(self, f: np.ndarray) -> np.ndarray:
        """Coefficients Phi^T M f; f is (n,) or (n, d)."""
        m = self._need_mass()
        f = np.asarray(f, dtype=np.float64)
        return self.phi.T @ (m[:, None] * f if f.ndim == 2 else m * f)

    def reconstruct(self, a: np.ndarray) -> np.ndarray:
        """Synthesis Phi a; a is (k,) or (k, d)."""
        return self.phi @ np.asarray(a, dtype=np.float64)

    def truncate(self, k: int) -> "SpectralBasis":
        if not 1 <= k <= self.k:
            raise InvalidK(f"cannot truncate basis of size {self.k} to {k}")
        return SpectralBasis(self.lam[:k].copy(), self.phi[:, :k].copy(), self.mass)


def _fix_signs(u: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made positive; np.argmax takes
    # the first occurrence, which is the lowest-index tie break.
    idx = np.argmax(np.abs(u), axis=0)
    flip = u[idx, np.arange(u.shape[1])] < 0
    u = u.copy()
    u[:, flip] *= -1.0
    return u


def eigenbasis(lap: LaplacianPair, k: int = 30) -> SpectralBasis:
    """First k generalized eigenpairs of (W, M), mass-orthonormal.

    Raises InvalidK when k is outside [1, n] and SolverFailure when the
    operator is too large for the dense path or not positive semidefinite.
    """
    n = lap.n
    if not 1 <= k <= n:
        raise InvalidK(f"k={k} outside [1, {n}]")
    if n > MAX_DENSE_VERTICES:
        raise SolverFailure(
            f"{n} vertices exceeds the dense eigensolver cap of {MAX_DENSE_VERTICES}"
        )
    s = 1.0 / np.sqrt(lap.mass)
    B = (lap.W.multiply(s[:, None]).multiply(s[None, :])).toarray()
    B = 0.5 * (B + B.T)
    try:
        w, u = np.linalg.eigh(B)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"dense eigensolver failed: {exc}") from exc
    scale = max(abs(w[0]), abs(w[-1]), 1e-300)
    if w[0] < -1e-8 * scale:
        raise SolverFailure(
            f"operator is not positive semidefinite (lambda_min = {w[0]:g})"
        )
    w = np.maximum(w, 0.0)
    phi = _fix_signs(u[:, :k] * s[:, None])
    return SpectralBasis(w[:k], phi, lap.mass)


def smoothing_basis(lap: LaplacianPair, j: int) -> SpectralBasis:
    """Eigenbasis of size j for feature smoothing, clamped to n with a warning."""
    if j > lap.n:
        warnings.warn(
            f"smoothing basis size {j} exceeds vertex count {lap.n}; clamping",
            stacklevel=2,
        )
        j = lap.n
    return eigenbasis(lap, j)


def diffuse(basis: SpectralBasis, f: np.ndarray, t: float) -> np.ndarray:
    """Heat diffusion Phi exp(-t lambda) Phi^T M f for t >= 0.

    Works column-wise when f is (n, d). Contracts the M-norm and converges
    to the area-weighted mean (times the constant) as t grows.
    """
    if t < 0:
        raise ValueError(f"diffusion time must be >= 0, got {t}")
    a = basis.project(f)
    decay = np.exp(-t * basis.lam)
    return basis.reconstruct(a * (decay[:, None] if a.ndim == 2 else decay))


def smooth_features(basis: SpectralBasis, values: np.ndarray, t: float) -> np.ndarray:
    """Column-wise diffusion of a feature stack through the given basis.

    The output lies in span(Phi) exactly, so it is complete with respect to
    this basis by construction (completeness 1 up to rounding), whatever the
    input was.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError(f"feature stack must be 2-D, got shape {values.shape}")
    return diffuse(basis, values, t)


def eigen_residuals(lap: LaplacianPair, basis: SpectralBasis) -> np.ndarray:
    """Per-column relative residuals ||W phi - lam M phi|| / (||W|| ||phi||)."""
    r = lap.W @ basis.phi - lap.mass[:, None] * basis.phi * basis.lam[None, :]
    w_norm = max(float(np.abs(lap.W).sum(axis=1).max()), 1e-300)
    return np.linalg.norm(r, axis=0) / (w_norm * np.linalg.norm(basis.phi, axis=0))


def save_basis(basis: SpectralBasis, path) -> None:
    """Cache file: 'SPECBASIS k n' header, one lambda row, n Phi rows."""
    lines = [f"SPECBASIS {basis.k} {basis.n}",
             " ".join(_fmt(x) for x in basis.lam)]
    lines += [" ".join(_fmt(x) for x in row) for row in basis.phi]
    Path(path).write_text("\n".join(lines) + "\n")


def load_basis(path, mass: np.ndarray | None = None) -> SpectralBasis:
    """Read a basis cache; pass the mesh's mass vector to re-enable projection."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise ParseError(f"basis file not found: {path}") from exc
    lines = list(_meaningful_lines(text))
    if not lines:
        raise ParseError(f"{path}: empty basis file")
    no, header = lines[0]
    toks = header.split()
    if len(toks) != 3 or toks[0] != "SPECBASIS":
        raise ParseError(f"{path}:{no}: expected 'SPECBASIS k n' header")
    try:
        k, n = int(toks[1]), int(toks[2])
    except ValueError as exc:
        raise ParseError(f"{path}:{no}: bad sizes in header {header!r}") from exc
    if len(lines) != 2 + n:
        raise ParseError(f"{path}: expected {1 + n} data lines, got {len(lines) - 1}")
    try:
        lam = np.array([float(x) for x in lines[1][1].split()])
        phi = np.array([[float(x) for x in line.split()] for _, line in lines[2:]])
    except ValueError as exc:
        raise ParseError(f"{path}: bad numeric data") from exc
    if lam.size != k or phi.shape != (n, k):
        raise ParseError(f"{path}: data does not match header sizes k={k} n={n}")
    return SpectralBasis(lam, phi, mass)

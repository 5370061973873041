"""Pointwise descriptors and their spectral coefficients.

All descriptors return raw formula values; unit-M-norm column normalization
(used to condition the map solve) is a separate, explicit step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    AllEigenvaluesExcluded,
    IndexOutOfRange,
    LengthMismatch,
    ParseError,
    ZeroFeatures,
)
from .mesh import TriMesh, _fmt, _meaningful_lines
from .spectral import SpectralBasis, diffuse

# eigenvalues below this fraction of lambda_max are treated as zero modes
EIG_CUTOFF = 1e-8


@dataclass
class FeatureMatrix:
    """Vertex-wise descriptor stack: values (n, d) plus column provenance.

    labels has one entry per column saying where it came from; coeffs
    optionally caches the spectral coefficients of the columns.
    """

    values: np.ndarray
    labels: tuple[str, ...] = ()
    mesh_id: str | None = None
    coeffs: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise LengthMismatch(f"feature values must be (n, d), got {self.values.shape}")
        if not self.labels:
            self.labels = tuple(f"c{i}" for i in range(self.values.shape[1]))
        if len(self.labels) != self.values.shape[1]:
            raise LengthMismatch(
                f"{len(self.labels)} labels for {self.values.shape[1]} columns"
            )

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def concat_features(parts: list[FeatureMatrix]) -> FeatureMatrix:
    """Column-concatenate feature matrices; associative, provenance-preserving."""
    if not parts:
        raise LengthMismatch("nothing to concatenate")
    n = parts[0].n
    for p in parts[1:]:
        if p.n != n:
            raise LengthMismatch(f"row counts differ: {n} vs {p.n}")
    ids = {p.mesh_id for p in parts if p.mesh_id is not None}
    if len(ids) > 1:
        raise ValueError(f"features from different meshes: {sorted(ids)}")
    return FeatureMatrix(
        np.hstack([p.values for p in parts]),
        tuple(lbl for p in parts for lbl in p.labels),
        ids.pop() if ids else None,
    )


def descriptor_xyz(mesh: TriMesh, mesh_id: str | None = None) -> FeatureMatrix:
    """Raw vertex coordinates as a 3-column descriptor."""
    return FeatureMatrix(mesh.vertices.copy(), ("x", "y", "z"), mesh_id)


def default_hks_times(lam: np.ndarray, count: int = 16) -> np.ndarray:
    """Log-spaced diffusion times in [4 ln 10 / lam_k, 4 ln 10 / lam_2]."""
    lam = np.asarray(lam, dtype=np.float64).ravel()
    if lam.size < 2 or lam[1] <= 0 or lam[-1] <= 0:
        raise AllEigenvaluesExcluded(
            "need at least two positive eigenvalues for the default time range"
        )
    t_min = 4.0 * np.log(10.0) / lam[-1]
    t_max = 4.0 * np.log(10.0) / lam[1]
    return np.geomspace(t_min, t_max, count)


def descriptor_hks(basis: SpectralBasis, times, mesh_id: str | None = None) -> FeatureMatrix:
    """Heat kernel signature: hks(x, t) = sum_i exp(-lam_i t) phi_i(x)^2.

    Every eigenpair participates, including the constant mode, so entries are
    strictly positive on a connected mesh. One column per time, in order.
    """
    times = np.asarray(times, dtype=np.float64).ravel()
    if times.size == 0 or np.any(times < 0):
        raise ValueError("times must be non-empty and non-negative")
    decay = np.exp(-np.outer(times, basis.lam))        # (T, k)
    vals = np.einsum("nk,tk->nt", basis.phi ** 2, decay)
    return FeatureMatrix(vals, tuple(f"hks_t{t:.6g}" for t in times), mesh_id)


def default_wks_energies(lam: np.ndarray, count: int = 16):
    """Evenly spaced log-energy grid with the usual 7-sigma interior inset.

    Returns (energies, sigma). Near-zero eigenvalues are excluded the same
    way descriptor_wks excludes them.
    """
    lam = np.asarray(lam, dtype=np.float64).ravel()
    lam_max = float(lam.max()) if lam.size else 0.0
    kept = lam[(lam > 0.0) & (lam >= EIG_CUTOFF * lam_max)]
    if kept.size < 2:
        raise AllEigenvaluesExcluded("not enough positive eigenvalues for a WKS grid")
    e_min, e_max = np.log(kept[0]), np.log(kept[-1])
    sigma = 7.0 * (e_max - e_min) / count
    return np.linspace(e_min + 2.0 * sigma, e_max - 2.0 * sigma, count), sigma


def descriptor_wks(basis: SpectralBasis, energies, sigma: float,
                   mesh_id: str | None = None) -> FeatureMatrix:
    """Wave kernel signature with Gaussian log-energy bands.

    wks(x, e) = C_e sum_i exp(-(e - log lam_i)^2 / (2 sigma^2)) phi_i(x)^2,
    where C_e normalizes the weights to sum to one. Eigenvalues below
    1e-8 x lam_max are skipped; if that removes all of them the descriptor
    is undefined and AllEigenvaluesExcluded is raised.
    """
    energies = np.asarray(energies, dtype=np.float64).ravel()
    if energies.size == 0:
        raise ValueError("need at least one energy")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    lam = basis.lam
    lam_max = float(lam.max()) if lam.size else 0.0
    keep = (lam > 0.0) & (lam >= EIG_CUTOFF * lam_max)
    if not np.any(keep):
        raise AllEigenvaluesExcluded(
            f"all {lam.size} eigenvalues fall under the {EIG_CUTOFF:g} x lam_max cutoff"
        )
    log_lam = np.log(lam[keep])
    w = np.exp(-((energies[:, None] - log_lam[None, :]) ** 2) / (2.0 * sigma ** 2))
    totals = w.sum(axis=1)
    if np.any(totals <= 0):
        bad = energies[totals <= 0]
        raise ValueError(f"energies with no spectral support: {bad}")
    w /= totals[:, None]
    vals = np.einsum("nk,ek->ne", basis.phi[:, keep] ** 2, w)
    return FeatureMatrix(vals, tuple(f"wks_e{e:.6g}" for e in energies), mesh_id)


def descriptor_landmarks(basis: SpectralBasis, landmarks, t: float,
                         mesh_id: str | None = None) -> FeatureMatrix:
    """Diffused landmark indicators, one column per landmark.

    Column l is diffuse(delta_l / M[l], t): the unit-mass spike at the
    landmark pushed through heat flow. An empty landmark list yields a
    (n, 0) matrix that concatenates cleanly.
    """
    landmarks = [int(l) for l in landmarks]
    n = basis.n
    for l in landmarks:
        if not 0 <= l < n:
            raise IndexOutOfRange(f"landmark {l} outside [0, {n})")
    if not landmarks:
        return FeatureMatrix(np.zeros((n, 0)), (), mesh_id)
    mass = basis._need_mass()
    spikes = np.zeros((n, len(landmarks)))
    for col, l in enumerate(landmarks):
        spikes[l, col] = 1.0 / mass[l]
    vals = diffuse(basis, spikes, t)
    return FeatureMatrix(vals, tuple(f"lm_v{l}" for l in landmarks), mesh_id)


def project_coeffs(basis: SpectralBasis, features) -> np.ndarray:
    """Spectral coefficients A = Phi^T M F, shape (k, d)."""
    values = features.values if isinstance(features, FeatureMatrix) else np.asarray(features)
    if values.ndim != 2:
        raise LengthMismatch(f"expected (n, d) features, got shape {values.shape}")
    if values.shape[0] != basis.n:
        raise LengthMismatch(f"{values.shape[0]} feature rows for {basis.n} vertices")
    return basis.project(values)


def normalize_columns(values: np.ndarray, mass: np.ndarray,
                      skip_zero: bool = True) -> np.ndarray:
    """Scale each column to unit M-norm; conditions the map least squares.

    Zero columns are left untouched when skip_zero is set (they carry no
    information either way); otherwise they raise ZeroFeatures.
    """
    values = np.asarray(values, dtype=np.float64)
    norms = np.sqrt(np.einsum("n,nd->d", mass, values ** 2))
    zero = norms == 0
    if np.any(zero) and not skip_zero:
        raise ZeroFeatures(f"column(s) {np.nonzero(zero)[0].tolist()} have zero M-norm")
    safe = np.where(zero, 1.0, norms)
    return values / safe


def save_features(features: FeatureMatrix, path) -> None:
    """'FEAT n d' header, then n rows of d decimals (labels are not stored)."""
    lines = [f"FEAT {features.n} {features.d}"]
    lines += [" ".join(_fmt(x) for x in row) for row in features.values]
    Path(path).write_text("\n".join(lines) + "\n")


def load_features(path) -> FeatureMatrix:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise ParseError(f"feature file not found: {path}") from exc
    lines = list(_meaningful_lines(text))
    if not lines:
        raise ParseError(f"{path}: empty feature file")
    no, header = lines[0]
    toks = header.split()
    if len(toks) != 3 or toks[0] != "FEAT":
        raise ParseError(f"{path}:{no}: expected 'FEAT n d' header")
    try:
        n, d = int(toks[1]), int(toks[2])
    except ValueError as exc:
        raise ParseError(f"{path}:{no}: bad sizes in {header!r}") from exc
    if len(lines) != 1 + n:
        raise ParseError(f"{path}: expected {n} rows, got {len(lines) - 1}")
    vals = np.empty((n, d))
    for i, (no, line) in enumerate(lines[1:]):
        toks = line.split()
        if len(toks) != d:
            raise ParseError(f"{path}:{no}: expected {d} values, got {len(toks)}")
        try:
            vals[i] = [float(x) for x in toks]
        except ValueError as exc:
            raise ParseError(f"{path}:{no}: bad number in row") from exc
    return FeatureMatrix(vals)

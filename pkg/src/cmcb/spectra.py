"""Laplace-Beltrami spectra of closed fibers.

A :class:`FiberSpectrum` lists distinct eigenvalues with multiplicities,
``(0, 1)`` first. Round spheres and flat tori are generated analytically to
any bound; explicit spectra are finite tables. ``legendre_fd_oracle`` is an
independent finite-difference check of the round-sphere spectrum.
"""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._numerics import tridiagonal_eigenvalues
from .errors import (
    BoundExceedsData,
    InvalidDimension,
    MissingZeroMode,
    NonMonotone,
    SingularBasis,
)

FOUR_PI_SQ = 4.0 * math.pi ** 2
TIE_RTOL = 1e-9


class SpectrumSource(enum.Enum):
    SPHERE = "sphere"
    TORUS = "torus"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class DualLatticeBasis:
    """Generators of the dual lattice as the rows of ``basis_vectors``."""

    basis_vectors: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(float(x) for x in row) for row in self.basis_vectors)
        dim = len(rows)
        if dim < 1 or any(len(row) != dim for row in rows):
            raise SingularBasis("dual basis must be a square matrix of size >= 1")
        mat = np.array(rows)
        if not np.all(np.isfinite(mat)):
            raise SingularBasis("dual basis has non-finite entries")
        # relative to the row norms so that scaling does not trip the test
        scale = float(np.prod(np.linalg.norm(mat, axis=1)))
        if scale == 0.0 or abs(np.linalg.det(mat)) <= 1e-12 * scale:
            raise SingularBasis("dual basis matrix is singular")
        object.__setattr__(self, "basis_vectors", rows)

    @classmethod
    def identity(cls, dim: int) -> "DualLatticeBasis":
        return cls(tuple(tuple(1.0 if i == j else 0.0 for j in range(dim)) for i in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.basis_vectors)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.basis_vectors)

    @property
    def gram(self) -> np.ndarray:
        b = self.matrix
        return b @ b.T

    @property
    def is_integral(self) -> bool:
        return all(float(x).is_integer() for row in self.basis_vectors for x in row)

    def coefficient_box(self, norm_bound: float) -> np.ndarray:
        """Per-coordinate bound on integer coefficients of vectors with
        ``|y|**2 <= norm_bound`` (Cauchy-Schwarz with the inverse Gram)."""
        ginv_diag = np.diag(np.linalg.inv(self.gram))
        return np.floor(np.sqrt(max(norm_bound, 0.0) * ginv_diag) * (1 + 1e-9) + 1e-9).astype(int)


def _group(values: Iterable, rtol: float = TIE_RTOL) -> list[tuple[float, int]]:
    out: list[list] = []
    for v in sorted(values):
        if out and v <= out[-1][0] * (1 + rtol):
            out[-1][1] += 1
        else:
            out.append([v, 1])
    return [(float(v), int(c)) for v, c in out]


def sphere_multiplicity(i: int, m: int) -> int:
    """Dimension of degree-i spherical harmonics on the m-sphere."""
    if i == 0:
        return 1
    return (2 * i + m - 1) * math.factorial(i + m - 2) // (math.factorial(i) * math.factorial(m - 1))


def _sphere_entries(m: int, bound: float) -> list[tuple[float, int]]:
    out = []
    i = 0
    while i * (i + m - 1) <= bound:
        out.append((float(i * (i + m - 1)), sphere_multiplicity(i, m)))
        i += 1
    return out


def _torus_entries(dual: DualLatticeBasis, bound: float) -> list[tuple[float, int]]:
    norm_bound = bound / FOUR_PI_SQ
    box = dual.coefficient_box(norm_bound)
    axes = [np.arange(-k, k + 1) for k in box]
    coeffs = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dual.dim)
    if dual.is_integral:
        gram = [[int(round(x)) for x in row] for row in dual.gram]
        norms = _exact_norms(coeffs, gram)
        counts: dict[int, int] = {}
        for q in norms:
            counts[q] = counts.get(q, 0) + 1
        out = []
        for q in sorted(counts):
            value = FOUR_PI_SQ * q
            if value <= bound:
                out.append((value, counts[q]))
        return out
    vecs = coeffs @ dual.matrix
    values = FOUR_PI_SQ * np.einsum("ij,ij->i", vecs, vecs)
    values[np.all(coeffs == 0, axis=1)] = 0.0
    return _group(values[values <= bound])


def _exact_norms(coeffs: np.ndarray, gram: list[list[int]]) -> list[int]:
    g = np.array(gram, dtype=object)
    c = coeffs.astype(object)
    return list(np.einsum("ij,jk,ik->i", c, g, c))


@dataclass(frozen=True, eq=False)
class FiberSpectrum:
    """Distinct Laplace eigenvalues of a closed fiber with multiplicities.

    ``scale`` multiplies every eigenvalue (fiber metric rescaling).
    """

    source: SpectrumSource
    sphere_dim: int | None = None
    dual: DualLatticeBasis | None = None
    table: tuple[tuple[float, int], ...] | None = None
    scale: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def max_bound(self) -> float:
        """Largest bound that can be enumerated completely."""
        if self.source is SpectrumSource.EXPLICIT:
            return self.table[-1][0] * self.scale
        return math.inf

    def enumerate_up_to(self, bound: float) -> list[tuple[float, int]]:
        """Every distinct eigenvalue ``<= bound`` with its multiplicity."""
        bound = float(bound)
        if bound < 0:
            return []
        if self.source is SpectrumSource.EXPLICIT:
            if bound > self.max_bound:
                raise BoundExceedsData(
                    f"explicit spectrum known up to {self.max_bound!r}, requested {bound!r}"
                )
            return [(v * self.scale, k) for v, k in self.table if v * self.scale <= bound]
        raw = bound / self.scale
        with self._lock:
            cached_bound = self._cache.get("bound", -1.0)
            if raw > cached_bound:
                # over-enumerate so repeated small extensions stay cheap
                target = max(raw, 2.0 * cached_bound)
                if self.source is SpectrumSource.SPHERE:
                    entries = _sphere_entries(self.sphere_dim, target)
                else:
                    entries = _torus_entries(self.dual, target)
                self._cache["bound"] = target
                self._cache["entries"] = entries
            entries = self._cache["entries"]
        return [(v * self.scale, k) for v, k in entries if v <= raw]

    def nonzero_up_to(self, bound: float) -> list[tuple[float, int]]:
        return [(v, k) for v, k in self.enumerate_up_to(bound) if v > 0]

    def first_nonzero(self) -> float:
        """The smallest positive eigenvalue."""
        if self.source is SpectrumSource.EXPLICIT:
            if len(self.table) < 2:
                raise BoundExceedsData("explicit spectrum has no nonzero eigenvalue")
            return self.table[1][0] * self.scale
        bound = 1.0 * self.scale
        while True:
            nz = self.nonzero_up_to(bound)
            if nz:
                return nz[0][0]
            bound *= 4.0

    def multiplicity_of(self, value: float) -> int:
        for v, k in self.enumerate_up_to(value * (1 + TIE_RTOL)):
            if abs(v - value) <= TIE_RTOL * max(abs(value), 1e-300):
                return k
        raise ValueError(f"{value!r} is not an eigenvalue of this spectrum")

    def scaled(self, factor: float) -> "FiberSpectrum":
        """Spectrum with every eigenvalue multiplied by ``factor``."""
        if not factor > 0:
            raise ValueError("factor must be positive")
        return FiberSpectrum(self.source, self.sphere_dim, self.dual, self.table,
                             self.scale * factor)

    def describe(self) -> dict:
        out = {"kind": self.source.value, "scale": self.scale}
        if self.source is SpectrumSource.SPHERE:
            out["m"] = self.sphere_dim
        elif self.source is SpectrumSource.TORUS:
            out["basis"] = [list(row) for row in self.dual.basis_vectors]
        else:
            out["entries"] = [[v, k] for v, k in self.table]
        return out


def sphere_spectrum(m: int, bound: float | None = None):
    """Spectrum of the unit round m-sphere: ``i(i+m-1)`` with the dimension
    of degree-i harmonics as multiplicity.

    With ``bound`` the entries up to it are returned; without, the lazily
    enumerable :class:`FiberSpectrum`.
    """
    if int(m) != m or m < 1:
        raise InvalidDimension(f"sphere dimension must be >= 1, got {m!r}")
    spec = FiberSpectrum(SpectrumSource.SPHERE, sphere_dim=int(m))
    return spec if bound is None else spec.enumerate_up_to(bound)


def torus_spectrum(dual: DualLatticeBasis | Sequence[Sequence[float]], bound: float | None = None):
    """Spectrum ``4 pi**2 |y|**2`` over the dual lattice of a flat torus."""
    if not isinstance(dual, DualLatticeBasis):
        dual = DualLatticeBasis(tuple(tuple(row) for row in dual))
    spec = FiberSpectrum(SpectrumSource.TORUS, dual=dual)
    return spec if bound is None else spec.enumerate_up_to(bound)


def explicit_spectrum(pairs: Sequence[tuple[float, int]]) -> FiberSpectrum:
    table = tuple((float(v), int(k)) for v, k in pairs)
    if not table:
        raise MissingZeroMode("empty spectrum")
    if table[0] != (0.0, 1):
        raise MissingZeroMode(f"first entry must be (0, 1), got {table[0]!r}")
    for (v0, _), (v1, _) in zip(table, table[1:]):
        if not v1 > v0:
            raise NonMonotone(f"eigenvalues must strictly increase: {v0!r} then {v1!r}")
    for v, k in table:
        if k < 1 or not math.isfinite(v):
            raise NonMonotone(f"invalid entry ({v!r}, {k!r})")
    return FiberSpectrum(SpectrumSource.EXPLICIT, table=table)


def legendre_matrix(N: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric tridiagonal finite-volume discretization of
    ``-(1/sin t) d/dt (sin t d/dt) + m**2/sin(t)**2`` on N cells of (0, pi).

    Cell centres carry the unknowns; the pole faces have zero flux because
    ``sin`` vanishes there, so no boundary condition is imposed.
    """
    h = math.pi / N
    theta = (np.arange(N) + 0.5) * h
    w = np.sin(theta)
    faces = np.sin(np.arange(1, N) * h)
    flux = np.zeros(N + 1)
    flux[1:N] = faces
    diag = (flux[:-1] + flux[1:]) / (h * h * w) + m * m / (w * w)
    off = -faces / (h * h * np.sqrt(w[:-1] * w[1:]))
    return diag, off


def legendre_fd_oracle(N: int, max_mode: int, count: int | None = None) -> list[float]:
    """Merged, sorted numerical eigenvalues of the round-S^2 Laplacian.

    Each azimuthal mode ``m >= 1`` stands for the pair ``+-m`` and is listed
    twice, so near-degenerate clusters reproduce the multiplicities ``2i+1``.
    ``count`` limits each mode to its lowest eigenvalues.
    """
    if N < 16:
        raise ValueError("N must be at least 16")
    if max_mode < 0:
        raise ValueError("max_mode must be non-negative")
    merged: list[float] = []
    for m in range(max_mode + 1):
        diag, off = legendre_matrix(N, m)
        vals = tridiagonal_eigenvalues(diag, off, count=count).tolist()
        merged.extend(vals if m == 0 else vals * 2)
    return sorted(merged)

"""Rigidity and bifurcation decisions for the slice family {r} x P.

On the volume-constrained space the Jacobi operator of the slice at ``r``
has eigenvalues ``(mu - h(r)) / alpha(r)**2`` for every nonzero fiber
eigenvalue ``mu``. Everything here is bookkeeping on the sign pattern of
``h(r) - mu``: the Morse index counts eigenvalues below ``h``, a bifurcation
is witnessed wherever ``h`` crosses a fiber eigenvalue, and a rigidity
certificate is a strictly positive margin ``mu_1 - h`` over a grid.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._numerics import bisect
from .errors import (
    BoundExceedsData,
    CMCBError,
    DegenerateEndpoint,
    DegeneratePoint,
    MissingFiberCurvature,
    SpectrumBoundExceeded,
    ZeroModeQueried,
)
from .spectra import FiberSpectrum
from .warpcore import (
    WarpedModel,
    geometric_invariants,
    scalar_curvature,
    stability_h,
)

DEFAULT_DEGENERACY_TOL = 1e-9


class Direction(enum.Enum):
    UP = "up"
    DOWN = "down"


class Criterion(enum.Enum):
    THEOREM1 = "theorem1"
    COROLLARY1_I = "corollary1_i"
    COROLLARY1_II = "corollary1_ii"
    COROLLARY1_III = "corollary1_iii"
    PROP23 = "prop23"
    CORSCALAR = "corscalar"


class Verdict(enum.Enum):
    CERTIFIED = "certified"
    NOT_CERTIFIED = "not_certified"
    INCONCLUSIVE_DEGENERATE = "inconclusive_degenerate"


class Divergence(enum.Enum):
    DIVERGENT = "divergent"
    BOUNDED = "bounded"
    UNDETERMINED = "undetermined"


class Summary(enum.Enum):
    RIGID_CERTIFIED = "rigid_certified"
    BIFURCATION_FOUND = "bifurcation_found"
    DEGENERATE = "degenerate"
    INCONCLUSIVE = "inconclusive"


class End(enum.Enum):
    LOWER = "lower"
    UPPER = "upper"


class RicciSign(enum.Enum):
    NONPOSITIVE = "nonpositive"
    FLAT = "flat"
    OTHER = "other"


def _plain(value):
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, list):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


class _Serializable:
    def to_dict(self) -> dict:
        return {name: _plain(getattr(self, name)) for name in self.__dataclass_fields__}


@dataclass(frozen=True)
class Grid(_Serializable):
    """``points`` equally spaced radii from ``r_min`` to ``r_max`` inclusive."""

    r_min: float
    r_max: float
    points: int

    def __post_init__(self):
        if not self.r_min < self.r_max:
            raise ValueError("grid needs r_min < r_max")
        if self.points < 2:
            raise ValueError("grid needs at least 2 points")

    def nodes(self) -> np.ndarray:
        return np.linspace(self.r_min, self.r_max, self.points)

    def describe(self) -> str:
        return f"{self.points} equispaced radii on [{self.r_min!r}, {self.r_max!r}]"


@dataclass(frozen=True)
class CrossingEvent(_Serializable):
    r_star: float
    bracket: tuple[float, float]
    eigenvalue: float
    multiplicity: int
    direction: Direction
    index_jump: int


@dataclass(frozen=True)
class TouchEvent(_Serializable):
    """``h`` enters the degeneracy band of ``eigenvalue`` without a detected
    sign change; no bifurcation can be inferred there."""

    interval: tuple[float, float]
    eigenvalue: float
    multiplicity: int


@dataclass(frozen=True)
class RigidityCertificate(_Serializable):
    criterion: Criterion
    verdict: Verdict
    margin: float
    grid: str
    tolerance: float = 0.0
    scope: str = ""


@dataclass(frozen=True)
class Witness(_Serializable):
    eigenvalue: float
    index_a: int
    index_b: int


@dataclass(frozen=True)
class GeneralRigidityData:
    """Data of one CMC hypersurface with constant Jacobi potential.

    ``mu1`` is the first nonzero Laplace eigenvalue of the hypersurface
    itself (not of a fiber).
    """

    mu1: float
    Q: float
    sff_norm_sq: float
    normal_ricci: float
    n: int
    hypersurface_convex: bool = False
    hypersurface_ricci: RicciSign = RicciSign.OTHER

    def __post_init__(self):
        if not self.mu1 > 0:
            raise ValueError("mu1 must be positive")
        if self.sff_norm_sq < 0:
            raise ValueError("sff_norm_sq must be non-negative")
        if self.n < 2:
            raise ValueError("n must be >= 2")


@dataclass(frozen=True)
class ScanSample(_Serializable):
    r: float
    h: float
    alpha_sq: float
    morse_index: Optional[int]


@dataclass(frozen=True)
class DivergenceConfig:
    samples: int = 24
    growth_factor: float = 0.5
    threshold: Optional[float] = None
    window: Optional[float] = None

    def __post_init__(self):
        if self.samples < 8:
            raise ValueError("divergence test needs samples >= 8")
        if not 0 < self.growth_factor < 1:
            raise ValueError("growth_factor must lie in (0, 1)")


@dataclass(frozen=True)
class AnalysisConfig:
    grid: Grid
    tol: float = 1e-10
    degeneracy_tol: float = DEFAULT_DEGENERACY_TOL
    divergence: DivergenceConfig = field(default_factory=DivergenceConfig)
    workers: Optional[int] = None


@dataclass
class BifurcationReport(_Serializable):
    label: str
    samples: list[ScanSample]
    crossings: list[CrossingEvent]
    touches: list[TouchEvent]
    certificates: list[RigidityCertificate]
    divergence: Divergence
    divergence_by_end: dict[str, Divergence]
    summary: Summary
    status: str
    notes: list[str]
    errors: list[str]


def _band(value: float, tol: float) -> float:
    return tol * max(1.0, abs(value))


def _levels(spec: FiberSpectrum, bound: float) -> list[tuple[float, int]]:
    try:
        return spec.nonzero_up_to(bound)
    except BoundExceedsData as exc:
        raise SpectrumBoundExceeded(str(exc)) from exc


def shifted_eigenvalue(model: WarpedModel, spec: FiberSpectrum, value: float, r: float) -> float:
    """Jacobi eigenvalue ``(value - h(r)) / alpha(r)**2`` on the slice at ``r``."""
    if value == 0:
        raise ZeroModeQueried("constants violate the volume constraint and carry no Jacobi eigenvalue")
    jet = model.warp.jet(r)
    h = (model.n - 1) * jet.stability_slack()
    return (value - h) / jet.alpha_sq


def morse_index(model: WarpedModel, spec: FiberSpectrum, r: float,
                degeneracy_tol: float = DEFAULT_DEGENERACY_TOL) -> int:
    """Number of negative Jacobi eigenvalues, counted with multiplicity.

    Raises :class:`DegeneratePoint` if some nonzero fiber eigenvalue lies
    within ``degeneracy_tol * max(1, |h|)`` of ``h(r)``.
    """
    if not degeneracy_tol > 0:
        raise ValueError("degeneracy_tol must be positive")
    h = stability_h(model, r)
    band = _band(h, degeneracy_tol)
    index = 0
    for mu, mult in _levels(spec, h + band):
        if abs(mu - h) <= band:
            raise DegeneratePoint(f"eigenvalue {mu!r} within {band:.3e} of h({r!r}) = {h!r}")
        index += mult
    return index


def scan(model: WarpedModel, spec: FiberSpectrum, grid: Grid,
         degeneracy_tol: float = DEFAULT_DEGENERACY_TOL,
         workers: Optional[int] = None) -> list[ScanSample]:
    """Evaluate h, alpha**2 and the Morse index at every grid node.

    Degenerate nodes get ``morse_index=None``. Chunks may run on a thread
    pool; results are merged in grid order.
    """
    nodes = [float(r) for r in grid.nodes()]

    def one(r):
        jet = model.warp.jet(r)
        h = (model.n - 1) * jet.stability_slack()
        try:
            idx = morse_index(model, spec, r, degeneracy_tol)
        except DegeneratePoint:
            idx = None
        return ScanSample(r, h, jet.alpha_sq, idx)

    workers = _worker_count(workers)
    if workers <= 1 or len(nodes) < 2 * workers:
        return [one(r) for r in nodes]
    chunks = np.array_split(np.arange(len(nodes)), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(lambda idx: [one(nodes[i]) for i in idx], chunks)
        return [s for part in parts for s in part]


def _worker_count(workers: Optional[int]) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("CMCB_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def scan_crossings(model: WarpedModel, spec: FiberSpectrum, interval: tuple[float, float],
                   grid_points: int = 2000, tol: float = 1e-10,
                   degeneracy_tol: float = DEFAULT_DEGENERACY_TOL,
                   ) -> tuple[list[CrossingEvent], list[TouchEvent]]:
    """Locate crossings of ``h`` with nonzero fiber eigenvalues on ``interval``.

    Returns ``(crossings, touches)``. A crossing is a sign change of
    ``h - mu`` between grid nodes outside the degeneracy band, refined by
    bisection to a bracket of width ``<= tol``. Runs of band nodes without
    a sign change across them are touches.
    """
    a, b = (float(v) for v in interval)
    if not tol > 0:
        raise ValueError("tol must be positive")
    model.warp.check(a)
    model.warp.check(b)
    nodes = Grid(a, b, grid_points).nodes()
    hs = np.array([stability_h(model, float(r)) for r in nodes])
    hmax = float(hs.max())
    crossings: list[CrossingEvent] = []
    touches: list[TouchEvent] = []
    for mu, mult in _levels(spec, hmax + _band(hmax, degeneracy_tol)):
        g = hs - mu
        band = _band(mu, degeneracy_tol)
        signs = np.where(np.abs(g) <= band, 0, np.sign(g)).astype(int)
        signed = np.flatnonzero(signs)
        if signed.size == 0:
            touches.append(TouchEvent((a, b), mu, mult))
            continue
        if signed[0] > 0:
            touches.append(TouchEvent((a, float(nodes[signed[0]])), mu, mult))
        if signed[-1] < len(nodes) - 1:
            touches.append(TouchEvent((float(nodes[signed[-1]]), b), mu, mult))
        for i, j in zip(signed[:-1], signed[1:]):
            if signs[i] == signs[j]:
                if j > i + 1:
                    touches.append(TouchEvent((float(nodes[i]), float(nodes[j])), mu, mult))
                continue
            lo, hi, root = bisect(lambda r: stability_h(model, r) - mu,
                                  float(nodes[i]), float(nodes[j]), xtol=tol, rtol=0.0,
                                  f_lo=float(g[i]), f_hi=float(g[j]))
            up = signs[i] < 0
            crossings.append(CrossingEvent(
                r_star=root,
                bracket=(lo, hi),
                eigenvalue=mu,
                multiplicity=mult,
                direction=Direction.UP if up else Direction.DOWN,
                index_jump=mult if up else -mult,
            ))
    crossings.sort(key=lambda c: (c.r_star, c.eigenvalue))
    touches.sort(key=lambda t: (t.interval, t.eigenvalue))
    return crossings, touches


def find_crossings(model: WarpedModel, spec: FiberSpectrum, interval: tuple[float, float],
                   grid_points: int = 2000, tol: float = 1e-10,
                   degeneracy_tol: float = DEFAULT_DEGENERACY_TOL) -> list[CrossingEvent]:
    """Crossing events only; see :func:`scan_crossings`."""
    return scan_crossings(model, spec, interval, grid_points, tol, degeneracy_tol)[0]


def theorem2_witness(model: WarpedModel, spec: FiberSpectrum, r_a: float, r_b: float,
                     degeneracy_tol: float = DEFAULT_DEGENERACY_TOL) -> Optional[Witness]:
    """Index-change witness between two nondegenerate radii.

    Both radii must have all Jacobi eigenvalues away from zero. If the Morse
    indices differ, the smallest fiber eigenvalue strictly between ``h(r_a)``
    and ``h(r_b)`` changes sign and a bifurcation point lies in between.
    """
    if not r_a < r_b:
        raise ValueError("need r_a < r_b")
    try:
        idx_a = morse_index(model, spec, r_a, degeneracy_tol)
        idx_b = morse_index(model, spec, r_b, degeneracy_tol)
    except DegeneratePoint as exc:
        raise DegenerateEndpoint(str(exc)) from exc
    if idx_a == idx_b:
        return None
    h_a, h_b = stability_h(model, r_a), stability_h(model, r_b)
    lo, hi = min(h_a, h_b), max(h_a, h_b)
    for mu, _ in _levels(spec, hi):
        if lo < mu < hi:
            return Witness(mu, idx_a, idx_b)
    raise AssertionError("index change without an eigenvalue between the two levels")


def _verdict(margin: float, tolerance: float) -> Verdict:
    if abs(margin) <= tolerance:
        return Verdict.INCONCLUSIVE_DEGENERATE
    return Verdict.CERTIFIED if margin > 0 else Verdict.NOT_CERTIFIED


_GRID_SCOPE = "sampled claim: strict inequality verified at grid nodes only, not over the continuum"


def certify_no_bifurcation(model: WarpedModel, spec: FiberSpectrum, grid: Grid,
                           degeneracy_tol: float = DEFAULT_DEGENERACY_TOL) -> RigidityCertificate:
    """Grid check of ``alpha_dot**2 - alpha_ddot*alpha < mu_1/(n-1)``."""
    target = spec.first_nonzero() / (model.n - 1)
    margin = min(target - model.warp.jet(float(r)).stability_slack() for r in grid.nodes())
    tolerance = _band(target, degeneracy_tol)
    return RigidityCertificate(Criterion.PROP23, _verdict(margin, tolerance), margin,
                               grid.describe(), tolerance, _GRID_SCOPE)


def certify_corsc(model: WarpedModel, spec: FiberSpectrum, grid: Grid,
                  degeneracy_tol: float = DEFAULT_DEGENERACY_TOL,
                  R_fiber_max: Optional[float] = None) -> RigidityCertificate:
    """Grid check of ``alpha**2 (R + n/(n-1) H**2) < 2 mu_1 + R_fiber``.

    The ambient scalar curvature is evaluated with the largest fiber
    curvature and the right-hand side with the smallest, so the margin is
    the worst case over the fiber.
    """
    if model.fiber_scalar_curvature is not None:
        r_min, r_max = model.fiber_scalar_curvature
        if R_fiber_max is not None:
            r_max = max(r_max, R_fiber_max)
    elif R_fiber_max is not None:
        r_min = r_max = float(R_fiber_max)
    else:
        raise MissingFiberCurvature(f"model {model.label!r} carries no fiber scalar curvature")
    n = model.n
    mu1 = spec.first_nonzero()
    margin = math.inf
    for r in grid.nodes():
        r = float(r)
        jet = model.warp.jet(r)
        H = geometric_invariants(model, r).H
        lhs = jet.alpha_sq * (scalar_curvature(model, r, r_max) + n / (n - 1) * H * H)
        margin = min(margin, 2 * mu1 + r_min - lhs)
    # 2(n-1) converts to the units of the mu_1/(n-1) test so both verdicts agree
    tolerance = 2 * (n - 1) * _band(mu1 / (n - 1), degeneracy_tol)
    return RigidityCertificate(Criterion.CORSCALAR, _verdict(margin, tolerance), margin,
                               grid.describe(), tolerance, _GRID_SCOPE)


def _approach_points(model: WarpedModel, end: End, config: DivergenceConfig) -> list[float]:
    lo_open, hi_open = model.domain
    lo, hi = model.warp.clamped
    eps = model.warp.margin
    gf = config.growth_factor
    pts = []
    for k in range(config.samples):
        if end is End.UPPER:
            if math.isfinite(hi_open):
                base = lo if math.isfinite(lo) else hi_open - max(1.0, abs(hi_open))
                dist = 0.5 * (hi_open - base) * gf ** k
                if dist < eps:
                    break
                pts.append(hi_open - dist)
            else:
                base = lo if math.isfinite(lo) else 0.0
                pts.append(base + max(1.0, abs(base)) / gf ** k)
        else:
            if math.isfinite(lo_open):
                base = hi if math.isfinite(hi) else lo_open + max(1.0, abs(lo_open))
                dist = 0.5 * (base - lo_open) * gf ** k
                if dist < eps:
                    break
                pts.append(lo_open + dist)
            else:
                base = hi if math.isfinite(hi) else 0.0
                pts.append(base - max(1.0, abs(base)) / gf ** k)
    return [r for r in pts if model.warp.contains(r)]


def divergence_test(model: WarpedModel, end: End = End.UPPER,
                    config: DivergenceConfig = DivergenceConfig(),
                    spectrum: Optional[FiberSpectrum] = None) -> Divergence:
    """Classify ``alpha_dot**2 - alpha_ddot*alpha`` near one end of the domain.

    Samples a geometric sequence approaching the endpoint. Divergent: the
    tail is strictly increasing and ends above ``threshold``. Bounded: every
    sample stays below ``threshold`` in magnitude and the tail varies by at
    most ``window``. The limit itself is not verifiable from samples.
    """
    threshold = config.threshold
    if threshold is None:
        threshold = 1e3 * (spectrum.first_nonzero() if spectrum is not None else 1.0)
    window = config.window if config.window is not None else 1e-3 * threshold
    pts = _approach_points(model, end, config)
    if len(pts) < 8:
        return Divergence.UNDETERMINED
    vals = [model.warp.jet(r).stability_slack() for r in pts]
    tail = vals[len(vals) // 2:]
    if all(y > x for x, y in zip(tail, tail[1:])) and tail[-1] > threshold:
        return Divergence.DIVERGENT
    if max(abs(v) for v in vals) <= threshold and max(tail) - min(tail) <= window:
        return Divergence.BOUNDED
    return Divergence.UNDETERMINED


def check_general_rigidity(data: GeneralRigidityData) -> RigidityCertificate:
    """First satisfied sufficient condition for rigidity of a constant-potential
    CMC family, checked in order; the conditions are trusted as stated."""
    margin = data.mu1 - data.Q
    if margin > 0:
        return RigidityCertificate(Criterion.THEOREM1, Verdict.CERTIFIED, margin, "pointwise data")
    if data.hypersurface_convex and data.hypersurface_ricci is RicciSign.NONPOSITIVE:
        return RigidityCertificate(Criterion.COROLLARY1_I, Verdict.CERTIFIED, math.nan, "pointwise data")
    slack = -data.sff_norm_sq / (data.n - 1) - data.normal_ricci
    if slack >= 0:
        return RigidityCertificate(Criterion.COROLLARY1_II, Verdict.CERTIFIED, slack, "pointwise data")
    if data.hypersurface_ricci is RicciSign.FLAT and data.mu1 >= data.sff_norm_sq:
        return RigidityCertificate(Criterion.COROLLARY1_III, Verdict.CERTIFIED,
                                   data.mu1 - data.sff_norm_sq, "pointwise data")
    return RigidityCertificate(Criterion.THEOREM1, Verdict.NOT_CERTIFIED, margin, "pointwise data")


def analyze(model: WarpedModel, spec: FiberSpectrum, config: AnalysisConfig) -> BifurcationReport:
    """Scan, crossings, both certificates and both divergence tests in one report.

    A failing step is recorded in ``errors`` and the remaining steps still run.
    """
    errors: list[str] = []
    notes = list(model.notes)
    grid = config.grid

    def attempt(step, fn, default):
        try:
            return fn()
        except CMCBError as exc:
            errors.append(f"{step}: {type(exc).__name__}: {exc}")
            return default

    samples = attempt("scan", lambda: scan(model, spec, grid, config.degeneracy_tol,
                                           config.workers), [])
    crossings, touches = attempt(
        "crossings",
        lambda: scan_crossings(model, spec, (grid.r_min, grid.r_max), grid.points,
                               config.tol, config.degeneracy_tol),
        ([], []))
    certificates = []
    cert = attempt("prop23", lambda: certify_no_bifurcation(model, spec, grid, config.degeneracy_tol), None)
    if cert is not None:
        certificates.append(cert)
    if model.fiber_scalar_curvature is not None:
        cert = attempt("corscalar", lambda: certify_corsc(model, spec, grid, config.degeneracy_tol), None)
        if cert is not None:
            certificates.append(cert)
    by_end = {}
    for end in End:
        by_end[end.value] = attempt(
            f"divergence_{end.value}",
            lambda: divergence_test(model, end, config.divergence, spec),
            Divergence.UNDETERMINED)
    values = set(by_end.values())
    if Divergence.DIVERGENT in values:
        divergence = Divergence.DIVERGENT
        for end, d in by_end.items():
            if d is Divergence.DIVERGENT:
                notes.append(f"stability function unbounded towards the {end} end: "
                             "infinitely many bifurcation points accumulate there")
    elif values == {Divergence.BOUNDED}:
        divergence = Divergence.BOUNDED
    else:
        divergence = Divergence.UNDETERMINED

    degenerate = (any(c.verdict is Verdict.INCONCLUSIVE_DEGENERATE for c in certificates)
                  or bool(touches) or any(s.morse_index is None for s in samples))
    if crossings:
        summary = Summary.BIFURCATION_FOUND
    elif any(c.verdict is Verdict.CERTIFIED for c in certificates):
        summary = Summary.RIGID_CERTIFIED
    elif degenerate:
        summary = Summary.DEGENERATE
    else:
        summary = Summary.INCONCLUSIVE
    if errors:
        status = "error"
    elif summary is Summary.DEGENERATE:
        status = "degenerate"
    else:
        status = "ok"
    return BifurcationReport(
        label=model.label, samples=samples, crossings=crossings, touches=touches,
        certificates=certificates, divergence=divergence, divergence_by_end=by_end,
        summary=summary, status=status, notes=notes, errors=errors,
    )


def index_crossing_balance(crossings: Sequence[CrossingEvent]) -> int:
    """Net Morse-index change implied by a set of crossings."""
    return sum(c.index_jump for c in crossings)

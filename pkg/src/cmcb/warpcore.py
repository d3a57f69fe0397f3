"""Warped-product models and the pointwise geometry of the slices {r} x P.

The ambient metric is ``dr**2 + alpha(r)**2 g^P``. A warping function is
given either in geodesic form (``alpha`` and two derivatives in the
arc-length coordinate) or in graph form ``psi(r)**-2 dr**2 + r**2 g^P``,
where the arc length satisfies ``ds = -dr/psi`` and ``alpha = |r|``.

Every downstream quantity goes through the :class:`StabilityJet`
``(alpha**2, alpha_dot**2, alpha_ddot*alpha)``. For graph form the jet is
``(r**2, psi**2, r*psi*psi')`` by the chain rule, so no ODE is solved in the
core pipeline.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from ._numerics import adaptive_quad
from .errors import DerivativeMismatch, DomainError, NonPositiveWarp

RealFn = Callable[[float], float]


class WarpForm(enum.Enum):
    GEODESIC = "geodesic"
    GRAPH = "graph"


@dataclass(frozen=True)
class StabilityJet:
    alpha_sq: float
    alpha_dot_sq: float
    alpha_ddot_alpha: float

    def stability_slack(self) -> float:
        """``alpha_dot**2 - alpha_ddot*alpha``."""
        return self.alpha_dot_sq - self.alpha_ddot_alpha


@dataclass(frozen=True)
class WarpingFunction:
    """Closed-form warping data on an open radial interval.

    Use :meth:`geodesic` or :meth:`graph` rather than the raw constructor.
    ``scale`` multiplies alpha; it exists so that the gauge
    ``alpha -> alpha/c`` can be expressed for both forms.
    """

    form: WarpForm
    domain: tuple[float, float]
    alpha: Optional[RealFn] = None
    dalpha: Optional[RealFn] = None
    ddalpha: Optional[RealFn] = None
    psi_sq: Optional[RealFn] = None
    dpsi_sq: Optional[RealFn] = None
    scale: float = 1.0
    epsilon: Optional[float] = None

    def __post_init__(self):
        lo, hi = (float(v) for v in self.domain)
        if math.isnan(lo) or math.isnan(hi) or not lo < hi:
            raise DomainError(f"empty domain ({lo}, {hi})")
        object.__setattr__(self, "domain", (lo, hi))
        if self.form is WarpForm.GEODESIC:
            if None in (self.alpha, self.dalpha, self.ddalpha):
                raise ValueError("geodesic form needs alpha, dalpha and ddalpha")
        else:
            if None in (self.psi_sq, self.dpsi_sq):
                raise ValueError("graph form needs psi_sq and dpsi_sq")
            if lo < 0.0 < hi:
                raise DomainError("graph form: 0 must not lie inside the domain")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @classmethod
    def geodesic(cls, alpha: RealFn, dalpha: RealFn, ddalpha: RealFn,
                 domain: tuple[float, float], epsilon: float | None = None) -> "WarpingFunction":
        return cls(WarpForm.GEODESIC, domain, alpha=alpha, dalpha=dalpha,
                   ddalpha=ddalpha, epsilon=epsilon)

    @classmethod
    def graph(cls, psi_sq: RealFn, dpsi_sq: RealFn, domain: tuple[float, float],
              epsilon: float | None = None) -> "WarpingFunction":
        return cls(WarpForm.GRAPH, domain, psi_sq=psi_sq, dpsi_sq=dpsi_sq,
                   epsilon=epsilon)

    @property
    def margin(self) -> float:
        """Distance kept from each open endpoint."""
        if self.epsilon is not None:
            return self.epsilon
        lo, hi = self.domain
        if math.isfinite(lo) and math.isfinite(hi):
            width = hi - lo
        else:
            finite = [abs(v) for v in self.domain if math.isfinite(v)]
            width = max([1.0] + finite)
        return max(1e-6 * width, 1e-12)

    @property
    def clamped(self) -> tuple[float, float]:
        lo, hi = self.domain
        eps = self.margin
        return lo + eps, hi - eps

    def contains(self, r: float) -> bool:
        lo, hi = self.clamped
        return math.isfinite(r) and lo <= r <= hi

    def check(self, r: float) -> float:
        r = float(r)
        if not self.contains(r):
            lo, hi = self.clamped
            raise DomainError(f"r={r!r} outside clamped domain [{lo!r}, {hi!r}]")
        return r

    def jet(self, r: float) -> StabilityJet:
        r = self.check(r)
        s2 = self.scale * self.scale
        if self.form is WarpForm.GEODESIC:
            a = float(self.alpha(r))
            if not a > 0:
                raise NonPositiveWarp(f"alpha({r!r}) = {a!r}")
            da = float(self.dalpha(r))
            dda = float(self.ddalpha(r))
            return StabilityJet(s2 * a * a, s2 * da * da, s2 * dda * a)
        p2 = float(self.psi_sq(r))
        if not p2 > 0:
            raise NonPositiveWarp(f"psi^2({r!r}) = {p2!r}")
        dp2 = float(self.dpsi_sq(r))
        # alpha = |r|, alpha_dot^2 = psi^2, alpha_ddot*alpha = r*psi*psi' = (r/2)(psi^2)'
        return StabilityJet(s2 * r * r, s2 * p2, s2 * 0.5 * r * dp2)

    def rescaled(self, c: float) -> "WarpingFunction":
        """The warping function ``alpha / c``."""
        return replace(self, scale=self.scale / c)

    def sample_points(self, count: int, seed: int = 0) -> np.ndarray:
        lo, hi = self.clamped
        if not math.isfinite(lo):
            lo = hi - max(10.0, 10.0 * abs(hi))
        if not math.isfinite(hi):
            hi = lo + max(10.0, 10.0 * abs(lo))
        rng = np.random.default_rng(seed)
        return np.sort(rng.uniform(lo, hi, size=count))

    def validate_derivatives(self, samples: int = 64, rtol: float = 1e-6,
                             seed: int = 0) -> float:
        """Compare supplied derivatives with centered finite differences.

        Returns the worst relative discrepancy; raises
        :class:`DerivativeMismatch` when it exceeds ``rtol``.
        """
        lo, hi = self.domain
        if self.form is WarpForm.GEODESIC:
            checks = [(self.alpha, self.dalpha, 1), (self.alpha, self.ddalpha, 2)]
        else:
            checks = [(self.psi_sq, self.dpsi_sq, 1)]
        worst = 0.0
        for r in self.sample_points(samples, seed):
            room = min(r - lo, hi - r)
            # the local length scale is unknown: accept the best of several steps
            steps = [room * f for f in (1e-2, 1e-3, 1e-4)]
            steps += [max(1.0, abs(r)) * f for f in (1e-3, 1e-4, 1e-5)]
            steps = [h for h in steps if 0 < h < 0.5 * room]
            for f, df, order in checks:
                exact = df(r)
                best = math.inf
                for step in steps:
                    if order == 1:
                        fd = (f(r + step) - f(r - step)) / (2 * step)
                    else:
                        fd = (f(r + step) - 2 * f(r) + f(r - step)) / (step * step)
                    scale = max(abs(exact), abs(fd), abs(f(r)) / max(1.0, abs(r)), 1e-300)
                    best = min(best, abs(fd - exact) / scale)
                worst = max(worst, best)
        if worst > rtol:
            raise DerivativeMismatch(
                f"supplied derivative deviates from finite differences by {worst:.3e} (rtol {rtol:g})"
            )
        return worst


@dataclass(frozen=True)
class WarpedModel:
    """An n-dimensional warped product ``(r_lo, r_hi) x P``.

    ``fiber_scalar_curvature`` is the (min, max) of the scalar curvature of
    the fiber, when known.
    """

    n: int
    warp: WarpingFunction
    fiber_scalar_curvature: Optional[tuple[float, float]] = None
    label: str = ""
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension n must be an integer >= 2, got {self.n!r}")
        if self.fiber_scalar_curvature is not None:
            rmin, rmax = (float(v) for v in self.fiber_scalar_curvature)
            if rmin > rmax:
                raise ValueError("fiber scalar curvature: min exceeds max")
            object.__setattr__(self, "fiber_scalar_curvature", (rmin, rmax))

    @property
    def domain(self) -> tuple[float, float]:
        return self.warp.domain

    def rescaled(self, c: float) -> "WarpedModel":
        """Same model with ``alpha -> alpha/c``; pair with ``spectrum.scaled(1/c**2)``."""
        fsc = self.fiber_scalar_curvature
        if fsc is not None:
            fsc = (fsc[0] / (c * c), fsc[1] / (c * c))
        return replace(self, warp=self.warp.rescaled(c), fiber_scalar_curvature=fsc)


@dataclass(frozen=True)
class GeometricInvariants:
    H: float
    lagrange_multiplier: float
    sff_norm_sq: float
    normal_ricci: float
    Q: float


def stability_jet(model: WarpedModel, r: float) -> StabilityJet:
    return model.warp.jet(r)


def stability_h(model: WarpedModel, r: float) -> float:
    """``h(r) = (n-1)(alpha_dot**2 - alpha_ddot*alpha)``."""
    return (model.n - 1) * model.warp.jet(r).stability_slack()


def geometric_invariants(model: WarpedModel, r: float) -> GeometricInvariants:
    """Mean curvature (inward normal), |II|^2, normalized Ric(dr, dr) and the
    Jacobi potential ``Q = h / alpha**2`` of the slice at ``r``."""
    jet = model.warp.jet(r)
    n1 = model.n - 1
    warp = model.warp
    if warp.form is WarpForm.GEODESIC:
        H = -n1 * warp.dalpha(r) / warp.alpha(r)
    else:
        H = n1 * math.sqrt(warp.psi_sq(r)) / abs(r)
    return GeometricInvariants(
        H=H,
        lagrange_multiplier=n1 * H,
        sff_norm_sq=n1 * jet.alpha_dot_sq / jet.alpha_sq,
        normal_ricci=-jet.alpha_ddot_alpha / jet.alpha_sq,
        Q=n1 * jet.stability_slack() / jet.alpha_sq,
    )


def scalar_curvature(model: WarpedModel, r: float, R_fiber: float) -> float:
    """Ambient scalar curvature at ``(r, x)`` given the fiber's ``R(x)``."""
    jet = model.warp.jet(r)
    n = model.n
    return (R_fiber - (n - 1) * ((n - 2) * jet.alpha_dot_sq + 2 * jet.alpha_ddot_alpha)) / jet.alpha_sq


def geodesic_coordinate(model: WarpedModel, r_ref: float, r: float,
                        tol: float = 1e-10) -> float:
    """Arc length ``s(r) = -int_{r_ref}^{r} du / psi(u)`` for a graph-form model."""
    warp = model.warp
    if warp.form is not WarpForm.GRAPH:
        raise ValueError("geodesic_coordinate needs a graph-form model")
    if not tol > 0:
        raise ValueError("tol must be positive")
    warp.check(r_ref)
    warp.check(r)

    def inv_psi(u):
        p2 = warp.psi_sq(u)
        if not p2 > 0:
            raise NonPositiveWarp(f"psi^2({u!r}) = {p2!r}")
        return 1.0 / math.sqrt(p2)

    value, _ = adaptive_quad(inv_psi, r_ref, r, tol)
    return -value

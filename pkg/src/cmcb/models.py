"""Named warped-product models: the Schwarzschild family and a small catalog."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

from ._numerics import bisect
from .errors import InvalidMass, InvalidParams, RootNotFound, UnknownModel
from .spectra import DualLatticeBasis, FiberSpectrum, sphere_spectrum, torus_spectrum
from .warpcore import WarpedModel, WarpingFunction

HORIZON_RTOL = 1e-14


@dataclass(frozen=True)
class SchwarzschildParams:
    """Mass parameter ``K`` (> 0) and cosmological parameter ``E``."""

    K: float
    E: float = 0.0
    n: int = 3

    def __post_init__(self):
        if not (math.isfinite(self.K) and self.K > 0):
            raise InvalidMass(f"K must be positive, got {self.K!r}")
        if not math.isfinite(self.E):
            raise InvalidParams("E must be finite")
        if self.n != 3:
            raise InvalidParams("the Schwarzschild family is three-dimensional")

    def psi_sq(self, r: float) -> float:
        return 1.0 - 2.0 * self.K / r + self.E * r * r

    def dpsi_sq(self, r: float) -> float:
        return 2.0 * self.K / (r * r) + 2.0 * self.E * r


def horizon_radius(p: SchwarzschildParams) -> float:
    """Zero of ``psi**2`` bounding the maximal domain.

    The unique positive root when ``E >= 0``, the unique negative one when
    ``E < 0``. ``psi**2`` is monotone on the searched side, so bisection is safe.
    """
    K, E = p.K, p.E
    if E == 0:
        return 2.0 * K
    tiny = 1e-3 * K
    if E > 0:
        # psi^2 >= 1 - 2K/r, so the root lies below 2K
        lo, hi = tiny, 2.0 * K
        while p.psi_sq(lo) >= 0:
            lo *= 0.5
    else:
        # at |r| = R >= max(2K, sqrt(2/|E|)): psi^2 <= 1 + 1 - 2 = 0
        lo, hi = -max(2.0 * K, math.sqrt(2.0 / -E)), -tiny
        while p.psi_sq(hi) <= 0:
            hi *= 0.5
        if p.psi_sq(lo) == 0:
            return lo
    try:
        _, _, root = bisect(p.psi_sq, lo, hi, xtol=0.0, rtol=HORIZON_RTOL)
    except RootNotFound as exc:
        raise RootNotFound(f"horizon bracketing failed for K={K!r}, E={E!r}") from exc
    return root


def schwarzschild_model(p: SchwarzschildParams, label: str | None = None) -> WarpedModel:
    """Graph-form model ``psi**-2 dr**2 + r**2 g_{S^2}`` on its maximal domain.

    For ``E < 0`` the domain is ``(r_hat, 0)`` with negative radii; the
    slices are the spheres ``|r| = const`` and a note is attached.
    """
    r_hat = horizon_radius(p)
    domain = (r_hat, math.inf) if p.E >= 0 else (r_hat, 0.0)
    warp = WarpingFunction.graph(p.psi_sq, p.dpsi_sq, domain)
    notes = ()
    if p.E < 0:
        notes = ("negative radial coordinate: the domain (r_hat, 0) is used as given; "
                 "alpha = |r|",)
    return WarpedModel(
        n=3, warp=warp, fiber_scalar_curvature=(2.0, 2.0),
        label=label or f"schwarzschild K={p.K!r} E={p.E!r}", notes=notes,
    )


def schwarzschild_spectrum() -> FiberSpectrum:
    return sphere_spectrum(2)


CATALOG = ("pseudo_hyperbolic", "hyperbolic_sinh", "desitter_cusp", "power_law")


def catalog_model(name: str, params: Mapping[str, Any]) -> tuple[WarpedModel, FiberSpectrum]:
    """Build a catalog model with its default fiber.

    ``params`` needs ``n`` and ``domain``; ``desitter_cusp`` takes an optional
    dual ``lattice`` (identity by default) and ``power_law`` needs ``C`` and ``k``.
    """
    if name not in CATALOG:
        raise UnknownModel(name)
    try:
        n = int(params["n"])
        domain = tuple(float(v) for v in params["domain"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidParams(f"{name}: need integer n and a (lo, hi) domain") from exc
    if n < 2 or len(domain) != 2:
        raise InvalidParams(f"{name}: invalid n or domain")
    m = n - 1
    sphere_R = (float(m * (m - 1)),) * 2

    if name == "pseudo_hyperbolic":
        warp = WarpingFunction.geodesic(math.exp, math.exp, math.exp, domain)
        return WarpedModel(n, warp, sphere_R, label=name), sphere_spectrum(m)

    if name == "hyperbolic_sinh":
        if domain[0] < 0:
            raise InvalidParams("hyperbolic_sinh needs a domain inside (0, inf)")
        warp = WarpingFunction.geodesic(math.sinh, math.cosh, math.sinh, domain)
        return WarpedModel(n, warp, sphere_R, label=name), sphere_spectrum(m)

    if name == "desitter_cusp":
        lattice = params.get("lattice")
        dual = DualLatticeBasis.identity(m) if lattice is None else DualLatticeBasis(
            tuple(tuple(row) for row in lattice))
        if dual.dim != m:
            raise InvalidParams(f"desitter_cusp: lattice must be {m}x{m}")
        warp = WarpingFunction.geodesic(math.exp, math.exp, math.exp, domain)
        return WarpedModel(n, warp, (0.0, 0.0), label=name), torus_spectrum(dual)

    try:
        C = float(params["C"])
        k = float(params["k"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidParams("power_law needs C and k") from exc
    if C == 0 or not k > 1:
        raise InvalidParams("power_law needs C != 0 and k > 1")
    if domain[0] < 0:
        raise InvalidParams("power_law needs a domain inside (0, inf)")
    # alpha must be positive on the domain; the sign of C is absorbed
    c = abs(C)
    warp = WarpingFunction.geodesic(
        lambda r: c * r ** k,
        lambda r: c * k * r ** (k - 1),
        lambda r: c * k * (k - 1) * r ** (k - 2),
        domain,
    )
    return WarpedModel(n, warp, sphere_R, label=name), sphere_spectrum(m)

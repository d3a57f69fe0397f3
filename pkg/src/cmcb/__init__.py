"""Rigidity and bifurcation of constant-mean-curvature slices in warped products."""

from .bifurcation import (
    AnalysisConfig,
    BifurcationReport,
    CrossingEvent,
    Criterion,
    Direction,
    Divergence,
    DivergenceConfig,
    End,
    GeneralRigidityData,
    Grid,
    RicciSign,
    RigidityCertificate,
    Summary,
    TouchEvent,
    Verdict,
    analyze,
    certify_corsc,
    certify_no_bifurcation,
    check_general_rigidity,
    divergence_test,
    find_crossings,
    morse_index,
    scan,
    scan_crossings,
    shifted_eigenvalue,
    theorem2_witness,
)
from .models import (
    SchwarzschildParams,
    catalog_model,
    horizon_radius,
    schwarzschild_model,
    schwarzschild_spectrum,
)
from .spectra import (
    DualLatticeBasis,
    FiberSpectrum,
    explicit_spectrum,
    legendre_fd_oracle,
    sphere_spectrum,
    torus_spectrum,
)
from .warpcore import (
    GeometricInvariants,
    StabilityJet,
    WarpedModel,
    WarpingFunction,
    geodesic_coordinate,
    geometric_invariants,
    scalar_curvature,
    stability_h,
    stability_jet,
)

__version__ = "0.1.0"

"""Potential/geometry duality for radial quantum motion.

A central potential ``U(r)`` in flat ``R^N`` and a curved spherically
symmetric space with metric radius ``R(r)`` give the same reduced radial
dynamics when they are linked by a modified Riccati equation for the
superpotential ``W = (ln R)' (N-1)/2``.  This package solves that equation in
both directions, builds Lorentz embeddings of the Coulomb geometry, and
computes scattering through the Ellis wormhole potential.
"""

__version__ = "0.1.0"

from .specialfns import (  # noqa: E402
    BracketError,
    ConvergenceError,
    DomainError,
    Tolerance,
    bessel_i,
    bessel_i_scaled,
    find_root_bracketed,
    lambert_w0,
)
from .riccati import (  # noqa: E402
    ModelParams,
    PotentialSpec,
    RiccatiBlowUp,
    SuperpotentialSolution,
    ToleranceFailure,
    closed_form_coulomb_3d,
    closed_form_coulomb_plus_const,
    riccati_residual,
    riccati_rhs,
    solve_modified_riccati,
)
from .geometry import (  # noqa: E402
    ComplexEmbeddingError,
    GeometryProfile,
    embedding_profile,
    potential_from_geometry,
    radius_from_superpotential,
    rho_min,
)
from .scattering import (  # noqa: E402
    LinePotential,
    Numerics,
    ResolutionError,
    ellis_potential,
    phase_shift_sweep,
    solve_scattering,
    square_barrier,
)

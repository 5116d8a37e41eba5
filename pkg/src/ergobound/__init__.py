"""Arbitrarily sharp upper bounds on long-time averages of polynomial ODEs.

The toolkit turns the bound problem

    minimize over polynomial V the global maximum of  Phi + f . grad V

into a semidefinite program through a sum-of-squares relaxation, solves it
with a built-in primal-dual interior-point method, validates the resulting
certificates, and localizes the trajectories that nearly attain the bound.
"""

from .polyalg import (
    Monomial,
    Polynomial,
    PolySystem,
    affine_rescale,
    gradient,
    lie_derivative,
    lorenz_system,
    monomial_basis,
)
from .sdpsolve import SdpProblem, SdpSolution, SolveOptions, residuals, solve
from .sosbuild import (
    BoundCertificate,
    SosBoundProgram,
    assemble_sdp,
    build_bound_program,
    extract_certificate,
    solve_bound,
    validate_certificate,
)
from .dynamics import (
    PeriodicOrbit,
    SectionSpec,
    Trajectory,
    close_return_seeds,
    find_periodic_orbit,
    integrate,
    lorenz_equilibria,
    section_crossings,
    time_average,
)
from .certify import (
    GapReport,
    RegionGrid,
    markov_bound,
    occupancy_fraction,
    region_grid,
    residual_trace,
    trapping_check,
)

__version__ = "0.1.0"

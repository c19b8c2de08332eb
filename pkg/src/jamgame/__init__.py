"""Equilibria of a sensor-vs-jammer remote estimation game over a collision channel.

A coordinator jointly designs a threshold transmission rule and an
estimator against a jammer that may block the channel. For a jammer that
cannot sense the channel the saddle point is computed in closed form; for
a channel-sensing jammer, alternating projected gradient ascent and
convex-concave steps find certified approximate first-order Nash
equilibria. A Monte Carlo simulator validates analytic values empirically.
"""

from .dist import (
    AdmissibilityReport,
    Family,
    Gaussian,
    Laplace,
    SourceDistribution,
    Tabulated,
    check_symmetric_unimodal,
    gaussian,
    laplace,
)
from .nonsensing import (
    GameInstance,
    NonSensingEquilibrium,
    Regime,
    TransmitRule,
    jam_marginal,
    objective,
    solve_equilibrium,
    threshold_policy,
    verify_saddle,
)
from .quadrature import PiecewiseIntegrand, expectation, integrate
from .reactive import (
    FneCertificate,
    ReactivePoint,
    RegionShape,
    SolverOptions,
    SolverTrace,
    Termination,
    TransmitRegion,
    ccp_step,
    certify_fne,
    dc_parts,
    default_init,
    grad_g,
    grad_theta,
    grad_xhat,
    objective_jtilde,
    pga_step,
    solve_gda,
    solve_pga_ccp,
    transmit_region,
)
from .simulate import (
    JamKind,
    JamPolicy,
    PolicyBundle,
    SimResult,
    analytic_cost,
    bundle_from_nonsensing,
    bundle_from_reactive,
    simulate,
)

__version__ = "0.1.0"

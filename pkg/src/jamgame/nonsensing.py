"""Saddle-point equilibria against a jammer that cannot sense the channel.

The jammer blocks with a fixed probability phi independent of the sensor's
action. Under a symmetric unimodal zero-mean density the sensor's best
response is a symmetric threshold rule, both representation symbols sit at
the mean, and the optimal phi is either 0 or the unique root of the tail
second moment condition M(sqrt(c/(1-phi))) = d. This module computes that
equilibrium in closed form plus root-finding, and verifies the saddle
property numerically on deviation grids.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dist import SourceDistribution, check_symmetric_unimodal
from .quadrature import expectation


class Regime(Enum):
    NO_JAM = "NoJam"
    INTERIOR_JAM = "InteriorJam"


class InadmissibleDistributionError(ValueError):
    """The density fails the symmetric/unimodal admissibility check."""

    def __init__(self, report):
        self.report = report
        super().__init__(f"distribution is not admissible: {report.describe()}")


class BracketingError(ArithmeticError):
    """The jamming-probability root could not be bracketed below phi = 1."""


@dataclass(frozen=True)
class GameInstance:
    """Immutable problem statement: a source density plus the two costs.

    ``c`` is paid per transmission by the coordinator, ``d`` per blocking
    action by the jammer.
    """

    dist: SourceDistribution
    c: float
    d: float

    def __post_init__(self):
        if self.c < 0 or self.d < 0:
            raise ValueError("costs c and d must be nonnegative")


@dataclass(frozen=True)
class TransmitRule:
    """Threshold transmission rule: stay silent strictly inside an interval.

    Boundary points transmit (ties go to transmission; they carry no
    probability mass under a continuous density).
    """

    silent_lo: float
    silent_hi: float

    def transmit(self, x):
        x = np.asarray(x, dtype=float)
        return ~((x > self.silent_lo) & (x < self.silent_hi))

    def __call__(self, x):
        return self.transmit(x)


def threshold_policy(c: float, phi: float, xhat0: float = 0.0) -> TransmitRule:
    """Best-response transmission rule for jamming probability phi.

    Transmit iff (1 - phi)(x - xhat0)^2 >= c. At phi = 1 this degenerates
    to never-transmit.
    """
    if not 0.0 <= phi <= 1.0:
        raise ValueError("phi must lie in [0, 1]")
    if c < 0:
        raise ValueError("c must be nonnegative")
    if phi == 1.0:
        return TransmitRule(-math.inf, math.inf)
    tau = math.sqrt(c / (1.0 - phi))
    return TransmitRule(xhat0 - tau, xhat0 + tau)


def objective(inst: GameInstance, phi: float, xhat: tuple[float, float] = (0.0, 0.0)) -> float:
    """Game value E[min{(1-phi)(X-xhat0)^2, c}] + phi (E[(X-xhat1)^2] - d).

    This is the objective after the sensor best-responds to (phi, xhat)
    with the threshold rule.
    """
    if not 0.0 <= phi <= 1.0:
        raise ValueError("phi must lie in [0, 1]")
    x0, x1 = xhat
    second = inst.dist.variance + x1 * x1
    if phi == 1.0:
        return second - inst.d
    tau = math.sqrt(inst.c / (1.0 - phi))
    min_term = expectation(
        inst.dist,
        lambda x: np.minimum((1.0 - phi) * (x - x0) ** 2, inst.c),
        kinks=(x0 - tau, x0 + tau),
    )
    return min_term + phi * (second - inst.d)


def jam_marginal(inst: GameInstance, phi: float) -> float:
    """Derivative of the reduced objective in phi: M(sqrt(c/(1-phi))) - d.

    Strictly decreasing in phi with limit -d as phi -> 1; its sign at 0 and
    its root decide the equilibrium regime.
    """
    if not 0.0 <= phi < 1.0:
        raise ValueError("phi must lie in [0, 1)")
    tau = math.sqrt(inst.c / (1.0 - phi))
    return inst.dist.tail_second_moment(tau) - inst.d


def _jam_marginal_derivative(inst: GameInstance, phi: float) -> float:
    # d/dphi [M(tau(phi)) - d] with M'(t) = -2 t^2 f(t), tau' = tau / (2(1-phi))
    tau = math.sqrt(inst.c / (1.0 - phi))
    return -float(inst.dist.pdf(tau)) * tau**3 / (1.0 - phi)


@dataclass(frozen=True)
class NonSensingEquilibrium:
    """Saddle point for the non-sensing jammer.

    ``threshold`` is tau = sqrt(c / (1 - phi_star)); the sensor transmits
    iff |x| > tau. Both representation symbols are 0.
    """

    phi_star: float
    xhat: tuple[float, float]
    threshold: float
    value: float
    regime: Regime

    def to_dict(self) -> dict:
        return {
            "phi_star": self.phi_star,
            "xhat0": self.xhat[0],
            "xhat1": self.xhat[1],
            "threshold": self.threshold,
            "value": self.value,
            "regime": self.regime.value,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)


def solve_equilibrium(
    inst: GameInstance,
    xtol: float = 1e-10,
    check_admissible: bool = True,
) -> NonSensingEquilibrium:
    """Closed-form equilibrium: regime split plus monotone root-find.

    Bisection brackets the unique root of the (strictly decreasing) jamming
    marginal, then a single Newton step with the closed-form derivative
    polishes the final digit. Distributions failing the admissibility check
    are refused rather than solved incorrectly.
    """
    if check_admissible:
        report = check_symmetric_unimodal(inst.dist)
        if not report.ok:
            raise InadmissibleDistributionError(report)

    g0 = jam_marginal(inst, 0.0)
    if g0 < 0.0:
        phi = 0.0
        regime = Regime.NO_JAM
    else:
        regime = Regime.INTERIOR_JAM
        if g0 == 0.0:
            phi = 0.0
        else:
            lo, glo = 0.0, g0
            delta = 0.25
            hi = 1.0 - delta
            while jam_marginal(inst, hi) >= 0.0:
                delta *= 0.5
                if delta < 1e-12:
                    raise BracketingError(
                        "jamming marginal stays nonnegative up to phi = 1 - 1e-12; "
                        "the root is at the regime boundary (c ~ 0 with d <= variance)"
                    )
                hi = 1.0 - delta
            while hi - lo > xtol:
                mid = 0.5 * (lo + hi)
                if jam_marginal(inst, mid) >= 0.0:
                    lo = mid
                else:
                    hi = mid
            phi = 0.5 * (lo + hi)
            slope = _jam_marginal_derivative(inst, phi)
            if slope < 0.0:
                newton = phi - jam_marginal(inst, phi) / slope
                if lo <= newton <= hi:
                    phi = newton

    tau = math.sqrt(inst.c / (1.0 - phi))
    return NonSensingEquilibrium(
        phi_star=phi,
        xhat=(0.0, 0.0),
        threshold=tau,
        value=objective(inst, phi, (0.0, 0.0)),
        regime=regime,
    )


def fixed_policy_objective(
    inst: GameInstance,
    rule: TransmitRule,
    xhat: tuple[float, float],
    phi: float,
) -> float:
    """Objective when the coordinator's rule and symbols are frozen.

    Used for jammer-deviation sweeps: transmit region pays c plus, on a
    block, the error against xhat1; the silent region mixes the idle symbol
    error with the blocked one.
    """
    x0, x1 = xhat

    def g(x):
        tx = rule.transmit(x)
        err1 = (x - x1) ** 2
        on_tx = phi * err1 + inst.c
        on_silent = (1.0 - phi) * (x - x0) ** 2 + phi * err1
        return np.where(tx, on_tx, on_silent)

    kinks = [b for b in (rule.silent_lo, rule.silent_hi) if math.isfinite(b)]
    return expectation(inst.dist, g, kinks=kinks) - inst.d * phi


@dataclass
class SaddleReport:
    """Grid verification of the saddle inequalities.

    ``jammer_violations`` lists (phi, objective, excess) where a jammer
    deviation beats the equilibrium value by more than tol;
    ``coordinator_violations`` lists (xhat0, objective, shortfall) for
    coordinator deviations that undercut it.
    """

    tol: float
    value: float
    jammer_violations: list[tuple[float, float, float]]
    coordinator_violations: list[tuple[float, float, float]]
    worst_jammer_excess: float
    worst_coordinator_shortfall: float

    @property
    def ok(self) -> bool:
        return not self.jammer_violations and not self.coordinator_violations


def verify_saddle(
    inst: GameInstance,
    eq: NonSensingEquilibrium,
    phi_points: int = 101,
    xhat_points: int = 101,
    xhat_span: float | None = None,
    tol: float = 1e-6,
) -> SaddleReport:
    """Check both saddle inequalities on deviation grids.

    Jammer side: with the coordinator frozen at the equilibrium rule, no
    phi on a [0, 1] grid may exceed the equilibrium value beyond tol.
    Coordinator side: for each xhat0 on a grid (with the induced
    best-response threshold rule at phi_star), the objective may not drop
    below the value beyond tol.
    """
    rule = TransmitRule(-eq.threshold, eq.threshold)
    span = 3.0 * inst.dist.scale if xhat_span is None else xhat_span

    jam_viol: list[tuple[float, float, float]] = []
    worst_excess = -math.inf
    for phi in np.linspace(0.0, 1.0, phi_points):
        val = fixed_policy_objective(inst, rule, eq.xhat, float(phi))
        excess = val - eq.value
        worst_excess = max(worst_excess, excess)
        if excess > tol:
            jam_viol.append((float(phi), val, excess))

    coord_viol: list[tuple[float, float, float]] = []
    worst_short = -math.inf
    for x0 in np.linspace(-span, span, xhat_points):
        val = objective(inst, eq.phi_star, (float(x0), 0.0))
        shortfall = eq.value - val
        worst_short = max(worst_short, shortfall)
        if shortfall > tol:
            coord_viol.append((float(x0), val, shortfall))

    return SaddleReport(
        tol=tol,
        value=eq.value,
        jammer_violations=jam_viol,
        coordinator_violations=coord_viol,
        worst_jammer_excess=worst_excess,
        worst_coordinator_shortfall=worst_short,
    )

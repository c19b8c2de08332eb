"""Minimax machinery for the channel-sensing (reactive) jammer.

The jammer observes the sensor's action and blocks with probability alpha
when the channel is idle and beta when it is busy. After the sensor best
responds, the game reduces to min over the representation symbols xhat of
max over theta = (alpha, beta) in the unit box of

    Jt(xhat, theta) = E[min{A(X), B(X)}],
    A(x) = beta (x - xhat1)^2 + c - d beta            (transmit branch)
    B(x) = alpha (x - xhat1)^2 + (1 - alpha)(x - xhat0)^2 - d alpha,

which is concave in theta but nonconvex in xhat. Solvers target approximate
first-order Nash equilibria: small gradient norm on the xhat side and a
small box-LP ascent gap on the theta side. The primary solver alternates
projected gradient ascent on theta with a convex-concave step on xhat built
from the split Jt = F - G (F a closed-form quadratic, G a convex
expectation of a max of quadratics); a two-timescale gradient
descent-ascent baseline shares the termination contract.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable

import numpy as np

from .nonsensing import GameInstance
from .quadrature import expectation

GRAD_TOL = 1e-12  # quadrature tolerance for objective/gradient expectations;
# tight enough that finite-difference checks at h = 1e-5 stay below 1e-6


@dataclass(frozen=True)
class ReactivePoint:
    """Candidate strategy pair: representation symbols and jamming probs."""

    xhat: tuple[float, float]
    theta: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "xhat", tuple(float(v) for v in self.xhat))
        object.__setattr__(self, "theta", tuple(float(v) for v in self.theta))
        a, b = self.theta
        if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
            raise ValueError("theta must lie in the unit box")
        if not all(math.isfinite(v) for v in self.xhat):
            raise ValueError("xhat must be finite")

    def mirrored(self) -> "ReactivePoint":
        return ReactivePoint((-self.xhat[0], -self.xhat[1]), self.theta)

    def to_dict(self) -> dict:
        return {
            "xhat0": self.xhat[0],
            "xhat1": self.xhat[1],
            "alpha": self.theta[0],
            "beta": self.theta[1],
        }


class RegionShape(Enum):
    ALWAYS_TRANSMIT = "AlwaysTransmit"
    NEVER_TRANSMIT = "NeverTransmit"
    OUTSIDE_INTERVAL = "OutsideInterval"
    HALF_LINE = "HalfLine"


@dataclass(frozen=True)
class TransmitRegion:
    """Sign classification of D(x) = silent cost - transmit cost.

    D is a quadratic with leading coefficient 1 - beta >= 0; the sensor
    transmits where D(x) >= 0 (ties transmit, a measure-zero convention).
    For beta < 1 with two real roots the silent set is the open interval
    between them; for beta = 1 the quadratic degenerates to a line.
    """

    a2: float
    a1: float
    a0: float
    roots: tuple[float, ...]
    shape: RegionShape

    def d_value(self, x):
        x = np.asarray(x, dtype=float)
        return (self.a2 * x + self.a1) * x + self.a0

    def transmit(self, x):
        return self.d_value(x) >= 0.0

    def kinks(self) -> tuple[float, ...]:
        return self.roots

    def silent_interval(self) -> tuple[float, float]:
        """Silent set as one (possibly empty or unbounded) open interval."""
        if self.shape is RegionShape.ALWAYS_TRANSMIT:
            return (0.0, 0.0)
        if self.shape is RegionShape.NEVER_TRANSMIT:
            return (-math.inf, math.inf)
        if self.shape is RegionShape.OUTSIDE_INTERVAL:
            return (self.roots[0], self.roots[1])
        # half line: silent where the line is negative
        (r,) = self.roots
        return (-math.inf, r) if self.a1 > 0 else (r, math.inf)


def transmit_region(
    xhat: tuple[float, float], theta: tuple[float, float], c: float, d: float
) -> TransmitRegion:
    """Best-response transmission region for fixed (xhat, theta)."""
    x0, x1 = xhat
    a, b = theta
    a2 = 1.0 - b
    a1 = -2.0 * ((a - b) * x1 + (1.0 - a) * x0)
    a0 = (a - b) * x1 * x1 + (1.0 - a) * x0 * x0 - c + d * (b - a)

    if a2 > 0.0:
        disc = a1 * a1 - 4.0 * a2 * a0
        if disc > 0.0:
            # stable quadratic formula: avoid cancellation in the small root
            q = -0.5 * (a1 + math.copysign(math.sqrt(disc), a1 if a1 != 0 else 1.0))
            r1, r2 = q / a2, (a0 / q if q != 0.0 else -a1 / a2)
            lo, hi = sorted((r1, r2))
            return TransmitRegion(a2, a1, a0, (lo, hi), RegionShape.OUTSIDE_INTERVAL)
        return TransmitRegion(a2, a1, a0, (), RegionShape.ALWAYS_TRANSMIT)

    # beta = 1: linear (or constant) comparison
    if a1 != 0.0:
        return TransmitRegion(a2, a1, a0, (-a0 / a1,), RegionShape.HALF_LINE)
    shape = RegionShape.ALWAYS_TRANSMIT if a0 >= 0.0 else RegionShape.NEVER_TRANSMIT
    return TransmitRegion(a2, a1, a0, (), shape)


def _branches(inst: GameInstance, p: ReactivePoint, x: np.ndarray):
    x0, x1 = p.xhat
    a, b = p.theta
    trans = b * (x - x1) ** 2 + inst.c - inst.d * b
    silent = a * (x - x1) ** 2 + (1.0 - a) * (x - x0) ** 2 - inst.d * a
    return trans, silent


def _region_kinks(inst: GameInstance, p: ReactivePoint) -> tuple[float, ...]:
    return transmit_region(p.xhat, p.theta, inst.c, inst.d).kinks()


def objective_jtilde(inst: GameInstance, p: ReactivePoint) -> float:
    """Reduced objective Jt = E[min of the two branch costs]."""

    def g(x):
        trans, silent = _branches(inst, p, x)
        return np.minimum(trans, silent)

    return expectation(inst.dist, g, kinks=_region_kinks(inst, p), tol=GRAD_TOL)


def _grad_components(inst: GameInstance, p: ReactivePoint, x: np.ndarray, on_min: bool):
    """Branch-selected integrand rows [d/dxhat0, d/dxhat1, d/dalpha, d/dbeta].

    ``on_min`` selects the branch the min picks (gradients of Jt); the
    complement gives the gradients of the convex part G. Ties (measure
    zero) resolve to the transmit branch.
    """
    x0, x1 = p.xhat
    a, b = p.theta
    trans, silent = _branches(inst, p, x)
    tx = trans <= silent if on_min else trans > silent
    sx = ~tx
    dev0 = x - x0
    dev1 = x - x1
    return np.stack(
        [
            -2.0 * (1.0 - a) * dev0 * sx,
            np.where(tx, -2.0 * b * dev1, -2.0 * a * dev1),
            (dev1**2 - dev0**2 - inst.d) * sx,
            (dev1**2 - inst.d) * tx,
        ],
        axis=1,
    )


def grad_xhat(inst: GameInstance, p: ReactivePoint) -> np.ndarray:
    """Partial gradient of Jt in the representation symbols."""
    vals = expectation(
        inst.dist,
        lambda x: _grad_components(inst, p, x, on_min=True)[:, :2],
        kinks=_region_kinks(inst, p),
        tol=GRAD_TOL,
    )
    return np.asarray(vals)


def grad_theta(inst: GameInstance, p: ReactivePoint) -> np.ndarray:
    """Partial gradient of Jt in the jamming probabilities."""
    vals = expectation(
        inst.dist,
        lambda x: _grad_components(inst, p, x, on_min=True)[:, 2:],
        kinks=_region_kinks(inst, p),
        tol=GRAD_TOL,
    )
    return np.asarray(vals)


def _grads_full(inst: GameInstance, p: ReactivePoint) -> tuple[np.ndarray, np.ndarray]:
    vals = expectation(
        inst.dist,
        lambda x: _grad_components(inst, p, x, on_min=True),
        kinks=_region_kinks(inst, p),
        tol=GRAD_TOL,
    )
    return vals[:2], vals[2:]


def dc_parts(inst: GameInstance, p: ReactivePoint) -> tuple[float, float]:
    """Convex split Jt = F - G.

    F is the closed-form quadratic (the sum of both branch expectations);
    G is the expectation of the max of the branches.
    """
    x0, x1 = p.xhat
    a, b = p.theta
    s2 = inst.dist.variance
    f_val = (
        (1.0 - a) * x0 * x0
        + (a + b) * x1 * x1
        + (1.0 + b) * s2
        + inst.c
        - inst.d * (a + b)
    )

    def g(x):
        trans, silent = _branches(inst, p, x)
        return np.maximum(trans, silent)

    g_val = expectation(inst.dist, g, kinks=_region_kinks(inst, p), tol=GRAD_TOL)
    return f_val, g_val


def grad_g(inst: GameInstance, p: ReactivePoint) -> np.ndarray:
    """Gradient of the convex part G in xhat (branch complement of grad_xhat)."""
    vals = expectation(
        inst.dist,
        lambda x: _grad_components(inst, p, x, on_min=False)[:, :2],
        kinks=_region_kinks(inst, p),
        tol=GRAD_TOL,
    )
    return np.asarray(vals)


def pga_step(theta, grad, step: float) -> np.ndarray:
    """Projected gradient ascent step: clamp theta + step * grad to the box."""
    if step <= 0:
        raise ValueError("step must be positive")
    return np.clip(np.asarray(theta, dtype=float) + step * np.asarray(grad, dtype=float), 0.0, 1.0)


def ccp_step(inst: GameInstance, xhat, theta) -> np.ndarray:
    """Convex-concave update of xhat for fixed theta.

    Minimizes F minus the linearization of G at the current xhat; since F
    is a diagonal quadratic the minimizer is the pseudo-inverse solve
    xhat' = Adagger(theta) g(xhat, theta), with singular directions (alpha = 1,
    or alpha + beta = 0) pinned to 0.
    """
    a, b = theta
    g = grad_g(inst, ReactivePoint(tuple(xhat), (float(a), float(b))))
    new0 = g[0] / (2.0 * (1.0 - a)) if a < 1.0 else 0.0
    new1 = g[1] / (2.0 * (a + b)) if a + b > 0.0 else 0.0
    return np.array([new0, new1])


@dataclass(frozen=True)
class FneCertificate:
    """First-order equilibrium residuals at a point.

    ``grad_norm`` is the Euclidean norm of the xhat-gradient; ``lp_gap`` is
    the exact maximum of <grad_theta, theta' - theta> over the unit box
    (coordinate-separable, so solved at the box edges).
    """

    grad_norm: float
    lp_gap: float
    epsilon: float
    certified: bool

    def to_dict(self) -> dict:
        return {
            "grad_norm": self.grad_norm,
            "lp_gap": self.lp_gap,
            "epsilon": self.epsilon,
            "certified": self.certified,
        }


def lp_ascent_gap(grad: Iterable[float], theta: Iterable[float]) -> float:
    """max over the box of the linearized ascent improvement; always >= 0."""
    return float(
        sum(max(q * (0.0 - t), q * (1.0 - t)) for q, t in zip(grad, theta))
    )


def certify_fne(inst: GameInstance, p: ReactivePoint, epsilon: float) -> FneCertificate:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    gx, q = _grads_full(inst, p)
    grad_norm = float(np.linalg.norm(gx))
    gap = lp_ascent_gap(q, p.theta)
    return FneCertificate(grad_norm, gap, epsilon, grad_norm <= epsilon and gap <= epsilon)


class Termination(Enum):
    EPSILON_FNE = "EpsilonFNE"
    MAX_ITERS = "MaxIters"
    STALLED = "Stalled"


@dataclass(frozen=True)
class TraceRow:
    k: int
    xhat0: float
    xhat1: float
    alpha: float
    beta: float
    objective: float
    grad_xhat_norm: float
    lp_gap: float
    step_size: float
    ccp_descent: float  # Jt(x', th') - Jt(x, th'); NaN for GDA rows

    FIELDS = ("k", "xhat0", "xhat1", "alpha", "beta", "objective",
              "grad_xhat_norm", "lp_gap", "step_size", "ccp_descent")


@dataclass
class SolverTrace:
    rows: list[TraceRow] = field(default_factory=list)
    terminated_by: Termination = Termination.MAX_ITERS

    @property
    def iterations(self) -> int:
        return self.rows[-1].k if self.rows else 0

    def write_csv(self, out: IO[str]) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(TraceRow.FIELDS)
        for r in self.rows:
            w.writerow([r.k] + [repr(getattr(r, f)) for f in TraceRow.FIELDS[1:]])


@dataclass(frozen=True)
class SolverOptions:
    """Knobs shared by both solvers.

    ``step_size`` drives the theta-ascent; ``descent_step`` is only used by
    the GDA baseline (its xhat gradient step, kept an order of magnitude
    smaller for two-timescale stability). ``step_schedule`` is "fixed" or
    "sqrt" (step_size / sqrt(k)).
    """

    step_size: float = 0.1
    descent_step: float = 0.01
    step_schedule: str = "fixed"
    epsilon: float = 1e-5
    max_iters: int = 100_000
    stall_tol: float = 1e-12
    stall_iters: int = 50
    canonicalize: bool = True
    record_trace: bool = True

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.step_size <= 0 or self.descent_step <= 0:
            raise ValueError("step sizes must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.step_schedule not in ("fixed", "sqrt"):
            raise ValueError(f"unknown step schedule {self.step_schedule!r}")

    def step_at(self, k: int) -> float:
        if self.step_schedule == "fixed":
            return self.step_size
        if self.step_schedule == "sqrt":
            return self.step_size / math.sqrt(k)
        raise ValueError(f"unknown step schedule {self.step_schedule!r}")


def default_init(inst: GameInstance) -> ReactivePoint:
    """Asymmetric default start: the symmetric point xhat = (0, 0) is a
    stationary trap (both xhat gradients vanish by symmetry)."""
    s = inst.dist.scale
    return ReactivePoint((s, -s), (0.5, 0.5))


def _canonical(inst: GameInstance, p: ReactivePoint, cert: FneCertificate) -> tuple[ReactivePoint, FneCertificate]:
    # report the mirror representative with xhat0 > 0
    if p.xhat[0] < 0.0:
        mirrored = p.mirrored()
        return mirrored, certify_fne(inst, mirrored, cert.epsilon)
    return p, cert


def solve_pga_ccp(
    inst: GameInstance,
    init: ReactivePoint | None = None,
    opts: SolverOptions | None = None,
) -> tuple[ReactivePoint, SolverTrace, FneCertificate]:
    """Alternate projected gradient ascent on theta with CCP steps on xhat.

    Runs until the epsilon-FNE conditions hold, the iteration budget is
    exhausted, or the iterates stall; non-certified termination is reported
    through the certificate, not an exception. When certified and
    ``opts.canonicalize`` is set, the returned point is the xhat0 > 0 mirror
    representative (an equally certified equilibrium under a symmetric
    density); the trace keeps the raw trajectory.
    """
    opts = opts or SolverOptions()
    p = init or default_init(inst)
    trace = SolverTrace()

    gx, q = _grads_full(inst, p)
    gap = lp_ascent_gap(q, p.theta)
    gnorm = float(np.linalg.norm(gx))
    if opts.record_trace:
        trace.rows.append(
            TraceRow(0, *p.xhat, *p.theta, objective_jtilde(inst, p),
                     gnorm, gap, 0.0, 0.0)
        )
    cert = FneCertificate(gnorm, gap, opts.epsilon, gnorm <= opts.epsilon and gap <= opts.epsilon)
    if cert.certified:
        trace.terminated_by = Termination.EPSILON_FNE
        p, cert = _canonical(inst, p, cert) if opts.canonicalize else (p, cert)
        return p, trace, cert

    stall_count = 0
    for k in range(1, opts.max_iters + 1):
        step = opts.step_at(k)
        theta_new = pga_step(p.theta, q, step)
        at_theta = ReactivePoint(p.xhat, tuple(theta_new))
        j_before = objective_jtilde(inst, at_theta)
        xhat_new = ccp_step(inst, p.xhat, theta_new)
        p_new = ReactivePoint(tuple(xhat_new), tuple(theta_new))
        j_after = objective_jtilde(inst, p_new)

        gx, q = _grads_full(inst, p_new)
        gnorm = float(np.linalg.norm(gx))
        gap = lp_ascent_gap(q, p_new.theta)
        if opts.record_trace:
            trace.rows.append(
                TraceRow(k, *p_new.xhat, *p_new.theta, j_after, gnorm, gap,
                         step, j_after - j_before)
            )

        moved = math.hypot(
            xhat_new[0] - p.xhat[0], xhat_new[1] - p.xhat[1],
            theta_new[0] - p.theta[0], theta_new[1] - p.theta[1],
        )
        p = p_new
        if gnorm <= opts.epsilon and gap <= opts.epsilon:
            trace.terminated_by = Termination.EPSILON_FNE
            break
        stall_count = stall_count + 1 if moved < opts.stall_tol else 0
        if stall_count >= opts.stall_iters:
            trace.terminated_by = Termination.STALLED
            break
    else:
        trace.terminated_by = Termination.MAX_ITERS

    cert = FneCertificate(gnorm, gap, opts.epsilon, gnorm <= opts.epsilon and gap <= opts.epsilon)
    if opts.canonicalize and trace.terminated_by is Termination.EPSILON_FNE:
        p, cert = _canonical(inst, p, cert)
    return p, trace, cert


def solve_gda(
    inst: GameInstance,
    init: ReactivePoint | None = None,
    opts: SolverOptions | None = None,
) -> tuple[ReactivePoint, SolverTrace, FneCertificate]:
    """Two-timescale gradient descent-ascent baseline.

    Projected ascent on theta with ``step_size``, plain descent on xhat with
    ``descent_step``; same termination contract as the primary solver. With
    equal step sizes the iterates can cycle, in which case termination is
    by stall detection or the iteration budget.
    """
    opts = opts or SolverOptions()
    p = init or default_init(inst)
    trace = SolverTrace()

    gx, q = _grads_full(inst, p)
    gnorm = float(np.linalg.norm(gx))
    gap = lp_ascent_gap(q, p.theta)
    if opts.record_trace:
        trace.rows.append(
            TraceRow(0, *p.xhat, *p.theta, objective_jtilde(inst, p),
                     gnorm, gap, 0.0, math.nan)
        )
    cert = FneCertificate(gnorm, gap, opts.epsilon, gnorm <= opts.epsilon and gap <= opts.epsilon)
    if cert.certified:
        trace.terminated_by = Termination.EPSILON_FNE
        p, cert = _canonical(inst, p, cert) if opts.canonicalize else (p, cert)
        return p, trace, cert

    stall_count = 0
    for k in range(1, opts.max_iters + 1):
        step = opts.step_at(k)
        theta_new = pga_step(p.theta, q, step)
        gx_mid = grad_xhat(inst, ReactivePoint(p.xhat, tuple(theta_new)))
        xhat_new = np.asarray(p.xhat) - opts.descent_step * gx_mid
        p_new = ReactivePoint(tuple(xhat_new), tuple(theta_new))

        gx, q = _grads_full(inst, p_new)
        gnorm = float(np.linalg.norm(gx))
        gap = lp_ascent_gap(q, p_new.theta)
        if opts.record_trace:
            trace.rows.append(
                TraceRow(k, *p_new.xhat, *p_new.theta,
                         objective_jtilde(inst, p_new), gnorm, gap, step, math.nan)
            )

        moved = math.hypot(
            xhat_new[0] - p.xhat[0], xhat_new[1] - p.xhat[1],
            theta_new[0] - p.theta[0], theta_new[1] - p.theta[1],
        )
        p = p_new
        if gnorm <= opts.epsilon and gap <= opts.epsilon:
            trace.terminated_by = Termination.EPSILON_FNE
            break
        stall_count = stall_count + 1 if moved < opts.stall_tol else 0
        if stall_count >= opts.stall_iters:
            trace.terminated_by = Termination.STALLED
            break
    else:
        trace.terminated_by = Termination.MAX_ITERS

    cert = FneCertificate(gnorm, gap, opts.epsilon, gnorm <= opts.epsilon and gap <= opts.epsilon)
    if opts.canonicalize and trace.terminated_by is Termination.EPSILON_FNE:
        p, cert = _canonical(inst, p, cert)
    return p, trace, cert


def point_to_json(p: ReactivePoint, cert: FneCertificate | None = None,
                  trace: SolverTrace | None = None, **extra) -> str:
    payload: dict = {**p.to_dict(), **extra}
    if cert is not None:
        payload["certificate"] = cert.to_dict()
    if trace is not None:
        payload["iterations"] = trace.iterations
        payload["terminated_by"] = trace.terminated_by.value
    return json.dumps(payload, sort_keys=True)

"""Command-line front end.

Subcommands: solve-nonsensing, solve-reactive, simulate, sweep, compare.
Every command is deterministic given its flags and seed, emits plain JSON
or CSV artifacts, and honors a key=value config file whose entries act as
flag defaults (explicit flags win).

Exit codes: 0 success/certified, 2 config error, 3 numerical failure,
4 solver terminated without certification.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys

import numpy as np

from . import dist
from .nonsensing import (
    BracketingError,
    GameInstance,
    InadmissibleDistributionError,
    solve_equilibrium,
    verify_saddle,
)
from .quadrature import IntegrationError
from .reactive import (
    ReactivePoint,
    SolverOptions,
    default_init,
    solve_gda,
    solve_pga_ccp,
)
from .simulate import JamPolicy, PolicyBundle, analytic_cost, bundle_from_reactive, simulate

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_UNCERTIFIED = 4


class ConfigError(ValueError):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


def build_distribution(args) -> dist.SourceDistribution:
    if args.dist == "gaussian":
        if args.sigma2 is None:
            raise ConfigError("--sigma2 is required for --dist gaussian")
        return dist.gaussian(args.sigma2, args.truncation_radius)
    if args.dist == "laplace":
        if (args.scale is None) == (args.sigma2 is None):
            raise ConfigError("--dist laplace needs exactly one of --scale / --sigma2")
        return dist.laplace(scale=args.scale, sigma2=args.sigma2,
                            truncation_radius=args.truncation_radius)
    if args.dist == "custom":
        if not args.pdf_csv:
            raise ConfigError("--pdf-csv is required for --dist custom")
        try:
            return dist.Tabulated.from_csv(args.pdf_csv)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load tabulated density: {exc}")
    raise ConfigError(f"unknown distribution {args.dist!r}")


def build_instance(args) -> GameInstance:
    return GameInstance(build_distribution(args), args.c, args.d)


def _write_text(path: str | None, text: str) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _grid(spec: str, name: str) -> np.ndarray:
    try:
        lo, hi, n = spec.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ConfigError(f"{name} must be lo:hi:count, got {spec!r}")
    if n < 1 or hi < lo or (n == 1 and hi != lo):
        raise ConfigError(f"{name} is degenerate: {spec!r}")
    return np.linspace(lo, hi, n)


def cmd_solve_nonsensing(args) -> int:
    inst = build_instance(args)
    try:
        eq = solve_equilibrium(inst)
    except InadmissibleDistributionError as exc:
        print(f"refusing to solve: {exc.report.describe()}", file=sys.stderr)
        return EXIT_CONFIG
    payload = dict(eq.to_dict(), schema_version=SCHEMA_VERSION, c=inst.c, d=inst.d,
                   sigma2=inst.dist.variance, family=inst.dist.family.value)
    print(f"regime         {eq.regime.value}")
    print(f"phi_star       {_fmt(eq.phi_star)}")
    print(f"threshold tau  {_fmt(eq.threshold)}")
    print(f"value          {_fmt(eq.value)}")
    if args.verify_saddle:
        rep = verify_saddle(inst, eq, phi_points=args.verify_saddle,
                            xhat_points=args.verify_saddle, tol=args.saddle_tol)
        payload["saddle_check"] = {
            "ok": rep.ok,
            "grid_points": args.verify_saddle,
            "tol": rep.tol,
            "worst_jammer_excess": rep.worst_jammer_excess,
            "worst_coordinator_shortfall": rep.worst_coordinator_shortfall,
        }
        print(f"saddle check   {'ok' if rep.ok else 'VIOLATED'} "
              f"(worst jammer excess {rep.worst_jammer_excess:.3e}, "
              f"worst coordinator shortfall {rep.worst_coordinator_shortfall:.3e})")
    _write_text(args.out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def _solver_options(args) -> SolverOptions:
    return SolverOptions(
        step_size=args.lambda_ga if args.solver == "gda" else args.step_size,
        descent_step=args.lambda_gd,
        step_schedule=args.schedule,
        epsilon=args.eps,
        max_iters=args.max_iters,
    )


def _run_solver(inst, solver: str, init, opts):
    run = solve_gda if solver == "gda" else solve_pga_ccp
    return run(inst, init, opts)


def cmd_solve_reactive(args) -> int:
    inst = build_instance(args)
    opts = _solver_options(args)
    init = None
    if args.init_xhat is not None or args.init_theta is not None:
        xhat = tuple(args.init_xhat) if args.init_xhat else tuple(default_init(inst).xhat)
        theta = tuple(args.init_theta) if args.init_theta else (0.5, 0.5)
        init = ReactivePoint(xhat, theta)

    point, trace, cert = _run_solver(inst, args.solver, init, opts)
    results = [(point, trace, cert)]
    if args.multistart > 0:
        rng = np.random.Generator(np.random.Philox(key=args.seed))
        s = inst.dist.scale
        for _ in range(args.multistart):
            start = ReactivePoint(tuple(rng.uniform(-2 * s, 2 * s, 2)), tuple(rng.uniform(0, 1, 2)))
            results.append(_run_solver(inst, args.solver, start, opts))

    payload = {
        "schema_version": SCHEMA_VERSION,
        "solver": args.solver,
        "c": inst.c,
        "d": inst.d,
        "sigma2": inst.dist.variance,
        "epsilon": opts.epsilon,
        "points": [
            dict(p.to_dict(), certificate=c.to_dict(), iterations=t.iterations,
                 terminated_by=t.terminated_by.value)
            for p, t, c in results
        ],
    }
    for i, (p, t, c) in enumerate(results):
        tag = "primary" if i == 0 else f"start {i}"
        print(f"[{tag}] terminated_by={t.terminated_by.value} iters={t.iterations} "
              f"alpha={p.theta[0]:.6f} beta={p.theta[1]:.6f} "
              f"xhat0={p.xhat[0]:.6f} xhat1={p.xhat[1]:.6f} "
              f"grad_norm={c.grad_norm:.3e} lp_gap={c.lp_gap:.3e} certified={c.certified}")
    _write_text(args.out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    if args.trace_out:
        with open(args.trace_out, "w", newline="") as fh:
            trace.write_csv(fh)
    return EXIT_OK if cert.certified else EXIT_UNCERTIFIED


def _load_policy(path: str) -> PolicyBundle:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read policy file: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"policy file is not valid JSON: {exc}")
    try:
        return PolicyBundle.from_dict(payload)
    except ValueError as exc:
        raise ConfigError(str(exc))


def cmd_simulate(args) -> int:
    inst = build_instance(args)
    if args.policy:
        bundle = _load_policy(args.policy)
    elif args.phi is not None:
        tau = math.sqrt(inst.c / (1.0 - args.phi)) if args.phi < 1.0 else math.inf
        bundle = PolicyBundle(
            silent_lo=args.xhat0 - tau,
            silent_hi=args.xhat0 + tau,
            jam=JamPolicy.non_sensing(args.phi),
            xhat=(args.xhat0, args.xhat1),
        )
    elif args.alpha is not None and args.beta is not None:
        bundle = bundle_from_reactive(
            ReactivePoint((args.xhat0, args.xhat1), (args.alpha, args.beta)), inst
        )
    else:
        raise ConfigError("give --policy, or --phi, or both --alpha and --beta")

    result = simulate(inst, bundle, args.n, args.seed, trace_path=args.trace_out)
    print(f"n              {result.n}")
    print(f"empirical_cost {_fmt(result.empirical_cost)}")
    print(f"std_error      {_fmt(result.std_error)}")
    print(f"p_transmit     {_fmt(result.p_transmit)}")
    print(f"p_jam          {_fmt(result.p_jam)}")
    payload = result.to_dict()
    payload["policy"] = bundle.to_dict()
    analytic = analytic_cost(inst, bundle)
    if analytic is not None:
        gap = result.empirical_cost - analytic
        payload["analytic_cost"] = analytic
        payload["gap_in_std_errors"] = gap / result.std_error if result.std_error else math.inf
        print(f"analytic_cost  {_fmt(analytic)}  (gap = {gap / result.std_error:+.2f} SE)")
    _write_text(args.out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    inst_args = args
    lines: list[str] = []
    if args.mode == "fig2":
        cs = _grid(args.c_grid, "--c-grid")
        ds = _grid(args.d_grid, "--d-grid")
        base = build_distribution(args)
        lines.append("# optimal non-sensing jamming probability over a (c, d) grid")
        lines.append("# grid ranges are a tool choice, not part of the problem statement")
        lines.append(f"# family={base.family.value} sigma2={_fmt(base.variance)}")
        lines.append("c,d,phi_star,regime,value")
        for c in cs:
            for d in ds:
                eq = solve_equilibrium(GameInstance(base, float(c), float(d)))
                lines.append(",".join([
                    _fmt(c), _fmt(d), _fmt(eq.phi_star), eq.regime.value, _fmt(eq.value),
                ]))
    elif args.mode == "fig4":
        s2s = _grid(args.sigma2_grid, "--sigma2-grid")
        lines.append("# certified reactive-jammer stationary points per sigma2 (PGA-CCP, default init)")
        lines.append(f"# c={_fmt(args.c)} d={_fmt(args.d)} eps={_fmt(args.eps)}")
        lines.append("sigma2,alpha,beta,xhat0,xhat1,iterations,certified")
        for s2 in s2s:
            inst = GameInstance(dist.gaussian(float(s2)), args.c, args.d)
            opts = SolverOptions(step_size=args.step_size, epsilon=args.eps,
                                 max_iters=args.max_iters)
            p, t, cert = solve_pga_ccp(inst, None, opts)
            lines.append(",".join([
                _fmt(s2), _fmt(p.theta[0]), _fmt(p.theta[1]),
                _fmt(p.xhat[0]), _fmt(p.xhat[1]), str(t.iterations), str(cert.certified),
            ]))
    else:
        raise ConfigError(f"unknown sweep mode {args.mode!r}")

    text = "\n".join(lines) + "\n"
    if inst_args.out:
        _write_text(inst_args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_compare(args) -> int:
    inst = build_instance(args)
    init = default_init(inst)
    base = SolverOptions(step_size=args.step_size, epsilon=args.eps, max_iters=args.max_iters)
    gda_opts = SolverOptions(step_size=args.lambda_ga, descent_step=args.lambda_gd,
                             epsilon=args.eps, max_iters=args.max_iters)

    p1, t1, c1 = solve_pga_ccp(inst, init, base)
    p2, t2, c2 = solve_gda(inst, init, gda_opts)

    lines = ["solver,k,xhat0,xhat1,alpha,beta,objective,grad_xhat_norm,lp_gap"]
    for name, tr in (("pga-ccp", t1), ("gda", t2)):
        for r in tr.rows:
            lines.append(",".join([
                name, str(r.k), _fmt(r.xhat0), _fmt(r.xhat1), _fmt(r.alpha), _fmt(r.beta),
                _fmt(r.objective), _fmt(r.grad_xhat_norm), _fmt(r.lp_gap),
            ]))
    text = "\n".join(lines) + "\n"
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)

    print(f"pga-ccp: iters={t1.iterations} certified={c1.certified} "
          f"point=({p1.theta[0]:.4f},{p1.theta[1]:.4f},{p1.xhat[0]:.4f},{p1.xhat[1]:.4f})")
    print(f"gda:     iters={t2.iterations} certified={c2.certified} "
          f"point=({p2.theta[0]:.4f},{p2.theta[1]:.4f},{p2.xhat[0]:.4f},{p2.xhat[1]:.4f})")
    return EXIT_OK if (c1.certified and c2.certified) else EXIT_UNCERTIFIED


def _add_dist_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dist", choices=["gaussian", "laplace", "custom"], default="gaussian")
    p.add_argument("--sigma2", type=float, default=None, help="variance")
    p.add_argument("--scale", type=float, default=None, help="Laplace scale b")
    p.add_argument("--pdf-csv", default=None, help="two-column (x, f(x)) CSV for --dist custom")
    p.add_argument("--truncation-radius", type=float, default=None)
    p.add_argument("--c", type=float, default=1.0, help="per-transmission cost")
    p.add_argument("--d", type=float, default=1.0, help="per-jamming cost")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output artifact path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jamgame",
        description="Solve, certify and simulate the sensor-vs-jammer estimation game.",
        allow_abbrev=False,
    )
    parser.add_argument("--config", default=None,
                        help="key=value config file; sections name subcommands, flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-nonsensing", help="closed-form saddle point, non-sensing jammer")
    _add_dist_args(p)
    p.add_argument("--verify-saddle", type=int, default=0, metavar="N",
                   help="verify the saddle inequalities on N-point deviation grids")
    p.add_argument("--saddle-tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_solve_nonsensing)

    p = sub.add_parser("solve-reactive", help="epsilon-FNE search, channel-sensing jammer")
    _add_dist_args(p)
    p.add_argument("--solver", choices=["pga-ccp", "gda"], default="pga-ccp")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--step-size", type=float, default=0.1, help="theta ascent step (PGA-CCP)")
    p.add_argument("--lambda-ga", type=float, default=0.1, help="GDA ascent step")
    p.add_argument("--lambda-gd", type=float, default=0.01, help="GDA descent step")
    p.add_argument("--schedule", choices=["fixed", "sqrt"], default="fixed")
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--init-xhat", type=float, nargs=2, default=None, metavar=("X0", "X1"))
    p.add_argument("--init-theta", type=float, nargs=2, default=None, metavar=("A", "B"))
    p.add_argument("--multistart", type=int, default=0,
                   help="additional random starts (seeded); all results are reported")
    p.add_argument("--trace-out", default=None, help="per-iteration trace CSV path")
    p.set_defaults(func=cmd_solve_reactive)

    p = sub.add_parser("simulate", help="Monte Carlo check of a policy bundle")
    _add_dist_args(p)
    p.add_argument("--policy", default=None, help="policy bundle JSON (from solve commands)")
    p.add_argument("--phi", type=float, default=None, help="inline non-sensing jamming probability")
    p.add_argument("--alpha", type=float, default=None, help="inline reactive idle-blocking probability")
    p.add_argument("--beta", type=float, default=None, help="inline reactive busy-blocking probability")
    p.add_argument("--xhat0", type=float, default=0.0)
    p.add_argument("--xhat1", type=float, default=0.0)
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--trace-out", default=None, help="per-event CSV (first 10^4 draws)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="figure-style CSV grids")
    _add_dist_args(p)
    p.add_argument("--mode", choices=["fig2", "fig4"], required=True)
    p.add_argument("--c-grid", default="0.05:3:60")
    p.add_argument("--d-grid", default="0.05:3:60")
    p.add_argument("--sigma2-grid", default="1:5:17")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--step-size", type=float, default=0.1)
    p.add_argument("--max-iters", type=int, default=100_000)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="PGA-CCP vs GDA from an identical start")
    _add_dist_args(p)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--step-size", type=float, default=0.1)
    p.add_argument("--lambda-ga", type=float, default=0.1)
    p.add_argument("--lambda-gd", type=float, default=0.01)
    p.add_argument("--max-iters", type=int, default=100_000)
    p.set_defaults(func=cmd_compare)

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Read --config (if given) and install its values as subcommand defaults."""
    probe = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    probe.add_argument("--config", default=None)
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return argv

    cp = configparser.ConfigParser()
    read = cp.read(known.config)
    if not read:
        raise ConfigError(f"config file not found: {known.config}")

    command = next((a for a in argv if not a.startswith("-") and a != known.config), None)
    values: dict[str, str] = {}
    for section in ("common", command or ""):
        if section and cp.has_section(section):
            values.update(dict(cp.items(section)))

    # locate the subparser and set defaults so explicit flags still win
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction) and command in action.choices:
            subparser = action.choices[command]
            defaults = {}
            for key, raw in values.items():
                destkey = key.replace("-", "_")
                matching = next(
                    (a for a in subparser._actions if a.dest == destkey), None
                )
                if matching is None:
                    raise ConfigError(f"unknown config key [{command}] {key}")
                if matching.nargs in (2,):
                    defaults[destkey] = [matching.type(v) for v in raw.split()]
                elif matching.type is not None:
                    defaults[destkey] = matching.type(raw)
                elif isinstance(matching.const, bool) or isinstance(matching.default, bool):
                    defaults[destkey] = raw.strip().lower() in ("1", "true", "yes")
                else:
                    defaults[destkey] = raw
            subparser.set_defaults(**defaults)
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (IntegrationError, BracketingError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command line interface: generate / solve / bench / diagnose.

Exit codes: 0 success, 1 usage or configuration errors, 2 runtime or
numerical failures. Option precedence is flags > config file > defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .bench import GENERATOR_NAME, X0_SEED_OFFSET, ExperimentSpec, generate_instance, run_experiment
from .diagnostics import diagnose_document
from .errors import (
    ConfigurationError,
    DimensionMismatchError,
    EstimationError,
    FileFormatError,
    InvalidInputError,
)
from .kernels import RegParams
from .problems import LeastSquaresProblem, ProblemInstance
from .solvers import SOLVERS, AlphaSchedule, SolverConfig
from .trace import read_trace_csv, write_trace_csv

# Defaults shared by every subcommand.
DEFAULTS = {
    "m": 256,
    "n": 512,
    "K": 25,
    "sigma2": 1e-4,
    "p": 0.5,
    "lambda": 0.05,
    "alpha": "0.9",
    "beta": 1.0,
    "mu": 0.9,
    "eps0": 1.0,
    "opttol": 1e-6,
    "max_iter": 5000,
    "trials": 20,
    "seed": 0,
    "base_seed": 0,
}


class _Parser(argparse.ArgumentParser):
    """argparse, but usage errors exit 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_p(text: str) -> float:
    """Accept plain reals plus the fractions '1/2' and '2/3'."""
    s = str(text).strip()
    if s == "1/2":
        return 0.5
    if s == "2/3":
        return 2.0 / 3.0
    try:
        return float(s)
    except ValueError:
        raise ConfigurationError(f"p must be a real in (0, 1), got {text!r}") from None


def _load_config(path, allowed: set[str]) -> dict:
    if path is None:
        return {}
    cfg = fileio.read_json(path)
    if not isinstance(cfg, dict):
        raise ConfigurationError(f"{path}: config must be a JSON object")
    for key in cfg:
        if key not in allowed:
            raise ConfigurationError(
                f"{path}: unknown config field {key!r}; allowed fields: {sorted(allowed)}"
            )
    return cfg


def _pick(flag_value, cfg: dict, key: str, cast=None):
    """flags > config file > defaults."""
    if flag_value is not None:
        v = flag_value
    elif key in cfg:
        v = cfg[key]
    else:
        v = DEFAULTS[key]
    return cast(v) if cast is not None else v


def _json_clean(obj):
    """Recursively convert numpy scalars so json sees plain Python types."""
    if isinstance(obj, dict):
        return {k: _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------- generate


def cmd_generate(args) -> int:
    cfg = _load_config(args.config, {"m", "n", "K", "sigma2", "seed"})
    m = _pick(args.m, cfg, "m", int)
    n = _pick(args.n, cfg, "n", int)
    K = _pick(args.K, cfg, "K", int)
    sigma2 = _pick(args.sigma2, cfg, "sigma2", float)
    seed = _pick(args.seed, cfg, "seed", int)

    A, x_true, y = generate_instance(m, n, K, sigma2, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fileio.save_matrix(out / "A.bin", A)
    fileio.save_vector(out / "x_true.bin", x_true)
    fileio.save_vector(out / "y.bin", y)
    files = {}
    for name, arr in (("A.bin", A), ("x_true.bin", x_true), ("y.bin", y)):
        files[name] = {
            "rows": int(arr.shape[0]),
            "cols": int(arr.shape[1]) if arr.ndim == 2 else 1,
            "sha256": fileio.sha256_file(out / name),
        }
    if args.csv:
        fileio.matrix_to_csv(out / "A.csv", A)
        fileio.matrix_to_csv(out / "x_true.csv", x_true)
        fileio.matrix_to_csv(out / "y.csv", y)
    fileio.write_json(
        out / "instance.json",
        {
            "m": m,
            "n": n,
            "K": K,
            "sigma2": sigma2,
            "seed": seed,
            "generator": GENERATOR_NAME,
            "files": files,
        },
    )
    print(f"wrote instance ({m}x{n}, K={K}) to {out}")
    return 0


# ------------------------------------------------------------------------- solve


def _solver_config_from(cfg: dict, args) -> tuple[SolverConfig, str, float, float]:
    p = _parse_p(_pick(args.p, cfg, "p"))
    lam = _pick(args.lam, cfg, "lambda", float)
    solver = args.solver if args.solver is not None else cfg.get("solver", "eirl1")
    if solver not in SOLVERS:
        raise ConfigurationError(f"unknown solver {solver!r}; choices are {sorted(SOLVERS)}")
    schedule = AlphaSchedule.parse(_pick(args.alpha, cfg, "alpha", str))
    config = SolverConfig(
        beta=_pick(args.beta, cfg, "beta", float),
        mu=_pick(args.mu, cfg, "mu", float),
        eps0=_pick(args.eps0, cfg, "eps0", float),
        alpha_schedule=schedule,
        opttol=_pick(args.opttol, cfg, "opttol", float),
        max_iter=_pick(args.max_iter, cfg, "max_iter", int),
        trace_level=args.trace if args.trace is not None else cfg.get("trace", "full"),
    )
    return config, solver, p, lam


def cmd_solve(args) -> int:
    cfg = _load_config(
        args.config,
        {"solver", "alpha", "p", "lambda", "beta", "mu", "eps0", "opttol", "max_iter", "seed", "x0", "trace"},
    )
    config, solver, p, lam = _solver_config_from(cfg, args)
    seed = _pick(args.seed, cfg, "seed", int)
    x0_kind = args.x0 if args.x0 is not None else cfg.get("x0", "gaussian")
    if x0_kind not in ("gaussian", "zeros"):
        raise ConfigurationError(f"x0 must be 'gaussian' or 'zeros', got {x0_kind!r}")

    inst = Path(args.instance)
    a_path = inst / "A.bin"
    y_path = inst / "y.bin"
    for pth in (a_path, y_path):
        if not pth.exists():
            raise FileFormatError(f"missing instance file: {pth}")
    A = fileio.load_matrix(a_path)
    y = fileio.load_vector(y_path)
    x_true = None
    if (inst / "x_true.bin").exists():
        x_true = fileio.load_vector(inst / "x_true.bin")

    problem = ProblemInstance(LeastSquaresProblem(A, y), RegParams(p=p, lam=lam))
    n = A.shape[1]
    if x0_kind == "zeros":
        x0 = np.zeros(n)
    else:
        x0 = np.random.default_rng(seed + X0_SEED_OFFSET).standard_normal(n)

    result = SOLVERS[solver](problem, x0, config, x_true=x_true)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(out / "trace.csv", result.trace)

    diag = None
    if len(result.trace) >= 2:
        doc = diagnose_document(result.trace, config.beta, config.alpha_schedule.alpha_bar)
        diag = {
            "psi_violations": len(doc["psi_decrease"]["violations"]),
            "psi_ok": doc["psi_decrease"]["ok"],
            "support_stable_from": doc["stabilization"]["support_stable_from"],
            "sign_stable_from": doc["stabilization"]["sign_stable_from"],
        }
    last = result.trace[-1] if result.trace else None
    summary = {
        "solver": solver,
        "p": p,
        "lambda": lam,
        "alpha": config.alpha_schedule.tag(),
        "beta": config.beta,
        "mu": config.mu,
        "eps0": config.eps0,
        "opttol": config.opttol,
        "max_iter": config.max_iter,
        "seed": seed,
        "x0": x0_kind,
        "m": int(A.shape[0]),
        "n": int(n),
        "iterations": result.iterations,
        "converged": result.converged,
        "termination_reason": result.termination_reason,
        "final_support_size": last.support_size if last else None,
        "final_stationarity": last.stationarity if last else None,
        "final_mse": last.mse if last else None,
        "diagnostics": diag,
    }
    fileio.write_json(out / "summary.json", _json_clean(summary))
    print(
        f"{solver}: {result.termination_reason} after {result.iterations} iterations, "
        f"support {last.support_size if last else 'n/a'}"
    )
    return 2 if result.termination_reason == "numerical_failure" else 0


# ------------------------------------------------------------------------- bench


def _experiment_from_config(cfg: dict, args) -> ExperimentSpec:
    m = _pick(args.m, cfg, "m", int)
    n = _pick(args.n, cfg, "n", int)
    K = _pick(args.K, cfg, "K", int)
    sigma2 = _pick(args.sigma2, cfg, "sigma2", float)
    trials = _pick(args.trials, cfg, "trials", int)
    base_seed = _pick(args.seed, cfg, "base_seed", int)
    reg = RegParams(p=_parse_p(_pick(None, cfg, "p")), lam=_pick(None, cfg, "lambda", float))

    base = SolverConfig(
        beta=_pick(None, cfg, "beta", float),
        mu=_pick(None, cfg, "mu", float),
        eps0=_pick(None, cfg, "eps0", float),
        opttol=_pick(None, cfg, "opttol", float),
        max_iter=_pick(None, cfg, "max_iter", int),
    )
    entries = []
    for a in cfg.get("alphas", []):
        entries.append(
            ("eirl1", dataclasses.replace(base, alpha_schedule=AlphaSchedule.constant(float(a))))
        )
    for item in cfg.get("solvers", []):
        if not isinstance(item, dict) or "kind" not in item:
            raise ConfigurationError("each 'solvers' entry must be an object with a 'kind'")
        kind = item["kind"]
        known = {"kind", "alpha", "beta", "mu", "eps0", "opttol", "max_iter"}
        for key in item:
            if key not in known:
                raise ConfigurationError(f"unknown solver field {key!r} in 'solvers' entry")
        cfg_i = dataclasses.replace(
            base,
            alpha_schedule=AlphaSchedule.parse(str(item.get("alpha", DEFAULTS["alpha"]))),
            beta=float(item.get("beta", base.beta)),
            mu=float(item.get("mu", base.mu)),
            eps0=float(item.get("eps0", base.eps0)),
            opttol=float(item.get("opttol", base.opttol)),
            max_iter=int(item.get("max_iter", base.max_iter)),
        )
        entries.append((kind, cfg_i))
    if not entries:
        entries.append(("eirl1", dataclasses.replace(base, alpha_schedule=AlphaSchedule.constant(0.9))))
    return ExperimentSpec(
        m=m, n=n, K=K, sigma2=sigma2, reg=reg,
        solver_set=tuple(entries), trials=trials, base_seed=base_seed,
    )


def cmd_bench(args) -> int:
    cfg = _load_config(
        args.config,
        {"m", "n", "K", "sigma2", "p", "lambda", "beta", "mu", "eps0", "opttol",
         "max_iter", "trials", "base_seed", "solvers", "alphas"},
    )
    spec = _experiment_from_config(cfg, args)
    summaries, stats, failures = run_experiment(spec)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summaries.csv", "w") as fh:
        fh.write("seed,solver,iterations,converged,final_mse,final_support_size,invariant_violations\n")
        for s in summaries:
            fh.write(
                f"{s.seed},{s.solver},{s.iterations},{int(s.converged)},"
                f"{s.final_mse!r},{s.final_support_size},{s.invariant_violations}\n"
            )

    agg = {
        "m": spec.m, "n": spec.n, "K": spec.K, "sigma2": spec.sigma2,
        "p": spec.reg.p, "lambda": spec.reg.lam,
        "trials": spec.trials, "base_seed": spec.base_seed,
        "generator": GENERATOR_NAME,
        "solvers": {},
        "failures": {f"{seed}:{sid}": msg for (seed, sid), msg in sorted(failures.items())},
    }
    for sid, st in stats.per_solver.items():
        agg["solvers"][sid] = {
            "median_iterations": st.median_iterations,
            "mean_final_mse": st.mean_final_mse,
            "mean_final_support_size": st.mean_final_support_size,
            "support_size_quartiles": list(st.support_size_quartiles),
            "converged_trials": st.converged_trials,
        }
        with open(out / f"mse_curve_{sid}.csv", "w") as fh:
            fh.write("k,mean_mse,median_mse\n")
            for k, (a, b) in enumerate(zip(st.mean_mse_curve, st.median_mse_curve)):
                fh.write(f"{k},{float(a)!r},{float(b)!r}\n")
    fileio.write_json(out / "aggregate.json", _json_clean(agg))
    print(f"bench: {spec.trials} trials x {len(spec.solver_set)} solvers -> {out}")
    return 0


# ---------------------------------------------------------------------- diagnose


def cmd_diagnose(args) -> int:
    records = read_trace_csv(args.trace)
    if len(records) < 2:
        raise FileFormatError(f"{args.trace}: need at least 2 trace rows to diagnose")
    x_ref = fileio.load_vector(args.x_ref) if args.x_ref is not None else None
    doc = diagnose_document(
        records,
        beta=args.beta,
        alpha_bar=args.alpha_bar,
        tail_fraction=args.tail_fraction,
        x_ref=x_ref,
        rate_from=args.from_k,
    )
    doc = _json_clean(doc)
    if args.out is not None:
        fileio.write_json(args.out, doc)
        print(f"wrote diagnostics to {args.out}")
    else:
        import json

        print(json.dumps(doc, indent=2))
    return 0


# -------------------------------------------------------------------------- main


def build_parser() -> _Parser:
    parser = _Parser(prog="lp-eirl1", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a random sensing instance to disk")
    g.add_argument("--config", type=str, default=None)
    g.add_argument("--out", type=str, required=True)
    g.add_argument("--m", type=int, default=None)
    g.add_argument("--n", type=int, default=None)
    g.add_argument("--K", type=int, default=None)
    g.add_argument("--sigma2", type=float, default=None)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--csv", action="store_true", help="also export plain CSV copies")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run one solver on a stored instance")
    s.add_argument("--config", type=str, default=None)
    s.add_argument("--instance", type=str, required=True)
    s.add_argument("--out", type=str, required=True)
    s.add_argument("--solver", choices=sorted(SOLVERS), default=None)
    s.add_argument("--alpha", type=str, default=None, help="real in [0,1) or 'nesterov'")
    s.add_argument("--p", type=str, default=None, help="penalty exponent; accepts 1/2 and 2/3")
    s.add_argument("--lambda", dest="lam", type=float, default=None)
    s.add_argument("--beta", type=float, default=None)
    s.add_argument("--mu", type=float, default=None)
    s.add_argument("--eps0", type=float, default=None)
    s.add_argument("--seed", type=int, default=None, help="seed for the gaussian x0")
    s.add_argument("--x0", choices=("gaussian", "zeros"), default=None)
    s.add_argument("--opttol", type=float, default=None)
    s.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    s.add_argument("--trace", choices=("none", "summary", "full"), default=None)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run seeded trials and aggregate")
    b.add_argument("--config", type=str, default=None)
    b.add_argument("--out", type=str, required=True)
    b.add_argument("--m", type=int, default=None)
    b.add_argument("--n", type=int, default=None)
    b.add_argument("--K", type=int, default=None)
    b.add_argument("--sigma2", type=float, default=None)
    b.add_argument("--trials", type=int, default=None)
    b.add_argument("--seed", type=int, default=None, help="base seed for the trial streams")
    b.set_defaults(func=cmd_bench)

    d = sub.add_parser("diagnose", help="audit a trace CSV against the theory")
    d.add_argument("--trace", type=str, required=True)
    d.add_argument("--beta", type=float, default=1.0)
    d.add_argument("--alpha-bar", dest="alpha_bar", type=float, default=1.0)
    d.add_argument("--tail-fraction", dest="tail_fraction", type=float, default=0.5)
    d.add_argument("--from-k", dest="from_k", type=int, default=None)
    d.add_argument("--x-ref", dest="x_ref", type=str, default=None, help="vector container file")
    d.add_argument("--out", type=str, default=None)
    d.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse printed its own message
        code = exc.code
        return code if isinstance(code, int) else 1
    try:
        return args.func(args)
    except (ConfigurationError, InvalidInputError, DimensionMismatchError, FileFormatError) as exc:
        print(f"lp-eirl1: error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"lp-eirl1: error: {exc}", file=sys.stderr)
        return 1
    except (EstimationError, OSError, np.linalg.LinAlgError) as exc:
        print(f"lp-eirl1: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

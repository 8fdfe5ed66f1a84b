"""Command-line entry point: ``ntot {gen,solve,sweep,ric,oracle-check}``.

Every parameter resolves as flag > ``--config`` file > built-in default,
and the manifest written next to the outputs records where each value
came from.  Exit codes: 0 success, 1 usage or configuration error,
2 numerical failure (or an output that could not be written),
3 a certificate was required but the parameters are not covered.
"""
import argparse
import os
import secrets
import sys
from dataclasses import dataclass
from math import comb

import numpy as np

from . import __version__, io
from .experiments import (GENERATOR_ID, PRESETS, ProblemSpec, SweepSpec, epsilon_sweep,
                          gen_problem, iterations_experiment, lambda_sweep,
                          residual_experiment, success_experiment)
from .oracles import SUITES, run_suite
from .rip import RIC_GUARD, certificate, default_parameters, exact_ric
from .solvers import VARIANTS, STOP_RULES, ConfigurationError, RecoveryProblem, SolverConfig, solve
from .thresholding import EXACT_OT_GUARD, OracleTooLarge

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_CERTIFICATE = 0, 1, 2, 3

TRACE_HEADER = ["algorithm", "iteration", "residual_l2", "relative_error", "qp_iters",
                "qp_converged"]
SUCCESS_HEADER = ["algorithm", "axis", "axis_value", "trials", "successes", "success_rate"]
ITERATIONS_HEADER = ["algorithm", "axis", "axis_value", "avg_iterations"]
RESIDUAL_HEADER = ["epsilon", "lambda"] + TRACE_HEADER

_THEOREM_OF = {"ntot": 1, "ntrot": 2, "ntrotp": 3}
_NEWTON = ("ntot", "ntrot", "ntrotp", "nsiht", "nshtp")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for numerical failure
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _ints(s):
    return [int(t) for t in str(s).replace(",", " ").split()]


def _algos(s):
    out = [t for t in str(s).replace(",", " ").split()]
    bad = [a for a in out if a not in VARIANTS]
    if bad or not out:
        raise ValueError(f"unknown algorithm(s) {bad}; choose from {', '.join(VARIANTS)}")
    return out


def _choice(*options):
    def parse(s):
        if s not in options:
            raise ValueError(f"{s!r} is not one of {', '.join(options)}")
        return s
    return parse


@dataclass(frozen=True)
class Param:
    name: str
    parse: object
    default: object = None
    help: str = ""
    flag: bool = False  # store-true style switch
    opt: str = ""  # flag spelling when the name is a Python keyword
    many: bool = False  # flag takes one or more values

    @property
    def key(self):
        return self.opt[2:].replace("-", "_") if self.opt else self.name


def _add_params(parser, params):
    parser.add_argument("--config", help="key = value file; flags override it")
    for p in params:
        opt = p.opt or "--" + p.name.replace("_", "-")
        if p.flag:
            parser.add_argument(opt, dest=p.name, action="store_const", const=True,
                                default=None, help=p.help)
        else:
            parser.add_argument(opt, dest=p.name, default=None, help=p.help, type=str,
                                nargs="+" if p.many else None)


def _resolve(args, params):
    """Resolve every parameter and remember its provenance."""
    config = {}
    if args.config:
        try:
            config = io.read_config(args.config)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
    known = {p.key for p in params}
    for key in sorted(set(config) - known):
        print(f"warning: ignoring unknown config key {key!r}", file=sys.stderr)
    vals, prov = {}, {}
    for p in params:
        raw = getattr(args, p.name)
        if isinstance(raw, list):
            raw = " ".join(raw)
        source = "flag"
        if raw is None and p.key in config:
            raw, source = config[p.key], "config"
        if raw is None:
            vals[p.key], prov[p.key] = p.default, "default"
            continue
        try:
            vals[p.key] = p.parse(raw)
        except ValueError as exc:
            raise UsageError(f"--{p.key.replace('_', '-')}: {exc}") from exc
        prov[p.key] = source
    return vals, prov


def _seed(vals, prov):
    if vals["seed"] is None:
        vals["seed"], prov["seed"] = secrets.randbits(63), "generated"
    if not 0 <= vals["seed"] < 2 ** 64:
        raise UsageError("--seed must be in [0, 2^64)")
    print(f"seed = {vals['seed']}")


def _show(v):
    if isinstance(v, (list, tuple)):
        return " ".join(_show(x) for x in v)
    if v is None:
        return ""
    return io.fmt(v) if isinstance(v, (int, float, bool, np.floating, np.integer)) else str(v)


def _write_manifest(path, command, vals, prov, outputs=()):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# ntot {__version__} {command}\n")
        for key, v in vals.items():
            if v is None:
                fh.write(f"# {key} unset ({prov[key]})\n")
            else:
                fh.write(f"{key} = {_show(v)}  # {prov[key]}\n")
        for key, v in outputs:
            fh.write(f"# output {key}: {v}\n")


def _comments(command, vals, seed=None, extra=()):
    out = [f"ntot {__version__} {command}"]
    if seed is not None:
        out += [f"generator = {GENERATOR_ID}", f"base_seed = {seed}"]
    out += [f"{k} = {_show(v)}" for k, v in vals.items() if v is not None]
    return out + list(extra)


# -- gen ---------------------------------------------------------------------

GEN_PARAMS = [
    Param("m", int, 64, "rows"),
    Param("n", int, 128, "columns"),
    Param("k", int, 8, "sparsity"),
    Param("noise", float, 0.0, "noise scale"),
    Param("seed", int, None, "64-bit seed (generated and printed if absent)"),
    Param("out_dir", str, "problem", "output directory"),
]


def cmd_gen(args):
    vals, prov = _resolve(args, GEN_PARAMS)
    _seed(vals, prov)
    try:
        spec = ProblemSpec(vals["m"], vals["n"], vals["k"], vals["noise"], vals["seed"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    p = gen_problem(spec)
    d = vals["out_dir"]
    paths = [("A", os.path.join(d, "A.txt")), ("y", os.path.join(d, "y.txt")),
             ("x_true", os.path.join(d, "x_true.txt"))]
    try:
        os.makedirs(d, exist_ok=True)
        io.write_matrix(paths[0][1], p.A)
        io.write_vector(paths[1][1], p.y)
        io.write_vector(paths[2][1], p.x_true)
        _write_manifest(os.path.join(d, "manifest.txt"), "gen", vals, prov, paths)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wrote {d}/A.txt, y.txt, x_true.txt, manifest.txt")
    return EXIT_OK


# -- solve -------------------------------------------------------------------

SOLVE_PARAMS = [
    Param("problem_dir", str, None, "directory written by 'ntot gen'"),
    Param("A", str, None, "matrix file (overrides problem-dir)"),
    Param("y", str, None, "measurement file"),
    Param("x_true", str, None, "ground-truth file (optional)"),
    Param("k", int, None, "sparsity level (read from the problem manifest if absent)"),
    Param("algo", _choice(*VARIANTS), "ntrotp", "algorithm"),
    Param("eps", float, None, "Newton regularization (default: max(s1^2 + 1, lam - sm^2))"),
    Param("lam", float, 5.0, "stepsize"),
    Param("max_iter", int, 50, "outer iteration cap"),
    Param("stop_rule", _choice(*STOP_RULES), "residual", "stopping rule"),
    Param("stop_tol", float, 1e-6, "stopping tolerance"),
    Param("qp_tol", float, 1e-8, "relaxed-subproblem tolerance"),
    Param("qp_max_iter", int, 5000, "relaxed-subproblem iteration cap"),
    Param("out_dir", str, "solution", "output directory"),
    Param("require_certificate", _bool, False,
          "refuse to run unless the convergence theorem certifies the parameters", flag=True),
]


def _load_problem(vals, prov):
    d = vals["problem_dir"]
    for key, fname in (("A", "A.txt"), ("y", "y.txt"), ("x_true", "x_true.txt")):
        if vals[key] is None and d is not None:
            path = os.path.join(d, fname)
            if key != "x_true" or os.path.exists(path):
                vals[key], prov[key] = path, "problem-dir"
    if vals["A"] is None or vals["y"] is None:
        raise UsageError("need --problem-dir or both --A and --y")
    if vals["k"] is None and d is not None and os.path.exists(os.path.join(d, "manifest.txt")):
        try:
            vals["k"] = int(io.read_config(os.path.join(d, "manifest.txt"))["k"])
            prov["k"] = "problem-manifest"
        except (KeyError, ValueError, OSError):
            pass
    if vals["k"] is None:
        raise UsageError("--k is required")
    try:
        A = io.read_matrix(vals["A"])
        y = io.read_vector(vals["y"])
        x_true = io.read_vector(vals["x_true"]) if vals["x_true"] else None
        return RecoveryProblem(A, y, vals["k"], x_true=x_true)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot load problem: {exc}") from exc


def cmd_solve(args):
    vals, prov = _resolve(args, SOLVE_PARAMS)
    problem = _load_problem(vals, prov)
    A, k, algo = problem.A, problem.k, vals["algo"]
    n = A.shape[1]
    if algo == "ntot" and comb(n, k) > EXACT_OT_GUARD:
        raise UsageError(f"ntot enumerates C({n}, {k}) = {comb(n, k)} supports,"
                         f" above the guard {EXACT_OT_GUARD}; use ntrot or ntrotp")
    if algo in _NEWTON and vals["eps"] is None:
        vals["eps"], prov["eps"] = default_parameters(A, vals["lam"]), "derived"
    try:
        cfg = SolverConfig(variant=algo, eps=vals["eps"] if algo in _NEWTON else None,
                           lam=vals["lam"], max_outer_iter=vals["max_iter"],
                           qp_tol=vals["qp_tol"], qp_max_iter=vals["qp_max_iter"],
                           stop_rule=vals["stop_rule"], stop_tol=vals["stop_tol"])
        if cfg.stop_rule == "relative-error" and problem.x_true is None:
            raise ConfigurationError("--stop-rule relative-error needs --x-true")
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from exc

    if vals["require_certificate"]:
        tid = _THEOREM_OF.get(algo)
        if tid is None:
            print(f"error: no convergence theorem covers {algo}", file=sys.stderr)
            return EXIT_CERTIFICATE
        try:
            cert = certificate(tid, A, k, cfg.eps, cfg.lam)
        except OracleTooLarge as exc:
            print(f"error: cannot evaluate the certificate: {exc}", file=sys.stderr)
            return EXIT_CERTIFICATE
        sys.stdout.write(cert.to_text())
        if not cert.valid:
            print("error: parameters are not certified", file=sys.stderr)
            return EXIT_CERTIFICATE

    result = solve(problem, cfg)
    d = vals["out_dir"]
    x_path, trace_path = os.path.join(d, "x_hat.txt"), os.path.join(d, "trace.csv")
    rows = [{"algorithm": algo, "iteration": r.iteration, "residual_l2": r.residual,
             "relative_error": r.relative_error, "qp_iters": r.qp_iters,
             "qp_converged": r.qp_converged} for r in result.trace]
    shown = {key: v for key, v in vals.items() if key not in ("out_dir", "require_certificate")}
    try:
        os.makedirs(d, exist_ok=True)
        io.write_vector(x_path, result.x_hat)
        with open(trace_path, "w", newline="\n") as fh:
            io.write_csv(fh, TRACE_HEADER, rows, _comments("solve", shown))
        _write_manifest(os.path.join(d, "manifest.txt"), "solve", vals, prov,
                        [("x_hat", x_path), ("trace", trace_path)])
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    last = result.trace[-1]
    print(f"status = {result.status}")
    print(f"iterations = {result.iterations}")
    print(f"residual_l2 = {io.fmt(last.residual)}")
    if last.relative_error is not None:
        print(f"relative_error = {io.fmt(last.relative_error)}")
    if result.status == "numerical-failure":
        print(f"error: {result.message}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


# -- sweep -------------------------------------------------------------------

SWEEP_PARAMS = [
    Param("study", _choice("success", "iterations", "residual"), "success"),
    Param("axis", _choice("k_over_n", "m_over_n"), "k_over_n"),
    Param("preset", _choice(*PRESETS), "desk"),
    Param("from_", float, None, "first grid ratio", opt="--from"),
    Param("to", float, None, "last grid ratio"),
    Param("points", int, 12, "grid points"),
    Param("trials", int, None, "trials per grid point"),
    Param("algos", _algos, None, "comma-separated algorithms"),
    Param("m", int, None),
    Param("n", int, None),
    Param("k", int, None, "sparsity (m_over_n axis and residual study)"),
    Param("noise", float, 0.0, "noise scale"),
    Param("max_iter", int, None, "iteration cap"),
    Param("eps", float, None),
    Param("lam", float, None),
    Param("residual_sweep", _choice("none", "epsilon", "lambda"), "none",
          "residual study: sweep eps or lam instead of a single setting"),
    Param("seed", int, None),
    Param("workers", int, 1, "worker processes"),
    Param("out", str, "sweep.csv", "output CSV"),
]

_STUDY_DEFAULTS = {
    "success": {"max_iter": 20, "algos": ["ntrotp", "nshtp", "nsiht", "omp", "sp"]},
    "iterations": {"max_iter": 50, "algos": ["ntrot", "ntrotp", "nsiht", "nshtp"]},
    "residual": {"max_iter": 30, "algos": ["ntrot", "ntrotp", "nsiht", "nshtp"]},
}


def _fill(vals, prov, key, value, source):
    if prov[key] == "default":
        vals[key], prov[key] = value, source


def _sweep_defaults(vals, prov):
    study, preset = vals["study"], PRESETS[vals["preset"]]
    tag = f"preset:{vals['preset']}"
    for key, v in _STUDY_DEFAULTS[study].items():
        _fill(vals, prov, key, v, f"study:{study}")
    _fill(vals, prov, "trials", preset["trials"], tag)
    if study == "residual":
        _fill(vals, prov, "m", preset["m"], tag)
        _fill(vals, prov, "n", preset["n"], tag)
        _fill(vals, prov, "k", int(round(70 / 512 * vals["n"])), tag)
        _fill(vals, prov, "lam", 10.0 if vals["residual_sweep"] == "epsilon" else 5.0,
              f"study:{study}")
    elif vals["axis"] == "k_over_n":
        _fill(vals, prov, "m", preset["m"], tag)
        _fill(vals, prov, "n", preset["n"], tag)
        _fill(vals, prov, "from", 0.01, tag)
        _fill(vals, prov, "to", 0.35, tag)
    else:
        _fill(vals, prov, "n", preset["mn_n"], tag)
        _fill(vals, prov, "k", preset["mn_k"], tag)
        _fill(vals, prov, "from", preset["mn_from"], tag)
        _fill(vals, prov, "to", preset["mn_to"], tag)
    _fill(vals, prov, "lam", 5.0, "default")


def _grid(vals):
    if vals["points"] < 1:
        raise UsageError("--points must be >= 1")
    if vals["points"] == 1:
        return (float(vals["from"]),)
    return tuple(float(v) for v in np.linspace(vals["from"], vals["to"], vals["points"]))


def cmd_sweep(args):
    vals, prov = _resolve(args, SWEEP_PARAMS)
    _sweep_defaults(vals, prov)
    _seed(vals, prov)
    study = vals["study"]
    try:
        base = SolverConfig(eps=vals["eps"], lam=vals["lam"], max_outer_iter=vals["max_iter"],
                            stop_rule="iteration-cap")
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from exc
    extra = []
    try:
        if study == "residual":
            spec = ProblemSpec(vals["m"], vals["n"], vals["k"], vals["noise"], vals["seed"])
            params = None
            if vals["residual_sweep"] == "epsilon":
                params = epsilon_sweep(gen_problem(spec).A, lam=vals["lam"])
            elif vals["residual_sweep"] == "lambda":
                params = lambda_sweep(gen_problem(spec).A)
            rows = residual_experiment(spec, vals["algos"], base, params)
            header = RESIDUAL_HEADER
        else:
            sweep = SweepSpec(vals["axis"], _grid(vals), vals["trials"], tuple(vals["algos"]),
                              m=vals["m"] or 1, n=vals["n"], k=vals["k"] or 1,
                              noise_scale=vals["noise"], base_seed=vals["seed"], config=base)
            # reject shapes the generator cannot produce before any work starts
            for g in range(len(sweep.grid)):
                sweep.problem_spec(g, 0)
            if study == "success":
                rows, _ = success_experiment(sweep, workers=vals["workers"])
                header = SUCCESS_HEADER
            else:
                rows, _ = iterations_experiment(sweep, workers=vals["workers"])
                header = ITERATIONS_HEADER
                extra = [f"failed trials counted at the cap ({vals['max_iter']})"]
    except (ValueError, ConfigurationError) as exc:
        raise UsageError(str(exc)) from exc
    if vals["workers"] < 1:
        raise UsageError("--workers must be >= 1")
    # the worker count never changes results, so it stays out of the header
    unused = {"workers", "out", "seed"}
    if study == "residual":
        unused |= {"axis", "from", "to", "points", "trials"}
    else:
        unused |= {"residual_sweep"} | ({"k"} if vals["axis"] == "k_over_n" else {"m"})
    shown = {k: v for k, v in vals.items() if k not in unused}
    try:
        with open(vals["out"], "w", newline="\n") as fh:
            io.write_csv(fh, header, rows, _comments("sweep", shown, vals["seed"], extra))
    except OSError as exc:
        print(f"error: cannot write {vals['out']}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wrote {len(rows)} rows to {vals['out']}")
    return EXIT_OK


# -- ric ---------------------------------------------------------------------

RIC_PARAMS = [
    Param("A", str, None, "matrix file"),
    Param("q", _ints, None, "RIC orders, e.g. '1 2 3'", many=True),
    Param("k", int, None, "sparsity for the theorem certificates"),
    Param("eps", float, None),
    Param("lam", float, 5.0),
    Param("guard", int, RIC_GUARD, "maximum number of supports to enumerate"),
]


def cmd_ric(args):
    vals, prov = _resolve(args, RIC_PARAMS)
    if vals["A"] is None:
        raise UsageError("--A is required")
    if not vals["q"] and vals["k"] is None:
        raise UsageError("give --q and/or --k")
    try:
        A = io.read_matrix(vals["A"])
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot load matrix: {exc}") from exc
    try:
        for q in vals["q"] or ():
            r = exact_ric(A, q, guard=vals["guard"])
            print(f"delta_{q} = {io.fmt(r.delta)}")
            print(f"witness_{q} = {_show(list(r.witness_support))}")
        k = vals["k"]
        if k is not None:
            deltas = {j: exact_ric(A, j * k, guard=vals["guard"]).delta for j in (1, 2, 3)}
            eps = vals["eps"] if vals["eps"] is not None else default_parameters(A, vals["lam"])
            for tid in (1, 2, 3):
                print(f"[theorem {tid}]")
                sys.stdout.write(certificate(tid, A, k, eps, vals["lam"], deltas).to_text())
    except OracleTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


# -- oracle-check ------------------------------------------------------------

ORACLE_PARAMS = [
    Param("suite", _choice("all", *SUITES), "all"),
    Param("seed", int, None),
]


def cmd_oracle_check(args):
    vals, prov = _resolve(args, ORACLE_PARAMS)
    _seed(vals, prov)
    names = list(SUITES) if vals["suite"] == "all" else [vals["suite"]]
    ok = True
    for name in names:
        res = run_suite(name, vals["seed"])
        print(res.line())
        for d in res.details:
            print(f"  {d}")
        ok &= res.ok
    print("all suites passed" if ok else "oracle check FAILED")
    return EXIT_OK if ok else EXIT_NUMERICAL


# -- entry point -------------------------------------------------------------

_COMMANDS = {
    "gen": (cmd_gen, GEN_PARAMS, "generate a seeded Gaussian recovery problem"),
    "solve": (cmd_solve, SOLVE_PARAMS, "run one recovery algorithm"),
    "sweep": (cmd_sweep, SWEEP_PARAMS, "benchmark studies written as CSV"),
    "ric": (cmd_ric, RIC_PARAMS, "exact restricted isometry constants and certificates"),
    "oracle-check": (cmd_oracle_check, ORACLE_PARAMS, "brute-force cross-checks"),
}


def build_parser():
    parser = _Parser(prog="ntot", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ntot {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, (_, params, help_) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        _add_params(p, params)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command][0](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

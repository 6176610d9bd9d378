"""Command-line harness: ``percolab <subcommand> --graph SPEC [options]``.

Every run writes one CSV (one flat row per measurement point) and, with
``--out``, a JSONL mirror and a manifest holding the configuration, timings
and checksums.  CSV bytes depend only on the configuration, never on the
worker count or wall-clock time.

Exit codes: 0 success, 1 usage error, 2 criterion failure (suite),
3 resource refusal.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field

from . import __version__, checks, nbw
from .estimators import (
    ball_volumes, chi, cluster_statistics, cluster_tail, estimate_pc, magnetization_report,
    survival_probability, triangle_diagram,
)
from .graphs import GraphError, Hypercube, build
from .oracle import ExactOracle, OracleRefusal, check_differential_inequalities
from .parallel import default_workers
from .sprinkling import NothingToPartition, boundary_experiment, plan, run_many

SCHEMA_VERSION = 1
DEFAULT_MEM_CAP = 2 * 1024**3

EXIT_OK, EXIT_USAGE, EXIT_CRITERION, EXIT_RESOURCE = 0, 1, 2, 3

SCHEMAS = {
    "chi": ["graph", "p", "replicates", "seed", "mean", "std_error"],
    "pc": ["graph", "lambda", "target", "tolerance", "replicates", "seed", "p_lo", "p_hi", "p_hat",
           "chi_hat", "chi_std_error", "shift_m3"],
    "clusters": ["graph", "p", "replicate", "seed", "C1", "C2", "sum_sq", "k", "Z_k"],
    "tail": ["graph", "p", "k", "method", "replicates", "seed", "mean", "std_error"],
    "survival": ["graph", "p", "r", "replicates", "seed", "mean", "std_error"],
    "ball": ["graph", "p", "r", "t", "replicates", "seed", "shell_mean", "shell_std_error",
             "ball_mean", "ball_std_error"],
    "triangle": ["graph", "p", "x", "y", "replicates", "seed", "mean", "std_error", "aborted"],
    "magnetization": ["graph", "p", "gamma", "replicates", "seed", "mean", "std_error"],
    "oracle": ["graph", "p", "gamma", "quantity", "x", "y", "value"],
    "inequalities": ["graph", "p", "gamma", "M", "dM_dp", "dM_dgamma", "nabla_max", "alpha",
                     "slack_ineq1", "slack_ineq2", "slack_rdi"],
    "nbw": ["m", "quantity", "t", "w", "value"],
    "sprinkle": ["graph", "epsilon", "theta", "p1", "p2", "k0", "Z_at_p1", "C1_after", "merge_fraction",
                 "boundary_closed_edges", "ratio", "seed"],
    "boundary": ["graph", "epsilon", "theta", "p1", "k0", "boundary_closed_edges", "ratio", "seed"],
    "suite": ["suite", "criterion", "name", "passed", "summary"],
}


class UsageError(Exception):
    pass


class ResourceRefusal(Exception):
    pass


@dataclass
class ExperimentConfig:
    subcommand: str
    graph: str | None
    params: dict
    root_seed: int
    workers: int
    out: str | None

    def to_json(self):
        return asdict(self)


@dataclass
class RunManifest:
    config: dict
    version: str
    schema_version: int
    started: float
    finished: float = 0.0
    python: str = field(default_factory=platform.python_version)
    row_sha256: list = field(default_factory=list)
    files: dict = field(default_factory=dict)
    timings_s: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- formatting ---------------------------------------------------------------

def _fmt(x):
    if hasattr(x, "item"):  # numpy scalar
        x = x.item()
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def _jsonable(x):
    if hasattr(x, "item"):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def write_outputs(config: ExperimentConfig, columns, rows, started, timings=None) -> None:
    text = render_csv(columns, rows)
    if config.out is None:
        sys.stdout.write(text)
        return
    out = config.out
    paths = {"csv": out, "jsonl": out + ".jsonl", "manifest": out + ".manifest.json"}
    jsonl = "".join(json.dumps({c: _jsonable(r.get(c)) for c in columns}) + "\n" for r in rows)
    lines = text.splitlines()[1:]
    man = RunManifest(config.to_json(), __version__, SCHEMA_VERSION, started, time.time())
    man.timings_s = {str(k): v for k, v in (timings or {}).items()}
    man.row_sha256 = [hashlib.sha256(line.encode()).hexdigest() for line in lines]
    man.files = {
        "csv": hashlib.sha256(text.encode()).hexdigest(),
        "jsonl": hashlib.sha256(jsonl.encode()).hexdigest(),
    }
    payload = {"csv": text, "jsonl": jsonl, "manifest": json.dumps(asdict(man), indent=2) + "\n"}
    tmp = {k: p + ".partial" for k, p in paths.items()}
    try:
        d = os.path.dirname(os.path.abspath(out))
        os.makedirs(d, exist_ok=True)
        for k in ("csv", "jsonl", "manifest"):
            with open(tmp[k], "w", newline="") as fh:
                fh.write(payload[k])
        for k in ("csv", "jsonl", "manifest"):
            os.replace(tmp[k], paths[k])
    except BaseException:
        for p in tmp.values():
            if os.path.exists(p):
                os.remove(p)
        raise


# --- parameter helpers --------------------------------------------------------

def _graph(args):
    if not args.graph:
        raise UsageError("--graph is required")
    try:
        g = build(args.graph)
    except GraphError as exc:
        raise UsageError(str(exc)) from None
    need = g.memory_estimate()
    if need > args.mem_cap:
        raise ResourceRefusal(f"{g.spec} needs about {need / 2**30:.2f} GiB per replicate; cap is {args.mem_cap / 2**30:.2f} GiB")
    return g


def _require(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required for '{args.cmd}'")


def _p_hat_c(args, g):
    if args.pc is not None:
        return args.pc
    return estimate_pc(g, args.lam, replicates=args.pc_reps, seed=args.seed, workers=args.workers).p_hat


def _resolve_p(args, g):
    """``--p`` directly, or ``p_hat_c(lambda) * (1 + epsilon)``."""
    if args.p is not None:
        if args.epsilon is not None:
            raise UsageError("give either --p or --epsilon, not both")
        if not 0 <= args.p <= 1:
            raise UsageError("--p must lie in [0, 1]")
        return args.p
    if args.epsilon is None:
        raise UsageError(f"'{args.cmd}' needs --p or --epsilon")
    return _p_hat_c(args, g) * (1 + args.epsilon)


def _report_row(rep, **extra):
    row = {"graph": rep.graph, "p": rep.p, "replicates": rep.replicates, "seed": rep.seed,
           "mean": rep.mean, "std_error": rep.std_error}
    row.update(extra)
    return row


# --- subcommands --------------------------------------------------------------

def cmd_chi(args):
    g = _graph(args)
    return [_report_row(chi(g, _resolve_p(args, g), args.reps, args.seed, args.workers))]


def cmd_pc(args):
    g = _graph(args)
    try:
        est = estimate_pc(g, args.lam, args.tolerance, args.reps, args.seed, args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    m = g.degree
    return [{
        "graph": str(g.spec), "lambda": args.lam, "target": est.target,
        "tolerance": args.tolerance if args.tolerance is not None else 1e-3 / m**3,
        "replicates": args.reps, "seed": args.seed, "p_lo": est.bracket[0], "p_hi": est.bracket[1],
        "p_hat": est.p_hat, "chi_hat": est.chi_at_p_hat.mean, "chi_std_error": est.chi_at_p_hat.std_error,
        "shift_m3": (est.p_hat - 1.0 / (m - 1)) * m**3 if m > 1 else None,
    }]


def cmd_clusters(args):
    g = _graph(args)
    p = _resolve_p(args, g)
    k = args.k if args.k is not None else 1
    st = cluster_statistics(g, p, args.reps, args.seed, ks=(k,), workers=args.workers)
    return [{"graph": str(g.spec), "p": p, "replicate": j, "seed": args.seed, "C1": st["C1"][j],
             "C2": st["C2"][j], "sum_sq": st["sum_sq"][j], "k": k, "Z_k": st["Z"][j, 0]}
            for j in range(args.reps)]


def cmd_tail(args):
    g = _graph(args)
    _require(args, "k")
    rep = cluster_tail(g, _resolve_p(args, g), args.k, args.reps, args.seed, args.workers, method=args.method)
    return [_report_row(rep, k=args.k, method=args.method)]


def cmd_survival(args):
    g = _graph(args)
    _require(args, "r")
    rep = survival_probability(g, _resolve_p(args, g), args.r, args.reps, args.seed, args.workers)
    return [_report_row(rep, r=args.r)]


def cmd_ball(args):
    g = _graph(args)
    _require(args, "r")
    bv = ball_volumes(g, _resolve_p(args, g), args.r, args.reps, args.seed, args.workers)
    return [{"graph": bv.graph, "p": bv.p, "r": bv.r, "t": t, "replicates": bv.replicates, "seed": bv.seed,
             "shell_mean": bv.shell_mean[t], "shell_std_error": bv.shell_se[t],
             "ball_mean": bv.ball_mean[t], "ball_std_error": bv.ball_se[t]} for t in range(bv.r + 1)]


def cmd_triangle(args):
    g = _graph(args)
    y = args.y if args.y is not None else 0
    g._check_vertex(y)
    rep = triangle_diagram(g, _resolve_p(args, g), 0, y, args.reps, args.seed, args.workers, args.cost_cap)
    return [_report_row(rep, x=0, y=y, aborted=rep.extra["aborted"])]


def cmd_magnetization(args):
    g = _graph(args)
    _require(args, "gamma")
    if not 0 <= args.gamma <= 1:
        raise UsageError("--gamma must lie in [0, 1]")
    rep = magnetization_report(g, _resolve_p(args, g), args.gamma, args.reps, args.seed, args.workers)
    return [_report_row(rep, gamma=args.gamma)]


def cmd_oracle(args):
    g = _graph(args)
    _require(args, "p")
    orc = ExactOracle(g)
    p = args.p
    spec = str(g.spec)
    rows = []
    tau = orc.tau(p)
    for y in range(g.V):
        rows.append({"quantity": "tau", "x": 0, "y": y, "value": tau[0, y]})
    rows.append({"quantity": "chi", "value": orc.chi(p)})
    law = orc.cluster_law(p)
    for k in range(1, g.V + 1):
        rows.append({"quantity": "cluster_law", "x": k, "value": law[k]})
    rows.append({"quantity": "nabla", "x": 0, "y": 0, "value": orc.nabla(p)[0, 0]})
    rows.append({"quantity": "nabla_max", "value": orc.nabla_max(p)})
    if args.gamma is not None:
        rows.append({"quantity": "magnetization", "value": orc.magnetization(p, args.gamma)})
    for r in rows:
        r.update(graph=spec, p=p, gamma=args.gamma)
    return rows


def cmd_inequalities(args):
    g = _graph(args)
    grid = [i / 10 for i in range(1, 10)]
    out = []
    for r in check_differential_inequalities(g, grid, grid):
        row = asdict(r)
        row["graph"] = str(g.spec)
        out.append(row)
    return out


def cmd_nbw(args):
    g = _graph(args)
    if not isinstance(g, Hypercube):
        raise UsageError("'nbw' supports hypercube graphs only")
    m = g.m
    tmax = args.t if args.t is not None else 2 * m
    K = nbw.krawtchouk_table(m)
    rows = []
    table = nbw.transition_table(nbw.nbw_spectrum(m, tmax), K)
    for t in range(tmax + 1):
        for w in range(m + 1):
            rows.append({"m": m, "quantity": "transition", "t": t, "w": w, "value": table[t, w]})
    if args.xi is not None:
        rows.append({"m": m, "quantity": "mixing_time", "value": nbw.uniform_mixing_time(m, args.xi)})
    if args.L is not None:
        ts = nbw.triangle_sum(nbw.nbw_spectrum(m, args.L), K, args.L)
        for q in ("value", "sup", "k01", "k01_bound", "bulk"):
            rows.append({"m": m, "quantity": f"triangle_{q}", "t": args.L, "value": getattr(ts, q)})
    return rows


def _plan(args, g):
    _require(args, "epsilon", "theta")
    try:
        return plan(g, _p_hat_c(args, g), args.epsilon, args.theta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_sprinkle(args):
    g = _graph(args)
    pl = _plan(args, g)
    outs = run_many(g, pl, args.reps, args.seed, args.workers)
    return [{"graph": str(g.spec), "epsilon": pl.epsilon, "theta": pl.theta, "p1": pl.p1, "p2": pl.p2,
             "k0": pl.k0, "Z_at_p1": o.Z_at_p1, "C1_after": o.C1_after, "merge_fraction": o.merge_fraction,
             "boundary_closed_edges": o.boundary_closed_edges, "ratio": o.ratio, "seed": o.seed} for o in outs]


def cmd_boundary(args):
    g = _graph(args)
    pl = _plan(args, g)
    try:
        count, ratio = boundary_experiment(g, pl, args.seed)
    except NothingToPartition as exc:
        raise UsageError(str(exc)) from None
    return [{"graph": str(g.spec), "epsilon": pl.epsilon, "theta": pl.theta, "p1": pl.p1, "k0": pl.k0,
             "boundary_closed_edges": count, "ratio": ratio, "seed": args.seed}]


def cmd_suite(args):
    name = args.name
    if name not in checks.SUITES:
        raise UsageError(f"unknown suite {name!r}; choose from {sorted(checks.SUITES)}")
    results = checks.run_suite(name, progress=lambda r: print(r.line(), file=sys.stderr, flush=True))
    rows = [{"suite": name, "criterion": r.id, "name": r.name, "passed": r.passed, "summary": r.summary}
            for r in results]
    args._suite_failed = not all(r.passed for r in results)
    args._timings = {r.id: r.elapsed_s for r in results}
    return rows


COMMANDS = {
    "chi": (cmd_chi, "susceptibility estimate sum |C|^2 / V"),
    "pc": (cmd_pc, "critical point p_c(lambda) by coupled multisection"),
    "clusters": (cmd_clusters, "per-replicate |C1|, |C2|, sum |C|^2 and Z_{>=k}"),
    "tail": (cmd_tail, "cluster tail P(|C(0)| >= k)"),
    "survival": (cmd_survival, "intrinsic survival probability to radius r"),
    "ball": (cmd_ball, "intrinsic ball and shell volumes"),
    "triangle": (cmd_triangle, "triangle diagram estimate"),
    "magnetization": (cmd_magnetization, "magnetization M(p, gamma)"),
    "oracle": (cmd_oracle, "exact quantities by enumeration (small graphs)"),
    "inequalities": (cmd_inequalities, "differential-inequality slacks on a 9x9 grid (small graphs)"),
    "nbw": (cmd_nbw, "exact non-backtracking walk transitions, mixing time and triangle sum"),
    "sprinkle": (cmd_sprinkle, "two-round sprinkling runs"),
    "boundary": (cmd_boundary, "closed edges between two halves of the large clusters"),
    "suite": (cmd_suite, "run an acceptance suite (smoke or paper-checks)"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", help="graph spec, e.g. hypercube:m=20 or torus:n=10,d=3")
    common.add_argument("--p", type=float)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--lambda", dest="lam", type=float, default=0.1)
    common.add_argument("--tolerance", type=float)
    common.add_argument("--pc", type=float, help="use this p_hat_c instead of estimating it")
    common.add_argument("--pc-reps", type=int, default=20)
    common.add_argument("--gamma", type=float)
    common.add_argument("--k", type=int)
    common.add_argument("--r", type=int)
    common.add_argument("--y", type=int, help="second vertex for triangle (first is 0)")
    common.add_argument("--L", type=int)
    common.add_argument("--t", type=int, help="time horizon for nbw transitions")
    common.add_argument("--xi", type=float)
    common.add_argument("--theta", type=float)
    common.add_argument("--method", choices=("z", "origin"), default="z")
    common.add_argument("--cost-cap", type=int)
    common.add_argument("--reps", type=int, default=100)
    common.add_argument("--seed", type=int, default=int(os.environ.get("PERCOLAB_SEED", "0")))
    common.add_argument("--workers", type=int, default=default_workers())
    common.add_argument("--mem-cap", type=int, default=int(os.environ.get("PERCOLAB_MEM_CAP", DEFAULT_MEM_CAP)),
                        help="refuse graphs whose per-replicate memory estimate exceeds this many bytes")
    common.add_argument("--out", help="CSV path; a .jsonl mirror and .manifest.json are written next to it")
    parser = _Parser(prog="percolab", description="Bond percolation experiments on transitive graphs.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="cmd", metavar="<subcommand>", parser_class=_Parser)
    for name, (_, helptext) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=helptext)
        if name == "suite":
            sp.add_argument("name", nargs="?", default="smoke", help="smoke or paper-checks")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.cmd is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    if args.reps < 2 and args.cmd not in ("oracle", "inequalities", "nbw", "suite", "boundary"):
        parser.error("--reps must be at least 2")
    if args.workers < 1:
        parser.error("--workers must be at least 1")
    params = {k: v for k, v in vars(args).items()
              if k not in ("cmd", "graph", "seed", "workers", "out") and v is not None}
    config = ExperimentConfig(args.cmd, args.graph, params, args.seed, args.workers, args.out)
    started = time.time()
    fn = COMMANDS[args.cmd][0]
    try:
        rows = fn(args)
        write_outputs(config, SCHEMAS[args.cmd], rows, started, getattr(args, "_timings", None))
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"percolab {args.cmd}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceRefusal, OracleRefusal, MemoryError) as exc:
        print(f"percolab {args.cmd}: refused: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (GraphError, IndexError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"percolab {args.cmd}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "_suite_failed", False):
        return EXIT_CRITERION
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

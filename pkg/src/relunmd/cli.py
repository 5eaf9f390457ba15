"""Command-line surface: generate | decompose | cluster | compress | bench.

Options may come from flags or from a flat ``key=value`` config file; flags
win. All validation errors are reported together before anything runs, and
output files contain no wall-clock values, so identical configurations with
identical seeds produce bitwise-identical artifacts.

Exit codes: 0 success, 1 usage error, 2 runtime failure. ``RELU_NMD_THREADS``
caps bench parallelism (default 1).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import math
import os
import sys
from dataclasses import dataclass

import scipy.sparse as sp

from . import io as rio
from .model import build_observed, relative_error
from .regularizers import RegularizerCase, SCOPES, TAGS
from .solvers import SOLVER_NAMES, SolveOptions, run_solver
from .tasks import cluster_pipeline, compress_pipeline

COMMANDS = ("generate", "decompose", "cluster", "compress", "bench")

_DEFAULTS = {
    "input": None, "labels": None, "data": None, "out": ".",
    "m": 200, "n": 100, "rank_true": 5,
    "rank": None, "case": "none",
    "eta1": 0.0, "eta2": 0.0, "mu0": 0.0,
    "s1": None, "s2": None, "s_scope": "global",
    "solver": "aapb", "solvers": "aapb,apb,ppalm,ippalm",
    "lam": 1.0, "beta": 0.6, "max_iter": 1000, "max_time": math.inf,
    "tol": 1e-4, "seed": 0, "neighbors": 5,
}

_FIELD_TYPES = {
    "input": str, "labels": str, "data": str, "out": str,
    "m": int, "n": int, "rank_true": int, "rank": int,
    "case": str, "eta1": float, "eta2": float, "mu0": float,
    "s1": int, "s2": int, "s_scope": str,
    "solver": str, "solvers": str,
    "lam": float, "beta": float, "max_iter": int, "max_time": float,
    "tol": float, "seed": int, "neighbors": int,
}


class UsageError(Exception):
    """Carries the full list of validation problems."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: str | None
    labels: str | None
    data: str | None
    out: str
    m: int
    n: int
    rank_true: int
    rank: int | None
    case: str
    eta1: float
    eta2: float
    mu0: float
    s1: int | None
    s2: int | None
    s_scope: str
    solver: str
    solvers: tuple[str, ...]
    lam: float
    beta: float
    max_iter: int
    max_time: float
    tol: float
    seed: int
    neighbors: int


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError([message])


def _build_parser() -> _Parser:
    parser = _Parser(prog="relunmd", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="|".join(COMMANDS))
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="flat key=value config file; flags override it")
        for field in ("input", "labels", "data", "out", "case", "s_scope",
                      "solver", "solvers"):
            p.add_argument(f"--{field.replace('_', '-')}", dest=field, default=None)
        for field in ("m", "n", "rank_true", "rank", "s1", "s2",
                      "max_iter", "seed", "neighbors"):
            p.add_argument(f"--{field.replace('_', '-')}", dest=field,
                           type=int, default=None)
        for field in ("eta1", "eta2", "mu0", "beta", "max_time", "tol"):
            p.add_argument(f"--{field.replace('_', '-')}", dest=field,
                           type=float, default=None)
        p.add_argument("--lambda", dest="lam", type=float, default=None)
    return parser


def _read_config_file(path, problems):
    values = {}
    try:
        with open(path, "r", encoding="ascii") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, sep, value = line.partition("=")
                key = key.strip()
                if not sep:
                    problems.append(f"{path}:{lineno}: expected key=value")
                    continue
                if key not in _FIELD_TYPES:
                    problems.append(f"{path}:{lineno}: unknown key {key!r}")
                    continue
                try:
                    values[key] = _FIELD_TYPES[key](value.strip())
                except ValueError:
                    problems.append(f"{path}:{lineno}: bad value for {key!r}")
    except OSError as exc:
        problems.append(f"cannot read config file: {exc}")
    return values


def parse_config(argv) -> RunConfig:
    """Parse flags (and an optional config file) into a validated RunConfig."""
    namespace = _build_parser().parse_args(argv)
    if namespace.command is None:
        raise UsageError(["missing command; expected one of " + ", ".join(COMMANDS)])
    problems: list[str] = []
    merged = dict(_DEFAULTS)
    provided = set()
    if namespace.config is not None:
        file_values = _read_config_file(namespace.config, problems)
        merged.update(file_values)
        provided |= set(file_values)
    for key in _FIELD_TYPES:
        flag_value = getattr(namespace, key, None)
        if flag_value is not None:
            merged[key] = flag_value
            provided.add(key)

    cmd = namespace.command
    if cmd == "cluster":
        # clustering defaults differ from the generic zero-weight defaults
        for key, value in (("mu0", 100.0), ("eta1", 0.1), ("eta2", 0.1)):
            if key not in provided:
                merged[key] = value
    needs_input = cmd in ("decompose", "cluster", "compress", "bench")
    if needs_input:
        if merged["input"] is None:
            problems.append(f"{cmd} requires --input")
        elif not os.path.isfile(merged["input"]):
            problems.append(f"input file not found: {merged['input']}")
        if merged["rank"] is None:
            problems.append(f"{cmd} requires --rank")
    if cmd == "cluster":
        if merged["labels"] is None:
            problems.append("cluster requires --labels")
        elif not os.path.isfile(merged["labels"]):
            problems.append(f"labels file not found: {merged['labels']}")
    if cmd == "compress" and merged["s2"] is None:
        problems.append("compress requires --s2")
    if merged["data"] is not None and not os.path.isfile(merged["data"]):
        problems.append(f"data file not found: {merged['data']}")

    if merged["case"] not in TAGS:
        problems.append(f"unknown case {merged['case']!r}; choose from {TAGS}")
    if merged["s_scope"] not in SCOPES:
        problems.append(f"s_scope must be one of {SCOPES}")
    if merged["solver"] not in SOLVER_NAMES:
        problems.append(f"unknown solver {merged['solver']!r}; "
                        f"choose from {SOLVER_NAMES}")
    solver_list = tuple(s.strip() for s in str(merged["solvers"]).split(",") if s.strip())
    for s in solver_list:
        if s not in SOLVER_NAMES:
            problems.append(f"unknown solver {s!r} in --solvers")
    if not solver_list:
        problems.append("--solvers must name at least one solver")

    if not 0.0 < merged["lam"] <= 1.0:
        problems.append("lambda must satisfy 0 < lambda <= 1")
    if not 0.0 <= merged["beta"] < 1.0:
        problems.append("beta must satisfy 0 <= beta < 1")
    if merged["max_iter"] < 0:
        problems.append("max-iter must be >= 0")
    if merged["max_time"] <= 0:
        problems.append("max-time must be positive")
    if merged["tol"] < 0:
        problems.append("tol must be >= 0")
    if merged["rank"] is not None and merged["rank"] < 1:
        problems.append("rank must be >= 1")
    for key in ("m", "n", "rank_true", "neighbors"):
        if merged[key] < 1:
            problems.append(f"{key.replace('_', '-')} must be >= 1")
    for key in ("eta1", "eta2", "mu0"):
        if merged[key] < 0:
            problems.append(f"{key} must be >= 0")
    for key in ("s1", "s2"):
        if merged[key] is not None and merged[key] < 0:
            problems.append(f"{key} must be >= 0")

    if problems:
        raise UsageError(problems)
    return RunConfig(command=cmd,
                     solvers=solver_list,
                     **{k: merged[k] for k in _FIELD_TYPES if k != "solvers"})


def _build_case(config: RunConfig) -> RegularizerCase | None:
    tag = config.case
    if tag == "none":
        return RegularizerCase.none()
    if tag == "tikhonov":
        return RegularizerCase.tikhonov(config.eta1, config.eta2)
    if tag == "l1l1":
        return RegularizerCase.l1l1(config.eta1, config.eta2)
    if tag == "l1_minus_fro":
        return RegularizerCase.l1_minus_fro(config.eta1, config.eta2)
    if tag == "sparsity":
        return RegularizerCase.sparsity(config.s1, config.s2, config.s_scope)
    raise ValueError(f"case {tag!r} cannot be built from flags alone "
                     "(graph_tikhonov is constructed by the cluster command)")


def _solve_options(config: RunConfig) -> SolveOptions:
    return SolveOptions(rank=config.rank, lam=config.lam, beta=config.beta,
                        max_iter=config.max_iter, max_time=config.max_time,
                        tol=config.tol, seed=config.seed)


def _load_matrix(path):
    if path.endswith((".mtx", ".mm")):
        return rio.load_matrix_market(path)
    if path.endswith(".csv"):
        return rio.load_dense_csv(path)
    raise ValueError(f"unrecognized matrix format: {path} (expect .mtx or .csv)")


def _metadata(config: RunConfig, solver: str) -> dict:
    sha = rio.sha256_of(config.input) if config.input else "-"
    return {"solver": solver, "case": config.case, "seed": config.seed,
            "lambda": repr(config.lam),
            "beta": repr(0.0 if solver in ("apb", "ppalm") else config.beta),
            "dataset_sha256": sha}


def _cmd_generate(config: RunConfig) -> int:
    m_mat, u_star, v_star = rio.synth_relu(config.m, config.n,
                                           config.rank_true, config.seed)
    os.makedirs(config.out, exist_ok=True)
    rio.save_dense_csv(os.path.join(config.out, "M.csv"), m_mat)
    rio.save_dense_csv(os.path.join(config.out, "U_star.csv"), u_star)
    rio.save_dense_csv(os.path.join(config.out, "V_star.csv"), v_star)
    print(f"generated {config.m}x{config.n} target of true rank "
          f"{config.rank_true} in {config.out}")
    return 0


def _cmd_decompose(config: RunConfig) -> int:
    obs = build_observed(_load_matrix(config.input))
    case = _build_case(config)
    pair, trace = run_solver(config.solver, obs, case, _solve_options(config))
    os.makedirs(config.out, exist_ok=True)
    rio.save_dense_csv(os.path.join(config.out, "U.csv"), pair.u)
    rio.save_dense_csv(os.path.join(config.out, "V.csv"), pair.v)
    rio.write_trace(trace, os.path.join(config.out, "trace.csv"),
                    metadata=_metadata(config, config.solver),
                    include_wall_time=False)
    final = trace[-1].rel_error if trace else relative_error(obs, pair)
    print(f"{config.solver}: {len(trace)} iterations, relative error {final:.6e}")
    return 0


def _cmd_cluster(config: RunConfig) -> int:
    mat = _load_matrix(config.input)
    truth = rio.load_dense_csv(config.labels).ravel().astype(int)
    obs = build_observed(mat)
    result = cluster_pipeline(obs, truth, config.rank, mu0=config.mu0,
                              eta1=config.eta1, eta2=config.eta2,
                              opts=_solve_options(config),
                              neighbors=config.neighbors)
    os.makedirs(config.out, exist_ok=True)
    rio.save_dense_csv(os.path.join(config.out, "labels.csv"),
                       result.labels[:, None].astype(float))
    with open(os.path.join(config.out, "accuracy.txt"), "w") as fh:
        fh.write(f"{result.accuracy_percent!r}\n")
    print(f"clustering accuracy: {result.accuracy_percent:.2f}%")
    return 0


def _cmd_compress(config: RunConfig) -> int:
    basis = _load_matrix(config.input)
    if sp.issparse(basis):
        basis = basis.toarray()
    data = None
    if config.data is not None:
        data = _load_matrix(config.data)
        if sp.issparse(data):
            data = data.toarray()
    result = compress_pipeline(basis, config.rank, config.s2,
                               opts=_solve_options(config), data=data)
    os.makedirs(config.out, exist_ok=True)
    rio.save_dense_csv(os.path.join(config.out, "U.csv"), result.factor.u)
    rio.save_dense_csv(os.path.join(config.out, "V.csv"), result.factor.v)
    with open(os.path.join(config.out, "metrics.txt"), "w") as fh:
        fh.write(f"tol_nmd={result.tol_nmd!r}\n")
        if result.tol_nmf is not None:
            fh.write(f"tol_nmf={result.tol_nmf!r}\n")
    extra = "" if result.tol_nmf is None else f", tol_nmf {result.tol_nmf:.6e}"
    print(f"compressed to rank {config.rank}: tol_nmd {result.tol_nmd:.6e}{extra}")
    return 0


def _cmd_bench(config: RunConfig) -> int:
    obs = build_observed(_load_matrix(config.input))
    case = _build_case(config)
    opts = _solve_options(config)
    threads = max(int(os.environ.get("RELU_NMD_THREADS", "1")), 1)

    def one(name):
        return run_solver(name, obs, case, opts)

    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, config.solvers))
    else:
        results = [one(name) for name in config.solvers]

    os.makedirs(config.out, exist_ok=True)
    finals = []
    for name, (pair, trace) in zip(config.solvers, results):
        rio.write_trace(trace, os.path.join(config.out, f"trace_{name}.csv"),
                        metadata=_metadata(config, name),
                        include_wall_time=False)
        final = trace[-1].rel_error if trace else relative_error(obs, pair)
        finals.append((name, len(trace), trace[-1].objective if trace else math.nan,
                       final))
    e_min = min(f[3] for f in finals)
    with open(os.path.join(config.out, "comparison.csv"), "w") as fh:
        fh.write(f"# e_min={e_min!r}\n")
        fh.write("solver,iterations,final_objective,final_rel_error\n")
        for name, iters, obj, final in finals:
            fh.write(f"{name},{iters},{obj!r},{final!r}\n")
    for name, iters, _, final in finals:
        print(f"{name}: {iters} iterations, relative error {final:.6e}")
    print(f"e_min: {e_min:.6e}")
    return 0


def run(config: RunConfig) -> int:
    """Execute a validated configuration; returns the process exit code."""
    handler = {"generate": _cmd_generate, "decompose": _cmd_decompose,
               "cluster": _cmd_cluster, "compress": _cmd_compress,
               "bench": _cmd_bench}[config.command]
    return handler(config)


def main(argv=None) -> int:
    try:
        config = parse_config(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        for problem in exc.problems:
            print(f"relunmd: {problem}", file=sys.stderr)
        return 1
    try:
        return run(config)
    except Exception as exc:  # runtime failure: one-line diagnostic
        print(f"relunmd: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""
ramlab CLI
Experiment runner and query front-end over the ramlab library.

Every JSON object printed carries a "version" field; floats are rounded to
12 decimals and exact rationals are printed as "num/den" strings.
Exit codes: 0 success, 1 invalid input or unknown command, 2 guard exceeded.
"""

import argparse
import csv
import io
import json
import logging
import math
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

from ramlab import __version__
from ramlab.config import GuardConfig, setup_logging
from ramlab.core_graphs import degree_profile, rank
from ramlab.errors import GuardExceededError, InvalidInputError
from ramlab.expansion_metrics import inequality_suite
from ramlab.free_words import parse_word
from ramlab.growth_stats import (
    bound_evaluator,
    classify_cycles,
    classify_words,
    general_bound_evaluator,
    optimize_bound,
    optimize_general_bound,
)
from ramlab.moebius import verify_r_support
from ramlab.primitivity import primitivity_rank
from ramlab.random_covers import (
    BaseGraph,
    CoverGraph,
    MultiGraph,
    make_rng,
    sample_cover,
    sample_matching_model,
    sample_perm_plus_matching,
    sample_permutation_model,
    trial_seed,
)
from ramlab.spectral import (
    adjacency_spectrum,
    lambda_nontrivial,
    markov_spectrum,
    mu_nontrivial,
    new_spectrum,
    rho_universal_cover,
)

logger = logging.getLogger(__name__)

MODELS = ("perm", "matching", "perm-matching", "cover")
SAMPLING_COMMANDS = ("sample", "trial-sweep")
NAMED_BASES: Dict[str, Callable[[], BaseGraph]] = {
    "figure-eight": BaseGraph.figure_eight,
    "barbell": BaseGraph.barbell,
    "theta": BaseGraph.theta,
}


# =============================================================================
# CONFIG
# =============================================================================

@dataclass
class ExperimentConfig:
    """
    One CLI invocation.

    Attributes:
        command: Subcommand name
        seed: Master seed (required for sampling commands)
        n, d, trials, t, depth: Numeric parameters used by the command
        base: Base graph name ("theta", "bouquet:2", "dipole:3", ...) or JSON path
        graph: Graph file (JSON or CSV edge list)
        output: Output path, stdout when None
        guards: Resource guards
        options: Remaining command specific flags
    """
    command: str
    seed: Optional[int] = None
    n: Optional[int] = None
    d: Optional[int] = None
    trials: Optional[int] = None
    t: Optional[int] = None
    depth: Optional[int] = None
    base: Optional[str] = None
    graph: Optional[str] = None
    output: Optional[str] = None
    guards: GuardConfig = field(default_factory=GuardConfig)
    options: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.command in SAMPLING_COMMANDS and self.seed is None:
            raise InvalidInputError(f"--seed is required for {self.command}")
        if self.seed is not None and not 0 <= self.seed < 2 ** 64:
            raise InvalidInputError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @classmethod
    def from_namespace(cls, args: argparse.Namespace, guards: GuardConfig) -> "ExperimentConfig":
        known = {"command", "seed", "n", "d", "trials", "t", "depth", "base", "graph", "output"}
        values = vars(args)
        skip = known | {"func", "log_level"}
        return cls(
            **{key: values.get(key) for key in known},
            guards=guards,
            options={key: value for key, value in values.items() if key not in skip},
        )


# =============================================================================
# HELPERS
# =============================================================================

def _fix(value: Any) -> Any:
    """Round floats to 12 decimals, inf as "inf", recursively."""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return round(value, 12)
    if isinstance(value, dict):
        return {key: _fix(v) for key, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_fix(v) for v in value]
    return value


def _json(data: dict) -> str:
    payload = {"version": __version__}
    payload.update(_fix(data))
    return json.dumps(payload, sort_keys=True)


def load_base(spec: str) -> BaseGraph:
    """A named base graph ("theta", "bouquet:2", "dipole:3", ...) or a JSON file."""
    name, _, arg = spec.partition(":")
    if name in NAMED_BASES:
        return NAMED_BASES[name]()
    if name in ("bouquet", "dipole"):
        try:
            size = int(arg)
        except ValueError:
            raise InvalidInputError(f"base {spec!r} needs an integer, e.g. {name}:2") from None
        return BaseGraph.bouquet(size) if name == "bouquet" else BaseGraph.dipole(size)
    path = Path(spec)
    if not path.exists():
        raise InvalidInputError(f"unknown base graph {spec!r}")
    try:
        return BaseGraph.from_dict(json.loads(path.read_text()))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{spec}: invalid JSON on line {exc.lineno}") from None


def load_graph(spec: str) -> MultiGraph:
    path = Path(spec)
    if not path.exists():
        raise InvalidInputError(f"graph file {spec!r} not found")
    text = path.read_text()
    if path.suffix == ".csv":
        return MultiGraph.from_csv(text)
    try:
        return MultiGraph.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{spec}: invalid JSON on line {exc.lineno}") from None


def _require(config: ExperimentConfig, *names: str) -> None:
    missing = [f"--{name}" for name in names if getattr(config, name) is None]
    if missing:
        raise InvalidInputError(f"{config.command} needs {', '.join(missing)}")


def _sample(config: ExperimentConfig, seed: int) -> Union[CoverGraph, MultiGraph]:
    """Draw one graph after checking the size of its dense adjacency."""
    model = config.options.get("model", "perm")
    simple = bool(config.options.get("simple"))
    guards = config.guards
    rng = make_rng(seed)
    if model == "cover":
        _require(config, "n", "base")
        base = load_base(config.base)
        guards.check("dense_dimension_limit", base.num_vertices * config.n, f"{model} sample")
        return sample_cover(base, config.n, rng, simple, guards=guards)
    _require(config, "n", "d")
    guards.check("dense_dimension_limit", config.n, f"{model} sample")
    if model == "perm":
        return sample_permutation_model(config.n, config.d, rng, simple, guards=guards)
    if model == "matching":
        return sample_matching_model(config.n, config.d, rng, simple, guards=guards)
    return sample_perm_plus_matching(config.n, config.d, rng, simple, guards=guards)


def _lambdas(
    graph: Union[CoverGraph, MultiGraph], guards: GuardConfig
) -> Tuple[Optional[float], Optional[float]]:
    """(lambda_A, lambda_M) on the new (cover) or non-trivial (regular graph) spectrum."""
    if isinstance(graph, CoverGraph):
        report = new_spectrum(graph, "adjacency", guards)
        return report.lambda_A_new, report.lambda_M_new
    return lambda_nontrivial(graph, guards), mu_nontrivial(graph, guards)


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_sample(config: ExperimentConfig) -> List[str]:
    """Emit one sampled graph."""
    graph = _sample(config, config.seed)
    multigraph = graph.to_multigraph() if isinstance(graph, CoverGraph) else graph
    if config.options.get("format") == "csv":
        return [multigraph.to_csv().rstrip("\n")]
    data = {"seed": config.seed, "model": config.options.get("model"), "graph": multigraph.to_dict()}
    if isinstance(graph, CoverGraph):
        data["base"] = graph.base.to_dict()
        data["sigma"] = [s.tolist() for s in graph.sigma]
    return [_json(data)]


def cmd_spectrum(config: ExperimentConfig) -> List[str]:
    """Full spectrum, plus the new spectrum for covers."""
    operator = config.options.get("operator", "adjacency")
    if config.graph is not None:
        g = load_graph(config.graph)
        report = {
            "eigenvalues": [float(x) for x in _spectrum_of(g, operator, config.guards)],
            "lambda_nontrivial": lambda_nontrivial(g, config.guards) if g.is_regular() else None,
            "mu_nontrivial": mu_nontrivial(g, config.guards),
        }
        return [_json(report)]
    if config.seed is None:
        raise InvalidInputError("spectrum needs --graph or a sampling model with --seed")
    graph = _sample(config, config.seed)
    if isinstance(graph, CoverGraph):
        return [_json(new_spectrum(graph, operator, config.guards).to_dict())]
    report = {
        "eigenvalues": [float(x) for x in _spectrum_of(graph, operator, config.guards)],
        "lambda_nontrivial": lambda_nontrivial(graph, config.guards),
        "mu_nontrivial": mu_nontrivial(graph, config.guards),
    }
    return [_json(report)]


def _spectrum_of(g: MultiGraph, operator: str, guards: GuardConfig):
    return adjacency_spectrum(g, guards) if operator == "adjacency" else markov_spectrum(g, guards)


def cmd_prim_rank(config: ExperimentConfig) -> List[str]:
    w = parse_word(config.options["word"], config.options.get("k"))
    report = primitivity_rank(w, config.guards)
    data = {"word": str(w), **report.to_dict()}
    return [_json(data)]


def cmd_crit(config: ExperimentConfig) -> List[str]:
    w = parse_word(config.options["word"], config.options.get("k"))
    report = primitivity_rank(w, config.guards)
    crit = []
    for g in report.crit:
        vertices, edges = degree_profile(g)
        crit.append({**g.to_dict(), "rank": rank(g), "profile": [vertices, edges]})
    return [_json({"word": str(w), "pi": report.to_dict()["pi"], "count": len(crit), "crit": crit})]


def cmd_moebius(config: ExperimentConfig) -> List[str]:
    w = parse_word(config.options["word"], config.options.get("k"))
    ns = config.options.get("ns") or [2, 3]
    report = verify_r_support(w, ns, config.guards)
    data = report.table.to_dict()
    data.update(
        {
            "word": str(w),
            "algebraic": list(report.algebraic),
            "r_support_passed": report.passed,
            "violations": [[j, n, f"{r.numerator}/{r.denominator}"] for j, n, r in report.violations],
        }
    )
    return [_json(data)]


def cmd_classify(config: ExperimentConfig) -> List[str]:
    _require(config, "t")
    with_crit = bool(config.options.get("crit"))
    if config.base is not None:
        hist = classify_cycles(load_base(config.base), config.t, with_crit, config.guards)
    else:
        k = config.options.get("k")
        if k is None:
            raise InvalidInputError("classify needs --k or --base")
        hist = classify_words(k, config.t, config.options.get("mode", "reduced"), with_crit, config.guards)
    if config.options.get("format") == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["t", "m", "count", "crit_sum"])
        writer.writerows(hist.to_rows())
        return [buffer.getvalue().rstrip("\n")]
    return [_json(hist.to_dict())]


def cmd_verify_bound(config: ExperimentConfig) -> List[str]:
    c = config.options.get("c")
    rho = config.options.get("rho")
    if config.d is not None:
        base_rank = config.options.get("base_rank")
        if c is None:
            c, _ = optimize_bound(config.d, base_rank)
        spec = bound_evaluator(config.d, c, base_rank)
    elif rho is not None:
        graph_rank = config.options.get("rank")
        if graph_rank is None:
            raise InvalidInputError("verify-bound --rho needs --rank")
        if c is None:
            c, _ = optimize_general_bound(graph_rank, rho)
        spec = general_bound_evaluator(graph_rank, rho, c)
    else:
        raise InvalidInputError("verify-bound needs --d or --rho with --rank")
    return [_json(spec.to_dict())]


def cmd_rho(config: ExperimentConfig) -> List[str]:
    _require(config, "base")
    depth = config.depth if config.depth is not None else 100
    operator = config.options.get("operator", "adjacency")
    estimate, exact = rho_universal_cover(load_base(config.base), depth, operator)
    return [_json({"base": config.base, "depth": depth, "operator": operator, "rho": estimate, "exact": exact})]


def cmd_expansion(config: ExperimentConfig) -> List[str]:
    _require(config, "graph")
    return [_json(inequality_suite(load_graph(config.graph), config.guards).to_dict())]


def _run_trial(config: ExperimentConfig, index: int) -> dict:
    seed = trial_seed(config.seed, index)
    started = time.perf_counter()
    lam_a, lam_m = _lambdas(_sample(config, seed), config.guards)
    return {
        "trial": index,
        "seed": seed,
        "lambda_A_new": lam_a,
        "lambda_M_new": lam_m,
        "runtime_ms": (time.perf_counter() - started) * 1000,
    }


def cmd_trial_sweep(config: ExperimentConfig) -> List[str]:
    """One JSON line per trial, in trial order regardless of completion order."""
    _require(config, "trials")
    workers = config.options.get("workers") or 1
    if workers < 1:
        raise InvalidInputError(f"--workers must be >= 1, got {workers}")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda i: _run_trial(config, i), range(config.trials)))
    logger.info(f"Trial sweep finished: {len(rows)} trials with {workers} workers")
    return [_json(row) for row in rows]


def summarize(lines: Sequence[str], threshold: Optional[float] = None) -> List[List[str]]:
    """
    CSV rows summarising lambda_A_new over trial-sweep lines.

    Trials without new eigenvalues (one-sheeted covers) record null; they
    count as trials but not in the statistics.
    """
    header = ["trials", "min", "median", "max", "pass_rate"]
    trials = 0
    values = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            value = json.loads(line)["lambda_A_new"]
            if value is not None:
                values.append(float(value))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            raise InvalidInputError(f"malformed trial record on line {line_no}") from None
        trials += 1
    if not trials:
        return [header]
    if not values:
        logger.info(f"No trial among {trials} has new eigenvalues")
        return [header, [str(trials), "", "", "", ""]]
    rate = "" if threshold is None else _fix(sum(v < threshold for v in values) / len(values))
    row = [trials, _fix(min(values)), _fix(statistics.median(values)), _fix(max(values)), rate]
    return [header, [str(x) for x in row]]


def cmd_report(config: ExperimentConfig) -> List[str]:
    path = Path(config.options["results"])
    if not path.exists():
        raise InvalidInputError(f"results file {path} not found")
    rows = summarize(path.read_text().splitlines(), config.options.get("threshold"))
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator="\n").writerows(rows)
    return [buffer.getvalue().rstrip("\n")]


COMMANDS: Dict[str, Callable[[ExperimentConfig], List[str]]] = {
    "sample": cmd_sample,
    "spectrum": cmd_spectrum,
    "prim-rank": cmd_prim_rank,
    "crit": cmd_crit,
    "moebius": cmd_moebius,
    "classify": cmd_classify,
    "verify-bound": cmd_verify_bound,
    "rho": cmd_rho,
    "expansion": cmd_expansion,
    "trial-sweep": cmd_trial_sweep,
    "report": cmd_report,
}


def run(config: ExperimentConfig) -> int:
    """Execute one command, write its output, and return the exit code."""
    handler = COMMANDS.get(config.command)
    if handler is None:
        print(f"Unknown command: {config.command}", file=sys.stderr)
        return 1
    try:
        lines = handler(config)
    except GuardExceededError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 2
    except InvalidInputError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 1
    text = "\n".join(lines) + ("\n" if lines else "")
    if config.output:
        Path(config.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# =============================================================================
# ARGUMENTS
# =============================================================================

class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _add_sampling(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=MODELS, default="perm", help="Random graph model")
    p.add_argument("--n", type=int, help="Vertices (or sheets for covers)")
    p.add_argument("--d", type=int, help="Degree")
    p.add_argument("--base", help="Base graph for --model cover")
    p.add_argument("--seed", type=int, help="Master seed")
    p.add_argument("--simple", action="store_true", help="Reject samples with loops or multi-edges")


def _add_word(p: argparse.ArgumentParser) -> None:
    p.add_argument("word", help="Word in a..z / A..Z (inverses), '1' for the identity")
    p.add_argument("--k", type=int, help="Alphabet size (default: largest letter used)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ramlab", description="ramlab - random graphs, core graphs and new eigenvalues")
    parser.add_argument("-v", "--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING (default from RAMLAB_LOG_LEVEL)")
    parser.add_argument("--output", help="Write output here instead of stdout")

    subparsers = parser.add_subparsers(dest="command", parser_class=_Parser, help="Commands")

    # sample command
    p = subparsers.add_parser("sample", help="Sample one random graph")
    _add_sampling(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    # spectrum command
    p = subparsers.add_parser("spectrum", help="Full and new spectra")
    _add_sampling(p)
    p.add_argument("--graph", help="Graph file instead of sampling")
    p.add_argument("--operator", choices=("adjacency", "markov"), default="adjacency")

    # word commands
    p = subparsers.add_parser("prim-rank", help="Primitivity rank of a word")
    _add_word(p)
    p = subparsers.add_parser("crit", help="Critical subgroups of a word")
    _add_word(p)
    p = subparsers.add_parser("moebius", help="Exact Moebius table over the quotients of <w>")
    _add_word(p)
    p.add_argument("--n", dest="ns", type=int, nargs="+", help="Permutation degrees (default 2 3)")

    # classify command
    p = subparsers.add_parser("classify", help="Histogram of primitivity ranks")
    p.add_argument("--k", type=int, help="Alphabet size")
    p.add_argument("--t", type=int, help="Word length")
    p.add_argument("--mode", choices=("raw", "reduced"), default="reduced")
    p.add_argument("--base", help="Classify closed paths of this base graph instead")
    p.add_argument("--crit", action="store_true", help="Also sum |Crit(w)|")
    p.add_argument("--format", choices=("json", "csv"), default="json")

    # verify-bound command
    p = subparsers.add_parser("verify-bound", help="Evaluate / optimise the new-eigenvalue bound")
    p.add_argument("--d", type=int, help="Degree of the permutation model")
    p.add_argument("--base-rank", type=int, help="Continue the terms up to this base rank")
    p.add_argument("--rho", type=float, help="Universal cover spectral radius (general base)")
    p.add_argument("--rank", type=int, help="Base graph rank (general base)")
    p.add_argument("--c", type=float, help="Evaluate at this n^(1/t) instead of optimising")

    # rho command
    p = subparsers.add_parser("rho", help="Spectral radius of the universal cover")
    p.add_argument("--base", help="Base graph")
    p.add_argument("--depth", type=int, help="Ball radius (default 100)")
    p.add_argument("--operator", choices=("adjacency", "markov"), default="adjacency")

    # expansion command
    p = subparsers.add_parser("expansion", help="Cheeger / conductance / mixing checks")
    p.add_argument("--graph", help="Graph file (JSON or CSV edge list)")

    # trial-sweep command
    p = subparsers.add_parser("trial-sweep", help="New eigenvalues over many seeded trials")
    _add_sampling(p)
    p.add_argument("--trials", type=int, help="Number of trials")
    p.add_argument("--workers", type=int, default=1, help="Worker threads")

    # report command
    p = subparsers.add_parser("report", help="Summarise a trial-sweep file")
    p.add_argument("results", help="JSON-lines file from trial-sweep")
    p.add_argument("--threshold", type=float, help="Pass when lambda_A_new < threshold")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1

    setup_logging(args.log_level)
    try:
        config = ExperimentConfig.from_namespace(args, GuardConfig.from_env())
    except InvalidInputError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 1
    return run(config)


if __name__ == "__main__":
    sys.exit(main())

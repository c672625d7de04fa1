# src/cli/main.py
"""
Command-line front end: python -m src.cli.main <subcommand> [options]

Every subcommand builds its report with the library and prints it (JSON by
default, or CSV / a short text summary) on stdout or to --out. Log lines go to
stderr and logs/largesets.log.

Exit status: 0 pass / found, 1 verified failure, 2 usage or input error,
3 cap or budget exceeded.
"""
import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Tuple

from src.common import config
from src.common.config import Constants
from src.common.jsonio import dumps_report, load_json, records_to_csv, to_jsonable, write_text
from src.lattice.lattices import (
    DimensionMismatch,
    NotFullRank,
    check_main_divisibility,
    divisibility_parameter,
    dual_determinant,
    lattice_determinant,
    membership,
    product_lattice_determinant,
    system_lattice,
)
from src.probmodel.estimate import NotApplicable, PreconditionViolated, estimate_success_probability
from src.probmodel.moments import SingularCovariance
from src.probmodel.process import CapExceeded, exact_hit_count, monte_carlo_hit_probability
from src.search.backtrack import (
    BLOCK_ORDERS,
    BUDGET_EXCEEDED,
    FOUND,
    STRATEGIES,
    SearchConfig,
    count_large_sets,
    max_disjoint_designs,
    search_design,
    search_large_set,
)
from src.setsys.divisibility import check_design_divisibility, check_largeset_divisibility
from src.setsys.incidence import (
    IncidenceSystem,
    InstanceParams,
    ParameterError,
    SizeCapExceeded,
    build_incidence,
    load_matrix_system,
)
from src.verify.checks import (
    check_constants_in_V,
    check_symmetry_action,
    design_rows,
    verify_design,
    verify_large_set,
    verify_uniform_subset,
)
from src.verify.design_files import DesignFileError, load_design, load_large_set

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3

# handlers return (report, exit status, flat records for --format csv)
Result = Tuple[dict, int, List[dict]]


class UsageError(ValueError):
    pass


# --- argument grammar ---

def _add_output(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=("json", "csv", "text"), default="json")
    p.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")
    p.add_argument("--quiet", action="store_true", help="no log lines on stderr")


def _add_nkt(p: argparse.ArgumentParser, required: bool = True):
    p.add_argument("--n", type=int, required=required)
    p.add_argument("--k", type=int, required=required)
    p.add_argument("--t", type=int, required=required)


def _add_system(p: argparse.ArgumentParser):
    _add_nkt(p, required=False)
    p.add_argument("--matrix", type=Path, default=None,
                   help="JSON array of integer rows (general V) instead of --n/--k/--t")


def _add_constants(p: argparse.ArgumentParser):
    p.add_argument("--const-main", type=float, default=None)
    p.add_argument("--const-klp", type=float, default=None)
    p.add_argument("--const-norm", type=float, default=None)
    p.add_argument("--const-i1", type=float, default=None)


def _add_search(p: argparse.ArgumentParser):
    p.add_argument("--strategy", choices=STRATEGIES, default="exhaustive")
    p.add_argument("--block-order", choices=BLOCK_ORDERS, default="dynamic")
    p.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    p.add_argument("--budget-nodes", type=int, default=config.BUDGET_NODES)
    p.add_argument("--budget-seconds", type=float, default=config.BUDGET_SECONDS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m src.cli.main",
                                     description="Designs, large sets and the random-partition estimate.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("divisibility", help="design (--lambda) or large-set (--l) divisibility report")
    _add_nkt(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--l", type=int)
    group.add_argument("--lambda", dest="lam", type=int)
    _add_output(p)

    p = sub.add_parser("verify-design", help="verify a design file")
    p.add_argument("file", type=Path)
    _add_output(p)

    p = sub.add_parser("verify-largeset", help="verify a large-set file")
    p.add_argument("file", type=Path)
    _add_output(p)

    p = sub.add_parser("uniform-check", help="uniformity of a block subset, constants in V, symmetry")
    p.add_argument("--design", type=Path, default=None, help="design file; its blocks form the subset")
    p.add_argument("--matrix", type=Path, default=None)
    p.add_argument("--rows", type=Path, default=None, help="JSON array of 0-based row indices (with --matrix)")
    p.add_argument("--perm", type=str, default=None, help="comma-separated 1-based permutation of [n]")
    _add_output(p)

    p = sub.add_parser("lattice", help="rank, determinant, c1, dual determinant, membership")
    _add_system(p)
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--vector", type=str, default=None, help='JSON array, entries ints or "p/q"')
    _add_output(p)

    p = sub.add_parser("estimate", help="Gaussian point estimate, bounds and threshold verdicts")
    _add_system(p)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--c2", type=int, default=None)
    p.add_argument("--c3", type=int, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--seed", type=int, default=None, help="accepted for uniform scripting; the estimate is deterministic")
    p.add_argument("--strict", action="store_true", help="fail on unmet bound preconditions")
    _add_constants(p)
    _add_output(p)

    p = sub.add_parser("sample", help="Monte Carlo estimate of Pr[X = E[X]]")
    _add_system(p)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv-chunks", action="store_true", help="with --format csv, one row per seed chunk")
    _add_output(p)

    p = sub.add_parser("exact", help="exact Pr[X = E[X]] by enumeration")
    _add_system(p)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--cap", type=int, default=None)
    _add_output(p)

    p = sub.add_parser("search-design", help="backtracking search for a t-(n,k,lambda) design")
    _add_nkt(p)
    p.add_argument("--lambda", dest="lam", type=int, required=True)
    _add_search(p)
    _add_output(p)

    p = sub.add_parser("search-largeset", help="backtracking search for LS(l; t,k,n)")
    _add_nkt(p)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--count", action="store_true", help="count large sets with ordered parts instead")
    p.add_argument("--no-symmetry", action="store_true", help="do not pin bins by symmetry")
    _add_search(p)
    _add_output(p)

    p = sub.add_parser("max-disjoint", help="maximum number of pairwise disjoint designs")
    _add_nkt(p)
    p.add_argument("--lambda", dest="lam", type=int, required=True)
    p.add_argument("--cap", type=int, default=None)
    _add_search(p)
    _add_output(p)
    return parser


# --- input helpers ---

def _system(args) -> IncidenceSystem:
    has_nkt = any(getattr(args, f) is not None for f in ("n", "k", "t"))
    if args.matrix is not None:
        if has_nkt:
            raise UsageError("give either --matrix or --n/--k/--t, not both")
        return load_matrix_system(args.matrix)
    if None in (args.n, args.k, args.t):
        raise UsageError("--n, --k and --t are required without --matrix")
    return build_incidence(args.n, args.k, args.t)


def _parse_vector(text: str) -> List[Fraction]:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"--vector is not valid JSON: {e}") from e
    if not isinstance(raw, list):
        raise UsageError("--vector must be a JSON array")
    try:
        return [Fraction(str(x)) for x in raw]
    except (ValueError, ZeroDivisionError) as e:
        raise UsageError(f"--vector entry is not a rational: {e}") from e


def _parse_perm(text: str, n: int) -> List[int]:
    try:
        perm = [int(x) - 1 for x in text.split(",")]
    except ValueError as e:
        raise UsageError(f"--perm must be comma-separated integers: {e}") from e
    if sorted(perm) != list(range(n)):
        raise UsageError(f"--perm is not a permutation of 1..{n}")
    return perm


def _search_config(args, symmetry: bool = True) -> SearchConfig:
    return SearchConfig(strategy=args.strategy, budget_nodes=args.budget_nodes,
                        budget_seconds=args.budget_seconds, seed=args.seed,
                        block_order=args.block_order, symmetry_breaking=symmetry)


def _search_exit(status: str) -> int:
    if status == FOUND:
        return EXIT_PASS
    return EXIT_CAP if status == BUDGET_EXCEEDED else EXIT_FAIL


# --- subcommands ---

def cmd_divisibility(args) -> Result:
    if args.l is not None:
        report = check_largeset_divisibility(InstanceParams(args.n, args.k, args.t, args.l))
    else:
        report = check_design_divisibility(args.n, args.k, args.t, args.lam)
    d = report.to_dict()
    return d, EXIT_PASS if report.passed else EXIT_FAIL, d["checks"]


def _counterexample_records(d: dict) -> List[dict]:
    cx = d.get("counterexample")
    return [{"pass": d["pass"], **{k: json.dumps(to_jsonable(v)) if isinstance(v, (list, dict)) else v
                                   for k, v in (cx or {}).items()}}]


def cmd_verify_design(args) -> Result:
    d = verify_design(load_design(args.file)).to_dict()
    return d, EXIT_PASS if d["pass"] else EXIT_FAIL, _counterexample_records(d)


def cmd_verify_largeset(args) -> Result:
    d = verify_large_set(load_large_set(args.file)).to_dict()
    return d, EXIT_PASS if d["pass"] else EXIT_FAIL, _counterexample_records(d)


def cmd_uniform_check(args) -> Result:
    if (args.design is None) == (args.matrix is None):
        raise UsageError("give exactly one of --design or --matrix")
    if args.design is not None:
        design = load_design(args.design)
        sys_ = build_incidence(design.n, design.k, design.t)
        rows = design_rows(design.blocks)
    else:
        if args.rows is None:
            raise UsageError("--matrix needs --rows")
        sys_ = load_matrix_system(args.matrix)
        rows = load_json(args.rows)
        if not isinstance(rows, list) or not all(isinstance(r, int) and not isinstance(r, bool) for r in rows):
            raise UsageError(f"{args.rows}: expected a JSON array of row indices")
    report = verify_uniform_subset(rows, sys_).to_dict()
    report["constants_in_V"] = check_constants_in_V(sys_)
    if args.perm is not None:
        if not sys_.is_design:
            raise UsageError("--perm needs a design system")
        report["symmetry"] = check_symmetry_action(_parse_perm(args.perm, sys_.n), sys_)
    ok = report["pass"] and report["constants_in_V"] and report.get("symmetry", True)
    return report, EXIT_PASS if ok else EXIT_FAIL, _counterexample_records(report)


def cmd_lattice(args) -> Result:
    sys_ = _system(args)
    L = system_lattice(sys_)
    report = {"system": sys_.describe(), "dim": L.dim, "rank": L.rank, "full_rank": L.is_full_rank}
    ok = True
    if L.is_full_rank:
        report["det"] = lattice_determinant(L)
        report["dual_det"] = dual_determinant(L)
        report["c1"] = divisibility_parameter(sys_)
        if args.l is not None:
            report["l"] = args.l
            report["det_product"] = product_lattice_determinant(L, args.l)
            report["main_divisibility"] = check_main_divisibility(sys_, args.l)
            ok = report["main_divisibility"]
    elif args.l is not None:
        raise NotFullRank(f"lattice has rank {L.rank} in dimension {L.dim}")
    if args.vector is not None:
        report["member"] = membership(L, _parse_vector(args.vector))
        ok = ok and report["member"]
    return report, EXIT_PASS if ok else EXIT_FAIL, [report]


def cmd_estimate(args) -> Result:
    sys_ = _system(args)
    constants = Constants().with_overrides(main=args.const_main, klp=args.const_klp,
                                           norm=args.const_norm, i1=args.const_i1)
    try:
        report = estimate_success_probability(sys_, args.l, c3=args.c3, constants=constants,
                                              c2=args.c2, strict=args.strict, eps=args.eps)
    except NotApplicable as e:
        d = {"system": sys_.describe(), "l": args.l, "applicable": False, "reason": str(e)}
        return d, EXIT_FAIL, [d]
    d = report.to_dict()
    flat = {k: v for k, v in d.items() if not isinstance(v, (list, dict))}
    return d, EXIT_PASS, [flat]


def cmd_sample(args) -> Result:
    sys_ = _system(args)
    result = monte_carlo_hit_probability(sys_, args.l, args.trials, seed=args.seed,
                                         workers=args.workers, progress=not config.QUIET)
    d = {"system": sys_.describe(), "l": args.l, **result.to_dict()}
    records = result.chunk_records() if args.csv_chunks else [result.to_dict()]
    return d, EXIT_PASS, records


def cmd_exact(args) -> Result:
    sys_ = _system(args)
    hits, total = exact_hit_count(sys_, args.l, cap=args.cap)
    d = {"system": sys_.describe(), "l": args.l, "hits": hits, "assignments": total,
         "probability": Fraction(hits, total)}
    return d, EXIT_PASS, [d]


def cmd_search_design(args) -> Result:
    outcome = search_design(args.n, args.k, args.t, args.lam, _search_config(args))
    d = outcome.to_dict()
    return d, _search_exit(outcome.status), [{"status": d["status"], "nodes": d["nodes"]}]


def cmd_search_largeset(args) -> Result:
    params = InstanceParams(args.n, args.k, args.t, args.l)
    cfg = _search_config(args, symmetry=not args.no_symmetry)
    if args.count:
        outcome = count_large_sets(params, cfg)
        d = outcome.to_dict()
        status = EXIT_CAP if outcome.status == BUDGET_EXCEEDED else EXIT_PASS
        return d, status, [{"status": d["status"], "count": outcome.count, "nodes": d["nodes"]}]
    outcome = search_large_set(params, cfg)
    d = outcome.to_dict()
    return d, _search_exit(outcome.status), [{"status": d["status"], "nodes": d["nodes"]}]


def cmd_max_disjoint(args) -> Result:
    outcome = max_disjoint_designs(args.n, args.k, args.t, args.lam, _search_config(args), cap=args.cap,
                                   progress=not config.QUIET)
    d = outcome.to_dict()
    status = EXIT_CAP if outcome.status == BUDGET_EXCEEDED else EXIT_PASS
    return d, status, [{"status": d["status"], "count": outcome.count, "nodes": d["nodes"]}]


COMMANDS = {
    "divisibility": cmd_divisibility,
    "verify-design": cmd_verify_design,
    "verify-largeset": cmd_verify_largeset,
    "uniform-check": cmd_uniform_check,
    "lattice": cmd_lattice,
    "estimate": cmd_estimate,
    "sample": cmd_sample,
    "exact": cmd_exact,
    "search-design": cmd_search_design,
    "search-largeset": cmd_search_largeset,
    "max-disjoint": cmd_max_disjoint,
}


# --- output ---

def render(report: dict, records: List[dict], fmt: str) -> str:
    if fmt == "csv":
        return records_to_csv(records)
    if fmt == "text":
        lines = []
        for key, value in to_jsonable(report).items():
            if not isinstance(value, (list, dict)):
                lines.append(f"{key}: {value}")
        cx = report.get("counterexample")
        if cx:
            lines.append(f"counterexample: {json.dumps(to_jsonable(cx))}")
        return "\n".join(lines) + "\n"
    return dumps_report(report)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)   # exits 2 on grammar errors
    if args.quiet:
        config.QUIET = True
    config.log(f"=== {args.command} run at {config.timestamp_for_filename()} ===")

    try:
        report, status, records = COMMANDS[args.command](args)
    except (UsageError, ParameterError, DesignFileError, DimensionMismatch, NotFullRank,
            SingularCovariance, PreconditionViolated, FileNotFoundError, ValueError) as e:
        config.log(f"error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CapExceeded, SizeCapExceeded) as e:
        config.log(f"cap exceeded: {e}")
        print(f"cap exceeded: {e}", file=sys.stderr)
        return EXIT_CAP

    write_text(render(report, records, args.format), args.out)
    config.log(f"{args.command} finished with exit status {status}")
    return status


if __name__ == "__main__":
    sys.exit(main())

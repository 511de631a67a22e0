from typing import List, Optional
import argparse
import logging
import sys

from .instance import load_instance, dump_instance, normalize, InstanceError
from .norm_type import NormType
from .bench import (generate_instance, BenchConfig, BenchConfigError,
                    BenchTable, SolveMode, run)
from .minimal_subsets import brute_force_solve, OracleError
from .presolve import run_pipeline, PresolveConfig, PresolveContradictionError
from .solver import solve, SolverConfig
from .solve_result import SolveStatus
from .serialization import to_json_string

logger = logging.getLogger("chance_presolve")

# Exit codes
EXIT_SUCCESS: int = 0
EXIT_ERROR: int = 1
EXIT_INFEASIBLE: int = 2
EXIT_TIMEOUT: int = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccp",
        description="Presolve and exact solution of chance-constrained "
                    "ball projection problems.")
    parser.add_argument("--verbose", action="store_true",
                        help="Log the progress messages.")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="Generate a random instance.")
    gen.add_argument("--p", type=int, required=True, choices=(2, 3))
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--tau", type=float, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--random-mass", action="store_true",
                     help="Dirichlet probabilities instead of equal ones.")
    gen.add_argument("--o-tilde", choices=("L1", "Linf"), default="L1")
    gen.add_argument("--out", required=True, help="Instance JSON file.")

    solve_cmd = commands.add_parser("solve", help="Solve an instance.")
    solve_cmd.add_argument("--in", dest="in_path", required=True,
                           help="Instance JSON file.")
    solve_cmd.add_argument("--mode", default="presolve",
                           choices=[mode.value for mode in SolveMode])
    solve_cmd.add_argument("--time-limit", type=float, default=None)
    solve_cmd.add_argument("--out", default=None,
                           help="Result JSON file (stdout if missing).")
    solve_cmd.add_argument("--report", default=None,
                           help="Presolve report JSON file.")

    bench = commands.add_parser("bench", help="Run the benchmark.")
    bench.add_argument("--p", type=int, required=True, choices=(2, 3))
    bench.add_argument("--n", type=int, required=True)
    bench.add_argument("--tau", type=float, required=True)
    bench.add_argument("--trials", type=int, default=5)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--modes", default="presolve,direct",
                       help="Comma separated solve modes.")
    bench.add_argument("--time-limit", type=float, default=None)
    bench.add_argument("--random-mass", action="store_true")
    bench.add_argument("--o-tilde", choices=("L1", "Linf"), default="L1")
    bench.add_argument("--out", default=None,
                       help="Report file: .csv, .md, .xlsx or .json.")
    return parser


def _gen(args: argparse.Namespace) -> int:
    instance = generate_instance(args.p, args.n, args.tau, args.seed,
                                 random_mass=args.random_mass,
                                 o_tilde=NormType(args.o_tilde))
    dump_instance(instance, args.out)
    logger.info(f"Instance with {args.n} scenarios written to {args.out}.")
    return EXIT_SUCCESS


def _solve(args: argparse.Namespace) -> int:
    instance, log = normalize(load_instance(args.in_path),
                              warning_logger=logger.warning)
    mode = SolveMode(args.mode)
    time_limit = args.time_limit if args.time_limit is not None \
        else float("inf")
    if mode is SolveMode.brute:
        result = brute_force_solve(instance, warning_logger=logger.warning)
    elif mode is SolveMode.direct:
        result = solve(instance, None, SolverConfig(
            time_limit=time_limit, warning_logger=logger.warning))
    else:
        report = run_pipeline(instance, PresolveConfig(
            separability_time_limit=min(
                time_limit, PresolveConfig().time_limit(instance.dim)),
            warning_logger=logger.warning))
        logger.info(f"Presolve fixed {len(report.partition.safe)} safe and "
                    f"{len(report.partition.pruned)} pruned scenarios.")
        if args.report:
            with open(args.report, "w") as fh:
                fh.write(report.to_json(indent=2))
        result = solve(instance, report, SolverConfig(
            time_limit=max(time_limit - report.total_time, 1e-3),
            warning_logger=logger.warning))
    export = result.to_dictionary()
    export["normalization"] = log
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(to_json_string(export, indent=2))
    else:
        print(to_json_string(export, indent=2))
    if result.status is SolveStatus.infeasible:
        return EXIT_INFEASIBLE
    if result.status is SolveStatus.time_limit:
        return EXIT_TIMEOUT
    return EXIT_SUCCESS


def _bench(args: argparse.Namespace) -> int:
    try:
        modes = [SolveMode(name.strip()) for name in args.modes.split(",")
                 if name.strip()]
    except ValueError as error:
        raise BenchConfigError(f"Unknown solve mode: {error}")
    records = []
    for mode in modes:
        config = BenchConfig(p=args.p, n=args.n, tau=args.tau, mode=mode,
                             seed=args.seed, time_limit=args.time_limit,
                             trials=args.trials, out_path=args.out,
                             random_mass=args.random_mass,
                             o_tilde=NormType(args.o_tilde))
        logger.info(f"Running {args.trials} trials in the {mode.value} "
                    f"mode.")
        records.append(run(config, warning_logger=logger.warning))
    table = BenchTable(records, warning_logger=logger.warning)
    print(table.to_text())
    if args.out:
        if args.out.endswith(".xlsx"):
            table.to_excel(args.out)
        elif args.out.endswith(".json"):
            with open(args.out, "w") as fh:
                fh.write(to_json_string(
                    [record.to_dictionary() for record in records],
                    indent=2))
        else:
            export = table.to_markdown() if args.out.endswith(".md") \
                else table.to_csv()
            with open(args.out, "w") as fh:
                fh.write(export)
    return EXIT_SUCCESS


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point of the ccp command.

    Returns:
        int: 0 on success, 1 on invalid input, 2 if infeasible and 3 if the
            time limit stopped the search.
    """
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose
                        else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"gen": _gen, "solve": _solve, "bench": _bench}
    try:
        return handlers[args.command](args)
    except (InstanceError, BenchConfigError,
            PresolveContradictionError, OracleError, OSError) as error:
        logger.error(str(error))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

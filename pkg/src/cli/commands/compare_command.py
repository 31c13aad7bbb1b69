import argparse
import logging

from src.cli.cli_manager import CliManager, split_list
from src.cli.problems import load_problems
from src.solver.solver import rows_to_csv, run_compare
from src.utils import config
from src.utils.errors import MalformedInput
from src.utils.utils import write_output

logger = logging.getLogger(__name__)


def run_compare_command(args: argparse.Namespace) -> int:
    try:
        eps_grid = split_list(args.eps_grid, float)
    except ValueError as e:
        raise MalformedInput("eps-grid", str(e)) from e
    kernels = split_list(args.kernels)
    unknown = [k for k in kernels if k not in config.KERNEL_ALIASES]
    if unknown:
        raise MalformedInput("kernels", f"unknown kernel(s) {', '.join(unknown)}")
    shifts = split_list(args.shifts)
    unknown = [s for s in shifts if s not in config.SHIFT_ALIASES]
    if unknown:
        raise MalformedInput("shifts", f"unknown shift mode(s) {', '.join(unknown)}")

    rows = []
    for entry in load_problems(split_list(args.problems), args.seed):
        logger.info(f"Comparing kernels on {entry.name}")
        rows.extend(run_compare(
            entry.gen,
            entry.u0,
            eps_grid,
            kernels,
            shifts=shifts,
            steps=args.steps or entry.steps,
            max_parallel=args.threads,
            beta=args.beta,
            c=args.c,
        ))
    write_output(rows_to_csv(rows), args.out)

    failed = [row for row in rows if row["status"] != "completed"]
    for row in failed:
        logger.warning(f"{row['kernel']} eps={row['eps']:.1e} shift={row['shift']}: {row['status']} {row['error']}")
    return 1 if failed else 0


def create_compare_command(cli_manager: CliManager, subparsers) -> None:
    """
    Creates the compare subcommand: one CSV row per (problem, kernel, eps, shift).
    """
    parser = subparsers.add_parser("compare", help="Sweep kernels over an epsilon grid and emit CSV")
    parser.add_argument("--problems", default="catalog",
                        help="Comma-separated catalog names or problem files; 'catalog' means all")
    parser.add_argument("--eps-grid", default="1e-2,1e-4,1e-6", help="Comma-separated epsilons")
    parser.add_argument("--kernels", default="cbmd,original", help="Comma-separated kernels")
    parser.add_argument("--shifts", default="none", help="Comma-separated shift modes (none, exact-min)")
    parser.add_argument("--steps", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None, help="Row parallelism (default CBMD_LAB_THREADS)")
    parser.add_argument("--beta", type=float, default=None)
    parser.add_argument("--c", type=float, default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="CSV file (default stdout)")
    cli_manager.register_command("compare", parser, run_compare_command)

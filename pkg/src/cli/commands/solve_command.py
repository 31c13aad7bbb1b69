import argparse
import logging

from src.cli.cli_manager import CliManager
from src.cli.problems import load_problem, shift_plan_for
from src.solver.solver import solve
from src.utils import config
from src.utils.codecs import encode_report
from src.utils.utils import dump_json, write_output

logger = logging.getLogger(__name__)


def run_solve(args: argparse.Namespace) -> int:
    entry = load_problem(args.problem, args.seed)
    plan = shift_plan_for(entry, args.shift)
    report = solve(
        entry.gen,
        entry.u0,
        args.kernel,
        args.eps,
        shift=plan,
        steps=args.steps or entry.steps,
        strict=False,
        beta=args.beta,
        c=args.c,
    )
    payload = {"problem": entry.name, **encode_report(report, emit_lcu=args.emit_lcu)}
    write_output(dump_json(payload), args.out)
    return 0 if report.tolerance_met else 1


def create_solve_command(cli_manager: CliManager, subparsers) -> None:
    """
    Creates the solve subcommand.
    """
    parser = subparsers.add_parser("solve", help="Solve du/dt = -A(t)u through one kernel's LCU series")
    parser.add_argument("--problem", required=True, help="Catalog name or problem JSON file")
    parser.add_argument("--kernel", default="cbmd", choices=sorted(config.KERNEL_ALIASES), help="Series kernel")
    parser.add_argument("--eps", type=float, default=1e-4, help="Target relative error")
    parser.add_argument("--shift", default=None,
                        help="none, exact-min or a JSON shift file (default: the problem's own setting)")
    parser.add_argument("--steps", type=int, default=None, help="Time steps for sampled generators")
    parser.add_argument("--beta", type=float, default=None, help="Improved-kernel exponent")
    parser.add_argument("--c", type=float, default=None, help="Optimal-kernel constant")
    parser.add_argument("--emit-lcu", action="store_true", help="Include the emulated LCU outcome")
    parser.add_argument("--seed", type=int, default=0, help="Seed for randomized catalog entries")
    parser.add_argument("--out", default=None, help="Output file (default stdout)")
    cli_manager.register_command("solve", parser, run_solve)

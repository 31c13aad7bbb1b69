import argparse
import logging

from src.cli.cli_manager import CliManager
from src.series import cbmd
from src.series.lchs import resolve_kind, select_kernel_parameters, series_for, tail_weight_bound
from src.utils import config
from src.utils.codecs import encode_series
from src.utils.utils import dump_json, write_output

logger = logging.getLogger(__name__)


def run_decompose(args: argparse.Namespace) -> int:
    kind = resolve_kind(args.kernel)
    kernel = select_kernel_parameters(kind, args.eta_max, args.eps, beta=args.beta, c=args.c)
    include_aux = args.include_aux and kind != "lchs_improved"
    if args.include_aux and not include_aux:
        logger.warning("the improved kernel has no auxiliary pole terms; --include-aux ignored")
    series = series_for(kernel, include_aux=include_aux)

    payload = {
        "kernel": kernel.model_dump(),
        "eta_max": args.eta_max,
        "epsilon": args.eps,
        "tail_weight_bound": float(tail_weight_bound(kernel)),
        "series": encode_series(series),
    }
    exit_code = 0
    if kind == "cbmd":
        bounds = cbmd.error_bounds(kernel, args.eta_max)
        check = cbmd.weight_bound_check(series.main(), kernel)
        payload["error_bounds"] = {
            "trunc": bounds.trunc,
            "aux_2i": bounds.aux_2i,
            "aux_line": bounds.aux_line,
            "total": bounds.total,
        }
        payload["weight_bound"] = {"weight": check.weight, "proof_bound": check.proof_bound, "ok": check.ok}
        exit_code = 0 if check.ok and bounds.total <= args.eps else 1
    write_output(dump_json(payload), args.out)
    return exit_code


def create_decompose_command(cli_manager: CliManager, subparsers) -> None:
    parser = subparsers.add_parser("decompose", help="Emit a kernel's coefficient/node series as JSON")
    parser.add_argument("--kernel", default="cbmd", choices=sorted(config.KERNEL_ALIASES))
    parser.add_argument("--eps", type=float, default=1e-4, help="Series precision")
    parser.add_argument("--eta-max", type=float, default=1.0, help="Largest integrated eigenvalue of L")
    parser.add_argument("--include-aux", action="store_true", help="Append the auxiliary pole terms")
    parser.add_argument("--beta", type=float, default=None)
    parser.add_argument("--c", type=float, default=None)
    parser.add_argument("--out", default=None)
    cli_manager.register_command("decompose", parser, run_decompose)

import argparse
import json
import logging
import sys
from typing import List, Optional

from src.cli.cli_manager import CliManager
from src.cli.commands.catalog_command import create_catalog_command
from src.cli.commands.compare_command import create_compare_command
from src.cli.commands.decompose_command import create_decompose_command
from src.cli.commands.solve_command import create_solve_command
from src.cli.commands.verify_command import create_verify_command
from src.utils.errors import CbmdLabError, MalformedInput, ToleranceNotMet

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_MALFORMED = 2


def create_parser(cli_manager: CliManager) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbmd_lab",
        description="Numerical laboratory for contour-based and LCHS decompositions of non-unitary dynamics",
    )
    parser.add_argument("--config", default=None, help="Load saved settings (JSON) as flag defaults")
    parser.add_argument("--save-config", action="store_true", help="Save this run's settings under ./tmp/cli_settings")

    subparsers = parser.add_subparsers(dest="command", required=True)
    create_solve_command(cli_manager, subparsers)
    create_decompose_command(cli_manager, subparsers)
    create_compare_command(cli_manager, subparsers)
    create_verify_command(cli_manager, subparsers)
    create_catalog_command(cli_manager, subparsers)
    return parser


def run(argv: Optional[List[str]] = None, cli_manager: Optional[CliManager] = None) -> int:
    """
    Parse argv, run the subcommand and map the outcome to an exit code: 0 when every check of
    the invoked command passes, 1 on a failed check or numerical error, 2 on malformed input.
    """
    cli_manager = cli_manager or CliManager()
    parser = create_parser(cli_manager)
    argv = sys.argv[1:] if argv is None else list(argv)

    try:
        pre, _ = parser.parse_known_args(argv)
        if pre.config:
            cli_manager.load_config(pre.config)
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_MALFORMED
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: config: {e}", file=sys.stderr)
        return EXIT_MALFORMED

    if args.save_config:
        cli_manager.save_config(args)

    try:
        return args.handler(args)
    except MalformedInput as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MALFORMED
    except json.JSONDecodeError as e:
        print(f"error: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}", file=sys.stderr)
        return EXIT_MALFORMED
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MALFORMED
    except ToleranceNotMet as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILED
    except CbmdLabError as e:
        logger.debug("command failed", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILED

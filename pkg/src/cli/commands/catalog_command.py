import argparse

from src.cli.cli_manager import CliManager
from src.solver.catalog import build_catalog
from src.utils.codecs import encode_problem
from src.utils.errors import MalformedInput
from src.utils.utils import dump_json, write_output


def run_catalog(args: argparse.Namespace) -> int:
    catalog = build_catalog(args.seed)
    if args.action == "list":
        lines = [f"{e.name}\t{','.join(e.tags)}\t{e.description}" for e in catalog.values()]
        write_output("\n".join(lines) + "\n", args.out)
        return 0

    if args.name not in catalog:
        raise MalformedInput("name", f"unknown catalog problem {args.name!r}")
    entry = catalog[args.name]
    payload = encode_problem(entry.name, entry.gen, entry.u0)
    if entry.shift != "none":
        payload["shift"] = {"mode": entry.shift}
    write_output(dump_json(payload), args.out)
    return 0


def create_catalog_command(cli_manager: CliManager, subparsers) -> None:
    parser = subparsers.add_parser("catalog", help="List built-in problems or print one as problem JSON")
    parser.add_argument("action", choices=["list", "show"])
    parser.add_argument("name", nargs="?", default=None, help="Problem to show")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None)
    cli_manager.register_command("catalog", parser, run_catalog)

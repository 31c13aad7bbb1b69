import argparse
import json
import logging
import os
from dataclasses import dataclass
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional

logger = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace], int]

# Options that describe the invocation itself rather than a reusable setting
NON_PERSISTENT = {"command", "config", "save_config", "handler", "out"}


@dataclass
class Command:
    name: str
    parser: argparse.ArgumentParser
    handler: Handler


class CliManager:
    def __init__(self, settings_save_dir: str = "./tmp/cli_settings"):
        self.id_to_command: Dict[str, Command] = {}
        self.settings_save_dir = settings_save_dir

    def register_command(self, name: str, parser: argparse.ArgumentParser, handler: Handler) -> None:
        """
        Register a subcommand parser and the function that runs it
        """
        parser.set_defaults(handler=handler)
        self.id_to_command[name] = Command(name=name, parser=parser, handler=handler)

    def get_commands(self) -> List[str]:
        return list(self.id_to_command)

    def get_command(self, name: str) -> Command:
        return self.id_to_command[name]

    def save_config(self, args: argparse.Namespace) -> str:
        """
        Save the resolved options of a run as '<command>.<option>' entries
        """
        cur_settings = {
            f"{args.command}.{key}": value
            for key, value in sorted(vars(args).items())
            if key not in NON_PERSISTENT and _is_json_value(value)
        }
        os.makedirs(self.settings_save_dir, exist_ok=True)
        config_name = datetime.now().strftime("%Y%m%d-%H%M%S")
        path = os.path.join(self.settings_save_dir, f"{args.command}-{config_name}.json")
        with open(path, "w", encoding="utf-8") as fw:
            json.dump(cur_settings, fw, indent=4)
        logger.info(f"Saved settings to {path}")
        return path

    def load_config(self, config_path: str) -> Dict[str, Dict[str, Any]]:
        """
        Load saved settings and install them as parser defaults; explicit flags still win
        """
        with open(config_path, "r", encoding="utf-8") as fr:
            saved = json.load(fr)
        if not isinstance(saved, dict):
            raise json.JSONDecodeError("settings file must hold a JSON object", "", 0)

        applied: Dict[str, Dict[str, Any]] = {}
        for setting_id, value in saved.items():
            command, _, option = setting_id.partition(".")
            if command not in self.get_commands() or not option or option in NON_PERSISTENT:
                logger.warning(f"Ignoring unknown setting {setting_id!r} in {config_path}")
                continue
            applied.setdefault(command, {})[option] = value

        for command, defaults in applied.items():
            self.get_command(command).parser.set_defaults(**defaults)
        logger.info(f"Successfully loaded config: {config_path}")
        return applied


def _is_json_value(value: Any) -> bool:
    if value is None or isinstance(value, (bool, int, float, str)):
        return True
    if isinstance(value, (list, tuple)):
        return all(_is_json_value(v) for v in value)
    return False


def split_list(text: Optional[str], cast: Callable[[str], Any] = str) -> List[Any]:
    """Comma-separated flag values; blanks are skipped."""
    if not text:
        return []
    return [cast(item.strip()) for item in text.split(",") if item.strip()]

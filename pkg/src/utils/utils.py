import json
import logging
import math
import os
import zlib
from pathlib import Path
from typing import Any, Optional

import numpy as np

from src.utils import config

logger = logging.getLogger(__name__)


def format_float(value: float) -> str:
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, config.FLOAT_FORMAT)


def seeded_rng(seed: int, name: str = "") -> np.random.Generator:
    """
    Counter-based generator keyed by (seed, name), so each named consumer gets its own
    stream no matter which order or thread draws first.
    """
    key = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, zlib.crc32(name.encode("utf-8"))])
    return np.random.Generator(np.random.Philox(key))


def write_output(text: str, path: Optional[str] = None) -> None:
    """Write text to path (parent directories created) or stdout when path is None or '-'."""
    if path is None or path == "-":
        print(text, end="" if text.endswith("\n") else "\n")
        return
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    logger.info(f"Wrote {path}")


def read_json(path: str) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def dump_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"

import logging
import os
from typing import List, Optional

from src.solver.catalog import ProblemCatalogEntry, build_catalog
from src.solver.solver import ShiftPlan
from src.utils.codecs import decode_problem, decode_shift
from src.utils.errors import InvalidShift, MalformedInput
from src.utils.utils import read_json

logger = logging.getLogger(__name__)


def load_problem(ref: str, seed: int = 0) -> ProblemCatalogEntry:
    """A catalog name or the path of a problem JSON file."""
    catalog = build_catalog(seed)
    if ref in catalog:
        return catalog[ref]
    if not os.path.isfile(ref):
        raise MalformedInput("problem", f"{ref!r} is neither a catalog name nor a readable file")

    name, gen, u0, shift = decode_problem(read_json(ref))
    logger.info(f"Loaded problem {name!r} (dim {gen.dim}) from {ref}")
    return ProblemCatalogEntry(
        name=name,
        gen=gen,
        u0=u0,
        tags=(),
        shift=shift.mode if shift is not None else "none",
        description=ref,
        alpha_shift_t=tuple(shift.alpha_shift_t) if shift is not None and shift.alpha_shift_t else None,
    )


def load_problems(refs: List[str], seed: int = 0) -> List[ProblemCatalogEntry]:
    """Expands the name 'catalog' to every built-in problem."""
    entries = []
    for ref in refs:
        if ref == "catalog":
            entries.extend(build_catalog(seed).values())
        else:
            entries.append(load_problem(ref, seed))
    return entries


def shift_plan_for(entry: ProblemCatalogEntry, shift: Optional[str]) -> ShiftPlan:
    """
    Resolve --shift: none, exact-min, a JSON file holding a shift object, or (when the flag is
    absent) the problem's own default.
    """
    if shift is None:
        return ShiftPlan.from_mode(entry.shift, entry.gen, entry.alpha_shift_t)
    if os.path.isfile(shift):
        model = decode_shift(read_json(shift))
        return ShiftPlan.from_mode(model.mode, entry.gen, model.alpha_shift_t)
    try:
        return ShiftPlan.from_mode(shift, entry.gen)
    except InvalidShift as e:
        raise MalformedInput("shift", str(e)) from e

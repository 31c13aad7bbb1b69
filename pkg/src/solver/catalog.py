import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from src.core.matrixcore import GeneratorSpec
from src.utils import config
from src.utils.utils import seeded_rng

logger = logging.getLogger(__name__)

TAGS = ("scalar", "non-normal", "time-dependent", "dissipative")

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True, eq=False)
class ProblemCatalogEntry:
    name: str
    gen: GeneratorSpec
    u0: np.ndarray
    tags: Tuple[str, ...]
    shift: str = "none"
    steps: int = config.DEFAULT_STEPS
    description: str = ""
    alpha_shift_t: Optional[Tuple[float, ...]] = None


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return v / np.linalg.norm(v)


def _random_dissipative(seed: int) -> GeneratorSpec:
    rng = seeded_rng(seed, "random-dissipative")
    dim = 4
    B = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    L = B @ B.conj().T
    L /= np.linalg.norm(L, 2)
    C = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    H = 0.5 * (C + C.conj().T)
    H /= np.linalg.norm(H, 2)
    return GeneratorSpec.constant(L + 1j * H, 1.0)


def build_catalog(seed: int = 0) -> Dict[str, ProblemCatalogEntry]:
    """The built-in problems; randomized entries draw from streams keyed by (seed, name)."""
    rng = seeded_rng(seed, "random-dissipative:u0")
    t_grid = np.array([0.0, 0.5, 1.0])
    entries = [
        ProblemCatalogEntry(
            name="scalar-1",
            gen=GeneratorSpec.constant([[1.0]], 1.0),
            u0=np.array([1.0 + 0j]),
            tags=("scalar", "dissipative"),
            description="du/dt = -u, u(1) = e^-1",
        ),
        ProblemCatalogEntry(
            name="scalar-complex",
            gen=GeneratorSpec.constant([[2.0 + 1.0j]], 1.0),
            u0=np.array([1.0 + 0j]),
            tags=("scalar", "dissipative"),
            description="lambda = 2 + i",
        ),
        ProblemCatalogEntry(
            name="scalar-half",
            gen=GeneratorSpec.constant([[0.5]], 1.0),
            u0=np.array([1.0 + 0j]),
            tags=("scalar", "dissipative"),
            description="lambda = 0.5",
        ),
        ProblemCatalogEntry(
            name="diag-5-6",
            gen=GeneratorSpec.constant(np.diag([5.0, 6.0]), 1.0),
            u0=_unit([1.0, 1.0]),
            tags=("dissipative",),
            shift="exact_min",
            description="strong uniform decay; shifting removes the common rate 5",
        ),
        ProblemCatalogEntry(
            name="jordan",
            gen=GeneratorSpec.constant([[1.0, 5.0], [0.0, 1.0]], 1.0),
            u0=np.array([0.0, 1.0], dtype=complex),
            tags=("non-normal",),
            shift="exact_min",
            description="defective generator; its Hermitian part is indefinite until shifted",
        ),
        ProblemCatalogEntry(
            name="damped-oscillator",
            gen=GeneratorSpec.constant([[0.0, -1.0], [1.0, 0.4]], 2.0),
            u0=np.array([1.0, 0.0], dtype=complex),
            tags=("non-normal", "dissipative"),
            description="velocity-damped oscillator",
        ),
        ProblemCatalogEntry(
            name="random-dissipative",
            gen=_random_dissipative(seed),
            u0=_unit(rng.standard_normal(4) + 1j * rng.standard_normal(4)),
            tags=("non-normal", "dissipative"),
            description="seeded random 4x4 with ||L|| = ||H|| = 1",
        ),
        ProblemCatalogEntry(
            name="time-linear-scalar",
            gen=GeneratorSpec.time_sampled([0.0, 1.0], np.array([[[1.0]], [[2.0]]])),
            u0=np.array([1.0 + 0j]),
            tags=("scalar", "time-dependent", "dissipative"),
            description="l(t) = 1 + t, u(1) = e^-1.5",
        ),
        ProblemCatalogEntry(
            name="time-commuting-diag",
            gen=GeneratorSpec.time_sampled(
                t_grid, np.stack([np.diag([1.0 + t + 0.3j * t, 2.0 - t]) for t in t_grid])
            ),
            u0=_unit([1.0, 1.0]),
            tags=("time-dependent", "dissipative"),
            description="diagonal generator, exact under piecewise-linear stepping",
        ),
        ProblemCatalogEntry(
            name="time-noncommuting",
            gen=GeneratorSpec.time_sampled(
                t_grid,
                np.stack([
                    np.array([[1.0, 0.2], [0.2, 0.5]]) + 1j * (0.5 * SIGMA_X + 0.3 * t * SIGMA_Z)
                    for t in t_grid
                ]),
            ),
            u0=np.array([1.0, 0.0], dtype=complex),
            tags=("time-dependent", "dissipative", "non-normal"),
            steps=256,
            description="coherent part rotates against a fixed dissipator",
        ),
    ]
    catalog = {entry.name: entry for entry in entries}
    assert len(catalog) == len(entries), "catalog names must be unique"
    return catalog


def get_entry(name: str, seed: int = 0) -> ProblemCatalogEntry:
    catalog = build_catalog(seed)
    if name not in catalog:
        raise KeyError(f"unknown catalog problem {name!r}; known: {', '.join(catalog)}")
    return catalog[name]

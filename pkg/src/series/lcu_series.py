import math
from dataclasses import dataclass
from typing import Iterator, Literal, NamedTuple, Sequence

import numpy as np

from src.utils.errors import InvalidSeries

TermKind = Literal["main", "aux_line", "aux_2i", "aux_i"]
TERM_KINDS = ("main", "aux_line", "aux_2i", "aux_i")


class SeriesTerm(NamedTuple):
    coefficient: complex
    node: complex
    kind: str

    @property
    def k_param(self) -> float:
        return self.node.real

    @property
    def multiplier(self) -> complex:
        """The z in U(z) = T exp(int (-iH - zL)) for this term."""
        return 1j * self.node


@dataclass(frozen=True, eq=False)
class LcuSeries:
    """
    Coefficients c_j paired with pole nodes p_j. Term j stands for c_j U(i p_j); main terms sit on
    the real lattice so U(i p_j) = T exp(-i int (H + p_j L)) is unitary. Auxiliary terms carry
    complex nodes and are only used to close identities.
    """

    coefficients: np.ndarray
    nodes: np.ndarray
    kinds: np.ndarray
    kernel: str = ""

    def __post_init__(self):
        coefficients = np.asarray(self.coefficients, dtype=complex).reshape(-1)
        nodes = np.asarray(self.nodes, dtype=complex).reshape(-1)
        kinds = np.asarray(self.kinds, dtype="<U8").reshape(-1)
        if not (coefficients.size == nodes.size == kinds.size):
            raise InvalidSeries("coefficients, nodes and kinds must have equal length")
        if not (np.all(np.isfinite(coefficients)) and np.all(np.isfinite(nodes))):
            raise InvalidSeries("series entries must be finite")
        unknown = set(kinds.tolist()) - set(TERM_KINDS)
        if unknown:
            raise InvalidSeries(f"unknown term kinds {sorted(unknown)}")
        if np.any(nodes[kinds == "main"].imag != 0.0):
            raise InvalidSeries("main terms must have real kernel parameters")
        for arr in (coefficients, nodes, kinds):
            arr.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "kinds", kinds)

    @classmethod
    def from_main(cls, coefficients, k_params, kernel: str = "") -> "LcuSeries":
        coefficients = np.asarray(coefficients, dtype=complex)
        return cls(coefficients, np.asarray(k_params, dtype=float), np.full(coefficients.size, "main"), kernel)

    @classmethod
    def from_terms(cls, terms: Sequence[SeriesTerm], kernel: str = "") -> "LcuSeries":
        if not terms:
            return cls(np.zeros(0, complex), np.zeros(0, complex), np.zeros(0, "<U8"), kernel)
        c, p, kinds = zip(*terms)
        return cls(np.array(c, complex), np.array(p, complex), np.array(kinds, "<U8"), kernel)

    def __len__(self) -> int:
        return int(self.coefficients.size)

    def __iter__(self) -> Iterator[SeriesTerm]:
        return iter(self.terms)

    @property
    def terms(self) -> list[SeriesTerm]:
        return [SeriesTerm(complex(c), complex(p), str(k)) for c, p, k in zip(self.coefficients, self.nodes, self.kinds)]

    @property
    def is_main_only(self) -> bool:
        return bool(np.all(self.kinds == "main"))

    def select(self, *kinds: str) -> "LcuSeries":
        mask = np.isin(self.kinds, kinds)
        return LcuSeries(self.coefficients[mask], self.nodes[mask], self.kinds[mask], self.kernel)

    def main(self) -> "LcuSeries":
        return self.select("main")

    def auxiliary(self) -> "LcuSeries":
        return self.select("aux_line", "aux_2i", "aux_i")

    def concat(self, other: "LcuSeries") -> "LcuSeries":
        return LcuSeries(
            np.concatenate([self.coefficients, other.coefficients]),
            np.concatenate([self.nodes, other.nodes]),
            np.concatenate([self.kinds, other.kinds]),
            self.kernel or other.kernel,
        )

    @property
    def k_params(self) -> np.ndarray:
        return self.nodes[self.kinds == "main"].real

    @property
    def multipliers(self) -> np.ndarray:
        return 1j * self.nodes

    @property
    def total_weight(self) -> float:
        """Sum of |c_j| over main terms, exactly rounded so the result is order independent."""
        return math.fsum(np.abs(self.coefficients[self.kinds == "main"]).tolist())

    @property
    def max_abs_k(self) -> float:
        ks = self.k_params
        return float(np.max(np.abs(ks))) if ks.size else 0.0

    @property
    def term_count(self) -> int:
        return int(np.count_nonzero(self.kinds == "main"))

    def coefficient_sum(self) -> complex:
        re = math.fsum(self.coefficients.real.tolist())
        im = math.fsum(self.coefficients.imag.tolist())
        return complex(re, im)

    def scalar_sum(self, lam: complex, T: float = 1.0) -> complex:
        """Sum_j c_j exp(-(i h + i p_j l) T) for the scalar generator lam = l + i h."""
        lam = complex(lam)
        l, h = lam.real, lam.imag
        return complex(np.sum(self.coefficients * np.exp(-(1j * h + 1j * self.nodes * l) * T)))

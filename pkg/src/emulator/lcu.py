"""
State-vector emulation of prepare / select / unprepare with post-selection on the ancilla
register returning to |0>.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from src.core.matrixcore import (
    GeneratorSpec,
    MidpointPropagator,
    as_vector,
    hermitian_evolutions,
    hermitian_split,
    required_steps,
)
from src.series.lcu_series import LcuSeries
from src.utils import config
from src.utils.errors import InvalidSeries, InvalidState, InvalidTolerance, NonUnitarySelectTerm, NumericalFailure

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LcuOutcome:
    post_state: np.ndarray
    success_prob: float
    amplification_rounds: int
    normalized_state: np.ndarray
    total_weight: float


@dataclass(frozen=True, eq=False)
class PrepPair:
    left_column: np.ndarray
    right_column: np.ndarray


def _check_series(series: LcuSeries) -> float:
    if not series.is_main_only:
        raise NonUnitarySelectTerm("auxiliary terms have non-Hermitian generators and cannot be selected")
    weight = series.total_weight
    if weight <= 0:
        raise InvalidSeries("series has zero total weight")
    return weight


def build_prep_pair(series: LcuSeries) -> PrepPair:
    weight = _check_series(series)
    roots = np.sqrt(series.coefficients) / math.sqrt(weight)
    return PrepPair(left_column=roots.conj(), right_column=roots)


def select_states(series: LcuSeries, gen: GeneratorSpec, u0: np.ndarray, steps: int) -> np.ndarray:
    """Row j holds U_j u0 with U_j = T exp(-i int (H + k_j L))."""
    ks = series.k_params
    if gen.is_constant:
        split = hermitian_split(gen.samples[0])
        return hermitian_evolutions(split.H, split.L, ks, gen.T, u0)
    propagator = MidpointPropagator(gen, required_steps(gen, series.max_abs_k, steps))
    return propagator.evolve_hermitian(ks, u0)


def amplification_rounds(success_prob: float) -> int:
    if success_prob <= 0:
        raise NumericalFailure("post-selected state vanished; success probability is zero")
    return math.ceil(math.pi / (4 * math.asin(math.sqrt(min(success_prob, 1.0)))))


def emulate(series: LcuSeries, gen: GeneratorSpec, u0, steps: int = config.DEFAULT_STEPS) -> LcuOutcome:
    weight = _check_series(series)
    u0 = as_vector(u0, gen.dim)
    u0_norm = float(np.linalg.norm(u0))
    if u0_norm == 0:
        raise InvalidState("u0 must be nonzero")

    states = select_states(series, gen, u0, steps)
    post_state = (series.coefficients @ states) / weight
    post_norm = float(np.linalg.norm(post_state))
    success_prob = (post_norm / u0_norm) ** 2
    outcome = LcuOutcome(
        post_state=post_state,
        success_prob=success_prob,
        amplification_rounds=amplification_rounds(success_prob),
        normalized_state=post_state / post_norm if post_norm > 0 else post_state,
        total_weight=weight,
    )
    logger.debug(f"lcu emulation over {series.term_count} terms: success probability {success_prob:.6g}")
    return outcome


def unitary_with_first_column(column: np.ndarray) -> np.ndarray:
    column = np.asarray(column, dtype=complex)
    seed = np.eye(column.size, dtype=complex)
    seed[:, 0] = column
    Q, R = np.linalg.qr(seed)
    Q[:, 0] *= R[0, 0]
    return Q


def brute_force_post_state(series: LcuSeries, gen: GeneratorSpec, u0, steps: int = config.DEFAULT_STEPS) -> np.ndarray:
    """
    Form the full ancilla-register circuit (O_l^dagger x I) SEL (O_r x I) acting on |0>|u0> and
    project the ancilla back onto |0>.
    """
    pair = build_prep_pair(series)
    u0 = as_vector(u0, gen.dim)
    n, d = len(series), gen.dim
    prep_right = np.kron(unitary_with_first_column(pair.right_column), np.eye(d))
    prep_left = np.kron(unitary_with_first_column(pair.left_column), np.eye(d))

    propagator = MidpointPropagator(gen, required_steps(gen, series.max_abs_k, steps))
    select = np.zeros((n * d, n * d), dtype=complex)
    for j, k in enumerate(series.k_params):
        select[j * d:(j + 1) * d, j * d:(j + 1) * d] = propagator(1j * k)

    register = np.zeros(n * d, dtype=complex)
    register[:d] = u0
    return (prep_left.conj().T @ select @ prep_right @ register)[:d]


def rounds_overhead(u0_norm: float, uT_norm: float, total_weight: float) -> float:
    if min(u0_norm, uT_norm, total_weight) <= 0:
        raise InvalidTolerance("norms and weight must be positive")
    return total_weight * u0_norm / uT_norm

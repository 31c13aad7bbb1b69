"""
End-to-end solving of du/dt = -A(t) u through any kernel series: eigenvalue shifting, the
reference oracle, LCU emulation, and sweeps that tabulate kernels side by side.
"""
import asyncio
import csv
import io
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid

from src.core.matrixcore import (
    GeneratorSpec,
    MidpointPropagator,
    as_vector,
    expm,
    min_hermitian_eigenvalue,
    required_steps,
    spectral_profile,
)
from src.emulator.lcu import LcuOutcome, emulate, rounds_overhead
from src.series.cbmd import CbmdParams
from src.series.lchs import KernelConfig, resolve_kind, select_kernel_parameters, series_for
from src.utils import config
from src.utils.errors import (
    CbmdLabError,
    HypothesisViolation,
    InvalidShift,
    InvalidState,
    InvalidTolerance,
    NumericalFailure,
    ParamTooLarge,
    ToleranceNotMet,
)
from src.utils.utils import format_float

logger = logging.getLogger(__name__)

SHIFT_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class ShiftPlan:
    mode: str
    alpha_shift_t: np.ndarray
    integral: float

    @classmethod
    def none(cls, gen: GeneratorSpec) -> "ShiftPlan":
        return cls("none", np.zeros(gen.times.size), 0.0)

    @classmethod
    def exact_min(cls, gen: GeneratorSpec) -> "ShiftPlan":
        """Shift by the smallest eigenvalue of L(t); may be negative, which lifts L up to PSD."""
        profile = spectral_profile(gen)
        alpha = np.array(profile.alpha_min_t, dtype=float)
        return cls("exact_min", alpha, _integrate(gen, alpha))

    @classmethod
    def user_bound(cls, gen: GeneratorSpec, alpha_shift_t: Sequence[float]) -> "ShiftPlan":
        alpha = np.asarray(alpha_shift_t, dtype=float).reshape(-1)
        if alpha.size == 1:
            alpha = np.full(gen.times.size, alpha[0])
        if alpha.size != gen.times.size:
            raise InvalidShift(f"shift has {alpha.size} values for a grid of {gen.times.size} points")
        if np.any(alpha < 0):
            raise InvalidShift("a user bound shift must be nonnegative")
        return cls("user_bound", alpha, _integrate(gen, alpha))

    @classmethod
    def from_mode(cls, mode: str, gen: GeneratorSpec, alpha_shift_t: Optional[Sequence[float]] = None) -> "ShiftPlan":
        mode = config.SHIFT_ALIASES.get(mode, mode)
        if mode == "none":
            return cls.none(gen)
        if mode == "exact_min":
            return cls.exact_min(gen)
        if mode == "user_bound":
            if alpha_shift_t is None:
                raise InvalidShift("user_bound shifts need alpha_shift_t")
            return cls.user_bound(gen, alpha_shift_t)
        raise InvalidShift(f"unknown shift mode {mode!r}")


def _integrate(gen: GeneratorSpec, alpha: np.ndarray) -> float:
    if gen.is_constant:
        return float(alpha[0] * gen.T)
    return float(trapezoid(alpha, gen.times))


def shift_generator(gen: GeneratorSpec, plan: ShiftPlan) -> GeneratorSpec:
    """A(t_i) - alpha_shift(t_i) I on the generator's own grid."""
    if plan.mode == "none":
        return gen
    alpha = plan.alpha_shift_t
    if alpha.size != gen.times.size:
        raise InvalidShift(f"shift plan has {alpha.size} points, generator grid has {gen.times.size}")
    if plan.mode in ("exact_min", "user_bound"):
        floor = spectral_profile(gen).alpha_min_t
        if np.any(alpha > floor + SHIFT_TOLERANCE * np.maximum(1.0, np.abs(floor))):
            raise InvalidShift("shift exceeds the smallest eigenvalue of L(t) at some grid point")
    eye = np.eye(gen.dim)
    return gen.with_grid_samples(gen.grid_samples - alpha[:, None, None] * eye[None, :, :])


def reference_solution(gen: GeneratorSpec, u0, steps: int = config.DEFAULT_STEPS, tolerance: float = 1e-11) -> np.ndarray:
    """
    exp(-A T) u0 for constant generators. Sampled generators are stepped at
    REFERENCE_STEP_FACTOR times the requested count and checked against twice that count.
    """
    u0 = as_vector(u0, gen.dim)
    if gen.is_constant:
        return expm(-gen.samples[0] * gen.T) @ u0
    base = required_steps(gen, 1.0, config.REFERENCE_STEP_FACTOR * steps)
    coarse = MidpointPropagator(gen, base)(1.0) @ u0
    fine = MidpointPropagator(gen, 2 * base)(1.0) @ u0
    drift = float(np.linalg.norm(coarse - fine))
    if drift > tolerance * max(float(np.linalg.norm(u0)), 1e-300):
        raise NumericalFailure(
            f"reference did not converge: step doubling from {base} moved the state by {drift:.3e} (> {tolerance:.1e})"
        )
    return coarse


@dataclass(frozen=True, eq=False)
class SolveReport:
    approx_uT: np.ndarray
    reference_uT: np.ndarray
    abs_error: float
    rel_error: float
    kernel: KernelConfig
    epsilon: float
    epsilon1: float
    term_count: int
    max_abs_k: float
    total_weight: float
    success_prob: float
    rounds_overhead: float
    shift_mode: str
    shift_integral: float
    tolerance_met: bool
    steps: int
    outcome: Optional[LcuOutcome] = None


@dataclass(frozen=True, eq=False)
class SolveContext:
    """Everything fixed before the series is emulated: shift, reference and kernel parameters."""

    gen: GeneratorSpec
    shifted: GeneratorSpec
    u0: np.ndarray
    plan: ShiftPlan
    reference: np.ndarray
    epsilon: float
    epsilon1: float
    kernel: KernelConfig
    steps: int


def _check_epsilon(epsilon: float):
    if not (0 < epsilon < 1):
        raise InvalidTolerance(f"epsilon must lie in (0, 1), got {epsilon}")


def prepare(gen: GeneratorSpec, u0, kernel: Union[str, KernelConfig], epsilon: float,
            shift: Union[None, str, ShiftPlan] = None, steps: int = config.DEFAULT_STEPS,
            beta: Optional[float] = None, c: Optional[float] = None) -> SolveContext:
    _check_epsilon(epsilon)
    u0 = as_vector(u0, gen.dim)
    u0_norm = float(np.linalg.norm(u0))
    if u0_norm == 0:
        raise InvalidState("u0 must be nonzero")

    if shift is None:
        plan = ShiftPlan.none(gen)
    elif isinstance(shift, str):
        plan = ShiftPlan.from_mode(shift, gen)
    else:
        plan = shift
    shifted = shift_generator(gen, plan)
    lowest = min_hermitian_eigenvalue(shifted)
    if lowest < -config.PSD_TOLERANCE:
        raise HypothesisViolation(f"shifted L(t) is not positive semidefinite (smallest eigenvalue {lowest:.3e})")

    eta_max = max(spectral_profile(shifted).eta_max, 0.0)
    reference = reference_solution(gen, u0, steps, tolerance=max(1e-11, 1e-2 * epsilon))
    scale = math.exp(plan.integral) * float(np.linalg.norm(reference)) / u0_norm
    epsilon1 = min(epsilon * scale, epsilon)

    if isinstance(kernel, str):
        kernel = select_kernel_parameters(resolve_kind(kernel), eta_max, epsilon1, beta=beta, c=c)
    if eta_max > 2 * math.pi * kernel.a * (1 + 1e-12):
        raise HypothesisViolation(f"eta_max = {eta_max:.6g} exceeds 2*pi*a = {2 * math.pi * kernel.a:.6g}")
    return SolveContext(gen, shifted, u0, plan, reference, epsilon, epsilon1, kernel, steps)


def execute(context: SolveContext, strict: bool = True) -> SolveReport:
    kernel = context.kernel
    term_budget = config.max_terms()
    term_count = 2 * kernel.K + 1
    if term_count > term_budget:
        raise ParamTooLarge(f"{kernel.kind} needs {term_count} terms, above the budget of {term_budget}")
    series = series_for(kernel)
    # sampled generators pay for every midpoint step of every term
    steps = required_steps(context.shifted, series.max_abs_k, context.steps)
    if not context.shifted.is_constant and term_count * steps > term_budget:
        raise ParamTooLarge(
            f"{kernel.kind} needs {term_count} terms x {steps} steps, above the budget of {term_budget}"
        )

    outcome = emulate(series, context.shifted, context.u0, context.steps)
    unshift = math.exp(-context.plan.integral)
    approx = unshift * outcome.total_weight * outcome.post_state

    reference = context.reference
    ref_norm = float(np.linalg.norm(reference))
    abs_error = float(np.linalg.norm(approx - reference))
    rel_error = abs_error / ref_norm if ref_norm > 0 else abs_error
    overhead = rounds_overhead(float(np.linalg.norm(context.u0)), ref_norm / unshift, outcome.total_weight)

    report = SolveReport(
        approx_uT=approx,
        reference_uT=reference,
        abs_error=abs_error,
        rel_error=rel_error,
        kernel=kernel,
        epsilon=context.epsilon,
        epsilon1=context.epsilon1,
        term_count=series.term_count,
        max_abs_k=series.max_abs_k,
        total_weight=outcome.total_weight,
        success_prob=outcome.success_prob,
        rounds_overhead=overhead,
        shift_mode=context.plan.mode,
        shift_integral=context.plan.integral,
        tolerance_met=rel_error <= context.epsilon,
        steps=steps,
        outcome=outcome,
    )
    if report.tolerance_met:
        logger.info(f"{kernel.kind} solve: rel_error {rel_error:.3e} <= {context.epsilon:.1e} with {report.term_count} terms")
    else:
        message = f"{kernel.kind} solve missed tolerance: rel_error {rel_error:.3e} > {context.epsilon:.1e}"
        logger.warning(message)
        if strict:
            raise ToleranceNotMet(message, report)
    return report


def solve(gen: GeneratorSpec, u0, kernel: Union[str, KernelConfig], epsilon: float,
          shift: Union[None, str, ShiftPlan] = None, steps: int = config.DEFAULT_STEPS,
          strict: bool = True, beta: Optional[float] = None, c: Optional[float] = None) -> SolveReport:
    return execute(prepare(gen, u0, kernel, epsilon, shift, steps, beta, c), strict)


def _blank_row(kind: str, epsilon: float, shift: str) -> Dict[str, Any]:
    return {
        "kernel": kind,
        "eps": epsilon,
        "K": math.nan,
        "max_k": math.nan,
        "total_weight": math.nan,
        "rel_error": math.nan,
        "success_prob": math.nan,
        "rounds_overhead": math.nan,
        "shift": "off" if shift == "none" else "on",
        "status": "failed",
        "error": "",
    }


def compare_row(gen: GeneratorSpec, u0, kind: str, epsilon: float, shift: str = "none",
                steps: int = config.DEFAULT_STEPS, beta: Optional[float] = None, c: Optional[float] = None) -> Dict[str, Any]:
    kind = resolve_kind(kind)
    shift = config.SHIFT_ALIASES.get(shift, shift)
    row = _blank_row(kind, epsilon, shift)
    try:
        context = prepare(gen, u0, kind, epsilon, shift, steps, beta, c)
        row["K"] = context.kernel.K
        row["max_k"] = context.kernel.K / context.kernel.a
        report = execute(context, strict=False)
    except CbmdLabError as e:
        row["error"] = f"{type(e).__name__}: {e}"
        logger.error(f"compare row {kind} eps={epsilon:.1e} shift={shift} failed: {row['error']}")
        return row
    row.update(
        total_weight=report.total_weight,
        rel_error=report.rel_error,
        success_prob=report.success_prob,
        rounds_overhead=report.rounds_overhead,
        status="completed" if report.tolerance_met else "tolerance_not_met",
    )
    return row


async def compare(gen: GeneratorSpec, u0, epsilon_grid: Sequence[float], kernels: Sequence[str],
                  shifts: Sequence[str] = ("none",), steps: int = config.DEFAULT_STEPS,
                  max_parallel: Optional[int] = None, beta: Optional[float] = None,
                  c: Optional[float] = None) -> List[Dict[str, Any]]:
    """
    One row per (kernel, epsilon, shift), evaluated on worker threads. A failing row is reported
    with status 'failed' and never aborts the sweep.
    """
    specs = [(k, e, s) for k in kernels for e in epsilon_grid for s in shifts]
    semaphore = asyncio.Semaphore(max_parallel or config.max_threads())
    logger.info(f"Comparing {len(specs)} rows with up to {max_parallel or config.max_threads()} threads")

    async def task_wrapper(kind, epsilon, shift):
        async with semaphore:
            return await asyncio.to_thread(compare_row, gen, u0, kind, epsilon, shift, steps, beta, c)

    results = await asyncio.gather(*(task_wrapper(*spec) for spec in specs), return_exceptions=True)

    rows = []
    for (kind, epsilon, shift), res in zip(specs, results):
        if isinstance(res, Exception):
            logger.error(f"compare row {kind} eps={epsilon:.1e} crashed: {res}", exc_info=res)
            row = _blank_row(kind, epsilon, config.SHIFT_ALIASES.get(shift, shift))
            row["error"] = f"{type(res).__name__}: {res}"
            rows.append(row)
        else:
            rows.append(res)
    return rows


def run_compare(*args, **kwargs) -> List[Dict[str, Any]]:
    return asyncio.run(compare(*args, **kwargs))


def _csv_value(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def rows_to_csv(rows: Sequence[Dict[str, Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=config.CSV_HEADER, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _csv_value(row.get(key, math.nan)) for key in config.CSV_HEADER})
    return buffer.getvalue()

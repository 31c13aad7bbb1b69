"""
Contour-based decomposition of T exp(-int A) with A = L + iH, L >= 0.

The weight function
    g(p) = (1 - e^{-2 pi a}) / [(e^{-2 pi i a p} - 1) (p + i) P(p) Q(p)],
    P(p) = prod_{r=-m..m} (p - r - i)/(-r - 2i),   Q(p) = (p - 2i)/(-3i),
has residue -1 at p = -i, and its residues elsewhere give the series coefficients. A term with
node p multiplies U(ip) = T exp(int (-iH - ip L)). Lattice nodes k/a give unitaries; the line
nodes r + i and the node 2i give the auxiliary groups that close the identity.
"""
import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import gammaln

from src.core.contour import ContourSpec, PoleSpec, ResidueProblem
from src.core.matrixcore import (
    GeneratorSpec,
    MidpointPropagator,
    min_hermitian_eigenvalue,
    required_steps,
    spectral_norm,
    spectral_profile,
)
from src.series.lcu_series import LcuSeries
from src.utils import config
from src.utils.errors import HypothesisViolation, InvalidTolerance, ParamTooLarge

logger = logging.getLogger(__name__)

SINH_2PI = math.sinh(2 * math.pi)
LOG_SINH_2PI = math.log(SINH_2PI)


class CbmdParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["cbmd"] = "cbmd"
    m: int = Field(..., ge=1, description="Auxiliary pole half-count")
    a: float = Field(..., gt=0, description="Pole-lattice density; main nodes are k/a")
    K: int = Field(..., ge=1, description="Main sum runs over |k| <= K")
    epsilon1: float = Field(..., gt=0, lt=1, description="Target operator error")

    @model_validator(mode="after")
    def check_truncation(self):
        if self.K < 2 * self.m * self.a * (1 - 1e-12):
            raise ValueError(f"K/a = {self.K / self.a:.6g} must be at least 2m = {2 * self.m}")
        return self

    @property
    def max_abs_k(self) -> float:
        return self.K / self.a


@dataclass(frozen=True)
class ErrorBounds:
    trunc: float
    aux_2i: float
    aux_line: float

    @property
    def total(self) -> float:
        return self.trunc + self.aux_2i + self.aux_line


def _log_expm1(x: float) -> float:
    """log(e^x - 1) for x > 0 without overflow."""
    return x + math.log1p(-math.exp(-x))


def _check_m(m: int):
    if m < 1:
        raise ParamTooLarge(f"m must be at least 1, got {m}")
    if m > config.CBMD_MAX_M:
        raise ParamTooLarge(f"m = {m} exceeds the supported maximum {config.CBMD_MAX_M}")


def error_bounds(params: CbmdParams, eta_max: float) -> ErrorBounds:
    m, a = params.m, params.a
    gap = params.K / a - m
    if gap <= 0:
        trunc = math.inf
    else:
        log_trunc = LOG_SINH_2PI + 2 * gammaln(m + 1) - (2 * m + 1) * math.log(gap) - 2 * math.log(math.pi)
        trunc = math.exp(log_trunc)
    log_2i = 2 * eta_max + LOG_SINH_2PI - math.log(math.pi) - _log_expm1(4 * math.pi * a)
    log_line = eta_max - 2 * math.pi * a + LOG_SINH_2PI + 0.5 * math.log(m)
    return ErrorBounds(trunc=trunc, aux_2i=math.exp(log_2i), aux_line=math.exp(log_line))


def select_parameters(eta_max: float, epsilon1: float) -> CbmdParams:
    if not (0 < epsilon1 < 1):
        raise InvalidTolerance(f"epsilon1 must lie in (0, 1), got {epsilon1}")
    if eta_max < 0 or not math.isfinite(eta_max):
        raise HypothesisViolation(f"eta_max must be a finite nonnegative number, got {eta_max}")

    target = epsilon1 / 3
    log_ratio = math.log(3 * SINH_2PI / (math.pi * epsilon1))
    m = max(1, math.ceil(0.5 * log_ratio))
    while True:
        _check_m(m)
        a = max(
            (2 * eta_max + log_ratio) / (4 * math.pi),
            (eta_max + math.log(3 * SINH_2PI * math.sqrt(m) / epsilon1)) / (2 * math.pi),
            eta_max / (2 * math.pi),
        )
        trial = CbmdParams(m=m, a=a, K=math.ceil(2 * m * a), epsilon1=epsilon1)
        for _ in range(64):
            bounds = error_bounds(trial, eta_max)
            if bounds.aux_2i <= target and bounds.aux_line <= target:
                break
            a *= 1 + 1e-9
            trial = CbmdParams(m=m, a=a, K=math.ceil(2 * m * a), epsilon1=epsilon1)

        for K in range(math.ceil(2 * m * a), max(math.ceil(2 * m * a), math.floor((2 * m + 1) * a)) + 1):
            params = CbmdParams(m=m, a=a, K=K, epsilon1=epsilon1)
            if error_bounds(params, eta_max).trunc <= target:
                logger.info(f"cbmd parameters for eta_max={eta_max:.4g}, eps={epsilon1:.1e}: m={m}, a={a:.6g}, K={K}")
                return params
        m += 1


def main_coefficients(params: CbmdParams, ks: Optional[np.ndarray] = None) -> np.ndarray:
    """c_k for integer k (default -K..K), with the long product over r summed as complex logs."""
    _check_m(params.m)
    a = params.a
    if ks is None:
        ks = np.arange(-params.K, params.K + 1)
    p = np.asarray(ks, dtype=float) / a
    shifted = p - 1j
    r = np.arange(1, params.m + 1, dtype=float)
    # pairs (r, -r) of the product combine into (r^2 - (p - i)^2) / (r^2 + 4)
    log_pairs = np.sum(np.log((r**2)[None, :] - (shifted**2)[:, None]) - np.log(r**2 + 4)[None, :], axis=1)
    centre = shifted / (-2j)
    q = (p - 2j) / (-3j)
    denom = 2j * math.pi * (p + 1j) * centre * q * np.exp(log_pairs)
    return (math.exp(-2 * math.pi * a) - 1) / (a * denom)


def line_coefficients(params: CbmdParams) -> tuple[np.ndarray, np.ndarray]:
    """Nodes r + i (r = -m..m) and their coefficients."""
    _check_m(params.m)
    m, a = params.m, params.a
    r = np.arange(-m, m + 1)
    rr = np.arange(1, m + 1, dtype=float)
    log_s = float(np.sum(np.log(rr**2 + 4)))
    log_fact = gammaln(m - r + 1) + gammaln(m + r + 1)
    sign = np.where(r % 2 == 0, 1.0, -1.0)
    decay = math.exp(-2 * math.pi * a)
    numer = 6 * (decay - 1) * sign * np.exp(log_s - log_fact - 2 * math.pi * a)
    denom = (np.exp(-2j * math.pi * r * a) - decay) * (r + 2j) * (r - 1j)
    return r + 1j, numer / denom


def two_i_coefficient(params: CbmdParams) -> complex:
    _check_m(params.m)
    r = np.arange(1, params.m + 1, dtype=float)
    q = -0.5 * math.exp(float(np.sum(np.log(r**2 + 1) - np.log(r**2 + 4))))
    a = params.a
    return (math.exp(-2 * math.pi * a) - 1) * math.exp(-4 * math.pi * a) / (-math.expm1(-4 * math.pi * a) * q)


def aux_series_terms(params: CbmdParams) -> LcuSeries:
    nodes, coeffs = line_coefficients(params)
    coefficients = np.append(coeffs, two_i_coefficient(params))
    nodes = np.append(nodes, 2j)
    kinds = np.array(["aux_line"] * (2 * params.m + 1) + ["aux_2i"])
    return LcuSeries(coefficients, nodes, kinds, kernel="cbmd")


def build_series(params: CbmdParams, include_aux: bool = False) -> LcuSeries:
    ks = np.arange(-params.K, params.K + 1)
    series = LcuSeries.from_main(main_coefficients(params, ks), ks / params.a, kernel="cbmd")
    logger.debug(f"cbmd main series: {series.term_count} terms, weight {series.total_weight:.6g}")
    if include_aux:
        series = series.concat(aux_series_terms(params))
    return series


def pole_weight(p, params: CbmdParams) -> np.ndarray:
    """The weight g(p) whose residues are the series coefficients (residue -1 at p = -i)."""
    p = np.asarray(p, dtype=complex)
    a = params.a
    r = np.arange(-params.m, params.m + 1)
    prod = np.prod((p[..., None] - r - 1j) / (-r - 2j), axis=-1)
    q = (p - 2j) / (-3j)
    return -(math.exp(-2 * math.pi * a) - 1) / ((np.exp(-2j * math.pi * a * p) - 1) * (p + 1j) * prod * q)


def _check_hypothesis(gen: GeneratorSpec, a: float):
    lowest = min_hermitian_eigenvalue(gen)
    if lowest < -config.PSD_TOLERANCE:
        raise HypothesisViolation(f"L(t) must be positive semidefinite; smallest eigenvalue {lowest:.3e}")
    eta_max = spectral_profile(gen).eta_max
    if eta_max > 2 * math.pi * a * (1 + 1e-12):
        raise HypothesisViolation(f"eta_max = {eta_max:.6g} exceeds 2*pi*a = {2 * math.pi * a:.6g}")


def verify_identity(gen: GeneratorSpec, params: CbmdParams, steps: int = config.DEFAULT_STEPS) -> float:
    """
    Norm of T exp(-int A) minus every term of the series (main lattice |k| <= K and both auxiliary
    groups), each evolution computed with the same propagator.
    """
    _check_hypothesis(gen, params.a)
    series = build_series(params, include_aux=True)
    reach = max(float(np.max(np.abs(series.multipliers))), 1.0)
    propagator = MidpointPropagator(gen, required_steps(gen, reach, steps))

    total = np.zeros((gen.dim, gen.dim), dtype=complex)
    for term in series.terms:
        total += term.coefficient * propagator(term.multiplier)
    residual = spectral_norm(propagator(1.0) - total)
    logger.info(f"cbmd identity residual {residual:.3e} (m={params.m}, a={params.a:.4g}, K={params.K})")
    return residual


@dataclass(frozen=True)
class ProductInequality:
    ratio_plus: float
    ratio_minus: Optional[float]
    lower_ok: bool
    upper_ok: Optional[bool]


def product_inequality_check(m: int, c: float, rtol: float = 1e-13) -> ProductInequality:
    """
    prod_{r<=m}(r^2 + c^2)/r^2 must lie in [1, sinh(pi c)/(pi c)] and, for 0 <= c <= 1,
    prod_{r<=m}(r^2 - c^2)/r^2 in [sin(pi c)/(pi c), 1].
    """
    r = np.arange(1, m + 1, dtype=float)
    ratio_plus = float(np.exp(np.sum(np.log1p((c / r) ** 2))))
    sinh_bound = math.sinh(math.pi * c) / (math.pi * c) if c != 0 else 1.0
    lower_ok = 1 - rtol <= ratio_plus <= sinh_bound * (1 + rtol)

    ratio_minus, upper_ok = None, None
    if 0 <= c <= 1:
        ratio_minus = float(np.prod(1 - (c / r) ** 2))
        upper_ok = float(np.sinc(c)) * (1 - rtol) <= ratio_minus <= 1 + rtol
    return ProductInequality(ratio_plus=ratio_plus, ratio_minus=ratio_minus, lower_ok=lower_ok, upper_ok=upper_ok)


@dataclass(frozen=True)
class WeightCheck:
    weight: float
    proof_bound: float

    @property
    def ok(self) -> bool:
        return self.weight <= self.proof_bound


def weight_bound_check(series: LcuSeries, params: CbmdParams) -> WeightCheck:
    ks = np.arange(-params.K, params.K + 1) / params.a
    lattice_sum = math.fsum((1.0 / (ks**2 + 1)).tolist()) / params.a
    proof_bound = 3 * SINH_2PI / (2 * math.pi**2) * lattice_sum
    check = WeightCheck(weight=series.total_weight, proof_bound=proof_bound)
    if not check.ok:
        logger.warning(f"cbmd weight {check.weight:.6g} exceeds proof bound {check.proof_bound:.6g}")
    return check


def residue_integrand(gen: GeneratorSpec, params: CbmdParams, N: int = 8, nodes_per_unit_length: int = 64,
                      steps: int = config.DEFAULT_STEPS) -> ResidueProblem:
    """
    g(p) U(ip) on the square of half side (2N + 1)/(2a), with its enclosed poles: lattice k/a for
    |k| <= N, the target node -i, the line nodes r + i and 2i.
    """
    half_side = (2 * N + 1) / (2 * params.a)
    if half_side <= max(params.m, 2):
        raise HypothesisViolation(f"square of half side {half_side:.4g} must enclose the auxiliary poles")
    poles = [PoleSpec(k / params.a) for k in range(-N, N + 1)]
    poles += [PoleSpec(-1j), PoleSpec(2j)] + [PoleSpec(r + 1j) for r in range(-params.m, params.m + 1)]

    if gen.is_constant and gen.dim == 1:
        lam = complex(gen.samples[0, 0, 0])

        def f(p):
            p = np.asarray(p, dtype=complex)
            u = np.exp(-(1j * lam.imag + 1j * p * lam.real) * gen.T)
            return (pole_weight(p, params) * u)[:, None, None]
    else:
        propagator = MidpointPropagator(gen, required_steps(gen, math.sqrt(2) * half_side, steps))

        def f(p):
            weights = pole_weight(p, params)
            return np.stack([w * propagator(1j * z) for w, z in zip(weights, np.asarray(p, dtype=complex))])

    return ResidueProblem(
        f=f,
        contour=ContourSpec.square(half_side, nodes_per_unit_length),
        poles=tuple(poles),
        description=f"cbmd weight times U(ip), m={params.m}, a={params.a:.4g}, N={N}",
    )

"""
Kernel series of linear combination of Hamiltonian simulation, sampled on the lattice k/a, as
alternatives to the cbmd series. Every kernel shares the node convention of module cbmd: term k
multiplies U(i k/a) = T exp(-i int (H + (k/a) L)).
"""
import logging
import math
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter
from scipy import integrate, optimize
from scipy.special import erfc, exp1, gammaln

from src.series import cbmd
from src.series.cbmd import CbmdParams
from src.series.lcu_series import LcuSeries
from src.utils import config
from src.utils.errors import HypothesisViolation, InvalidKernelParam, InvalidTolerance, NumericalFailure

logger = logging.getLogger(__name__)

TRUNCATION_CHUNK = 1 << 20


class OriginalKernel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["lchs_original"] = "lchs_original"
    a: float = Field(..., gt=0)
    K: int = Field(..., ge=1)


class ImprovedKernel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["lchs_improved"] = "lchs_improved"
    a: float = Field(..., gt=0)
    K: int = Field(..., ge=1)
    beta: float = Field(default=config.DEFAULT_BETA, gt=0, lt=1)


class OptimalKernel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["lchs_optimal"] = "lchs_optimal"
    a: float = Field(..., gt=0)
    K: int = Field(..., ge=1)
    c: float = Field(default=config.DEFAULT_C, gt=0)
    gamma: float = Field(..., gt=0)


KernelConfig = Annotated[
    Union[CbmdParams, OriginalKernel, ImprovedKernel, OptimalKernel],
    Field(discriminator="kind"),
]
KERNEL_ADAPTER = TypeAdapter(KernelConfig)


def resolve_kind(kind: str) -> str:
    try:
        return config.KERNEL_ALIASES[kind]
    except KeyError:
        raise InvalidKernelParam(f"unknown kernel {kind!r}; expected one of {sorted(config.KERNEL_ALIASES)}") from None


def _decay(a: float) -> float:
    return -math.expm1(-2 * math.pi * a)


def original_coefficients(a: float, ks) -> np.ndarray:
    p = np.asarray(ks, dtype=float) / a
    return (_decay(a) / (a * math.pi * (1 + p**2))).astype(complex)


def improved_coefficients(a: float, beta: float, ks) -> np.ndarray:
    if not (0 < beta < 1):
        raise InvalidKernelParam(f"beta must lie in (0, 1), got {beta}")
    p = np.asarray(ks, dtype=float) / a
    # principal branch; Re(1 + ip) = 1 keeps the lattice away from the cut
    log_kernel = -(2.0**beta) + (1 + 1j * p) ** beta
    return _decay(a) / (a * 2 * math.pi * (1 - 1j * p) * np.exp(log_kernel))


def optimal_coefficients(a: float, c: float, gamma: float, ks) -> np.ndarray:
    if c <= 0 or gamma <= 0:
        raise InvalidKernelParam(f"c and gamma must be positive, got c={c}, gamma={gamma}")
    p = np.asarray(ks, dtype=float) / a
    return _decay(a) / (a * math.pi * (p**2 + 1)) * np.exp(-(p**2 + 1) / (4 * gamma**2) + c * (1 - 1j * p))


def _aux_i_term(coefficient: complex, kernel: str) -> LcuSeries:
    return LcuSeries(np.array([coefficient]), np.array([1j]), np.array(["aux_i"]), kernel)


def _lattice(K: int) -> np.ndarray:
    return np.arange(-K, K + 1)


def original_series(a: float, K: int, include_aux: bool = False) -> LcuSeries:
    ks = _lattice(K)
    series = LcuSeries.from_main(original_coefficients(a, ks), ks / a, kernel="lchs_original")
    if include_aux:
        series = series.concat(_aux_i_term(math.expm1(-2 * math.pi * a) / math.expm1(2 * math.pi * a), "lchs_original"))
    return series


def improved_series(a: float, beta: float, K: int) -> LcuSeries:
    ks = _lattice(K)
    return LcuSeries.from_main(improved_coefficients(a, beta, ks), ks / a, kernel="lchs_improved")


def optimal_series(a: float, c: float, gamma: float, K: int, include_aux: bool = False) -> LcuSeries:
    ks = _lattice(K)
    series = LcuSeries.from_main(optimal_coefficients(a, c, gamma, ks), ks / a, kernel="lchs_optimal")
    if include_aux:
        d = math.expm1(-2 * math.pi * a) / math.expm1(2 * math.pi * a) * math.exp(2 * c)
        series = series.concat(_aux_i_term(d, "lchs_optimal"))
    return series


def kernel_coefficients(kernel: KernelConfig, ks) -> np.ndarray:
    if isinstance(kernel, CbmdParams):
        return cbmd.main_coefficients(kernel, np.asarray(ks))
    if isinstance(kernel, OriginalKernel):
        return original_coefficients(kernel.a, ks)
    if isinstance(kernel, ImprovedKernel):
        return improved_coefficients(kernel.a, kernel.beta, ks)
    return optimal_coefficients(kernel.a, kernel.c, kernel.gamma, ks)


def series_for(kernel: KernelConfig, K: Optional[int] = None, include_aux: bool = False) -> LcuSeries:
    """The main series of any kernel config, truncated at K (default: the config's own K)."""
    K = kernel.K if K is None else K
    if isinstance(kernel, CbmdParams):
        params = kernel if K == kernel.K else kernel.model_copy(update={"K": K})
        return cbmd.build_series(params, include_aux)
    if isinstance(kernel, OriginalKernel):
        return original_series(kernel.a, K, include_aux)
    if isinstance(kernel, ImprovedKernel):
        return improved_series(kernel.a, kernel.beta, K)
    return optimal_series(kernel.a, kernel.c, kernel.gamma, K, include_aux)


def tail_weight_bound(kernel: KernelConfig, K=None):
    """
    Upper bound on sum_{|k| > K} |c_k|. Accepts a scalar or an array of K values; defaults to the
    config's own K.
    """
    K = kernel.K if K is None else K
    Z = np.asarray(K, dtype=float) / kernel.a
    if isinstance(kernel, CbmdParams):
        m = kernel.m
        gap = Z - m
        with np.errstate(divide="ignore", invalid="ignore"):
            log_tail = (cbmd.LOG_SINH_2PI + 2 * gammaln(m + 1) - (2 * m + 1) * np.log(np.where(gap > 0, gap, 1.0))
                        - 2 * math.log(math.pi))
        out = np.where(gap > 0, np.exp(log_tail), np.inf)
    elif isinstance(kernel, OriginalKernel):
        out = _decay(kernel.a) * (2 / math.pi) * (math.pi / 2 - np.arctan(Z))
    elif isinstance(kernel, ImprovedKernel):
        beta = kernel.beta
        scale = _decay(kernel.a) * math.exp(2.0**beta) / (math.pi * beta)
        with np.errstate(divide="ignore"):
            out = np.where(Z > 0, scale * exp1(math.cos(beta * math.pi / 2) * np.maximum(Z, 1e-300) ** beta), np.inf)
    else:
        g = kernel.gamma
        out = (2 * math.exp(kernel.c - 1 / (4 * g**2)) * _decay(kernel.a) * g * math.sqrt(math.pi)
               * erfc(Z / (2 * g)) / (math.pi * (1 + Z**2)))
    return float(out) if np.ndim(out) == 0 else out


def _check_epsilon(epsilon: float):
    if not (0 < epsilon < 1):
        raise InvalidTolerance(f"epsilon must lie in (0, 1), got {epsilon}")


def select_kernel_parameters(kind: str, eta_max: float, epsilon: float, beta: Optional[float] = None,
                             c: Optional[float] = None) -> KernelConfig:
    kind = resolve_kind(kind)
    _check_epsilon(epsilon)
    if kind == "cbmd":
        return cbmd.select_parameters(eta_max, epsilon)
    if eta_max < 0 or not math.isfinite(eta_max):
        raise HypothesisViolation(f"eta_max must be a finite nonnegative number, got {eta_max}")

    log_inv = math.log(1 / epsilon)
    if kind == "lchs_original":
        a = eta_max + log_inv
        kernel = OriginalKernel(a=a, K=math.ceil(a / epsilon))
    elif kind == "lchs_optimal":
        c = config.DEFAULT_C if c is None else c
        if c <= 0:
            raise InvalidKernelParam(f"c must be positive, got {c}")
        radicand = c + math.log(1 / (2 * math.pi * epsilon))
        if radicand <= 0:
            raise InvalidKernelParam(f"c = {c} too small for epsilon = {epsilon}")
        gamma = math.sqrt(radicand) / c
        a = eta_max + log_inv + 2 * c
        kernel = OptimalKernel(a=a, K=math.ceil(a * math.ceil(2 * c * gamma**2)), c=c, gamma=gamma)
    else:
        beta = config.DEFAULT_BETA if beta is None else beta
        if not (0 < beta < 1):
            raise InvalidKernelParam(f"beta must lie in (0, 1), got {beta}")
        a = eta_max + log_inv
        trial = ImprovedKernel(a=a, K=1, beta=beta)
        goal = epsilon / 2
        hi = 1.0
        while tail_weight_bound(trial, hi * a) > goal:
            hi *= 2
        Z = optimize.brentq(lambda z: tail_weight_bound(trial, z * a) - goal, 1e-9, hi, xtol=1e-12)
        kernel = ImprovedKernel(a=a, K=math.ceil(a * Z), beta=beta)

    logger.info(f"{kind} parameters for eta_max={eta_max:.4g}, eps={epsilon:.1e}: {kernel.model_dump()}")
    return kernel


def optimal_amplification_weight(kernel: OptimalKernel) -> float:
    """Normalization of the optimal kernel's LCU, reported as plain sum |c_j|."""
    return optimal_series(kernel.a, kernel.c, kernel.gamma, kernel.K).total_weight


def improved_remainder_scalar(a: float, beta: float, lam: complex, T: float = 1.0) -> complex:
    """
    The branch-cut part of the improved kernel for a scalar generator lam = l + ih:
    e^{-lam T} minus the untruncated lattice sum.
    """
    if not (0 < beta < 1):
        raise InvalidKernelParam(f"beta must lie in (0, 1), got {beta}")
    lam = complex(lam)
    l, h = lam.real, lam.imag
    if l < 0:
        raise HypothesisViolation(f"Re(lambda) must be nonnegative, got {l}")
    rate = l * T - 2 * math.pi * a
    if rate >= 0:
        raise HypothesisViolation(f"Re(lambda) T = {l * T:.4g} must stay below 2*pi*a = {2 * math.pi * a:.4g}")

    prefactor = math.expm1(-2 * math.pi * a) * math.exp(2.0**beta) / math.pi
    cos_b, sin_b = math.cos(math.pi * beta), math.sin(math.pi * beta)
    phase = complex(math.cos(h * T), -math.sin(h * T))

    def envelope(w: float) -> float:
        return abs(prefactor) * math.exp((1 + w) * rate - w**beta * cos_b) / ((w + 2) * -math.expm1(-2 * math.pi * a * (1 + w)))

    def integrand(w: float) -> float:
        return envelope(w) * math.copysign(1.0, prefactor) * math.sin(w**beta * sin_b)

    upper = 1.0
    while envelope(upper) >= 1e-16:
        upper *= 2
        if upper > 1e6:
            raise NumericalFailure("branch-cut integrand does not decay")

    value, err = integrate.quad(integrand, 0.0, upper, limit=400, epsabs=1e-15, epsrel=1e-12)
    logger.debug(f"improved remainder quadrature on [0, {upper:g}]: {value:.6e} +- {err:.1e}")
    return phase * value


def minimal_truncation(kind: str, lam: complex, T: float, epsilon: float, eta_max: Optional[float] = None,
                       beta: Optional[float] = None, c: Optional[float] = None) -> int:
    """
    Smallest K whose certificate |err(K)| + 2 tail(K) <= epsilon holds for the scalar problem
    e^{-lam T}; the certificate then covers every truncation K' >= K.
    """
    lam = complex(lam)
    if eta_max is None:
        eta_max = max(lam.real * T, 0.0)
    kernel = select_kernel_parameters(kind, eta_max, epsilon, beta=beta, c=c)
    target = complex(np.exp(-lam * T))
    a = kernel.a
    l, h = lam.real, lam.imag

    def unitary(ks):
        return np.exp(-1j * (h + ks / a * l) * T)

    c0 = kernel_coefficients(kernel, np.array([0]))[0]
    running = complex(c0 * unitary(np.array([0.0]))[0])
    if abs(running - target) + 2 * tail_weight_bound(kernel, 0) <= epsilon:
        return 0

    cap = max(4 * kernel.K, 1024)
    start = 1
    while start <= cap:
        ks = np.arange(start, min(start + TRUNCATION_CHUNK, cap + 1))
        pairs = kernel_coefficients(kernel, ks) * unitary(ks) + kernel_coefficients(kernel, -ks) * unitary(-ks)
        partial = running + np.cumsum(pairs)
        certificate = np.abs(partial - target) + 2 * tail_weight_bound(kernel, ks)
        hits = np.nonzero(certificate <= epsilon)[0]
        if hits.size:
            K = int(ks[hits[0]])
            logger.info(f"minimal truncation for {kernel.kind} at eps={epsilon:.1e}: K={K}")
            return K
        running = complex(partial[-1])
        start = int(ks[-1]) + 1
    raise NumericalFailure(f"{kernel.kind} certificate not reached below K = {cap}")

"""
Dense complex matrix kernels: Hermitian splitting, generator specs, matrix and
time-ordered exponentials, and the spectral scalars that drive every error bound.
"""
import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from scipy import linalg as sla
from scipy.integrate import trapezoid

from src.utils import config
from src.utils.errors import (
    InvalidGenerator,
    InvalidMatrix,
    InvalidState,
    NormTooLarge,
    NumericalFailure,
    StepTooCoarse,
)

logger = logging.getLogger(__name__)

GeneratorKind = Literal["constant", "time_sampled"]
QuadratureRule = Literal["trapezoid", "midpoint"]


def as_matrix(value, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite, non-empty square complex array (scalars become 1x1)."""
    try:
        arr = np.array(value, dtype=complex)
    except (TypeError, ValueError) as e:
        raise InvalidMatrix(f"{name}: not a numeric array ({e})") from e
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise InvalidMatrix(f"{name}: expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidMatrix(f"{name}: entries must be finite")
    return arr


def as_vector(value, dim: Optional[int] = None, name: str = "u0") -> np.ndarray:
    try:
        vec = np.array(value, dtype=complex).reshape(-1)
    except (TypeError, ValueError) as e:
        raise InvalidState(f"{name}: not a numeric vector ({e})") from e
    if vec.size == 0 or not np.all(np.isfinite(vec)):
        raise InvalidState(f"{name}: must be a finite, non-empty vector")
    if dim is not None and vec.size != dim:
        raise InvalidState(f"{name}: length {vec.size} does not match dimension {dim}")
    return vec


def eigvalsh(M: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(M)
    except np.linalg.LinAlgError as e:
        raise NumericalFailure(f"Hermitian eigensolver failed: {e}") from e


def spectral_norm(A) -> float:
    """Largest singular value, from the eigenvalues of A^H A."""
    A = np.asarray(A, dtype=complex)
    if A.ndim == 0:
        return float(abs(A))
    top = eigvalsh(A.conj().T @ A)[-1]
    return float(math.sqrt(max(float(top), 0.0)))


@dataclass(frozen=True, eq=False)
class HermitianSplit:
    H: np.ndarray
    L: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.L + 1j * self.H


def hermitian_split(A) -> HermitianSplit:
    A = as_matrix(A, "A")
    Ah = A.conj().T
    L = 0.5 * (A + Ah)
    H = -0.5j * (A - Ah)
    return HermitianSplit(H=H, L=L)


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    """
    The ODE generator A(t) = L(t) + iH(t) on [0, T]. Constant generators keep a single
    sample; sampled ones are interpolated entrywise piecewise-linearly between grid points.
    """

    kind: GeneratorKind
    T: float
    times: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        if self.kind not in ("constant", "time_sampled"):
            raise InvalidGenerator(f"unknown generator kind {self.kind!r}")
        T = float(self.T)
        if not math.isfinite(T) or T <= 0:
            raise InvalidGenerator(f"T must be a positive finite time, got {self.T}")
        samples = np.array(self.samples, dtype=complex)
        if samples.ndim == 2:
            samples = samples[None]
        if samples.ndim != 3 or samples.shape[1] != samples.shape[2] or samples.shape[1] == 0:
            raise InvalidGenerator(f"samples must be a stack of square matrices, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise InvalidGenerator("samples must be finite")

        if self.kind == "constant":
            if samples.shape[0] != 1:
                raise InvalidGenerator("a constant generator holds exactly one sample")
            times = np.array([0.0, T])
        else:
            times = np.array(self.times, dtype=float).reshape(-1)
            if times.size < 2 or times.size != samples.shape[0]:
                raise InvalidGenerator("a sampled generator needs at least 2 samples, one per grid time")
            if not np.all(np.isfinite(times)) or np.any(np.diff(times) <= 0):
                raise InvalidGenerator("times must be strictly increasing")
            if times[0] != 0.0:
                raise InvalidGenerator("times must start at 0")
            if abs(times[-1] - T) > 1e-12 * T:
                raise InvalidGenerator(f"times must end at T = {T}, got {times[-1]}")
            times[-1] = T

        times.setflags(write=False)
        samples.setflags(write=False)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "samples", samples)

    @classmethod
    def constant(cls, A, T: float = 1.0) -> "GeneratorSpec":
        return cls(kind="constant", T=T, times=np.array([0.0, T]), samples=as_matrix(A, "A")[None])

    @classmethod
    def time_sampled(cls, times, samples) -> "GeneratorSpec":
        times = np.asarray(times, dtype=float)
        return cls(kind="time_sampled", T=float(times[-1]), times=times, samples=samples)

    @property
    def dim(self) -> int:
        return int(self.samples.shape[1])

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    @property
    def grid_samples(self) -> np.ndarray:
        if self.is_constant:
            return np.repeat(self.samples, 2, axis=0)
        return self.samples

    def matrix_at(self, t: float) -> np.ndarray:
        if self.is_constant:
            return self.samples[0]
        i = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 2))
        t0, t1 = self.times[i], self.times[i + 1]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * self.samples[i] + w * self.samples[i + 1]

    def with_grid_samples(self, grid_samples) -> "GeneratorSpec":
        """Same kind and grid, new per-grid-point matrices."""
        grid_samples = np.asarray(grid_samples, dtype=complex)
        if self.is_constant:
            return GeneratorSpec.constant(grid_samples[0], self.T)
        return GeneratorSpec.time_sampled(self.times, grid_samples)


@dataclass(frozen=True, eq=False)
class SpectralProfile:
    alpha_A: float
    times: np.ndarray
    alpha_min_t: np.ndarray
    alpha_max_t: np.ndarray
    eta_min: float
    eta_max: float
    alpha_d: float
    rho_L: float
    gamma_min: float
    gamma_max: float


def spectral_profile(gen: GeneratorSpec, quadrature: QuadratureRule = "trapezoid") -> SpectralProfile:
    if quadrature not in ("trapezoid", "midpoint"):
        raise ValueError(f"unknown quadrature rule {quadrature!r}")
    times = gen.times
    samples = gen.grid_samples

    lows, highs, norms = [], [], []
    for A in samples:
        evals = eigvalsh(hermitian_split(A).L)
        lows.append(evals[0])
        highs.append(evals[-1])
        norms.append(spectral_norm(A))
    lows = np.array(lows, dtype=float)
    highs = np.array(highs, dtype=float)

    if gen.is_constant:
        eta_min = float(lows[0] * gen.T)
        eta_max = float(highs[0] * gen.T)
        rho_L = float((highs[0] - lows[0]) * gen.T)
    elif quadrature == "trapezoid":
        eta_min = float(trapezoid(lows, times))
        eta_max = float(trapezoid(highs, times))
        rho_L = float(trapezoid(highs - lows, times))
    else:
        dts = np.diff(times)
        mids = 0.5 * (samples[:-1] + samples[1:])
        mid_evals = np.array([eigvalsh(hermitian_split(A).L) for A in mids])
        eta_min = float(np.sum(dts * mid_evals[:, 0]))
        eta_max = float(np.sum(dts * mid_evals[:, -1]))
        rho_L = float(np.sum(dts * (mid_evals[:, -1] - mid_evals[:, 0])))

    lows.setflags(write=False)
    highs.setflags(write=False)
    return SpectralProfile(
        alpha_A=float(max(norms)),
        times=times,
        alpha_min_t=lows,
        alpha_max_t=highs,
        eta_min=eta_min,
        eta_max=eta_max,
        alpha_d=float(np.max(highs - lows)),
        rho_L=rho_L,
        gamma_min=math.exp(eta_min),
        gamma_max=math.exp(eta_max),
    )


def _pade_coefficients(q: int) -> np.ndarray:
    f = math.factorial
    return np.array([f(2 * q - j) * f(q) / (f(2 * q) * f(j) * f(q - j)) for j in range(q + 1)])


_PADE = _pade_coefficients(config.EXPM_PADE_ORDER)


def expm(M) -> np.ndarray:
    """
    Matrix exponential by scaling and squaring around a diagonal Pade approximant.
    The scaling brings the spectral norm to at most EXPM_SCALED_NORM.
    """
    M = as_matrix(M, "M")
    norm = spectral_norm(M)
    if norm > config.EXPM_NORM_LIMIT:
        raise NormTooLarge(f"refusing expm of a matrix with norm {norm:.3e} > {config.EXPM_NORM_LIMIT:g}")
    squarings = 0
    if norm > config.EXPM_SCALED_NORM:
        squarings = int(math.ceil(math.log2(norm / config.EXPM_SCALED_NORM)))
    X = M / (2.0 ** squarings)

    n = M.shape[0]
    numer = np.zeros((n, n), dtype=complex)
    denom = np.zeros((n, n), dtype=complex)
    power = np.eye(n, dtype=complex)
    for j, b in enumerate(_PADE):
        term = b * power
        numer += term
        denom += term if j % 2 == 0 else -term
        power = power @ X
    try:
        E = sla.solve(denom, numer)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(f"Pade denominator solve failed: {e}") from e
    for _ in range(squarings):
        E = E @ E
    return E


def hermitian_evolution(G: np.ndarray, T: float) -> np.ndarray:
    """exp(-i G T) for Hermitian G, exact to rounding at any norm."""
    w, V = np.linalg.eigh(G)
    return (V * np.exp(-1j * w * T)) @ V.conj().T


def hermitian_evolutions(H, L, k_params, T: float, u0, chunk: int = config.BATCH_CHUNK) -> np.ndarray:
    """
    Row j holds exp(-i (H + k_j L) T) u0. Stacked eigendecompositions, processed in
    chunks so very long lattices stay within memory.
    """
    H = np.asarray(H, dtype=complex)
    L = np.asarray(L, dtype=complex)
    ks = np.asarray(k_params, dtype=float).reshape(-1)
    u0 = np.asarray(u0, dtype=complex)
    out = np.empty((ks.size, u0.size), dtype=complex)
    for start in range(0, ks.size, chunk):
        kk = ks[start:start + chunk]
        G = H[None, :, :] + kk[:, None, None] * L[None, :, :]
        try:
            w, V = np.linalg.eigh(G)
        except np.linalg.LinAlgError as e:
            raise NumericalFailure(f"batched eigendecomposition failed: {e}") from e
        coords = np.einsum("nji,j->ni", V.conj(), u0)
        out[start:start + kk.size] = np.einsum("nij,nj->ni", V, np.exp(-1j * w * T) * coords)
    return out


class MidpointPropagator:
    """
    U(z) = T exp(int_0^T (-iH(s) - z L(s)) ds) for any number of multipliers z on one
    generator. Sampled generators are stepped by the exponential midpoint rule, each grid
    interval split into substeps so every step lies inside one linear segment.
    """

    def __init__(self, gen: GeneratorSpec, steps: int = config.DEFAULT_STEPS):
        if int(steps) < 1:
            raise StepTooCoarse(f"steps must be a positive integer, got {steps}")
        self.gen = gen
        self.steps = int(steps)
        if gen.is_constant:
            split = hermitian_split(gen.samples[0])
            self._H, self._L = split.H, split.L
            return

        dts, mids = [], []
        for t0, t1 in zip(gen.times[:-1], gen.times[1:]):
            n = max(1, math.ceil(self.steps * (t1 - t0) / gen.T - 1e-9))
            h = (t1 - t0) / n
            dts.extend([h] * n)
            mids.extend(t0 + (j + 0.5) * h for j in range(n))
        splits = [hermitian_split(gen.matrix_at(t)) for t in mids]
        self._dts = np.array(dts)
        self._Hs = np.stack([s.H for s in splits])
        self._Ls = np.stack([s.L for s in splits])

    @property
    def step_count(self) -> int:
        return 1 if self.gen.is_constant else int(self._dts.size)

    def __call__(self, z: complex) -> np.ndarray:
        z = complex(z)
        if self.gen.is_constant:
            if z.real == 0.0:
                return hermitian_evolution(self._H + z.imag * self._L, self.gen.T)
            return expm(-(1j * self._H + z * self._L) * self.gen.T)

        U = np.eye(self.gen.dim, dtype=complex)
        if z.real == 0.0:
            for dt, H, L in zip(self._dts, self._Hs, self._Ls):
                U = hermitian_evolution(H + z.imag * L, dt) @ U
            return U
        for dt, H, L in zip(self._dts, self._Hs, self._Ls):
            G = -(1j * H + z * L) * dt
            norm = spectral_norm(G)
            if norm > 1.0:
                raise StepTooCoarse(f"step norm {norm:.3f} > 1 at multiplier {z}; increase steps above {self.steps}")
            U = expm(G) @ U
        return U

    def evolve_hermitian(self, k_params, u0, chunk: int = config.BATCH_CHUNK) -> np.ndarray:
        """
        Row j holds U(i k_j) u0. Every step diagonalizes the stacked H_n + k L_n at once,
        so the cost grows with steps times chunks rather than steps times terms.
        """
        ks = np.asarray(k_params, dtype=float).reshape(-1)
        u0 = np.asarray(u0, dtype=complex)
        if self.gen.is_constant:
            return hermitian_evolutions(self._H, self._L, ks, self.gen.T, u0, chunk)

        out = np.empty((ks.size, u0.size), dtype=complex)
        for start in range(0, ks.size, chunk):
            kk = ks[start:start + chunk]
            states = np.repeat(u0[None, :], kk.size, axis=0)
            for dt, H, L in zip(self._dts, self._Hs, self._Ls):
                G = H[None, :, :] + kk[:, None, None] * L[None, :, :]
                try:
                    w, V = np.linalg.eigh(G)
                except np.linalg.LinAlgError as e:
                    raise NumericalFailure(f"batched eigendecomposition failed: {e}") from e
                coords = np.einsum("nji,nj->ni", V.conj(), states)
                states = np.einsum("nij,nj->ni", V, np.exp(-1j * w * dt) * coords)
            out[start:start + kk.size] = states
        return out


def required_steps(gen: GeneratorSpec, max_multiplier: float, steps: int = config.DEFAULT_STEPS) -> int:
    """Smallest step count >= steps with every midpoint step norm below 1 for |z| <= max_multiplier."""
    if gen.is_constant:
        return int(steps)
    worst = 0.0
    for A in gen.samples:
        split = hermitian_split(A)
        worst = max(worst, spectral_norm(split.H) + abs(max_multiplier) * spectral_norm(split.L))
    return max(int(steps), math.ceil(gen.T * worst) + 1)


def min_hermitian_eigenvalue(gen: GeneratorSpec) -> float:
    """Smallest eigenvalue of L(t) over the sample grid."""
    return float(min(eigvalsh(hermitian_split(A).L)[0] for A in gen.samples))


def time_ordered_exp(gen: GeneratorSpec, multiplier: complex, steps: int = config.DEFAULT_STEPS) -> np.ndarray:
    return MidpointPropagator(gen, steps)(multiplier)


def evolution_norm_bound(z: complex, profile: SpectralProfile) -> float:
    """Bound on ||T exp(int (iH + zL))|| from the extreme eigenvalue integrals of L."""
    re = complex(z).real
    if re >= 0:
        return math.exp(re * profile.eta_max)
    return math.exp(re * profile.eta_min)

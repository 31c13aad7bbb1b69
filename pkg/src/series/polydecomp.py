"""
Exact decomposition of a matrix polynomial of iH + L into evaluations at Hermitian-generated
arguments: p(iH + L) = sum_r w_r p(iH + i q_r L) whenever the number of real points q_r exceeds
the degree, with w_r the Lagrange basis at -i.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from src.core.contour import ContourSpec
from src.core.matrixcore import as_matrix, spectral_norm
from src.utils.errors import DegeneratePoints, InvalidMatrix, InvalidPolynomial, InvalidTolerance

logger = logging.getLogger(__name__)

MIN_GAP = 1e-12


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Coefficients a_0..a_D in increasing degree."""

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if coeffs.size == 0 or not np.all(np.isfinite(coeffs)):
            raise InvalidPolynomial("a polynomial needs at least one finite coefficient")
        if coeffs.size > 1 and coeffs[-1] == 0:
            raise InvalidPolynomial("leading coefficient must be nonzero")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def monomial(cls, degree: int) -> "Polynomial":
        coeffs = np.zeros(degree + 1, dtype=complex)
        coeffs[-1] = 1
        return cls(coeffs)

    @classmethod
    def exp_taylor(cls, degree: int) -> "Polynomial":
        return cls(np.array([1 / math.factorial(j) for j in range(degree + 1)], dtype=complex))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def evaluate(self, z):
        return npoly.polyval(z, self.coeffs)

    def __call__(self, X) -> np.ndarray:
        """Horner evaluation at a square matrix."""
        X = np.asarray(X, dtype=complex)
        eye = np.eye(X.shape[0], dtype=complex)
        result = self.coeffs[-1] * eye
        for a in self.coeffs[-2::-1]:
            result = result @ X + a * eye
        return result


@dataclass(frozen=True, eq=False)
class PolyDecomp:
    points: np.ndarray
    weights: np.ndarray

    @property
    def total_weight(self) -> float:
        return math.fsum(np.abs(self.weights).tolist())

    @property
    def weight_sum(self) -> complex:
        return complex(math.fsum(self.weights.real.tolist()), math.fsum(self.weights.imag.tolist()))


def lagrange_weights(points: Sequence[float]) -> PolyDecomp:
    q = np.asarray(points, dtype=float).reshape(-1)
    if q.size == 0 or not np.all(np.isfinite(q)):
        raise DegeneratePoints("need at least one finite point")
    gaps = np.abs(q[:, None] - q[None, :]) + np.eye(q.size) * np.inf
    if q.size > 1 and np.min(gaps) <= MIN_GAP:
        raise DegeneratePoints(f"points must be pairwise distinct (min gap {np.min(gaps):.3e})")

    # log-magnitudes and phases accumulate separately through the complex log
    numer = np.log(-1j - q.astype(complex))
    diffs = (q[:, None] - q[None, :]).astype(complex) + np.eye(q.size)
    log_w = (np.sum(numer) - numer) - np.sum(np.log(diffs), axis=1)
    weights = np.exp(log_w)
    return PolyDecomp(points=q, weights=weights)


def chebyshev_points(count: int, spread: float = 1.0) -> np.ndarray:
    r = np.arange(1, count + 1)
    q = spread * np.cos((2 * r - 1) * math.pi / (2 * count))
    q[np.abs(q) < 1e-15 * spread] = 0.0
    return q


def choose_points(D: int, spread: float = 1.0) -> np.ndarray:
    if D < 0 or spread <= 0:
        raise InvalidPolynomial(f"need D >= 0 and spread > 0, got D={D}, spread={spread}")
    return chebyshev_points(D + 1, spread)


def uniform_points(D: int, spread: float = 1.0) -> np.ndarray:
    if D == 0:
        return np.zeros(1)
    return np.linspace(-spread, spread, D + 1)


def default_spread(L) -> float:
    return max(1.0, spectral_norm(L))


def _check_pair(H, L) -> tuple[np.ndarray, np.ndarray]:
    H = as_matrix(H, "H")
    L = as_matrix(L, "L")
    if H.shape != L.shape:
        raise InvalidMatrix(f"H and L shapes differ: {H.shape} vs {L.shape}")
    return H, L


def argument_matrices(H, L, points) -> np.ndarray:
    """Stack of iH + i q_r L."""
    H, L = _check_pair(H, L)
    q = np.asarray(points, dtype=float).reshape(-1)
    return 1j * H[None, :, :] + 1j * q[:, None, None] * L[None, :, :]


def apply_decomposition(H, L, p: Polynomial, decomp: PolyDecomp) -> np.ndarray:
    args = argument_matrices(H, L, decomp.points)
    return sum(w * p(X) for w, X in zip(decomp.weights, args))


def exactness_witness(H, L, p: Polynomial, m: int, spread: Optional[float] = None) -> float:
    """Relative residual of the m-point Chebyshev decomposition against p(iH + L)."""
    if m < 1:
        raise InvalidPolynomial(f"need at least one point, got m={m}")
    H, L = _check_pair(H, L)
    spread = default_spread(L) if spread is None else spread
    return decomposition_residual(H, L, p, lagrange_weights(chebyshev_points(m, spread)))


def decomposition_residual(H, L, p: Polynomial, decomp: PolyDecomp) -> float:
    """Relative residual of any point set's decomposition against p(iH + L)."""
    H, L = _check_pair(H, L)
    exact = p(1j * H + L)
    scale = spectral_norm(exact)
    residual = spectral_norm(apply_decomposition(H, L, p, decomp) - exact)
    return residual / scale if scale > 0 else residual


def runge_error_bound(f_minus_p_max: float, resolvent_max: float, contour_length: float) -> float:
    if min(f_minus_p_max, resolvent_max, contour_length) < 0:
        raise InvalidTolerance("Runge bound inputs must be nonnegative")
    return contour_length / (2 * math.pi) * resolvent_max * f_minus_p_max


@dataclass(frozen=True)
class RungeBound:
    bound: float
    f_minus_p_max: float
    resolvent_max: float
    contour_length: float
    measured: Optional[float] = None


def runge_bound_on_contour(f: Callable, p: Polynomial, A, contour: ContourSpec,
                           f_matrix: Optional[Callable] = None) -> RungeBound:
    """
    Sample |f - p| and the resolvent norm on the contour nodes and evaluate the bound; when the
    matrix function f_matrix is given, also report the measured ||f(A) - p(A)||.
    """
    A = as_matrix(A, "A")
    nodes, _ = contour.quadrature()
    f_minus_p_max = float(np.max(np.abs(f(nodes) - p.evaluate(nodes))))
    eye = np.eye(A.shape[0], dtype=complex)
    resolvent_max = max(spectral_norm(np.linalg.solve(z * eye - A, eye)) for z in nodes)
    bound = runge_error_bound(f_minus_p_max, resolvent_max, contour.length)
    measured = spectral_norm(f_matrix(A) - p(A)) if f_matrix is not None else None
    return RungeBound(bound, f_minus_p_max, resolvent_max, contour.length, measured)

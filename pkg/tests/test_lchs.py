import math
import sys

sys.path.append(".")

import numpy as np
import pytest
from dotenv import load_dotenv

load_dotenv()

from src.series import lchs
from src.series.cbmd import CbmdParams
from src.series.lchs import ImprovedKernel, OptimalKernel, OriginalKernel
from src.utils.errors import HypothesisViolation, InvalidKernelParam

KINDS = ["cbmd", "lchs_original", "lchs_improved", "lchs_optimal"]


def test_original_c0():
    c0 = lchs.original_coefficients(1.0, [0])[0]
    assert c0.real == pytest.approx((1 - math.exp(-2 * math.pi)) / math.pi, rel=1e-14)
    assert c0.real == pytest.approx(0.317706, abs=1e-6)


def test_original_riemann_limit():
    weight = lchs.original_series(50.0, 5000).total_weight
    assert 0.9 <= weight <= 1.01


@pytest.mark.parametrize("a", [1.0, 2.5, 6.0])
def test_original_weight_below_one(a):
    K = int(200 * a)
    assert lchs.original_series(a, K).total_weight <= 1 + math.exp(-2 * math.pi * a)


def test_original_rule_on_scalar():
    kernel = lchs.select_kernel_parameters("lchs_original", 0.0, 1e-2)
    assert kernel.a == pytest.approx(math.log(100))
    assert kernel.K == 461
    value = lchs.series_for(kernel).scalar_sum(1.0)
    assert abs(value - math.exp(-1)) <= 1e-2


def test_original_identity_with_pole_at_i():
    kernel = OriginalKernel(a=3.0, K=3000)
    closed = lchs.series_for(kernel, include_aux=True).scalar_sum(1.0)
    assert abs(closed - math.exp(-1)) <= lchs.tail_weight_bound(kernel)


def test_improved_c0():
    a, beta = 2.0, 0.8
    c0 = lchs.improved_coefficients(a, beta, [0])[0]
    expected = (1 - math.exp(-2 * math.pi * a)) * math.exp(2**beta - 1) / (2 * math.pi * a)
    assert c0 == pytest.approx(expected, rel=1e-13)


def test_improved_decay_envelope():
    a, beta = 3.0, 0.8
    ks = np.arange(-300, 301)
    c = lchs.improved_coefficients(a, beta, ks)
    c0 = abs(lchs.improved_coefficients(a, beta, [0])[0])
    envelope = c0 * np.exp(1 - ((1 + 1j * ks / a) ** beta).real)
    assert np.all(np.abs(c) <= envelope * (1 + 1e-12))


@pytest.mark.parametrize("beta", [0.0, 1.0, -0.2])
def test_improved_rejects_beta(beta):
    with pytest.raises(InvalidKernelParam):
        lchs.improved_coefficients(2.0, beta, [0, 1])
    with pytest.raises(InvalidKernelParam):
        lchs.select_kernel_parameters("improved", 1.0, 1e-3, beta=beta)


def test_optimal_c0():
    a, c, gamma = 4.0, 1.0, 2.5
    c0 = lchs.optimal_coefficients(a, c, gamma, [0])[0]
    expected = (1 - math.exp(-2 * math.pi * a)) / (a * math.pi) * math.exp(-1 / (4 * gamma**2) + c)
    assert c0 == pytest.approx(expected, rel=1e-13)


def test_optimal_degenerates_to_original():
    a = 3.0
    ks = np.arange(-30, 31)
    optimal = lchs.optimal_coefficients(a, 1e-14, 1e8, ks)
    original = lchs.original_coefficients(a, ks)
    assert np.allclose(optimal, original, rtol=1e-12, atol=0)


def test_optimal_gamma_rule():
    kernel = lchs.select_kernel_parameters("optimal", 0.0, 1e-4)
    assert kernel.c == 1.0
    assert kernel.gamma == pytest.approx(math.sqrt(1 + math.log(1 / (2 * math.pi * 1e-4))))
    assert kernel.a == pytest.approx(math.log(1e4) + 2)
    assert kernel.K == math.ceil(kernel.a * math.ceil(2 * kernel.gamma**2))


def test_unknown_kernel():
    with pytest.raises(InvalidKernelParam):
        lchs.select_kernel_parameters("dyson", 1.0, 1e-3)


def test_cbmd_dispatch():
    kernel = lchs.select_kernel_parameters("cbmd", 1.0, 1e-4)
    assert isinstance(kernel, CbmdParams)
    assert lchs.series_for(kernel).term_count == 2 * kernel.K + 1


@pytest.mark.parametrize("kind", KINDS)
def test_kernel_config_round_trip(kind):
    kernel = lchs.select_kernel_parameters(kind, 0.5, 1e-3)
    assert lchs.KERNEL_ADAPTER.validate_python(kernel.model_dump()) == kernel


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("epsilon", [1e-2, 1e-3, 1e-4])
@pytest.mark.parametrize("lam", [1.0, 2.0 + 1.0j, 0.5])
def test_kernels_reach_epsilon_on_scalars(kind, epsilon, lam):
    kernel = lchs.select_kernel_parameters(kind, complex(lam).real, epsilon)
    value = lchs.series_for(kernel).scalar_sum(lam)
    assert abs(value - np.exp(-lam)) <= epsilon


@pytest.mark.parametrize("kernel", [
    CbmdParams(m=4, a=2.0, K=20, epsilon1=1e-3),
    OriginalKernel(a=3.0, K=40),
    ImprovedKernel(a=3.0, K=40, beta=0.8),
    OptimalKernel(a=5.0, K=25, c=1.0, gamma=2.0),
])
def test_tail_bound_covers_window(kernel):
    far = 400 * kernel.K
    ks = np.arange(kernel.K + 1, far + 1)
    window = np.sum(np.abs(lchs.kernel_coefficients(kernel, ks))) + np.sum(np.abs(lchs.kernel_coefficients(kernel, -ks)))
    assert window <= lchs.tail_weight_bound(kernel)


def test_tail_bound_accepts_arrays():
    kernel = OriginalKernel(a=3.0, K=40)
    bounds = lchs.tail_weight_bound(kernel, np.array([10, 40, 160]))
    assert bounds.shape == (3,)
    assert np.all(np.diff(bounds) < 0)
    assert bounds[1] == pytest.approx(lchs.tail_weight_bound(kernel))


def test_optimal_amplification_weight():
    kernel = lchs.select_kernel_parameters("optimal", 1.0, 1e-3)
    assert lchs.optimal_amplification_weight(kernel) == pytest.approx(lchs.series_for(kernel).total_weight)


def _untruncated_improved_sum(a: float, beta: float, lam: complex) -> complex:
    K = 64
    while lchs.tail_weight_bound(ImprovedKernel(a=a, K=K, beta=beta)) > 1e-11:
        K *= 2
    return lchs.improved_series(a, beta, K).scalar_sum(lam)


def test_improved_identity_closes_with_remainder():
    a, beta = 3.0, 0.8
    remainder = lchs.improved_remainder_scalar(a, beta, 1.0)
    assert abs(math.exp(-1) - _untruncated_improved_sum(a, beta, 1.0) - remainder) <= 1e-8


def test_improved_remainder_at_zero():
    a, beta = 2.0, 0.8
    remainder = lchs.improved_remainder_scalar(a, beta, 0.0)
    assert abs(1.0 - _untruncated_improved_sum(a, beta, 0.0) - remainder) <= 1e-8


def test_improved_remainder_shrinks_with_a():
    sizes = [abs(lchs.improved_remainder_scalar(a, 0.8, 1.0)) for a in (2.0, 3.0, 4.0, 5.0)]
    assert all(later < earlier for earlier, later in zip(sizes, sizes[1:]))


def test_improved_remainder_needs_dissipative_scalar():
    with pytest.raises(HypothesisViolation):
        lchs.improved_remainder_scalar(3.0, 0.8, -0.5)


def test_minimal_truncation_ordering_and_scaling():
    original_4 = lchs.minimal_truncation("original", 1.0, 1.0, 1e-4)
    original_6 = lchs.minimal_truncation("original", 1.0, 1.0, 1e-6)
    cbmd_4 = lchs.minimal_truncation("cbmd", 1.0, 1.0, 1e-4)
    cbmd_6 = lchs.minimal_truncation("cbmd", 1.0, 1.0, 1e-6)
    assert cbmd_4 < original_4
    assert original_6 / original_4 >= 50
    assert cbmd_6 / cbmd_4 <= 4


@pytest.mark.parametrize("kind", ["improved", "optimal"])
def test_minimal_truncation_other_kernels(kind):
    K = lchs.minimal_truncation(kind, 1.0, 1.0, 1e-4)
    kernel = lchs.select_kernel_parameters(kind, 1.0, 1e-4)
    assert 0 < K <= 4 * kernel.K

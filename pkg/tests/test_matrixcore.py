import math
import sys

sys.path.append(".")

import numpy as np
import pytest
from dotenv import load_dotenv

load_dotenv()

from src.core.matrixcore import (
    GeneratorSpec,
    MidpointPropagator,
    as_matrix,
    evolution_norm_bound,
    expm,
    hermitian_evolutions,
    hermitian_split,
    required_steps,
    spectral_norm,
    spectral_profile,
    time_ordered_exp,
)
from src.utils.errors import InvalidGenerator, InvalidMatrix, NormTooLarge, StepTooCoarse

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def noncommuting_generator() -> GeneratorSpec:
    times = np.array([0.0, 0.5, 1.0])
    L0 = np.array([[1.0, 0.2], [0.2, 0.5]])
    return GeneratorSpec.time_sampled(times, np.stack([L0 + 1j * (0.5 * SIGMA_X + 0.3 * t * SIGMA_Z) for t in times]))


def taylor_expm(M: np.ndarray, terms: int = 200) -> np.ndarray:
    result = np.eye(M.shape[0], dtype=complex)
    term = np.eye(M.shape[0], dtype=complex)
    for j in range(1, terms):
        term = term @ M / j
        result = result + term
    return result


def test_hermitian_split_reconstructs(rng):
    A = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    split = hermitian_split(A)
    assert np.allclose(split.H, split.H.conj().T, atol=0)
    assert np.allclose(split.L, split.L.conj().T, atol=0)
    assert spectral_norm(split.matrix - A) <= 1e-12 * spectral_norm(A)


def test_hermitian_split_of_scalar():
    split = hermitian_split(2.0 + 3.0j)
    assert split.L[0, 0] == pytest.approx(2.0)
    assert split.H[0, 0] == pytest.approx(3.0)


@pytest.mark.parametrize("bad", [[[1.0, 2.0]], [[np.nan]], np.zeros((0, 0)), "abc"])
def test_as_matrix_rejects(bad):
    with pytest.raises(InvalidMatrix):
        as_matrix(bad)


def test_spectral_norm_matches_svd(rng):
    A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    assert spectral_norm(A) == pytest.approx(np.linalg.norm(A, 2), rel=1e-12)


def test_expm_matches_taylor(rng):
    for _ in range(5):
        M = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        M *= 3.0 / np.linalg.norm(M, 2)
        E = expm(M)
        assert np.linalg.norm(E - taylor_expm(M), 2) <= 1e-11 * max(1.0, np.linalg.norm(E, 2))


def test_expm_scalar_and_zero():
    assert expm([[1.0]])[0, 0] == pytest.approx(math.e, rel=1e-14)
    assert np.allclose(expm(np.zeros((3, 3))), np.eye(3))


def test_expm_refuses_huge_norm():
    with pytest.raises(NormTooLarge):
        expm(2000.0 * np.eye(2))


def test_generator_validation():
    with pytest.raises(InvalidGenerator):
        GeneratorSpec.time_sampled([0.5, 1.0], np.stack([np.eye(2), np.eye(2)]))
    with pytest.raises(InvalidGenerator):
        GeneratorSpec.time_sampled([0.0, 0.6, 0.5], np.stack([np.eye(2)] * 3))
    with pytest.raises(InvalidGenerator):
        GeneratorSpec.constant(np.eye(2), 0.0)


def test_matrix_at_interpolates_linearly():
    gen = GeneratorSpec.time_sampled([0.0, 1.0], np.array([[[1.0]], [[3.0]]]))
    assert gen.matrix_at(0.25)[0, 0] == pytest.approx(1.5)
    assert gen.matrix_at(1.0)[0, 0] == pytest.approx(3.0)


def test_spectral_profile_constant_closed_form():
    profile = spectral_profile(GeneratorSpec.constant(np.diag([5.0, 6.0]), 2.0))
    assert profile.eta_min == pytest.approx(10.0)
    assert profile.eta_max == pytest.approx(12.0)
    assert profile.alpha_d == pytest.approx(1.0)
    assert np.allclose(profile.alpha_min_t, [5.0, 5.0])
    assert profile.gamma_max == pytest.approx(math.exp(12.0))


def test_spectral_profile_time_sampled():
    gen = GeneratorSpec.time_sampled([0.0, 1.0], np.array([[[1.0]], [[2.0]]]))
    assert spectral_profile(gen).eta_max == pytest.approx(1.5)
    assert spectral_profile(gen, quadrature="midpoint").eta_max == pytest.approx(1.5)


def test_constant_time_ordered_exp_is_expm(random_generator):
    A = random_generator(3)
    split = hermitian_split(A)
    z = 0.3 + 0.2j
    expected = expm(-(z * split.L + 1j * split.H) * 1.5)
    U = time_ordered_exp(GeneratorSpec.constant(A, 1.5), z, steps=7)
    assert np.linalg.norm(U - expected, 2) <= 1e-10


def test_commuting_scalar_profile_closed_form():
    gen = GeneratorSpec.time_sampled([0.0, 1.0], np.stack([np.eye(2), 2.0 * np.eye(2)]))
    U = time_ordered_exp(gen, 1.0, steps=8)
    assert np.allclose(U, math.exp(-1.5) * np.eye(2), atol=1e-13)


def test_midpoint_rule_is_second_order():
    gen = noncommuting_generator()
    z = 0.7 + 0.4j
    reference = time_ordered_exp(gen, z, steps=320)
    coarse = np.linalg.norm(time_ordered_exp(gen, z, steps=16) - reference, 2)
    fine = np.linalg.norm(time_ordered_exp(gen, z, steps=32) - reference, 2)
    assert coarse / fine >= 3.5


def test_anti_hermitian_generator_stays_unitary():
    gen = noncommuting_generator()
    steps = 64
    U = time_ordered_exp(gen, 0.7j, steps=steps)
    assert np.linalg.norm(U.conj().T @ U - np.eye(2), 2) <= steps * 1e-13


def test_step_too_coarse():
    gen = GeneratorSpec.time_sampled([0.0, 1.0], np.stack([5.0 * np.eye(2), 5.0 * np.eye(2)]))
    with pytest.raises(StepTooCoarse):
        MidpointPropagator(gen, 1)(1.0)
    steps = required_steps(gen, 1.0, 1)
    assert np.allclose(MidpointPropagator(gen, steps)(1.0), math.exp(-5.0) * np.eye(2))


def test_hermitian_evolutions_match_propagator(random_generator, rng):
    A = random_generator(3)
    split = hermitian_split(A)
    u0 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    ks = np.array([-40.0, -1.5, 0.0, 2.25, 17.0])
    rows = hermitian_evolutions(split.H, split.L, ks, 1.0, u0, chunk=2)
    propagator = MidpointPropagator(GeneratorSpec.constant(A, 1.0))
    for k, row in zip(ks, rows):
        assert np.allclose(row, propagator(1j * k) @ u0, atol=1e-12)


def test_batched_stepping_matches_propagator(rng):
    gen = noncommuting_generator()
    propagator = MidpointPropagator(gen, 48)
    u0 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    ks = np.array([-6.0, -0.5, 0.0, 1.25, 4.0])
    rows = propagator.evolve_hermitian(ks, u0, chunk=2)
    for k, row in zip(ks, rows):
        assert np.allclose(row, propagator(1j * k) @ u0, atol=1e-12)
    assert np.allclose(np.linalg.norm(rows, axis=1), np.linalg.norm(u0), atol=1e-12)


def test_unitary_steps_skip_norm_guard():
    gen = GeneratorSpec.time_sampled([0.0, 1.0], np.stack([5.0 * np.eye(2), 5.0 * np.eye(2)]))
    U = MidpointPropagator(gen, 1)(3.0j)
    assert np.allclose(U, np.exp(-15.0j) * np.eye(2), atol=1e-12)


def test_evolution_norm_bound_trivial_cases():
    scalar = spectral_profile(GeneratorSpec.constant([[1.0]], 1.0))
    assert evolution_norm_bound(0.0, scalar) == 1.0
    assert evolution_norm_bound(2.0, scalar) == pytest.approx(math.exp(2.0))
    direct = abs(MidpointPropagator(GeneratorSpec.constant([[1.0]], 1.0))(-2.0)[0, 0])
    assert direct == pytest.approx(evolution_norm_bound(2.0, scalar), rel=1e-13)


def test_evolution_norm_bound_holds(random_generator, rng):
    for _ in range(100):
        gen = GeneratorSpec.constant(random_generator(4), 1.0)
        z = complex(*rng.uniform(-2.0, 2.0, size=2))
        measured = np.linalg.norm(MidpointPropagator(gen)(-z), 2)
        assert measured <= evolution_norm_bound(z, spectral_profile(gen)) * (1 + 1e-10)

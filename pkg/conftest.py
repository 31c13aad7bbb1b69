import sys

sys.path.append(".")

import numpy as np
import pytest
from dotenv import load_dotenv

load_dotenv()

from src.utils.utils import seeded_rng


@pytest.fixture
def rng(request) -> np.random.Generator:
    return seeded_rng(1234, request.node.name)


def _hermitian(rng: np.random.Generator, dim: int, norm: float = 1.0) -> np.ndarray:
    C = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    H = 0.5 * (C + C.conj().T)
    return norm * H / np.linalg.norm(H, 2)


def _psd(rng: np.random.Generator, dim: int, norm: float = 1.0) -> np.ndarray:
    B = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    L = B @ B.conj().T
    return norm * L / np.linalg.norm(L, 2)


@pytest.fixture
def random_hermitian(rng):
    """Factory: random_hermitian(dim, norm=1.0) with spectral norm exactly `norm`."""
    return lambda dim, norm=1.0: _hermitian(rng, dim, norm)


@pytest.fixture
def random_psd(rng):
    return lambda dim, norm=1.0: _psd(rng, dim, norm)


@pytest.fixture
def random_generator(rng):
    """Factory for A = L + iH with PSD L and ||L|| = ||H|| = norm."""
    return lambda dim, norm=1.0: _psd(rng, dim, norm) + 1j * _hermitian(rng, dim, norm)

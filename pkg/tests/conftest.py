import numpy as np
import pytest

from schmidtkit.hilbert import BipartiteDims, BipartitePureState, Observable
from schmidtkit.se_solver import SolverConfig


def schmidt_diagonal_state(coeffs, dims):
    """State sum_k c_k |k,k> with the given (unnormalized) coefficients."""
    dims = BipartiteDims(*dims) if not isinstance(dims, BipartiteDims) else dims
    c = np.asarray(coeffs, dtype=complex)
    c = c / np.linalg.norm(c)
    amps = np.zeros(dims.total, dtype=complex)
    for k, ck in enumerate(c):
        amps[k * dims.d2 + k] = ck
    return BipartitePureState(dims, amps)


def random_hermitian(dims, seed, spectral_norm=1.0):
    dims = BipartiteDims(*dims) if not isinstance(dims, BipartiteDims) else dims
    rng = np.random.default_rng(seed)
    n = dims.total
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m = (m + m.conj().T) / 2
    m *= spectral_norm / np.abs(np.linalg.eigvalsh(m)).max()
    return Observable(dims, m)


def singlet():
    amps = np.zeros(4, dtype=complex)
    amps[0 * 2 + 1] = 1 / np.sqrt(2)
    amps[1 * 2 + 0] = -1 / np.sqrt(2)
    return BipartitePureState(BipartiteDims(2, 2), amps)


@pytest.fixture
def cfg():
    return SolverConfig(seed=11)


@pytest.fixture
def fast_cfg():
    return SolverConfig(seed=11, restarts=24)

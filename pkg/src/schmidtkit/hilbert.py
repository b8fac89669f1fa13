"""Finite-dimensional bipartite Hilbert-space arithmetic.

States and operators on H = H1 (x) H2 with the composite basis index
``i*d2 + j`` for ``|i,j>``.  All values are immutable after construction
and every operation is a pure function, so shared read-only use is safe.

Validation happens once, at construction; operations assume validated
inputs and fail fast on dimension mismatches.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InvalidStateError

HERMITICITY_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
NORM_TOL = 1e-12
SCHMIDT_CUTOFF = 1e-10


def _frozen(a):
    # always copy: freezing a caller-owned buffer in place would leak the
    # immutability out of the constructor
    a = np.array(a, order="C")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BipartiteDims:
    """Dimensions (d1, d2) of the two tensor factors."""

    d1: int
    d2: int

    def __post_init__(self):
        if int(self.d1) < 1 or int(self.d2) < 1:
            raise InvalidStateError(f"dimensions must be >= 1, got ({self.d1}, {self.d2})")
        object.__setattr__(self, "d1", int(self.d1))
        object.__setattr__(self, "d2", int(self.d2))

    @property
    def total(self):
        return self.d1 * self.d2

    @property
    def rank_limit(self):
        return min(self.d1, self.d2)


def _as_dims(dims):
    if isinstance(dims, BipartiteDims):
        return dims
    d1, d2 = dims
    return BipartiteDims(d1, d2)


@dataclass(frozen=True)
class BipartitePureState:
    """Normalized state vector on H1 (x) H2.

    ``amplitudes[i*d2 + j]`` is the coefficient of ``|i,j>``.
    """

    dims: BipartiteDims
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != self.dims.total:
            raise DimensionMismatchError(
                f"amplitude vector has length {amps.size}, expected {self.dims.total}"
            )
        if not np.all(np.isfinite(amps)):
            raise InvalidStateError("non-finite amplitude in state vector")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(
                f"state norm deviates from 1 by {abs(norm - 1.0):.3e} (tolerance {NORM_TOL})"
            )
        object.__setattr__(self, "amplitudes", _frozen(amps))

    def as_matrix(self):
        """Amplitudes reshaped to the (d1, d2) coefficient matrix."""
        return self.amplitudes.reshape(self.dims.d1, self.dims.d2)

    def projector(self):
        """Density operator |psi><psi|."""
        return DensityOperator(self.dims, np.outer(self.amplitudes, self.amplitudes.conj()))


def _check_hermitian(matrix, what):
    dev = np.max(np.abs(matrix - matrix.conj().T))
    if dev > HERMITICITY_TOL:
        raise InvalidStateError(
            f"{what} is not Hermitian: max elementwise deviation {dev:.3e} "
            f"(tolerance {HERMITICITY_TOL})"
        )


@dataclass(frozen=True)
class DensityOperator:
    """Trace-one positive-semidefinite operator on the composite space."""

    dims: BipartiteDims
    matrix: np.ndarray

    def __post_init__(self):
        n = self.dims.total
        mat = np.asarray(self.matrix, dtype=np.complex128)
        if mat.shape != (n, n):
            raise DimensionMismatchError(f"matrix shape {mat.shape}, expected ({n}, {n})")
        _check_hermitian(mat, "density matrix")
        tr = mat.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(
                f"density trace deviates from 1 by {abs(tr - 1.0):.3e} (tolerance {TRACE_TOL})"
            )
        min_eig = float(np.linalg.eigvalsh((mat + mat.conj().T) / 2.0).min())
        if min_eig < -PSD_TOL:
            raise InvalidStateError(
                f"density has negative eigenvalue {min_eig:.3e} (tolerance {-PSD_TOL})"
            )
        object.__setattr__(self, "matrix", _frozen(mat))


@dataclass(frozen=True)
class Observable:
    """Hermitian operator on the composite space."""

    dims: BipartiteDims
    matrix: np.ndarray

    def __post_init__(self):
        n = self.dims.total
        mat = np.asarray(self.matrix, dtype=np.complex128)
        if mat.shape != (n, n):
            raise DimensionMismatchError(f"matrix shape {mat.shape}, expected ({n}, {n})")
        _check_hermitian(mat, "observable")
        object.__setattr__(self, "matrix", _frozen(mat))


@dataclass(frozen=True)
class SchmidtDecomposition:
    """Schmidt form sum_n c_n |e_n>|f_n> with c_n > 0 nonincreasing."""

    coefficients: np.ndarray
    left_basis: np.ndarray   # rows are |e_n> in H1
    right_basis: np.ndarray  # rows are |f_n> in H2
    rank: int

    def __post_init__(self):
        object.__setattr__(self, "coefficients", _frozen(np.asarray(self.coefficients, float)))
        object.__setattr__(self, "left_basis", _frozen(np.asarray(self.left_basis, complex)))
        object.__setattr__(self, "right_basis", _frozen(np.asarray(self.right_basis, complex)))


@dataclass(frozen=True)
class Ensemble:
    """Convex pure-state decomposition: weights p_k > 0 summing to one."""

    weights: np.ndarray
    members: tuple = field(default_factory=tuple)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size != len(self.members):
            raise DimensionMismatchError(
                f"{w.size} weights for {len(self.members)} ensemble members"
            )
        if np.any(w <= 0):
            raise InvalidStateError("ensemble weights must be positive")
        if abs(w.sum() - 1.0) > TRACE_TOL:
            raise InvalidStateError(
                f"ensemble weights sum deviates from 1 by {abs(w.sum() - 1.0):.3e}"
            )
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "members", tuple(self.members))

    def mix(self):
        """Assemble the density operator sum_k p_k |psi_k><psi_k|."""
        dims = self.members[0].dims
        rho = np.zeros((dims.total, dims.total), dtype=complex)
        for p, psi in zip(self.weights, self.members):
            if psi.dims != dims:
                raise DimensionMismatchError("ensemble members on different spaces")
            rho += p * np.outer(psi.amplitudes, psi.amplitudes.conj())
        return DensityOperator(dims, rho)


def phase_align(vec):
    """Rotate a global phase so the largest-magnitude component is real positive."""
    vec = np.asarray(vec, dtype=complex)
    k = int(np.argmax(np.abs(vec)))
    pivot = vec[k]
    if abs(pivot) == 0.0:
        return vec.copy()
    return vec * (abs(pivot) / pivot)


def schmidt_decompose(state, cutoff=SCHMIDT_CUTOFF):
    """Schmidt decomposition of a bipartite pure state.

    Singular values of the (d1, d2) coefficient matrix give the Schmidt
    coefficients; values at or below ``cutoff`` are dropped and the rank is
    the number retained.
    """
    if cutoff < 0:
        raise InvalidStateError("cutoff must be non-negative")
    mat = state.as_matrix()
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    keep = s > cutoff
    s = s[keep]
    left = u[:, keep].T           # rows |e_n>
    right = vh[keep, :].copy()    # rows |f_n>: amplitudes f_n[j] = conj(V[j, n])
    return SchmidtDecomposition(s, left, right, rank=int(s.size))


def schmidt_reconstruct(dec, dims):
    """Reassemble sum_n c_n |e_n>|f_n> as a raw amplitude vector."""
    dims = _as_dims(dims)
    amps = np.zeros(dims.total, dtype=complex)
    for c, e, f in zip(dec.coefficients, dec.left_basis, dec.right_basis):
        amps += c * np.kron(e, f)
    return amps


def partial_transpose(rho, dims=None):
    """Transpose on subsystem 2: <i,j|out|k,l> = <i,l|in|k,j>.

    Accepts a DensityOperator or a raw matrix (with explicit dims); returns
    a plain Hermitian ndarray, which is in general indefinite.
    """
    if isinstance(rho, DensityOperator):
        dims, mat = rho.dims, rho.matrix
    else:
        dims, mat = _as_dims(dims), np.asarray(rho, dtype=complex)
    d1, d2 = dims.d1, dims.d2
    return (
        mat.reshape(d1, d2, d1, d2).transpose(0, 3, 2, 1).reshape(d1 * d2, d1 * d2).copy()
    )


def partial_trace(op, subsystem, dims):
    """Trace out one subsystem of a composite-space matrix."""
    dims = _as_dims(dims)
    mat = op.matrix if hasattr(op, "matrix") else np.asarray(op, dtype=complex)
    n = dims.total
    if mat.shape != (n, n):
        raise DimensionMismatchError(f"matrix shape {mat.shape}, expected ({n}, {n})")
    t = mat.reshape(dims.d1, dims.d2, dims.d1, dims.d2)
    if subsystem == 2:
        return np.einsum("ajbj->ab", t)
    if subsystem == 1:
        return np.einsum("acad->cd", t)
    raise DimensionMismatchError(f"subsystem must be 1 or 2, got {subsystem!r}")


def phi_r(r, dims):
    """Uniform rank-r state (1/sqrt(r)) sum_k |k,k>."""
    dims = _as_dims(dims)
    if not 1 <= r <= dims.rank_limit:
        raise InvalidStateError(f"rank {r} out of range 1..{dims.rank_limit}")
    amps = np.zeros(dims.total, dtype=complex)
    for k in range(r):
        amps[k * dims.d2 + k] = 1.0 / np.sqrt(r)
    return BipartitePureState(dims, amps)


def swap_witness_V(r, dims):
    """Partial transpose of the phi_r projector: (1/r) sum_{k,l<=r} |k,l><l,k|."""
    dims = _as_dims(dims)
    if not 1 <= r <= dims.rank_limit:
        raise InvalidStateError(f"rank {r} out of range 1..{dims.rank_limit}")
    n = dims.total
    mat = np.zeros((n, n), dtype=complex)
    for k in range(r):
        for l in range(r):
            mat[k * dims.d2 + l, l * dims.d2 + k] = 1.0 / r
    return Observable(dims, mat)


def expectation(rho, obs):
    """tr(rho L) as a real number.

    The imaginary residue of the trace is discarded when it is at most
    1e-10 and rejected otherwise.
    """
    rho_mat = rho.matrix if hasattr(rho, "matrix") else np.asarray(rho, dtype=complex)
    l_mat = obs.matrix if hasattr(obs, "matrix") else np.asarray(obs, dtype=complex)
    if rho_mat.shape != l_mat.shape:
        raise DimensionMismatchError(
            f"operator shapes differ: {rho_mat.shape} vs {l_mat.shape}"
        )
    val = np.trace(rho_mat @ l_mat)
    if abs(val.imag) > 1e-10:
        raise InvalidStateError(f"expectation has imaginary residue {val.imag:.3e}")
    return float(val.real)


def random_pure(dims, seed):
    """Rotation-invariant random pure state (normalized complex Gaussian)."""
    dims = _as_dims(dims)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(dims.total) + 1j * rng.standard_normal(dims.total)
    return BipartitePureState(dims, z / np.linalg.norm(z))


def random_product_pure(dims, seed):
    """Random product state |a> (x) |b| with each factor Gaussian-normalized."""
    dims = _as_dims(dims)
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(dims.d1) + 1j * rng.standard_normal(dims.d1)
    b = rng.standard_normal(dims.d2) + 1j * rng.standard_normal(dims.d2)
    a /= np.linalg.norm(a)
    b /= np.linalg.norm(b)
    return BipartitePureState(dims, np.kron(a, b))


def random_density(dims, seed, mix_count=4):
    """Convex mix of ``mix_count`` random pure projectors with uniform simplex weights."""
    dims = _as_dims(dims)
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(mix_count))
    rho = np.zeros((dims.total, dims.total), dtype=complex)
    for p in weights:
        z = rng.standard_normal(dims.total) + 1j * rng.standard_normal(dims.total)
        z /= np.linalg.norm(z)
        rho += p * np.outer(z, z.conj())
    rho = (rho + rho.conj().T) / 2.0
    return DensityOperator(dims, rho)


def random_separable_density(dims, seed, mix_count=6):
    """Convex mix of random product projectors (a PPT regression state)."""
    dims = _as_dims(dims)
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(mix_count))
    rho = np.zeros((dims.total, dims.total), dtype=complex)
    for p in weights:
        a = rng.standard_normal(dims.d1) + 1j * rng.standard_normal(dims.d1)
        b = rng.standard_normal(dims.d2) + 1j * rng.standard_normal(dims.d2)
        v = np.kron(a / np.linalg.norm(a), b / np.linalg.norm(b))
        rho += p * np.outer(v, v.conj())
    rho = (rho + rho.conj().T) / 2.0
    return DensityOperator(dims, rho)

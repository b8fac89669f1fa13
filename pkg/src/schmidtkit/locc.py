"""Separable (stochastic local filtering) operations and their subclasses.

An operation is a finite list of local operator pairs (A_i, B_i) acting as
rho -> sum_i (A_i (x) B_i) rho (A_i (x) B_i)^dag, renormalized by its trace.
Class tags mark the subsets used throughout: local unitaries (LU), local
invertibles (LI), local projections (LP), and unconstrained GENERAL.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    AnnihilationError,
    ClassTagError,
    DimensionMismatchError,
    IllConditionedError,
    InputFormatError,
    InvalidStateError,
    RankError,
)
from .hilbert import (
    BipartiteDims,
    BipartitePureState,
    DensityOperator,
    _as_dims,
    _frozen,
    schmidt_decompose,
)
from . import stateio

ANNIHILATION_TOL = 1e-14
CLASS_TOL = 1e-10
MAX_CONDITION = 1e8

LU, LI, LP, GENERAL = "LU", "LI", "LP", "GENERAL"
CLASS_TAGS = (LU, LI, LP, GENERAL)


@dataclass(frozen=True)
class LocalOperatorPair:
    """One Kraus pair (A on H1, B on H2)."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.A, dtype=complex)
        b = np.asarray(self.B, dtype=complex)
        for name, m in (("A", a), ("B", b)):
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise DimensionMismatchError(f"local operator {name} must be square, got {m.shape}")
            if not np.all(np.isfinite(m)):
                raise InvalidStateError(f"local operator {name} has non-finite entries")
        object.__setattr__(self, "A", _frozen(a))
        object.__setattr__(self, "B", _frozen(b))


def _is_unitary(m):
    return np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= CLASS_TOL


def _is_projector(m):
    return (
        np.max(np.abs(m - m.conj().T)) <= CLASS_TOL
        and np.max(np.abs(m @ m - m)) <= CLASS_TOL
    )


def _min_singular(m):
    return float(np.linalg.svd(m, compute_uv=False).min())


@dataclass(frozen=True)
class SeparableOperation:
    """Tagged list of local operator pairs realizing a separable operation."""

    pairs: tuple
    class_tag: str
    dims: BipartiteDims

    def __post_init__(self):
        pairs = tuple(self.pairs)
        if not pairs:
            raise InvalidStateError("operation needs at least one operator pair")
        d1, d2 = self.dims.d1, self.dims.d2
        for p in pairs:
            if p.A.shape != (d1, d1) or p.B.shape != (d2, d2):
                raise DimensionMismatchError(
                    f"pair shapes {p.A.shape}/{p.B.shape} do not match dims ({d1}, {d2})"
                )
        tag = self.class_tag
        if tag not in CLASS_TAGS:
            raise ClassTagError(f"unknown class tag {tag!r}")
        if tag in (LU, LI, LP) and len(pairs) != 1:
            raise ClassTagError(f"{tag} operations consist of a single pair, got {len(pairs)}")
        if tag == LU:
            if not (_is_unitary(pairs[0].A) and _is_unitary(pairs[0].B)):
                raise ClassTagError("LU pair is not unitary within tolerance")
        elif tag == LI:
            s = min(_min_singular(pairs[0].A), _min_singular(pairs[0].B))
            if s <= CLASS_TOL:
                raise ClassTagError(f"LI pair has smallest singular value {s:.3e}")
        elif tag == LP:
            if not (_is_projector(pairs[0].A) and _is_projector(pairs[0].B)):
                raise ClassTagError("LP pair factors are not projectors within tolerance")
        object.__setattr__(self, "pairs", pairs)


def identity_operation(dims):
    dims = _as_dims(dims)
    return SeparableOperation(
        (LocalOperatorPair(np.eye(dims.d1), np.eye(dims.d2)),), LU, dims
    )


def _apply_pair_to_matrix(pair, mat, dims):
    # (A (x) B) rho (A (x) B)^dag without forming the Kronecker product
    d1, d2 = dims.d1, dims.d2
    t = mat.reshape(d1, d2, d1, d2)
    t = np.einsum("ab,cd,bdkl->ackl", pair.A, pair.B, t)
    t = np.einsum("ackl,kb,ld->acbd", t, pair.A.conj().T, pair.B.conj().T)
    return t.reshape(d1 * d2, d1 * d2)


def apply_raw(op, rho_matrix):
    """Unnormalized image sum_i (A_i (x) B_i) rho (A_i (x) B_i)^dag."""
    out = np.zeros_like(rho_matrix, dtype=complex)
    for pair in op.pairs:
        out += _apply_pair_to_matrix(pair, rho_matrix, op.dims)
    return out


def apply(op, rho):
    """Apply and renormalize; raises AnnihilationError when the trace vanishes."""
    if rho.dims != op.dims:
        raise DimensionMismatchError("operation and state dims differ")
    out = apply_raw(op, rho.matrix)
    tr = float(np.real(np.trace(out)))
    if tr <= ANNIHILATION_TOL:
        raise AnnihilationError(f"operation annihilated the state (trace {tr:.3e})")
    out = (out + out.conj().T) / (2.0 * tr)
    return DensityOperator(op.dims, out)


def apply_to_pure(op, psi):
    """Apply a single-pair operation to a pure state, renormalized.

    Single-pair operations map pure states to pure states; multi-pair
    operations require the density form.
    """
    if len(op.pairs) != 1:
        raise ClassTagError("pure-state application needs a single-pair operation")
    if psi.dims != op.dims:
        raise DimensionMismatchError("operation and state dims differ")
    pair = op.pairs[0]
    m = pair.A @ psi.as_matrix() @ pair.B.T
    norm_sq = float(np.linalg.norm(m) ** 2)
    if norm_sq <= ANNIHILATION_TOL:
        raise AnnihilationError(f"operation annihilated the state (trace {norm_sq:.3e})")
    return BipartitePureState(psi.dims, m.reshape(-1) / np.sqrt(norm_sq))


_TAG_RANK = {LU: 0, LI: 1, LP: 1, GENERAL: 2}


def _join_tags(t1, t2):
    # weakest common tag: LU < LI < GENERAL, with LP only below GENERAL
    if t1 == t2:
        return GENERAL if t1 == LP else t1
    if {t1, t2} <= {LU, LI}:
        return LI
    return GENERAL


def compose(op1, op2):
    """Composition op1 after op2: pair list of all products (A1 A2, B1 B2)."""
    if op1.dims != op2.dims:
        raise DimensionMismatchError("cannot compose operations on different spaces")
    pairs = tuple(
        LocalOperatorPair(p1.A @ p2.A, p1.B @ p2.B)
        for p1 in op1.pairs
        for p2 in op2.pairs
    )
    return SeparableOperation(pairs, _join_tags(op1.class_tag, op2.class_tag), op1.dims)


def invert(op):
    """Inverse of a local-invertible operation."""
    if op.class_tag != LI and op.class_tag != LU:
        raise ClassTagError(f"only LI (or LU) operations are invertible, got {op.class_tag}")
    pair = op.pairs[0]
    for name, m in (("A", pair.A), ("B", pair.B)):
        cond = np.linalg.cond(m)
        if cond > MAX_CONDITION:
            raise IllConditionedError(f"factor {name} has condition number {cond:.3e}")
    inv_pair = LocalOperatorPair(np.linalg.inv(pair.A), np.linalg.inv(pair.B))
    return SeparableOperation((inv_pair,), op.class_tag, op.dims)


def local_filter_T(U1, U2, lambdas, r, dims):
    """Invertible local filter mapping phi_r to the state with Schmidt
    coefficients ``lambdas`` in the rotated bases U1, U2.

    The diagonal factor is sqrt(r)*lambda_k on the first r basis states; the
    remaining diagonal entries repeat the last coefficient so the factor
    stays invertible on the full space.
    """
    dims = _as_dims(dims)
    lam = np.asarray(lambdas, dtype=float).reshape(-1)
    if lam.size != r:
        raise DimensionMismatchError(f"expected {r} coefficients, got {lam.size}")
    if np.any(lam <= 0):
        raise InvalidStateError("filter coefficients must be positive")
    if r > dims.rank_limit:
        raise InvalidStateError(f"rank {r} exceeds min dims {dims.rank_limit}")
    if abs(np.sum(lam**2) - 1.0) > 1e-10:
        raise InvalidStateError(
            f"squared coefficients sum deviates from 1 by {abs(np.sum(lam**2) - 1.0):.3e}"
        )
    diag = np.full(dims.d1, np.sqrt(r) * lam[-1], dtype=complex)
    diag[:r] = np.sqrt(r) * lam
    t1 = np.asarray(U1, dtype=complex) @ np.diag(diag)
    t2 = np.asarray(U2, dtype=complex)
    return SeparableOperation((LocalOperatorPair(t1, t2),), LI, dims)


def truncation_projection(r, dims):
    """Local projection (sum_{k<r} |k><k|) (x) I2."""
    dims = _as_dims(dims)
    if not 1 <= r <= dims.d1:
        raise InvalidStateError(f"projector rank {r} out of range 1..{dims.d1}")
    p1 = np.zeros((dims.d1, dims.d1), dtype=complex)
    for k in range(r):
        p1[k, k] = 1.0
    return SeparableOperation((LocalOperatorPair(p1, np.eye(dims.d2)),), LP, dims)


def generator_kraus(generator, ensemble):
    """Kraus pairs turning a rank-r generator into a given ensemble.

    Pair k maps the generator to sqrt(p_k) |psi_k>: written in the Schmidt
    bases, A_k = sum_m (sqrt(p_k) mu_m / lam_m) |g_m><e_m| and
    B_k = sum_m |h_m><f_m|, with m running over the member's rank.
    """
    dims = generator.dims
    gen_dec = schmidt_decompose(generator)
    r = gen_dec.rank
    pairs = []
    for p_k, member in zip(ensemble.weights, ensemble.members):
        if member.dims != dims:
            raise DimensionMismatchError("ensemble member dims differ from generator")
        mem_dec = schmidt_decompose(member)
        if mem_dec.rank > r:
            raise RankError(
                f"ensemble member rank {mem_dec.rank} exceeds generator rank {r}"
            )
        a = np.zeros((dims.d1, dims.d1), dtype=complex)
        b = np.zeros((dims.d2, dims.d2), dtype=complex)
        for m in range(mem_dec.rank):
            coeff = np.sqrt(p_k) * mem_dec.coefficients[m] / gen_dec.coefficients[m]
            a += coeff * np.outer(mem_dec.left_basis[m], gen_dec.left_basis[m].conj())
            b += np.outer(mem_dec.right_basis[m], gen_dec.right_basis[m].conj())
        pairs.append(LocalOperatorPair(a, b))
    return SeparableOperation(tuple(pairs), GENERAL, dims)


def haar_unitary(n, rng):
    """Haar-distributed unitary via phase-fixed QR of a Ginibre matrix."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def sample_operation(class_tag, dims, seed):
    """Deterministic random operation of the requested class."""
    dims = _as_dims(dims)
    rng = np.random.default_rng(seed)
    d1, d2 = dims.d1, dims.d2
    if class_tag == LU:
        return SeparableOperation(
            (LocalOperatorPair(haar_unitary(d1, rng), haar_unitary(d2, rng)),), LU, dims
        )
    if class_tag == LI:
        def clamped(n):
            z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            u, s, vh = np.linalg.svd(z)
            return u @ np.diag(np.clip(s, 0.2, 5.0)) @ vh
        return SeparableOperation((LocalOperatorPair(clamped(d1), clamped(d2)),), LI, dims)
    if class_tag == LP:
        def projector(n):
            rank = int(rng.integers(1, n + 1))
            q = haar_unitary(n, rng)[:, :rank]
            return q @ q.conj().T
        return SeparableOperation((LocalOperatorPair(projector(d1), projector(d2)),), LP, dims)
    if class_tag == GENERAL:
        def bounded(n):
            z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            return z / np.linalg.svd(z, compute_uv=False).max()
        n_pairs = int(rng.integers(1, 5))
        pairs = tuple(
            LocalOperatorPair(bounded(d1), bounded(d2)) for _ in range(n_pairs)
        )
        return SeparableOperation(pairs, GENERAL, dims)
    raise ClassTagError(f"unknown class tag {class_tag!r}")


def operation_document(op):
    """Serialize an operation to its file-format dict."""
    return {
        "class": op.class_tag,
        "pairs": [
            {"A": stateio.matrix_to_data(p.A), "B": stateio.matrix_to_data(p.B)}
            for p in op.pairs
        ],
    }


def parse_operation_document(doc):
    """Parse and class-validate an operation document."""
    if not isinstance(doc, dict) or "class" not in doc or "pairs" not in doc:
        raise InputFormatError("operation document needs 'class' and 'pairs' fields")
    tag = doc["class"]
    if tag not in CLASS_TAGS:
        raise InputFormatError(f"class must be one of {CLASS_TAGS}, got {tag!r}")
    raw_pairs = doc["pairs"]
    if not isinstance(raw_pairs, list) or not raw_pairs:
        raise InputFormatError("'pairs' must be a nonempty list")
    pairs = []
    for i, item in enumerate(raw_pairs):
        if not isinstance(item, dict) or "A" not in item or "B" not in item:
            raise InputFormatError(f"pairs[{i}] needs 'A' and 'B' matrices")
        pairs.append(
            LocalOperatorPair(
                stateio.data_to_matrix(item["A"], f"pairs[{i}].A"),
                stateio.data_to_matrix(item["B"], f"pairs[{i}].B"),
            )
        )
    dims = BipartiteDims(pairs[0].A.shape[0], pairs[0].B.shape[0])
    return SeparableOperation(tuple(pairs), tag, dims)


def load_operation(path):
    return parse_operation_document(stateio.load_document(path))


def save_operation(op, path):
    return stateio.dump(operation_document(op), path)

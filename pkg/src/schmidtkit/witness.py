"""Schmidt-number certification and pseudo-/operational measures.

A state has Schmidt number above r exactly when some Hermitian L gives
tr(rho L) > f12_r(L); the certificate computes both sides, cross-checks
the threshold against the brute-force oracle, and reports the margin.
The partial-transpose pseudo-measure and the operational measure replace
their definitions' suprema over all separable operations by documented
parameterized families plus coordinate ascent, so those outputs are
certified lower bounds.
"""

from dataclasses import dataclass, field

import numpy as np

from . import locc
from .errors import AnnihilationError, DimensionMismatchError, InvalidStateError
from .hilbert import expectation, partial_transpose, swap_witness_V
from .se_solver import SolverConfig, f12_r, f_max, oracle_f12_r

CERTIFICATION_THRESHOLD = 1e-7
DEGENERATE_DENOMINATOR = 1e-10

CERTIFIED_ABOVE_R = "CERTIFIED_ABOVE_R"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class WitnessCertificate:
    """Outcome of one witness evaluation against the rank-r threshold."""

    r: int
    observable: object
    f12_r_value: float
    expectation_value: float
    margin: float
    verdict: str
    oracle_value: float
    threshold: float = CERTIFICATION_THRESHOLD


@dataclass(frozen=True)
class OperationalMeasureResult:
    """Normalized usable-entanglement readout for one observable."""

    value: float
    best_operation: object
    f_M: float
    f12_M: float
    raw_supremum: float
    degenerate: bool = False
    samples_used: int = 0


@dataclass(frozen=True)
class EPTSearchConfig:
    """Search family for the partial-transpose pseudo-measure bound."""

    n_li: int = 24
    n_lp: int = 8
    ascent_sweeps: int = 3
    ascent_steps: tuple = (0.3, 0.12, 0.05)
    seed: int = 0


def certify_schmidt_number(rho, L, r, cfg=None, oracle_samples=4000):
    """Proposition-2 style certificate: tr(rho L) vs the rank-r threshold.

    Both the iterative threshold and the independent oracle bound must be
    exceeded by more than the certification margin, so a missed stationary
    point can only make the verdict more conservative, never unsound.
    """
    cfg = cfg or SolverConfig()
    if rho.dims != L.dims:
        raise DimensionMismatchError("state and observable dims differ")
    if not 1 <= r < rho.dims.rank_limit:
        raise InvalidStateError(
            f"certification rank {r} out of range 1..{rho.dims.rank_limit - 1}"
        )
    threshold = f12_r(L, r, cfg)
    oracle = oracle_f12_r(L, r, samples=oracle_samples, seed=cfg.seed)
    value = expectation(rho, L)
    margin = value - threshold
    certified = (
        margin > CERTIFICATION_THRESHOLD
        and value - oracle > CERTIFICATION_THRESHOLD
    )
    return WitnessCertificate(
        r=r,
        observable=L,
        f12_r_value=threshold,
        expectation_value=value,
        margin=margin,
        verdict=CERTIFIED_ABOVE_R if certified else INCONCLUSIVE,
        oracle_value=oracle,
    )


def is_npt(rho):
    """Negativity of the partial transpose: (flag, min eigenvalue, eigenvector)."""
    pt = partial_transpose(rho)
    w, v = np.linalg.eigh(pt)
    return bool(w[0] < -1e-10), float(w[0]), v[:, 0]


def _pt_score(op, rho, v_list):
    out = locc.apply_raw(op, rho.matrix)
    tr = float(np.real(np.trace(out)))
    if tr <= locc.ANNIHILATION_TOL:
        return None
    return max(
        float(-np.real(np.trace(out @ v.matrix))) / tr for v in v_list
    )


def e_pt_lower_bound(rho, search_cfg=None):
    """Lower bound on the partial-transpose pseudo-measure.

    Maximizes -tr[Op(rho) V] / tr Op(rho) over the identity, sampled local
    invertibles and projections, and a coordinate-ascent-refined local
    filter, with the swap-type witness V taken at every rank up to
    min(d1, d2); the result is clamped at zero.  The exact supremum runs
    over all separable operations, so this is a certified lower bound.
    """
    search_cfg = search_cfg or EPTSearchConfig()
    dims = rho.dims
    if dims.rank_limit < 2:
        raise InvalidStateError("both subsystems need dimension >= 2")
    v_list = [swap_witness_V(r, dims) for r in range(1, dims.rank_limit + 1)]
    rng_seed = search_cfg.seed

    candidates = [locc.identity_operation(dims)]
    for k in range(search_cfg.n_li):
        candidates.append(locc.sample_operation(locc.LI, dims, seed=rng_seed + 101 + k))
    for k in range(search_cfg.n_lp):
        candidates.append(locc.sample_operation(locc.LP, dims, seed=rng_seed + 501 + k))

    best_val = -np.inf
    best_op = candidates[0]
    for op in candidates:
        score = _pt_score(op, rho, v_list)
        if score is not None and score > best_val:
            best_val, best_op = score, op

    # coordinate ascent on the entries of the best (or identity) filter
    pair = best_op.pairs[0] if len(best_op.pairs) == 1 else locc.identity_operation(dims).pairs[0]
    t1, t2 = np.array(pair.A, dtype=complex), np.array(pair.B, dtype=complex)

    def score_of(a, b):
        try:
            op = locc.SeparableOperation(
                (locc.LocalOperatorPair(a, b),), locc.GENERAL, dims
            )
        except InvalidStateError:
            return None
        return _pt_score(op, rho, v_list)

    current = score_of(t1, t2)
    if current is None:
        current = best_val
    for sweep in range(search_cfg.ascent_sweeps):
        delta = search_cfg.ascent_steps[min(sweep, len(search_cfg.ascent_steps) - 1)]
        for mat in (t1, t2):
            for idx in np.ndindex(mat.shape):
                for step in (delta, -delta, 1j * delta, -1j * delta):
                    trial = mat[idx]
                    mat[idx] = trial + step
                    trial_score = score_of(t1, t2)
                    if trial_score is not None and trial_score > current + 1e-14:
                        current = trial_score
                    else:
                        mat[idx] = trial
    best_val = max(best_val, current)
    return max(0.0, float(best_val))


def witness_measure_lower_bound(rho, observables, cfg=None):
    """Witness-based measure bound: max over L of tr(rho L) - f12(L), clamped.

    Each caller-supplied observable L induces the normalized witness
    W = f12(L) I - L, which is nonnegative on every separable state.
    """
    cfg = cfg or SolverConfig()
    best = 0.0
    for L in observables:
        val = expectation(rho, L) - f12_r(L, 1, cfg)
        best = max(best, float(val))
    return best


def operational_measure(rho, M, operation_sampler, cfg=None):
    """Usable entanglement of rho for the observable M over a family of
    operations; zero by convention when M cannot distinguish entanglement
    (f(M) equals the separable threshold)."""
    cfg = cfg or SolverConfig()
    fm = f_max(M)
    f12m = f12_r(M, 1, cfg)
    denom = fm - f12m
    if abs(denom) <= DEGENERATE_DENOMINATOR:
        return OperationalMeasureResult(
            value=0.0, best_operation=None, f_M=fm, f12_M=f12m,
            raw_supremum=0.0, degenerate=True, samples_used=0,
        )
    best = -np.inf
    best_op = None
    used = 0
    for op in operation_sampler:
        try:
            transformed = locc.apply(op, rho)
        except AnnihilationError:
            continue
        used += 1
        val = expectation(transformed, M)
        if val > best:
            best, best_op = val, op
    if best_op is None:
        raise AnnihilationError("every sampled operation annihilated the state")
    raw = (best - f12m) / denom
    return OperationalMeasureResult(
        value=float(min(1.0, max(0.0, raw))),
        best_operation=best_op,
        f_M=fm,
        f12_M=f12m,
        raw_supremum=float(raw),
        degenerate=False,
        samples_used=used,
    )


def default_operation_sampler(class_tag, dims, count, seed, include_identity=True):
    """Finite operation family: the identity plus sampled class members."""
    ops = []
    if include_identity:
        ops.append(locc.identity_operation(dims))
    ops.extend(
        locc.sample_operation(class_tag, dims, seed=seed + 7919 * k) for k in range(count)
    )
    return ops

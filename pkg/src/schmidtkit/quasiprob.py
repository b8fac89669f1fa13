"""Quasi-probability decompositions over rank-constrained pure states.

Solving the rank-r stationarity problem for L = rho yields stationary
states chi_k with values lam_k = <chi_k|rho|chi_k>.  Because the Gram
matrix G with entries |<chi_k|chi_l>|^2 is exactly the Frobenius Gram of
the projectors |chi_k><chi_k|, any solution of G p = lam reconstructs the
projection of rho onto the projector span; the minimal-norm least-squares
weights therefore recover rho itself precisely when the discovered
stationary set spans it, which the reconstruction residual certifies.
Negative weights at level r flag Schmidt number above r; the smallest
level with a clean nonnegative distribution reads off the Schmidt number.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .errors import IncompleteBasisError, InvalidStateError
from .hilbert import BipartitePureState, DensityOperator, Observable
from .se_solver import SolverConfig, solve_rse_detailed

RESIDUAL_GATE = 1e-6
NEGATIVITY_TOL = -1e-6
WEIGHT_PRUNE = 1e-12
GRAM_CUTOFF = 1e-10


@dataclass(frozen=True)
class QuasiProbability:
    """Signed weight distribution over rank-<=r stationary states."""

    r: int
    components: tuple           # (BipartitePureState, weight) pairs
    gram: np.ndarray            # |<chi_k|chi_l>|^2
    lambdas: np.ndarray         # <chi_k|rho|chi_k>
    reconstruction_residual: float
    min_weight: float
    complete: bool              # residual within the reconstruction gate
    method: str                 # "least-squares" or "nnls"
    stats: dict = field(default_factory=dict)

    @property
    def weights(self):
        return np.array([w for _, w in self.components])

    @property
    def nonnegative(self):
        return self.min_weight >= NEGATIVITY_TOL


@dataclass(frozen=True)
class Pseudomixture:
    """rho = (1 + mu) sigma - mu sigma', both factors physical states."""

    mu: float
    sigma: DensityOperator
    sigma_prime: DensityOperator | None


@dataclass(frozen=True)
class SchmidtNumberEstimate:
    """Smallest level with a clean nonnegative distribution.

    ``exact`` is False when some level below ``upper`` failed with an
    incomplete basis, leaving the answer in the interval [lower, upper].
    """

    lower: int
    upper: int
    exact: bool
    reports: dict
    flagged_levels: tuple = ()

    @property
    def value(self):
        return self.upper if self.exact else None


def _reconstruction(components, dim):
    out = np.zeros((dim, dim), dtype=complex)
    for state, w in components:
        out += w * np.outer(state.amplitudes, state.amplitudes.conj())
    return out


def build_quasiprob(rho, r, cfg=None):
    """Quasi-probability distribution of rho at level r.

    Runs the stationarity solver with L = rho, solves G p = lam by
    minimal-norm least squares (singular values below 1e-10 of the largest
    are cut), and gates success on the Frobenius reconstruction residual.
    When the least-squares weights dip below the negativity tolerance, a
    nonnegative least-squares pass decides whether a classical
    distribution over the same components exists; a state reconstructed
    with nonnegative weights over rank-<=r projectors has Schmidt number
    at most r by definition, so this keeps separable inputs from being
    flagged through solution-set degeneracy.
    """
    cfg = cfg or SolverConfig()
    dims = rho.dims
    if not 1 <= r <= dims.rank_limit:
        raise InvalidStateError(f"level {r} out of range 1..{dims.rank_limit}")
    report = solve_rse_detailed(Observable(dims, rho.matrix), r, cfg)
    states = [s.state for s in report.solutions]
    lambdas = np.array([s.lam for s in report.solutions])
    k = len(states)
    amps = np.column_stack([s.amplitudes for s in states])
    overlaps = amps.conj().T @ amps
    gram = np.abs(overlaps) ** 2
    weights = np.linalg.pinv(gram, rcond=GRAM_CUTOFF) @ lambdas
    method = "least-squares"

    recon = _reconstruction(list(zip(states, weights)), dims.total)
    residual = float(np.linalg.norm(recon - rho.matrix))
    min_weight = float(weights.min()) if k else 0.0

    if min_weight < NEGATIVITY_TOL:
        # check whether a classical distribution over the same components
        # exists before reporting a negativity
        projs = np.stack(
            [np.outer(s.amplitudes, s.amplitudes.conj()).reshape(-1) for s in states]
        ).T
        m_real = np.vstack([projs.real, projs.imag])
        b_real = np.concatenate([rho.matrix.reshape(-1).real, rho.matrix.reshape(-1).imag])
        nn_weights, nn_err = nnls(m_real, b_real)
        if nn_err <= RESIDUAL_GATE:
            weights = nn_weights
            method = "nnls"
            recon = _reconstruction(list(zip(states, weights)), dims.total)
            residual = float(np.linalg.norm(recon - rho.matrix))
            min_weight = float(weights.min())

    stats = {
        "n_solutions": k,
        "restarts_run": report.restarts_run,
        "restarts_converged": report.restarts_converged,
        "polish_attempted": report.polish_attempted,
        "polish_converged": report.polish_converged,
        "duplicates_merged": report.duplicates_merged,
    }
    return QuasiProbability(
        r=r,
        components=tuple(zip(states, (float(w) for w in weights))),
        gram=gram,
        lambdas=lambdas,
        reconstruction_residual=residual,
        min_weight=min_weight,
        complete=residual <= RESIDUAL_GATE,
        method=method,
        stats=stats,
    )


def estimate_schmidt_number(rho, cfg=None):
    """Scan levels upward for the first clean nonnegative distribution."""
    cfg = cfg or SolverConfig()
    rmax = rho.dims.rank_limit
    reports = {}
    flagged = []
    found = None
    for r in range(1, rmax + 1):
        qp = build_quasiprob(rho, r, cfg)
        reports[r] = qp
        if not qp.complete:
            flagged.append(r)
            continue
        if qp.nonnegative:
            found = r
            break
    if found is None:
        # the top level decomposes via the eigenbasis, so reaching this
        # point means discovery fell short there as well
        return SchmidtNumberEstimate(
            lower=flagged[0] if flagged else rmax,
            upper=rmax,
            exact=False,
            reports=reports,
            flagged_levels=tuple(flagged),
        )
    below = [lvl for lvl in flagged if lvl < found]
    return SchmidtNumberEstimate(
        lower=below[0] if below else found,
        upper=found,
        exact=not below,
        reports=reports,
        flagged_levels=tuple(flagged),
    )


def pseudomixture(qp):
    """Split a complete distribution into its positive and negative parts."""
    if not qp.complete:
        raise IncompleteBasisError(
            f"distribution at level {qp.r} is incomplete "
            f"(residual {qp.reconstruction_residual:.3e})",
            partial=qp,
        )
    kept = [(s, w) for s, w in qp.components if abs(w) > WEIGHT_PRUNE]
    dims = kept[0][0].dims if kept else None
    pos = [(s, w) for s, w in kept if w > 0]
    neg = [(s, -w) for s, w in kept if w < 0]
    mu = float(sum(w for _, w in neg))
    s_pos = _reconstruction(pos, dims.total)
    s_pos = (s_pos + s_pos.conj().T) / 2.0
    sigma = DensityOperator(dims, s_pos / np.real(np.trace(s_pos)))
    sigma_prime = None
    if mu > 0:
        s_neg = _reconstruction(neg, dims.total)
        s_neg = (s_neg + s_neg.conj().T) / 2.0
        sigma_prime = DensityOperator(dims, s_neg / np.real(np.trace(s_neg)))
    return Pseudomixture(mu=mu, sigma=sigma, sigma_prime=sigma_prime)

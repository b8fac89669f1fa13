"""Solver for the rank-r separability stationarity equations.

For a Hermitian observable L and ansatz rank r, stationary points of
<psi_r|L|psi_r> over normalized states psi_r = sum_k |x_k, y_k> satisfy a
coupled pair of generalized eigenvalue equations on the stacked spaces
C^r (x) H1 and C^r (x) H2.  The solver alternates between the two sides:
with one family fixed (and gauged orthonormal) the other side's optimal
update is an ordinary Hermitian eigenproblem, so the tracked value is
nondecreasing along every ascent trajectory.  Random restarts plus
follow-mode polishing of non-maximal eigenpairs discover stationary
points beyond the maximum; the largest stationary value is the witness
threshold f12_r.

``oracle_f12_r`` is an independent brute-force lower bound used to
cross-check the solver; it shares no code with the iteration kernel.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from ._rse_numpy import (
    MODE_ASCENT,
    MODE_FOLLOW,
    block_operator,
    gauge_orthonormalize,
)
from .errors import ConvergenceError, DimensionMismatchError, InvalidStateError
from .hilbert import BipartitePureState, Observable, phase_align

# fidelity above which a polish start would re-discover a known solution
CANDIDATE_SCREEN = 1.0 - 1e-4


@dataclass(frozen=True)
class SolverConfig:
    """Restart/tolerance budget for the stationarity solver.

    ``max_solutions=None`` caps the discovered stationary set at
    4 * (d1*d2)^2 + 16, enough to span the projector space of any
    degenerate solution manifold at desk scale.
    """

    restarts: int = 64
    max_iter: int = 500
    tol_lambda: float = 1e-10
    tol_residual: float = 1e-8
    dedupe_overlap: float = 1.0 - 1e-6
    seed: int = 0
    gram_rank_cutoff: float = 1e-10
    polish_max_iter: int = 150
    collect_candidates: bool = True
    max_solutions: int | None = None

    def __post_init__(self):
        for name in ("tol_lambda", "tol_residual", "gram_rank_cutoff"):
            if getattr(self, name) <= 0:
                raise InvalidStateError(f"{name} must be positive")
        if not 0 < self.dedupe_overlap <= 1:
            raise InvalidStateError("dedupe_overlap must lie in (0, 1]")


@dataclass(frozen=True)
class RankRAnsatz:
    """Ansatz families: psi = sum_k |x_k> (x) |y_k>, assembled norm one.

    The vectors are in general neither orthogonal nor normalized; the
    effective rank may be smaller than requested when Gram degeneracies
    were projected out during the iteration.
    """

    r: int
    x_vectors: np.ndarray
    y_vectors: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x_vectors, dtype=complex)
        y = np.asarray(self.y_vectors, dtype=complex)
        if x.shape[0] != self.r or y.shape[0] != self.r:
            raise DimensionMismatchError("ansatz rank does not match vector count")
        nrm = np.linalg.norm(assemble_state(x, y))
        if abs(nrm - 1.0) > 1e-10:
            raise InvalidStateError(
                f"assembled ansatz norm deviates from 1 by {abs(nrm - 1.0):.3e}"
            )
        object.__setattr__(self, "x_vectors", x)
        object.__setattr__(self, "y_vectors", y)


@dataclass(frozen=True)
class RSESolution:
    """One stationary point: value, ansatz, Gram matrices, and residual."""

    lam: float
    ansatz: RankRAnsatz
    gram_x: np.ndarray
    gram_y: np.ndarray
    residual: float
    state: BipartitePureState
    n_iter: int
    origin: str  # "ascent" or "polish"


@dataclass
class SolveReport:
    """Solutions plus restart statistics and per-trajectory value traces."""

    solutions: list
    r: int
    restarts_run: int = 0
    restarts_converged: int = 0
    restarts_collapsed: int = 0
    polish_attempted: int = 0
    polish_converged: int = 0
    duplicates_merged: int = 0
    best_residual: float = math.inf
    traces: list = field(default_factory=list)

    @property
    def f12(self):
        return self.solutions[0].lam if self.solutions else None


def assemble_state(x_vectors, y_vectors):
    """Amplitudes of sum_k |x_k> (x) |y_k| (composite index a*d2 + c)."""
    return np.einsum("ka,kc->ac", x_vectors, y_vectors).reshape(-1)


def assemble_blocks(L, side_vectors, side=2):
    """Stacked block operator and Gram matrix for one fixed family.

    With ``side=2`` the vectors live in H2 and the (i, j) block is the
    partial contraction <v_i|L|v_j> acting on H1 (an operator on
    C^r (x) H1); ``side=1`` is the mirrored form.  The returned block
    matrix is Hermitian up to roundoff.
    """
    vecs = np.atleast_2d(np.asarray(side_vectors, dtype=complex))
    if np.any(np.linalg.norm(vecs, axis=1) == 0):
        raise InvalidStateError("side vectors must be nonzero")
    d1, d2 = L.dims.d1, L.dims.d2
    l4 = L.matrix.reshape(d1, d2, d1, d2)
    r = vecs.shape[0]
    if side == 2:
        if vecs.shape[1] != d2:
            raise DimensionMismatchError(f"expected vectors of length {d2}")
        block = np.einsum("ic,acbd,jd->iajb", vecs.conj(), l4, vecs, optimize=True)
        n = r * d1
    elif side == 1:
        if vecs.shape[1] != d1:
            raise DimensionMismatchError(f"expected vectors of length {d1}")
        block = np.einsum("ia,acbd,jb->icjd", vecs.conj(), l4, vecs, optimize=True)
        n = r * d2
    else:
        raise DimensionMismatchError(f"side must be 1 or 2, got {side!r}")
    gram = vecs.conj() @ vecs.T
    return block.reshape(n, n), gram


def _residuals(l4x, l4y, x, y, lam):
    """Euclidean residuals of both stationarity equations."""
    d1, d2 = l4x.shape[0], l4x.shape[1]
    r = x.shape[0]
    block_y = np.einsum("ic,acbd,jd->iajb", y.conj(), l4x, y, optimize=True)
    gram_y = y.conj() @ y.T
    xf = x.reshape(-1)
    res1 = np.linalg.norm(
        block_y.reshape(r * d1, r * d1) @ xf - lam * (np.kron(gram_y, np.eye(d1)) @ xf)
    )
    block_x = np.einsum("ia,cadb,jb->icjd", x.conj(), l4y, x, optimize=True)
    gram_x = x.conj() @ x.T
    yf = y.reshape(-1)
    res2 = np.linalg.norm(
        block_x.reshape(r * d2, r * d2) @ yf - lam * (np.kron(gram_x, np.eye(d2)) @ yf)
    )
    return max(float(res1), float(res2)), gram_x, gram_y


def _finalize(L, l4x, l4y, x, y, n_iter, origin):
    """Normalize, evaluate, and residual-check one iterate."""
    if x.shape[0] == 0:
        return None
    amps = assemble_state(x, y)
    nrm = np.linalg.norm(amps)
    if nrm < 1e-12:
        return None
    amps = amps / nrm
    x = x / nrm
    lam = float(np.real(amps.conj() @ (L.matrix @ amps)))
    residual, gram_x, gram_y = _residuals(l4x, l4y, x, y, lam)
    try:
        ansatz = RankRAnsatz(x.shape[0], x, y)
        state = BipartitePureState(L.dims, amps)
    except InvalidStateError:
        return None
    return RSESolution(lam, ansatz, gram_x, gram_y, residual, state, n_iter, origin)


def _fidelity(a, b):
    return float(abs(np.vdot(a, b)) ** 2)


def _fidelities_against(amp_rows, amps):
    """Fidelities of one amplitude vector against stacked rows."""
    if not len(amp_rows):
        return np.zeros(0)
    return np.abs(np.asarray(amp_rows).conj() @ amps) ** 2


def _amp_sort_key(state):
    aligned = phase_align(state.amplitudes)
    return tuple((round(float(z.real), 12), round(float(z.imag), 12)) for z in aligned)


def _merge(accepted, acc_amps, sol, overlap):
    fids = _fidelities_against(acc_amps, sol.state.amplitudes)
    if fids.size:
        i = int(np.argmax(fids))
        if fids[i] >= overlap:
            if sol.residual < accepted[i].residual:
                accepted[i] = sol
                acc_amps[i] = sol.state.amplitudes
            return False
    accepted.append(sol)
    acc_amps.append(sol.state.amplitudes)
    return True


def _newton_system(l4x, l4y, x, y, lam, want_jacobian):
    """Residual (and real Jacobian) of the full stationarity system.

    Unknowns are (Re x, Im x, Re y, Im y, lam); residuals are both
    stationarity equations (split into real/imaginary parts) plus the
    normalization constraint <psi|psi> = 1.
    """
    d1, d2 = l4x.shape[0], l4x.shape[1]
    r = x.shape[0]
    nx, ny = r * d1, r * d2
    xf, yf = x.reshape(-1), y.reshape(-1)
    gx = x.conj() @ x.T
    gy = y.conj() @ y.T
    w = np.einsum("jb,jd->bd", x, y)  # assembled coefficient matrix

    t1 = np.tensordot(y.conj(), l4x, axes=([1], [1]))  # (i, a, b, d)
    by = np.tensordot(t1, y, axes=([3], [1])).transpose(0, 1, 3, 2).reshape(nx, nx)
    gy_eye = np.kron(gy, np.eye(d1))
    r1 = by @ xf - lam * (gy_eye @ xf)

    t2 = np.tensordot(x.conj(), l4y, axes=([1], [1]))  # (i, c, d, b)
    bx = np.tensordot(t2, x, axes=([3], [1])).transpose(0, 1, 3, 2).reshape(ny, ny)
    gx_eye = np.kron(gx, np.eye(d2))
    r2 = bx @ yf - lam * (gx_eye @ yf)

    r3 = float(np.real(np.sum(gx * gy))) - 1.0
    resid = np.concatenate([r1.real, r1.imag, r2.real, r2.imag, [r3]])
    if not want_jacobian:
        return resid, None

    m1 = by - lam * gy_eye                                     # dR1/dx
    p1 = np.tensordot(t1, x, axes=([2], [1])).transpose(0, 1, 3, 2).reshape(nx, ny)
    q1 = -lam * np.einsum("ie,ma->iame", y.conj(), x).reshape(nx, ny)
    j1y = p1 + q1                                              # dR1/dy
    tw = np.tensordot(l4x, w, axes=([2, 3], [0, 1]))           # (a, c)
    j1yc = np.kron(np.eye(r), tw - lam * w)                    # dR1/dy-conj

    m2 = bx - lam * gx_eye                                     # dR2/dy
    p2 = np.tensordot(t2, y, axes=([2], [1])).transpose(0, 1, 3, 2).reshape(ny, nx)
    q2 = -lam * np.einsum("ie,mc->icme", x.conj(), y).reshape(ny, nx)
    j2x = p2 + q2                                              # dR2/dx
    j2xc = np.kron(np.eye(r), tw.T - lam * w.T)                # dR2/dx-conj

    dr1_dlam = -(gy_eye @ xf)
    dr2_dlam = -(gx_eye @ yf)
    d3x = (gy.T @ x.conj()).reshape(-1)                        # dR3/dx (Wirtinger)
    d3y = (gx.T @ y.conj()).reshape(-1)

    nvar = 2 * nx + 2 * ny + 1
    jac = np.zeros((nvar, nvar))

    # R1 rows: [0, 2*nx); R2 rows: [2*nx, 2*nx+2*ny); R3 last row
    zx = np.zeros_like(m1)
    zy = np.zeros_like(m2)
    blocks = [
        (0, nx, m1, zx, j1y, j1yc, dr1_dlam),
        (2 * nx, ny, j2x, j2xc, m2, zy, dr2_dlam),
    ]
    for row0, n, jx_h, jx_a, jy_h, jy_a, dlam in blocks:
        for (holo, anti, col0, ncols) in (
            (jx_h, jx_a, 0, nx),
            (jy_h, jy_a, 2 * nx, ny),
        ):
            plus, minus = holo + anti, holo - anti
            jac[row0 : row0 + n, col0 : col0 + ncols] = plus.real
            jac[row0 : row0 + n, col0 + ncols : col0 + 2 * ncols] = -minus.imag
            jac[row0 + n : row0 + 2 * n, col0 : col0 + ncols] = plus.imag
            jac[row0 + n : row0 + 2 * n, col0 + ncols : col0 + 2 * ncols] = minus.real
        jac[row0 : row0 + n, -1] = dlam.real
        jac[row0 + n : row0 + 2 * n, -1] = dlam.imag
    jac[-1, :nx] = 2 * d3x.real
    jac[-1, nx : 2 * nx] = -2 * d3x.imag
    jac[-1, 2 * nx : 2 * nx + ny] = 2 * d3y.real
    jac[-1, 2 * nx + ny : 2 * nx + 2 * ny] = -2 * d3y.imag
    return resid, jac


def _newton_polish(l4x, l4y, x0, y0, max_iter=40, tol=1e-11):
    """Damped Gauss-Newton refinement of the full stationarity system.

    The alternating eigen-iteration cannot reach interior saddle points
    (their basins are thin under both selection rules), so candidates that
    fail to convert are handed to a simultaneous solve of both equations
    plus the normalization constraint.
    """
    d1, d2 = l4x.shape[0], l4x.shape[1]
    r = x0.shape[0]
    nx, ny = r * d1, r * d2
    amps = assemble_state(x0, y0)
    nrm = np.linalg.norm(amps)
    if nrm < 1e-12:
        return None
    x = np.array(x0 / nrm)
    y = np.array(y0)
    psi0 = amps / nrm
    lam = float(np.real(psi0.conj() @ (l4x.reshape(d1 * d2, d1 * d2) @ psi0)))

    mu = 1e-3
    resid, jac = _newton_system(l4x, l4y, x, y, lam, True)
    err = np.linalg.norm(resid)
    for _ in range(max_iter):
        if err < tol:
            break
        jtj = jac.T @ jac
        jtf = jac.T @ resid
        stepped = False
        for _ in range(8):
            try:
                dz = np.linalg.solve(jtj + mu * np.diag(np.maximum(np.diag(jtj), 1e-12)), -jtf)
            except np.linalg.LinAlgError:
                return None
            x_t = x + (dz[:nx] + 1j * dz[nx : 2 * nx]).reshape(r, d1)
            y_t = y + (dz[2 * nx : 2 * nx + ny] + 1j * dz[2 * nx + ny : 2 * nx + 2 * ny]).reshape(r, d2)
            lam_t = lam + dz[-1]
            resid_t, jac_t = _newton_system(l4x, l4y, x_t, y_t, lam_t, True)
            err_t = np.linalg.norm(resid_t)
            if err_t < err:
                x, y, lam = x_t, y_t, lam_t
                resid, jac, err = resid_t, jac_t, err_t
                mu = max(mu / 3.0, 1e-12)
                stepped = True
                break
            mu *= 10.0
        if not stepped:
            break
    if err > 1e-9:
        return None
    return x, y


def _probe_candidates(l4x, l4y, x, y, cutoff):
    """Eigenpairs of the converged half-step problems, as polish starts."""
    d1, d2 = l4x.shape[0], l4x.shape[1]
    out = []
    g = gauge_orthonormalize(y, x, cutoff)
    if g is not None:
        y_o, _ = g
        r_eff = y_o.shape[0]
        _, v = np.linalg.eigh(block_operator(l4x, y_o))
        for j in range(v.shape[1]):
            out.append((v[:, j].reshape(r_eff, d1), y_o))
    g = gauge_orthonormalize(x, y, cutoff)
    if g is not None:
        x_o, _ = g
        r_eff = x_o.shape[0]
        _, v = np.linalg.eigh(block_operator(l4y, x_o))
        for j in range(v.shape[1]):
            out.append((x_o, v[:, j].reshape(r_eff, d2)))
    return out


def solve_rse_detailed(L, r, cfg=None):
    """Run the full restart/polish pipeline; returns a SolveReport.

    Each accepted solution satisfies both stationarity equations with
    residual at most ``cfg.tol_residual`` and assembles to a unit state;
    the list is deduplicated by assembled-state fidelity and sorted by
    value (descending), ties broken on phase-aligned amplitudes so the
    output is independent of discovery order.
    """
    cfg = cfg or SolverConfig()
    dims = L.dims
    if not 1 <= r <= dims.rank_limit:
        raise InvalidStateError(f"ansatz rank {r} out of range 1..{dims.rank_limit}")
    d1, d2 = dims.d1, dims.d2
    l4x = np.ascontiguousarray(L.matrix.reshape(d1, d2, d1, d2))
    l4y = np.ascontiguousarray(l4x.transpose(1, 0, 3, 2))
    kernel = backend.iterate_ansatz
    rng = np.random.default_rng(cfg.seed)
    cap = cfg.max_solutions or (4 * dims.total**2 + 16)

    report = SolveReport(solutions=[], r=r)
    accepted = []
    acc_amps = []
    pool = []

    def consider(x, y, trace, origin, mode):
        """Returns (solution, is_new) after a residual-gated merge."""
        sol = _finalize(L, l4x, l4y, x, y, len(trace) // 2, origin)
        if sol is None:
            return None, False
        if sol.residual > cfg.tol_residual:
            # value convergence can stall before the state settles; rerun in
            # the same mode with no value tolerance to saturate the iterate
            x2, y2, trace2, _ = kernel(
                l4x, l4y, sol.ansatz.x_vectors, sol.ansatz.y_vectors,
                mode, cfg.max_iter, 0.0, cfg.gram_rank_cutoff,
            )
            sol2 = _finalize(L, l4x, l4y, x2, y2, sol.n_iter + len(trace2) // 2, origin)
            if sol2 is not None and sol2.residual < sol.residual:
                sol = sol2
        report.best_residual = min(report.best_residual, sol.residual)
        if sol.residual <= cfg.tol_residual:
            if _merge(accepted, acc_amps, sol, cfg.dedupe_overlap):
                return sol, True
            report.duplicates_merged += 1
            return sol, False
        return None, False

    for _ in range(cfg.restarts):
        x0 = rng.standard_normal((r, d1)) + 1j * rng.standard_normal((r, d1))
        y0 = rng.standard_normal((r, d2)) + 1j * rng.standard_normal((r, d2))
        if cfg.collect_candidates and len(pool) < 4 * cap:
            # eigenpairs at the random anchor seed the search for
            # non-maximal stationary points
            pool.extend(_probe_candidates(l4x, l4y, x0, y0, cfg.gram_rank_cutoff))
        x, y, trace, status = kernel(
            l4x, l4y, x0, y0, MODE_ASCENT, cfg.max_iter, cfg.tol_lambda,
            cfg.gram_rank_cutoff,
        )
        report.restarts_run += 1
        report.traces.append(("ascent", trace))
        if status == 2 or x.shape[0] == 0:
            report.restarts_collapsed += 1
            continue
        sol, _ = consider(x, y, trace, "ascent", MODE_ASCENT)
        if sol is not None:
            report.restarts_converged += 1
        if cfg.collect_candidates and len(pool) < 4 * cap:
            pool.extend(_probe_candidates(l4x, l4y, x, y, cfg.gram_rank_cutoff))

    started = []
    newton_budget = 2 * cfg.restarts
    for cx, cy in pool:
        if len(accepted) >= cap:
            break
        amps = assemble_state(cx, cy)
        nrm = np.linalg.norm(amps)
        if nrm < 1e-12:
            continue
        amps = amps / nrm
        if np.any(_fidelities_against(acc_amps, amps) >= CANDIDATE_SCREEN):
            continue
        if np.any(_fidelities_against(started, amps) >= CANDIDATE_SCREEN):
            continue
        started.append(amps)
        report.polish_attempted += 1
        x, y, trace, status = kernel(
            l4x, l4y, cx, cy, MODE_FOLLOW, cfg.polish_max_iter, cfg.tol_lambda,
            cfg.gram_rank_cutoff,
        )
        is_new = False
        if status != 2 and x.shape[0] > 0:
            report.traces.append(("polish", trace))
            sol, is_new = consider(x, y, trace, "polish", MODE_FOLLOW)
            if sol is not None:
                report.polish_converged += 1
        if not is_new and newton_budget > 0:
            # the follow dynamics slid off this candidate; try a direct
            # simultaneous solve, which also reaches interior saddles
            newton_budget -= 1
            refined = _newton_polish(l4x, l4y, cx, cy)
            if refined is not None:
                sol, is_new = consider(refined[0], refined[1], np.zeros(0), "newton", MODE_FOLLOW)
                if is_new:
                    report.polish_converged += 1

    if not accepted:
        raise ConvergenceError(
            f"no restart reached residual {cfg.tol_residual:.1e} "
            f"(best {report.best_residual:.3e})",
            best_residual=report.best_residual,
        )
    accepted.sort(key=lambda s: (-s.lam, _amp_sort_key(s.state)))
    report.solutions = accepted
    return report


def solve_rse(L, r, cfg=None):
    """Stationary points of <psi_r|L|psi_r>, sorted by value (descending)."""
    return solve_rse_detailed(L, r, cfg).solutions


def f12_r(L, r, cfg=None):
    """Largest discovered stationary value: the rank-r witness threshold."""
    return solve_rse_detailed(L, r, cfg).solutions[0].lam


def f_max(L):
    """Largest eigenvalue of L (the unconstrained supremum)."""
    return float(np.linalg.eigvalsh(L.matrix)[-1])


def se_solve_r1(L, cfg=None):
    """Rank-1 special case via the plain alternating eigenvector iteration.

    With both local vectors normalized, each half-step is an ordinary
    Hermitian eigenproblem on one subsystem; results agree with
    ``solve_rse(L, 1, cfg)`` on the maximal value.
    """
    cfg = cfg or SolverConfig()
    d1, d2 = L.dims.d1, L.dims.d2
    l4 = L.matrix.reshape(d1, d2, d1, d2)
    rng = np.random.default_rng(cfg.seed)
    accepted = []
    acc_amps = []
    best_residual = math.inf

    def pick(w, v, prev):
        window = 1e-13 * (1.0 + abs(w[-1]))
        cand = np.nonzero(w >= w[-1] - window)[0]
        if cand.size == 1:
            return int(cand[0])
        overlaps = np.abs(v[:, cand].conj().T @ prev)
        return int(cand[int(np.argmax(overlaps))])

    for _ in range(cfg.restarts):
        a = rng.standard_normal(d1) + 1j * rng.standard_normal(d1)
        b = rng.standard_normal(d2) + 1j * rng.standard_normal(d2)
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        g_prev = None
        g = None
        n_iter = 0
        quiet = 0
        for _ in range(2 * cfg.max_iter):
            n_iter += 1
            lb = np.einsum("c,acbd,d->ab", b.conj(), l4, b, optimize=True)
            w, v = np.linalg.eigh((lb + lb.conj().T) / 2.0)
            a = v[:, pick(w, v, a)]
            la = np.einsum("a,acbd,b->cd", a.conj(), l4, a, optimize=True)
            w, v = np.linalg.eigh((la + la.conj().T) / 2.0)
            sel = pick(w, v, b)
            b = v[:, sel]
            g = float(w[sel])
            if g_prev is not None and abs(g - g_prev) < cfg.tol_lambda:
                # value stalls before the vectors settle; run on until the
                # residual saturates too
                lb = np.einsum("c,acbd,d->ab", b.conj(), l4, b, optimize=True)
                res = max(
                    float(np.linalg.norm(lb @ a - g * a)),
                    float(np.linalg.norm(la @ b - g * b)),
                )
                if res <= cfg.tol_residual or quiet > 40:
                    break
                quiet += 1
            g_prev = g
        lb = np.einsum("c,acbd,d->ab", b.conj(), l4, b, optimize=True)
        la = np.einsum("a,acbd,b->cd", a.conj(), l4, a, optimize=True)
        residual = max(
            float(np.linalg.norm(lb @ a - g * a)),
            float(np.linalg.norm(la @ b - g * b)),
        )
        best_residual = min(best_residual, residual)
        if residual > cfg.tol_residual:
            continue
        x = a.reshape(1, d1)
        y = b.reshape(1, d2)
        amps = assemble_state(x, y)
        sol = RSESolution(
            lam=g,
            ansatz=RankRAnsatz(1, x, y),
            gram_x=np.array([[1.0 + 0j]]),
            gram_y=np.array([[1.0 + 0j]]),
            residual=residual,
            state=BipartitePureState(L.dims, amps),
            n_iter=n_iter,
            origin="ascent",
        )
        _merge(accepted, acc_amps, sol, cfg.dedupe_overlap)
    if not accepted:
        raise ConvergenceError(
            f"no rank-1 restart reached residual {cfg.tol_residual:.1e} "
            f"(best {best_residual:.3e})",
            best_residual=best_residual,
        )
    accepted.sort(key=lambda s: (-s.lam, _amp_sort_key(s.state)))
    return accepted


def oracle_f12_r(L, r, samples=10_000, seed=0):
    """Brute-force lower bound on f12_r: best of many refined random ansaetze.

    Every sample is refined by 50 alternating steps of shifted,
    Gram-preconditioned power ascent; the returned value is the exact
    expectation of a genuine rank-<=r state, hence always a valid lower
    bound.  Independent of the eigensolver pipeline by construction.
    """
    if samples < 1:
        raise InvalidStateError("samples must be >= 1")
    d1, d2 = L.dims.d1, L.dims.d2
    l4 = L.matrix.reshape(d1, d2, d1, d2)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((samples, r, d1)) + 1j * rng.standard_normal((samples, r, d1))
    Y = rng.standard_normal((samples, r, d2)) + 1j * rng.standard_normal((samples, r, d2))
    shift = float(np.abs(np.linalg.eigvalsh(L.matrix)).max()) + 1.0
    eye_r = np.eye(r)[None, :, :]
    eps = 1e-10

    def normalize(X, Y):
        gx = np.einsum("nia,nja->nij", X.conj(), X)
        gy = np.einsum("nic,njc->nij", Y.conj(), Y)
        nrm = np.sqrt(np.maximum(np.real(np.sum(gx * gy, axis=(1, 2))), 1e-300))
        return X / nrm[:, None, None]

    X = normalize(X, Y)
    for step in range(50):
        if step % 2 == 0:
            gy = np.einsum("nic,njc->nij", Y.conj(), Y)
            z = np.einsum("nic,acbd,njd,njb->nia", Y.conj(), l4, Y, X, optimize=True)
            z = z + shift * np.einsum("nij,nja->nia", gy, X)
            X = np.linalg.solve(gy + eps * eye_r, z)
            X = normalize(X, Y)
        else:
            gx = np.einsum("nia,nja->nij", X.conj(), X)
            z = np.einsum("nia,acbd,njb,njd->nic", X.conj(), l4, X, Y, optimize=True)
            z = z + shift * np.einsum("nij,njc->nic", gx, Y)
            Y = np.linalg.solve(gx + eps * eye_r, z)
            X = normalize(X, Y)
    vals = np.einsum(
        "nia,nic,acbd,njb,njd->n", X.conj(), Y.conj(), l4, X, Y, optimize=True
    )
    return float(np.nanmax(np.real(vals)))

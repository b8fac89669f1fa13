"""Pure-numpy kernel for the alternating stationarity iteration.

One iteration fixes the y-side family, solves the resulting Hermitian
eigenproblem on the stacked x-space, then mirrors the step.  Working in
the gauge where the fixed family is orthonormal turns the generalized
eigenproblem into an ordinary one; the gauge change preserves the
assembled state exactly and absorbs rank-deficient families by dropping
their null directions.

The compiled extension (``_rse_kernel``) implements the same contract;
this module is the fallback and the reference for cross-checking.

Status codes: 0 converged, 1 iteration budget exhausted, 2 state collapsed.
"""

import numpy as np

MODE_ASCENT = 0
MODE_FOLLOW = 1

# relative width of the eigenvalue window treated as degenerate; ties are
# broken toward the previous iterate to keep restart diversity on flat
# problems while staying far below the monotonicity slack
DEGENERACY_WINDOW = 1e-13


def gauge_orthonormalize(primary, secondary, cutoff):
    """Re-express the ansatz so the primary family is orthonormal.

    Returns (primary', secondary') with the assembled state unchanged, or
    None when every Gram eigenvalue is at or below ``cutoff`` (collapsed
    state).  Directions below the cutoff are dropped, which reduces the
    effective ansatz rank.
    """
    g = primary.conj() @ primary.T
    w, u = np.linalg.eigh(g)
    keep = w > cutoff
    if not np.any(keep):
        return None
    w = w[keep][::-1]
    u = u[:, keep][:, ::-1]
    root = np.sqrt(w)
    new_primary = (u.T / root[:, None]) @ primary
    new_secondary = (u.conj().T * root[:, None]) @ secondary
    return new_primary, new_secondary


def block_operator(lside, other):
    """Stacked Hermitian operator with (i,j) block <v_i| L |v_j>.

    ``lside`` is the (dp, dq, dp, dq) tensor of L with the updated side's
    indices first; ``other`` holds the fixed family as rows (r, dq).
    """
    r, dq = other.shape
    dp = lside.shape[0]
    h = np.einsum("iq,pqsd,jd->ipjs", other.conj(), lside, other, optimize=True)
    h = h.reshape(r * dp, r * dp)
    return (h + h.conj().T) / 2.0


def _select(w, v, prev_flat, mode):
    if mode == MODE_ASCENT:
        window = DEGENERACY_WINDOW * (1.0 + abs(w[-1]))
        cand = np.nonzero(w >= w[-1] - window)[0]
        if cand.size == 1:
            return int(cand[0])
        overlaps = np.abs(v[:, cand].conj().T @ prev_flat)
        return int(cand[int(np.argmax(overlaps))])
    overlaps = np.abs(v.conj().T @ prev_flat)
    return int(np.argmax(overlaps))


def iterate_ansatz(l4x, l4y, x0, y0, mode, max_iter, tol_lambda, gram_cutoff):
    """Run the alternating iteration from one starting ansatz.

    Returns (x, y, lam_trace, status).  In ascent mode each half-step picks
    the top eigenpair (degenerate ties broken toward the previous iterate)
    and a guard refuses any decrease, so the recorded trace is
    nondecreasing; in follow mode each half-step tracks the eigenvector
    closest to the previous iterate, polishing non-maximal stationary
    points.
    """
    d1 = l4x.shape[0]
    d2 = l4x.shape[1]
    x = np.array(x0, dtype=complex)
    y = np.array(y0, dtype=complex)
    trace = []

    res = gauge_orthonormalize(y, x, gram_cutoff)
    if res is None:
        return x, y, np.array(trace), 2
    y, x = res
    xnorm = np.linalg.norm(x)
    if xnorm <= 1e-150:
        return x, y, np.array(trace), 2
    x = x / xnorm

    lam_cur = None
    lam_prev_iter = None
    quiet = 0
    status = 1
    for _ in range(max_iter):
        # x half-step: y orthonormal here
        h = block_operator(l4x, y)
        w, v = np.linalg.eigh(h)
        sel = _select(w, v, x.reshape(-1), mode)
        if mode == MODE_ASCENT and lam_cur is not None and w[sel] < lam_cur:
            status = 0
            break
        x = v[:, sel].reshape(y.shape[0], d1)
        lam_cur = float(w[sel])
        trace.append(lam_cur)

        res = gauge_orthonormalize(x, y, gram_cutoff)
        if res is None:
            status = 2
            break
        x, y = res

        # y half-step: x orthonormal here
        h = block_operator(l4y, x)
        w, v = np.linalg.eigh(h)
        sel = _select(w, v, y.reshape(-1), mode)
        if mode == MODE_ASCENT and w[sel] < lam_cur:
            status = 0
            break
        y = v[:, sel].reshape(x.shape[0], d2)
        lam_cur = float(w[sel])
        trace.append(lam_cur)

        res = gauge_orthonormalize(y, x, gram_cutoff)
        if res is None:
            status = 2
            break
        y, x = res

        if lam_prev_iter is not None and abs(lam_cur - lam_prev_iter) < tol_lambda:
            quiet += 1
            if quiet >= 2:
                status = 0
                break
        else:
            quiet = 0
        lam_prev_iter = lam_cur

    return x, y, np.array(trace), status

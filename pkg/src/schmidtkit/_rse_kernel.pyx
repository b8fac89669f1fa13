# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel for the alternating stationarity iteration.

Mirrors ``_rse_numpy.iterate_ansatz`` step for step; eigendecompositions
go straight to LAPACK (zheevd) to avoid per-call numpy overhead on the
small matrices that dominate the solver's runtime.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from scipy.linalg.cython_lapack cimport zheevd

cnp.import_array()

MODE_ASCENT = 0
MODE_FOLLOW = 1

cdef int _ASCENT = 0
cdef double DEGENERACY_WINDOW = 1e-13


cdef int _eigh_inplace(double complex[::1] a, int n, double[::1] w,
                       double complex[::1] work, int lwork,
                       double[::1] rwork, int lrwork,
                       int[::1] iwork, int liwork) noexcept nogil:
    # LAPACK reads the row-major buffer as its (column-major) conjugate,
    # which for a Hermitian matrix has the same eigenvalues; eigenvector j
    # of the original matrix is the conjugate of buffer row j afterwards.
    cdef char jobz = b'V'
    cdef char uplo = b'L'
    cdef int info = 0
    cdef int lda = n
    zheevd(&jobz, &uplo, &n, &a[0], &lda, &w[0], &work[0], &lwork,
           &rwork[0], &lrwork, &iwork[0], &liwork, &info)
    return info


cdef void _fill_block(const double complex[:, :, :, ::1] lside,
                      const double complex[:, ::1] other,
                      int r, int dp, int dq,
                      double complex[::1] buf) noexcept nogil:
    # buf <- row-major (r*dp, r*dp) matrix, entry ((i,p),(j,s)) =
    # sum_{q,d} conj(other[i,q]) lside[p,q,s,d] other[j,d]
    cdef int i, j, p, s, q, d
    cdef int n = r * dp
    cdef double complex acc, oiq
    for i in range(r):
        for j in range(r):
            for p in range(dp):
                for s in range(dp):
                    acc = 0
                    for q in range(dq):
                        oiq = other[i, q].conjugate()
                        for d in range(dq):
                            acc = acc + oiq * lside[p, q, s, d] * other[j, d]
                    buf[(i * dp + p) * n + (j * dp + s)] = acc


cdef void _hermitize(double complex[::1] buf, int n) noexcept nogil:
    cdef int i, j
    cdef double complex avg
    for i in range(n):
        for j in range(i, n):
            avg = (buf[i * n + j] + buf[j * n + i].conjugate()) * 0.5
            buf[i * n + j] = avg
            buf[j * n + i] = avg.conjugate()


cdef int _gauge(double complex[:, ::1] primary, double complex[:, ::1] secondary,
                int r, int dprim, int dsec, double cutoff,
                double complex[::1] gbuf, double[::1] gw,
                double complex[:, ::1] out_primary, double complex[:, ::1] out_secondary,
                double complex[::1] work, int lwork,
                double[::1] rwork, int lrwork,
                int[::1] iwork, int liwork) noexcept nogil:
    # Orthonormalize the primary family and transform the secondary one
    # contragrediently so the assembled state is unchanged.  Returns the
    # retained rank (0 = collapsed), with retained directions ordered by
    # descending Gram eigenvalue.
    cdef int i, j, k, m, q, idx, rk
    cdef double complex acc, coeff
    cdef double root
    for i in range(r):
        for j in range(r):
            acc = 0
            for q in range(dprim):
                acc = acc + primary[i, q].conjugate() * primary[j, q]
            gbuf[i * r + j] = acc
    _hermitize(gbuf, r)
    if _eigh_inplace(gbuf, r, gw, work, lwork, rwork, lrwork, iwork, liwork) != 0:
        return -1
    rk = 0
    for k in range(r):
        if gw[k] > cutoff:
            rk += 1
    if rk == 0:
        return 0
    for m in range(rk):
        idx = r - 1 - m  # descending eigenvalue order
        root = sqrt(gw[idx])
        for q in range(dprim):
            acc = 0
            for k in range(r):
                # eigenvector entry u[k, idx] = conj(gbuf[idx*r + k])
                acc = acc + gbuf[idx * r + k].conjugate() * primary[k, q]
            out_primary[m, q] = acc / root
        for q in range(dsec):
            acc = 0
            for k in range(r):
                coeff = gbuf[idx * r + k] * root
                acc = acc + coeff * secondary[k, q]
            out_secondary[m, q] = acc
    return rk


cdef int _select(const double[::1] w, const double complex[::1] hbuf, int n,
                 const double complex[:, ::1] prev, int r, int dp,
                 int mode) noexcept nogil:
    # Eigenvector j of the block operator is conj(hbuf row j); its overlap
    # with the previous iterate is |sum_k hbuf[j*n+k] * prev_flat[k]|.
    cdef int j, k, sel, i, p
    cdef double window, best, mag
    cdef double complex z
    cdef int lo = 0
    if mode == _ASCENT:
        window = DEGENERACY_WINDOW * (1.0 + (w[n - 1] if w[n - 1] >= 0 else -w[n - 1]))
        lo = n - 1
        while lo > 0 and w[lo - 1] >= w[n - 1] - window:
            lo -= 1
        if lo == n - 1:
            return n - 1
    sel = lo
    best = -1.0
    for j in range(lo, n):
        z = 0
        k = 0
        for i in range(r):
            for p in range(dp):
                z = z + hbuf[j * n + k] * prev[i, p]
                k += 1
        mag = z.real * z.real + z.imag * z.imag
        if mag > best:
            best = mag
            sel = j
    return sel


def iterate_ansatz(l4x, l4y, x0, y0, mode, max_iter, tol_lambda, gram_cutoff):
    """Compiled twin of ``_rse_numpy.iterate_ansatz`` (same contract)."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=4] lx = np.ascontiguousarray(l4x, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=4] ly = np.ascontiguousarray(l4y, dtype=np.complex128)
    cdef int d1 = lx.shape[0]
    cdef int d2 = lx.shape[1]
    cdef int r0 = x0.shape[0]
    cdef int cmode = int(mode)
    cdef int cmax_iter = int(max_iter)
    cdef double ctol = float(tol_lambda)
    cdef double cutoff = float(gram_cutoff)

    cdef int nmax = r0 * (d1 if d1 > d2 else d2)
    cdef int lwork = nmax * nmax + 2 * nmax + 8
    cdef int lrwork = 2 * nmax * nmax + 5 * nmax + 8
    cdef int liwork = 5 * nmax + 8

    xa = np.zeros((r0, d1), dtype=np.complex128)
    ya = np.zeros((r0, d2), dtype=np.complex128)
    xa[:, :] = x0
    ya[:, :] = y0
    xb = np.zeros_like(xa)
    yb = np.zeros_like(ya)
    hbuf_arr = np.zeros(nmax * nmax, dtype=np.complex128)
    wbuf_arr = np.zeros(nmax, dtype=np.float64)
    gbuf_arr = np.zeros(r0 * r0, dtype=np.complex128)
    gw_arr = np.zeros(r0, dtype=np.float64)
    work_arr = np.zeros(lwork, dtype=np.complex128)
    rwork_arr = np.zeros(lrwork, dtype=np.float64)
    iwork_arr = np.zeros(liwork, dtype=np.intc)
    trace_arr = np.zeros(2 * cmax_iter, dtype=np.float64)

    cdef double complex[:, ::1] x = xa
    cdef double complex[:, ::1] y = ya
    cdef double complex[:, ::1] x2 = xb
    cdef double complex[:, ::1] y2 = yb
    cdef double complex[::1] hbuf = hbuf_arr
    cdef double[::1] wbuf = wbuf_arr
    cdef double complex[::1] gbuf = gbuf_arr
    cdef double[::1] gw = gw_arr
    cdef double complex[::1] work = work_arr
    cdef double[::1] rwork = rwork_arr
    cdef int[::1] iwork = iwork_arr
    cdef double[::1] trace = trace_arr
    cdef const double complex[:, :, :, ::1] lxv = lx
    cdef const double complex[:, :, :, ::1] lyv = ly

    cdef int r = r0
    cdef int status = 1
    cdef int ntrace = 0
    cdef int it, n, sel, i, p, rk
    cdef double lam_cur = 0.0
    cdef double lam_prev_iter = 0.0
    cdef int have_lam = 0
    cdef int have_prev_iter = 0
    cdef int quiet = 0
    cdef double nrm, dev
    cdef double complex entry

    with nogil:
        # initial gauge: orthonormal y, unit-norm x
        rk = _gauge(y, x, r, d2, d1, cutoff, gbuf, gw, y2, x2,
                    work, lwork, rwork, lrwork, iwork, liwork)
        if rk <= 0:
            status = 2
        else:
            r = rk
            for i in range(r):
                for p in range(d2):
                    y[i, p] = y2[i, p]
                for p in range(d1):
                    x[i, p] = x2[i, p]
            nrm = 0.0
            for i in range(r):
                for p in range(d1):
                    entry = x[i, p]
                    nrm += entry.real * entry.real + entry.imag * entry.imag
            if nrm <= 1e-300:
                status = 2
            else:
                nrm = sqrt(nrm)
                for i in range(r):
                    for p in range(d1):
                        x[i, p] = x[i, p] / nrm

        if status != 2:
            for it in range(cmax_iter):
                # --- x half-step (y orthonormal) ---
                n = r * d1
                _fill_block(lxv, y[:r], r, d1, d2, hbuf)
                _hermitize(hbuf, n)
                if _eigh_inplace(hbuf, n, wbuf, work, lwork, rwork, lrwork, iwork, liwork) != 0:
                    status = 2
                    break
                sel = _select(wbuf, hbuf, n, x[:r], r, d1, cmode)
                if cmode == _ASCENT and have_lam == 1 and wbuf[sel] < lam_cur:
                    status = 0
                    break
                for i in range(r):
                    for p in range(d1):
                        x[i, p] = hbuf[sel * n + i * d1 + p].conjugate()
                lam_cur = wbuf[sel]
                have_lam = 1
                trace[ntrace] = lam_cur
                ntrace += 1

                rk = _gauge(x, y, r, d1, d2, cutoff, gbuf, gw, x2, y2,
                            work, lwork, rwork, lrwork, iwork, liwork)
                if rk <= 0:
                    status = 2
                    break
                r = rk
                for i in range(r):
                    for p in range(d1):
                        x[i, p] = x2[i, p]
                    for p in range(d2):
                        y[i, p] = y2[i, p]

                # --- y half-step (x orthonormal) ---
                n = r * d2
                _fill_block(lyv, x[:r], r, d2, d1, hbuf)
                _hermitize(hbuf, n)
                if _eigh_inplace(hbuf, n, wbuf, work, lwork, rwork, lrwork, iwork, liwork) != 0:
                    status = 2
                    break
                sel = _select(wbuf, hbuf, n, y[:r], r, d2, cmode)
                if cmode == _ASCENT and wbuf[sel] < lam_cur:
                    status = 0
                    break
                for i in range(r):
                    for p in range(d2):
                        y[i, p] = hbuf[sel * n + i * d2 + p].conjugate()
                lam_cur = wbuf[sel]
                trace[ntrace] = lam_cur
                ntrace += 1

                rk = _gauge(y, x, r, d2, d1, cutoff, gbuf, gw, y2, x2,
                            work, lwork, rwork, lrwork, iwork, liwork)
                if rk <= 0:
                    status = 2
                    break
                r = rk
                for i in range(r):
                    for p in range(d2):
                        y[i, p] = y2[i, p]
                    for p in range(d1):
                        x[i, p] = x2[i, p]

                if have_prev_iter == 1:
                    dev = lam_cur - lam_prev_iter
                    if dev < 0:
                        dev = -dev
                    if dev < ctol:
                        quiet += 1
                        if quiet >= 2:
                            status = 0
                            break
                    else:
                        quiet = 0
                lam_prev_iter = lam_cur
                have_prev_iter = 1

    return (
        np.array(xa[:r], dtype=np.complex128),
        np.array(ya[:r], dtype=np.complex128),
        np.array(trace_arr[:ntrace], dtype=np.float64),
        int(status),
    )

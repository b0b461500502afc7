# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: CSS recursion, Nelder-Mead over the CSS objective,
and cyclic Jacobi rotations.

Every routine follows ``_fallback.py`` step for step; keep the two in sync.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, isfinite, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double _RHO = 1.0
cdef double _CHI = 2.0
cdef double _PSI = 0.5
cdef double _SIGMA = 0.5


def css_residuals(x, double c, phi, theta, Py_ssize_t start):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] ph = np.ascontiguousarray(phi, dtype=np.float64)
    cdef double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t p = ph.shape[0]
    cdef Py_ssize_t q = th.shape[0]
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] e = out
    cdef Py_ssize_t t, i, j
    cdef double pred
    for t in range(start, n):
        pred = c
        for i in range(1, p + 1):
            pred += ph[i - 1] * xv[t - i]
        for j in range(1, q + 1):
            if t - j >= 0:
                pred += th[j - 1] * e[t - j]
        e[t] = xv[t] - pred
    return out


cdef double _sse(const double* params, const double* x, double* e, Py_ssize_t n,
                 Py_ssize_t p, Py_ssize_t q, Py_ssize_t start) noexcept nogil:
    cdef Py_ssize_t t, i, j
    cdef double pred, r
    cdef double sse = 0.0
    for t in range(n):
        e[t] = 0.0
    for t in range(start, n):
        pred = params[0]
        for i in range(1, p + 1):
            pred += params[i] * x[t - i]
        for j in range(1, q + 1):
            if t - j >= 0:
                pred += params[p + j] * e[t - j]
        r = x[t] - pred
        e[t] = r
        sse += r * r
    if not isfinite(sse):
        return INFINITY
    return sse


def css_sse(params, x, Py_ssize_t p, Py_ssize_t q, Py_ssize_t start):
    cdef double[::1] pv = np.ascontiguousarray(params, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] e = np.zeros(xv.shape[0], dtype=np.float64)
    return _sse(&pv[0], &xv[0], &e[0], xv.shape[0], p, q, start)


cdef void _sort_simplex(double* sim, double* fs, double* tmp, Py_ssize_t m,
                        Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t i, j, c
    cdef double fk
    for i in range(1, m):
        fk = fs[i]
        for c in range(k):
            tmp[c] = sim[i * k + c]
        j = i - 1
        while j >= 0 and fs[j] > fk:
            fs[j + 1] = fs[j]
            for c in range(k):
                sim[(j + 1) * k + c] = sim[j * k + c]
            j -= 1
        fs[j + 1] = fk
        for c in range(k):
            sim[(j + 1) * k + c] = tmp[c]


def css_nelder_mead(x, Py_ssize_t p, Py_ssize_t q, Py_ssize_t start, x0,
                    double step, double xtol, Py_ssize_t maxiter):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t k = x0v.shape[0]
    cdef Py_ssize_t m = k + 1
    cdef double* sim = <double*> malloc(m * k * sizeof(double))
    cdef double* fs = <double*> malloc(m * sizeof(double))
    cdef double* buf = <double*> malloc(6 * k * sizeof(double) + n * sizeof(double))
    if sim == NULL or fs == NULL or buf == NULL:
        free(sim); free(fs); free(buf)
        raise MemoryError()
    cdef double* xbar = buf
    cdef double* xr = buf + k
    cdef double* xe = buf + 2 * k
    cdef double* xc = buf + 3 * k
    cdef double* tmp = buf + 4 * k
    cdef double* best = buf + 5 * k
    cdef double* e = buf + 6 * k
    cdef const double* xp = &xv[0]
    cdef Py_ssize_t i, j, iterations = 0
    cdef bint converged = False, shrink
    cdef double spread, d, fr, fe, fc, fcc
    try:
        with nogil:
            for j in range(k):
                sim[j] = x0v[j]
            for i in range(k):
                for j in range(k):
                    sim[(i + 1) * k + j] = sim[j]
                sim[(i + 1) * k + i] = sim[(i + 1) * k + i] + step
            for i in range(m):
                fs[i] = _sse(&sim[i * k], xp, e, n, p, q, start)
            _sort_simplex(sim, fs, tmp, m, k)

            while True:
                spread = 0.0
                for i in range(1, m):
                    for j in range(k):
                        d = fabs(sim[i * k + j] - sim[j])
                        if d > spread:
                            spread = d
                if spread <= xtol:
                    converged = True
                    break
                if iterations >= maxiter:
                    break

                for j in range(k):
                    xbar[j] = 0.0
                for i in range(k):
                    for j in range(k):
                        xbar[j] += sim[i * k + j]
                for j in range(k):
                    xbar[j] /= k

                for j in range(k):
                    xr[j] = (1.0 + _RHO) * xbar[j] - _RHO * sim[k * k + j]
                fr = _sse(xr, xp, e, n, p, q, start)
                shrink = False
                if fr < fs[0]:
                    for j in range(k):
                        xe[j] = (1.0 + _RHO * _CHI) * xbar[j] - _RHO * _CHI * sim[k * k + j]
                    fe = _sse(xe, xp, e, n, p, q, start)
                    if fe < fr:
                        for j in range(k):
                            sim[k * k + j] = xe[j]
                        fs[k] = fe
                    else:
                        for j in range(k):
                            sim[k * k + j] = xr[j]
                        fs[k] = fr
                elif fr < fs[k - 1]:
                    for j in range(k):
                        sim[k * k + j] = xr[j]
                    fs[k] = fr
                elif fr < fs[k]:
                    for j in range(k):
                        xc[j] = (1.0 + _PSI * _RHO) * xbar[j] - _PSI * _RHO * sim[k * k + j]
                    fc = _sse(xc, xp, e, n, p, q, start)
                    if fc <= fr:
                        for j in range(k):
                            sim[k * k + j] = xc[j]
                        fs[k] = fc
                    else:
                        shrink = True
                else:
                    for j in range(k):
                        xc[j] = (1.0 - _PSI) * xbar[j] + _PSI * sim[k * k + j]
                    fcc = _sse(xc, xp, e, n, p, q, start)
                    if fcc < fs[k]:
                        for j in range(k):
                            sim[k * k + j] = xc[j]
                        fs[k] = fcc
                    else:
                        shrink = True
                if shrink:
                    for j in range(k):
                        best[j] = sim[j]
                    for i in range(1, m):
                        for j in range(k):
                            sim[i * k + j] = best[j] + _SIGMA * (sim[i * k + j] - best[j])
                        fs[i] = _sse(&sim[i * k], xp, e, n, p, q, start)
                iterations += 1
                _sort_simplex(sim, fs, tmp, m, k)

        out = np.empty(k, dtype=np.float64)
        for j in range(k):
            out[j] = sim[j]
        return out, fs[0], iterations, bool(converged), fs[k] - fs[0]
    finally:
        free(sim)
        free(fs)
        free(buf)


cdef double _sumsq(double[:, ::1] A, bint diag) noexcept nogil:
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t i, j
    cdef double total = 0.0, rowsum
    for i in range(n):
        rowsum = 0.0
        for j in range(n):
            if diag or i != j:
                rowsum += A[i, j] * A[i, j]
        total += rowsum
    return total


def jacobi_eigh(a, double tol, Py_ssize_t max_sweeps):
    Aarr = np.array(a, dtype=np.float64, copy=True, order="C")
    cdef double[:, ::1] A = Aarr
    cdef Py_ssize_t n = A.shape[0]
    Varr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] V = Varr
    cdef double scale = sqrt(_sumsq(A, True))
    cdef Py_ssize_t sweeps = 0, p, q, r
    cdef bint converged = False
    cdef double apq, app, aqq, theta, t, c, s, arp, arq, vp, vq, off, g
    if scale < 1.0:
        scale = 1.0
    with nogil:
        while True:
            off = _sumsq(A, False)
            if sqrt(off) < tol * scale:
                converged = True
                break
            if sweeps >= max_sweeps:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = A[p, q]
                    if apq == 0.0:
                        continue
                    app = A[p, p]
                    aqq = A[q, q]
                    g = 100.0 * fabs(apq)
                    if fabs(app) + g == fabs(app) and fabs(aqq) + g == fabs(aqq):
                        A[p, q] = 0.0
                        A[q, p] = 0.0
                        continue
                    theta = (aqq - app) / (2.0 * apq)
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for r in range(n):
                        arp = A[r, p]
                        arq = A[r, q]
                        A[r, p] = c * arp - s * arq
                        A[r, q] = s * arp + c * arq
                    for r in range(n):
                        A[p, r] = A[r, p]
                        A[q, r] = A[r, q]
                    A[p, p] = app - t * apq
                    A[q, q] = aqq + t * apq
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    for r in range(n):
                        vp = V[r, p]
                        vq = V[r, q]
                        V[r, p] = c * vp - s * vq
                        V[r, q] = s * vp + c * vq
            sweeps += 1
    return np.diag(Aarr).copy(), Varr, sweeps, bool(converged)

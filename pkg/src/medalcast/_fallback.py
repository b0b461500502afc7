"""Pure-Python implementations of the numerical kernels.

These mirror ``_kernels.pyx`` operation for operation so that both
backends follow the same iteration path. They are used when the compiled
extension is unavailable, and as the reference side in the benchmark.
"""

import math

import numpy as np

# Nelder-Mead coefficients (reflection, expansion, contraction, shrink)
_RHO = 1.0
_CHI = 2.0
_PSI = 0.5
_SIGMA = 0.5


def css_residuals(x, c, phi, theta, start):
    """Conditional one-step residuals of an ARMA(p, q) recursion.

    Residuals before ``start`` are zero and act as the pre-sample errors.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    p = len(phi)
    q = len(theta)
    e = [0.0] * n
    for t in range(start, n):
        pred = c
        for i in range(1, p + 1):
            pred += phi[i - 1] * x[t - i]
        for j in range(1, q + 1):
            if t - j >= 0:
                pred += theta[j - 1] * e[t - j]
        e[t] = float(x[t]) - pred
    return np.array(e, dtype=np.float64)


def css_sse(params, x, p, q, start):
    n = len(x)
    e = [0.0] * n
    sse = 0.0
    c = params[0]
    for t in range(start, n):
        pred = c
        for i in range(1, p + 1):
            pred += params[i] * x[t - i]
        for j in range(1, q + 1):
            if t - j >= 0:
                pred += params[p + j] * e[t - j]
        r = x[t] - pred
        e[t] = r
        sse += r * r
    if not math.isfinite(sse):
        return math.inf
    return sse


def _sort_simplex(sim, fs):
    # stable insertion sort keeps equal-valued vertices in place
    m = len(fs)
    for i in range(1, m):
        fk = fs[i]
        vk = sim[i]
        j = i - 1
        while j >= 0 and fs[j] > fk:
            fs[j + 1] = fs[j]
            sim[j + 1] = sim[j]
            j -= 1
        fs[j + 1] = fk
        sim[j + 1] = vk


def css_nelder_mead(x, p, q, start, x0, step, xtol, maxiter):
    """Minimise the CSS objective with a Nelder-Mead simplex.

    Returns ``(params, sse, iterations, converged, fspread)``. Convergence
    means the largest coordinate spread between the best vertex and every
    other vertex fell below ``xtol``; ``fspread`` is the objective gap
    between the worst and best vertex at exit.
    """
    xs = [float(v) for v in np.asarray(x, dtype=np.float64)]
    k = len(x0)
    sim = [[float(v) for v in x0]]
    for i in range(k):
        y = list(sim[0])
        y[i] = y[i] + step
        sim.append(y)
    fs = [css_sse(v, xs, p, q, start) for v in sim]
    _sort_simplex(sim, fs)

    iterations = 0
    converged = False
    while True:
        spread = 0.0
        for i in range(1, k + 1):
            for j in range(k):
                d = abs(sim[i][j] - sim[0][j])
                if d > spread:
                    spread = d
        if spread <= xtol:
            converged = True
            break
        if iterations >= maxiter:
            break

        xbar = [0.0] * k
        for i in range(k):
            for j in range(k):
                xbar[j] += sim[i][j]
        for j in range(k):
            xbar[j] /= k
        worst = sim[k]

        xr = [(1.0 + _RHO) * xbar[j] - _RHO * worst[j] for j in range(k)]
        fr = css_sse(xr, xs, p, q, start)
        shrink = False
        if fr < fs[0]:
            xe = [(1.0 + _RHO * _CHI) * xbar[j] - _RHO * _CHI * worst[j] for j in range(k)]
            fe = css_sse(xe, xs, p, q, start)
            if fe < fr:
                sim[k], fs[k] = xe, fe
            else:
                sim[k], fs[k] = xr, fr
        elif fr < fs[k - 1]:
            sim[k], fs[k] = xr, fr
        elif fr < fs[k]:
            xc = [(1.0 + _PSI * _RHO) * xbar[j] - _PSI * _RHO * worst[j] for j in range(k)]
            fc = css_sse(xc, xs, p, q, start)
            if fc <= fr:
                sim[k], fs[k] = xc, fc
            else:
                shrink = True
        else:
            xcc = [(1.0 - _PSI) * xbar[j] + _PSI * worst[j] for j in range(k)]
            fcc = css_sse(xcc, xs, p, q, start)
            if fcc < fs[k]:
                sim[k], fs[k] = xcc, fcc
            else:
                shrink = True
        if shrink:
            best = sim[0]
            for i in range(1, k + 1):
                sim[i] = [best[j] + _SIGMA * (sim[i][j] - best[j]) for j in range(k)]
                fs[i] = css_sse(sim[i], xs, p, q, start)
        iterations += 1
        _sort_simplex(sim, fs)

    return np.array(sim[0], dtype=np.float64), fs[0], iterations, converged, fs[k] - fs[0]


def _sumsq(A, diag):
    # row-ordered accumulation, matched by the compiled kernel
    total = 0.0
    for i, row in enumerate(A.tolist()):
        rowsum = 0.0
        for j, v in enumerate(row):
            if diag or i != j:
                rowsum += v * v
        total += rowsum
    return total


def jacobi_eigh(a, tol, max_sweeps):
    """Cyclic Jacobi eigenvalue iteration for a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors, sweeps, converged)`` in the
    original diagonal order; callers sort.
    """
    A = np.array(a, dtype=np.float64, copy=True)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(1.0, math.sqrt(_sumsq(A, True)))
    sweeps = 0
    converged = False
    while True:
        if math.sqrt(_sumsq(A, False)) < tol * scale:
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
                g = 100.0 * abs(apq)
                if abs(app) + g == abs(app) and abs(aqq) + g == abs(aqq):
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                arp = A[:, p].copy()
                arq = A[:, q].copy()
                newp = c * arp - s * arq
                newq = s * arp + c * arq
                A[:, p] = newp
                A[p, :] = newp
                A[:, q] = newq
                A[q, :] = newq
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        sweeps += 1
    return np.diag(A).copy(), V, sweeps, converged

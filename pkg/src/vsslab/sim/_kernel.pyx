# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled closed-loop kernel; mirrors ``_kernel_py.run_kernel`` operation by operation."""

from libc.math cimport sqrt, fabs

cdef enum:
    MAXN = 16
    MAXP = 64

cdef double DIVERGE_LIMIT = 1e6


cdef inline double _sg(double v) nogil:
    return <double>((v > 0.0) - (v < 0.0))


cdef void _deriv(int n, const double[:, ::1] a, const double[::1] b, const double[::1] xref,
                 double m_dist, double* xs, double u, const double[::1] fac, double* out) noexcept nogil:
    cdef double acc = 0.0, e, d, c
    cdef int j, l
    for j in range(n):
        e = xs[j] - xref[j]
        acc += e * e
    c = m_dist * sqrt(acc)
    for j in range(n):
        d = 0.0
        for l in range(n):
            d += a[j, l] * xs[l]
        out[j] = d + b[j] * u + c * fac[j]


def run_kernel(p, double[:, ::1] X, double[::1] U, double[::1] SV, double[:, ::1] SI,
               double[:, ::1] V, double[:, ::1] PHI):
    """Fill the output arrays; return the step index of divergence or -1."""
    cdef const double[:, ::1] a = p.a
    cdef const double[::1] b = p.b
    cdef const double[::1] xref = p.xref
    cdef const double[::1] cout = p.cout
    cdef const double[:, ::1] T = p.T
    cdef const double[:, ::1] TA = p.TA
    cdef const double[::1] tb = p.tb
    cdef const double[::1] kk = p.kk
    cdef const double[:, ::1] H = p.H
    cdef const double[::1] G = p.G
    cdef const double[:, :, ::1] dfac = p.dfac
    cdef const double[::1] x0 = p.x0
    cdef double m_ctrl = p.m_ctrl, m_dist = p.m_dist, eps = p.eps, alpha = p.alpha
    cdef double k2 = p.k2, dt = p.dt, filt = p.filt
    cdef int order = p.order
    cdef bint multi = p.multi, use_bank = p.use_bank, reinforced = p.reinforced
    cdef long nsteps = p.nsteps
    cdef int n = a.shape[0], npart = T.shape[0]
    if n > MAXN or npart > MAXP:
        raise ValueError("problem too large for the compiled kernel")

    cdef double x[MAXN]
    cdef double xe[MAXN]
    cdef double xs[MAXN]
    cdef double k1[MAXN]
    cdef double k2s[MAXN]
    cdef double k3[MAXN]
    cdef double k4[MAXN]
    cdef double w[MAXP]
    cdef double pred[MAXP]
    cdef double rf[MAXP]
    cdef double r[MAXP]
    cdef double v[MAXP]
    cdef double s[MAXP]
    cdef double cax[MAXP]
    cdef double up[MAXP]
    cdef double uprev = 0.0, h2 = 0.5 * dt, h6 = dt / 6.0
    cdef double y, total, q, si, ci, big_s, sw, sigma, u, acc, c, yp
    cdef long k, diverged = -1
    cdef int i, j
    cdef bint bad

    for j in range(n):
        x[j] = x0[j]
    for i in range(npart):
        w[i] = 0.0
        pred[i] = 0.0
        rf[i] = 0.0
        r[i] = 0.0
        v[i] = 1.0
        s[i] = 0.0
        cax[i] = 0.0
        up[i] = 0.0

    with nogil:
        for k in range(nsteps + 1):
            for j in range(n):
                xe[j] = x[j] - xref[j]

            if use_bank:
                if k == 0:
                    for i in range(npart):
                        r[i] = 0.0
                else:
                    y = 0.0
                    for j in range(n):
                        y += cout[j] * x[j]
                    for i in range(npart):
                        r[i] = fabs(y - pred[i])
                if filt < 1.0:
                    for i in range(npart):
                        if k == 0:
                            rf[i] = r[i]
                        else:
                            rf[i] = rf[i] + filt * (r[i] - rf[i])
                        r[i] = rf[i]
                if npart == 1:
                    v[0] = 1.0
                else:
                    total = 0.0
                    for i in range(npart):
                        total += r[i]
                    if total == 0.0:
                        for i in range(npart):
                            v[i] = 1.0 / npart
                    else:
                        for i in range(npart):
                            v[i] = (1.0 - r[i] / total) / (npart - 1)
                    if reinforced:
                        total = 0.0
                        for i in range(npart):
                            q = v[i]
                            for j in range(npart):
                                if j != i:
                                    q *= 1.0 - v[j]
                            up[i] = q
                            total += q
                        if total <= 0.0:
                            for i in range(npart):
                                v[i] = 1.0 / npart
                        else:
                            for i in range(npart):
                                v[i] = up[i] / total

            for i in range(npart):
                si = 0.0
                ci = 0.0
                for j in range(n):
                    si += T[i, j] * xe[j]
                    ci += TA[i, j] * xe[j]
                s[i] = si
                cax[i] = ci
            big_s = 0.0
            if multi:
                for i in range(npart):
                    big_s += v[i] * s[i]
            else:
                big_s = s[0]

            for i in range(npart):
                if order == 1:
                    sw = big_s if multi else s[i]
                    up[i] = -(cax[i] + m_ctrl * s[i]) / tb[i] - _sg(tb[i]) * eps * _sg(sw) - kk[i] * s[i]
                else:
                    sigma = cax[i] + tb[i] * uprev + alpha * s[i]
                    w[i] = w[i] - k2 * _sg(sigma) * dt
                    up[i] = -cax[i] / tb[i] + w[i] - kk[i] * s[i]
            u = 0.0
            for i in range(npart):
                u += v[i] * up[i]

            acc = 0.0
            for j in range(n):
                acc += xe[j] * xe[j]
            c = m_dist * sqrt(acc)
            for j in range(n):
                X[k, j] = x[j]
                PHI[k, j] = c * dfac[k, 0, j]
            U[k] = u
            SV[k] = big_s
            for i in range(npart):
                SI[k, i] = s[i]
                V[k, i] = v[i]
            if k == nsteps:
                break

            if use_bank:
                for i in range(npart):
                    yp = 0.0
                    for j in range(n):
                        yp += H[i, j] * x[j]
                    pred[i] = yp + G[i] * u

            _deriv(n, a, b, xref, m_dist, x, u, dfac[k, 0], k1)
            for j in range(n):
                xs[j] = x[j] + h2 * k1[j]
            _deriv(n, a, b, xref, m_dist, xs, u, dfac[k, 1], k2s)
            for j in range(n):
                xs[j] = x[j] + h2 * k2s[j]
            _deriv(n, a, b, xref, m_dist, xs, u, dfac[k, 1], k3)
            for j in range(n):
                xs[j] = x[j] + dt * k3[j]
            _deriv(n, a, b, xref, m_dist, xs, u, dfac[k, 2], k4)
            bad = False
            for j in range(n):
                x[j] = x[j] + h6 * (k1[j] + 2.0 * k2s[j] + 2.0 * k3[j] + k4[j])
                if not fabs(x[j]) < DIVERGE_LIMIT:
                    bad = True
            uprev = u
            if bad:
                diverged = k
                break
    return diverged

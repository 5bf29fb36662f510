"""Pure-Python closed-loop kernel (fallback for the compiled ``_kernel``).

Every arithmetic expression here is mirrored term by term in ``_kernel.pyx``
so both backends produce bit-identical traces.
"""
from __future__ import annotations

import math

DIVERGE_LIMIT = 1e6


def _sg(v):
    return float((v > 0.0) - (v < 0.0))


def run_kernel(p, X, U, SV, SI, V, PHI) -> int:
    """Fill the output arrays; return the step index of divergence or -1."""
    n = p.a.shape[0]
    npart = p.T.shape[0]
    a = p.a.tolist()
    b = p.b.tolist()
    xref = p.xref.tolist()
    cout = p.cout.tolist()
    T = p.T.tolist()
    TA = p.TA.tolist()
    tb = p.tb.tolist()
    kk = p.kk.tolist()
    H = p.H.tolist()
    G = p.G.tolist()
    dfac = p.dfac.tolist()
    m_ctrl = float(p.m_ctrl)
    m_dist = float(p.m_dist)
    eps = float(p.eps)
    alpha = float(p.alpha)
    k2 = float(p.k2)
    dt = float(p.dt)
    order = int(p.order)
    multi = bool(p.multi)
    use_bank = bool(p.use_bank)
    reinforced = bool(p.reinforced)
    filt = float(p.filt)
    nsteps = int(p.nsteps)

    x = p.x0.tolist()
    w = [0.0] * npart
    pred = [0.0] * npart
    rf = [0.0] * npart
    r = [0.0] * npart
    v = [1.0] * npart
    s = [0.0] * npart
    cax = [0.0] * npart
    up = [0.0] * npart
    uprev = 0.0
    h2 = 0.5 * dt
    h6 = dt / 6.0
    rows_x, rows_u, rows_sv, rows_si, rows_v, rows_phi = [], [], [], [], [], []

    def deriv(xs, u, fac):
        acc = 0.0
        for j in range(n):
            e = xs[j] - xref[j]
            acc += e * e
        c = m_dist * math.sqrt(acc)
        out = [0.0] * n
        for j in range(n):
            d = 0.0
            aj = a[j]
            for l in range(n):
                d += aj[l] * xs[l]
            out[j] = d + b[j] * u + c * fac[j]
        return out

    diverged = -1
    for k in range(nsteps + 1):
        xe = [x[j] - xref[j] for j in range(n)]

        if use_bank:
            if k == 0:
                for i in range(npart):
                    r[i] = 0.0
            else:
                y = 0.0
                for j in range(n):
                    y += cout[j] * x[j]
                for i in range(npart):
                    r[i] = abs(y - pred[i])
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
            Ti = T[i]
            TAi = TA[i]
            for j in range(n):
                si += Ti[j] * xe[j]
                ci += TAi[j] * xe[j]
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
        c = m_dist * math.sqrt(acc)
        fac0 = dfac[k][0]
        rows_x.append(list(x))
        rows_u.append(u)
        rows_sv.append(big_s)
        rows_si.append(list(s))
        rows_v.append(list(v))
        rows_phi.append([c * fac0[j] for j in range(n)])
        if k == nsteps:
            break

        if use_bank:
            for i in range(npart):
                yp = 0.0
                Hi = H[i]
                for j in range(n):
                    yp += Hi[j] * x[j]
                pred[i] = yp + G[i] * u

        fk = dfac[k]
        k1 = deriv(x, u, fk[0])
        xs = [x[j] + h2 * k1[j] for j in range(n)]
        k2s = deriv(xs, u, fk[1])
        xs = [x[j] + h2 * k2s[j] for j in range(n)]
        k3 = deriv(xs, u, fk[1])
        xs = [x[j] + dt * k3[j] for j in range(n)]
        k4 = deriv(xs, u, fk[2])
        bad = False
        for j in range(n):
            x[j] = x[j] + h6 * (k1[j] + 2.0 * k2s[j] + 2.0 * k3[j] + k4[j])
            if not abs(x[j]) < DIVERGE_LIMIT:
                bad = True
        uprev = u
        if bad:
            diverged = k
            break

    m = len(rows_u)
    X[:m] = rows_x
    U[:m] = rows_u
    SV[:m] = rows_sv
    SI[:m] = rows_si
    V[:m] = rows_v
    PHI[:m] = rows_phi
    return diverged

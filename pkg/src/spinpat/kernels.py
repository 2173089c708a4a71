"""Inner loops of the co-simulation: port transport solves and Heun LLG steps.

Each kernel exists twice.  The ``*_nb`` variants are scalar loops compiled
with numba; the ``*_np`` variants vectorise over magnets and networks with
plain numpy.  Both consume identical inputs (including pre-drawn noise), so
they agree to rounding.

Array conventions
-----------------
m        (n_mag, 3)        unit magnetisation
J        (n_mag, 3)        absorbed spin current per magnet (A)
pmag     (n_net, K)        magnet index per port, -1 for padding
pdrive   (n_net, K)        1 for a supplied (transmitting) port, 0 otherwise
ystat    (n_net, 4K, 4K)   channel port admittance, identity on padding rows
recv     (n_net,)          port index of the receiving magnet; its node is the
                           network's ground (charge potential pinned to 0)
acinv    (n_net, K, K)     inverse charge block, from :func:`charge_inverse`
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import get_backend, njit


# --------------------------------------------------------------------------
# LLG right-hand side
# --------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _rhs(mx, my, mz, hx, hy, hz, jx, jy, jz, hk, hd, al, gam, iq):
    # effective field: uniaxial along x, easy-plane penalty along z, plus thermal
    Hx = hk * mx + hx
    Hy = hy
    Hz = -hd * mz + hz
    # m x H
    ax = my * Hz - mz * Hy
    ay = mz * Hx - mx * Hz
    az = mx * Hy - my * Hx
    # m x (m x H)
    bx = my * az - mz * ay
    by = mz * ax - mx * az
    bz = mx * ay - my * ax
    # spin torque from the transverse part of J
    mj = mx * jx + my * jy + mz * jz
    tx = (jx - mj * mx) * iq
    ty = (jy - mj * my) * iq
    tz = (jz - mj * mz) * iq
    cx = my * tz - mz * ty
    cy = mz * tx - mx * tz
    cz = mx * ty - my * tx
    c = 1.0 / (1.0 + al * al)
    return (c * (-gam * ax - al * gam * bx + tx + al * cx),
            c * (-gam * ay - al * gam * by + ty + al * cy),
            c * (-gam * az - al * gam * bz + tz + al * cz))


@njit(cache=True)
def heun_nb(m, hth, J, dt, hk, hd, al, gam, iq):
    """Advance every magnet one Heun step in place (thermal field held fixed)."""
    for i in range(m.shape[0]):
        mx, my, mz = m[i, 0], m[i, 1], m[i, 2]
        hx, hy, hz = hth[i, 0], hth[i, 1], hth[i, 2]
        jx, jy, jz = J[i, 0], J[i, 1], J[i, 2]
        k1x, k1y, k1z = _rhs(mx, my, mz, hx, hy, hz, jx, jy, jz, hk[i], hd[i], al[i], gam[i], iq[i])
        px = mx + dt * k1x
        py = my + dt * k1y
        pz = mz + dt * k1z
        n = math.sqrt(px * px + py * py + pz * pz)
        px /= n
        py /= n
        pz /= n
        k2x, k2y, k2z = _rhs(px, py, pz, hx, hy, hz, jx, jy, jz, hk[i], hd[i], al[i], gam[i], iq[i])
        mx += 0.5 * dt * (k1x + k2x)
        my += 0.5 * dt * (k1y + k2y)
        mz += 0.5 * dt * (k1z + k2z)
        n = math.sqrt(mx * mx + my * my + mz * mz)
        m[i, 0] = mx / n
        m[i, 1] = my / n
        m[i, 2] = mz / n


def rhs_np(m, hth, J, hk, hd, al, gam, iq):
    H = hth.copy()
    H[:, 0] += hk * m[:, 0]
    H[:, 2] -= hd * m[:, 2]
    a = np.cross(m, H)
    b = np.cross(m, a)
    mj = np.einsum("ij,ij->i", m, J)
    t = (J - mj[:, None] * m) * iq[:, None]
    c = np.cross(m, t)
    pre = (1.0 / (1.0 + al * al))[:, None]
    return pre * (-gam[:, None] * a - (al * gam)[:, None] * b + t + al[:, None] * c)


def heun_np(m, hth, J, dt, hk, hd, al, gam, iq):
    k1 = rhs_np(m, hth, J, hk, hd, al, gam, iq)
    p = m + dt * k1
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    k2 = rhs_np(p, hth, J, hk, hd, al, gam, iq)
    out = m + 0.5 * dt * (k1 + k2)
    m[:] = out / np.linalg.norm(out, axis=1, keepdims=True)


def heun_step(m, hth, J, dt, hk, hd, al, gam, iq):
    if get_backend() == "numba":
        heun_nb(m, hth, J, dt, hk, hd, al, gam, iq)
    else:
        heun_np(m, hth, J, dt, hk, hd, al, gam, iq)


# --------------------------------------------------------------------------
# Port transport
# --------------------------------------------------------------------------

@njit(cache=True)
def _solve_inplace(A, b, n):
    # Gaussian elimination with partial pivoting on the leading n x n block.
    for k in range(n):
        p = k
        big = abs(A[k, k])
        for r in range(k + 1, n):
            v = abs(A[r, k])
            if v > big:
                big = v
                p = r
        if p != k:
            for c in range(k, n):
                tmp = A[k, c]
                A[k, c] = A[p, c]
                A[p, c] = tmp
            tmp = b[k]
            b[k] = b[p]
            b[p] = tmp
        piv = A[k, k]
        for r in range(k + 1, n):
            f = A[r, k] / piv
            if f != 0.0:
                for c in range(k + 1, n):
                    A[r, c] -= f * A[k, c]
                b[r] -= f * b[k]
    for k in range(n - 1, -1, -1):
        s = b[k]
        for c in range(k + 1, n):
            s -= A[k, c] * b[c]
        b[k] = s / A[k, k]


def charge_inverse(ystat, nports, pw, recv, g):
    """Inverse of every network's charge block with the ground row pinned.

    The charge rows of the port system, ``(Yc + w gsum) V - w gdiff m . mu``,
    have an m-independent left block; inverting it once lets the numba
    kernel eliminate the charge potentials and solve a 3k x 3k spin system.
    """
    n_net = ystat.shape[0]
    K = ystat.shape[1] // 4
    out = np.zeros((n_net, K, K))
    for n in range(n_net):
        k = int(nports[n])
        Ac = ystat[n, 0:4 * k:4, 0:4 * k:4] + np.diag(pw[n, :k] * g[0])
        r = int(recv[n])
        Ac[r, :] = 0.0
        Ac[r, r] = 1.0
        out[n, :k, :k] = np.linalg.inv(Ac)
    return out


@njit(cache=True)
def spin_currents_nb(m, volts, active, nports, pmag, pdrive, pw, ystat, recv, g, acinv, J):
    """Accumulate the absorbed spin current of every receiving magnet into J.

    Charge potentials are eliminated with ``acinv`` (see :func:`charge_inverse`);
    the remaining spin system is solved directly.
    """
    gsum, gdiff, gre, gim = g[0], g[1], g[2], g[3]
    K = pmag.shape[1]
    S = np.empty((3 * K, 3 * K))
    rhs = np.empty(3 * K)
    c = np.empty((K, 3))
    d = np.empty((K, 3))
    v0 = np.empty(K)
    bc = np.empty(K)
    vd = np.empty(K)
    J[:] = 0.0
    for idx in range(active.shape[0]):
        n = active[idx]
        k = nports[n]
        r = recv[n]
        for a in range(k):
            mi = pmag[n, a]
            w = pw[n, a]
            vd[a] = volts[mi] if pdrive[n, a] else 0.0
            bc[a] = w * gsum * vd[a]
            for s in range(3):
                c[a, s] = w * gdiff * m[mi, s]
                d[a, s] = c[a, s]
        bc[r] = 0.0
        d[r, 0] = 0.0
        d[r, 1] = 0.0
        d[r, 2] = 0.0
        for a in range(k):
            acc = 0.0
            for b in range(k):
                acc += acinv[n, a, b] * bc[b]
            v0[a] = acc
        for a in range(k):
            for s in range(3):
                row = 3 * a + s
                rhs[row] = c[a, s] * (v0[a] - vd[a])
                for b in range(k):
                    f = c[a, s] * acinv[n, a, b]
                    ys = ystat[n, 4 * a + 1, 4 * b + 1]
                    for t in range(3):
                        S[row, 3 * b + t] = -f * d[b, t]
                    S[row, 3 * b + s] += ys
            # interface spin block of port a
            mi = pmag[n, a]
            w = pw[n, a]
            mx, my, mz = m[mi, 0], m[mi, 1], m[mi, 2]
            mv = (mx, my, mz)
            o = 3 * a
            for s in range(3):
                for t in range(3):
                    S[o + s, o + t] += w * (gsum - gre) * mv[s] * mv[t]
                S[o + s, o + s] += w * gre
            S[o, o + 1] -= w * gim * mz
            S[o, o + 2] += w * gim * my
            S[o + 1, o] += w * gim * mz
            S[o + 1, o + 2] -= w * gim * mx
            S[o + 2, o] -= w * gim * my
            S[o + 2, o + 1] += w * gim * mx
        _solve_inplace(S, rhs, 3 * k)
        mi = pmag[n, r]
        w = pw[n, r]
        ux, uy, uz = rhs[3 * r], rhs[3 * r + 1], rhs[3 * r + 2]
        mx, my, mz = m[mi, 0], m[mi, 1], m[mi, 2]
        J[mi, 0] += w * (gre * ux + gim * (my * uz - mz * uy))
        J[mi, 1] += w * (gre * uy + gim * (mz * ux - mx * uz))
        J[mi, 2] += w * (gre * uz + gim * (mx * uy - my * ux))


def interface_matrices_np(mvec, w, g):
    """Stack of 4x4 interface conductances, shape (..., 4, 4)."""
    gsum, gdiff, gre, gim = g
    shape = mvec.shape[:-1]
    G = np.zeros(shape + (4, 4))
    G[..., 0, 0] = gsum
    G[..., 0, 1:] = -gdiff * mvec
    G[..., 1:, 0] = -gdiff * mvec
    mm = mvec[..., :, None] * mvec[..., None, :]
    G[..., 1:, 1:] = (gsum - gre) * mm + gre * np.eye(3)
    mx, my, mz = mvec[..., 0], mvec[..., 1], mvec[..., 2]
    G[..., 1, 2] -= gim * mz
    G[..., 1, 3] += gim * my
    G[..., 2, 1] += gim * mz
    G[..., 2, 3] -= gim * mx
    G[..., 3, 1] -= gim * my
    G[..., 3, 2] += gim * mx
    return G * w[..., None, None]


def spin_currents_np(m, volts, active, nports, pmag, pdrive, pw, ystat, recv, g, acinv, J):
    # full 4k x 4k solve; acinv is accepted for signature parity only
    J[:] = 0.0
    if active.size == 0:
        return
    pm = pmag[active]
    valid = pm >= 0
    mvec = np.where(valid[..., None], m[np.where(valid, pm, 0)], 0.0)
    G = interface_matrices_np(mvec, np.where(valid, pw[active], 0.0), g)
    K = pm.shape[1]
    A = ystat[active].copy()
    for a in range(K):
        A[:, 4 * a:4 * a + 4, 4 * a:4 * a + 4] += G[:, a]
    vf = np.where(valid & (pdrive[active] != 0), volts[np.where(valid, pm, 0)], 0.0)
    b = (G[..., :, 0] * vf[..., None]).reshape(len(active), 4 * K)
    rp = recv[active]
    rows = np.arange(len(active))
    A[rows, 4 * rp, :] = 0.0
    A[rows, 4 * rp, 4 * rp] = 1.0
    b[rows, 4 * rp] = 0.0
    x = np.linalg.solve(A, b[..., None])[..., 0].reshape(len(active), K, 4)
    mu = x[rows, rp, 1:]
    mi = pm[rows, rp]
    w = pw[active][rows, rp]
    mr = m[mi]
    contrib = w[:, None] * (g[2] * mu + g[3] * np.cross(mr, mu))
    np.add.at(J, mi, contrib)


def spin_currents(*args):
    if get_backend() == "numba":
        spin_currents_nb(*args)
    else:
        spin_currents_np(*args)


# --------------------------------------------------------------------------
# Time loop
# --------------------------------------------------------------------------

@njit(cache=True)
def run_chunk_nb(m, noise, th_sigma, dt, hk, hd, al, gam, iq,
                 volts, active, nports, pmag, pdrive, pw, ystat, recv, g, acinv,
                 n_steps, step0, sample_every, rec_idx, out):
    n_mag = m.shape[0]
    J = np.zeros((n_mag, 3))
    hth = np.zeros((n_mag, 3))
    use_noise = noise.shape[0] > 0
    for s in range(n_steps):
        if active.shape[0] > 0:
            spin_currents_nb(m, volts, active, nports, pmag, pdrive, pw, ystat, recv, g, acinv, J)
        if use_noise:
            for i in range(n_mag):
                sg = th_sigma[i]
                hth[i, 0] = sg * noise[s, i, 0]
                hth[i, 1] = sg * noise[s, i, 1]
                hth[i, 2] = sg * noise[s, i, 2]
        heun_nb(m, hth, J, dt, hk, hd, al, gam, iq)
        k = step0 + s + 1
        if k % sample_every == 0:
            j = k // sample_every
            for r in range(rec_idx.shape[0]):
                out[j, r, 0] = m[rec_idx[r], 0]
                out[j, r, 1] = m[rec_idx[r], 1]
                out[j, r, 2] = m[rec_idx[r], 2]


def run_chunk_np(m, noise, th_sigma, dt, hk, hd, al, gam, iq,
                 volts, active, nports, pmag, pdrive, pw, ystat, recv, g, acinv,
                 n_steps, step0, sample_every, rec_idx, out):
    n_mag = m.shape[0]
    J = np.zeros((n_mag, 3))
    hth = np.zeros((n_mag, 3))
    use_noise = noise.shape[0] > 0
    for s in range(n_steps):
        if active.size:
            spin_currents_np(m, volts, active, nports, pmag, pdrive, pw, ystat, recv, g, acinv, J)
        if use_noise:
            np.multiply(noise[s], th_sigma[:, None], out=hth)
        heun_np(m, hth, J, dt, hk, hd, al, gam, iq)
        k = step0 + s + 1
        if k % sample_every == 0:
            out[k // sample_every] = m[rec_idx]


def run_chunk(*args):
    if get_backend() == "numba":
        run_chunk_nb(*args)
    else:
        run_chunk_np(*args)

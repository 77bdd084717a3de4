"""Compiled inner loops for ray, plane and cone quadratures.

All ray integrals use the global nodes ``r_l = l * dr`` restricted to the part
of the ray inside an axis-aligned box outside of which the integrand is known
to vanish. Because the integrand is zero at the clipped ends this is the
composite trapezoidal rule on ``[0, r_max]``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit, prange


@njit(cache=True, inline="always")
def _clip(o0, o1, o2, d0, d1, d2, lo, hi, t0, t1):
    o = (o0, o1, o2)
    d = (d0, d1, d2)
    for ax in range(3):
        if abs(d[ax]) < 1e-300:
            if o[ax] < lo[ax] or o[ax] > hi[ax]:
                return 1.0, 0.0
        else:
            a = (lo[ax] - o[ax]) / d[ax]
            b = (hi[ax] - o[ax]) / d[ax]
            if a > b:
                a, b = b, a
            if a > t0:
                t0 = a
            if b < t1:
                t1 = b
    return t0, t1


@njit(cache=True, inline="always")
def _bilinear(v, x0, hx, y0, hy, x, y):
    fx = (x - x0) / hx
    fy = (y - y0) / hy
    nx, ny = v.shape
    if fx < 0.0 or fy < 0.0 or fx > nx - 1 or fy > ny - 1:
        return 0.0
    i = min(int(fx), nx - 2)
    j = min(int(fy), ny - 2)
    tx = fx - i
    ty = fy - j
    return ((1 - tx) * ((1 - ty) * v[i, j] + ty * v[i, j + 1])
            + tx * ((1 - ty) * v[i + 1, j] + ty * v[i + 1, j + 1]))


@njit(cache=True, inline="always")
def _trilinear(v, org, h, x, y, z):
    fx = (x - org[0]) / h[0]
    fy = (y - org[1]) / h[1]
    fz = (z - org[2]) / h[2]
    nx, ny, nz = v.shape
    if fx < 0.0 or fy < 0.0 or fz < 0.0 or fx > nx - 1 or fy > ny - 1 or fz > nz - 1:
        return 0.0
    i = min(int(fx), nx - 2)
    j = min(int(fy), ny - 2)
    k = min(int(fz), nz - 2)
    tx = fx - i
    ty = fy - j
    tz = fz - k
    c00 = v[i, j, k] * (1 - tx) + v[i + 1, j, k] * tx
    c10 = v[i, j + 1, k] * (1 - tx) + v[i + 1, j + 1, k] * tx
    c01 = v[i, j, k + 1] * (1 - tx) + v[i + 1, j, k + 1] * tx
    c11 = v[i, j + 1, k + 1] * (1 - tx) + v[i + 1, j + 1, k + 1] * tx
    return (c00 * (1 - ty) + c10 * ty) * (1 - tz) + (c01 * (1 - ty) + c11 * ty) * tz


@njit(cache=True, inline="always")
def _scatter(out, org, h, x, y, z, w):
    fx = (x - org[0]) / h[0]
    fy = (y - org[1]) / h[1]
    fz = (z - org[2]) / h[2]
    nx, ny, nz = out.shape
    if fx < 0.0 or fy < 0.0 or fz < 0.0 or fx > nx - 1 or fy > ny - 1 or fz > nz - 1:
        return
    i = min(int(fx), nx - 2)
    j = min(int(fy), ny - 2)
    k = min(int(fz), nz - 2)
    tx = fx - i
    ty = fy - j
    tz = fz - k
    out[i, j, k] += w * (1 - tx) * (1 - ty) * (1 - tz)
    out[i + 1, j, k] += w * tx * (1 - ty) * (1 - tz)
    out[i, j + 1, k] += w * (1 - tx) * ty * (1 - tz)
    out[i + 1, j + 1, k] += w * tx * ty * (1 - tz)
    out[i, j, k + 1] += w * (1 - tx) * (1 - ty) * tz
    out[i + 1, j, k + 1] += w * tx * (1 - ty) * tz
    out[i, j + 1, k + 1] += w * (1 - tx) * ty * tz
    out[i + 1, j + 1, k + 1] += w * tx * ty * tz


@njit(cache=True)
def ray_sum_2d(v, extent, ox, oy, dx, dy, t_min, t_max, step):
    """Trapezoidal integral of the bilinear image along ``o + t d``, ``t in [t_min, t_max]``."""
    nx, ny = v.shape
    hx = 2 * extent / (nx - 1)
    hy = 2 * extent / (ny - 1)
    lo = (-extent, -extent, -1.0)
    hi = (extent, extent, 1.0)
    a, b = _clip(ox, oy, 0.0, dx, dy, 0.0, lo, hi, t_min, t_max)
    if b <= a:
        return 0.0
    l0 = int(math.ceil(a / step))
    l1 = int(math.floor(b / step))
    acc = 0.0
    for l in range(l0, l1 + 1):
        t = l * step
        acc += _bilinear(v, -extent, hx, -extent, hy, ox + t * dx, oy + t * dy)
    return acc * step


@njit(cache=True, parallel=True)
def vline_kernel(v, extent, phis, psis, step, r_max, sides):
    """Sum of one-sided rays from ``theta(phi)`` along ``-theta(phi - s psi)`` for ``s`` in ``sides``."""
    n_phi = phis.size
    n_psi = psis.size
    out = np.zeros((n_phi, n_psi))
    for k in prange(n_phi):
        vx = math.cos(phis[k])
        vy = math.sin(phis[k])
        for j in range(n_psi):
            acc = 0.0
            for s in sides:
                ang = phis[k] - s * psis[j]
                acc += ray_sum_2d(v, extent, vx, vy, -math.cos(ang), -math.sin(ang),
                                  0.0, r_max, step)
            out[k, j] = acc
    return out


@njit(cache=True)
def weighted_ray_3d(v, org, h, box_lo, box_hi, ox, oy, oz, dx, dy, dz, k, step, r_max):
    """``sum_l f(o + r_l d) r_l^k step`` over the global nodes ``r_l = l step``."""
    a, b = _clip(ox, oy, oz, dx, dy, dz, box_lo, box_hi, 0.0, r_max)
    if b <= a:
        return 0.0
    l0 = int(math.ceil(a / step))
    l1 = int(math.floor(b / step))
    acc = 0.0
    for l in range(l0, l1 + 1):
        r = l * step
        f = _trilinear(v, org, h, ox + r * dx, oy + r * dy, oz + r * dz)
        if k == 0:
            acc += f
        else:
            acc += f * r ** k
    return acc * step


@njit(cache=True, parallel=True)
def cone_kernel(v, org, h, box_lo, box_hi, phis, zs, betas, psis, ks, n_eta, step, r_max):
    """Cone surface quadrature for every ``(phi, z, beta, psi)`` and each weight in ``ks``.

    Returns an array of shape ``(len(ks), n_phi, n_z, n_beta, n_psi)``.
    """
    n_phi, n_z, n_b, n_p = phis.size, zs.size, betas.size, psis.size
    n_k = ks.size
    out = np.zeros((n_k, n_phi, n_z, n_b, n_p))
    d_eta = 2 * math.pi / n_eta
    ce = np.cos(np.arange(n_eta) * d_eta)
    se = np.sin(np.arange(n_eta) * d_eta)
    for idx in prange(n_phi * n_z):
        ip = idx // n_z
        iz = idx % n_z
        acc = np.zeros(n_k)
        cp = math.cos(phis[ip])
        sp = math.sin(phis[ip])
        ox, oy, oz = cp, sp, zs[iz]
        for ib in range(n_b):
            cb = math.cos(betas[ib])
            sb = math.sin(betas[ib])
            a0, a1, a2 = -cp * sb, -sp * sb, cb
            u0, u1, u2 = -sp, cp, 0.0
            w0, w1, w2 = -cb * cp, -cb * sp, -sb
            for iq in range(n_p):
                cq = math.cos(psis[iq])
                sq = math.sin(psis[iq])
                acc[:] = 0.0
                for ie in range(n_eta):
                    dx = cq * a0 + sq * (ce[ie] * u0 + se[ie] * w0)
                    dy = cq * a1 + sq * (ce[ie] * u1 + se[ie] * w1)
                    dz = cq * a2 + sq * (ce[ie] * u2 + se[ie] * w2)
                    ta, tb = _clip(ox, oy, oz, dx, dy, dz, box_lo, box_hi, 0.0, r_max)
                    if tb <= ta:
                        continue
                    l0 = int(math.ceil(ta / step))
                    l1 = int(math.floor(tb / step))
                    for l in range(l0, l1 + 1):
                        r = l * step
                        f = _trilinear(v, org, h, ox + r * dx, oy + r * dy, oz + r * dz)
                        if f != 0.0:
                            for ik in range(n_k):
                                acc[ik] += f * r ** ks[ik]
                for ik in range(n_k):
                    out[ik, ip, iz, ib, iq] = acc[ik] * sq * step * d_eta
    return out


@njit(cache=True)
def cone_adjoint_kernel(g, shape, org, h, box_lo, box_hi, phis, zs, betas, psis, k,
                        n_eta, step, r_max):
    """Transpose of :func:`cone_kernel` for a single weight ``k`` (scatter)."""
    out = np.zeros(shape)
    n_phi, n_z, n_b, n_p = phis.size, zs.size, betas.size, psis.size
    d_eta = 2 * math.pi / n_eta
    for ip in range(n_phi):
        cp = math.cos(phis[ip])
        sp = math.sin(phis[ip])
        for iz in range(n_z):
            ox, oy, oz = cp, sp, zs[iz]
            for ib in range(n_b):
                cb = math.cos(betas[ib])
                sb = math.sin(betas[ib])
                a0, a1, a2 = -cp * sb, -sp * sb, cb
                u0, u1, u2 = -sp, cp, 0.0
                w0, w1, w2 = -cb * cp, -cb * sp, -sb
                for iq in range(n_p):
                    gv = g[ip, iz, ib, iq]
                    if gv == 0.0:
                        continue
                    cq = math.cos(psis[iq])
                    sq = math.sin(psis[iq])
                    scale = gv * sq * step * d_eta
                    for ie in range(n_eta):
                        ce = math.cos(ie * d_eta)
                        se = math.sin(ie * d_eta)
                        dx = cq * a0 + sq * (ce * u0 + se * w0)
                        dy = cq * a1 + sq * (ce * u1 + se * w1)
                        dz = cq * a2 + sq * (ce * u2 + se * w2)
                        ta, tb = _clip(ox, oy, oz, dx, dy, dz, box_lo, box_hi, 0.0, r_max)
                        if tb <= ta:
                            continue
                        l0 = int(math.ceil(ta / step))
                        l1 = int(math.floor(tb / step))
                        for l in range(l0, l1 + 1):
                            r = l * step
                            w = scale if k == 0 else scale * r ** k
                            _scatter(out, org, h, ox + r * dx, oy + r * dy, oz + r * dz, w)
    return out


@njit(cache=True, parallel=True)
def plane_kernel(v, org, h, box_lo, box_hi, normals, e1s, e2s, svals, step, half_width):
    """Plane integrals ``int f(s n + u e1 + w e2) du dw`` (trapezoidal, global nodes).

    ``normals``/``e1s``/``e2s`` have shape ``(n_dir, 3)``; the result has shape
    ``(n_dir, len(svals))``.
    """
    n_dir = normals.shape[0]
    n_s = svals.size
    out = np.zeros((n_dir, n_s))
    n_u = int(math.floor(half_width / step))
    for idx in prange(n_dir * n_s):
        d = idx // n_s
        js = idx % n_s
        s = svals[js]
        nx, ny, nz = normals[d, 0], normals[d, 1], normals[d, 2]
        acc = 0.0
        for iu in range(-n_u, n_u + 1):
            u = iu * step
            ox = s * nx + u * e1s[d, 0]
            oy = s * ny + u * e1s[d, 1]
            oz = s * nz + u * e1s[d, 2]
            ta, tb = _clip(ox, oy, oz, e2s[d, 0], e2s[d, 1], e2s[d, 2], box_lo, box_hi,
                           -half_width, half_width)
            if tb <= ta:
                continue
            l0 = int(math.ceil(ta / step))
            l1 = int(math.floor(tb / step))
            for l in range(l0, l1 + 1):
                w = l * step
                acc += _trilinear(v, org, h, ox + w * e2s[d, 0], oy + w * e2s[d, 1],
                                  oz + w * e2s[d, 2])
        out[d, js] = acc * step * step
    return out


@njit(cache=True, inline="always")
def _cubic_uniform(p, s0, ds, t):
    """Catmull-Rom interpolation of samples ``p`` on ``s0 + i ds``; zero outside."""
    n = p.size
    u = (t - s0) / ds
    if u < 0.0 or u > n - 1:
        return 0.0
    i = min(int(u), n - 2)
    a = u - i
    pm = p[i - 1] if i >= 1 else p[i]
    p0 = p[i]
    p1 = p[i + 1]
    p2 = p[i + 2] if i + 2 < n else p[i + 1]
    return p0 + 0.5 * a * (p1 - pm + a * (2 * pm - 5 * p0 + 4 * p1 - p2 + a * (3 * (p0 - p1) + p2 - pm)))


@njit(cache=True, parallel=True)
def backproject_kernel(profiles, omegas, weights, s0, ds, xs, ys, zs):
    """``sum_d weights[d] * profiles[d](<omega_d, x>)`` on the grid ``xs x ys x zs``."""
    nx, ny, nz = xs.size, ys.size, zs.size
    out = np.zeros((nx, ny, nz))
    n_dir = omegas.shape[0]
    for i in prange(nx):
        for j in range(ny):
            for k in range(nz):
                acc = 0.0
                for d in range(n_dir):
                    t = omegas[d, 0] * xs[i] + omegas[d, 1] * ys[j] + omegas[d, 2] * zs[k]
                    acc += weights[d] * _cubic_uniform(profiles[d], s0, ds, t)
                out[i, j, k] = acc
    return out


@njit(cache=True)
def _pv_window(t, sp, ep, wq, a, b, e_t):
    """PV of ``int_a^b e(s)/(t-s) ds`` from samples ``ep`` at nodes ``sp`` with
    weights ``wq``, using subtraction of ``e(t)``."""
    acc = 0.0
    for p in range(sp.size):
        d = t - sp[p]
        if abs(d) > 1e-12:
            acc += wq[p] * (ep[p] - e_t) / d
    if t > a and t < b:
        acc += e_t * math.log((t - a) / (b - t))
    elif e_t != 0.0:
        acc += e_t * math.log(abs((t - a) / (t - b)))
    return acc


@njit(cache=True, parallel=True)
def direct_kernel(s_nodes, e_vals, w_vals, win_lo, win_hi, valid_dir, fill_idx, fill_w,
                  omegas, weights, xs, ys, zs):
    """Per-voxel PV quadrature ``-(1/pi) sum_p e_p w_p / (t - s_p)`` followed by the
    weighted sum over directions.

    ``s_nodes``/``e_vals``/``w_vals`` have shape ``(n_dir, n_win, n_pts)``. A
    direction without data takes ``sum_q fill_w[d, q] * value(fill_idx[d, q], t)``
    with ``t`` its own offset.
    """
    nx, ny, nz = xs.size, ys.size, zs.size
    n_dir, n_win, n_pts = s_nodes.shape
    out = np.zeros((nx, ny, nz))
    for i in prange(nx):
        for j in range(ny):
            for k in range(nz):
                acc = 0.0
                for d in range(n_dir):
                    if weights[d] == 0.0:
                        continue
                    t = omegas[d, 0] * xs[i] + omegas[d, 1] * ys[j] + omegas[d, 2] * zs[k]
                    for q in range(fill_idx.shape[1]):
                        src = fill_idx[d, q]
                        wf = fill_w[d, q]
                        if wf == 0.0 or not valid_dir[src]:
                            continue
                        val = 0.0
                        for w in range(n_win):
                            sp = s_nodes[src, w]
                            ep = e_vals[src, w]
                            # linear interpolation of e at t (nodes ascending)
                            e_t = 0.0
                            if t >= sp[0] and t <= sp[n_pts - 1]:
                                ds = sp[1] - sp[0]
                                u = (t - sp[0]) / ds
                                m = min(int(u), n_pts - 2)
                                a = u - m
                                e_t = (1 - a) * ep[m] + a * ep[m + 1]
                            val += _pv_window(t, sp, ep, w_vals[src, w], win_lo[src, w], win_hi[src, w], e_t)
                        acc += weights[d] * wf * (-val / math.pi)
                out[i, j, k] = acc
    return out

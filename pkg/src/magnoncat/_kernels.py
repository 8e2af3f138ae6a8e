"""Compiled Lindblad right-hand side and RK4 stepping on CSR operators.

The state is carried as two diagonal blocks ``(re, ro)``. With a conserved
parity the blocks are the even and odd sectors and each collapse operator maps
one sector into the other (``cross=True``); without it ``re`` holds the whole
matrix, ``ro`` is empty and the collapse operators act within ``re``.

Operators come as CSR triplets ``(indptr, indices, data)``. The effective
Hamiltonian ``H - i/2 sum L^dag L`` is restricted to each block; collapse
operators are stacked row-wise, one block of rows per operator, with columns
indexing the source block.
"""

import numba as nb
import numpy as np


@nb.njit(cache=True)
def _hamiltonian_part(r, hp, hi, hd, out):
    # out <- -i H_eff r + (-i H_eff r)^dag ; valid because r is Hermitian
    d = r.shape[0]
    for i in range(d):
        for j in range(d):
            out[i, j] = 0.0
    for i in range(d):
        for q in range(hp[i], hp[i + 1]):
            k = hi[q]
            h = -1j * hd[q]
            for j in range(d):
                out[i, j] += h * r[k, j]
    for i in range(d):
        for j in range(i, d):
            v = out[i, j] + np.conj(out[j, i])
            out[i, j] = v
            out[j, i] = np.conj(v)


@nb.njit(cache=True)
def _add_jumps(src, lp, li, ld, n_ops, out, work, work_t):
    # out += sum_c L_c src L_c^dag, with L_c of shape (len(out), len(src))
    d_out = out.shape[0]
    d_src = src.shape[0]
    for c in range(n_ops):
        base = c * d_out
        for i in range(d_out):
            for j in range(d_src):
                work[i, j] = 0.0
        for i in range(d_out):
            for q in range(lp[base + i], lp[base + i + 1]):
                k = li[q]
                h = ld[q]
                for j in range(d_src):
                    work[i, j] += h * src[k, j]
        for i in range(d_src):
            for j in range(d_out):
                work_t[i, j] = np.conj(work[j, i])
        for i in range(d_out):
            for q in range(lp[base + i], lp[base + i + 1]):
                k = li[q]
                h = ld[q]
                for j in range(d_out):
                    out[i, j] += h * work_t[k, j]


@nb.njit(cache=True)
def lindblad_rhs_csr(r, hp, hi, hd, lp, li, ld, n_ops, out, work, work_t):
    """Full-matrix right-hand side; ``r`` must be Hermitian."""
    _hamiltonian_part(r, hp, hi, hd, out)
    _add_jumps(r, lp, li, ld, n_ops, out, work, work_t)
    return out


@nb.njit(cache=True)
def _rhs_blocks(re, ro, he, ho, le, lo, n_ops, cross, oe, oo, we, wte, wo, wto):
    _hamiltonian_part(re, he[0], he[1], he[2], oe)
    _hamiltonian_part(ro, ho[0], ho[1], ho[2], oo)
    if cross:
        _add_jumps(ro, le[0], le[1], le[2], n_ops, oe, we, wte)
        _add_jumps(re, lo[0], lo[1], lo[2], n_ops, oo, wo, wto)
    else:
        _add_jumps(re, le[0], le[1], le[2], n_ops, oe, we, wte)
        _add_jumps(ro, lo[0], lo[1], lo[2], n_ops, oo, wo, wto)


@nb.njit(cache=True)
def _axpy(dst, x, a, y):
    # dst <- x + a y
    for i in range(dst.shape[0]):
        for j in range(dst.shape[1]):
            dst[i, j] = x[i, j] + a * y[i, j]


@nb.njit(cache=True)
def _rk4_combine(r, c, k1, k2, k3, k4):
    for i in range(r.shape[0]):
        for j in range(r.shape[1]):
            r[i, j] += c * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])


@nb.njit(cache=True)
def _hermitize(r, tr):
    d = r.shape[0]
    for i in range(d):
        r[i, i] = r[i, i].real / tr
        for j in range(i + 1, d):
            v = 0.5 * (r[i, j] + np.conj(r[j, i])) / tr
            r[i, j] = v
            r[j, i] = np.conj(v)


@nb.njit(cache=True)
def rk4_advance(re, ro, n_steps, dt, he, ho, le, lo, n_ops, cross):
    """Advance the block state by ``n_steps`` RK4 steps in place.

    After every step both blocks are Hermitized and the total trace is reset
    to one. Returns the largest raw trace drift seen over the steps.
    """
    de = re.shape[0]
    do = ro.shape[0]
    ws = do if cross else de
    wso = de if cross else do
    k = [np.empty_like(re) for _ in range(4)]
    ko = [np.empty_like(ro) for _ in range(4)]
    te = np.empty_like(re)
    to = np.empty_like(ro)
    we = np.empty((de, ws), dtype=re.dtype)
    wte = np.empty((ws, de), dtype=re.dtype)
    wo = np.empty((do, wso), dtype=re.dtype)
    wto = np.empty((wso, do), dtype=re.dtype)
    worst = 0.0
    for _ in range(n_steps):
        _rhs_blocks(re, ro, he, ho, le, lo, n_ops, cross, k[0], ko[0], we, wte, wo, wto)
        _axpy(te, re, 0.5 * dt, k[0])
        _axpy(to, ro, 0.5 * dt, ko[0])
        _rhs_blocks(te, to, he, ho, le, lo, n_ops, cross, k[1], ko[1], we, wte, wo, wto)
        _axpy(te, re, 0.5 * dt, k[1])
        _axpy(to, ro, 0.5 * dt, ko[1])
        _rhs_blocks(te, to, he, ho, le, lo, n_ops, cross, k[2], ko[2], we, wte, wo, wto)
        _axpy(te, re, dt, k[2])
        _axpy(to, ro, dt, ko[2])
        _rhs_blocks(te, to, he, ho, le, lo, n_ops, cross, k[3], ko[3], we, wte, wo, wto)
        _rk4_combine(re, dt / 6.0, k[0], k[1], k[2], k[3])
        _rk4_combine(ro, dt / 6.0, ko[0], ko[1], ko[2], ko[3])
        tr = 0.0
        for i in range(de):
            tr += re[i, i].real
        for i in range(do):
            tr += ro[i, i].real
        drift = abs(tr - 1.0)
        if not drift <= worst:  # NaN must propagate
            worst = drift
        _hermitize(re, tr)
        _hermitize(ro, tr)
    return worst

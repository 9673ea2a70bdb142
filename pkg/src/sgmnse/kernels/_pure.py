"""Pure-numpy fallback for the hot kernels (see package docstring)."""

import numpy as np


def leray_inplace(c, kt1, kt2, kt3):
    k1 = kt1[:, None, None]
    k2 = kt2[None, :, None]
    k3 = kt3[None, None, :]
    ksq = k1 * k1 + k2 * k2 + k3 * k3
    inv = np.zeros_like(ksq)
    nz = ksq > 0
    inv[nz] = 1.0 / ksq[nz]
    kdotu = (c[0] * k1 + c[1] * k2 + c[2] * k3) * inv
    c[0] -= k1 * kdotu
    c[1] -= k2 * kdotu
    c[2] -= k3 * kdotu
    c[:, 0, 0, 0] = 0.0


def diffusion_solve_inplace(c, ksq, a):
    c *= 1.0 / (1.0 + a * ksq)


def convect(u, gv):
    return np.einsum("ixyz,ijxyz->jxyz", u, gv)


def hv_norms(c, mult, ksq):
    abs2 = c.real ** 2 + c.imag ** 2
    w = abs2.sum(axis=0) * mult
    return float(w.sum()), float((w * ksq).sum())


def assemble_convective(that, kt1, kt2, kt3, mask):
    """Divergence-form convective term from the symmetric product spectrum.

    that holds the 6 unique spectra of u_i u_j in the order
    (00, 01, 02, 11, 12, 22); returns the dealiased, divergence-free
    projection of (u . grad) u in the same (half) layout.
    """
    k1 = kt1[:, None, None]
    k2 = kt2[None, :, None]
    k3 = kt3[None, None, :]
    c0 = 1j * (k1 * that[0] + k2 * that[1] + k3 * that[2])
    c1 = 1j * (k1 * that[1] + k2 * that[3] + k3 * that[4])
    c2 = 1j * (k1 * that[2] + k2 * that[4] + k3 * that[5])
    ksq = k1 * k1 + k2 * k2 + k3 * k3
    inv = np.zeros_like(ksq)
    nz = ksq > 0
    inv[nz] = 1.0 / ksq[nz]
    kdot = (k1 * c0 + k2 * c1 + k3 * c2) * inv
    out = np.empty((3, *that.shape[1:]), dtype=np.complex128)
    out[0] = (c0 - k1 * kdot) * mask
    out[1] = (c1 - k2 * kdot) * mask
    out[2] = (c2 - k3 * kdot) * mask
    return out

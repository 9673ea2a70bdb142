"""Divergence-free spectral fields on a zero-mean periodic box.

Fields are stored as Fourier-series coefficients ``c[m, k1, k2, k3]`` (component
``m``, FFT bin ordering per axis) with the normalization

    u(x) = sum_k c(k) exp(i kt . x),      kt_i = 2 pi k_i / L_i,

so that the L2 norm satisfies ``||u||_H^2 = V * sum_k |c(k)|^2`` with
``V = L1 L2 L3``; spectral and integral norms agree without further factors.

The box plays the role of a Poincare domain: the smallest nonzero eigenvalue
``lam`` of the (diagonal) Stokes operator gives ``lam ||u||_H^2 <= ||u||_V^2``
for every zero-mean field.  Quadratic products are dealiased with the 2/3-rule
(strict mask ``|k_i| < f * n_i/2`` with the Nyquist planes always dropped),
which makes the duality ``<B(u,v), w> = b(u,v,w)`` exact within the retained
band.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.fft as sfft

from .kernels import convect, leray_inplace

__all__ = [
    "CutoffKind",
    "Domain",
    "SpectralVelocity",
    "ScalarSpectralField",
    "leray_project",
    "stokes_apply",
    "stokes_inverse",
    "norm",
    "inner_h",
    "trilinear_b",
    "nonlinear_b_field",
    "cutoff_fn",
    "cutoff_factor",
    "project_low",
    "pressure_recover",
    "random_velocity",
    "single_mode_velocity",
    "to_grid",
    "from_grid",
    "save_field",
    "load_field",
]

TWO_PI = 2.0 * np.pi


class CutoffKind(Enum):
    """Which norm feeds the convective cut-off factor."""

    GRADIENT = "gradient"
    L4 = "l4"


class Domain:
    """Periodic box with precomputed wavenumber tables and mode ordering.

    Parameters
    ----------
    periods : three positive box lengths (L1, L2, L3)
    grid : three even integers >= 4 (modes per direction)
    dealias_fraction : retained fraction of the Nyquist band, default 2/3

    The global mode ordering (ascending ``|kt|^2``, lexicographic canonical
    representative as tie-break) groups each conjugate pair {k, -k} into one
    eigen-class so that truncations of real fields stay real.  ``class_rank``
    maps every FFT bin to its class index (-1 for the zero mode) and
    ``class_eigs`` lists the eigenvalues in order.
    """

    def __init__(self, periods=(TWO_PI, TWO_PI, TWO_PI), grid=(16, 16, 16),
                 dealias_fraction=2.0 / 3.0):
        periods = tuple(float(p) for p in periods)
        grid = tuple(int(n) for n in grid)
        if len(periods) != 3 or any(p <= 0 for p in periods):
            raise ValueError(f"periods must be three positive lengths, got {periods}")
        if len(grid) != 3 or any(n < 4 or n % 2 for n in grid):
            raise ValueError(f"grid sizes must be even and >= 4, got {grid}")
        if not 0.0 < dealias_fraction <= 1.0:
            raise ValueError("dealias_fraction must lie in (0, 1]")
        self.periods = periods
        self.grid = grid
        self.dealias_fraction = float(dealias_fraction)
        self.volume = periods[0] * periods[1] * periods[2]

        self.k_int = [np.rint(np.fft.fftfreq(n, 1.0 / n)).astype(np.int64)
                      for n in grid]
        self.ktilde = [TWO_PI * self.k_int[a] / periods[a] for a in range(3)]
        k1 = self.ktilde[0][:, None, None]
        k2 = self.ktilde[1][None, :, None]
        k3 = self.ktilde[2][None, None, :]
        self.ksq = np.ascontiguousarray(k1 * k1 + k2 * k2 + k3 * k3)
        self.inv_ksq = np.zeros_like(self.ksq)
        nz = self.ksq > 0
        self.inv_ksq[nz] = 1.0 / self.ksq[nz]

        mask = np.ones(grid, dtype=bool)
        for a, n in enumerate(grid):
            shape = [1, 1, 1]
            shape[a] = n
            ka = np.abs(self.k_int[a]).reshape(shape)
            keep = (ka < dealias_fraction * (n / 2.0)) & (self.k_int[a].reshape(shape) != -n // 2)
            mask &= keep
        self.dealias_mask = mask
        self.kmax_band = float(np.sqrt(self.ksq[mask].max()))

        self._build_class_table()
        self.lam = float(min((TWO_PI / L) ** 2 for L in periods))
        if abs(self.lam - self.class_eigs[0]) > 1e-12 * self.lam:
            raise AssertionError("lambda does not match the eigenvalue table")

        self._negidx = [(-np.arange(n)) % n for n in grid]
        self._pad_cache = {}
        self._half = None

    @property
    def half(self):
        """Lazy r2c (half-spectrum) tables for the hot integration path."""
        if self._half is None:
            self._half = HalfSpectrum(self)
        return self._half

    def _build_class_table(self):
        n1, n2, n3 = self.grid
        ki = [k.copy() for k in self.k_int]
        K1, K2, K3 = np.meshgrid(ki[0], ki[1], ki[2], indexing="ij")
        # integer wavevector of the conjugate bin (Nyquist planes self-pair)
        C1 = np.where(K1 == -(n1 // 2), K1, -K1)
        C2 = np.where(K2 == -(n2 // 2), K2, -K2)
        C3 = np.where(K3 == -(n3 // 2), K3, -K3)
        gt = (K1 > C1) | ((K1 == C1) & ((K2 > C2) | ((K2 == C2) & (K3 >= C3))))
        R1 = np.where(gt, K1, C1)
        R2 = np.where(gt, K2, C2)
        R3 = np.where(gt, K3, C3)
        base = 2 * max(self.grid) + 1
        off = max(self.grid)
        packed = ((R1 + off) * base + (R2 + off)) * base + (R3 + off)
        zero_key = ((off * base) + off) * base + off

        uniq, inverse = np.unique(packed.ravel(), return_inverse=True)
        r3 = uniq % base - off
        r2 = (uniq // base) % base - off
        r1 = uniq // (base * base) - off
        eigs = ((TWO_PI * r1 / self.periods[0]) ** 2
                + (TWO_PI * r2 / self.periods[1]) ** 2
                + (TWO_PI * r3 / self.periods[2]) ** 2)
        nonzero = uniq != zero_key
        order = np.lexsort((uniq[nonzero], eigs[nonzero]))
        rank_of_uniq = np.full(uniq.shape, -1, dtype=np.int64)
        rank_of_uniq[np.flatnonzero(nonzero)[order]] = np.arange(order.size)
        self.class_rank = rank_of_uniq[inverse].reshape(self.grid)
        self.class_eigs = eigs[nonzero][order]
        self.class_count = int(order.size)
        self.band_class_count = int(
            np.unique(self.class_rank[self.dealias_mask & (self.class_rank >= 0)]).size
        )

    def low_mode_mask(self, i):
        """Boolean bin mask of the first ``i`` eigen-classes (mean included)."""
        if i <= 0:
            return np.zeros(self.grid, dtype=bool)
        mask = (self.class_rank >= 0) & (self.class_rank < i)
        mask[0, 0, 0] = True
        return mask

    def gap_eigenvalue(self, i):
        """Eigenvalue of class ``i+1`` (1-based content), i.e. the spectral gap."""
        if i >= self.class_count:
            return np.inf
        return float(self.class_eigs[i])

    def pad_indices(self, oversample):
        """Per-axis destination bins embedding this grid into an oversampled one."""
        key = int(oversample)
        if key not in self._pad_cache:
            idx = []
            for a, n in enumerate(self.grid):
                m = key * n
                idx.append((self.k_int[a] % m).astype(np.intp))
            self._pad_cache[key] = idx
        return self._pad_cache[key]

    def __eq__(self, other):
        return (isinstance(other, Domain)
                and self.periods == other.periods
                and self.grid == other.grid
                and self.dealias_fraction == other.dealias_fraction)

    def __hash__(self):
        return hash((self.periods, self.grid, self.dealias_fraction))

    def __repr__(self):
        return (f"Domain(periods={self.periods}, grid={self.grid}, "
                f"dealias_fraction={self.dealias_fraction:.6g})")


class HalfSpectrum:
    """r2c layout tables: last axis truncated to k3 >= 0 (n3//2 + 1 bins).

    Fields that are real in physical space are fully described by this half;
    ``mult`` carries the Parseval multiplicity (2 for interior k3 bins, 1 for
    the k3 = 0 and Nyquist planes).
    """

    def __init__(self, domain):
        n1, n2, n3 = domain.grid
        self.domain = domain
        self.n3h = n3 // 2 + 1
        sl = (slice(None), slice(None), slice(0, self.n3h))
        self.ksq = np.ascontiguousarray(domain.ksq[sl])
        self.mask = np.ascontiguousarray(domain.dealias_mask[sl].astype(np.uint8))
        self.kt1 = domain.ktilde[0]
        self.kt2 = domain.ktilde[1]
        self.kt3 = np.ascontiguousarray(domain.ktilde[2][:self.n3h])
        mult = np.full((n1, n2, self.n3h), 2.0)
        mult[:, :, 0] = 1.0
        mult[:, :, self.n3h - 1] = 1.0
        self.mult = mult
        self.npts = n1 * n2 * n3

    def from_full(self, c):
        return np.ascontiguousarray(c[..., :self.n3h])

    def to_full(self, ch):
        d = self.domain
        n3 = d.grid[2]
        out = np.zeros((*ch.shape[:-1], n3), dtype=np.complex128)
        out[..., :self.n3h] = ch
        tmp = ch[..., 1:n3 // 2][..., ::-1]
        tmp = np.take(tmp, d._negidx[0], axis=-3)
        tmp = np.take(tmp, d._negidx[1], axis=-2)
        out[..., self.n3h:] = np.conj(tmp)
        return out

    def grid_values(self, ch, oversample=1):
        """Real physical samples of a half-spectrum field, optionally padded."""
        d = self.domain
        if oversample == 1:
            return sfft.irfftn(ch, s=d.grid, axes=(-3, -2, -1)) * self.npts
        m = tuple(oversample * n for n in d.grid)
        big = np.zeros((*ch.shape[:-3], m[0], m[1], m[2] // 2 + 1),
                       dtype=np.complex128)
        i1, i2, _ = d.pad_indices(oversample)
        i3 = np.arange(self.n3h, dtype=np.intp)
        big[(Ellipsis, i1[:, None, None], i2[None, :, None],
             i3[None, None, :])] = ch
        return sfft.irfftn(big, s=m, axes=(-3, -2, -1)) * (m[0] * m[1] * m[2])

    def from_grid(self, g):
        return sfft.rfftn(g, axes=(-3, -2, -1)) / self.npts

    def weighted_norm_sq(self, ch, weight=None):
        w = self.mult if weight is None else self.mult * weight
        return float(self.domain.volume
                     * np.sum(w * (ch.real ** 2 + ch.imag ** 2)))


@dataclass
class SpectralVelocity:
    """Divergence-free, zero-mean, Hermitian-symmetric velocity field.

    ``c`` has shape (3, n1, n2, n3), complex128.  Treat instances as
    immutable snapshots; operations return new fields.
    """

    domain: Domain
    c: np.ndarray

    def copy(self):
        return SpectralVelocity(self.domain, self.c.copy())

    def __add__(self, other):
        _check_same_domain(self, other)
        return SpectralVelocity(self.domain, self.c + other.c)

    def __sub__(self, other):
        _check_same_domain(self, other)
        return SpectralVelocity(self.domain, self.c - other.c)

    def __mul__(self, a):
        return SpectralVelocity(self.domain, self.c * a)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralVelocity(self.domain, -self.c)

    def norm(self, which="H"):
        return norm(self, which)

    def validate(self, tol=1e-10):
        """Check Hermitian symmetry, incompressibility and zero mean."""
        d = self.domain
        scale = max(float(np.abs(self.c).max()), 1e-300)
        herm = self.c[(slice(None), *np.ix_(*d._negidx))].conj()
        if np.abs(self.c - herm).max() > tol * scale:
            raise ValueError("field is not Hermitian-symmetric")
        k1 = d.ktilde[0][:, None, None]
        k2 = d.ktilde[1][None, :, None]
        k3 = d.ktilde[2][None, None, :]
        div = self.c[0] * k1 + self.c[1] * k2 + self.c[2] * k3
        if np.abs(div).max() > tol * scale * max(d.kmax_band, 1.0):
            raise ValueError("field is not divergence-free")
        if np.abs(self.c[:, 0, 0, 0]).max() > tol * scale:
            raise ValueError("field has a nonzero mean mode")
        return self


@dataclass
class ScalarSpectralField:
    """Zero-mean, Hermitian-symmetric scalar field (e.g. recovered pressure)."""

    domain: Domain
    c: np.ndarray

    def norm_l2(self):
        return float(np.sqrt(self.domain.volume * np.vdot(self.c, self.c).real))


def _check_same_domain(*fields):
    d0 = fields[0].domain
    for f in fields[1:]:
        if f.domain != d0:
            raise ValueError("fields live on different domains")


def zero_velocity(domain):
    return SpectralVelocity(domain, np.zeros((3, *domain.grid), dtype=np.complex128))


def hermitian_symmetrize(domain, c):
    """Return the Hermitian part of a coefficient array (real-field projection)."""
    conj = c[(Ellipsis, *np.ix_(*domain._negidx))].conj()
    return 0.5 * (c + conj)


def leray_project(domain, raw):
    """Apply the divergence-free projection to raw (3, n1, n2, n3) coefficients.

    The zero mode and the Nyquist planes are removed, so the result satisfies
    every SpectralVelocity invariant provided ``raw`` is Hermitian.
    """
    c = np.ascontiguousarray(raw, dtype=np.complex128).copy()
    leray_inplace(c, domain.ktilde[0], domain.ktilde[1], domain.ktilde[2])
    for a, n in enumerate(domain.grid):
        sl = [slice(None)] * 4
        sl[a + 1] = n // 2
        c[tuple(sl)] = 0.0
    return SpectralVelocity(domain, c)


def stokes_apply(u):
    """Mode-wise |kt|^2 multiplication; <Au, u> = ||u||_V^2."""
    return SpectralVelocity(u.domain, u.c * u.domain.ksq)


def stokes_inverse(u):
    """Mode-wise division by |kt|^2; rejects fields with a mean component."""
    if np.abs(u.c[:, 0, 0, 0]).max() > 1e-13 * max(float(np.abs(u.c).max()), 1e-300):
        raise ValueError("stokes_inverse requires a zero-mean field")
    return SpectralVelocity(u.domain, u.c * u.domain.inv_ksq)


def inner_h(u, v):
    _check_same_domain(u, v)
    return float(u.domain.volume * np.vdot(v.c, u.c).real)


def _weighted_parseval(u, weight):
    return float(np.sqrt(u.domain.volume
                         * np.sum(weight * (u.c.real ** 2 + u.c.imag ** 2))))


def norm(u, which="H"):
    """Parseval norms (H, V, DA, Hminus1) and the quadrature L4 norm.

    L4 uses a 2x oversampled physical grid: |u|^4 of a band-limited field has
    modes strictly below the oversampled Nyquist band, so the rectangle-rule
    quadrature is exact to round-off.
    """
    d = u.domain
    if which == "H":
        return _weighted_parseval(u, 1.0)
    if which == "V":
        return _weighted_parseval(u, d.ksq)
    if which == "DA":
        return _weighted_parseval(u, d.ksq ** 2)
    if which == "Hminus1":
        return _weighted_parseval(u, d.inv_ksq)
    if which == "L4":
        g = to_grid(u, oversample=2)
        usq = g[0] ** 2 + g[1] ** 2 + g[2] ** 2
        return float((d.volume * np.mean(usq ** 2)) ** 0.25)
    raise ValueError(f"unknown norm {which!r}")


def to_grid(field, oversample=1):
    """Evaluate a spectral field on the (optionally oversampled) physical grid."""
    d = field.domain
    c = field.c if field.c.ndim == 4 else field.c[None]
    if oversample == 1:
        big = c
    else:
        m = tuple(oversample * n for n in d.grid)
        big = np.zeros((c.shape[0], *m), dtype=np.complex128)
        i1, i2, i3 = d.pad_indices(oversample)
        big[:, i1[:, None, None], i2[None, :, None], i3[None, None, :]] = c
    npts = np.prod(big.shape[1:])
    g = sfft.ifftn(big, axes=(-3, -2, -1)).real * npts
    return g if field.c.ndim == 4 else g[0]


def from_grid(domain, grid_values):
    """Fourier-series coefficients of real samples on the domain's own grid."""
    npts = np.prod(domain.grid)
    return sfft.fftn(grid_values, axes=(-3, -2, -1)) / npts


def _gradient_grids(u):
    """Real-space du_j/dx_i as a (3, 3, n1, n2, n3) array, dealiased input."""
    d = u.domain
    k1 = d.ktilde[0][:, None, None]
    k2 = d.ktilde[1][None, :, None]
    k3 = d.ktilde[2][None, None, :]
    c = u.c * d.dealias_mask
    gh = np.empty((3, 3, *d.grid), dtype=np.complex128)
    gh[0] = 1j * k1 * c
    gh[1] = 1j * k2 * c
    gh[2] = 1j * k3 * c
    npts = np.prod(d.grid)
    return sfft.ifftn(gh, axes=(-3, -2, -1)).real * npts


def _velocity_grid_banded(u):
    d = u.domain
    c = u.c * d.dealias_mask
    npts = np.prod(d.grid)
    return sfft.ifftn(c, axes=(-3, -2, -1)).real * npts


def convective_grid(u, v):
    """(u . grad) v evaluated on the physical grid, inputs dealiased."""
    return convect(_velocity_grid_banded(u), _gradient_grids(v))


def trilinear_b(u, v, w):
    """The trilinear form b(u, v, w) = integral (u . grad) v . w dx.

    Evaluated by pseudo-spectral products with 2/3-rule dealiasing; for fields
    in the retained band the grid quadrature of the triple product is exact
    (all integrand modes stay below the grid size).
    """
    _check_same_domain(u, v, w)
    conv = convective_grid(u, v)
    wg = _velocity_grid_banded(w)
    integrand = conv[0] * wg[0] + conv[1] * wg[1] + conv[2] * wg[2]
    return float(u.domain.volume * np.mean(integrand))


def nonlinear_b_field(u, v=None):
    """Leray projection of the dealiased convective term (u . grad) v.

    Satisfies <B(u,v), w> = b(u,v,w) for every test field w in the band.
    """
    if v is None:
        v = u
    _check_same_domain(u, v)
    d = u.domain
    conv = convective_grid(u, v)
    ch = from_grid(d, conv) * d.dealias_mask
    return leray_project(d, ch)


def cutoff_fn(r, n_level):
    """The convective cut-off min{1, N/r}; r = 0 returns 1 by continuity."""
    if n_level <= 0:
        raise ValueError("cut-off level N must be positive")
    if r < 0:
        raise ValueError("cut-off argument must be nonnegative")
    if r <= n_level:
        return 1.0
    return n_level / r


def cutoff_factor(u, n_level, kind=CutoffKind.GRADIENT, scale=1.0):
    """F_N(scale * ||u||) in the kind's norm (scale carries e^z factors)."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    which = "V" if kind == CutoffKind.GRADIENT else "L4"
    return cutoff_fn(scale * norm(u, which), n_level)


def project_low(u, i):
    """Split u into (low, high) across the first ``i`` global eigen-classes.

    Classes are conjugate pairs {k, -k} ordered by ascending |kt|^2 with a
    lexicographic tie-break, so both parts remain real fields.  The high part
    satisfies the spectral-gap inequality ||grad high||^2 >= lam_{i+1} ||high||^2.
    """
    if i < 0:
        raise ValueError("class count must be nonnegative")
    mask = u.domain.low_mode_mask(i)
    low = SpectralVelocity(u.domain, u.c * mask)
    high = SpectralVelocity(u.domain, u.c * ~mask)
    return low, high


def pressure_recover(y, f, n_level, kind=CutoffKind.GRADIENT, offset=None,
                     scale=1.0):
    """Zero-mean pressure of the modified momentum balance.

    Solves -lap p = F_N(||w||) * sum_ij d2(w_i w_j)/dx_i dx_j - div f with the
    effective velocity w = scale * y + offset (offset covers additive-noise
    shifts g*z, scale covers multiplicative e^z).  The quadratic term is
    evaluated exactly on a 2x oversampled grid.
    """
    d = y.domain
    w = SpectralVelocity(d, scale * y.c + (offset.c if offset is not None else 0.0))
    fn = cutoff_factor(w, n_level, kind) if norm(w, "H") > 0 else 1.0

    wg = to_grid(w, oversample=2)
    m = tuple(2 * n for n in d.grid)
    npts_big = np.prod(m)
    prod = np.empty((3, 3, *m))
    for a in range(3):
        for b in range(3):
            prod[a, b] = wg[a] * wg[b]
    phat_big = sfft.fftn(prod, axes=(-3, -2, -1)) / npts_big
    i1, i2, i3 = d.pad_indices(2)
    that = phat_big[:, :, i1[:, None, None], i2[None, :, None], i3[None, None, :]]

    kt = [d.ktilde[0][:, None, None], d.ktilde[1][None, :, None],
          d.ktilde[2][None, None, :]]
    rhs = np.zeros(d.grid, dtype=np.complex128)
    for a in range(3):
        for b in range(3):
            rhs -= fn * kt[a] * kt[b] * that[a, b]
    if f is not None:
        _check_same_domain(y, f)
        rhs -= 1j * (kt[0] * f.c[0] + kt[1] * f.c[1] + kt[2] * f.c[2])
    p = rhs * d.inv_ksq
    p[0, 0, 0] = 0.0
    for a, n in enumerate(d.grid):
        sl = [slice(None)] * 3
        sl[a] = n // 2
        p[tuple(sl)] = 0.0
    return ScalarSpectralField(d, p)


def pressure_forward(p):
    """-lap p, for checking the recovered pressure against its source."""
    return ScalarSpectralField(p.domain, p.c * p.domain.ksq)


# ---------------------------------------------------------------------------
# field constructors

def random_velocity(domain, rng, amplitude=1.0, which="H", kmax=None):
    """Random divergence-free field scaled to the requested norm.

    ``rng`` is a numpy Generator; modes outside the dealias band (and beyond
    ``kmax`` in integer magnitude, when given) are zero.
    """
    shape = (3, *domain.grid)
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    mask = domain.dealias_mask.copy()
    if kmax is not None:
        for a, n in enumerate(domain.grid):
            sh = [1, 1, 1]
            sh[a] = n
            mask &= (np.abs(domain.k_int[a]).reshape(sh) <= kmax)
    raw *= mask
    raw = hermitian_symmetrize(domain, raw)
    u = leray_project(domain, raw)
    cur = norm(u, which)
    if cur == 0.0:
        raise ValueError("random field degenerated to zero; enlarge the band")
    return SpectralVelocity(domain, u.c * (amplitude / cur))


def single_mode_velocity(domain, kvec, direction, amplitude=1.0, phase=0.0):
    """u(x) = amplitude * e * cos(kt . x + phase) with e projected normal to kt."""
    kvec = tuple(int(k) for k in kvec)
    kt = np.array([TWO_PI * kvec[a] / domain.periods[a] for a in range(3)])
    e = np.asarray(direction, dtype=float)
    if np.dot(kt, kt) > 0:
        e = e - kt * (np.dot(e, kt) / np.dot(kt, kt))
    if np.linalg.norm(e) == 0:
        raise ValueError("direction is parallel to the wavevector")
    e = e / np.linalg.norm(e)
    c = np.zeros((3, *domain.grid), dtype=np.complex128)
    idx = tuple(kvec[a] % domain.grid[a] for a in range(3))
    cidx = tuple((-kvec[a]) % domain.grid[a] for a in range(3))
    half = 0.5 * amplitude * np.exp(1j * phase)
    for m in range(3):
        c[(m, *idx)] += half * e[m]
        c[(m, *cidx)] += np.conj(half) * e[m]
    return SpectralVelocity(domain, c)


# ---------------------------------------------------------------------------
# checkpoint serialization
#
# Layout (little-endian): magic b"SGMF", u32 version, u32 header length, the
# UTF-8 JSON header {kind, grid, periods, dealias_fraction, normalization,
# count}, then `count` records.  Velocity records are '<3i6d' (integer
# wavevector, three re/im pairs); scalar records are '<3i2d'.  Every mode in
# the representable band is written in lexicographic bin order.

_MAGIC = b"SGMF"
_VERSION = 1


def _field_records(domain, c):
    n1, n2, n3 = domain.grid
    ncomp = c.shape[0] if c.ndim == 4 else 1
    cc = c if c.ndim == 4 else c[None]
    recs = []
    for i in range(n1):
        for j in range(n2):
            for k in range(n3):
                kint = (int(domain.k_int[0][i]), int(domain.k_int[1][j]),
                        int(domain.k_int[2][k]))
                vals = cc[:, i, j, k]
                if np.abs(vals).max() == 0.0:
                    continue
                recs.append((kint, vals.copy()))
    return ncomp, recs


def save_field(field, path_or_buf):
    kind = "velocity" if isinstance(field, SpectralVelocity) else "scalar"
    d = field.domain
    ncomp, recs = _field_records(d, field.c)
    header = json.dumps({
        "kind": kind,
        "grid": list(d.grid),
        "periods": list(d.periods),
        "dealias_fraction": d.dealias_fraction,
        "normalization": "fourier-series/volume-parseval",
        "count": len(recs),
    }, sort_keys=True).encode()
    out = io.BytesIO()
    out.write(_MAGIC)
    out.write(struct.pack("<II", _VERSION, len(header)))
    out.write(header)
    fmt = "<3i" + "d" * (2 * ncomp)
    for kint, vals in recs:
        parts = []
        for v in vals:
            parts.extend((float(v.real), float(v.imag)))
        out.write(struct.pack(fmt, *kint, *parts))
    data = out.getvalue()
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(data)
    else:
        with open(path_or_buf, "wb") as fh:
            fh.write(data)


def load_field(path_or_buf, domain=None):
    if hasattr(path_or_buf, "read"):
        data = path_or_buf.read()
    else:
        with open(path_or_buf, "rb") as fh:
            data = fh.read()
    if data[:4] != _MAGIC:
        raise ValueError("not a spectral field checkpoint")
    version, hlen = struct.unpack_from("<II", data, 4)
    if version != _VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    header = json.loads(data[12:12 + hlen].decode())
    if domain is None:
        domain = Domain(tuple(header["periods"]), tuple(header["grid"]),
                        header["dealias_fraction"])
    ncomp = 3 if header["kind"] == "velocity" else 1
    fmt = "<3i" + "d" * (2 * ncomp)
    rec_size = struct.calcsize(fmt)
    c = np.zeros((ncomp, *domain.grid), dtype=np.complex128)
    off = 12 + hlen
    for _ in range(header["count"]):
        vals = struct.unpack_from(fmt, data, off)
        off += rec_size
        idx = tuple(vals[a] % domain.grid[a] for a in range(3))
        for m in range(ncomp):
            c[(m, *idx)] = complex(vals[3 + 2 * m], vals[4 + 2 * m])
    if header["kind"] == "velocity":
        return SpectralVelocity(domain, c)
    return ScalarSpectralField(domain, c[0])

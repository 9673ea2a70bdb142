"""Time-dependent forcing families f(t) = f_inf + a(t) f_pert and verifiers.

The verifiers audit the convergence hypothesis on the forcing (the integral
of ||f(t) - f_inf||^2 over (-inf, tau] must vanish as tau -> -inf), the
exponentially weighted uniform-boundedness integral, and the backward
smallness of spatial tails.  Improper integrals are evaluated by trapezoid
quadrature with adaptive truncation where the exponential weight kills the
integrand; suprema over s <= tau are sampled on a finite descending grid
(default 64 points over [tau - 20, tau]).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp

__all__ = [
    "Envelope",
    "ForcingSpec",
    "eval_f",
    "verify_assumption",
    "verify_uniformness",
    "verify_tail_smallness",
    "smoothstep",
]

INF_SENTINEL = float("inf")


@dataclass(frozen=True)
class Envelope:
    """Named scalar modulation a(t).

    kinds: "zero", "exp" (e^t), "exprate" (e^{rate t}), "const" (c),
    "table" (piecewise-linear samples; evaluation outside the table range is
    an error, improper integrals treat the envelope as 0 there).
    """

    kind: str = "zero"
    param: float = 0.0
    table_t: tuple = ()
    table_v: tuple = ()

    def __call__(self, t):
        if self.kind == "zero":
            return 0.0
        if self.kind == "exp":
            return math.exp(t)
        if self.kind == "exprate":
            return math.exp(self.param * t)
        if self.kind == "const":
            return self.param
        if self.kind == "table":
            if not self.table_t:
                raise ValueError("empty envelope table")
            if t < self.table_t[0] - 1e-12 or t > self.table_t[-1] + 1e-12:
                raise ValueError(f"envelope table does not cover t = {t}")
            return float(np.interp(t, self.table_t, self.table_v))
        raise ValueError(f"unknown envelope kind {self.kind!r}")

    def array(self, ts):
        """Vectorized evaluation; table envelopes are 0 outside their range."""
        ts = np.asarray(ts, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(ts)
        if self.kind == "exp":
            return np.exp(ts)
        if self.kind == "exprate":
            return np.exp(self.param * ts)
        if self.kind == "const":
            return np.full_like(ts, self.param)
        if self.kind == "table":
            if not self.table_t:
                raise ValueError("empty envelope table")
            out = np.interp(ts, self.table_t, self.table_v)
            out[(ts < self.table_t[0]) | (ts > self.table_t[-1])] = 0.0
            return out
        raise ValueError(f"unknown envelope kind {self.kind!r}")

    @property
    def integrable_square(self):
        """Whether a(t)^2 has a finite integral over (-inf, tau]."""
        if self.kind in ("zero", "table"):
            return True
        if self.kind == "exp":
            return True
        if self.kind == "exprate":
            return self.param > 0
        if self.kind == "const":
            return self.param == 0.0
        return False


@dataclass
class ForcingSpec:
    """Forcing family f(t) = f_inf + a(t) f_pert plus the additive-noise
    profile g (must have a finite D(A)-norm)."""

    f_inf: sp.SpectralVelocity
    f_pert: sp.SpectralVelocity | None = None
    envelope: Envelope = field(default_factory=Envelope)
    g: sp.SpectralVelocity | None = None

    def __post_init__(self):
        if self.f_pert is not None and self.f_pert.domain != self.f_inf.domain:
            raise ValueError("f_pert lives on a different domain")
        if self.g is not None:
            if self.g.domain != self.f_inf.domain:
                raise ValueError("g lives on a different domain")
            if not np.isfinite(sp.norm(self.g, "DA")):
                raise ValueError("g must have a finite D(A)-norm")

    @property
    def domain(self):
        return self.f_inf.domain

    def norm_sq_at(self, t):
        """||f(t)||_H^2 via the bilinear expansion (no field assembly)."""
        a = self.envelope(t)
        q = sp.norm(self.f_inf, "H") ** 2
        if self.f_pert is not None and a != 0.0:
            q += 2.0 * a * sp.inner_h(self.f_inf, self.f_pert)
            q += a * a * sp.norm(self.f_pert, "H") ** 2
        return q

    def norm_sq_array(self, ts):
        a = self.envelope.array(ts)
        q = np.full_like(a, sp.norm(self.f_inf, "H") ** 2)
        if self.f_pert is not None:
            q += 2.0 * a * sp.inner_h(self.f_inf, self.f_pert)
            q += a * a * sp.norm(self.f_pert, "H") ** 2
        return q

    def diff_norm_sq_at(self, t):
        """||f(t) - f_inf||_H^2 = a(t)^2 ||f_pert||^2."""
        if self.f_pert is None:
            return 0.0
        a = self.envelope(t)
        return a * a * sp.norm(self.f_pert, "H") ** 2

    def diff_norm_sq_array(self, ts):
        if self.f_pert is None:
            return np.zeros_like(np.asarray(ts, dtype=float))
        a = self.envelope.array(ts)
        return a * a * sp.norm(self.f_pert, "H") ** 2


def eval_f(spec, t):
    """Assemble f(t) = f_inf + a(t) f_pert as a spectral field."""
    a = spec.envelope(t)
    if spec.f_pert is None or a == 0.0:
        return spec.f_inf.copy()
    return spec.f_inf + a * spec.f_pert


def _improper_trapezoid(values_at, upper, quad_dt, weight_rate=0.0,
                        rel_tol=1e-14, max_span=400.0, block=4096):
    """Trapezoid of integrand(t) over (-inf, upper], truncated where the
    integrand falls below rel_tol of its running maximum.

    ``values_at(ts)`` evaluates the weighted integrand on a time array;
    ``weight_rate`` > 0 certifies the integrand decays at least like
    e^{weight_rate (t - upper)} so truncation terminates.
    """
    total = 0.0
    peak = 0.0
    t_hi = upper
    spanned = 0.0
    while spanned < max_span:
        t_lo = t_hi - block * quad_dt
        ts = np.linspace(t_lo, t_hi, block + 1)
        ys = np.asarray(values_at(ts), dtype=float)
        total += float(np.trapezoid(ys, ts))
        peak = max(peak, float(np.abs(ys).max()))
        tail_mag = float(np.abs(ys[: block // 8]).max())
        if peak == 0.0 or tail_mag < rel_tol * peak:
            return total
        t_hi = t_lo
        spanned += block * quad_dt
    if weight_rate <= 0:
        raise RuntimeError("improper integral failed to truncate")
    return total


def verify_assumption(spec, tau, quad_dt=1e-3):
    """Quadrature of the convergence integral int_{-inf}^{tau} ||f - f_inf||^2.

    Returns {"value", "satisfied_trend"}; the trend flag checks that the
    integral decreases along tau, tau-5, tau-10.  A non-integrable family
    (e.g. constant nonzero offset) reports an infinite sentinel and a false
    trend.
    """
    if spec.f_pert is None or sp.norm(spec.f_pert, "H") == 0.0:
        return {"value": 0.0, "satisfied_trend": True}
    if not spec.envelope.integrable_square:
        return {"value": INF_SENTINEL, "satisfied_trend": False}

    def value(at):
        if spec.envelope.kind == "table":
            lo = spec.envelope.table_t[0]
            hi = min(at, spec.envelope.table_t[-1])
            if hi <= lo:
                return 0.0
            ts = np.arange(lo, hi + quad_dt / 2, quad_dt)
            return float(np.trapezoid(spec.diff_norm_sq_array(ts), ts))
        rate = 2.0 if spec.envelope.kind == "exp" else 2.0 * spec.envelope.param
        return _improper_trapezoid(spec.diff_norm_sq_array, at, quad_dt, rate)

    v0 = value(tau)
    v5 = value(tau - 5.0)
    v10 = value(tau - 10.0)
    return {"value": v0, "satisfied_trend": bool(v10 < v5 < v0)}


def verify_uniformness(spec, tau, kappa, quad_dt=1e-3, s_points=64, s_span=20.0):
    """sup over a descending s-grid of int_{-inf}^{s} e^{kappa (r - s)} ||f(r)||^2 dr."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if spec.envelope.kind == "exprate" and spec.envelope.param < 0:
        return INF_SENTINEL  # e^{2 param t} blows up backward in time

    best = 0.0
    for s in np.linspace(tau - s_span, tau, s_points):
        val = _improper_trapezoid(
            lambda r, s=s: np.exp(kappa * (r - s)) * spec.norm_sq_array(r),
            s, quad_dt, kappa)
        best = max(best, val)
    return best


def smoothstep(xi):
    """C^2 cut-off: 0 on [0, 1], 1 on [2, inf), quintic smoothstep between.

    Both derivatives are bounded (|rho'| <= 1.875, |rho''| <= 5.8) and vanish
    at the junction points.
    """
    t = np.clip(np.asarray(xi, dtype=float) - 1.0, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def radial_cutoff(domain, k, oversample=2):
    """rho(|x|^2 / k^2) on the (oversampled) centered physical grid: 0 inside
    radius k, 1 beyond sqrt(2) k."""
    if math.sqrt(2.0) * k > min(domain.periods) / 2.0 + 1e-12:
        raise ValueError("cut-off support sqrt(2) k must fit in the half-period")
    if k <= 0:
        raise ValueError("tail radius must be positive")
    axes = []
    for a, n in enumerate(domain.grid):
        m = oversample * n
        x = np.arange(m) * (domain.periods[a] / m)
        x = np.where(x >= domain.periods[a] / 2.0, x - domain.periods[a], x)
        axes.append(x)
    r2 = (axes[0][:, None, None] ** 2 + axes[1][None, :, None] ** 2
          + axes[2][None, None, :] ** 2)
    return smoothstep(r2 / (k * k))


def tail_weight(domain, k, oversample=2):
    """rho^2(|x|^2 / k^2), the quadrature weight of the tail mass."""
    rho = radial_cutoff(domain, k, oversample)
    return rho * rho


def _tail_bilinear(u, v, weight, oversample=2):
    gu = sp.to_grid(u, oversample)
    gv = sp.to_grid(v, oversample)
    integrand = gu[0] * gv[0] + gu[1] * gv[1] + gu[2] * gv[2]
    return float(u.domain.volume * np.mean(weight * integrand))


def verify_tail_smallness(spec, tau, kappa, k_list, quad_dt=1e-2,
                          s_points=16, s_span=20.0):
    """Backward tail profile of the forcing for each radius in ``k_list``.

    For each k evaluates sup over the s-grid of
    int_{-inf}^{s} e^{kappa (r-s)} int rho^2(|x|^2/k^2) |f(x, r)|^2 dx dr
    using the bilinear expansion of |f|^2 in (1, a(r)) so the field tails are
    integrated once per radius.  The returned sequence is non-increasing in k.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    out = []
    for k in k_list:
        wgt = tail_weight(spec.domain, k)
        t_ii = _tail_bilinear(spec.f_inf, spec.f_inf, wgt)
        if spec.f_pert is not None:
            t_ip = _tail_bilinear(spec.f_inf, spec.f_pert, wgt)
            t_pp = _tail_bilinear(spec.f_pert, spec.f_pert, wgt)
        else:
            t_ip = t_pp = 0.0

        def tail_at(r):
            a = spec.envelope.array(r)
            return t_ii + 2.0 * a * t_ip + a * a * t_pp

        if spec.envelope.kind == "exprate" and spec.envelope.param < 0:
            out.append(INF_SENTINEL)
            continue
        best = 0.0
        for s in np.linspace(tau - s_span, tau, s_points):
            val = _improper_trapezoid(
                lambda r, s=s: np.exp(kappa * (r - s)) * tail_at(r),
                s, quad_dt, kappa)
            best = max(best, val)
        out.append(best)
    return out

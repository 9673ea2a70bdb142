"""Pullback attractor estimation and the asymptotic-autonomy experiments.

An attractor section is operationalized as the endpoint cloud of an ensemble
evolved over increasing pullback horizons: the cloud at horizon t collects
the states at time tau of trajectories started at tau - t from sampled
initial data, driven through the fiber-shifted noise path.  The Cauchy gap
between consecutive horizon clouds measures the resolution of the estimate;
reports always carry it.

All members and seeds use counter-based streams, so clouds are deterministic
and experiments at different tau values share their noise (common random
numbers), which is what makes the autonomy comparisons sharp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from . import dynamics as dy
from . import forcing as fc
from . import spectral as sp
from . import stochastic as st

__all__ = [
    "EnsembleSpec",
    "AttractorCloud",
    "AttractorEstimate",
    "hausdorff_semidistance",
    "pullback_cloud",
    "attractor_estimate",
    "autonomy_curve",
    "backward_convergence_experiment",
    "path_continuity_experiment",
    "robustness_in_probability",
]


@dataclass
class EnsembleSpec:
    """Ensemble of initial data and the pullback horizons to sweep.

    sampler: ("ball", radius) draws H-norms uniformly in [0, radius];
    ("tempered", radius, growth) scales the radius by (1 + t)^growth at
    pullback horizon t (sub-exponential backward growth).
    """

    member_count: int = 32
    sampler: tuple = ("ball", 0.5)
    horizons: tuple = (1.0, 2.0, 4.0, 8.0, 16.0)
    ic_seed: int = 7
    ic_kmax: int | None = None

    def __post_init__(self):
        if self.member_count < 2:
            raise ValueError("need at least two ensemble members")
        if any(b <= a for a, b in zip(self.horizons, self.horizons[1:])):
            raise ValueError("horizons must be strictly increasing")
        if self.sampler[0] not in ("ball", "tempered"):
            raise ValueError(f"unknown sampler {self.sampler[0]!r}")

    def radius_at(self, horizon):
        if self.sampler[0] == "ball":
            return self.sampler[1]
        r0, growth = self.sampler[1], self.sampler[2]
        return r0 * (1.0 + horizon) ** growth

    def draw(self, domain, horizon):
        """The initial cloud for one pullback horizon (deterministic)."""
        out = []
        radius = self.radius_at(horizon)
        for m in range(self.member_count):
            rng = st.rng_for(self.ic_seed, f"ic-{m}")
            u = sp.random_velocity(domain, rng, amplitude=1.0,
                                   kmax=self.ic_kmax)
            scale = radius * rng.uniform(0.0, 1.0)
            out.append(sp.SpectralVelocity(domain, u.c * scale))
        return out


@dataclass
class AttractorCloud:
    points: list
    tau: float
    horizon: float
    failed_members: list = field(default_factory=list)


@dataclass
class AttractorEstimate:
    """Finite cloud approximating an attractor section, with resolution data."""

    points: list
    tau: float
    omega_seed: int
    pullback_horizon: float
    cauchy_gap: float
    gaps: list = field(default_factory=list)
    converged: bool = True

    def __post_init__(self):
        if not self.points:
            raise ValueError("attractor estimate must be nonempty")
        if self.cauchy_gap < 0:
            raise ValueError("cauchy_gap must be nonnegative")


def _pack(points):
    arrs = [np.concatenate((p.c.real.ravel(), p.c.imag.ravel())) for p in points]
    scale = math.sqrt(points[0].domain.volume)
    return np.stack(arrs) * scale


def hausdorff_semidistance(a_points, b_points):
    """sup_{a in A} inf_{b in B} ||a - b||_H (asymmetric)."""
    if not a_points or not b_points:
        raise ValueError("semidistance of an empty point set")
    dm = cdist(_pack(a_points), _pack(b_points))
    return float(dm.min(axis=1).max())


def _default_path(omega_seed, sigma, dt, t_lo, t_hi):
    w = st.sample_wiener(t_lo, t_hi, dt, omega_seed)
    return st.ou_from_wiener(w, sigma)


def _cocycle(cfg):
    if cfg.noise_mode == "additive":
        return dy.cocycle_phi
    if cfg.noise_mode == "multiplicative":
        return dy.cocycle_psi
    raise ValueError("pullback experiments need a stochastic noise mode")


def pullback_cloud(tau, t, ou, ens, spec, cfg):
    """Endpoint cloud at time tau of members started at tau - t.

    ``ou`` is the fiber path (must cover shifted times [-t, 0]); members that
    abort integration are flagged, and the cloud is valid while at least half
    survive.
    """
    domain = spec.domain
    cocycle = _cocycle(cfg)
    base = st.shift(ou, -t) if t != 0 else ou
    points = []
    failed = []
    for m, u0 in enumerate(ens.draw(domain, t)):
        try:
            points.append(cocycle(t, tau - t, base, u0, spec, cfg))
        except dy.NumericalError as err:
            failed.append((m, str(err)))
    if len(points) < ens.member_count / 2:
        raise dy.NumericalError(
            f"cloud collapsed: {len(failed)} of {ens.member_count} members failed")
    return AttractorCloud(points=points, tau=tau, horizon=t, failed_members=failed)


def attractor_estimate(tau, omega_seed, ens, spec, cfg, ou=None):
    """Horizon-increasing cloud estimate of the attractor section at tau.

    The estimate is the final-horizon cloud; cauchy_gap is its semidistance
    to the previous cloud, and the converged flag reports whether the gap
    sequence is eventually decreasing.
    """
    t_max = ens.horizons[-1]
    if ou is None:
        ou = _default_path(omega_seed, cfg.sigma, cfg.dt, -t_max, 0.0)
    clouds = [pullback_cloud(tau, t, ou, ens, spec, cfg) for t in ens.horizons]
    gaps = [hausdorff_semidistance(b.points, a.points)
            for a, b in zip(clouds, clouds[1:])]
    if len(gaps) >= 3:
        converged = gaps[-1] <= gaps[-2] <= gaps[-3]
    elif len(gaps) == 2:
        converged = gaps[-1] <= gaps[-2]
    else:
        converged = True
    return AttractorEstimate(points=clouds[-1].points, tau=tau,
                             omega_seed=omega_seed,
                             pullback_horizon=t_max,
                             cauchy_gap=gaps[-1] if gaps else 0.0,
                             gaps=gaps, converged=bool(converged))


def _autonomous_twin(spec):
    return fc.ForcingSpec(f_inf=spec.f_inf, f_pert=None,
                          envelope=fc.Envelope("zero"), g=spec.g)


def autonomy_curve(tau_list, omega_seeds, ens, spec, cfg):
    """dist_H(A_est(tau, omega), A_inf_est(omega)) for each tau, per seed.

    The autonomous reference uses f == f_inf on the same noise (common
    random numbers).  Specs violating the convergence assumption are
    rejected.
    """
    chk = fc.verify_assumption(spec, min(tau_list))
    if not math.isfinite(chk["value"]):
        raise ValueError("forcing family violates the convergence assumption")
    if isinstance(omega_seeds, int):
        omega_seeds = [omega_seeds]
    auto = _autonomous_twin(spec)
    t_max = ens.horizons[-1]
    rows = []
    per_seed = {}
    for seed in omega_seeds:
        ou = _default_path(seed, cfg.sigma, cfg.dt, -t_max, 0.0)
        ref = attractor_estimate(0.0, seed, ens, auto, cfg, ou=ou)
        dists = {}
        for tau in tau_list:
            est = attractor_estimate(tau, seed, ens, spec, cfg, ou=ou)
            dists[tau] = hausdorff_semidistance(est.points, ref.points)
        per_seed[seed] = dists
    for tau in tau_list:
        med = float(np.median([per_seed[s][tau] for s in omega_seeds]))
        rows.append((tau, med))
    by_decreasing_tau = sorted(rows, key=lambda r: -r[0])
    monotone = all(b[1] <= a[1] * 1.10 for a, b in
                   zip(by_decreasing_tau, by_decreasing_tau[1:]))
    return {"rows": rows, "per_seed": per_seed, "monotone_trend": monotone}


def backward_convergence_experiment(T, tau_list, omega_seed, spec, cfg,
                                    ic_seed=5, ic_amplitude=0.3):
    """Error between pulled-back and autonomous solutions over a window T.

    Both runs start from the same state and share the noise; the error is
    driven purely by the forcing difference, which for the exponential family
    makes err^2 scale like e^{2 tau}.  Returns per-tau errors and the fitted
    exponential rate of err^2 in tau.
    """
    domain = spec.domain
    auto = _autonomous_twin(spec)
    ou = _default_path(omega_seed, cfg.sigma, cfg.dt, 0.0, T)
    y0 = sp.random_velocity(domain, st.rng_for(ic_seed, "backward-ic"),
                            amplitude=ic_amplitude)
    ref = dy.integrate(y0, 0.0, T, ou, auto, cfg,
                       record_stride=10 ** 9).final.y
    rows = []
    for tau in tau_list:
        path = st.shift(ou, -tau)
        got = dy.integrate(y0, tau, tau + T, path, spec, cfg,
                           record_stride=10 ** 9).final.y
        rows.append((tau, (got - ref).norm("H")))
    taus = np.array([r[0] for r in rows])
    errs = np.array([max(r[1], 1e-300) for r in rows])
    if np.all(errs > 1e-250) and len(rows) >= 2:
        slope = float(np.polyfit(taus, np.log(errs ** 2), 1)[0])
    else:
        slope = float("nan")
    return {"rows": rows, "fitted_rate": slope}


def path_continuity_experiment(deltas, omega_seed, spec, cfg, tau=0.0, T=1.0,
                               ic_seed=6, ic_amplitude=0.3, sample_stride=25):
    """Response of the trajectory to perturbations of the Wiener increments.

    For each delta the increments become dW + delta dW' (independent W') and
    the run restarts from the same state; reported are the sup-norm error
    over [tau, tau+T] and the path distances in the z and e^z channels.
    """
    domain = spec.domain
    n_steps = round(T / cfg.dt)
    base_inc = st.rng_for(omega_seed, "wiener").standard_normal(n_steps) \
        * math.sqrt(cfg.dt)
    pert_inc = st.rng_for(omega_seed, "path-pert").standard_normal(n_steps) \
        * math.sqrt(cfg.dt)
    y0 = sp.random_velocity(domain, st.rng_for(ic_seed, "continuity-ic"),
                            amplitude=ic_amplitude)

    def run(delta):
        w = st.wiener_from_increments(0.0, cfg.dt, base_inc + delta * pert_inc,
                                      seed=omega_seed, anchor=0)
        z = st.ou_from_wiener(w, cfg.sigma,
                              init=("stationary", omega_seed))
        path = st.shift(z, -tau) if tau != 0 else z
        traj = dy.integrate(y0, tau, tau + T, path, spec, cfg,
                            record_stride=sample_stride, keep_states=True)
        return z, traj

    z0, base = run(0.0)
    rows = []
    for delta in deltas:
        zd, traj = run(delta)
        sup_err = max((a.y - b.y).norm("H")
                      for a, b in zip(traj.states, base.states))
        dz = float(np.abs(zd.values - z0.values).max())
        dez = float(np.abs(np.exp(zd.values) - np.exp(z0.values)).max())
        rows.append({"delta": delta, "sup_err": sup_err,
                     "dist_z": dz, "dist_exp_z": dez})
    return {"rows": rows}


def robustness_in_probability(tau_list, delta, seeds, ens, spec, cfg):
    """Fraction of seeds with dist_H(A_est(tau), A_inf_est) >= delta."""
    if len(seeds) < 2:
        raise ValueError("need several seeds for an empirical probability")
    curve = autonomy_curve(tau_list, list(seeds), ens, spec, cfg)
    rows = []
    for tau in tau_list:
        hits = sum(1 for s in seeds if curve["per_seed"][s][tau] >= delta)
        rows.append((tau, hits / len(seeds)))
    return {"rows": rows, "per_seed": curve["per_seed"], "delta": delta}

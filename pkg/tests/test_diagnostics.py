import math

import numpy as np
import pytest

from sgmnse import diagnostics as dg
from sgmnse import dynamics as dy
from sgmnse import forcing as fc
from sgmnse import spectral as sp
from sgmnse import stochastic as st


def randvel(domain, seed, amplitude=0.5, **kw):
    return sp.random_velocity(domain, np.random.default_rng(seed),
                              amplitude=amplitude, **kw)


@pytest.fixture(scope="module")
def chat(domain):
    return dg.estimate_trilinear_constant(domain, samples=400, seed=9)


@pytest.fixture(scope="module")
def table(domain, forcing_const, solver_additive, chat):
    return dg.derive_constants(domain, solver_additive, forcing_const,
                               c_hat=chat)


class TestConstants:
    def test_g_zero_specialization(self, domain, solver_additive, chat):
        spec = fc.ForcingSpec(f_inf=randvel(domain, 1))
        t = dg.derive_constants(domain, solver_additive, spec, c_hat=chat)
        assert t.r3 == 0.0
        assert t.r4 == pytest.approx(2.0 * max(t.r3, t.r2))

    def test_doubling_n_quadruples_gterm(self, domain, forcing_const, chat):
        import dataclasses
        base = dy.SolverConfig(noise_mode="additive", n_level=8.0)
        t1 = dg.derive_constants(domain, base, forcing_const, c_hat=chat)
        t2 = dg.derive_constants(domain,
                                 dataclasses.replace(base, n_level=16.0),
                                 forcing_const, c_hat=chat)
        g1 = t1.r1 * (1 + 8.0 ** 2) * t1.g_v ** 2
        g2 = t2.r1 * (1 + 16.0 ** 2) * t2.g_v ** 2
        assert g2 / g1 == pytest.approx(257.0 / 65.0, rel=1e-12)

    def test_monotonicity_coefficient_formula(self, table, chat,
                                              solver_additive):
        expect = (2 * chat * solver_additive.n_level) ** 4 \
            / solver_additive.nu ** 3
        assert table.kappa_mono == pytest.approx(expect, rel=1e-12)

    def test_validation(self, table):
        table.validate()

    def test_hi_se_bound_respected_by_fresh_samples(self, domain, chat):
        rng = np.random.default_rng(77)
        for _ in range(100):
            u = sp.random_velocity(domain, rng)
            v = sp.random_velocity(domain, rng)
            w = sp.random_velocity(domain, rng)
            bound = chat * sp.norm(u, "V") * sp.norm(v, "V") \
                * math.sqrt(sp.norm(w, "H")) * math.sqrt(sp.norm(w, "V"))
            assert abs(sp.trilinear_b(u, v, w)) <= bound


class TestEnergyAudit:
    def test_rest_state_trivial(self, domain, forcing_zero):
        cfg = dy.SolverConfig(noise_mode="multiplicative")
        w0 = st.wiener_from_increments(-1.0, 2e-3, np.zeros(1000), seed=1)
        z0 = st.ou_from_wiener(w0, 1.0, init=("value", 0.0))
        traj = dy.integrate(sp.zero_velocity(domain), 0.0, 0.5, z0,
                            forcing_zero, cfg)
        rep = dg.energy_audit(traj.ledger, "multiplicative_ei1")
        assert rep["satisfied"] and rep["max_defect"] <= 0.0

    def test_additive_needs_constants(self, domain, forcing_const,
                                      solver_additive):
        traj = dy.integrate(randvel(domain, 2), 0.0, 0.05,
                            st.ou_from_wiener(
                                st.sample_wiener(0, 0.05, 2e-3, 3), 1.0),
                            forcing_const, solver_additive)
        with pytest.raises(ValueError):
            dg.energy_audit(traj.ledger, "additive_ei1n")

    def test_additive_audit_passes(self, domain, forcing_const,
                                   solver_additive, table):
        z = st.ou_from_wiener(st.sample_wiener(0, 1.0, 2e-3, 4), 1.0)
        traj = dy.integrate(randvel(domain, 3, amplitude=0.8), 0.0, 1.0, z,
                            forcing_const, solver_additive)
        rep = dg.energy_audit(traj.ledger, "additive_ei1n", table)
        assert rep["satisfied"]

    def test_integrating_factor_oracle_zero_forcing(self, domain,
                                                    forcing_zero):
        # ||y(t)||^2 <= ||y(0)||^2 exp(-int (nu lam - 2 sigma z)) + dt-slack
        cfg = dy.SolverConfig(noise_mode="multiplicative")
        z = st.ou_from_wiener(st.sample_wiener(0, 1.0, 2e-3, 5), 1.0)
        traj = dy.integrate(randvel(domain, 4), 0.0, 1.0, z, forcing_zero,
                            cfg)
        led = traj.ledger
        rate = cfg.nu * domain.lam - 2 * cfg.sigma * led.z
        from scipy.integrate import cumulative_trapezoid
        integ = np.concatenate(([0.0], cumulative_trapezoid(rate, led.t)))
        bound = led.h2[0] * np.exp(-integ)
        assert np.all(led.h2 <= bound * (1 + 20 * cfg.dt))

    def test_sabotaged_constant_fails(self, domain, solver_additive, chat):
        import dataclasses
        # steady single-mode run: the energy balance is active every step,
        # so a hundredfold-weakened R4 must be caught
        f = sp.single_mode_velocity(domain, (1, 0, 0), (0, 1, 0), 0.02)
        spec = fc.ForcingSpec(f_inf=f, envelope=fc.Envelope("zero"))
        table = dg.derive_constants(domain, solver_additive, spec, c_hat=chat)
        bad = dataclasses.replace(table, r4=table.r4 / 100.0)
        y0 = sp.SpectralVelocity(domain, f.c / 0.5)  # nu A y = f at |k|=1
        w0 = st.wiener_from_increments(0.0, 2e-3, np.zeros(500), seed=1,
                                       anchor=0)
        z0 = st.ou_from_wiener(w0, 1.0, init=("value", 0.0))
        traj = dy.integrate(y0, 0.0, 1.0, z0, spec, solver_additive)
        good = dg.energy_audit(traj.ledger, "additive_ei1n", table)
        rep = dg.energy_audit(traj.ledger, "additive_ei1n", bad)
        assert good["satisfied"]
        assert not rep["satisfied"]

    def test_appendix_integrated_audit(self, domain):
        spec = fc.ForcingSpec(f_inf=randvel(domain, 6, amplitude=0.4),
                              envelope=fc.Envelope("zero"))
        cfg = dy.SolverConfig(noise_mode="deterministic_l4",
                              kind=sp.CutoffKind.L4)
        traj = dy.integrate(randvel(domain, 7), 0.0, 1.0, None, spec, cfg,
                            record_stride=25)
        rep = dg.energy_audit(traj.ledger, "appendix_ei")
        assert rep["satisfied"]

    def test_defect_refinement_critical_run(self, domain):
        # margin-free run: defect is purely discretization, halves with dt
        nu, lam = 0.5, domain.lam
        y0 = sp.single_mode_velocity(domain, (1, 0, 0), (0, 1, 0), 0.05)
        fpert = sp.SpectralVelocity(domain, (nu * lam / 2) * y0.c)
        spec = fc.ForcingSpec(f_inf=sp.zero_velocity(domain), f_pert=fpert,
                              envelope=fc.Envelope("exprate", -nu * lam / 2))
        defects = []
        for dt in (4e-3, 2e-3):
            cfg = dy.SolverConfig(noise_mode="multiplicative", dt=dt, nu=nu)
            w0 = st.wiener_from_increments(0.0, dt, np.zeros(round(2 / dt)),
                                           seed=1, anchor=0)
            z0 = st.ou_from_wiener(w0, 1.0, init=("value", 0.0))
            traj = dy.integrate(y0, 0.0, 2.0, z0, spec, cfg)
            defects.append(dg.energy_audit(traj.ledger,
                                           "multiplicative_ei1")["max_defect"])
        assert defects[0] > 0
        assert defects[0] / defects[1] >= 1.5


class TestAbsorbingRadii:
    @pytest.fixture(scope="class")
    def zero_path(self):
        w0 = st.wiener_from_increments(-60.0, 0.02, np.zeros(3050), seed=1)
        return st.ou_from_wiener(w0, 1.0, init=("value", 0.0))

    def test_constant_forcing_closed_form(self, domain, zero_path):
        spec = fc.ForcingSpec(f_inf=randvel(domain, 8, amplitude=0.7))
        got = dg.absorbing_radius_R(spec, zero_path, -1.0, 0.5, domain.lam,
                                    sup_points=2)
        expect = sp.norm(spec.f_inf, "H") ** 2 / (0.5 * domain.lam)
        assert got["R"] == pytest.approx(expect, rel=1e-4)

    def test_exp_family_closed_form(self, domain, zero_path):
        f = randvel(domain, 9, amplitude=0.6)
        spec = fc.ForcingSpec(f_inf=f, f_pert=f.copy(),
                              envelope=fc.Envelope("exp"))
        s = -2.0
        nl = 0.5 * domain.lam
        nrm2 = sp.norm(f, "H") ** 2
        expect = nrm2 * (1 / nl + 2 * math.exp(s) / (nl + 1)
                         + math.exp(2 * s) / (nl + 2))
        got = dg.absorbing_radius_R(spec, zero_path, s, 0.5, domain.lam,
                                    sup_points=2)
        assert got["R"] == pytest.approx(expect, rel=1e-4)

    def test_sup_monotone_in_s(self, domain, zero_path):
        f = randvel(domain, 10, amplitude=0.6)
        spec = fc.ForcingSpec(f_inf=f, f_pert=f.copy(),
                              envelope=fc.Envelope("exp"))
        sups = [dg.absorbing_radius_R(spec, zero_path, s, 0.5, domain.lam,
                                      sup_points=16)["sup_R"]
                for s in (-4.0, -2.0, 0.0)]
        assert sups[0] <= sups[1] <= sups[2]

    def test_k_reduces_to_r_when_z_zero(self, domain, zero_path):
        spec = fc.ForcingSpec(f_inf=randvel(domain, 11, amplitude=0.7))
        r = dg.absorbing_radius_R(spec, zero_path, -1.0, 0.5, domain.lam,
                                  sup_points=2)
        k = dg.absorbing_radius_K(spec, zero_path, -1.0, 0.5, domain.lam, 1.0,
                                  sup_points=2)
        assert k["K"] == pytest.approx(r["R"], rel=1e-12)

    @staticmethod
    def _subsample(z, step):
        return st.OUPath(sigma=z.sigma, t_lo=z.t_lo, t_hi=z.t_hi,
                         dt=z.dt * step, values=z.values[::step],
                         coupled=z.coupled[::step], source=None, init=z.init)

    def test_k_quadrature_refinement_smooth_path(self, domain):
        # deterministic decay path isolates the nested-quadrature error:
        # dt vs dt/8 must agree to 1e-3 relative
        spec = fc.ForcingSpec(f_inf=randvel(domain, 12, amplitude=0.7))
        dense_dt = 0.04 / 8
        n = round(60.0 / dense_dt)
        w0 = st.wiener_from_increments(-60.0, dense_dt, np.zeros(n), seed=1)
        z = st.ou_from_wiener(w0, 0.1, init=("value", 1.5))
        k_dense = dg.absorbing_radius_K(spec, z, -1.0, 0.5, domain.lam, 1.0,
                                        sup_points=2)["K"]
        k_coarse = dg.absorbing_radius_K(spec, self._subsample(z, 8), -1.0,
                                         0.5, domain.lam, 1.0,
                                         sup_points=2)["K"]
        assert k_coarse == pytest.approx(k_dense, rel=1e-3)

    def test_k_same_path_consistency(self, domain):
        # a rough stochastic path: coarse quadrature of the same realization
        # stays within the O(sqrt(dt)) roughness envelope
        spec = fc.ForcingSpec(f_inf=randvel(domain, 12, amplitude=0.7))
        w = st.sample_wiener(-60.0, 0.0, 0.01 / 8, 13)
        z = st.ou_from_wiener(w, 1.0)
        k_dense = dg.absorbing_radius_K(spec, z, -1.0, 0.5, domain.lam, 1.0,
                                        sup_points=2)["K"]
        k_coarse = dg.absorbing_radius_K(spec, self._subsample(z, 8), -1.0,
                                         0.5, domain.lam, 1.0,
                                         sup_points=2)["K"]
        assert k_coarse == pytest.approx(k_dense, rel=5e-2)

    def test_insufficient_coverage_rejected(self, domain):
        spec = fc.ForcingSpec(f_inf=randvel(domain, 14))
        w = st.sample_wiener(-2.0, 0.0, 0.01, 15)
        z = st.ou_from_wiener(w, 1.0)
        with pytest.raises(ValueError):
            dg.absorbing_radius_R(spec, z, 0.0, 0.5, domain.lam)

    def test_absorption_check(self):
        data = {1.0: [5.0, 7.0], 2.0: [2.0, 1.5], 4.0: [0.9, 0.7],
                8.0: [0.5, 0.6]}
        rep = dg.trajectory_absorption_check(data, 1.0)
        assert rep["absorbed"] and rep["entry_horizon"] == 4.0
        rep2 = dg.trajectory_absorption_check(data, 0.1)
        assert not rep2["absorbed"]

    def test_decay_time_formula_zero_forcing(self, domain, forcing_zero):
        # entry horizon ~ log(h2_0 / radius) / (nu lam) for pure decay
        cfg = dy.SolverConfig(noise_mode="deterministic_l4", dt=5e-3)
        y0 = sp.single_mode_velocity(domain, (1, 0, 0), (0, 1, 0), 0.05)
        h2_0 = sp.norm(y0, "H") ** 2
        radius = h2_0 * math.exp(-2.0)  # should absorb near t = 2/(nu lam)
        data = {}
        for t in (1.0, 2.0, 3.0, 5.0, 7.0):
            traj = dy.integrate(y0, 0.0, t, None, forcing_zero, cfg,
                                record_stride=10 ** 9)
            data[t] = [traj.ledger.h2[-1]]
        rep = dg.trajectory_absorption_check(data, radius)
        t_expect = 2.0 / (0.5 * domain.lam)
        assert rep["absorbed"]
        assert abs(rep["entry_horizon"] - math.ceil(t_expect)) <= 2.0


class TestTailFlattening:
    def test_tail_limit_small_k(self, domain):
        y = randvel(domain, 16)
        # k -> 0 is excluded by the fit constraint; smallest usable k already
        # captures nearly everything outside a tiny ball
        small = dg.tail_mass(y, 0.05)
        assert small == pytest.approx(sp.norm(y, "H") ** 2, rel=5e-2)

    def test_tail_nonincreasing_in_k(self, domain):
        y = randvel(domain, 17)
        ks = (0.5, 1.0, 1.5, 2.0)
        vals = [dg.tail_mass(y, k) for k in ks]
        for a, b in zip(vals, vals[1:]):
            assert b <= a + 1e-12

    def test_localized_field_small_tail(self, domain):
        # curl of a Gaussian vector potential: compactly concentrated and
        # exactly divergence-free before band-limiting
        x = np.arange(16) * (domain.periods[0] / 16)
        x = np.where(x >= math.pi, x - 2 * math.pi, x)
        r2 = (x[:, None, None] ** 2 + x[None, :, None] ** 2
              + x[None, None, :] ** 2)
        psi = np.exp(-r2 / 0.6)
        psi_hat = sp.from_grid(domain, psi)
        kt = [domain.ktilde[0][:, None, None], domain.ktilde[1][None, :, None],
              domain.ktilde[2][None, None, :]]
        raw = np.stack([1j * kt[1] * psi_hat, -1j * kt[0] * psi_hat,
                        np.zeros_like(psi_hat)])
        raw *= domain.dealias_mask
        y = sp.leray_project(domain, sp.hermitian_symmetrize(domain, raw))
        k = 2.2
        assert dg.tail_mass(y, k) < 1e-3 * sp.norm(y, "H") ** 2

    def test_flattening_i_zero_total(self, domain):
        y = randvel(domain, 18)
        k = 1.5
        rho = fc.radial_cutoff(domain, k, oversample=1)
        g = sp.to_grid(y)
        w = (1.0 - rho) * g
        expect = domain.volume * np.mean(w[0] ** 2 + w[1] ** 2 + w[2] ** 2)
        assert dg.flattening_residual(y, k, 0) == pytest.approx(expect,
                                                                rel=1e-12)

    def test_flattening_full_projection_zero(self, domain):
        y = randvel(domain, 19)
        assert dg.flattening_residual(y, 1.5, domain.class_count) == 0.0

    def test_flattening_nonincreasing_in_i(self, domain):
        y = randvel(domain, 20)
        vals = [dg.flattening_residual(y, 1.5, i) for i in (0, 1, 5, 20, 100)]
        for a, b in zip(vals, vals[1:]):
            assert b <= a + 1e-15

    def test_fl11_uniform_bound(self, domain):
        # ||(I-P_i)(varrho_k y)||^2 <= C ||y||^2 with C independent of i, k
        worst = 0.0
        for seed in range(10):
            y = randvel(domain, 30 + seed)
            h2 = sp.norm(y, "H") ** 2
            for k in (1.0, 1.6, 2.2):
                for i in (0, 3, 17, 80):
                    worst = max(worst,
                                dg.flattening_residual(y, k, i) / h2)
        assert worst <= 1.0 + 1e-9  # varrho <= 1 pointwise


class TestMonotonicity:
    def test_equal_inputs(self, domain, table):
        y = randvel(domain, 21)
        rep = dg.monotonicity_check(y, y, 0.2, table)
        assert rep["satisfied"] and rep["lhs"] == 0.0 and rep["rhs"] == 0.0

    def test_against_zero(self, domain, table):
        y1 = randvel(domain, 22, amplitude=3.0, which="V")
        rep = dg.monotonicity_check(y1, sp.zero_velocity(domain), 0.0, table)
        assert rep["satisfied"]

    def test_random_pairs(self, domain, table):
        rng = np.random.default_rng(23)
        n_level = table.n_level
        for _ in range(50):
            y1 = sp.random_velocity(domain, rng,
                                    amplitude=rng.uniform(0, 5 * n_level),
                                    which="V")
            y2 = sp.random_velocity(domain, rng,
                                    amplitude=rng.uniform(0, 5 * n_level),
                                    which="V")
            assert dg.monotonicity_check(y1, y2, rng.normal(0, 0.5),
                                         table)["satisfied"]


class TestGronwall:
    def _pair(self, domain, spec, cfg, eps_amp):
        z = st.ou_from_wiener(st.sample_wiener(0, 0.5, cfg.dt, 24), cfg.sigma)
        y0 = randvel(domain, 24)
        eps = randvel(domain, 25, amplitude=eps_amp)
        a = dy.integrate(y0, 0, 0.5, z, spec, cfg, record_stride=25,
                         keep_states=True)
        b = dy.integrate(y0 + eps, 0, 0.5, z, spec, cfg, record_stride=25,
                         keep_states=True)
        return a, b

    def test_identical_bitwise(self, domain, forcing_zero, table):
        cfg = dy.SolverConfig(noise_mode="multiplicative")
        a, _ = self._pair(domain, forcing_zero, cfg, 1e-7)
        z = st.ou_from_wiener(st.sample_wiener(0, 0.5, cfg.dt, 24), cfg.sigma)
        y0 = randvel(domain, 24)
        c = dy.integrate(y0, 0, 0.5, z, forcing_zero, cfg, record_stride=25,
                         keep_states=True)
        rep = dg.gronwall_contraction_check(a, c, table)
        assert rep["identical_start"] and rep["bitwise_equal"]

    def test_perturbed_bound(self, domain, forcing_const, table):
        cfg = dy.SolverConfig(noise_mode="multiplicative")
        a, b = self._pair(domain, forcing_const, cfg, 1e-6)
        rep = dg.gronwall_contraction_check(a, b, table)
        assert rep["satisfied"]

    def test_zero_noise_contraction_rate(self, domain, forcing_zero, table):
        # small N, zero noise/forcing: contraction at rate >= nu lam - defect
        cfg = dy.SolverConfig(noise_mode="multiplicative", n_level=0.1)
        w0 = st.wiener_from_increments(0.0, cfg.dt, np.zeros(500), seed=1,
                                       anchor=0)
        z0 = st.ou_from_wiener(w0, 1.0, init=("value", 0.0))
        y0 = randvel(domain, 26, amplitude=0.05, kmax=1)
        eps = randvel(domain, 27, amplitude=1e-4, kmax=1)
        a = dy.integrate(y0, 0, 1.0, z0, forcing_zero, cfg,
                         record_stride=100, keep_states=True)
        b = dy.integrate(y0 + eps, 0, 1.0, z0, forcing_zero, cfg,
                         record_stride=100, keep_states=True)
        d0 = (a.states[0].y - b.states[0].y).norm("H")
        d1 = (a.states[-1].y - b.states[-1].y).norm("H")
        rate = -math.log(d1 / d0) / 1.0
        assert rate >= 0.5 * domain.lam * 0.9


class TestPressureBound:
    def test_zero_state_ratio(self, domain):
        f = randvel(domain, 28)
        rep = dg.pressure_bound_check(
            [(sp.zero_velocity(domain), f, None, 1.0)], 2.0)
        assert rep["c_emp"] < 1e-14  # div f vanishes to round-off

    def test_single_mode_closed_ratio(self, domain):
        # one Hermitian pair: w_i w_j has only modes {0, +-2k}; the ratio is
        # computable by hand through the assembled source
        y = sp.single_mode_velocity(domain, (1, 0, 0), (0, 1, 0), 0.4)
        rep = dg.pressure_bound_check([(y, None, None, 1.0)], 2.0)
        p = sp.pressure_recover(y, None, 2.0)
        expect = p.norm_l2() / (2.0 * sp.norm(y, "V"))
        assert rep["c_emp"] == pytest.approx(expect, rel=1e-12)

    def test_refinement_stability(self, domain, domain32):
        def c_at(dom, n_samples=20):
            samples = []
            for i in range(n_samples):
                y = sp.random_velocity(dom, np.random.default_rng(500 + i))
                f = sp.random_velocity(dom, np.random.default_rng(700 + i))
                samples.append((y, f, None, 1.0))
            return dg.pressure_bound_check(samples, 2.0)["c_emp"]

        c16 = c_at(domain)
        c32 = c_at(domain32)
        assert c32 <= 1.25 * c16

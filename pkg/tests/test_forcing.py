import math

import numpy as np
import pytest

from sgmnse import forcing as fc
from sgmnse import spectral as sp


def make_exp_spec(domain, amplitude=0.8, seed=3):
    f = sp.random_velocity(domain, np.random.default_rng(seed),
                           amplitude=amplitude)
    return fc.ForcingSpec(f_inf=f, f_pert=f.copy(), envelope=fc.Envelope("exp"))


class TestEval:
    def test_zero_envelope(self, domain):
        spec = fc.ForcingSpec(
            f_inf=sp.random_velocity(domain, np.random.default_rng(0)),
            f_pert=sp.random_velocity(domain, np.random.default_rng(1)),
            envelope=fc.Envelope("zero"))
        for t in (-3.0, 0.0, 2.0):
            assert np.abs(fc.eval_f(spec, t).c - spec.f_inf.c).max() == 0

    def test_exp_at_zero(self, domain):
        spec = make_exp_spec(domain)
        got = fc.eval_f(spec, 0.0)
        assert np.abs(got.c - 2 * spec.f_inf.c).max() < 1e-14

    def test_exp_backward_limit(self, domain):
        spec = make_exp_spec(domain)
        base = sp.norm(spec.f_pert, "H")
        for tau in (-2.0, -5.0, -10.0):
            diff = sp.norm(fc.eval_f(spec, tau) - spec.f_inf, "H")
            assert diff == pytest.approx(base * math.exp(tau), rel=1e-12)

    def test_table_out_of_range(self, domain):
        spec = fc.ForcingSpec(
            f_inf=sp.random_velocity(domain, np.random.default_rng(0)),
            f_pert=sp.random_velocity(domain, np.random.default_rng(1)),
            envelope=fc.Envelope("table", table_t=(0.0, 1.0),
                                 table_v=(0.0, 1.0)))
        with pytest.raises(ValueError):
            fc.eval_f(spec, 2.0)

    def test_g_requires_finite_da_norm(self, domain):
        g = sp.random_velocity(domain, np.random.default_rng(5))
        spec = fc.ForcingSpec(
            f_inf=sp.zero_velocity(domain), g=g)
        assert spec.g is g  # band-limited fields always qualify


class TestAssumption:
    def test_exp_closed_form(self, domain):
        spec = make_exp_spec(domain)
        tau = -2.0
        rep = fc.verify_assumption(spec, tau, quad_dt=1e-3)
        closed = sp.norm(spec.f_inf, "H") ** 2 * math.exp(2 * tau) / 2
        assert rep["value"] == pytest.approx(closed, rel=1e-6)
        assert rep["satisfied_trend"]

    def test_constant_family_is_f_inf(self, domain):
        spec = fc.ForcingSpec(
            f_inf=sp.random_velocity(domain, np.random.default_rng(0)))
        rep = fc.verify_assumption(spec, -1.0)
        assert rep["value"] == 0.0
        assert rep["satisfied_trend"]

    def test_const_offset_rejected(self, domain):
        spec = fc.ForcingSpec(
            f_inf=sp.random_velocity(domain, np.random.default_rng(0)),
            f_pert=sp.random_velocity(domain, np.random.default_rng(1)),
            envelope=fc.Envelope("const", 0.7))
        rep = fc.verify_assumption(spec, -1.0)
        assert rep["value"] == math.inf
        assert not rep["satisfied_trend"]


class TestUniformness:
    def test_constant_integrand(self, domain):
        spec = fc.ForcingSpec(
            f_inf=sp.random_velocity(domain, np.random.default_rng(2),
                                     amplitude=0.6))
        kappa = 0.9
        got = fc.verify_uniformness(spec, -1.0, kappa, quad_dt=2e-3,
                                    s_points=4)
        assert got == pytest.approx(sp.norm(spec.f_inf, "H") ** 2 / kappa,
                                    rel=1e-6)

    def test_exp_closed_form_and_sup_at_tau(self, domain):
        spec = make_exp_spec(domain)
        kappa = 0.7
        tau = -1.5
        nrm2 = sp.norm(spec.f_inf, "H") ** 2
        closed = nrm2 * (1 / kappa + 2 * math.exp(tau) / (kappa + 1)
                         + math.exp(2 * tau) / (kappa + 2))
        got = fc.verify_uniformness(spec, tau, kappa, quad_dt=1e-3,
                                    s_points=32)
        # the integrand is monotone in s, so the sup sits at s = tau
        assert got == pytest.approx(closed, rel=1e-6)

    def test_requires_positive_kappa(self, domain):
        spec = make_exp_spec(domain)
        with pytest.raises(ValueError):
            fc.verify_uniformness(spec, 0.0, 0.0)


class TestTails:
    def test_zero_forcing(self, domain):
        spec = fc.ForcingSpec(f_inf=sp.zero_velocity(domain))
        tails = fc.verify_tail_smallness(spec, -1.0, 0.5, [1.2, 1.8],
                                         quad_dt=0.1, s_points=2)
        assert tails == [0.0, 0.0]

    def test_nonincreasing_in_k(self, domain):
        spec = make_exp_spec(domain, seed=9)
        ks = [1.0, 1.4, 1.8, 2.2]
        tails = fc.verify_tail_smallness(spec, -1.0, 0.5, ks, quad_dt=5e-2,
                                         s_points=4)
        for a, b in zip(tails, tails[1:]):
            assert b <= a + 1e-12

    def test_low_mode_tail_quadrature_oracle(self, domain):
        # the 2x-grid tail quadrature of a single low mode matches an
        # independent 4x-grid evaluation (the mode is not localized on the
        # periodic box, so only the quadrature itself is being checked)
        f = sp.single_mode_velocity(domain, (1, 0, 0), (0, 1, 0), 0.5)
        k = 2.2  # sqrt(2) k close to the half-period

        def tail_at(oversample):
            w = fc.tail_weight(domain, k, oversample)
            g = sp.to_grid(f, oversample)
            return domain.volume * np.mean(
                w * (g[0] ** 2 + g[1] ** 2 + g[2] ** 2))

        got = tail_at(2)
        oracle = tail_at(4)
        assert got == pytest.approx(oracle, rel=1e-4)
        assert got < sp.norm(f, "H") ** 2  # strictly partial mass

    def test_radius_fit_constraint(self, domain):
        spec = make_exp_spec(domain)
        with pytest.raises(ValueError):
            fc.verify_tail_smallness(spec, -1.0, 0.5, [10.0], s_points=2)


class TestBC8:
    def test_window_bound_and_backward_limit(self, domain):
        spec = make_exp_spec(domain)
        t_window = 1.5
        nrm2 = sp.norm(spec.f_inf, "H") ** 2

        def window_integral(tau):
            # int_0^T ||f(t + tau) - f_inf||^2 dt, closed form for exp
            return nrm2 * math.exp(2 * tau) * (math.exp(2 * t_window) - 1) / 2

        prev = math.inf
        for tau in (-1.0, -3.0, -5.0):
            win = window_integral(tau)
            tail = fc.verify_assumption(spec, tau + t_window,
                                        quad_dt=1e-3)["value"]
            assert win <= tail * (1 + 1e-9)
            assert win < prev
            prev = win


class TestSmoothstep:
    def test_plateaus(self):
        assert fc.smoothstep(0.3) == 0.0
        assert fc.smoothstep(1.0) == 0.0
        assert fc.smoothstep(2.0) == 1.0
        assert fc.smoothstep(5.0) == 1.0

    def test_monotone_and_c1(self):
        x = np.linspace(0.5, 2.5, 2001)
        y = fc.smoothstep(x)
        assert np.all(np.diff(y) >= 0)
        dy = np.gradient(y, x)
        assert abs(dy[0]) < 1e-8 and abs(dy[-1]) < 1e-8
        assert dy.max() < 2.0  # quintic smoothstep peak derivative 1.875

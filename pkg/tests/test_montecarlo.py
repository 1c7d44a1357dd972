import math

import numpy as np
import pytest

from reflimits.model import (
    AdditiveFunctional,
    ConstantCost,
    ConstantDrift,
    ConstantSq,
    DiffusionModel,
    OuDrift,
    SingleBarrier,
    TwoBarrier,
    ZeroCost,
)
from reflimits.montecarlo import (
    BOUNDARY_SHIFT_CONSTANT,
    McConfig,
    estimate_batch_means,
    estimate_lln_clt,
    estimate_scaled_cgf,
    simulate_path,
)
from reflimits.poisson import solve as solve_poisson
from reflimits.spectral import rbm_closed_form_psi


def rbm(mu=0.0, s2=1.0, b=1.0):
    return DiffusionModel(ConstantDrift(mu), ConstantSq(s2), TwoBarrier(b))


FU = AdditiveFunctional(ZeroCost(), 1.0, 1.0)


def reference_path(model, functional, mc, rep):
    """Pure-Python re-implementation of the stepping rule, same stream."""
    key = np.array([mc.seed, rep], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    n = int(round(mc.horizon_t / mc.dt))
    z = rng.standard_normal(n)
    b = model.domain.b if isinstance(model.domain, TwoBarrier) else math.inf
    lo = hi = 0.0
    if mc.boundary_shift:
        s2v = model.sigma2.sigma2
        lo = BOUNDARY_SHIFT_CONSTANT * math.sqrt(s2v * mc.dt)
        hi_shift = BOUNDARY_SHIFT_CONSTANT * math.sqrt(s2v * mc.dt)
        lo = min(lo, 0.25 * b) if b < math.inf else lo
        hi = b - min(hi_shift, 0.25 * b) if b < math.inf else math.inf
    else:
        hi = b
    x = min(max(mc.x0, lo), hi)
    mu = model.mu.mu
    s2v = model.sigma2.sigma2
    fv = functional.f.value if isinstance(functional.f, ConstantCost) else 0.0
    a = lsum = usum = 0.0
    both_in_one_step = False
    for i in range(n):
        xstar = x + mu * mc.dt + math.sqrt(s2v * mc.dt) * z[i]
        dl = du = 0.0
        if xstar < lo:
            dl = lo - xstar
            xstar = lo
        elif xstar > hi:
            du = xstar - hi
            xstar = hi
        if dl > 0.0 and du > 0.0:
            both_in_one_step = True
        x = xstar
        a += fv * mc.dt + functional.r0 * dl + functional.rb * du
        lsum += dl
        usum += du
    return a, lsum, usum, x, both_in_one_step


class TestPathKernel:
    def test_bitwise_matches_reference(self):
        mc = McConfig(horizon_t=0.5, replications=1, seed=123, x0=0.3,
                      dt=1e-3, chunk_steps=10 ** 9)
        model = rbm(mu=0.4)
        for rep in (0, 1, 7):
            rec = simulate_path(model, FU, mc, rep)
            a, l, u, x, both = reference_path(model, FU, mc, rep)
            assert rec.a_final == a
            assert rec.l_final == l
            assert rec.u_final == u
            assert rec.x_final == x
            assert not both  # L and U never increase in the same step

    def test_chunking_does_not_change_path(self):
        model = rbm(mu=-0.3)
        base = dict(horizon_t=0.8, replications=1, seed=9, x0=0.5, dt=1e-3)
        rec1 = simulate_path(model, FU, McConfig(**base, chunk_steps=37), 0)
        rec2 = simulate_path(model, FU, McConfig(**base, chunk_steps=10 ** 6), 0)
        assert rec1.a_final == rec2.a_final
        assert rec1.x_final == rec2.x_final

    def test_local_times_nonnegative_monotone(self):
        model = rbm()
        mc_short = McConfig(horizon_t=0.5, replications=1, seed=5, x0=0.5,
                            dt=1e-3)
        mc_long = McConfig(horizon_t=1.0, replications=1, seed=5, x0=0.5,
                           dt=1e-3)
        r1 = simulate_path(model, FU, mc_short, 0)
        r2 = simulate_path(model, FU, mc_long, 0)
        assert 0.0 <= r1.l_final <= r2.l_final
        assert 0.0 <= r1.u_final <= r2.u_final

    def test_zero_functional_zero_a(self):
        mc = McConfig(horizon_t=1.0, replications=1, seed=2, x0=0.5, dt=1e-3)
        rec = simulate_path(rbm(), AdditiveFunctional(ZeroCost(), 0.0, 0.0),
                            mc, 0)
        assert rec.a_final == 0.0
        assert rec.l_final > 0.0  # the path does hit the barriers

    def test_constant_cost_exact(self):
        mc = McConfig(horizon_t=2.0, replications=1, seed=3, x0=0.5, dt=1e-3)
        rec = simulate_path(rbm(), AdditiveFunctional(ConstantCost(1.0),
                                                      0.0, 0.0), mc, 0)
        assert rec.a_final == pytest.approx(2.0, abs=1e-12)

    def test_positions_stay_in_domain(self):
        mc = McConfig(horizon_t=1.0, replications=1, seed=11, x0=0.9, dt=1e-3)
        rec = simulate_path(rbm(), FU, mc, 0)
        assert 0.0 <= rec.x_final <= 1.0
        assert rec.occupation.sum() == rec.n_steps

    def test_single_barrier_overflow_bucket(self):
        model = DiffusionModel(ConstantDrift(1.0), ConstantSq(1.0),
                               SingleBarrier())
        mc = McConfig(horizon_t=30.0, replications=1, seed=1, x0=0.0,
                      dt=1e-3, hist_xmax=5.0)
        rec = simulate_path(model, AdditiveFunctional(ZeroCost(), 1.0, 0.0),
                            mc, 0)
        # drift 1 * t 30 >> 5: most of the path is beyond the histogram
        assert rec.overflow > 0
        assert rec.occupation.sum() + rec.overflow == rec.n_steps

    def test_x0_outside_domain_rejected(self):
        mc = McConfig(horizon_t=1.0, replications=1, seed=1, x0=1.5, dt=1e-3)
        with pytest.raises(ValueError):
            simulate_path(rbm(), FU, mc, 0)

    def test_start_at_boundary(self):
        # x0 exactly on a barrier is inside the closed domain
        mc = McConfig(horizon_t=1.0, replications=1, seed=13, x0=0.0, dt=1e-3)
        rec = simulate_path(rbm(), FU, mc, 0)
        assert 0.0 <= rec.x_final <= 1.0
        mc_plain = McConfig(horizon_t=1.0, replications=1, seed=13, x0=1.0,
                            dt=1e-3, boundary_shift=False)
        rec2 = simulate_path(rbm(), FU, mc_plain, 0)
        assert 0.0 <= rec2.x_final <= 1.0

    def test_sampled_coefficients_match_parametric(self):
        # tabulated constant coefficients follow the same path bitwise
        from reflimits.model import SampledGrid
        xs = np.linspace(0.0, 1.0, 11)
        tabulated = DiffusionModel(SampledGrid(xs, np.full_like(xs, 0.4)),
                                   SampledGrid(xs, np.full_like(xs, 1.0)),
                                   TwoBarrier(1.0))
        mc = McConfig(horizon_t=1.0, replications=1, seed=31, x0=0.5, dt=1e-3)
        ra = simulate_path(rbm(mu=0.4), FU, mc, 0)
        rb_ = simulate_path(tabulated, FU, mc, 0)
        assert ra.a_final == rb_.a_final
        assert ra.x_final == rb_.x_final

    def test_ou_drift_lln(self):
        # mean-reverting drift through the kernel's linear-drift branch
        model = DiffusionModel(OuDrift(1.0, 0.5), ConstantSq(1.0),
                               TwoBarrier(1.0))
        mc = McConfig(horizon_t=150.0, replications=48, seed=23, x0=0.5,
                      dt=4e-4)
        est = estimate_lln_clt(model, FU, mc, threads=4)
        ref = solve_poisson(model, FU)
        assert abs(est.alpha_hat - ref.alpha) <= 3.0 * est.alpha_se


class TestDeterminism:
    def test_thread_count_invariance(self):
        mc = McConfig(horizon_t=5.0, replications=16, seed=42, x0=0.5,
                      dt=1e-3)
        e1 = estimate_lln_clt(rbm(), FU, mc, threads=1)
        e8 = estimate_lln_clt(rbm(), FU, mc, threads=8)
        assert e1.alpha_hat == e8.alpha_hat
        assert e1.eta2_hat == e8.eta2_hat
        assert np.array_equal(e1.occupation_density, e8.occupation_density)

    def test_seed_changes_results(self):
        base = dict(horizon_t=2.0, replications=8, x0=0.5, dt=1e-3)
        e1 = estimate_lln_clt(rbm(), FU, McConfig(seed=1, **base))
        e2 = estimate_lln_clt(rbm(), FU, McConfig(seed=2, **base))
        assert e1.alpha_hat != e2.alpha_hat

    def test_replication_independent_of_others(self):
        mc16 = McConfig(horizon_t=1.0, replications=16, seed=6, x0=0.5,
                        dt=1e-3)
        rec5_a = simulate_path(rbm(), FU, mc16, 5)
        rec5_b = simulate_path(rbm(), FU, mc16, 5)
        assert rec5_a.a_final == rec5_b.a_final


class TestLlnClt:
    def test_constant_cost_zero_se(self):
        mc = McConfig(horizon_t=1.0, replications=4, seed=1, x0=0.5, dt=1e-3)
        est = estimate_lln_clt(rbm(), AdditiveFunctional(ConstantCost(2.0),
                                                         0.0, 0.0), mc)
        assert est.alpha_hat == pytest.approx(2.0, abs=1e-12)
        assert est.alpha_se == pytest.approx(0.0, abs=1e-12)
        assert est.eta2_hat == pytest.approx(0.0, abs=1e-12)

    def test_rbm_zero_drift_moderate(self):
        # alpha = 1, eta2 = 1/3 analytically
        mc = McConfig(horizon_t=200.0, replications=64, seed=4, x0=0.5,
                      dt=4e-4)
        est = estimate_lln_clt(rbm(), FU, mc, threads=4)
        assert abs(est.alpha_hat - 1.0) <= 3.0 * est.alpha_se
        assert abs(est.eta2_hat - 1.0 / 3.0) / (1.0 / 3.0) <= 0.5

    def test_single_barrier_alpha(self):
        model = DiffusionModel(ConstantDrift(-1.0), ConstantSq(1.0),
                               SingleBarrier())
        fu = AdditiveFunctional(ZeroCost(), 1.0, 0.0)
        mc = McConfig(horizon_t=200.0, replications=48, seed=8, x0=0.5,
                      dt=4e-4, hist_xmax=6.0)
        est = estimate_lln_clt(model, fu, mc, threads=4)
        assert abs(est.alpha_hat - 1.0) <= 3.0 * est.alpha_se

    def test_occupation_matches_stationary_density(self):
        # one long path; compare against the analytic density bin-averages
        mc = McConfig(horizon_t=1000.0, replications=2, seed=12, x0=0.5,
                      dt=2e-4, hist_bins=25)
        est = estimate_lln_clt(rbm(), FU, mc, threads=2)
        sup_gap = float(np.max(np.abs(est.occupation_density - 1.0)))
        assert sup_gap <= 0.05

    def test_requires_two_replications(self):
        mc = McConfig(horizon_t=1.0, replications=1, seed=1, x0=0.5, dt=1e-3)
        with pytest.raises(ValueError):
            estimate_lln_clt(rbm(), FU, mc)

    def test_dt_ladder_bias_shrinks_plain_projection(self):
        # uncorrected projection: |alpha_hat - alpha| decreases in dt
        biases = []
        for dt in (1.6e-3, 4e-4, 1e-4):
            mc = McConfig(horizon_t=100.0, replications=200, seed=21,
                          x0=0.5, dt=dt, boundary_shift=False)
            est = estimate_lln_clt(rbm(), FU, mc, threads=8)
            biases.append(abs(est.alpha_hat - 1.0))
        assert biases[0] > biases[1] > biases[2]


class TestBatchMeans:
    def test_agrees_with_replications(self):
        mc_rep = McConfig(horizon_t=50.0, replications=64, seed=17, x0=0.5,
                          dt=5e-4)
        rep = estimate_lln_clt(rbm(), FU, mc_rep, threads=4)
        mc_bm = McConfig(horizon_t=3200.0, replications=1, seed=18, x0=0.5,
                         dt=5e-4, batch_count=64)
        bm = estimate_batch_means(rbm(), FU, mc_bm)
        combined = math.hypot(rep.eta2_se, bm.eta2_se)
        assert abs(rep.eta2_hat - bm.eta2_hat) <= 3.0 * combined

    def test_needs_enough_steps(self):
        mc = McConfig(horizon_t=0.01, replications=1, seed=1, x0=0.5,
                      dt=1e-3, batch_count=32)
        with pytest.raises(ValueError):
            estimate_batch_means(rbm(), FU, mc)


class TestScaledCgf:
    def zhang(self):
        return (DiffusionModel(ConstantDrift(1.0), ConstantSq(1.0),
                               TwoBarrier(1.0)),
                AdditiveFunctional(ZeroCost(), 0.0, 1.0))

    def test_theta_zero_exact(self):
        model, fu = self.zhang()
        mc = McConfig(horizon_t=1.0, replications=8, seed=1, x0=0.5, dt=1e-3)
        est = estimate_scaled_cgf(model, fu, mc, [0.0])
        pt = est.cgf_hat[0.0]
        assert pt.value == 0.0 and pt.se == 0.0 and not pt.unreliable

    def test_deterministic_cost_linear(self):
        mc = McConfig(horizon_t=3.0, replications=8, seed=1, x0=0.5, dt=1e-3)
        est = estimate_scaled_cgf(rbm(), AdditiveFunctional(ConstantCost(1.0),
                                                            0.0, 0.0),
                                  mc, [-1.0, 0.5, 2.0])
        for th, pt in est.cgf_hat.items():
            assert pt.value == pytest.approx(th, abs=1e-10)
            assert pt.se == pytest.approx(0.0, abs=1e-10)

    def test_matches_analytic_psi(self):
        # B2 point: psi(-0.5) = -1/2 for mu=1, s2=1, b=1, weights (0, 1)
        model, fu = self.zhang()
        mc = McConfig(horizon_t=50.0, replications=1000, seed=4, x0=0.5,
                      dt=5e-4)
        est = estimate_scaled_cgf(model, fu, mc, [-0.5], threads=4)
        pt = est.cgf_hat[-0.5]
        psi = rbm_closed_form_psi(-0.5, 1.0, 1.0, 1.0).psi
        assert not pt.unreliable
        assert abs(pt.value - psi) <= 0.06

    def test_unreliable_flag_for_large_theta_t(self):
        model, fu = self.zhang()
        mc = McConfig(horizon_t=30.0, replications=16, seed=9, x0=0.5,
                      dt=1e-3)
        est = estimate_scaled_cgf(model, fu, mc, [3.0])
        assert est.cgf_hat[3.0].top_weight_fraction > 0.5
        assert est.cgf_hat[3.0].unreliable

    def test_no_overflow_for_huge_theta(self):
        model, fu = self.zhang()
        mc = McConfig(horizon_t=20.0, replications=8, seed=2, x0=0.5, dt=1e-3)
        est = estimate_scaled_cgf(model, fu, mc, [400.0])
        assert math.isfinite(est.cgf_hat[400.0].value)

    def test_empirical_cgf_convex_up_to_noise(self):
        model, fu = self.zhang()
        thetas = np.linspace(-1.5, 0.5, 9)
        mc = McConfig(horizon_t=30.0, replications=512, seed=6, x0=0.5,
                      dt=1e-3)
        est = estimate_scaled_cgf(model, fu, mc, list(thetas), threads=8)
        vals = np.array([est.cgf_hat[float(t)].value for t in thetas])
        ses = np.array([est.cgf_hat[float(t)].se for t in thetas])
        d2 = np.diff(vals, 2)
        slack = 3.0 * np.sqrt(ses[:-2] ** 2 + 4 * ses[1:-1] ** 2
                              + ses[2:] ** 2)
        assert np.all(d2 >= -slack)


class TestSchemeBias:
    def test_boundary_shift_reduces_alpha_bias(self):
        base = dict(horizon_t=200.0, replications=96, seed=14, x0=0.5,
                    dt=1e-3)
        plain = estimate_lln_clt(rbm(), FU,
                                 McConfig(boundary_shift=False, **base),
                                 threads=8)
        corr = estimate_lln_clt(rbm(), FU,
                                McConfig(boundary_shift=True, **base),
                                threads=8)
        assert abs(corr.alpha_hat - 1.0) < abs(plain.alpha_hat - 1.0)
        # plain projection at dt=1e-3 sits several SEs below alpha
        assert plain.alpha_hat < 1.0 - 3.0 * plain.alpha_se

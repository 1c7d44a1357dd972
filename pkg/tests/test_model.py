import numpy as np
import pytest

from reflimits.model import (
    AdditiveFunctional,
    ConstantCost,
    ConstantDrift,
    ConstantSq,
    DiffusionModel,
    InadmissibleModelError,
    OuDrift,
    SampledGrid,
    SingleBarrier,
    SolverConfig,
    TwoBarrier,
    ZeroCost,
    eval_coefficient,
    solver_grid,
    validate,
)


def rbm(mu=0.0, s2=1.0, b=1.0):
    return DiffusionModel(ConstantDrift(mu), ConstantSq(s2), TwoBarrier(b))


class TestEvalCoefficient:
    def test_ou_drift_vanishes_at_center(self):
        assert eval_coefficient(OuDrift(a=2.0, c=0.5), 0.5) == 0.0

    def test_constant(self):
        assert eval_coefficient(ConstantDrift(1.5), 0.3) == 1.5
        assert eval_coefficient(ConstantCost(-2.0), 10.0) == -2.0
        assert eval_coefficient(ZeroCost(), 0.1) == 0.0

    def test_sampled_linear_interpolation(self):
        spec = SampledGrid(np.array([0.0, 1.0]), np.array([0.0, 2.0]))
        assert eval_coefficient(spec, 0.25) == 0.5

    def test_sampled_exact_at_nodes(self):
        xs = np.linspace(0.0, 2.0, 7)
        vals = np.sin(xs)
        spec = SampledGrid(xs, vals)
        out = eval_coefficient(spec, xs)
        assert np.array_equal(out, vals)

    def test_sampled_out_of_range(self):
        spec = SampledGrid(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            eval_coefficient(spec, 1.5)

    def test_vectorized(self):
        xs = np.linspace(0.0, 1.0, 11)
        out = eval_coefficient(OuDrift(1.0, 0.5), xs)
        assert np.allclose(out, -(xs - 0.5))


class TestConstruction:
    def test_sampled_grid_must_ascend(self):
        with pytest.raises(ValueError):
            SampledGrid(np.array([0.0, 0.0, 1.0]), np.zeros(3))

    def test_sampled_grid_length_mismatch(self):
        with pytest.raises(ValueError):
            SampledGrid(np.array([0.0, 1.0]), np.zeros(3))

    def test_two_barrier_positive(self):
        with pytest.raises(ValueError):
            TwoBarrier(0.0)

    def test_ou_rate_positive(self):
        with pytest.raises(ValueError):
            OuDrift(a=-1.0, c=0.0)

    def test_solver_config_invariants(self):
        with pytest.raises(ValueError):
            SolverConfig(grid_points=4000)  # even
        with pytest.raises(ValueError):
            SolverConfig(grid_points=1)
        with pytest.raises(ValueError):
            SolverConfig(quad_tol=0.0)


class TestValidate:
    def test_admissible_baseline(self):
        report = validate(rbm(), AdditiveFunctional(ZeroCost(), 1.0, 1.0))
        assert report.admissible and report.violations == ()

    def test_negative_sigma2(self):
        model = DiffusionModel(ConstantDrift(0.0), ConstantSq(-1.0),
                               TwoBarrier(1.0))
        report = validate(model, AdditiveFunctional())
        assert not report.admissible
        assert any("sigma2 must be positive" in v for v in report.violations)

    def test_negative_boundary_weight(self):
        report = validate(rbm(), AdditiveFunctional(ZeroCost(), -0.5, 0.0))
        assert any("nonnegative" in v for v in report.violations)

    def test_unbounded_cost_on_half_line(self):
        model = DiffusionModel(ConstantDrift(-1.0), ConstantSq(1.0),
                               SingleBarrier())
        report = validate(model, AdditiveFunctional(OuDrift(1.0, 0.0), 0.0, 0.0))
        assert any("unbounded" in v for v in report.violations)

    def test_idempotent(self):
        model = rbm()
        fu = AdditiveFunctional(ZeroCost(), 1.0, 1.0)
        assert validate(model, fu) == validate(model, fu)

    def test_raise_helper(self):
        report = validate(rbm(), AdditiveFunctional(ZeroCost(), -1.0, 0.0))
        with pytest.raises(InadmissibleModelError):
            report.raise_if_inadmissible()


def test_solver_grid_two_barrier():
    g = solver_grid(rbm(b=2.0), SolverConfig(grid_points=5))
    assert np.allclose(g, [0.0, 0.5, 1.0, 1.5, 2.0])


def test_solver_grid_single_barrier_needs_xmax():
    model = DiffusionModel(ConstantDrift(-1.0), ConstantSq(1.0),
                           SingleBarrier())
    with pytest.raises(ValueError):
        solver_grid(model, SolverConfig())
    g = solver_grid(model, SolverConfig(grid_points=3), x_max=4.0)
    assert g[-1] == 4.0

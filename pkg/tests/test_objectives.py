import numpy as np
import pytest

from quantile_boosting.objectives import (
    GradHess, ParameterDomainError, QuantileHuberParams, QuantileHuberObjective, SquaredErrorObjective,
    get_objective, huber_norm, loss_curves, objective_from_description, pinball_loss, quantile_huber_grad_hess,
    quantile_huber_loss, squared_error_grad_hess,
)

TAUS = (0.05, 0.5, 0.95)
UPSILONS = (0.07, 0.5, 2.)


def _error_grid(upsilon, n_points=400, margin=1e-4):
    t = np.linspace(-5 * upsilon, 5 * upsilon, n_points)
    breakpoints = np.array([-upsilon, 0., upsilon])
    far = np.min(np.abs(t[:, None] - breakpoints[None, :]), axis=1) > margin
    return t[far]


class TestPinballAndHuber:
    def test_pinball_examples(self):
        assert pinball_loss(0., 0.5) == 0
        assert pinball_loss(2., 0.95) == pytest.approx(1.9)
        assert pinball_loss(-2., 0.95) == pytest.approx(0.1)

    def test_pinball_scalar_and_array(self):
        assert isinstance(pinball_loss(1., 0.3), float)
        values = pinball_loss(np.array([-1., 0., 1.]), 0.3)
        np.testing.assert_allclose(values, [0.7, 0., 0.3])

    def test_huber_examples(self):
        assert huber_norm(0., 2.) == 0
        assert huber_norm(1., 2.) == pytest.approx(0.25)
        assert huber_norm(3., 2.) == pytest.approx(2.0)
        assert huber_norm(-3., 2.) == pytest.approx(2.0)

    @pytest.mark.parametrize('tau', [0., 1., -0.1, 1.5])
    def test_pinball_tau_domain(self, tau):
        with pytest.raises(ParameterDomainError):
            pinball_loss(1., tau)

    @pytest.mark.parametrize('upsilon', [0., -1.])
    def test_huber_upsilon_domain(self, upsilon):
        with pytest.raises(ParameterDomainError):
            huber_norm(1., upsilon)


class TestQuantileHuberLoss:
    def test_examples(self):
        params = QuantileHuberParams(0.95, 2.)
        assert quantile_huber_loss(3., params) == pytest.approx(1.9)
        assert quantile_huber_loss(-3., params) == pytest.approx(0.1)
        assert quantile_huber_loss(-1., params) == pytest.approx(0.0125)

    def test_params_domain(self):
        with pytest.raises(ParameterDomainError):
            QuantileHuberParams(1., 2.)
        with pytest.raises(ParameterDomainError):
            QuantileHuberParams(0.5, 0.)

    @pytest.mark.parametrize('tau', TAUS)
    @pytest.mark.parametrize('upsilon', UPSILONS)
    def test_non_negative_and_convex(self, tau, upsilon):
        params = QuantileHuberParams(tau, upsilon)
        t = np.linspace(-6 * upsilon, 6 * upsilon, 601)
        loss = quantile_huber_loss(t, params)
        assert np.all(loss >= 0)
        midpoints = quantile_huber_loss((t[:-2] + t[2:]) / 2, params)
        assert np.all(midpoints <= (loss[:-2] + loss[2:]) / 2 + 1e-12)

    @pytest.mark.parametrize('tau', TAUS)
    @pytest.mark.parametrize('upsilon', UPSILONS)
    def test_continuous_at_breakpoints(self, tau, upsilon):
        params = QuantileHuberParams(tau, upsilon)
        delta = 1e-14
        for point in (-upsilon, 0., upsilon):
            left = quantile_huber_loss(point - delta, params)
            right = quantile_huber_loss(point + delta, params)
            assert abs(left - right) < 1e-12
            g_left = quantile_huber_grad_hess(0., -(point - delta), params).g
            g_right = quantile_huber_grad_hess(0., -(point + delta), params).g
            assert abs(g_left - g_right) < 1e-12

    @pytest.mark.parametrize('tau', TAUS)
    def test_gap_to_pinball_is_bounded(self, tau):
        t = np.linspace(-20, 20, 4001)
        bound_by_upsilon = []
        for upsilon in sorted(UPSILONS):
            gap = np.max(np.abs(quantile_huber_loss(t, QuantileHuberParams(tau, upsilon)) - pinball_loss(t, tau)))
            assert gap <= max(tau, 1 - tau) * upsilon / 2 + 1e-12
            bound_by_upsilon.append(gap)
        # меньше порог - ближе к pinball loss
        assert bound_by_upsilon == sorted(bound_by_upsilon)

    @pytest.mark.parametrize('tau', TAUS)
    @pytest.mark.parametrize('t', [-5., -2.5, 2.5, 5.])
    def test_gap_at_fixed_point_grows_with_threshold(self, tau, t):
        gaps = [float(pinball_loss(t, tau) - quantile_huber_loss(t, QuantileHuberParams(tau, upsilon)))
                for upsilon in (0.5, 1., 2.)]
        assert gaps[0] < gaps[1] < gaps[2]
        # вне [-upsilon, upsilon] разница постоянна
        weight = tau if t > 0 else 1 - tau
        np.testing.assert_allclose(gaps, [weight * 0.25, weight * 0.5, weight * 1.], rtol=1e-12)

    def test_matches_pinball_up_to_constant_outside_threshold(self):
        params = QuantileHuberParams(0.9, 0.5)
        t = np.array([1., 2., 5.])
        np.testing.assert_allclose(pinball_loss(t, 0.9) - quantile_huber_loss(t, params), 0.9 * 0.25)


class TestGradHess:
    def test_quantile_examples(self):
        params = QuantileHuberParams(0.95, 2.)
        # t = y - yhat
        g, h = quantile_huber_grad_hess(3., 0., params)
        assert g == pytest.approx(-0.95) and h == 0
        g, h = quantile_huber_grad_hess(0., 1., params)
        assert g == pytest.approx(0.025) and h == pytest.approx(0.025)
        g, h = quantile_huber_grad_hess(1., 0., params)
        assert g == pytest.approx(-0.475) and h == pytest.approx(0.475)

    def test_squared_examples(self):
        assert squared_error_grad_hess(5., 5.) == GradHess(0., 1.)
        assert squared_error_grad_hess(2., 5.) == GradHess(3., 1.)
        assert squared_error_grad_hess(5., 2.) == GradHess(-3., 1.)

    @pytest.mark.parametrize('tau', TAUS)
    @pytest.mark.parametrize('upsilon', UPSILONS)
    def test_finite_differences(self, tau, upsilon):
        params = QuantileHuberParams(tau, upsilon)
        t = _error_grid(upsilon)
        y = np.zeros_like(t)
        yhat = -t
        eps = 1e-6

        g, h = quantile_huber_grad_hess(y, yhat, params)
        loss_plus = quantile_huber_loss(y - (yhat + eps), params)
        loss_minus = quantile_huber_loss(y - (yhat - eps), params)
        np.testing.assert_allclose(g, (loss_plus - loss_minus) / (2 * eps), rtol=1e-5, atol=1e-8)

        g_plus = quantile_huber_grad_hess(y, yhat + eps, params).g
        g_minus = quantile_huber_grad_hess(y, yhat - eps, params).g
        np.testing.assert_allclose(h, (g_plus - g_minus) / (2 * eps), rtol=1e-5, atol=1e-8)

    @pytest.mark.parametrize('tau', TAUS)
    def test_hessian_vanishes_outside_threshold(self, tau):
        params = QuantileHuberParams(tau, 1.)
        g, h = quantile_huber_grad_hess(np.array([-3., 3.]), np.zeros(2), params)
        np.testing.assert_array_equal(h, [0., 0.])
        np.testing.assert_allclose(g, [1 - tau, -tau])
        assert np.all(quantile_huber_grad_hess(np.linspace(-3, 3, 61), 0., params).h >= 0)


class TestObjectives:
    def test_get_objective(self):
        assert isinstance(get_objective('squared'), SquaredErrorObjective)
        objective = get_objective('quantile', tau=0.9, upsilon=0.1)
        assert isinstance(objective, QuantileHuberObjective)
        assert objective.describe() == {'name': 'quantile', 'tau': 0.9, 'upsilon': 0.1}

    def test_get_objective_errors(self):
        with pytest.raises(ParameterDomainError):
            get_objective('quantile', tau=1.5, upsilon=2.)
        with pytest.raises(ParameterDomainError):
            get_objective('quantile', tau=0.5)
        with pytest.raises(ParameterDomainError):
            get_objective('absolute')

    def test_description_round_trip(self):
        objective = get_objective('quantile', tau=0.05, upsilon=2.)
        restored = objective_from_description(objective.describe())
        assert restored.describe() == objective.describe()
        assert objective_from_description(get_objective('squared').describe()).name == 'squared'

    def test_base_scores(self):
        y = np.arange(11, dtype=np.float64)
        assert get_objective('squared').base_score(y) == pytest.approx(5.)
        assert get_objective('quantile', tau=0.9, upsilon=1.).base_score(y) == pytest.approx(9.)

    def test_squared_loss(self):
        np.testing.assert_allclose(get_objective('squared').loss(np.array([1., 3.]), np.array([2., 2.])),
                                   [0.5, 0.5])


class TestLossCurves:
    def test_columns_and_values(self):
        t = np.linspace(-5, 5, 11)
        curves = loss_curves(0.95, [0.07, 2.], t)
        assert list(curves.columns) == ['t', 'pinball', 'smoothed_0.07', 'smoothed_2']
        assert len(curves) == 11
        np.testing.assert_allclose(curves['pinball'], pinball_loss(t, 0.95))
        np.testing.assert_allclose(curves['smoothed_2'], quantile_huber_loss(t, QuantileHuberParams(0.95, 2.)))
        # малый порог почти не отличается от pinball loss
        assert np.max(np.abs(curves['smoothed_0.07'] - curves['pinball'])) <= 0.95 * 0.07 / 2 + 1e-12

#!/usr/bin/python
# -*- coding: utf-8 -*-
"""
Функции потерь для бустинга второго порядка
    - pinball (квантильная) функция потерь и норма Хьюбера
    - сглаженная по Хьюберу квантильная функция потерь с градиентом и гессианом
    - квадратичная функция потерь для точечного прогноза
Все производные берутся по текущему предсказанию yhat (а не по ошибке t = y - yhat)
"""
import collections

import numpy as np
import pandas as pd

# (g, h) - первая и вторая производные функции потерь по предсказанию, поэлементно
GradHess = collections.namedtuple('GradHess', ['g', 'h'])

OBJECTIVE_NAMES = ('squared', 'quantile')


class ParameterDomainError(ValueError):
    """
    Параметр вне допустимой области значений (tau, upsilon, параметры обучения)
    """


def _check_tau(tau):
    if not (0 < tau < 1):
        raise ParameterDomainError(f"tau={tau} is outside (0, 1)")


def _check_upsilon(upsilon):
    if not upsilon > 0:
        raise ParameterDomainError(f"upsilon={upsilon} must be positive")


def _as_output(value):
    # скаляр на входе -> float на выходе
    if np.ndim(value) == 0:
        return float(value)
    return value


class QuantileHuberParams:
    """
    Параметры сглаженной квантильной функции потерь
    tau - целевой квантиль, upsilon - порог Хьюбера (в единицах целевой переменной)
    """
    __slots__ = ['tau', 'upsilon']

    def __init__(self, tau, upsilon):
        _check_tau(tau)
        _check_upsilon(upsilon)
        self.tau = float(tau)
        self.upsilon = float(upsilon)

    def __repr__(self):
        return f"QuantileHuberParams(tau={self.tau}, upsilon={self.upsilon})"


def pinball_loss(t, tau):
    """
    Квантильная (pinball) функция потерь
    :param t: ошибка предсказания y - yhat (скаляр или массив)
    :param tau: квантиль, 0 < tau < 1
    :return: (tau - 1) * t при t < 0, tau * t иначе
    """
    _check_tau(tau)
    t = np.asarray(t, dtype=np.float64)
    return _as_output(np.where(t < 0, (tau - 1) * t, tau * t))


def huber_norm(t, upsilon):
    """
    Норма Хьюбера: квадратичная при |t| <= upsilon и линейная вне этого отрезка
    """
    _check_upsilon(upsilon)
    t = np.asarray(t, dtype=np.float64)
    abs_t = np.abs(t)
    return _as_output(np.where(abs_t <= upsilon, t * t / (2 * upsilon), abs_t - upsilon / 2))


def quantile_huber_loss(t, params):
    """
    Сглаженная квантильная функция потерь:
        (1 - tau) * h(t) при t < 0, tau * h(t) при t >= 0, где h - норма Хьюбера
    Такая запись выпукла и совпадает с pinball loss вне [-upsilon, upsilon] с точностью до константы
    :param t: ошибка предсказания y - yhat
    :param params: QuantileHuberParams
    """
    t = np.asarray(t, dtype=np.float64)
    huber = np.asarray(huber_norm(t, params.upsilon))
    return _as_output(np.where(t < 0, (1 - params.tau) * huber, params.tau * huber))


def quantile_huber_grad_hess(y, yhat, params):
    """
    Градиент и гессиан сглаженной квантильной функции потерь по yhat
    :param y: целевые значения
    :param yhat: текущие предсказания
    :param params: QuantileHuberParams
    :return: GradHess
    """
    tau, upsilon = params.tau, params.upsilon
    t = np.asarray(y, dtype=np.float64) - np.asarray(yhat, dtype=np.float64)
    g = np.where(t < -upsilon, 1 - tau,
                 np.where(t < 0, (tau - 1) * t / upsilon,
                          np.where(t <= upsilon, -tau * t / upsilon, -tau)))
    h = np.where(t < -upsilon, 0.,
                 np.where(t < 0, (1 - tau) / upsilon,
                          np.where(t <= upsilon, tau / upsilon, 0.)))
    return GradHess(_as_output(g), _as_output(h))


def squared_error_grad_hess(y, yhat):
    """
    Для loss = 0.5 * (yhat - y)^2: g = yhat - y, h = 1
    """
    g = np.asarray(yhat, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return GradHess(_as_output(g), _as_output(np.ones_like(g)))


class Objective:
    """
    Интерфейс целевой функции для бустинга:
    поэлементные потери, (g, h) и начальное предсказание
    """
    name = None

    def loss(self, y, yhat):
        raise NotImplementedError

    def grad_hess(self, y, yhat):
        raise NotImplementedError

    def base_score(self, y):
        raise NotImplementedError

    def describe(self):
        """
        Описание целевой функции, сохраняется вместе с моделью
        """
        return {'name': self.name, 'tau': None, 'upsilon': None}

    def check_config(self, config):
        """
        Проверка совместимости параметров обучения с целевой функцией
        """
        pass

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"


class SquaredErrorObjective(Objective):
    name = 'squared'

    def loss(self, y, yhat):
        residuals = np.asarray(yhat, dtype=np.float64) - np.asarray(y, dtype=np.float64)
        return 0.5 * residuals ** 2

    def grad_hess(self, y, yhat):
        return squared_error_grad_hess(y, yhat)

    def base_score(self, y):
        return float(np.mean(y))


class QuantileHuberObjective(Objective):
    """
    Сглаженная квантильная функция потерь
    начальное предсказание - эмпирический tau-квантиль таргета
    """
    name = 'quantile'

    def __init__(self, params):
        self.params = params

    def loss(self, y, yhat):
        t = np.asarray(y, dtype=np.float64) - np.asarray(yhat, dtype=np.float64)
        return np.asarray(quantile_huber_loss(t, self.params))

    def grad_hess(self, y, yhat):
        return quantile_huber_grad_hess(y, yhat, self.params)

    def base_score(self, y):
        return float(np.quantile(y, self.params.tau))

    def describe(self):
        return {'name': self.name, 'tau': self.params.tau, 'upsilon': self.params.upsilon}

    def check_config(self, config):
        # вне [-upsilon, upsilon] гессиан нулевой, лист из таких объектов держится только на lambda
        if not config.reg_lambda > 0:
            raise ParameterDomainError(
                f"quantile objective requires reg_lambda > 0 (got {config.reg_lambda}): "
                f"the hessian vanishes for |y - yhat| > upsilon")


def get_objective(name, tau=None, upsilon=None):
    """
    :param name: 'squared' или 'quantile'
    :param tau: квантиль (только для 'quantile')
    :param upsilon: порог Хьюбера (только для 'quantile')
    :return: Objective
    """
    if name == 'squared':
        return SquaredErrorObjective()
    elif name == 'quantile':
        if tau is None or upsilon is None:
            raise ParameterDomainError("quantile objective needs both tau and upsilon")
        return QuantileHuberObjective(QuantileHuberParams(tau, upsilon))
    else:
        raise ParameterDomainError(f"unknown objective '{name}', expected one of {OBJECTIVE_NAMES}")


def objective_from_description(description):
    return get_objective(description['name'], tau=description.get('tau'), upsilon=description.get('upsilon'))


def loss_curves(tau, upsilons, t_grid):
    """
    Таблица для графика: pinball loss и сглаженные потери для нескольких порогов на сетке ошибок
    :param tau: квантиль
    :param upsilons: список порогов Хьюбера
    :param t_grid: значения ошибки t
    :return: pd.DataFrame с колонками t, pinball, smoothed_<upsilon>...
    """
    t_grid = np.asarray(t_grid, dtype=np.float64)
    curves = pd.DataFrame({'t': t_grid, 'pinball': pinball_loss(t_grid, tau)})
    for upsilon in upsilons:
        curves[f"smoothed_{upsilon:g}"] = quantile_huber_loss(t_grid, QuantileHuberParams(tau, upsilon))
    return curves

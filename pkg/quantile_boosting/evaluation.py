#!/usr/bin/python
# -*- coding: utf-8 -*-
"""
Метрики качества интервалов предсказания и точечного прогноза
    - PICP (доля покрытых наблюдений), PIAW/PINAW (средняя и нормированная ширина), CWC
    - расширение интервалов (padding) и исправление пересекающихся границ
    - RMSE, R^2, MAE для точечного прогноза
"""
import collections
import math

import numpy as np
import pandas as pd

DEFAULT_ETA = 50.
DEFAULT_NOMINAL_COVERAGE = 0.9

# r_squared = None, если дисперсия таргета нулевая (R^2 не определен)
PointMetrics = collections.namedtuple('PointMetrics', ['rmse', 'r_squared', 'mae'])


def _as_arrays(*sequences):
    arrays = [np.asarray(sequence, dtype=np.float64) for sequence in sequences]
    lengths = {len(array) for array in arrays}
    if len(lengths) != 1:
        raise ValueError(f"length mismatch: {[len(array) for array in arrays]}")
    if 0 in lengths:
        raise ValueError("empty input")
    return arrays


def _check_bounds(lower, upper):
    inverted = lower > upper
    if inverted.any():
        row = int(np.argmax(inverted))
        raise ValueError(f"inverted bounds at row {row}: lower={lower[row]} > upper={upper[row]}")


def picp(targets, lower, upper):
    """
    Доля наблюдений, попавших в замкнутый интервал [lower, upper]
    """
    targets, lower, upper = _as_arrays(targets, lower, upper)
    _check_bounds(lower, upper)
    return float(np.mean((lower <= targets) & (targets <= upper)))


def piaw(lower, upper):
    """
    Средняя ширина интервалов (без нормировки)
    """
    lower, upper = _as_arrays(lower, upper)
    _check_bounds(lower, upper)
    return float(np.mean(upper - lower))


def pinaw(lower, upper, target_range):
    """
    Средняя ширина интервалов, нормированная на размах наблюдаемых значений R
    """
    if not target_range > 0:
        raise ValueError(f"target range must be positive, got {target_range}")
    lower, upper = _as_arrays(lower, upper)
    _check_bounds(lower, upper)
    return float(np.sum(upper - lower) / (target_range * len(lower)))


def cwc_penalty_factor(picp_value, nominal_coverage=DEFAULT_NOMINAL_COVERAGE, eta=DEFAULT_ETA):
    return 1. + math.exp(eta * (nominal_coverage - picp_value))


def cwc(picp_value, pinaw_value, nominal_coverage=DEFAULT_NOMINAL_COVERAGE, eta=DEFAULT_ETA):
    """
    Coverage width-based criterion:
        pinaw * (1 + exp(eta * (mu - picp))) при picp < mu, иначе pinaw
    В точке picp = mu значение скачком меняется с 2 * pinaw на pinaw
    :param nominal_coverage: mu - желаемое покрытие (0.9 для интервалов из квантилей 0.05 и 0.95)
    """
    if picp_value < nominal_coverage:
        return pinaw_value * cwc_penalty_factor(picp_value, nominal_coverage, eta)
    return pinaw_value


def pad_intervals(lower, upper, pad):
    """
    Симметрично расширяет каждый интервал так, что его ширина растет в (1 + pad) раз
    :return: (lower, upper)
    """
    if pad < 0:
        raise ValueError(f"pad fraction must be non-negative, got {pad}")
    lower, upper = _as_arrays(lower, upper)
    half_extra = (pad / 2) * (upper - lower)
    return lower - half_extra, upper + half_extra


def repair_crossings(lower, upper):
    """
    Модели нижней и верхней границ обучаются независимо и могут пересекаться,
    в таких строках границы меняются местами
    :return: (lower, upper, n_swapped)
    """
    lower, upper = _as_arrays(lower, upper)
    crossed = lower > upper
    return np.where(crossed, upper, lower), np.where(crossed, lower, upper), int(crossed.sum())


class IntervalReport:
    """
    Оценка интервалов предсказания на одной выборке
    """

    def __init__(self, picp, pinaw, cwc, nominal_coverage, eta, piaw=None):
        assert 0 <= picp <= 1, f"picp out of range: {picp}"
        assert pinaw >= 0 and cwc >= pinaw, f"inconsistent pinaw={pinaw}, cwc={cwc}"
        self.picp = picp
        self.pinaw = pinaw
        self.cwc = cwc
        self.nominal_coverage = nominal_coverage
        self.eta = eta
        self.piaw = piaw

    def as_dict(self):
        return {'picp': self.picp, 'pinaw': self.pinaw, 'cwc': self.cwc, 'piaw': self.piaw,
                'nominal_coverage': self.nominal_coverage, 'eta': self.eta}

    def get_report(self):
        return 'picp = {:.4f}, pinaw = {:.4f}, cwc = {:.4f} (mu = {}, eta = {})'.format(
            self.picp, self.pinaw, self.cwc, self.nominal_coverage, self.eta)


def evaluate_intervals(targets, lower, upper, nominal_coverage=DEFAULT_NOMINAL_COVERAGE, eta=DEFAULT_ETA,
                       target_range=None):
    """
    :param target_range: R для PINAW, по умолчанию max - min оцениваемых таргетов
    :return: IntervalReport
    """
    targets, lower, upper = _as_arrays(targets, lower, upper)
    if target_range is None:
        target_range = float(targets.max() - targets.min())
    picp_value = picp(targets, lower, upper)
    pinaw_value = pinaw(lower, upper, target_range)
    return IntervalReport(picp=picp_value,
                          pinaw=pinaw_value,
                          cwc=cwc(picp_value, pinaw_value, nominal_coverage, eta),
                          nominal_coverage=nominal_coverage,
                          eta=eta,
                          piaw=piaw(lower, upper))


def point_metrics(targets, predictions):
    """
    :return: PointMetrics(rmse, r_squared, mae)
    """
    targets, predictions = _as_arrays(targets, predictions)
    residuals = targets - predictions
    ss_res = float(np.sum(residuals ** 2))
    ss_tot = float(np.sum((targets - targets.mean()) ** 2))
    r_squared = 1. - ss_res / ss_tot if ss_tot > 0 else None
    return PointMetrics(rmse=math.sqrt(ss_res / len(targets)),
                        r_squared=r_squared,
                        mae=float(np.mean(np.abs(residuals))))


def ordered_centered_intervals(targets, lower, upper):
    """
    Интервалы, упорядоченные по ширине, с границами и таргетом относительно середины интервала
    :return: pd.DataFrame (rank, row, width, centered_lower, centered_upper, centered_target, covered)
    """
    targets, lower, upper = _as_arrays(targets, lower, upper)
    _check_bounds(lower, upper)
    width = upper - lower
    center = (lower + upper) / 2
    order = np.argsort(width, kind='mergesort')
    return pd.DataFrame({
        'rank': np.arange(len(order)),
        'row': order,
        'width': width[order],
        'centered_lower': (lower - center)[order],
        'centered_upper': (upper - center)[order],
        'centered_target': (targets - center)[order],
        'covered': ((lower <= targets) & (targets <= upper))[order],
    })

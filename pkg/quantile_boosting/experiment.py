#!/usr/bin/python
# -*- coding: utf-8 -*-
"""
Построение и оценка интервалов предсказания из пары квантильных моделей
    - ExperimentSpec: полная конфигурация эксперимента (json)
    - обучение нижней/верхней/точечной моделей (возможно параллельно)
    - метрики до и после расширения интервалов, данные для графиков
"""
import contextlib
import copy
import json
import logging
import multiprocessing
import os

import numpy as np
import pandas as pd

from quantile_boosting import data, evaluation, utils
from quantile_boosting.booster import TrainConfig, train
from quantile_boosting.objectives import get_objective, objective_from_description, ParameterDomainError

METRICS_FILENAME = 'metrics.csv'
INTERVALS_FILENAME = 'intervals.csv'
ORDERED_INTERVALS_FILENAME = 'ordered_intervals.csv'
CONFIG_FILENAME = 'config.json'
# в metrics.csv вместо неопределенной метрики
NOT_APPLICABLE = 'n/a'

MODEL_NAMES = ('lower', 'upper', 'point')


class ExperimentStageError(RuntimeError):
    """
    Ошибка на одном из этапов эксперимента, в сообщении указан этап
    """


@contextlib.contextmanager
def stage(name):
    logging.info(f"=== {name} ===")
    try:
        yield
    except (ValueError, OSError, RuntimeError) as e:
        raise ExperimentStageError(f"[{name}] {e}") from e


class ExperimentSpec:
    """
    Конфигурация эксперимента, по умолчанию - модельные данные,
    learning rate 0.05, 300 деревьев глубины 3, порог Хьюбера 2
    """
    DEFAULT_DATA = {'source': 'simulate', 'n': 1000, 'x_min': 0., 'x_max': 10.,
                    'sigma_min': 1.5, 'sigma_max': 2.5}
    DEFAULTS = {
        'data': DEFAULT_DATA,
        'train_fraction': 0.75,
        'seed': 0,
        'lower_tau': 0.05,
        'upper_tau': 0.95,
        'upsilon': 2.0,
        'nominal_coverage': evaluation.DEFAULT_NOMINAL_COVERAGE,
        'eta': evaluation.DEFAULT_ETA,
        'pad': 0.03,
        'lower_model': {},
        'upper_model': {},
        'point_model': {},
        'n_workers': 1,
    }

    def __init__(self, **params):
        unknown = set(params) - set(ExperimentSpec.DEFAULTS)
        if unknown:
            raise ParameterDomainError(f"unknown experiment parameters {sorted(unknown)}")
        resolved = copy.deepcopy(ExperimentSpec.DEFAULTS)
        resolved.update(copy.deepcopy(params))
        data_params = dict(ExperimentSpec.DEFAULT_DATA) if resolved['data'].get('source', 'simulate') == 'simulate' \
            else {}
        data_params.update(resolved['data'])
        resolved['data'] = data_params

        if data_params.get('source') not in ('simulate', 'csv'):
            raise ParameterDomainError(f"data source must be 'simulate' or 'csv', got {data_params.get('source')}")
        if data_params['source'] == 'csv' and not {'path', 'target'} <= set(data_params):
            raise ParameterDomainError("csv data source needs 'path' and 'target'")
        if not resolved['lower_tau'] < resolved['upper_tau']:
            raise ParameterDomainError(f"lower_tau={resolved['lower_tau']} must be less than "
                                       f"upper_tau={resolved['upper_tau']}")
        if resolved['pad'] < 0:
            raise ParameterDomainError(f"pad must be non-negative, got {resolved['pad']}")
        self._params = resolved
        # проверка параметров моделей и целевых функций сразу, а не после генерации данных
        for name in MODEL_NAMES:
            self.objective(name).check_config(self.train_config(name))

    def __getattr__(self, key):
        params = self.__dict__.get('_params', {})
        if key in params:
            return params[key]
        raise AttributeError(key)

    def train_config(self, model_name, seed=None):
        config = TrainConfig.from_dict(self._params[f"{model_name}_model"])
        return TrainConfig.from_others(config, seed=seed)

    def objective(self, model_name):
        if model_name == 'point':
            return get_objective('squared')
        return get_objective('quantile', tau=self._params[f"{model_name}_tau"], upsilon=self._params['upsilon'])

    def to_dict(self):
        return copy.deepcopy(self._params)

    def with_overrides(self, **overrides):
        params = self.to_dict()
        params.update({key: value for key, value in overrides.items() if value is not None})
        return ExperimentSpec(**params)

    @classmethod
    def load(cls, path):
        with open(path, 'r') as f:
            return cls(**json.load(f))

    def save(self, path):
        resolved = self.to_dict()
        for name in MODEL_NAMES:
            resolved[f"{name}_model"] = self.train_config(name).to_dict()
        with open(path, 'w') as f:
            json.dump(resolved, f, indent=2, sort_keys=True)


def load_dataset(data_params, seed):
    if data_params['source'] == 'csv':
        return data.load_csv(data_params['path'], data_params['target'])
    return data.simulate(n=data_params['n'], x_min=data_params['x_min'], x_max=data_params['x_max'],
                         sigma_min=data_params['sigma_min'], sigma_max=data_params['sigma_max'], seed=seed)


def _train_job(job):
    """
    Обучение одной модели, функция верхнего уровня чтобы работать в multiprocessing.Pool
    """
    name, dataset, objective_description, config_params = job
    logging.info(f"training {name} model")
    return train(dataset, objective_from_description(objective_description), TrainConfig(**config_params))


def train_models(spec, train_set):
    """
    Обучает нижнюю, верхнюю и точечную модели
    Каждая модель получает свой seed, выведенный из seed эксперимента,
    поэтому результат не зависит от того, обучаются ли модели параллельно
    :return: dict имя -> Ensemble
    """
    seeds = utils.derive_seeds(spec.seed, len(MODEL_NAMES))
    jobs = [(name, train_set, spec.objective(name).describe(), spec.train_config(name, seed=seed).to_dict())
            for name, seed in zip(MODEL_NAMES, seeds)]
    if spec.n_workers > 1:
        pool = multiprocessing.Pool(min(spec.n_workers, len(jobs)))
        try:
            models = pool.map(_train_job, jobs)
        finally:
            pool.close()
            pool.join()
    else:
        models = list(map(_train_job, jobs))
    return dict(zip(MODEL_NAMES, models))


def predict_intervals(lower_model, upper_model, features):
    """
    :return: (lower, upper, n_swapped) - после исправления пересечений
    """
    lower, upper, n_swapped = evaluation.repair_crossings(lower_model.predict(features),
                                                          upper_model.predict(features))
    if n_swapped:
        logging.warning(f"{n_swapped} of {len(lower)} intervals had lower > upper, bounds swapped")
    return lower, upper, n_swapped


def point_columns(targets, predictions):
    """
    Колонки точечного прогноза для metrics.csv, неопределенный R^2 записывается как NOT_APPLICABLE
    """
    point = evaluation.point_metrics(targets, predictions)
    return {
        'point_rmse': point.rmse,
        'point_r2': NOT_APPLICABLE if point.r_squared is None else point.r_squared,
        'point_mae': point.mae,
    }


def evaluate_models(lower_model, upper_model, train_set, test_set, pad=0., nominal_coverage=0.9,
                    eta=evaluation.DEFAULT_ETA, point_model=None):
    """
    Метрики на train/test для интервалов без расширения и с расширением на pad
    :return: (metrics, intervals) - таблица метрик (строки 'unpadded', 'padded')
        и данные для графика интервалов на тесте
    """
    train_lower, train_upper, train_swapped = predict_intervals(lower_model, upper_model, train_set.to_matrix())
    test_lower, test_upper, test_swapped = predict_intervals(lower_model, upper_model, test_set.to_matrix())
    # R считается по тестовой выборке, метрики теста не зависят от train
    target_range = float(test_set.targets.max() - test_set.targets.min())

    point = None
    if point_model is not None:
        predictions = point_model.predict(test_set.to_matrix())
        point = point_columns(test_set.targets, predictions)

    rows = []
    for name, pad_fraction in (('unpadded', 0.), ('padded', pad)):
        padded_train = evaluation.pad_intervals(train_lower, train_upper, pad_fraction)
        padded_test = evaluation.pad_intervals(test_lower, test_upper, pad_fraction)
        test_report = evaluation.evaluate_intervals(test_set.targets, *padded_test,
                                                    nominal_coverage=nominal_coverage, eta=eta,
                                                    target_range=target_range)
        row = {
            'intervals': name,
            'pad': pad_fraction,
            'train_picp': evaluation.picp(train_set.targets, *padded_train),
            'test_picp': test_report.picp,
            'test_pinaw': test_report.pinaw,
            'test_cwc': test_report.cwc,
            'test_piaw': test_report.piaw,
            'train_crossed': train_swapped,
            'test_crossed': test_swapped,
        }
        if point is not None:
            row.update(point)
        rows.append(row)
    metrics = pd.DataFrame(rows)

    padded_lower, padded_upper = evaluation.pad_intervals(test_lower, test_upper, pad)
    intervals = pd.DataFrame({'row': np.arange(test_set.n_rows)})
    for j, feature_name in enumerate(test_set.feature_names):
        intervals[feature_name] = test_set.columns[j]
    intervals['target'] = test_set.targets
    intervals['lower'] = padded_lower
    intervals['upper'] = padded_upper
    if point_model is not None:
        intervals['prediction'] = predictions
    if test_set.n_features == 1:
        intervals = intervals.sort_values(test_set.feature_names[0], kind='mergesort').reset_index(drop=True)
    return metrics, intervals


def format_metrics(metrics):
    display = metrics.set_index('intervals')
    return display.to_string(float_format=lambda value: f"{value:.3f}")


def write_results(out_dir, metrics, intervals):
    os.makedirs(out_dir, exist_ok=True)
    data.write_frame(metrics, os.path.join(out_dir, METRICS_FILENAME))
    data.write_frame(intervals, os.path.join(out_dir, INTERVALS_FILENAME))


def run_experiment(spec, out_dir):
    """
    Данные -> разбиение -> обучение трех моделей -> оценка -> файлы в out_dir:
        metrics.csv, intervals.csv, ordered_intervals.csv, config.json
    :return: таблица метрик
    """
    os.makedirs(out_dir, exist_ok=True)
    with stage('config'):
        spec.save(os.path.join(out_dir, CONFIG_FILENAME))

    with stage('data'):
        dataset = load_dataset(spec.data, spec.seed)
        train_set, test_set = data.train_test_split(dataset, spec.train_fraction, seed=spec.seed)
        logging.info(f"train: {train_set}, test: {test_set}")

    with stage('train'):
        models = train_models(spec, train_set)

    with stage('evaluate'):
        metrics, intervals = evaluate_models(models['lower'], models['upper'], train_set, test_set,
                                             pad=spec.pad, nominal_coverage=spec.nominal_coverage, eta=spec.eta,
                                             point_model=models['point'])
        ordered = evaluation.ordered_centered_intervals(intervals['target'], intervals['lower'],
                                                        intervals['upper'])
        ordered['row'] = intervals['row'].to_numpy()[ordered['row'].to_numpy()]
        logging.info(f"Prediction intervals:\n{format_metrics(metrics)}")

    with stage('write'):
        write_results(out_dir, metrics, intervals)
        data.write_frame(ordered, os.path.join(out_dir, ORDERED_INTERVALS_FILENAME))
    return metrics

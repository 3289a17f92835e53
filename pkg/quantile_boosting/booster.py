#!/usr/bin/python
# -*- coding: utf-8 -*-
"""
Градиентный бустинг деревьев второго порядка
    - TrainConfig: параметры обучения
    - Ensemble: обученный ансамбль, предсказание, сохранение/загрузка
    - train: обучение ансамбля для произвольной целевой функции
"""
import json
import logging
from multiprocessing.pool import ThreadPool

import numpy as np
import pandas as pd

from quantile_boosting.data import DataFormatError, SchemaError
from quantile_boosting.objectives import ParameterDomainError
from quantile_boosting.tree import grow_tree, node_from_dict, predict_tree


class TrainConfig:
    """
    Параметры обучения бустинга
    """
    FIELDS = ('n_estimators', 'max_depth', 'learning_rate', 'reg_lambda', 'gamma',
              'min_child_weight', 'base_score', 'seed', 'n_jobs', 'log_every')

    @staticmethod
    def from_others(base_config, **overrides):
        """
        Новый конфиг из base_config с заменой значений указанных параметров (None - не заменять)
        """
        params = base_config.to_dict()
        for key, value in overrides.items():
            if key not in TrainConfig.FIELDS:
                raise ParameterDomainError(f"unknown train parameter '{key}'")
            if value is not None:
                params[key] = value
        return TrainConfig(**params)

    def __init__(self, n_estimators=300, max_depth=3, learning_rate=0.05,
                 reg_lambda=1.0, gamma=0.0, min_child_weight=1.0,
                 base_score=None, seed=0, n_jobs=1, log_every=10):
        """
        :param n_estimators: количество деревьев
        :param max_depth: максимальная глубина дерева (дерево из одного листа имеет глубину 1)
        :param learning_rate: множитель вклада каждого дерева
        :param reg_lambda: L2 штраф на веса листьев
        :param gamma: штраф за каждый лист (минимальный прирост для разбиения)
        :param min_child_weight: минимальная сумма гессианов в каждом потомке
        :param base_score: начальное предсказание, None - выбирает целевая функция
        :param seed: seed (сейчас обучение не использует случайность, хранится для воспроизводимости)
        :param n_jobs: число потоков для перебора признаков при поиске разбиения
        :param log_every: как часто (в раундах) писать в лог ошибку на обучении
        """
        if int(n_estimators) < 1:
            raise ParameterDomainError(f"n_estimators must be >= 1, got {n_estimators}")
        if int(max_depth) < 1:
            raise ParameterDomainError(f"max_depth must be >= 1, got {max_depth}")
        if not 0 < learning_rate <= 1:
            raise ParameterDomainError(f"learning_rate must be in (0, 1], got {learning_rate}")
        if reg_lambda < 0 or gamma < 0 or min_child_weight < 0:
            raise ParameterDomainError(f"reg_lambda, gamma, min_child_weight must be non-negative, "
                                       f"got {reg_lambda}, {gamma}, {min_child_weight}")
        if base_score is not None and not np.isfinite(base_score):
            raise ParameterDomainError(f"base_score must be finite, got {base_score}")
        if int(n_jobs) < 1 or int(log_every) < 1:
            raise ParameterDomainError(f"n_jobs and log_every must be >= 1, got {n_jobs}, {log_every}")

        self.n_estimators = int(n_estimators)
        self.max_depth = int(max_depth)
        self.learning_rate = float(learning_rate)
        self.reg_lambda = float(reg_lambda)
        self.gamma = float(gamma)
        self.min_child_weight = float(min_child_weight)
        self.base_score = None if base_score is None else float(base_score)
        self.seed = int(seed)
        self.n_jobs = int(n_jobs)
        self.log_every = int(log_every)

    def to_dict(self):
        return {key: getattr(self, key) for key in TrainConfig.FIELDS}

    @classmethod
    def from_dict(cls, params):
        unknown = set(params) - set(cls.FIELDS)
        if unknown:
            raise ParameterDomainError(f"unknown train parameters {sorted(unknown)}")
        return cls(**params)

    def __str__(self):
        sb = ["Train Config:"]
        for key in TrainConfig.FIELDS:
            sb.append("\t{key}={value}".format(key=key, value=getattr(self, key)))
        return '\n'.join(sb)


class Ensemble:
    """
    Обученный ансамбль: base_score + learning_rate * (сумма весов листьев по деревьям)
    Не изменяется после создания, можно использовать из нескольких потоков
    """
    FORMAT_VERSION = 1

    def __init__(self, trees, base_score, learning_rate, objective, feature_names, training_loss=()):
        """
        :param trees: корни деревьев в порядке обучения
        :param base_score: начальное предсказание
        :param learning_rate: множитель вклада деревьев
        :param objective: описание целевой функции {name, tau, upsilon}
        :param feature_names: имена признаков, на которых обучалась модель
        :param training_loss: средняя ошибка на обучении после каждого раунда
        """
        self.trees = tuple(trees)
        self.base_score = float(base_score)
        self.learning_rate = float(learning_rate)
        self.objective = dict(objective)
        self.feature_names = tuple(feature_names)
        self.training_loss = tuple(float(loss) for loss in training_loss)

    @property
    def n_features(self):
        return len(self.feature_names)

    def n_leaves(self):
        return sum(tree.n_leaves() for tree in self.trees)

    def predict(self, features):
        """
        :param features: одна строка (1-d), батч (n_rows, n_features) или pd.DataFrame с колонками признаков
        :return: float для одной строки, иначе массив предсказаний в порядке строк
        """
        if isinstance(features, pd.DataFrame):
            features = select_features(features, self.feature_names)
        features = np.asarray(features, dtype=np.float64)
        single_row = features.ndim == 1
        features = np.atleast_2d(features)
        if features.ndim != 2 or features.shape[1] != self.n_features:
            raise SchemaError(f"model expects {self.n_features} features {list(self.feature_names)}, "
                              f"got input of shape {features.shape}")
        prediction = np.full(len(features), self.base_score)
        for tree in self.trees:
            # тот же порядок операций, что и в train - предсказания совпадают побитово
            prediction = prediction + self.learning_rate * predict_tree(tree, features)
        return float(prediction[0]) if single_row else prediction

    def to_dict(self):
        return {
            'format_version': Ensemble.FORMAT_VERSION,
            'objective': self.objective,
            'base_score': self.base_score,
            'learning_rate': self.learning_rate,
            'feature_names': list(self.feature_names),
            'training_loss': list(self.training_loss),
            'trees': [tree.to_dict() for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, record):
        version = record.get('format_version')
        if version != cls.FORMAT_VERSION:
            raise DataFormatError(f"unsupported model format version {version}, expected {cls.FORMAT_VERSION}")
        return cls(trees=[node_from_dict(tree) for tree in record['trees']],
                   base_score=record['base_score'],
                   learning_rate=record['learning_rate'],
                   objective=record['objective'],
                   feature_names=record['feature_names'],
                   training_loss=record.get('training_loss', ()))

    def dumps(self):
        # repr у float в json восстанавливает double точно
        return json.dumps(self.to_dict(), indent=1)

    def save(self, path):
        with open(path, 'w') as f:
            f.write(self.dumps())
        logging.info(f"saved model with {len(self.trees)} trees to {path}")

    @classmethod
    def load(cls, path):
        logging.info(f"loading model from {path}")
        with open(path, 'r') as f:
            try:
                record = json.load(f)
            except json.JSONDecodeError as e:
                raise DataFormatError(f"{path} is not a model file: {e}") from e
        return cls.from_dict(record)


def select_features(frame, feature_names, target_name=None):
    """
    Достает из таблицы колонки признаков модели в нужном порядке
    Лишние (кроме target_name) и недостающие колонки - ошибка схемы
    """
    columns = [name for name in frame.columns if name != target_name]
    missing = [name for name in feature_names if name not in columns]
    unexpected = [name for name in columns if name not in feature_names]
    if missing or unexpected:
        raise SchemaError(f"data columns do not match model features {list(feature_names)}: "
                          f"missing {missing}, unexpected {unexpected}")
    return frame[list(feature_names)].to_numpy(dtype=np.float64)


def train(dataset, objective, config):
    """
    Обучение ансамбля: на каждом раунде (g, h) пересчитываются относительно текущих предсказаний,
    строится дерево и его веса с множителем learning_rate добавляются к предсказаниям
    :param dataset: Dataset
    :param objective: Objective
    :param config: TrainConfig
    :return: Ensemble
    """
    if dataset.n_rows < 1 or dataset.n_features < 1:
        raise DataFormatError(f"need at least one row and one feature, got {dataset}")
    objective.check_config(config)

    targets = dataset.targets
    features = dataset.to_matrix()
    base_score = config.base_score if config.base_score is not None else objective.base_score(targets)
    prediction = np.full(dataset.n_rows, float(base_score))
    logging.info(f"training {objective} on {dataset}, base score {base_score:.6g}")

    pool = ThreadPool(config.n_jobs) if config.n_jobs > 1 else None
    map_fn = pool.map if pool is not None else map
    trees, training_loss = [], []
    try:
        for round_index in range(config.n_estimators):
            grads = objective.grad_hess(targets, prediction)
            tree = grow_tree(dataset, grads, config, map_fn=map_fn)
            prediction = prediction + config.learning_rate * predict_tree(tree, features)
            trees.append(tree)
            training_loss.append(float(np.mean(objective.loss(targets, prediction))))

            n_done = round_index + 1
            if n_done % config.log_every == 0 or n_done == config.n_estimators:
                logging.info(f"round {n_done}/{config.n_estimators}: training loss {training_loss[-1]:.10g}")
    finally:
        if pool is not None:
            pool.close()
            pool.join()

    return Ensemble(trees, base_score, config.learning_rate, objective.describe(),
                    dataset.feature_names, training_loss)


def predict(ensemble, features):
    return ensemble.predict(features)

#!/usr/bin/python
# -*- coding: utf-8 -*-
"""
Регрессионное дерево для бустинга второго порядка
    - узлы дерева (Leaf, Split) и их (де)сериализация
    - оптимальный вес листа, оценка структуры дерева и прирост от разбиения
    - точный жадный поиск разбиения и построение дерева
"""
import collections
import functools
import logging

import numpy as np

# лучшее разбиение узла: признак, порог (левая ветвь x <= threshold) и прирост
SplitCandidate = collections.namedtuple('SplitCandidate', ['feature_index', 'threshold', 'gain'])


class DegenerateLeafError(ValueError):
    """
    Знаменатель H + lambda не положителен, вес листа не определен
    """


class Leaf:
    __slots__ = ['weight']

    def __init__(self, weight):
        assert np.isfinite(weight), f"leaf weight must be finite, got {weight}"
        self.weight = float(weight)

    def to_dict(self):
        return {'weight': self.weight}

    def depth(self):
        return 1

    def n_leaves(self):
        return 1


class Split:
    """
    Внутренний узел: объекты с x[feature_index] <= threshold уходят влево, остальные вправо
    """
    __slots__ = ['feature_index', 'threshold', 'left', 'right']

    def __init__(self, feature_index, threshold, left, right):
        self.feature_index = int(feature_index)
        self.threshold = float(threshold)
        self.left = left
        self.right = right

    def to_dict(self):
        return {
            'feature_index': self.feature_index,
            'threshold': self.threshold,
            'left': self.left.to_dict(),
            'right': self.right.to_dict(),
        }

    def depth(self):
        return 1 + max(self.left.depth(), self.right.depth())

    def n_leaves(self):
        return self.left.n_leaves() + self.right.n_leaves()


def node_from_dict(record):
    if 'weight' in record:
        return Leaf(record['weight'])
    return Split(record['feature_index'], record['threshold'],
                 node_from_dict(record['left']), node_from_dict(record['right']))


def _check_denominator(denominator):
    if np.any(np.asarray(denominator) <= 0):
        raise DegenerateLeafError(f"H + lambda must be positive, got {denominator}")


def leaf_weight(G, H, reg_lambda):
    """
    Оптимальный вес листа -G / (H + lambda)
    :param G: сумма градиентов объектов листа
    :param H: сумма гессианов объектов листа
    :param reg_lambda: L2 регуляризация веса
    """
    _check_denominator(H + reg_lambda)
    return -G / (H + reg_lambda)


def structure_score(leaf_sums, reg_lambda, gamma):
    """
    Оценка структуры дерева (меньше - лучше): -1/2 * sum(G_j^2 / (H_j + lambda)) + gamma * T
    :param leaf_sums: список пар (G_j, H_j) по листьям
    """
    score = 0.
    for G, H in leaf_sums:
        _check_denominator(H + reg_lambda)
        score -= 0.5 * G * G / (H + reg_lambda)
    return score + gamma * len(leaf_sums)


def split_gain(G_L, H_L, G_R, H_R, reg_lambda, gamma):
    """
    Прирост от разбиения листа на два, работает и поэлементно для массивов
    """
    for denominator in (H_L + reg_lambda, H_R + reg_lambda, H_L + H_R + reg_lambda):
        _check_denominator(denominator)
    return 0.5 * (G_L * G_L / (H_L + reg_lambda)
                  + G_R * G_R / (H_R + reg_lambda)
                  - (G_L + G_R) ** 2 / (H_L + H_R + reg_lambda)) - gamma


def _best_split_for_feature(feature_index, values, g, h, config):
    """
    Перебор всех порогов одного признака
    пороги - середины между соседними различными значениями
    :return: SplitCandidate или None
    """
    order = np.argsort(values, kind='mergesort')
    sorted_values = values[order]
    g_left = np.cumsum(g[order])[:-1]
    h_left = np.cumsum(h[order])[:-1]
    G, H = g.sum(), h.sum()
    g_right = G - g_left
    h_right = H - h_left

    valid = ((sorted_values[1:] > sorted_values[:-1])
             & (h_left >= config.min_child_weight) & (h_right >= config.min_child_weight)
             & (h_left + config.reg_lambda > 0) & (h_right + config.reg_lambda > 0))
    if not valid.any():
        return None
    gains = np.full(len(valid), -np.inf)
    gains[valid] = split_gain(g_left[valid], h_left[valid], g_right[valid], h_right[valid],
                              config.reg_lambda, config.gamma)
    # argmax берет первый максимум - при равенстве выигрывает меньший порог
    position = int(np.argmax(gains))
    if not gains[position] > 0:
        return None
    threshold = (sorted_values[position] + sorted_values[position + 1]) / 2
    # у соседних double середина может округлиться до правого значения
    if threshold >= sorted_values[position + 1]:
        threshold = sorted_values[position]
    return SplitCandidate(feature_index, float(threshold), float(gains[position]))


def _evaluate_feature(feature_index, rows, dataset, grads, config):
    return _best_split_for_feature(feature_index, dataset.columns[feature_index][rows],
                                   grads.g[rows], grads.h[rows], config)


def find_best_split(rows, dataset, grads, config, map_fn=map):
    """
    Точный жадный поиск лучшего разбиения множества объектов
    :param rows: индексы строк в узле
    :param dataset: Dataset
    :param grads: GradHess с массивами длины dataset.n_rows
    :param config: TrainConfig (reg_lambda, gamma, min_child_weight)
    :param map_fn: map или pool.map - признаки можно обрабатывать параллельно,
        результат не зависит от этого
    :return: SplitCandidate или None, если ни одно разбиение не дает положительного прироста
    """
    rows = np.asarray(rows, dtype=np.intp)
    assert len(rows) > 0, "empty instance set"
    if len(rows) < 2:
        return None
    evaluate = functools.partial(_evaluate_feature, rows=rows, dataset=dataset, grads=grads, config=config)
    best = None
    # порядок признаков сохраняется и в pool.map: при равенстве приростов выигрывает меньший индекс
    for candidate in map_fn(evaluate, range(dataset.n_features)):
        if candidate is not None and (best is None or candidate.gain > best.gain):
            best = candidate
    return best


def grow_tree(dataset, grads, config, map_fn=map):
    """
    Строит дерево жадно от корня
    Корень имеет глубину 1, узел на глубине max_depth всегда лист
    :return: корневой узел (Leaf или Split)
    """
    assert dataset.n_rows > 0, "can not grow a tree on empty dataset"
    return _grow_node(np.arange(dataset.n_rows), 1, dataset, grads, config, map_fn)


def _grow_node(rows, depth, dataset, grads, config, map_fn):
    if depth < config.max_depth:
        best = find_best_split(rows, dataset, grads, config, map_fn=map_fn)
        if best is not None:
            goes_left = dataset.columns[best.feature_index][rows] <= best.threshold
            # середина между соседними double может совпасть с одним из них
            if goes_left.any() and not goes_left.all():
                logging.debug(f"depth {depth}: split feature {best.feature_index} "
                              f"at {best.threshold:.6g}, gain {best.gain:.6g}")
                return Split(best.feature_index, best.threshold,
                             _grow_node(rows[goes_left], depth + 1, dataset, grads, config, map_fn),
                             _grow_node(rows[~goes_left], depth + 1, dataset, grads, config, map_fn))
    return Leaf(leaf_weight(grads.g[rows].sum(), grads.h[rows].sum(), config.reg_lambda))


def predict_tree(node, features):
    """
    :param node: корень дерева
    :param features: массив (n_rows, n_features)
    :return: веса листьев, в которые попали строки
    """
    out = np.empty(len(features), dtype=np.float64)
    _route(node, features, np.arange(len(features)), out)
    return out


def _route(node, features, rows, out):
    if isinstance(node, Leaf):
        out[rows] = node.weight
        return
    goes_left = features[rows, node.feature_index] <= node.threshold
    _route(node.left, features, rows[goes_left], out)
    _route(node.right, features, rows[~goes_left], out)

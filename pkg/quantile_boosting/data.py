#!/usr/bin/python
# -*- coding: utf-8 -*-
"""
Табличные данные
    - Dataset: признаки (по столбцам) + целевая переменная
    - чтение/запись csv
    - разбиение на train/test
    - генерация модельных данных с гетероскедастичным шумом
"""
import logging

import numpy as np
import pandas as pd

from quantile_boosting import utils

# '%.17g' гарантирует точное восстановление double при чтении
CSV_FLOAT_FORMAT = '%.17g'


class DataFormatError(ValueError):
    """
    Некорректные входные данные: формат файла, нечисловые/пропущенные значения, размеры
    """


class SchemaError(ValueError):
    """
    Набор признаков в данных не совпадает с тем, на котором обучалась модель
    """


class Dataset:
    """
    Матрица признаков, хранящаяся по столбцам, и вектор целевой переменной
    После создания не изменяется (массивы read-only)
    """

    def __init__(self, feature_names, columns, targets, target_name='y'):
        """
        :param feature_names: имена признаков в порядке столбцов
        :param columns: массив (n_features, n_rows) или список столбцов
        :param targets: вектор длины n_rows
        :param target_name: имя колонки целевой переменной (используется при записи в csv)
        """
        columns = np.array(columns, dtype=np.float64, ndmin=2)
        targets = np.array(targets, dtype=np.float64, ndmin=1)
        if columns.ndim != 2:
            raise DataFormatError(f"columns must be a 2-d array, got shape {columns.shape}")
        if len(feature_names) != columns.shape[0]:
            raise DataFormatError(f"{len(feature_names)} feature names for {columns.shape[0]} columns")
        if columns.shape[1] != len(targets):
            raise DataFormatError(f"columns have {columns.shape[1]} rows, targets have {len(targets)}")
        if not np.all(np.isfinite(columns)):
            raise DataFormatError("features contain non-finite values")
        if not np.all(np.isfinite(targets)):
            raise DataFormatError("targets contain non-finite values")

        columns.flags.writeable = False
        targets.flags.writeable = False
        self.feature_names = tuple(feature_names)
        self.target_name = target_name
        self.columns = columns
        self.targets = targets

    @property
    def n_rows(self):
        return len(self.targets)

    @property
    def n_features(self):
        return len(self.feature_names)

    def subset(self, rows):
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(self.feature_names, self.columns[:, rows], self.targets[rows], self.target_name)

    def to_matrix(self):
        """
        :return: массив (n_rows, n_features), как его ожидает predict
        """
        return np.ascontiguousarray(self.columns.T)

    def to_frame(self):
        frame = pd.DataFrame(self.to_matrix(), columns=list(self.feature_names))
        frame[self.target_name] = self.targets
        return frame

    @classmethod
    def from_frame(cls, frame, target_name):
        if target_name not in frame.columns:
            raise DataFormatError(f"target column '{target_name}' not found, "
                                  f"available columns: {list(frame.columns)}")
        feature_names = [name for name in frame.columns if name != target_name]
        columns = frame[feature_names].to_numpy(dtype=np.float64).T
        return cls(feature_names, columns, frame[target_name].to_numpy(dtype=np.float64), target_name)

    def __str__(self):
        return f"Dataset(n_rows={self.n_rows}, n_features={self.n_features}, target='{self.target_name}')"


def read_frame(path):
    """
    Читает csv (заголовок обязателен, разделитель ',', все значения числовые)
    Ошибки указывают строку файла и колонку
    :return: pd.DataFrame из float64
    """
    try:
        # header=None: чтобы строки длиннее заголовка приводили к ошибке, а не к сдвигу колонок в индекс
        raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, encoding='utf-8')
    except pd.errors.ParserError as e:
        raise DataFormatError(f"ragged rows in {path}: {e}") from e
    except pd.errors.EmptyDataError as e:
        raise DataFormatError(f"{path} is empty") from e

    header = [str(name).strip() for name in raw.iloc[0]]
    body = raw.iloc[1:].reset_index(drop=True)
    body.columns = header
    if len(set(header)) != len(header):
        raise DataFormatError(f"duplicate column names in header of {path}: {header}")

    values = {}
    for name in header:
        raw_column = body[name]
        parsed = pd.to_numeric(raw_column, errors='coerce')
        bad = parsed.isna().to_numpy() | ~np.isfinite(parsed.to_numpy(dtype=np.float64))
        if bad.any():
            row = int(np.argmax(bad))
            line = row + 2  # первая строка файла - заголовок
            cell = raw_column.iloc[row]
            if not isinstance(cell, str):
                raise DataFormatError(f"{path}, line {line}: row has fewer fields than the header")
            raise DataFormatError(f"{path}, line {line}, column '{name}': non-numeric value '{cell}'")
        values[name] = raw_column.astype(np.float64).to_numpy()
    logging.debug(f"read {len(body)} rows x {len(header)} columns from {path}")
    return pd.DataFrame(values, columns=header)


def write_frame(frame, path):
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)


def load_csv(path, target_name):
    """
    :param path: путь до csv
    :param target_name: имя колонки целевой переменной, остальные колонки - признаки в порядке заголовка
    :return: Dataset
    """
    dataset = Dataset.from_frame(read_frame(path), target_name)
    logging.info(f"Loaded dataset '{path}': {dataset}")
    return dataset


def save_csv(dataset, path):
    write_frame(dataset.to_frame(), path)


def train_test_split(dataset, train_fraction=0.75, seed=0):
    """
    Случайная перестановка строк (определяется seed), первые round(train_fraction * n) идут в train
    :return: (train, test)
    """
    if not (0 < train_fraction < 1):
        raise DataFormatError(f"train fraction {train_fraction} is outside (0, 1)")
    n_train = int(round(train_fraction * dataset.n_rows))
    if n_train == 0 or n_train == dataset.n_rows:
        raise DataFormatError(f"split of {dataset.n_rows} rows with fraction {train_fraction} "
                              f"leaves an empty part")
    permutation = utils.make_rng(seed).permutation(dataset.n_rows)
    return dataset.subset(permutation[:n_train]), dataset.subset(permutation[n_train:])


def noiseless_mean(x):
    return 1.5 * x * np.sin(x)


def simulate(n=1000, x_min=0., x_max=10., sigma_min=1.5, sigma_max=2.5, seed=0):
    """
    y = 1.5 * x * sin(x) + eps, eps ~ N(0, sigma_i), sigma_i ~ U(sigma_min, sigma_max) для каждой строки
    (шум гетероскедастичный), x ~ U(x_min, x_max)
    :return: Dataset с признаком 'x' и целевой переменной 'y'
    """
    if n < 1:
        raise DataFormatError(f"sample count must be positive, got {n}")
    if not x_min < x_max:
        raise DataFormatError(f"x_min={x_min} must be less than x_max={x_max}")
    if not 0 < sigma_min <= sigma_max:
        raise DataFormatError(f"need 0 < sigma_min <= sigma_max, got {sigma_min}, {sigma_max}")

    rng = utils.make_rng(seed)
    x = rng.uniform(x_min, x_max, size=n)
    sigma = rng.uniform(sigma_min, sigma_max, size=n)
    y = noiseless_mean(x) + rng.normal(0., sigma)
    return Dataset(['x'], [x], y, target_name='y')

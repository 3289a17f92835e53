#!/usr/bin/python
# -*- coding: utf-8 -*-
"""
Всевозможные вспомогательные функции
"""
import logging
import os

import numpy as np

LOG_FILENAME = 'log.txt'
DESCRIPTION_FILENAME = 'description.txt'


def setup_logging(log_dir=None):
    """
    Логи в консоль и (если указана директория) в log_dir/log.txt
    :return: добавленный FileHandler или None, его нужно закрыть по окончании работы
    """
    logging.basicConfig(format='%(message)s', level=logging.INFO)
    logging.getLogger().setLevel(logging.INFO)
    if log_dir is None:
        return None
    os.makedirs(log_dir, exist_ok=True)
    handler = logging.FileHandler(os.path.join(log_dir, LOG_FILENAME), 'w')
    logging.getLogger().addHandler(handler)
    return handler


def close_logging(handler):
    if handler is not None:
        logging.getLogger().removeHandler(handler)
        handler.close()


def save_description(args, log_dir):
    """
    Сохраняет параметры запуска, чтобы результаты можно было воспроизвести
    """
    with open(os.path.join(log_dir, DESCRIPTION_FILENAME), 'w') as f:
        f.write("args:\n")
        args_dict = vars(args)
        for key in sorted(args_dict):
            if key == 'handler':
                continue
            f.write("\t{}: {}\n".format(key, args_dict[key]))


def make_rng(seed):
    """
    Генератор случайных чисел PCG64 - воспроизводим на любой платформе для одного и того же seed
    """
    return np.random.Generator(np.random.PCG64(seed))


def derive_seeds(seed, n_seeds):
    """
    Независимые seed-ы для нескольких моделей, детерминированно получаемые из одного
    """
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(n_seeds)]

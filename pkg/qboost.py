#!/usr/bin/python
# -*- coding: utf-8 -*-
"""
Скрипт командной строки: генерация данных, обучение, предсказание,
оценка интервалов предсказания и полный эксперимент

    python qboost.py simulate --n 1000 --seed 7 --out toy.csv
    python qboost.py train --data toy.csv --target y --objective quantile --tau 0.95 --upsilon 2 --out hi.model
    python qboost.py predict --model hi.model --data toy.csv --out hi.csv
    python qboost.py eval-pi --lower-model lo.model --upper-model hi.model --data toy.csv --out-dir eval
    python qboost.py experiment --out-dir results
    python qboost.py curves --tau 0.95 --out curves.csv
"""
import argparse
import logging
import os
import sys

import numpy as np

from quantile_boosting import data, evaluation, experiment, utils
from quantile_boosting.booster import Ensemble, TrainConfig, select_features, train
from quantile_boosting.objectives import OBJECTIVE_NAMES, get_objective, loss_curves


def open_unit_interval(string):
    value = float(string)
    if not (0 < value < 1):
        raise argparse.ArgumentTypeError(f"{value} is outside (0, 1)")
    return value


def positive_float(string):
    value = float(string)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"{value} is not positive")
    return value


def non_negative_float(string):
    value = float(string)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"{value} is negative")
    return value


def positive_int(string):
    value = int(string)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{value} is not a positive integer")
    return value


argparser = argparse.ArgumentParser(description="boosted regression trees with smoothed quantile loss")
subparsers = argparser.add_subparsers(dest='command', required=True)

simulate_parser = subparsers.add_parser('simulate', help="generate y = 1.5 x sin(x) + heteroscedastic noise")
simulate_parser.add_argument('--n', type=positive_int, default=1000, help="number of rows")
simulate_parser.add_argument('--x-min', type=float, default=0.)
simulate_parser.add_argument('--x-max', type=float, default=10.)
simulate_parser.add_argument('--sigma-min', type=positive_float, default=1.5,
                             help="lower end of the per-row noise standard deviation")
simulate_parser.add_argument('--sigma-max', type=positive_float, default=2.5,
                             help="upper end of the per-row noise standard deviation")
simulate_parser.add_argument('--seed', type=int, default=0)
simulate_parser.add_argument('--out', required=True, help="path to output csv with columns x,y")

train_parser = subparsers.add_parser('train', help="train an ensemble and save it as json")
train_parser.add_argument('--data', required=True, help="path to csv with header")
train_parser.add_argument('--target', default='y', help="name of the target column")
train_parser.add_argument('--objective', choices=OBJECTIVE_NAMES, default='quantile')
train_parser.add_argument('--tau', type=open_unit_interval, default=None, help="quantile level for quantile objective")
train_parser.add_argument('--upsilon', type=positive_float, default=2.,
                          help="huber threshold for quantile objective (0.07 is a reference for real-data scale)")
train_parser.add_argument('--rounds', type=positive_int, default=300, help="number of trees")
train_parser.add_argument('--depth', type=positive_int, default=3, help="max tree depth, single leaf has depth 1")
train_parser.add_argument('--lr', type=positive_float, default=0.05, help="learning rate, in (0, 1]")
train_parser.add_argument('--lambda', dest='reg_lambda', type=non_negative_float, default=1.,
                          help="L2 penalty on leaf weights")
train_parser.add_argument('--gamma', type=non_negative_float, default=0., help="per-leaf penalty")
train_parser.add_argument('--min-child-weight', type=non_negative_float, default=1.,
                          help="minimal hessian sum in each child")
train_parser.add_argument('--base-score', type=float, default=None,
                          help="initial prediction, by default mean (squared) or tau-quantile (quantile)")
train_parser.add_argument('--n-jobs', type=positive_int, default=1, help="threads for split search")
train_parser.add_argument('--log-every', type=positive_int, default=10, help="log training loss every k rounds")
train_parser.add_argument('--train-fraction', type=open_unit_interval, default=0.75,
                          help="fit on this part of the rows, the rest is left for eval-pi with the same --seed")
train_parser.add_argument('--seed', type=int, default=0, help="seed of the train/test split")
train_parser.add_argument('--out', required=True, help="path to output model (json)")

predict_parser = subparsers.add_parser('predict', help="append predictions of a saved model to a csv")
predict_parser.add_argument('--model', required=True)
predict_parser.add_argument('--data', required=True)
predict_parser.add_argument('--target', default=None, help="target column present in data, if any")
predict_parser.add_argument('--seed', type=int, default=0,
                            help="accepted by every command, output does not depend on it")
predict_parser.add_argument('--out', required=True)

eval_parser = subparsers.add_parser('eval-pi', help="evaluate prediction intervals of a pair of quantile models")
eval_parser.add_argument('--lower-model', required=True)
eval_parser.add_argument('--upper-model', required=True)
eval_parser.add_argument('--point-model', default=None)
eval_parser.add_argument('--data', required=True)
eval_parser.add_argument('--target', default='y')
eval_parser.add_argument('--train-fraction', type=open_unit_interval, default=0.75,
                         help="same as --train-fraction of train")
eval_parser.add_argument('--pad', type=non_negative_float, default=0.,
                         help="widen every interval by this fraction of its width")
eval_parser.add_argument('--nominal-coverage', type=open_unit_interval, default=evaluation.DEFAULT_NOMINAL_COVERAGE)
eval_parser.add_argument('--eta', type=positive_float, default=evaluation.DEFAULT_ETA)
eval_parser.add_argument('--seed', type=int, default=0, help="same as --seed of train, so test rows were not fitted")
eval_parser.add_argument('--out-dir', required=True)

experiment_parser = subparsers.add_parser('experiment', help="full run: data, split, three models, evaluation")
experiment_parser.add_argument('--spec', default=None, help="json experiment spec, defaults if omitted")
experiment_parser.add_argument('--seed', type=int, default=None, help="overrides seed from spec")
experiment_parser.add_argument('--n-workers', type=positive_int, default=None,
                               help="processes to train models concurrently")
experiment_parser.add_argument('--out-dir', required=True)

curves_parser = subparsers.add_parser('curves', help="pinball vs smoothed quantile loss table")
curves_parser.add_argument('--tau', type=open_unit_interval, default=0.95)
curves_parser.add_argument('--upsilons', type=positive_float, nargs='+', default=[0.07, 0.5, 1., 2.])
curves_parser.add_argument('--t-min', type=float, default=-5.)
curves_parser.add_argument('--t-max', type=float, default=5.)
curves_parser.add_argument('--points', type=positive_int, default=401)
curves_parser.add_argument('--seed', type=int, default=0,
                           help="accepted by every command, output does not depend on it")
curves_parser.add_argument('--out', required=True)


def _parent_dir(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return parent


def cmd_simulate(args):
    if not args.x_min < args.x_max:
        simulate_parser.error(f"--x-min {args.x_min} must be less than --x-max {args.x_max}")
    if not args.sigma_min <= args.sigma_max:
        simulate_parser.error(f"--sigma-min {args.sigma_min} must not exceed --sigma-max {args.sigma_max}")
    dataset = data.simulate(n=args.n, x_min=args.x_min, x_max=args.x_max,
                            sigma_min=args.sigma_min, sigma_max=args.sigma_max, seed=args.seed)
    _parent_dir(args.out)
    data.save_csv(dataset, args.out)
    logging.info(f"wrote {dataset.n_rows} rows to {args.out}")


def cmd_train(args):
    if args.objective == 'quantile' and args.tau is None:
        train_parser.error("--tau is required for the quantile objective")
    objective = get_objective(args.objective, tau=args.tau, upsilon=args.upsilon)
    config = TrainConfig(n_estimators=args.rounds, max_depth=args.depth, learning_rate=args.lr,
                         reg_lambda=args.reg_lambda, gamma=args.gamma, min_child_weight=args.min_child_weight,
                         base_score=args.base_score, seed=args.seed, n_jobs=args.n_jobs, log_every=args.log_every)
    logging.info(str(config))
    dataset = data.load_csv(args.data, args.target)
    # eval-pi с тем же seed восстанавливает это же разбиение
    train_set, _ = data.train_test_split(dataset, args.train_fraction, seed=args.seed)
    logging.info(f"fitting on {train_set.n_rows} of {dataset.n_rows} rows")
    ensemble = train(train_set, objective, config)
    _parent_dir(args.out)
    ensemble.save(args.out)
    logging.info(f"final training loss: {ensemble.training_loss[-1]:.10g}")


def cmd_predict(args):
    ensemble = Ensemble.load(args.model)
    frame = data.read_frame(args.data)
    if args.target is not None and args.target not in frame.columns:
        raise data.SchemaError(f"target column '{args.target}' not found, available columns: {list(frame.columns)}")
    features = select_features(frame, ensemble.feature_names, target_name=args.target)
    frame['prediction'] = ensemble.predict(features)
    _parent_dir(args.out)
    data.write_frame(frame, args.out)
    logging.info(f"wrote {len(frame)} predictions to {args.out}")


def cmd_eval_pi(args):
    lower_model = Ensemble.load(args.lower_model)
    upper_model = Ensemble.load(args.upper_model)
    point_model = Ensemble.load(args.point_model) if args.point_model else None
    dataset = data.load_csv(args.data, args.target)
    train_set, test_set = data.train_test_split(dataset, args.train_fraction, seed=args.seed)
    metrics, intervals = experiment.evaluate_models(lower_model, upper_model, train_set, test_set,
                                                    pad=args.pad, nominal_coverage=args.nominal_coverage,
                                                    eta=args.eta, point_model=point_model)
    crossed = int(metrics['test_crossed'].iloc[0])
    logging.info(f"crossed intervals repaired: {int(metrics['train_crossed'].iloc[0])} train, {crossed} test")
    logging.info(f"Prediction intervals:\n{experiment.format_metrics(metrics)}")
    experiment.write_results(args.out_dir, metrics, intervals)


def cmd_experiment(args):
    spec = experiment.ExperimentSpec.load(args.spec) if args.spec else experiment.ExperimentSpec()
    spec = spec.with_overrides(seed=args.seed, n_workers=args.n_workers)
    experiment.run_experiment(spec, args.out_dir)
    logging.info(f"results saved to {args.out_dir}")


def cmd_curves(args):
    if not args.t_min < args.t_max:
        curves_parser.error(f"--t-min {args.t_min} must be less than --t-max {args.t_max}")
    curves = loss_curves(args.tau, args.upsilons, np.linspace(args.t_min, args.t_max, args.points))
    _parent_dir(args.out)
    data.write_frame(curves, args.out)
    logging.info(f"wrote {len(curves)} points to {args.out}")


COMMANDS = {
    'simulate': cmd_simulate,
    'train': cmd_train,
    'predict': cmd_predict,
    'eval-pi': cmd_eval_pi,
    'experiment': cmd_experiment,
    'curves': cmd_curves,
}


def main(argv=None):
    """
    :return: код возврата - 0 успех, 1 ошибка выполнения (ошибки использования argparse завершает с кодом 2)
    """
    args = argparser.parse_args(argv)
    log_dir = getattr(args, 'out_dir', None)
    handler = utils.setup_logging(log_dir)
    try:
        if log_dir is not None:
            utils.save_description(args, log_dir)
        COMMANDS[args.command](args)
    except (ValueError, RuntimeError, OSError) as e:
        logging.error(f"{args.command} failed: {e}")
        return 1
    finally:
        utils.close_logging(handler)
    return 0


if __name__ == '__main__':
    sys.exit(main())

import logging

import numpy as np
import pandas as pd
import pytest

from quantile_boosting import data, utils
from quantile_boosting.booster import Ensemble, TrainConfig, predict, select_features, train
from quantile_boosting.data import DataFormatError, Dataset, SchemaError
from quantile_boosting.objectives import ParameterDomainError, get_objective
from quantile_boosting.tree import Leaf, Split

SQUARED = get_objective('squared')


def _random_dataset(seed, n_rows=120, n_features=3):
    rng = utils.make_rng(seed)
    matrix = rng.normal(size=(n_rows, n_features))
    targets = np.sin(matrix[:, 0]) + matrix[:, -1] ** 2 + rng.normal(scale=0.3, size=n_rows)
    return Dataset([f"f{j}" for j in range(n_features)], matrix.T, targets)


class TestTrainConfig:
    def test_defaults(self):
        config = TrainConfig()
        assert (config.n_estimators, config.max_depth, config.learning_rate) == (300, 3, 0.05)
        assert (config.reg_lambda, config.gamma, config.min_child_weight) == (1., 0., 1.)
        assert config.base_score is None

    @pytest.mark.parametrize('params', [
        {'n_estimators': 0},
        {'max_depth': 0},
        {'learning_rate': 0.},
        {'learning_rate': 1.5},
        {'reg_lambda': -1.},
        {'gamma': -0.1},
        {'min_child_weight': -1.},
        {'base_score': float('nan')},
        {'n_jobs': 0},
    ])
    def test_invalid(self, params):
        with pytest.raises(ParameterDomainError):
            TrainConfig(**params)

    def test_from_others(self):
        base = TrainConfig(n_estimators=10, learning_rate=0.3)
        config = TrainConfig.from_others(base, max_depth=5, learning_rate=None)
        assert config.max_depth == 5
        assert config.learning_rate == 0.3
        assert config.n_estimators == 10
        with pytest.raises(ParameterDomainError):
            TrainConfig.from_others(base, depth=5)

    def test_dict_round_trip(self):
        config = TrainConfig(n_estimators=7, base_score=1.5, n_jobs=2)
        assert TrainConfig.from_dict(config.to_dict()).to_dict() == config.to_dict()
        with pytest.raises(ParameterDomainError):
            TrainConfig.from_dict({'rounds': 3})

    def test_str(self):
        assert 'learning_rate=0.05' in str(TrainConfig())


class TestTrain:
    def test_constant_target(self):
        dataset = Dataset(['x'], [np.arange(50.)], np.full(50, 3.))
        ensemble = train(dataset, SQUARED, TrainConfig(n_estimators=20))
        assert ensemble.base_score == 3.
        assert all(isinstance(tree, Leaf) and tree.weight == 0 for tree in ensemble.trees)
        np.testing.assert_array_equal(ensemble.predict(dataset.to_matrix()), np.full(50, 3.))

    @pytest.mark.parametrize('seed', range(5))
    def test_squared_loss_never_increases(self, seed):
        dataset = _random_dataset(seed)
        config = TrainConfig(n_estimators=60, max_depth=4, learning_rate=0.3 + 0.1 * seed,
                             min_child_weight=0.)
        losses = train(dataset, SQUARED, config).training_loss
        initial = np.mean(SQUARED.loss(dataset.targets, np.full(dataset.n_rows, dataset.targets.mean())))
        assert losses[0] <= initial + 1e-12
        assert all(current <= previous + 1e-12 for previous, current in zip(losses, losses[1:]))

    def test_squared_loss_never_increases_on_simulated_data(self):
        dataset = data.simulate(n=1000, seed=3)
        losses = train(dataset, SQUARED, TrainConfig()).training_loss
        assert len(losses) == 300
        assert all(current <= previous + 1e-12 for previous, current in zip(losses, losses[1:]))
        assert losses[-1] < losses[0]

    def test_quantile_recovery(self):
        rng = utils.make_rng(0)
        targets = rng.standard_normal(2000)
        dataset = Dataset(['const'], [np.ones(2000)], targets)
        objective = get_objective('quantile', tau=0.9, upsilon=0.1)
        config = TrainConfig(n_estimators=300, max_depth=3, learning_rate=0.05, reg_lambda=1.)
        ensemble = train(dataset, objective, config)

        predictions = ensemble.predict(dataset.to_matrix())
        assert np.all(predictions == predictions[0])
        empirical_quantile = np.sort(targets)[int(np.ceil(0.9 * len(targets))) - 1]
        assert abs(predictions[0] - empirical_quantile) <= 0.05

    def test_quantile_requires_positive_lambda(self):
        dataset = _random_dataset(0)
        with pytest.raises(ParameterDomainError):
            train(dataset, get_objective('quantile', tau=0.5, upsilon=1.), TrainConfig(reg_lambda=0.))

    def test_upper_quantile_above_lower(self):
        dataset = data.simulate(n=400, seed=2)
        config = TrainConfig(n_estimators=100)
        lower = train(dataset, get_objective('quantile', tau=0.05, upsilon=2.), config)
        upper = train(dataset, get_objective('quantile', tau=0.95, upsilon=2.), config)
        features = dataset.to_matrix()
        assert np.mean(upper.predict(features) - lower.predict(features)) > 0

    def test_training_loss_matches_predictions(self):
        dataset = _random_dataset(7)
        ensemble = train(dataset, SQUARED, TrainConfig(n_estimators=25))
        predictions = ensemble.predict(dataset.to_matrix())
        assert np.mean(SQUARED.loss(dataset.targets, predictions)) == ensemble.training_loss[-1]

    def test_explicit_base_score(self):
        dataset = _random_dataset(1)
        ensemble = train(dataset, SQUARED, TrainConfig(n_estimators=1, base_score=-2.))
        assert ensemble.base_score == -2.

    def test_thread_count_does_not_change_model(self):
        dataset = _random_dataset(9, n_features=5)
        config = TrainConfig(n_estimators=15, max_depth=4)
        sequential = train(dataset, SQUARED, config)
        threaded = train(dataset, SQUARED, TrainConfig.from_others(config, n_jobs=3))
        assert threaded.dumps() == sequential.dumps()

    def test_logs_progress(self, caplog):
        caplog.set_level(logging.INFO)
        train(_random_dataset(2), SQUARED, TrainConfig(n_estimators=4, log_every=2))
        messages = [record.getMessage() for record in caplog.records]
        assert any(message.startswith('round 2/4') for message in messages)
        assert any(message.startswith('round 4/4') for message in messages)
        assert not any(message.startswith('round 3/4') for message in messages)

    def test_empty_dataset(self):
        dataset = Dataset(['x'], np.empty((1, 0)), np.empty(0))
        with pytest.raises(DataFormatError):
            train(dataset, SQUARED, TrainConfig())


class TestPredict:
    DESCRIPTION = {'name': 'squared', 'tau': None, 'upsilon': None}

    def test_no_trees(self):
        ensemble = Ensemble([], 2.5, 0.1, self.DESCRIPTION, ['x'])
        np.testing.assert_array_equal(ensemble.predict([[1.], [7.]]), [2.5, 2.5])

    def test_single_leaf(self):
        ensemble = Ensemble([Leaf(4.)], 2.5, 0.1, self.DESCRIPTION, ['x'])
        assert ensemble.predict([1.]) == pytest.approx(2.9)
        assert isinstance(ensemble.predict([1.]), float)

    def test_hand_built_tree(self):
        tree = Split(1, 0., Split(0, 10., Leaf(-1.), Leaf(1.)), Leaf(5.))
        ensemble = Ensemble([tree], 0., 1., self.DESCRIPTION, ['a', 'b'])
        features = np.array([[3., -1.], [30., -1.], [3., 2.], [10., 0.]])
        np.testing.assert_array_equal(ensemble.predict(features), [-1., 1., 5., -1.])
        assert predict(ensemble, features[1]) == 1.

    def test_frame_input_is_matched_by_name(self):
        tree = Split(1, 0., Leaf(-1.), Leaf(1.))
        ensemble = Ensemble([tree], 0., 1., self.DESCRIPTION, ['a', 'b'])
        frame = pd.DataFrame({'b': [-1., 1.], 'a': [0., 0.]})
        np.testing.assert_array_equal(ensemble.predict(frame), [-1., 1.])

    def test_feature_count_mismatch(self):
        ensemble = Ensemble([Leaf(1.)], 0., 1., self.DESCRIPTION, ['a', 'b'])
        with pytest.raises(SchemaError):
            ensemble.predict(np.zeros((3, 3)))

    def test_select_features(self):
        frame = pd.DataFrame({'y': [1.], 'b': [2.], 'a': [3.]})
        np.testing.assert_array_equal(select_features(frame, ['a', 'b'], target_name='y'), [[3., 2.]])
        with pytest.raises(SchemaError, match="unexpected \\['y'\\]"):
            select_features(frame, ['a', 'b'])
        with pytest.raises(SchemaError, match="missing \\['c'\\]"):
            select_features(frame, ['a', 'b', 'c'], target_name='y')


class TestSerialization:
    def test_save_load_predictions_identical(self, tmp_path):
        dataset = data.simulate(n=300, seed=4)
        ensemble = train(dataset, get_objective('quantile', tau=0.95, upsilon=2.), TrainConfig(n_estimators=40))
        path = tmp_path / 'hi.model'
        ensemble.save(str(path))
        restored = Ensemble.load(str(path))

        features = utils.make_rng(1).uniform(-1., 11., size=(500, 1))
        np.testing.assert_array_equal(restored.predict(features), ensemble.predict(features))
        assert restored.to_dict() == ensemble.to_dict()
        assert restored.objective == {'name': 'quantile', 'tau': 0.95, 'upsilon': 2.}
        assert restored.feature_names == ('x',)

    def test_document_fields(self):
        ensemble = Ensemble([Split(0, 1., Leaf(1.), Leaf(2.))], 0.5, 0.1,
                            {'name': 'squared', 'tau': None, 'upsilon': None}, ['x'], [0.3])
        record = ensemble.to_dict()
        assert record['format_version'] == Ensemble.FORMAT_VERSION
        assert set(record) >= {'objective', 'base_score', 'learning_rate', 'trees'}
        assert record['trees'][0] == {'feature_index': 0, 'threshold': 1.,
                                      'left': {'weight': 1.}, 'right': {'weight': 2.}}

    def test_unsupported_version(self):
        record = Ensemble([], 0., 1., {'name': 'squared'}, ['x']).to_dict()
        record['format_version'] = 99
        with pytest.raises(DataFormatError):
            Ensemble.from_dict(record)

    def test_not_a_model_file(self, tmp_path):
        path = tmp_path / 'broken.model'
        path.write_text('x,y\n1,2\n')
        with pytest.raises(DataFormatError):
            Ensemble.load(str(path))

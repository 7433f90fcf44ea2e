# Forêt aléatoire sur les variables OHLCV retardées

import logging

from common.dataio import Dataset, MarketView
from common.learners.forest import Forest, ForestConfig, forest_fit, forest_predict
from common.learners.tree import TreeConfig
from common.signals import Decision, Strategy, per_split, training_indices, tree_feature_matrix, view_tree_features

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')


class RandomForestStrategy(Strategy):
    id = 'rf'
    defaults = {
        'rf.n_trees': 100,
        'rf.bootstrap': True,
        'rf.max_depth': 8,
        'rf.min_samples_split': 2,
        'rf.features_per_split': 'sqrt',
        'rf.n_jobs': 1
    }

    def first_usable(self) -> int:
        return int(self.param('features.lookback'))

    def fit(self, history: Dataset, train_start: int, seed: int, prior_state=None) -> Forest:
        days = training_indices(history, train_start, self.first_usable())
        X = tree_feature_matrix(history, days, self.first_usable(), raw_prices=bool(self.param('features.raw_prices')))
        tree = TreeConfig(max_depth=int(self.param('max_depth')), min_samples_split=int(self.param('min_samples_split')),
                          features_per_split=per_split(self.param('features_per_split')), rng_seed=seed)
        cfg = ForestConfig(n_trees=int(self.param('n_trees')), bootstrap=bool(self.param('bootstrap')), tree=tree,
                           n_jobs=int(self.param('n_jobs')))
        return forest_fit(X, history.columns.label[days], cfg)

    def decide(self, state: Forest, view: MarketView) -> Decision:
        x = view_tree_features(view, self.first_usable(), raw_prices=bool(self.param('features.raw_prices')))
        direction, _ = forest_predict(state, x)
        return Decision(direction=int(direction[0]), scale=1.0)

    def models(self, state: Forest) -> dict:
        return {'rf': state}


def setup(registry):
    registry.register(RandomForestStrategy)

# Gradient boosting sur les variables OHLCV retardées

import logging

from common.dataio import Dataset, MarketView
from common.learners.boosting import BoostConfig, BoostedModel, gbt_fit, gbt_predict
from common.learners.tree import TreeConfig
from common.signals import Decision, Strategy, per_split, training_indices, tree_feature_matrix, view_tree_features

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')


class GbtStrategy(Strategy):
    id = 'gbt'
    defaults = {
        'gbt.n_rounds': 100,
        'gbt.learning_rate': 0.1,
        'gbt.max_depth': 3,
        'gbt.min_samples_split': 2,
        'gbt.features_per_split': 'all'
    }

    def first_usable(self) -> int:
        return int(self.param('features.lookback'))

    def fit(self, history: Dataset, train_start: int, seed: int, prior_state=None) -> BoostedModel:
        days = training_indices(history, train_start, self.first_usable())
        X = tree_feature_matrix(history, days, self.first_usable(), raw_prices=bool(self.param('features.raw_prices')))
        tree = TreeConfig(max_depth=int(self.param('max_depth')), min_samples_split=int(self.param('min_samples_split')),
                          features_per_split=per_split(self.param('features_per_split')), rng_seed=seed)
        cfg = BoostConfig(n_rounds=int(self.param('n_rounds')), learning_rate=float(self.param('learning_rate')), tree=tree)
        return gbt_fit(X, history.columns.label[days], cfg)

    def decide(self, state: BoostedModel, view: MarketView) -> Decision:
        x = view_tree_features(view, self.first_usable(), raw_prices=bool(self.param('features.raw_prices')))
        direction, _ = gbt_predict(state, x)
        return Decision(direction=int(direction[0]), scale=1.0)

    def models(self, state: BoostedModel) -> dict:
        return {'gbt': state}


def setup(registry):
    registry.register(GbtStrategy)

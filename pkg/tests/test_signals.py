"""
test_signals.py : décisions, variables d'entrée, plug-ins de stratégies, politique du modèle A
et absence de fuite d'information après l'ouverture.
Run: pytest tests/test_signals.py -v
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from common.dataio import Bar, Dataset, make_trading_day
from common.errors import ConfigError, ModelError
from common.signals import (Decision, ZScore, build_lstm_features, build_tree_features, direction_of, load_strategies,
                            opening_rows, tree_feature_count, view_tree_features)
from conftest import FAST_PARAMS, STRATEGY_SERIES, mutate_from
from strategies.model_a.model_a import confidence, gate, replay_score, select_theta
from strategies.passive.passive import passive_decide


def scaled_prices(dataset: Dataset, factor: float) -> Dataset:
    """Copie du dataset dont tous les prix ES et VIX sont multipliés par `factor` (volumes inchangés)"""
    def scale(bar: Bar) -> Bar:
        return replace(bar, open=bar.open * factor, high=bar.high * factor, low=bar.low * factor,
                       close=bar.close * factor)
    days = tuple(make_trading_day(scale(d.es), scale(d.vix), d.rf_annual, d.prev_volume) for d in dataset.days)
    return Dataset(days, dataset.sources)


# ---------------------------------------------------------------------------
# Décisions
# ---------------------------------------------------------------------------

class TestDecision:

    def test_position(self):
        assert Decision(-1, 0.5).position == -0.5
        assert Decision(1, 0.0).closed

    @pytest.mark.parametrize("direction,scale", [(0, 1.0), (2, 1.0), (1, 1.5), (-1, -0.1)])
    def test_invalid(self, direction, scale):
        with pytest.raises(ValueError):
            Decision(direction, scale)

    def test_half_is_short(self):
        assert direction_of(0.5) == -1
        assert direction_of(0.5000001) == 1

    def test_passive_always_long(self, small_dataset):
        for t in range(len(small_dataset)):
            assert passive_decide(small_dataset.view_at(t)) == Decision(1, 1.0)


# ---------------------------------------------------------------------------
# Variables d'arbres
# ---------------------------------------------------------------------------

class TestTreeFeatures:

    def test_dimensions(self, synth_dataset):
        assert build_tree_features(synth_dataset, 10, 5).shape == (47,)
        assert build_tree_features(synth_dataset, 10, 5, include_volume=False).shape == (42,)
        assert tree_feature_count(5) == 47 and tree_feature_count(5, include_volume=False) == 42

    def test_view_matches_dataset(self, synth_dataset):
        for t in (5, 100, 399):
            np.testing.assert_array_equal(view_tree_features(synth_dataset.view_at(t), 5),
                                          build_tree_features(synth_dataset, t, 5))

    def test_opening_gap(self, synth_dataset):
        t = 50
        x = build_tree_features(synth_dataset, t, 5)
        assert x[-2] == pytest.approx(math.log(synth_dataset[t].es.open / synth_dataset[t - 1].es.close))
        assert x[-1] == pytest.approx(math.log(synth_dataset[t].vix.open / synth_dataset[t - 1].vix.close))

    def test_lagged_prices_relative_to_open(self, synth_dataset):
        t = 50
        x = build_tree_features(synth_dataset, t, 5)
        # premier bloc : ES OHLC du jour t-5, puis volume, puis VIX OHLC
        assert x[0] == pytest.approx(math.log(synth_dataset[t - 5].es.open / synth_dataset[t].es.open))
        assert x[3] == pytest.approx(math.log(synth_dataset[t - 5].es.close / synth_dataset[t].es.open))

    def test_raw_prices(self, synth_dataset):
        x = build_tree_features(synth_dataset, 20, 5, raw_prices=True)
        assert x[-2] == synth_dataset[20].es.open
        assert x[0] == synth_dataset[15].es.open

    def test_price_scale_invariant(self, synth_dataset):
        doubled = scaled_prices(synth_dataset, 2.0)
        for t in (5, 120, 399):
            np.testing.assert_array_equal(build_tree_features(doubled, t, 5), build_tree_features(synth_dataset, t, 5))
        np.testing.assert_array_equal(doubled.columns.label, synth_dataset.columns.label)

    @pytest.mark.parametrize("strategy_id", ["gbt", "rf"])
    def test_decisions_ignore_price_scale(self, registry, synth_dataset, strategy_id):
        doubled = scaled_prices(synth_dataset, 2.0)
        decisions = []
        for dataset in (synth_dataset, doubled):
            strategy = registry.create(strategy_id, FAST_PARAMS[strategy_id])
            state = strategy.fit(dataset.head(300), 50, seed=6)
            decisions.append([strategy.decide(state, dataset.view_at(t)) for t in range(300, 400)])
        assert decisions[0] == decisions[1]

    def test_not_enough_history(self, synth_dataset):
        with pytest.raises(ValueError):
            build_tree_features(synth_dataset, 4, 5)


# ---------------------------------------------------------------------------
# Variables LSTM
# ---------------------------------------------------------------------------

class TestLstmFeatures:

    def test_shape_and_today_row(self, small_dataset):
        rows = opening_rows(small_dataset.view_at(4))
        assert rows.shape == (5, 3)
        assert rows[-1].tolist() == [small_dataset[4].es.open, small_dataset[4].vix.open, small_dataset[3].es.volume]

    def test_view_matches_dataset(self, synth_dataset):
        z = ZScore.fit(opening_rows(synth_dataset.head(200)))
        t = 250
        np.testing.assert_array_equal(build_lstm_features(synth_dataset.view_at(t), seq_len=20, zscore=z),
                                      build_lstm_features(opening_rows(synth_dataset), t, 20, z))

    def test_sequence_length(self, synth_dataset):
        assert build_lstm_features(synth_dataset, 19, 20).shape == (20, 3)
        with pytest.raises(ValueError):
            build_lstm_features(synth_dataset, 18, 20)

    def test_shift_equivariant(self, synth_dataset):
        z = ZScore.fit(opening_rows(synth_dataset.head(250)))
        shift = 37
        later = Dataset(synth_dataset.days[shift:], synth_dataset.sources)
        for t in (shift + 19, 200, 399):
            np.testing.assert_array_equal(build_lstm_features(later, t - shift, 20, z),
                                          build_lstm_features(synth_dataset, t, 20, z))
            np.testing.assert_array_equal(build_lstm_features(later.view_at(t - shift), seq_len=20, zscore=z),
                                          build_lstm_features(synth_dataset.view_at(t), seq_len=20, zscore=z))
        today, tomorrow = (build_lstm_features(synth_dataset, t, 20, z) for t in (300, 301))
        np.testing.assert_array_equal(tomorrow[:-1], today[1:])

    def test_zero_variance_column(self):
        rows = np.column_stack([np.arange(5.0), np.full(5, 7.0), np.arange(5.0) * 2])
        z = ZScore.fit(rows)
        out = z.apply(rows)
        assert np.all(out[:, 1] == 0.0)
        assert out[:, 0].mean() == pytest.approx(0.0)
        assert out[:, 0].std() == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# Politique du modèle A
# ---------------------------------------------------------------------------

class TestModelAPolicy:

    def test_confident_agreement_opens(self):
        d = gate(1.0, 1.0, 0.9)
        assert (d.direction, d.scale) == (1, 1.0)
        assert d.diagnostics["confidence"] == 1.0

    def test_disagreement_closes(self):
        d = gate(0.9, 0.1, 0.5)
        assert d.scale == 0.0
        assert d.direction == 1

    def test_short_agreement(self):
        d = gate(0.05, 0.1, 0.8)
        assert (d.direction, d.scale) == (-1, 1.0)

    def test_confidence_below_threshold(self):
        assert confidence(0.8, 0.6) == pytest.approx(0.4)
        assert gate(0.8, 0.6, 0.5).closed
        assert not gate(0.8, 0.6, 0.35).closed

    def _replay(self):
        right = [(0.96, 0.96, 0.01)] * 3
        wrong = [(0.6, 0.6, -0.01)] * 3
        return np.array(right + wrong)

    def test_theta_rewards_selectivity(self):
        assert replay_score(self._replay(), 0.1) == pytest.approx(0.0)
        assert replay_score(self._replay(), 0.9) == pytest.approx(1.0)
        assert select_theta(self._replay(), (0.1, 0.9)) == 0.9

    def test_theta_tie_takes_smallest(self):
        assert select_theta(self._replay(), (0.9, 0.5, 0.3)) == 0.3

    def test_all_closed_scores_zero(self):
        assert replay_score(self._replay(), 0.95) == 0.0


class TestModelAFit:

    @pytest.fixture(scope="class")
    def model(self, registry):
        return registry.create("model_a", FAST_PARAMS["model_a"])

    def test_first_fit(self, model, synth_dataset):
        state = model.fit(synth_dataset.head(300), 50, seed=1)
        assert state.theta in model.theta_grid
        assert state.replay == ()
        assert state.trained_until == 300

    def test_daily_refit_fills_replay(self, model, synth_dataset):
        first = model.fit(synth_dataset.head(300), 50, seed=1)
        second = model.fit(synth_dataset.head(307), 57, seed=1, prior_state=first)
        assert len(second.replay) == 7
        assert second.replay[0][2] == synth_dataset[300].daytime_return
        third = model.fit(synth_dataset.head(312), 62, seed=1, prior_state=second)
        assert len(third.replay) == 10
        assert third.replay[-1][2] == synth_dataset[311].daytime_return

    def test_decision_carries_diagnostics(self, model, synth_dataset):
        state = model.fit(synth_dataset.head(300), 50, seed=1)
        d = model.decide(state, synth_dataset.view_at(300))
        assert set(d.diagnostics) == set(model.diagnostics)
        assert d.diagnostics["theta"] == state.theta


# ---------------------------------------------------------------------------
# Plug-ins
# ---------------------------------------------------------------------------

class TestRegistry:

    def test_all_strategies_loaded(self, registry):
        assert sorted(registry.ids()) == sorted(STRATEGY_SERIES)

    def test_unknown_model(self, registry):
        with pytest.raises(ConfigError, match="model_b"):
            registry.get("model_b")

    def test_defaults_merged(self, registry):
        strategy = registry.create("gbt", {"gbt.n_rounds": 7})
        assert strategy.param("n_rounds") == 7
        assert strategy.param("max_depth") == 3
        assert strategy.param("features.lookback") == 5
        assert "rf.n_trees" in registry.defaults()

    def test_broken_plugin(self, tmp_path, monkeypatch, caplog):
        root = tmp_path / "plugins_broken"
        (root / "broken").mkdir(parents=True)
        (root / "broken" / "broken.py").write_text("raise RuntimeError('cassé')\n", encoding="utf-8")
        monkeypatch.syspath_prepend(str(tmp_path))
        assert load_strategies(root).ids() == []
        assert "broken" in caplog.text
        with pytest.raises(ModelError, match="broken"):
            load_strategies(root, required="broken")


# ---------------------------------------------------------------------------
# Frontière d'information
# ---------------------------------------------------------------------------

class TestNoLookahead:
    """Tirer au hasard tout ce qui suit l'ouverture du jour t ne doit pas changer la décision de t"""

    FIT_AT = 300
    MUTATIONS = 100

    @pytest.mark.parametrize("strategy_id", STRATEGY_SERIES)
    def test_future_does_not_leak(self, registry, synth_dataset, strategy_id):
        strategy = registry.create(strategy_id, FAST_PARAMS[strategy_id])
        state = strategy.fit(synth_dataset.head(self.FIT_AT), self.FIT_AT - 250, seed=4)
        rng = np.random.default_rng(STRATEGY_SERIES.index(strategy_id))
        for _ in range(self.MUTATIONS):
            cut = int(rng.integers(self.FIT_AT, len(synth_dataset)))
            mutated = mutate_from(synth_dataset, cut, rng)
            assert mutated[cut].daytime_return != synth_dataset[cut].daytime_return
            before = strategy.decide(state, synth_dataset.view_at(cut))
            after = strategy.decide(state, mutated.view_at(cut))
            assert before == after
            assert dict(before.diagnostics) == dict(after.diagnostics)

    def test_view_has_no_outcome(self, synth_dataset):
        view = synth_dataset.view_at(123)
        assert len(view.past) == 123
        assert view.past.dates[-1] < np.datetime64(view.date)
        for name in ("es_close", "es_high", "es_low", "daytime_return", "label"):
            assert not hasattr(view, name)

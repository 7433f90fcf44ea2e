# Classifieur LSTM sur les séquences de 20 jours (ouverture ES, ouverture VIX, volume de la veille)

import logging
from dataclasses import dataclass

import numpy as np

from common.dataio import Dataset, MarketView
from common.learners.lstm import LstmConfig, LstmParams, lstm_fit, lstm_predict_proba
from common.signals import Decision, Strategy, ZScore, build_lstm_features, direction_of, opening_rows, training_indices

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')


@dataclass(frozen=True)
class LstmState:
    params: LstmParams
    zscore: ZScore
    seq_len: int


class LstmStrategy(Strategy):
    """Réseau LSTM réentraîné à chaque fenêtre, décision binaire à exposition pleine"""
    id = 'lstm'
    defaults = {
        'lstm.seq_len': 20,
        'lstm.hidden_dim': 16,
        'lstm.epochs': 150,
        'lstm.learning_rate': 0.3
    }

    def first_usable(self) -> int:
        return int(self.param('seq_len')) - 1

    def fit(self, history: Dataset, train_start: int, seed: int, prior_state=None) -> LstmState:
        seq_len = int(self.param('seq_len'))
        days = training_indices(history, train_start, self.first_usable())
        if not len(days):
            raise ValueError("aucun jour d'entraînement utilisable")
        rows = opening_rows(history)
        # Normalisation estimée sur la seule fenêtre d'entraînement
        zscore = ZScore.fit(rows[max(train_start, 0):])
        X = np.stack([build_lstm_features(rows, int(t), seq_len, zscore) for t in days])
        y = history.columns.label[days]
        cfg = LstmConfig(input_dim=3, hidden_dim=int(self.param('hidden_dim')), sequence_length=seq_len,
                         epochs=int(self.param('epochs')), learning_rate=float(self.param('learning_rate')), rng_seed=seed)
        return LstmState(params=lstm_fit(X, y, cfg), zscore=zscore, seq_len=seq_len)

    def decide(self, state: LstmState, view: MarketView) -> Decision:
        x = build_lstm_features(view, seq_len=state.seq_len, zscore=state.zscore)
        return Decision(direction=direction_of(float(lstm_predict_proba(state.params, x[None])[0])), scale=1.0)

    def models(self, state: LstmState) -> dict:
        return {'lstm': state.params}


def setup(registry):
    registry.register(LstmStrategy)

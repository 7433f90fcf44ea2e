# Référence passive : toujours long, exposition pleine

import logging

from common.dataio import Dataset, MarketView
from common.signals import Decision, Strategy

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')


def passive_decide(view: MarketView | None = None) -> Decision:
    """Achat systématique, quel que soit le jour"""
    return Decision(direction=1, scale=1.0)


class Passive(Strategy):
    """Position longue sur ES à chaque séance (benchmark)"""
    id = 'passive'

    def fit(self, history: Dataset, train_start: int, seed: int, prior_state=None) -> None:
        return None

    def decide(self, state, view: MarketView) -> Decision:
        return passive_decide(view)


def setup(registry):
    registry.register(Passive)

# Contrat des stratégies, décisions, constructeurs de variables et chargement des plug-ins

import importlib
import logging
import math
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, ClassVar, Mapping

import numpy as np

from common.dataio import Dataset, MarketColumns, MarketView
from common.errors import ConfigError, ModelError

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')

STRATEGIES_PATH = Path(__file__).resolve().parent.parent / 'strategies'

# Paramètres de variables partagés par les stratégies à base d'arbres
FEATURE_DEFAULTS : dict[str, Any] = {
    'features.lookback': 5,         # L jours retardés dans les variables d'arbres
    'features.raw_prices': False    # Niveaux bruts au lieu des log-ratios (ablation)
}

# Décisions -------------------------------------------------------------------

@dataclass(frozen=True)
class Decision:
    """Décision d'un jour : sens ±1 et échelle d'exposition dans [0, 1] (0 = fermé)"""
    direction: int
    scale: float = 1.0
    diagnostics: Mapping[str, float] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.direction not in (1, -1):
            raise ValueError(f"sens invalide : {self.direction}")
        if not 0.0 <= self.scale <= 1.0:
            raise ValueError(f"échelle hors de [0, 1] : {self.scale}")

    @property
    def position(self) -> float:
        """Position effective sens × échelle"""
        return self.direction * self.scale

    @property
    def closed(self) -> bool:
        return self.scale == 0


def direction_of(probability: float) -> int:
    """+1 si la probabilité de hausse dépasse strictement ½, sinon -1"""
    return 1 if probability > 0.5 else -1

# Contrat ---------------------------------------------------------------------

class Strategy(ABC):
    """Stratégie de trading journalière

    `fit` ne reçoit que l'historique tronqué au premier jour de test, `decide` que la vue d'ouverture
    du jour : aucune information postérieure à l'ouverture n'est accessible.

    :param params: Configuration résolue (clés pointées), complétée par les valeurs par défaut
    """
    id : ClassVar[str]
    stateful : ClassVar[bool] = False
    defaults : ClassVar[dict[str, Any]] = {}
    diagnostics : ClassVar[tuple[str, ...]] = ()

    def __init__(self, params: Mapping[str, Any] | None = None):
        self.params = {**FEATURE_DEFAULTS, **self.defaults, **(params or {})}

    def __repr__(self) -> str:
        return f'<Strategy {self.id}>'

    def param(self, key: str) -> Any:
        """Valeur d'un hyperparamètre, `key` sans ou avec préfixe"""
        return self.params[key] if '.' in key else self.params[f'{self.id}.{key}']

    def first_usable(self) -> int:
        """Premier index de séance pour lequel les variables sont calculables"""
        return 0

    @abstractmethod
    def fit(self, history: Dataset, train_start: int, seed: int, prior_state: Any = None) -> Any:
        """Entraîne sur les séances [train_start, len(history)) et renvoie un état immuable"""

    @abstractmethod
    def decide(self, state: Any, view: MarketView) -> Decision:
        """Décision du jour de la vue"""

    def models(self, state: Any) -> dict[str, Any]:
        """Modèles appris contenus dans un état, par nom de fichier (voir learners.serialize) ; aucun par défaut"""
        return {}


class StrategyRegistry:
    """Registre des stratégies chargées depuis le dossier des plug-ins"""
    def __init__(self):
        self.__strategies : dict[str, type[Strategy]] = {}

    def __contains__(self, strategy_id: str) -> bool:
        return strategy_id in self.__strategies

    def register(self, cls: type[Strategy]) -> None:
        if cls.id in self.__strategies:
            raise ValueError(f"stratégie déjà enregistrée : {cls.id}")
        self.__strategies[cls.id] = cls

    def ids(self) -> list[str]:
        return list(self.__strategies)

    def get(self, strategy_id: str) -> type[Strategy]:
        try:
            return self.__strategies[strategy_id]
        except KeyError:
            raise ConfigError(f"modèle inconnu : '{strategy_id}' (disponibles : {', '.join(sorted(self.__strategies))})")

    def create(self, strategy_id: str, params: Mapping[str, Any] | None = None) -> Strategy:
        return self.get(strategy_id)(params)

    def defaults(self) -> dict[str, Any]:
        """Toutes les clés d'hyperparamètres connues avec leur valeur par défaut"""
        merged = dict(FEATURE_DEFAULTS)
        for cls in self.__strategies.values():
            merged.update(cls.defaults)
        return merged


def load_strategies(path: str | Path = STRATEGIES_PATH, *, required: str | None = None) -> StrategyRegistry:
    """Charge chaque dossier `strategies/<id>/<id>.py` et appelle son `setup(registry)`

    Un plug-in défaillant est signalé puis ignoré, sauf s'il s'agit du modèle demandé.

    :param path: Dossier des plug-ins
    :param required: Identifiant du modèle dont l'échec doit être fatal
    :return: StrategyRegistry
    """
    registry = StrategyRegistry()
    package = Path(path).name
    for folder in sorted(os.listdir(path)):
        if folder.startswith(('_', '.')) or not (Path(path) / folder / f'{folder}.py').is_file():
            continue
        try:
            module = importlib.import_module(f'{package}.{folder}.{folder}')
            module.setup(registry)
            logger.debug(f"Stratégie chargée : '{folder}'")
        except Exception as e:
            if folder == required:
                raise ModelError(f"chargement de la stratégie '{folder}' impossible : {type(e).__name__}: {e}")
            logger.warning(f"Stratégie '{folder}' ignorée > {type(e).__name__}: {e}")
    return registry

# Normalisation ---------------------------------------------------------------

@dataclass(frozen=True)
class ZScore:
    """Centrage-réduction par variable, paramètres estimés sur la fenêtre d'entraînement"""
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, rows: np.ndarray) -> 'ZScore':
        rows = np.asarray(rows, dtype=float)
        return cls(mean=rows.mean(axis=0), std=rows.std(axis=0))

    def apply(self, rows: np.ndarray) -> np.ndarray:
        """Variables centrées-réduites, zéro pour une variable de variance nulle"""
        rows = np.asarray(rows, dtype=float)
        safe = np.where(self.std > 0, self.std, 1.0)
        return np.where(self.std > 0, (rows - self.mean) / safe, 0.0)

# Variables LSTM --------------------------------------------------------------

def opening_rows(source: Dataset | MarketView) -> np.ndarray:
    """Triplets (ouverture ES, ouverture VIX, volume ES de la veille) connus à l'ouverture

    Pour une vue, le dernier triplet est celui du jour de décision.
    """
    if isinstance(source, MarketView):
        past = source.past
        today = np.array([[source.es_open, source.vix_open, source.prev_volume]])
        return np.vstack([np.column_stack([past.es_open, past.vix_open, past.prev_volume]), today])
    cols = source.columns
    return np.column_stack([cols.es_open, cols.vix_open, cols.prev_volume])


def build_lstm_features(source: Dataset | MarketView | np.ndarray, t: int | None = None, seq_len: int = 20,
                        zscore: ZScore | None = None) -> np.ndarray:
    """Matrice seq_len×3 des jours t-seq_len+1 … t, centrée-réduite

    La ligne du jour t contient le volume de t-1 (jamais celui de t).

    :param source: Dataset, vue d'ouverture ou triplets déjà extraits
    :param t: Index du jour, par défaut le jour de la vue
    :param seq_len: Longueur de séquence, par défaut 20
    :param zscore: Normalisation issue de l'entraînement, par défaut estimée sur les lignes ≤ t
    :return: np.ndarray
    """
    rows = source if isinstance(source, np.ndarray) else opening_rows(source)
    if t is None:
        t = len(rows) - 1
    if t < seq_len - 1 or t >= len(rows):
        raise ValueError(f"historique insuffisant pour le jour {t} (séquence de {seq_len})")
    zscore = zscore or ZScore.fit(rows[:t + 1])
    return zscore.apply(rows[t - seq_len + 1:t + 1])

# Variables d'arbres ----------------------------------------------------------

def tree_feature_count(lookback: int, include_volume: bool = True) -> int:
    return (9 if include_volume else 8) * lookback + 2


def build_tree_features(source: Dataset | MarketColumns, t: int, lookback: int = 5, *,
                        es_open: float | None = None, vix_open: float | None = None,
                        include_volume: bool = True, raw_prices: bool = False) -> np.ndarray:
    """Bloc retardé ES OHLCV / VIX OHLC des jours t-L … t-1 et ouvertures du jour t

    Prix en log-ratio à l'ouverture du jour t (ES ou VIX), volumes en log-ratio à leur moyenne
    sur les L jours, ouvertures du jour t en log-ratio à la clôture de la veille.

    :param source: Dataset ou colonnes contenant au moins les séances t-L … t-1
    :param t: Index du jour de décision
    :param lookback: L, par défaut 5
    :param es_open: Ouverture ES du jour t, par défaut lue dans source
    :param vix_open: Ouverture VIX du jour t, par défaut lue dans source
    :param include_volume: Inclure les volumes (dimension 9L+2, sinon 8L+2)
    :param raw_prices: Niveaux bruts au lieu des log-ratios
    :return: np.ndarray
    """
    cols = source.columns if isinstance(source, Dataset) else source
    if t < lookback or t > len(cols) or (t == len(cols) and (es_open is None or vix_open is None)):
        raise ValueError(f"historique insuffisant pour le jour {t} (L={lookback})")
    es_open = float(cols.es_open[t]) if es_open is None else es_open
    vix_open = float(cols.vix_open[t]) if vix_open is None else vix_open
    block = slice(t - lookback, t)
    es = np.column_stack([cols.es_open[block], cols.es_high[block], cols.es_low[block], cols.es_close[block]])
    vix = np.column_stack([cols.vix_open[block], cols.vix_high[block], cols.vix_low[block], cols.vix_close[block]])
    if es_open <= 0 or vix_open <= 0 or np.any(es <= 0) or np.any(vix <= 0):
        raise ValueError(f"prix non positif autour du jour {t}")
    volume = cols.es_volume[block]

    if raw_prices:
        parts = [es, volume[:, None], vix] if include_volume else [es, vix]
        today = [es_open, vix_open]
    else:
        # +1 pour tolérer les séances à volume nul
        vol = np.log((volume + 1.0) / (volume.mean() + 1.0))[:, None]
        es_r, vix_r = np.log(es / es_open), np.log(vix / vix_open)
        parts = [es_r, vol, vix_r] if include_volume else [es_r, vix_r]
        today = [math.log(es_open / cols.es_close[t - 1]), math.log(vix_open / cols.vix_close[t - 1])]
    return np.concatenate([np.hstack(parts).ravel(), today])


def tree_feature_matrix(history: Dataset, indices: range | np.ndarray, lookback: int = 5, *,
                        include_volume: bool = True, raw_prices: bool = False) -> np.ndarray:
    """Empile les variables d'arbres des jours donnés (entraînement)"""
    return np.vstack([build_tree_features(history, int(t), lookback, include_volume=include_volume,
                                          raw_prices=raw_prices) for t in indices])


def view_tree_features(view: MarketView, lookback: int = 5, *, include_volume: bool = True,
                       raw_prices: bool = False) -> np.ndarray:
    """Variables d'arbres du jour de décision d'une vue"""
    return build_tree_features(view.past, view.t, lookback, es_open=view.es_open, vix_open=view.vix_open,
                               include_volume=include_volume, raw_prices=raw_prices)


def training_indices(history: Dataset, train_start: int, first_usable: int) -> np.ndarray:
    """Jours d'entraînement utilisables : [max(train_start, first_usable), len(history))"""
    return np.arange(max(train_start, first_usable), len(history))


def per_split(value: Any) -> int | str:
    """Normalise `features_per_split` lu dans la configuration ('all', 'sqrt' ou entier)"""
    if isinstance(value, str) and value.strip().isdigit():
        return int(value)
    return value

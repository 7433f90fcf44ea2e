# Configuration d'expérience : fichier dotenv à clés pointées, typé par les valeurs par défaut

import difflib
import logging
from datetime import date
from pathlib import Path
from typing import Any, Mapping

from dotenv import dotenv_values

from common.errors import ConfigError
from common.signals import StrategyRegistry

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')

CONFIG_VERSION = 1
DAILY_MODELS = ('model_a',) # Réajustés chaque jour : fenêtre de test forcée à 1

BASE_DEFAULTS : dict[str, Any] = {
    'config.version': CONFIG_VERSION,
    'name': 'experience',
    'model': 'passive',
    'benchmark': 'passive',
    'data.es_csv': '',
    'data.vix_csv': '',
    'data.rates_csv': '',
    'data.start': '',
    'data.end': '',
    'walkforward.train_window': 250,
    'walkforward.test_window': 50,
    'walkforward.workers': 1,
    'walkforward.min_train_days': 100,
    'seed': 42,
    'cost_per_side': 0.0,
    'output_dir': '',
    'report.hist_bin_width': 0.0033,
    'report.save_models': False, # Modèles de la dernière fenêtre écrits dans models/
    'metrics.excess_mode': 'geometric',
    'metrics.daily_drawdown': False
}
PATH_KEYS = ('data.es_csv', 'data.vix_csv', 'data.rates_csv', 'output_dir')
TRUE_WORDS = ('true', '1', 'yes', 'oui', 'on')
FALSE_WORDS = ('false', '0', 'no', 'non', 'off')

# Typage -----------------------------------------------------------------------

def coerce(key: str, raw: str, default: Any) -> Any:
    """Convertit une valeur brute dans le type de sa valeur par défaut

    :param key: Clé (pour le message d'erreur)
    :param raw: Valeur lue dans le fichier
    :param default: Valeur par défaut de la clé
    :return: Valeur typée
    :raises ConfigError: Si la conversion échoue
    """
    text = raw.strip()
    try:
        if isinstance(default, bool):
            if text.lower() in TRUE_WORDS:
                return True
            if text.lower() in FALSE_WORDS:
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"valeur invalide pour '{key}' : {raw!r} (attendu : {type(default).__name__})")
    return text


def _parse_date(key: str, text: str) -> date | None:
    if not text:
        return None
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise ConfigError(f"date invalide pour '{key}' : {text!r} (attendu AAAA-MM-JJ)")

# Configuration -----------------------------------------------------------------

class ExperimentConfig:
    """Configuration résolue d'une expérience (toutes les valeurs par défaut développées)

    :param values: Valeurs typées par clé pointée
    :param base_dir: Dossier de référence des chemins relatifs
    """
    def __init__(self, values: Mapping[str, Any], base_dir: Path | None = None):
        self.values = dict(values)
        self.base_dir = base_dir or Path('.')

    def __repr__(self) -> str:
        return f"<ExperimentConfig '{self.name}' modèle={self.model}>"

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    # ---- Accès ----

    @property
    def name(self) -> str:
        return self.values['name']

    @property
    def model(self) -> str:
        return self.values['model']

    @property
    def benchmark(self) -> str:
        return self.values['benchmark']

    @property
    def seed(self) -> int:
        return self.values['seed']

    @property
    def cost_per_side(self) -> float:
        return self.values['cost_per_side']

    @property
    def train_window(self) -> int:
        return self.values['walkforward.train_window']

    @property
    def test_window(self) -> int:
        return self.values['walkforward.test_window']

    @property
    def start(self) -> date | None:
        return _parse_date('data.start', self.values['data.start'])

    @property
    def end(self) -> date | None:
        return _parse_date('data.end', self.values['data.end'])

    def path(self, key: str) -> Path:
        """Chemin résolu par rapport au dossier du fichier de configuration"""
        value = Path(self.values[key])
        return value if value.is_absolute() else self.base_dir / value

    @property
    def output_dir(self) -> Path:
        return self.path('output_dir')

    def strategy_params(self) -> dict[str, Any]:
        """Hyperparamètres (clés pointées) transmis aux stratégies"""
        return {k: v for k, v in self.values.items() if k.split('.')[0] not in ('data', 'walkforward', 'report', 'metrics', 'config')}

    def resolved(self) -> dict[str, Any]:
        """Configuration complète pour le manifeste (chemins tels qu'écrits)"""
        return dict(sorted(self.values.items()))

    # ---- Modification ----

    def override(self, **changes: Any) -> 'ExperimentConfig':
        """Copie avec des valeurs remplacées (options de la ligne de commande)"""
        values = dict(self.values)
        for key, value in changes.items():
            if value is not None:
                values[key] = value
        return ExperimentConfig(values, self.base_dir)


def known_defaults(registry: StrategyRegistry) -> dict[str, Any]:
    return {**BASE_DEFAULTS, **registry.defaults()}


def read_raw(path: str | Path) -> dict[str, str]:
    """Lit les paires clé=valeur brutes du fichier"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"fichier de configuration introuvable : {path}")
    raw = dotenv_values(path)
    empty = [k for k, v in raw.items() if v is None]
    if empty:
        raise ConfigError(f"clé sans valeur dans {path} : {', '.join(empty)}")
    return {k: v for k, v in raw.items() if v is not None}


def build_config(raw: Mapping[str, str], registry: StrategyRegistry, *, base_dir: Path | None = None) -> ExperimentConfig:
    """Valide et type les valeurs brutes

    :param raw: Paires clé=valeur
    :param registry: Stratégies connues (clés d'hyperparamètres et identifiants de modèles)
    :param base_dir: Dossier de référence des chemins relatifs
    :return: ExperimentConfig
    :raises ConfigError: Clé inconnue, valeur mal typée, modèle non reconnu ou version non supportée
    """
    defaults = known_defaults(registry)
    values = dict(defaults)
    for key, text in raw.items():
        if key not in defaults:
            close = difflib.get_close_matches(key, defaults.keys(), n=1)
            hint = f" (vouliez-vous dire '{close[0]}' ?)" if close else ''
            raise ConfigError(f"clé inconnue : '{key}'{hint}")
        values[key] = coerce(key, text, defaults[key])

    if values['config.version'] != CONFIG_VERSION:
        raise ConfigError(f"version de configuration non supportée : {values['config.version']} (attendue : {CONFIG_VERSION})")
    for key in ('model', 'benchmark'):
        if values[key] not in registry:
            raise ConfigError(f"modèle inconnu pour '{key}' : '{values[key]}' (disponibles : {', '.join(sorted(registry.ids()))})")
    for key in ('data.es_csv', 'data.vix_csv', 'data.rates_csv'):
        if not values[key]:
            raise ConfigError(f"chemin manquant : '{key}'")
    for key in ('walkforward.train_window', 'walkforward.test_window', 'walkforward.workers'):
        if values[key] < 1:
            raise ConfigError(f"'{key}' doit être ≥ 1 ({values[key]})")
    if values['walkforward.min_train_days'] < 1:
        raise ConfigError("'walkforward.min_train_days' doit être ≥ 1")
    if values['seed'] < 0:
        raise ConfigError(f"la graine doit être positive ({values['seed']})")
    if values['cost_per_side'] < 0:
        raise ConfigError(f"'cost_per_side' doit être ≥ 0 ({values['cost_per_side']})")
    if not values['report.hist_bin_width'] > 0:
        raise ConfigError("'report.hist_bin_width' doit être > 0")
    if values['metrics.excess_mode'] not in ('arithmetic', 'geometric'):
        raise ConfigError(f"'metrics.excess_mode' inconnu : {values['metrics.excess_mode']!r} (arithmetic ou geometric)")
    _parse_date('data.start', values['data.start'])
    _parse_date('data.end', values['data.end'])

    if values['model'] in DAILY_MODELS and values['walkforward.test_window'] != 1:
        logger.warning(f"'{values['model']}' se réajuste chaque jour : walkforward.test_window forcé de {values['walkforward.test_window']} à 1")
        values['walkforward.test_window'] = 1
    if not values['output_dir']:
        values['output_dir'] = str(Path('runs') / values['name'])
    return ExperimentConfig(values, base_dir)


def load_config(path: str | Path, registry: StrategyRegistry) -> ExperimentConfig:
    """Charge un fichier de configuration dotenv"""
    path = Path(path)
    config = build_config(read_raw(path), registry, base_dir=path.resolve().parent)
    logger.info(f"Configuration '{config.name}' chargée depuis {path} (modèle {config.model})")
    return config

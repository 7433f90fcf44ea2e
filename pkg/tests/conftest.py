"""Fixtures partagées : données synthétiques, écriture de CSV temporaires, séries mensuelles de référence."""

import math
from datetime import date
from pathlib import Path

import numpy as np
import pytest

from common.dataio import Bar, Dataset, RatePoint, align_sessions, load_dataset, make_trading_day, parse_rates_csv
from common.metrics import MonthlyReturns, monthly_risk_free, read_monthly_csv
from common.signals import StrategyRegistry, load_strategies
from common.synthetic import SynthConfig, write_synthetic

FIXTURES = Path(__file__).parent / "fixtures"
STRATEGY_SERIES = ("passive", "lstm", "gbt", "rf", "model_a")

# Hyperparamètres réduits pour garder les tests rapides
FAST_PARAMS = {
    "passive": {},
    "lstm": {"lstm.hidden_dim": 4, "lstm.epochs": 5},
    "gbt": {"gbt.n_rounds": 5},
    "rf": {"rf.n_trees": 5, "rf.max_depth": 4},
    "model_a": {"model_a.epochs": 20, "model_a.warm_epochs": 5, "model_a.replay_days": 10},
}


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def write_config(path: Path, values: dict[str, object]) -> Path:
    """Écrit un fichier de configuration clé=valeur."""
    lines = ["# configuration de test"] + [f"{k}={v}" for k, v in values.items()]
    return write_text(path, "\n".join(lines) + "\n")


def fixture_monthly(name: str) -> MonthlyReturns:
    return read_monthly_csv((FIXTURES / f"{name}.csv").read_text(encoding="utf-8"), source=name)


def fixture_rf(periods) -> np.ndarray:
    rates = parse_rates_csv((FIXTURES / "tbill_3m.csv").read_text(encoding="utf-8"))
    return monthly_risk_free([r.date for r in rates], [r.annual_yield for r in rates], periods)


def _random_bar(day: date, open_: float, rng: np.random.Generator, volume: int | None = None) -> Bar:
    close = open_ * math.exp(rng.normal(0.0, 0.03))
    high = max(open_, close) * (1.0 + abs(rng.normal(0.0, 0.01)))
    low = min(open_, close) * (1.0 - abs(rng.normal(0.0, 0.01)))
    return Bar(day, open_, high, low, close, volume)


def mutate_from(dataset: Dataset, cut: int, rng: np.random.Generator) -> Dataset:
    """Copie du dataset dont tout ce qui suit l'ouverture du jour `cut` est tiré au hasard

    Le jour `cut` garde ses ouvertures ES / VIX et son volume de la veille ; clôture, extrêmes et volume changent.
    """
    days = list(dataset.days[:cut])
    prev_volume = dataset[cut].prev_volume
    for t in range(cut, len(dataset)):
        day = dataset[t]
        drift = 0.0 if t == cut else 1.0
        es = _random_bar(day.date, day.es.open * math.exp(drift * rng.normal(0.0, 0.02)), rng,
                         volume=int(rng.integers(1, 5_000_000)))
        vix = _random_bar(day.date, day.vix.open * math.exp(drift * rng.normal(0.0, 0.05)), rng)
        days.append(make_trading_day(es, vix, day.rf_annual, prev_volume))
        prev_volume = es.volume
    return Dataset(tuple(days), dataset.sources)


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------

@pytest.fixture
def tmp_csv(tmp_path: Path):
    """Fabrique de fichiers texte temporaires : tmp_csv('es.csv', contenu) → chemin."""
    def make(name: str, text: str) -> Path:
        return write_text(tmp_path / name, text)
    return make


@pytest.fixture(scope="session")
def published() -> dict[str, MonthlyReturns]:
    """Les cinq séries mensuelles publiées, 2018-2023, en fractions."""
    return {name: fixture_monthly(name) for name in STRATEGY_SERIES}


@pytest.fixture(scope="session")
def tbill_rf(published) -> np.ndarray:
    """Taux sans risque mensuels alignés sur les 72 mois de référence."""
    return fixture_rf(published["passive"].periods)


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory) -> Path:
    """Triplet ES / VIX / taux synthétique : 400 séances après alignement."""
    out = tmp_path_factory.mktemp("synth")
    write_synthetic(out, SynthConfig(n_days=401, seed=3))
    return out


@pytest.fixture(scope="session")
def synth_dataset(synth_dir: Path) -> Dataset:
    return load_dataset(synth_dir / "es.csv", synth_dir / "vix.csv", synth_dir / "rates.csv")


@pytest.fixture(scope="session")
def registry() -> StrategyRegistry:
    return load_strategies()


@pytest.fixture
def small_dataset() -> Dataset:
    """Six séances construites à la main (la première barre ES sert de veille)."""
    es = [
        Bar(date(2024, 1, 2), 100.0, 101.0, 99.0, 100.0, 1000),
        Bar(date(2024, 1, 3), 100.0, 102.0, 99.5, 101.0, 1100),
        Bar(date(2024, 1, 4), 101.0, 101.5, 99.0, 99.0, 900),
        Bar(date(2024, 1, 5), 99.0, 100.0, 98.0, 99.0, 1200),
        Bar(date(2024, 1, 8), 99.5, 103.0, 99.5, 102.0, 1300),
        Bar(date(2024, 1, 9), 102.0, 102.5, 100.5, 101.0, 1000),
        Bar(date(2024, 1, 10), 101.0, 102.0, 100.0, 101.5, 1250),
    ]
    vix = [Bar(b.date, 15.0 + i, 16.0 + i, 14.0 + i, 15.5 + i) for i, b in enumerate(es)]
    rates = [RatePoint(date(2024, 1, 1), 0.0525)]
    return align_sessions(es, vix, rates)

# Orchestration walk-forward, rendements de stratégie et courbe de capital

import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from typing import Any, Callable, Sequence, TextIO

import numpy as np
import pandas as pd

from common.dataio import Dataset
from common.errors import DataError, ModelError
from common.signals import Decision, Strategy

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')

SIGNAL_COLUMNS = ['date', 'direction', 'scale', 'daytime_return', 'label', 'strategy_return', 'window']
EQUITY_COLUMNS = ['date', 'value']

# Plan ------------------------------------------------------------------------

@dataclass(frozen=True)
class Window:
    index: int
    train: range
    test: range


@dataclass(frozen=True)
class WalkForwardPlan:
    train_window: int
    test_window: int
    windows: tuple[Window, ...]

    @property
    def stride(self) -> int:
        return self.test_window

    def __len__(self) -> int:
        return len(self.windows)

    def seeds(self, master_seed: int) -> list[int]:
        """Graine de chaque fenêtre : graine maîtresse ^ index"""
        return [master_seed ^ w.index for w in self.windows]


def plan_windows(n_days: int, train_window: int, test_window: int) -> WalkForwardPlan:
    """Découpe [0, n_days) en fenêtres glissantes entraînement / test

    Le premier jour de test est train_window, les fenêtres avancent de test_window ;
    une dernière fenêtre de test plus courte est conservée.

    :param n_days: Nombre de séances
    :param train_window: Jours d'entraînement par fenêtre
    :param test_window: Jours de test par fenêtre
    :return: WalkForwardPlan
    """
    if train_window < 1 or test_window < 1:
        raise ValueError("fenêtres de taille nulle")
    if n_days <= train_window:
        raise ValueError(f"{n_days} séances pour une fenêtre d'entraînement de {train_window}")
    windows = []
    for k, start in enumerate(range(train_window, n_days, test_window)):
        windows.append(Window(index=k, train=range(start - train_window, start), test=range(start, min(start + test_window, n_days))))
    return WalkForwardPlan(train_window=train_window, test_window=test_window, windows=tuple(windows))

# Séries de signaux -----------------------------------------------------------

@dataclass(frozen=True)
class SignalSeries:
    """Décisions concaténées des fenêtres de test, avec labels et rendements réalisés"""
    dates: np.ndarray
    directions: np.ndarray
    scales: np.ndarray
    daytime_returns: np.ndarray
    labels: np.ndarray
    strategy_returns: np.ndarray
    windows: np.ndarray
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.dates)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SignalSeries):
            return NotImplemented
        return self.to_frame().equals(other.to_frame())

    def predictions(self) -> np.ndarray:
        """Sens prédits, 0 pour les jours fermés"""
        return np.where(self.scales > 0, self.directions, 0)

    def daily_returns(self) -> pd.Series:
        """Rendements de la stratégie indexés par date"""
        return pd.Series(self.strategy_returns, index=pd.DatetimeIndex(self.dates), name='strategy_return')

    def market_returns(self) -> pd.Series:
        """Rendements ouverture → clôture du marché sur les mêmes dates"""
        return pd.Series(self.daytime_returns, index=pd.DatetimeIndex(self.dates), name='daytime_return')

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({
            'date': pd.DatetimeIndex(self.dates).strftime('%Y-%m-%d'),
            'direction': self.directions.astype(int),
            'scale': self.scales.astype(float),
            'daytime_return': self.daytime_returns.astype(float),
            'label': self.labels.astype(int),
            'strategy_return': self.strategy_returns.astype(float),
            'window': self.windows.astype(int)
        })
        for name, values in self.diagnostics.items():
            frame[name] = values.astype(float)
        return frame


def strategy_returns(directions: np.ndarray, scales: np.ndarray, daytime_returns: np.ndarray, cost_per_side: float = 0.0) -> np.ndarray:
    """sens × échelle × rendement, moins deux côtés de coût les jours où la position est ouverte"""
    if cost_per_side < 0:
        raise ValueError(f"coût négatif ({cost_per_side})")
    gross = np.asarray(directions) * np.asarray(scales, dtype=float) * np.asarray(daytime_returns, dtype=float)
    return gross - np.where(np.asarray(scales) > 0, 2.0 * cost_per_side, 0.0)


def _assemble(dataset: Dataset, decisions: list[tuple[int, int, Decision]], diagnostics: Sequence[str],
              cost_per_side: float) -> SignalSeries:
    cols = dataset.columns
    days = np.array([t for t, _, _ in decisions], dtype=np.int64)
    directions = np.array([d.direction for _, _, d in decisions], dtype=np.int64)
    scales = np.array([d.scale for _, _, d in decisions], dtype=float)
    diag = {name: np.array([float(d.diagnostics.get(name, np.nan)) for _, _, d in decisions]) for name in diagnostics}
    return SignalSeries(
        dates=cols.dates[days],
        directions=directions,
        scales=scales,
        daytime_returns=cols.daytime_return[days].astype(float),
        labels=cols.label[days].astype(np.int64),
        strategy_returns=strategy_returns(directions, scales, cols.daytime_return[days], cost_per_side),
        windows=np.array([k for _, k, _ in decisions], dtype=np.int64),
        diagnostics=diag
    )

# Walk-forward ----------------------------------------------------------------

class _WindowRunner:
    """Ajuste puis décide une fenêtre ; toute exception porte l'index de la fenêtre"""
    def __init__(self, strategy: Strategy, dataset: Dataset, master_seed: int, min_train_days: int, n_windows: int,
                 on_fit: Callable[[int, Any], None] | None = None):
        self.strategy = strategy
        self.dataset = dataset
        self.master_seed = master_seed
        self.min_train_days = min_train_days
        self.n_windows = n_windows
        self.on_fit = on_fit

    def __call__(self, window: Window, prior_state: Any = None) -> tuple[Any, list[tuple[int, int, Decision]]]:
        k = window.index
        usable = window.test.start - max(window.train.start, self.strategy.first_usable())
        if usable < self.min_train_days:
            raise ModelError(f"{usable} jours d'entraînement utilisables (minimum {self.min_train_days})", window=k)
        try:
            history = self.dataset.head(window.test.start)
            state = self.strategy.fit(history, window.train.start, self.master_seed ^ k, prior_state)
        except Exception as e:
            raise ModelError(f"échec de l'ajustement : {type(e).__name__}: {e}", window=k) from e
        if self.on_fit is not None:
            self.on_fit(k, state)
        try:
            decisions = [(t, k, self.strategy.decide(state, self.dataset.view_at(t))) for t in window.test]
        except Exception as e:
            raise ModelError(f"échec de la décision : {type(e).__name__}: {e}", window=k) from e
        if k == self.n_windows - 1 or (k + 1) % max(1, self.n_windows // 10) == 0:
            logger.info(f"Fenêtre {k + 1}/{self.n_windows} ajustée ({self.strategy.id})")
        else:
            logger.debug(f"Fenêtre {k + 1}/{self.n_windows} ajustée ({self.strategy.id})")
        return state, decisions


def run_walkforward(strategy: Strategy, dataset: Dataset, plan: WalkForwardPlan, master_seed: int, *,
                    cost_per_side: float = 0.0, workers: int = 1, min_train_days: int = 0,
                    on_fit: Callable[[int, Any], None] | None = None) -> SignalSeries:
    """Exécute le plan : ajustement par fenêtre puis décision de chaque jour de test

    Les stratégies sans état peuvent répartir leurs fenêtres sur plusieurs threads ; les stratégies
    à état reçoivent l'état de la fenêtre précédente et s'exécutent dans l'ordre.

    :param strategy: Stratégie instanciée
    :param dataset: Séances
    :param plan: Plan de fenêtres
    :param master_seed: Graine maîtresse
    :param cost_per_side: Coût fractionnaire par côté, par défaut 0
    :param workers: Nombre de threads, par défaut 1
    :param min_train_days: Minimum de jours d'entraînement utilisables par fenêtre
    :param on_fit: Appelée avec (index de fenêtre, état) après chaque ajustement réussi, par défaut None
    :return: SignalSeries
    :raises ModelError: Si une fenêtre échoue (index de la fenêtre dans le message)
    """
    if plan.windows and plan.windows[-1].test.stop > len(dataset):
        raise ValueError(f"plan de {plan.windows[-1].test.stop} jours pour un dataset de {len(dataset)}")
    dataset.columns # colonnes calculées une fois avant la répartition sur les threads
    runner = _WindowRunner(strategy, dataset, master_seed, min_train_days, len(plan), on_fit)
    decisions : list[tuple[int, int, Decision]] = []
    if strategy.stateful:
        state = None
        for window in plan.windows:
            state, window_decisions = runner(window, state)
            decisions.extend(window_decisions)
    elif workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for _, window_decisions in pool.map(runner, plan.windows):
                decisions.extend(window_decisions)
    else:
        for window in plan.windows:
            decisions.extend(runner(window)[1])
    logger.info(f"{len(decisions)} décisions générées sur {len(plan)} fenêtres ({strategy.id})")
    return _assemble(dataset, decisions, strategy.diagnostics, cost_per_side)

# Courbe de capital -----------------------------------------------------------

@dataclass(frozen=True)
class EquityCurve:
    dates: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    @property
    def final(self) -> float:
        return float(self.values[-1]) if len(self.values) else 1.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'date': pd.DatetimeIndex(self.dates).strftime('%Y-%m-%d'), 'value': self.values})


def equity_curve(returns: pd.Series | Sequence[float] | np.ndarray, dates: Sequence[date] | np.ndarray | None = None) -> EquityCurve:
    """Capital composé quotidiennement à partir de 1

    :param returns: Rendements journaliers (série datée ou tableau)
    :param dates: Dates, si returns n'est pas une série datée
    :return: EquityCurve
    :raises ValueError: Si un rendement est ≤ -100%
    """
    if isinstance(returns, pd.Series):
        dates, r = returns.index.to_numpy(), returns.to_numpy(dtype=float)
    else:
        r = np.asarray(returns, dtype=float)
    dates = np.asarray(dates if dates is not None else np.arange(len(r)))
    if len(dates) != len(r):
        raise ValueError("dates et rendements de longueurs différentes")
    bad = np.nonzero(r <= -1)[0]
    if len(bad):
        raise ValueError(f"rendement ≤ -100% au jour {dates[bad[0]]} ({r[bad[0]]})")
    return EquityCurve(dates=dates, values=np.cumprod(1.0 + r))

# CSV -------------------------------------------------------------------------

def write_signals_csv(series: SignalSeries) -> str:
    frame = series.to_frame()
    for name in ['scale', 'daytime_return', 'strategy_return', *series.diagnostics]:
        frame[name] = [repr(float(v)) for v in frame[name]]
    return frame.to_csv(index=False, lineterminator='\n')


def read_signals_csv(text: str | TextIO, *, source: str | None = None) -> SignalSeries:
    """Relit un signals.csv écrit par write_signals_csv"""
    stream = io.StringIO(text) if isinstance(text, str) else text
    try:
        frame = pd.read_csv(stream, dtype=str, keep_default_na=False)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise DataError(f"signals.csv illisible ({e})", path=source)
    missing = [c for c in SIGNAL_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(f"colonnes manquantes : {', '.join(missing)}", path=source, line=1)
    try:
        return SignalSeries(
            dates=pd.to_datetime(frame['date'], format='%Y-%m-%d').to_numpy(dtype='datetime64[D]'),
            directions=frame['direction'].astype(np.int64).to_numpy(),
            scales=frame['scale'].astype(float).to_numpy(),
            daytime_returns=frame['daytime_return'].astype(float).to_numpy(),
            labels=frame['label'].astype(np.int64).to_numpy(),
            strategy_returns=frame['strategy_return'].astype(float).to_numpy(),
            windows=frame['window'].astype(np.int64).to_numpy(),
            diagnostics={c: frame[c].replace('', 'nan').astype(float).to_numpy() for c in frame.columns if c not in SIGNAL_COLUMNS}
        )
    except ValueError as e:
        raise DataError(f"valeur invalide ({e})", path=source)


def write_equity_csv(curve: EquityCurve) -> str:
    frame = curve.to_frame()
    frame['value'] = [repr(float(v)) for v in frame['value']]
    return frame.to_csv(index=False, lineterminator='\n')


def read_equity_csv(text: str | TextIO, *, source: str | None = None) -> EquityCurve:
    stream = io.StringIO(text) if isinstance(text, str) else text
    try:
        frame = pd.read_csv(stream, dtype=str, keep_default_na=False)
        if frame.columns.tolist() != EQUITY_COLUMNS:
            raise DataError(f"en-tête invalide (attendu {','.join(EQUITY_COLUMNS)})", path=source, line=1)
        return EquityCurve(dates=pd.to_datetime(frame['date'], format='%Y-%m-%d').to_numpy(dtype='datetime64[D]'),
                           values=frame['value'].astype(float).to_numpy())
    except (pd.errors.EmptyDataError, pd.errors.ParserError, ValueError) as e:
        raise DataError(f"equity.csv illisible ({e})", path=source)

# Statistiques de classification et de performance (précision, moments, CAPM, ratios, drawdown, exposition)

import io
import logging
import math
from dataclasses import asdict, dataclass
from datetime import date
from typing import Iterable, Sequence, TextIO

import numpy as np
import pandas as pd
from scipy import stats

from common.errors import DataError

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')

MONTHS_PER_YEAR = 12
EXCESS_MODES = ('arithmetic', 'geometric')
MONTHLY_COLUMNS = ['year', 'month', 'percent']

# Types -----------------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ClassificationRates:
    accuracy: float
    ppv: float | None
    npv: float | None


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    std: float
    min: float
    max: float
    skew: float | None
    kurtosis: float | None


@dataclass(frozen=True)
class Annualized:
    annualized_return: float
    annualized_vol: float


@dataclass(frozen=True)
class Capm:
    alpha_annualized: float
    beta: float


@dataclass(frozen=True)
class RiskRatios:
    sharpe: float | None
    sortino: float | None
    information_ratio: float | None


@dataclass(frozen=True)
class DrawdownCalmar:
    max_drawdown: float
    calmar: float | None


@dataclass(frozen=True)
class MonthWinLoss:
    avg_return: float
    avg_gain: float | None
    avg_loss: float | None
    pct_winning: float
    pct_losing: float


@dataclass(frozen=True)
class ExposureStats:
    pct_long_days: float
    pct_short_days: float
    long_contribution: float | None
    short_contribution: float | None


@dataclass(frozen=True)
class PerfReport:
    """Ensemble des indicateurs mensuels d'une stratégie face à son benchmark (fractions, pas des %)"""
    annualized_return: float
    annualized_vol: float
    alpha_annualized: float | None
    beta: float | None
    sharpe: float | None
    sortino: float | None
    calmar: float | None
    information_ratio: float | None
    max_drawdown: float
    avg_monthly_return: float
    avg_monthly_gain: float | None
    avg_monthly_loss: float | None
    pct_winning_months: float
    pct_losing_months: float

    def to_row(self) -> dict[str, float | None]:
        """Ligne CSV à plat"""
        return asdict(self)


class MonthlyReturns:
    """Rendements mensuels datés (année, mois), mois strictement croissants"""
    def __init__(self, periods: Iterable[tuple[int, int]], values: Iterable[float]):
        self.periods : tuple[tuple[int, int], ...] = tuple((int(y), int(m)) for y, m in periods)
        self.values = np.asarray(list(values), dtype=float)
        if len(self.periods) != len(self.values):
            raise ValueError(f"{len(self.periods)} mois pour {len(self.values)} valeurs")
        for (y, m) in self.periods:
            if not 1 <= m <= 12:
                raise ValueError(f"mois invalide {y}-{m}")
        if any(b <= a for a, b in zip(self.periods, self.periods[1:])):
            raise ValueError("les mois doivent être strictement croissants")
        self.values.flags.writeable = False

    def __repr__(self) -> str:
        if not self.periods:
            return '<MonthlyReturns vide>'
        (y0, m0), (y1, m1) = self.periods[0], self.periods[-1]
        return f'<MonthlyReturns {y0}-{m0:02d} → {y1}-{m1:02d} n={len(self)}>'

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MonthlyReturns):
            return NotImplemented
        return self.periods == other.periods and np.array_equal(self.values, other.values)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'year': [p[0] for p in self.periods], 'month': [p[1] for p in self.periods],
                             'return': self.values})

    def by_year(self) -> dict[int, dict[int, float]]:
        """Regroupe les mois par année (tableau des profits mensuels)"""
        grid : dict[int, dict[int, float]] = {}
        for (y, m), v in zip(self.periods, self.values):
            grid.setdefault(y, {})[m] = float(v)
        return grid

# Classification --------------------------------------------------------------

def confusion_counts(predictions: Sequence[int] | np.ndarray, labels: Sequence[int] | np.ndarray,
                     scales: Sequence[float] | np.ndarray | None = None) -> ConfusionCounts:
    """Matrice de confusion des prédictions ±1 contre les labels observés

    Les jours sans position (prédiction 0 ou échelle 0) sont exclus du décompte.

    :param predictions: Prédictions +1 / -1 (0 = abstention)
    :param labels: Labels observés +1 / -1
    :param scales: Échelles d'exposition, par défaut None (toutes actives)
    :return: ConfusionCounts
    """
    pred = np.asarray(predictions)
    lab = np.asarray(labels)
    if pred.shape != lab.shape or (scales is not None and np.shape(scales) != pred.shape):
        raise ValueError(f"séries de longueurs différentes ({pred.shape}, {lab.shape})")
    active = pred != 0
    if scales is not None:
        active &= np.asarray(scales) > 0
    pred, lab = pred[active], lab[active]
    return ConfusionCounts(
        tp=int(np.sum((pred == 1) & (lab == 1))),
        fp=int(np.sum((pred == 1) & (lab == -1))),
        tn=int(np.sum((pred == -1) & (lab == -1))),
        fn=int(np.sum((pred == -1) & (lab == 1)))
    )


def classification_rates(c: ConfusionCounts) -> ClassificationRates:
    """Précision globale, valeur prédictive positive et négative (None si indéfinie)"""
    if c.total <= 0:
        raise ValueError("aucun jour compté")
    return ClassificationRates(
        accuracy=(c.tp + c.tn) / c.total,
        ppv=c.tp / (c.tp + c.fp) if c.tp + c.fp else None,
        npv=c.tn / (c.tn + c.fn) if c.tn + c.fn else None
    )

# Statistiques journalières ----------------------------------------------------

def summary_stats(daily: Sequence[float] | np.ndarray | pd.Series) -> SummaryStats:
    """Moments de population des rendements journaliers (kurtosis de Pearson, normale = 3)

    :param daily: Rendements journaliers (au moins 2)
    :return: SummaryStats, skew et kurtosis à None si la variance est nulle
    """
    x = np.asarray(daily, dtype=float)
    if len(x) < 2:
        raise ValueError("au moins 2 observations requises")
    if np.ptp(x) == 0:
        return SummaryStats(mean=float(x[0]), std=0.0, min=float(x[0]), max=float(x[0]), skew=None, kurtosis=None)
    return SummaryStats(
        mean=float(np.mean(x)),
        std=float(np.std(x, ddof=0)),
        min=float(np.min(x)),
        max=float(np.max(x)),
        skew=float(stats.skew(x, bias=True)),
        kurtosis=float(stats.kurtosis(x, fisher=False, bias=True))
    )


def histogram(daily: Sequence[float] | np.ndarray, bin_width: float) -> list[tuple[float, int]]:
    """Histogramme à pas fixe, une classe centrée sur 0

    La classe k couvre [(k - ½)·w, (k + ½)·w). Les classes vides entre min et max sont incluses.

    :param daily: Rendements journaliers
    :param bin_width: Largeur de classe (fraction, 0.0033 = 0.33%)
    :return: Liste de (borne inférieure, effectif)
    """
    if not bin_width > 0:
        raise ValueError(f"largeur de classe non positive ({bin_width})")
    x = np.asarray(daily, dtype=float)
    if not len(x):
        return []
    k = np.floor(x / bin_width + 0.5).astype(np.int64)
    lo = int(k.min())
    counts = np.bincount(k - lo)
    return [((lo + i - 0.5) * bin_width, int(n)) for i, n in enumerate(counts)]


def exposure_stats(directions: Sequence[int] | np.ndarray, scales: Sequence[float] | np.ndarray,
                   strategy_returns: Sequence[float] | np.ndarray) -> ExposureStats:
    """Exposition longue / courte et contribution de chaque sens au profit (sommes simples)

    :param directions: Sens +1 / -1 de chaque décision
    :param scales: Échelle d'exposition de chaque décision (0 = fermé)
    :param strategy_returns: Rendements réalisés de la stratégie
    :return: ExposureStats, contributions à None si le profit total est nul
    """
    d = np.asarray(directions)
    s = np.asarray(scales, dtype=float)
    r = np.asarray(strategy_returns, dtype=float)
    if not d.shape == s.shape == r.shape:
        raise ValueError("séries de longueurs différentes")
    n = len(d)
    if not n:
        raise ValueError("série vide")
    long_days = (d == 1) & (s > 0)
    short_days = (d == -1) & (s > 0)
    total = float(np.sum(r))
    return ExposureStats(
        pct_long_days=float(np.sum(long_days)) / n,
        pct_short_days=float(np.sum(short_days)) / n,
        long_contribution=float(np.sum(r[long_days])) / total if total != 0 else None,
        short_contribution=float(np.sum(r[short_days])) / total if total != 0 else None
    )


def max_drawdown_daily(daily: Sequence[float] | np.ndarray) -> float:
    """Drawdown maximal sur la courbe journalière composée (≤ 0)"""
    return _max_drawdown(np.asarray(daily, dtype=float))

# Passage au mensuel ------------------------------------------------------------

def compound_monthly(daily: pd.Series) -> MonthlyReturns:
    """Compose les rendements journaliers par mois civil : ∏(1 + r) - 1

    :param daily: Série indexée par date
    :return: MonthlyReturns (les mois sans séance sont absents)
    """
    if not len(daily):
        return MonthlyReturns([], [])
    index = pd.DatetimeIndex(daily.index)
    grouped = (1.0 + daily.astype(float)).groupby([index.year, index.month], sort=True).prod() - 1.0
    return MonthlyReturns(grouped.index.tolist(), grouped.to_numpy())


def monthly_risk_free(dates: Sequence[date] | np.ndarray, annual_yields: Sequence[float] | np.ndarray,
                      periods: Sequence[tuple[int, int]]) -> np.ndarray:
    """Taux sans risque mensuel rf_m = y / 12, y étant la moyenne des taux observés dans le mois

    Un mois sans observation reprend le dernier taux connu.

    :param dates: Dates des observations de taux
    :param annual_yields: Taux annuels (fractions)
    :param periods: Mois (année, mois) demandés, croissants
    :return: Tableau aligné sur periods
    """
    if not len(dates):
        raise DataError("aucun taux sans risque disponible")
    index = pd.DatetimeIndex(pd.to_datetime(list(dates)))
    by_month = pd.Series(np.asarray(annual_yields, dtype=float), index=index).groupby([index.year, index.month]).mean()
    known = dict(zip(by_month.index.tolist(), by_month.to_numpy()))
    ordered = sorted(known)
    out = []
    for p in periods:
        p = (int(p[0]), int(p[1]))
        if p in known:
            out.append(known[p])
            continue
        earlier = [k for k in ordered if k < p]
        if not earlier:
            raise DataError(f"aucun taux connu pour {p[0]}-{p[1]:02d} ni avant")
        out.append(known[earlier[-1]])
    return np.asarray(out, dtype=float) / MONTHS_PER_YEAR

# Indicateurs mensuels -----------------------------------------------------------

def _values(monthly: MonthlyReturns | Sequence[float] | np.ndarray) -> np.ndarray:
    return monthly.values if isinstance(monthly, MonthlyReturns) else np.asarray(monthly, dtype=float)


def annualized_return(monthly: MonthlyReturns | Sequence[float] | np.ndarray) -> float:
    """Rendement annualisé géométrique (∏(1 + r))^(12/n) - 1"""
    r = _values(monthly)
    if not len(r):
        raise ValueError("aucun mois")
    if np.any(r <= -1):
        raise ValueError("rendement mensuel ≤ -100%")
    return float(np.expm1(np.sum(np.log1p(r)) * MONTHS_PER_YEAR / len(r)))


def annualize(monthly: MonthlyReturns | Sequence[float] | np.ndarray) -> Annualized:
    """Rendement annualisé géométrique et volatilité annualisée (écart-type d'échantillon × √12)"""
    r = _values(monthly)
    if len(r) < 2:
        raise ValueError("au moins 2 mois requis")
    vol = 0.0 if np.ptp(r) == 0 else float(np.std(r, ddof=1) * math.sqrt(MONTHS_PER_YEAR))
    return Annualized(annualized_return=annualized_return(r), annualized_vol=vol)


def capm(model: MonthlyReturns | Sequence[float] | np.ndarray, benchmark: MonthlyReturns | Sequence[float] | np.ndarray,
         rf: Sequence[float] | np.ndarray) -> Capm:
    """Régression MCO des rendements excédentaires du modèle sur ceux du benchmark

    :param model: Rendements mensuels du modèle
    :param benchmark: Rendements mensuels du benchmark (mêmes mois)
    :param rf: Taux sans risque mensuels (mêmes mois)
    :return: Capm (alpha = ordonnée mensuelle × 12, beta = pente)
    """
    y = _values(model) - np.asarray(rf, dtype=float)
    x = _values(benchmark) - np.asarray(rf, dtype=float)
    if len(x) != len(y):
        raise ValueError("séries de longueurs différentes")
    if len(x) < 3:
        raise ValueError("au moins 3 mois requis")
    dx = x - x.mean()
    sxx = float(np.dot(dx, dx))
    if sxx == 0:
        raise ValueError("variance nulle des rendements excédentaires du benchmark")
    beta = float(np.dot(dx, y - y.mean())) / sxx
    alpha = float(y.mean() - beta * x.mean())
    return Capm(alpha_annualized=alpha * MONTHS_PER_YEAR, beta=beta)


def risk_ratios(monthly: MonthlyReturns | Sequence[float] | np.ndarray, rf: Sequence[float] | np.ndarray,
                benchmark: MonthlyReturns | Sequence[float] | np.ndarray, *, excess_mode: str = 'geometric') -> RiskRatios:
    """Ratios de Sharpe, de Sortino et d'information

    :param monthly: Rendements mensuels de la stratégie
    :param rf: Taux sans risque mensuels
    :param benchmark: Rendements mensuels du benchmark
    :param excess_mode: 'geometric' (rendement annualisé - taux sans risque annualisé composé) ou 'arithmetic'
        (12 × moyenne des excès mensuels), par défaut 'geometric'
    :return: RiskRatios, chaque ratio à None si son dénominateur est nul
    """
    if excess_mode not in EXCESS_MODES:
        raise ValueError(f"mode inconnu {excess_mode!r} (attendu : {', '.join(EXCESS_MODES)})")
    r = _values(monthly)
    rf = np.asarray(rf, dtype=float)
    bench = _values(benchmark)
    if not len(r) == len(rf) == len(bench):
        raise ValueError("séries de longueurs différentes")
    if len(r) < 2:
        raise ValueError("au moins 2 mois requis")

    excess = r - rf
    if excess_mode == 'geometric':
        numerator = annualized_return(r) - annualized_return(rf)
    else:
        numerator = float(np.mean(excess)) * MONTHS_PER_YEAR
    vol = annualize(r).annualized_vol
    downside = math.sqrt(float(np.mean(np.minimum(excess, 0.0) ** 2))) * math.sqrt(MONTHS_PER_YEAR)

    active = r - bench
    tracking = 0.0 if np.ptp(active) == 0 else float(np.std(active, ddof=1)) * math.sqrt(MONTHS_PER_YEAR)
    return RiskRatios(
        sharpe=numerator / vol if vol > 0 else None,
        sortino=numerator / downside if downside > 0 else None,
        information_ratio=float(np.mean(active)) * MONTHS_PER_YEAR / tracking if tracking > 0 else None
    )


def _max_drawdown(r: np.ndarray) -> float:
    if np.any(r <= -1):
        raise ValueError("rendement ≤ -100%")
    equity = np.cumprod(1.0 + r)
    peaks = np.maximum.accumulate(np.maximum(equity, 1.0))
    return float(min(0.0, np.min(equity / peaks - 1.0))) if len(r) else 0.0


def drawdown_calmar(monthly: MonthlyReturns | Sequence[float] | np.ndarray) -> DrawdownCalmar:
    """Drawdown maximal de la courbe mensuelle composée (capital initial 1) et ratio de Calmar"""
    r = _values(monthly)
    if not len(r):
        raise ValueError("au moins 1 mois requis")
    mdd = _max_drawdown(r)
    return DrawdownCalmar(max_drawdown=mdd, calmar=annualized_return(r) / abs(mdd) if mdd < 0 else None)


def month_win_loss(monthly: MonthlyReturns | Sequence[float] | np.ndarray) -> MonthWinLoss:
    """Moyennes et proportions de mois gagnants / perdants (un mois nul est perdant)"""
    r = _values(monthly)
    if not len(r):
        raise ValueError("au moins 1 mois requis")
    gains, losses = r[r > 0], r[r < 0]
    winning = len(gains) / len(r)
    return MonthWinLoss(
        avg_return=float(np.mean(r)),
        avg_gain=float(np.mean(gains)) if len(gains) else None,
        avg_loss=float(np.mean(losses)) if len(losses) else None,
        pct_winning=winning,
        pct_losing=1.0 - winning
    )


def check_aligned(*series: MonthlyReturns) -> None:
    """Vérifie que toutes les séries couvrent exactement les mêmes mois"""
    first = series[0]
    for other in series[1:]:
        if other.periods != first.periods:
            only_a = sorted(set(first.periods) - set(other.periods))
            only_b = sorted(set(other.periods) - set(first.periods))
            raise DataError(f"mois non alignés (absents du benchmark : {only_a[:5]}, absents du modèle : {only_b[:5]})")


def performance_report(model: MonthlyReturns, benchmark: MonthlyReturns, rf: Sequence[float] | np.ndarray, *,
                       excess_mode: str = 'geometric') -> PerfReport:
    """Assemble l'ensemble des indicateurs mensuels d'une stratégie face à son benchmark

    :param model: Rendements mensuels de la stratégie
    :param benchmark: Rendements mensuels du benchmark
    :param rf: Taux sans risque mensuels alignés
    :param excess_mode: Convention du numérateur des ratios (voir risk_ratios)
    :return: PerfReport
    """
    check_aligned(model, benchmark)
    if len(rf) != len(model):
        raise DataError(f"{len(rf)} taux mensuels pour {len(model)} mois")
    ann = annualize(model)
    try:
        reg = capm(model, benchmark, rf)
        alpha, beta = reg.alpha_annualized, reg.beta
    except ValueError as e:
        logger.warning(f"CAPM indéfini : {e}")
        alpha, beta = None, None
    ratios = risk_ratios(model, rf, benchmark, excess_mode=excess_mode)
    dd = drawdown_calmar(model)
    wl = month_win_loss(model)
    return PerfReport(
        annualized_return=ann.annualized_return,
        annualized_vol=ann.annualized_vol,
        alpha_annualized=alpha,
        beta=beta,
        sharpe=ratios.sharpe,
        sortino=ratios.sortino,
        calmar=dd.calmar,
        information_ratio=ratios.information_ratio,
        max_drawdown=dd.max_drawdown,
        avg_monthly_return=wl.avg_return,
        avg_monthly_gain=wl.avg_gain,
        avg_monthly_loss=wl.avg_loss,
        pct_winning_months=wl.pct_winning,
        pct_losing_months=wl.pct_losing
    )

# CSV mensuels ------------------------------------------------------------------

def read_monthly_csv(text: str | TextIO, *, source: str | None = None) -> MonthlyReturns:
    """Lit un CSV `year,month,percent` (profits mensuels en pourcentage)"""
    stream = io.StringIO(text) if isinstance(text, str) else text
    try:
        frame = pd.read_csv(stream, dtype=str, keep_default_na=False, skipinitialspace=True)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise DataError(f"CSV mensuel illisible ({e})", path=source)
    frame.columns = [c.strip().lower() for c in frame.columns]
    if frame.columns.tolist()[:3] != MONTHLY_COLUMNS:
        raise DataError(f"en-tête invalide (attendu {','.join(MONTHLY_COLUMNS)})", path=source, line=1)
    parsed = frame[MONTHLY_COLUMNS].apply(pd.to_numeric, errors='coerce')
    bad = parsed.isna().any(axis=1).to_numpy()
    if bad.any():
        i = int(np.argmax(bad))
        raise DataError(f"ligne mensuelle invalide {frame.iloc[i].tolist()}", path=source, line=i + 2)
    rows = sorted(zip(parsed['year'].astype(int), parsed['month'].astype(int), frame['percent'].astype(float)))
    try:
        return MonthlyReturns([(y, m) for y, m, _ in rows], [p / 100.0 for _, _, p in rows])
    except ValueError as e:
        raise DataError(str(e), path=source)


def write_monthly_csv(monthly: MonthlyReturns) -> str:
    """Sérialise en CSV `year,month,percent`"""
    frame = pd.DataFrame({
        'year': [p[0] for p in monthly.periods],
        'month': [p[1] for p in monthly.periods],
        'percent': [repr(float(v) * 100.0) for v in monthly.values]
    }, columns=MONTHLY_COLUMNS)
    return frame.to_csv(index=False, lineterminator='\n')

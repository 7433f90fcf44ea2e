# Gestion centralisée des données de marché (ES, VIX, T-bill) et des dossiers de résultats

import hashlib
import io
import logging
from dataclasses import dataclass, field
from datetime import date
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, TextIO

import numpy as np
import pandas as pd
import yaml

from common.errors import DataError

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')

BAR_COLUMNS = ['date', 'open', 'high', 'low', 'close']
RATE_COLUMNS = ['date', 'annual_yield_percent']
DATASET_COLUMNS = ['date', 'es_open', 'es_high', 'es_low', 'es_close', 'es_volume', 'prev_volume',
                   'vix_open', 'vix_high', 'vix_low', 'vix_close', 'rf_annual']
MIN_ANNUAL_YIELD = -0.01 # Garde-fou contre les mauvaises lectures, taux légèrement négatifs tolérés
MAX_LISTED_DATES = 10 # Nombre de dates affichées dans les messages d'erreur

# Types -----------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Bar:
    """Une journée OHLC(V) d'un instrument"""
    date: date
    open: float
    high: float
    low: float
    close: float
    volume: int | None = None

    def __post_init__(self):
        problem = _ohlc_problem(self.open, self.high, self.low, self.close)
        if problem:
            raise ValueError(f"{self.date}: {problem}")
        if self.volume is not None and self.volume < 0:
            raise ValueError(f"{self.date}: volume négatif ({self.volume})")


@dataclass(frozen=True, slots=True)
class RatePoint:
    """Rendement annuel du T-bill 3 mois, en fraction (0.0525 = 5.25%)"""
    date: date
    annual_yield: float

    def __post_init__(self):
        if not self.annual_yield >= MIN_ANNUAL_YIELD:
            raise ValueError(f"{self.date}: rendement annuel invalide ({self.annual_yield})")


@dataclass(frozen=True, slots=True)
class TradingDay:
    """Séance alignée ES + VIX + taux sans risque

    Utiliser make_trading_day() pour que le rendement de jour et le label soient cohérents."""
    date: date
    es: Bar
    vix: Bar
    rf_annual: float
    daytime_return: float
    label: int
    prev_volume: int


def make_trading_day(es: Bar, vix: Bar, rf_annual: float, prev_volume: int) -> TradingDay:
    """Construit une séance en calculant son rendement de jour et son label

    :param es: Barre ES du jour
    :param vix: Barre VIX du même jour
    :param rf_annual: Taux sans risque annuel (fraction) applicable ce jour
    :param prev_volume: Volume ES de la séance précédente
    :return: TradingDay
    """
    if es.date != vix.date:
        raise ValueError(f"dates ES/VIX différentes ({es.date} / {vix.date})")
    r = daytime_return(es)
    return TradingDay(date=es.date, es=es, vix=vix, rf_annual=float(rf_annual),
                      daytime_return=r, label=direction_label(r), prev_volume=int(prev_volume))


@dataclass(frozen=True)
class MarketColumns:
    """Vue en colonnes numpy (lecture seule) d'une suite de séances"""
    dates: np.ndarray
    es_open: np.ndarray
    es_high: np.ndarray
    es_low: np.ndarray
    es_close: np.ndarray
    es_volume: np.ndarray
    prev_volume: np.ndarray
    vix_open: np.ndarray
    vix_high: np.ndarray
    vix_low: np.ndarray
    vix_close: np.ndarray
    rf_annual: np.ndarray
    daytime_return: np.ndarray
    label: np.ndarray

    def __len__(self) -> int:
        return len(self.dates)

    def head(self, n: int) -> 'MarketColumns':
        """Renvoie les n premières séances (vues numpy, sans copie)"""
        return MarketColumns(**{name: getattr(self, name)[:n] for name in self.__dataclass_fields__})


@dataclass(frozen=True)
class MarketView:
    """Information disponible à l'ouverture du jour t

    Contient toutes les séances antérieures à t, plus les seules valeurs du jour t connues à l'ouverture :
    ouverture ES, ouverture VIX et volume ES de la veille."""
    past: MarketColumns
    date: date
    es_open: float
    vix_open: float
    prev_volume: float

    @property
    def t(self) -> int:
        """Index du jour de décision dans le dataset"""
        return len(self.past)


@dataclass(frozen=True)
class Dataset:
    """Suite ordonnée de séances, prête pour le backtest"""
    days: tuple[TradingDay, ...]
    sources: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        for prev, cur in zip(self.days, self.days[1:]):
            if not cur.date > prev.date:
                raise DataError(f"dates non strictement croissantes ({prev.date} puis {cur.date})")
            if cur.prev_volume != prev.es.volume:
                raise DataError(f"{cur.date}: prev_volume {cur.prev_volume} ≠ volume ES du {prev.date} ({prev.es.volume})")

    def __repr__(self) -> str:
        if not self.days:
            return '<Dataset vide>'
        return f'<Dataset {self.start} → {self.end} N={len(self)}>'

    def __len__(self) -> int:
        return len(self.days)

    def __getitem__(self, index: int) -> TradingDay:
        return self.days[index]

    # ---- Propriétés ----

    @property
    def start(self) -> date:
        return self.days[0].date

    @property
    def end(self) -> date:
        return self.days[-1].date

    @property
    def metadata(self) -> dict[str, Any]:
        """Sources, période et nombre de séances"""
        return {
            'sources': list(self.sources),
            'start': self.start.isoformat() if self.days else None,
            'end': self.end.isoformat() if self.days else None,
            'n': len(self)
        }

    @cached_property
    def columns(self) -> MarketColumns:
        """Colonnes numpy en lecture seule, calculées une seule fois"""
        days = self.days
        cols = {
            'dates': np.array([d.date for d in days], dtype='datetime64[D]'),
            'es_open': np.array([d.es.open for d in days], dtype=float),
            'es_high': np.array([d.es.high for d in days], dtype=float),
            'es_low': np.array([d.es.low for d in days], dtype=float),
            'es_close': np.array([d.es.close for d in days], dtype=float),
            'es_volume': np.array([d.es.volume for d in days], dtype=float),
            'prev_volume': np.array([d.prev_volume for d in days], dtype=float),
            'vix_open': np.array([d.vix.open for d in days], dtype=float),
            'vix_high': np.array([d.vix.high for d in days], dtype=float),
            'vix_low': np.array([d.vix.low for d in days], dtype=float),
            'vix_close': np.array([d.vix.close for d in days], dtype=float),
            'rf_annual': np.array([d.rf_annual for d in days], dtype=float),
            'daytime_return': np.array([d.daytime_return for d in days], dtype=float),
            'label': np.array([d.label for d in days], dtype=np.int8),
        }
        for arr in cols.values():
            arr.flags.writeable = False
        return MarketColumns(**cols)

    # ---- Découpage ----

    def head(self, n: int) -> 'Dataset':
        """Dataset tronqué aux n premières séances (historique visible à l'entraînement)"""
        return Dataset(self.days[:n], self.sources)

    def between(self, start: date | None = None, end: date | None = None) -> 'Dataset':
        """Restreint le dataset aux séances comprises entre start et end (inclus)"""
        days = tuple(d for d in self.days if (start is None or d.date >= start) and (end is None or d.date <= end))
        return Dataset(days, self.sources)

    def view_at(self, t: int) -> MarketView:
        """Vue de décision du jour t (frontière d'information)

        :param t: Index du jour de décision
        :return: MarketView
        """
        if not 0 <= t < len(self):
            raise IndexError(f"jour {t} hors du dataset (N={len(self)})")
        day = self.days[t]
        return MarketView(past=self.columns.head(t), date=day.date, es_open=day.es.open,
                          vix_open=day.vix.open, prev_volume=float(day.prev_volume))

    # ---- Empreinte ----

    def fingerprint(self) -> str:
        """Empreinte SHA-256 de la forme CSV canonique"""
        return hashlib.sha256(dataset_to_csv(self).encode('utf-8')).hexdigest()

# Rendements et labels ----------------------------------------------------------

def daytime_return(bar: Bar) -> float:
    """Rendement ouverture → clôture de la séance

    :param bar: Barre du jour (open > 0)
    :return: (close - open) / open
    """
    if not bar.open > 0:
        raise ValueError(f"{bar.date}: ouverture non positive ({bar.open})")
    return (bar.close - bar.open) / bar.open


def direction_label(r: float) -> int:
    """+1 si le rendement est strictement positif, -1 sinon (une séance plate compte comme une perte)"""
    return 1 if r > 0 else -1

# Lecture des CSV ---------------------------------------------------------------

def _read_frame(text: str | TextIO, expected: list[str], *, optional: list[str] = [], source: str | None = None) -> pd.DataFrame:
    stream = io.StringIO(text) if isinstance(text, str) else text
    try:
        frame = pd.read_csv(stream, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataError("fichier vide, en-tête attendu : " + ','.join(expected), path=source, line=1)
    except pd.errors.ParserError as e:
        raise DataError(f"ligne malformée ({e})", path=source)
    frame.columns = [c.strip().lower() for c in frame.columns]
    wanted = expected + [c for c in optional if c in frame.columns]
    if frame.columns.tolist()[:len(wanted)] != wanted:
        raise DataError(f"en-tête invalide {','.join(frame.columns)} (attendu {','.join(expected + optional)})", path=source, line=1)
    return frame[wanted]


def _parse_dates(series: pd.Series, source: str | None) -> list[date]:
    parsed = pd.to_datetime(series.str.strip(), format='%Y-%m-%d', errors='coerce')
    bad = parsed.isna().to_numpy()
    if bad.any():
        i = int(np.argmax(bad))
        raise DataError(f"date invalide {series.iloc[i]!r}", path=source, line=i + 2)
    return [ts.date() for ts in parsed]


def _parse_floats(series: pd.Series, name: str, source: str | None) -> np.ndarray:
    bad = pd.to_numeric(series, errors='coerce').isna().to_numpy()
    if bad.any():
        i = int(np.argmax(bad))
        raise DataError(f"valeur {name} invalide {series.iloc[i]!r}", path=source, line=i + 2)
    values = series.astype(float).to_numpy()
    if not np.isfinite(values).all():
        i = int(np.argmax(~np.isfinite(values)))
        raise DataError(f"valeur {name} non finie {series.iloc[i]!r}", path=source, line=i + 2)
    return values


def _check_unique(dates: list[date], source: str | None) -> None:
    seen : dict[date, int] = {}
    for i, d in enumerate(dates):
        if d in seen:
            raise DataError(f"date en double {d} (déjà présente ligne {seen[d] + 2})", path=source, line=i + 2)
        seen[d] = i


def _ohlc_problem(o: float, h: float, l: float, c: float) -> str | None:
    if min(o, h, l, c) <= 0:
        return f"prix non positif (open {o}, high {h}, low {l}, close {c})"
    if l > h:
        return f"low {l} > high {h} : viole low ≤ high"
    if c < l:
        return f"close {c} < low {l} : viole low ≤ close"
    if o < l:
        return f"open {o} < low {l} : viole low ≤ open"
    if c > h:
        return f"close {c} > high {h} : viole high ≥ close"
    if o > h:
        return f"open {o} > high {h} : viole high ≥ open"
    return None


def parse_bar_csv(text: str | TextIO, has_volume: bool, *, source: str | None = None) -> list[Bar]:
    """Lit un CSV `date,open,high,low,close[,volume]` et renvoie les barres triées par date

    :param text: Contenu du fichier ou flux texte
    :param has_volume: Si la colonne volume est attendue (ES) ou non (VIX)
    :param source: Nom du fichier pour les messages d'erreur
    :return: Liste de Bar triée par date croissante
    """
    frame = _read_frame(text, BAR_COLUMNS + (['volume'] if has_volume else []), source=source)
    dates = _parse_dates(frame['date'], source)
    prices = {name: _parse_floats(frame[name], name, source) for name in BAR_COLUMNS[1:]}
    volumes = None
    if has_volume:
        volumes = _parse_floats(frame['volume'], 'volume', source)
        bad = (volumes < 0) | (volumes != np.floor(volumes))
        if bad.any():
            i = int(np.argmax(bad))
            raise DataError(f"volume {frame['volume'].iloc[i]!r} n'est pas un entier positif", path=source, line=i + 2)

    bars = []
    for i, d in enumerate(dates):
        o, h, l, c = (float(prices[name][i]) for name in BAR_COLUMNS[1:])
        problem = _ohlc_problem(o, h, l, c)
        if problem:
            raise DataError(problem, path=source, line=i + 2)
        bars.append(Bar(d, o, h, l, c, int(volumes[i]) if volumes is not None else None))
    _check_unique(dates, source)
    return sorted(bars, key=lambda b: b.date)


def parse_rates_csv(text: str | TextIO, *, source: str | None = None) -> list[RatePoint]:
    """Lit un CSV `date,annual_yield_percent` (pourcentage converti en fraction)

    :param text: Contenu du fichier ou flux texte
    :param source: Nom du fichier pour les messages d'erreur
    :return: Liste de RatePoint triée par date croissante
    """
    frame = _read_frame(text, RATE_COLUMNS, source=source)
    dates = _parse_dates(frame['date'], source)
    yields = _parse_floats(frame['annual_yield_percent'], 'annual_yield_percent', source) / 100.0
    points = []
    for i, (d, y) in enumerate(zip(dates, yields)):
        if not y >= MIN_ANNUAL_YIELD:
            raise DataError(f"rendement {y:.4%} inférieur au minimum toléré", path=source, line=i + 2)
        points.append(RatePoint(d, float(y)))
    _check_unique(dates, source)
    return sorted(points, key=lambda p: p.date)

# Alignement ------------------------------------------------------------------

def _format_dates(dates: list[date]) -> str:
    shown = ', '.join(d.isoformat() for d in dates[:MAX_LISTED_DATES])
    if len(dates) > MAX_LISTED_DATES:
        shown += f" ... (+{len(dates) - MAX_LISTED_DATES})"
    return shown


def align_sessions(es: list[Bar], vix: list[Bar], rates: list[RatePoint], *, sources: Iterable[str] = ()) -> Dataset:
    """Aligne ES, VIX et taux sans risque sur le calendrier ES

    La première séance ES sert uniquement à fournir le volume de la veille et n'est pas conservée.
    Le VIX doit exister à la même date (aucune interpolation), le taux est le dernier connu à la date.

    :param es: Barres ES (avec volume)
    :param vix: Barres VIX
    :param rates: Points de taux
    :param sources: Fichiers d'origine (métadonnées)
    :return: Dataset
    """
    if not es or not vix or not rates:
        missing = [name for name, s in (('ES', es), ('VIX', vix), ('taux', rates)) if not s]
        raise DataError(f"série(s) vide(s) : {', '.join(missing)}")
    es = sorted(es, key=lambda b: b.date)
    if any(b.volume is None for b in es):
        raise DataError("les barres ES doivent porter un volume")
    vix_by_date = {b.date: b for b in vix}
    retained = es[1:]
    missing_vix = [b.date for b in retained if b.date not in vix_by_date]
    if missing_vix:
        raise DataError(f"{len(missing_vix)} séance(s) ES sans VIX : {_format_dates(missing_vix)}")

    rates = sorted(rates, key=lambda p: p.date)
    rate_dates = np.array([p.date for p in rates], dtype='datetime64[D]')
    days = []
    for prev, bar in zip(es, retained):
        k = int(np.searchsorted(rate_dates, np.datetime64(bar.date, 'D'), side='right')) - 1
        if k < 0:
            raise DataError(f"aucun taux connu au {bar.date} ou avant (premier taux : {rates[0].date})")
        days.append(make_trading_day(bar, vix_by_date[bar.date], rates[k].annual_yield, prev.volume)) # type: ignore
    dataset = Dataset(tuple(days), tuple(sources))
    logger.info(f"{len(dataset)} séances alignées ({dataset.start if days else '-'} → {dataset.end if days else '-'})")
    return dataset


def read_source(path: str | Path) -> str:
    path = Path(path)
    try:
        return path.read_text(encoding='utf-8')
    except FileNotFoundError:
        raise DataError("fichier introuvable", path=str(path))
    except OSError as e:
        raise DataError(f"lecture impossible ({e})", path=str(path))


def load_dataset(es_path: str | Path, vix_path: str | Path, rates_path: str | Path, *,
                 start: date | None = None, end: date | None = None) -> Dataset:
    """Charge, valide et aligne les trois fichiers d'entrée

    :param es_path: CSV ES (avec volume)
    :param vix_path: CSV VIX
    :param rates_path: CSV des taux T-bill en pourcentage
    :param start: Première date conservée, par défaut None (tout)
    :param end: Dernière date conservée, par défaut None (tout)
    :return: Dataset
    """
    es = parse_bar_csv(read_source(es_path), True, source=str(es_path))
    vix = parse_bar_csv(read_source(vix_path), False, source=str(vix_path))
    rates = parse_rates_csv(read_source(rates_path), source=str(rates_path))
    logger.info(f"Lecture : {len(es)} barres ES, {len(vix)} barres VIX, {len(rates)} taux")
    dataset = align_sessions(es, vix, rates, sources=(str(es_path), str(vix_path), str(rates_path)))
    if start is not None or end is not None:
        dataset = dataset.between(start, end)
        if not len(dataset):
            raise DataError(f"aucune séance entre {start} et {end}")
    return dataset

# Forme CSV canonique -------------------------------------------------------------

def dataset_to_csv(dataset: Dataset) -> str:
    """Sérialise le dataset en un seul CSV (précision aller-retour)"""
    rows = [{
        'date': d.date.isoformat(),
        'es_open': repr(d.es.open), 'es_high': repr(d.es.high), 'es_low': repr(d.es.low), 'es_close': repr(d.es.close),
        'es_volume': str(d.es.volume), 'prev_volume': str(d.prev_volume),
        'vix_open': repr(d.vix.open), 'vix_high': repr(d.vix.high), 'vix_low': repr(d.vix.low), 'vix_close': repr(d.vix.close),
        'rf_annual': repr(d.rf_annual)
    } for d in dataset.days]
    frame = pd.DataFrame(rows, columns=DATASET_COLUMNS)
    return frame.to_csv(index=False, lineterminator='\n')


def read_dataset_csv(text: str | TextIO, *, source: str | None = None) -> Dataset:
    """Relit la forme CSV canonique produite par dataset_to_csv()"""
    frame = _read_frame(text, DATASET_COLUMNS, source=source)
    dates = _parse_dates(frame['date'], source)
    values = {name: _parse_floats(frame[name], name, source) for name in DATASET_COLUMNS[1:]}
    days = []
    for i, d in enumerate(dates):
        try:
            es = Bar(d, float(values['es_open'][i]), float(values['es_high'][i]), float(values['es_low'][i]),
                     float(values['es_close'][i]), int(values['es_volume'][i]))
            vix = Bar(d, float(values['vix_open'][i]), float(values['vix_high'][i]), float(values['vix_low'][i]),
                      float(values['vix_close'][i]))
        except ValueError as e:
            raise DataError(str(e), path=source, line=i + 2)
        days.append(make_trading_day(es, vix, float(values['rf_annual'][i]), int(values['prev_volume'][i])))
    _check_unique(dates, source)
    return Dataset(tuple(days), (source,) if source else ())

# Dossiers de résultats -----------------------------------------------------------

class RunFolder:
    """Dossier de sortie d'une exécution (CSV, markdown, SVG, manifeste)"""
    def __init__(self, path: str | Path, *, create: bool = False):
        self.path = Path(path)
        if create:
            self.path.mkdir(parents=True, exist_ok=True)
        elif not self.path.is_dir():
            raise DataError("dossier d'exécution introuvable", path=str(self.path))

    def __repr__(self) -> str:
        return f'<RunFolder {self.path}>'

    def file(self, name: str) -> Path:
        return self.path / name

    def exists(self, name: str) -> bool:
        return self.file(name).exists()

    # ---- Écriture ----

    def write_text(self, name: str, text: str) -> Path:
        path = self.file(name)
        path.write_text(text, encoding='utf-8', newline='\n')
        logger.debug(f"Écrit {path}")
        return path

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        return self.write_text(name, frame.to_csv(index=False, lineterminator='\n'))

    def write_yaml(self, name: str, data: dict[str, Any]) -> Path:
        return self.write_text(name, yaml.safe_dump(data, sort_keys=False, allow_unicode=True))

    # ---- Lecture ----

    def read_text(self, name: str) -> str:
        return read_source(self.file(name))

    def read_frame(self, name: str) -> pd.DataFrame:
        try:
            return pd.read_csv(io.StringIO(self.read_text(name)), keep_default_na=False, dtype=str)
        except pd.errors.ParserError as e:
            raise DataError(f"CSV illisible ({e})", path=str(self.file(name)))

    def read_yaml(self, name: str) -> dict[str, Any]:
        data = yaml.safe_load(self.read_text(name))
        if not isinstance(data, dict):
            raise DataError("document YAML invalide", path=str(self.file(name)))
        return data

# Données synthétiques déterministes : ES en marche aléatoire géométrique, VIX à retour à la moyenne, taux T-bill

import logging
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np
import pandas as pd

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')

ES_FILE = 'es.csv'
VIX_FILE = 'vix.csv'
RATES_FILE = 'rates.csv'


@dataclass(frozen=True)
class SynthConfig:
    """Paramètres du générateur

    :param n_days: Nombre de séances générées (la première sera retirée à l'alignement)
    :param seed: Graine
    :param start: Première date (jours ouvrés ensuite)
    :param es_start: Premier cours ES
    :param drift: Rendement moyen ouverture → clôture
    :param volatility: Écart-type du rendement ouverture → clôture
    :param gap_volatility: Écart-type de l'écart d'ouverture
    :param edge: Part du rendement de séance expliquée par le signe de l'écart d'ouverture
    :param vix_mean: Niveau moyen du VIX
    :param vix_speed: Vitesse de retour à la moyenne du VIX
    :param rate_mode: 'constant' ou 'stepped'
    :param rate_percent: Taux annuel (en %) du mode constant, premier palier du mode stepped
    """
    n_days: int = 1510
    seed: int = 0
    start: date = date(2018, 1, 2)
    es_start: float = 2700.0
    drift: float = 0.0002
    volatility: float = 0.009
    gap_volatility: float = 0.003
    edge: float = 0.1
    vix_mean: float = 18.0
    vix_speed: float = 0.05
    rate_mode: str = 'stepped'
    rate_percent: float = 1.5

    def __post_init__(self):
        if self.n_days < 2:
            raise ValueError("au moins 2 séances")
        if self.rate_mode not in ('constant', 'stepped'):
            raise ValueError(f"mode de taux inconnu : {self.rate_mode!r}")


def _ohlc_frame(dates: pd.DatetimeIndex, o: np.ndarray, c: np.ndarray, wick_h: np.ndarray, wick_l: np.ndarray,
                volume: np.ndarray | None = None) -> pd.DataFrame:
    o, c = np.round(o, 2), np.round(c, 2)
    high = np.maximum(np.round(np.maximum(o, c) * (1 + wick_h), 2), np.maximum(o, c))
    low = np.minimum(np.round(np.minimum(o, c) * (1 - wick_l), 2), np.minimum(o, c))
    frame = pd.DataFrame({'date': dates.strftime('%Y-%m-%d'), 'open': o, 'high': high, 'low': low, 'close': c})
    if volume is not None:
        frame['volume'] = volume
    return frame


def generate(cfg: SynthConfig | None = None) -> tuple[pd.DataFrame, pd.DataFrame, pd.DataFrame]:
    """Génère les trois tables ES, VIX et taux

    :param cfg: Paramètres, par défaut SynthConfig()
    :return: (es, vix, rates) au format des fichiers d'entrée
    """
    cfg = cfg or SynthConfig()
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_days
    dates = pd.bdate_range(cfg.start, periods=n)

    gaps = rng.normal(0.0, cfg.gap_volatility, n)
    noise = rng.normal(0.0, cfg.volatility, n)
    daytime = cfg.drift + cfg.edge * np.sign(gaps) * cfg.volatility + np.sqrt(1 - cfg.edge ** 2) * noise
    es_open = np.empty(n)
    es_close = np.empty(n)
    prev = cfg.es_start
    for t in range(n):
        es_open[t] = prev * (1 + gaps[t])
        es_close[t] = es_open[t] * (1 + daytime[t])
        prev = es_close[t]
    volume = np.round(rng.lognormal(np.log(1.5e6), 0.3, n)).astype(np.int64)
    es = _ohlc_frame(dates, es_open, es_close, np.abs(rng.normal(0, 0.002, n)), np.abs(rng.normal(0, 0.002, n)), volume)

    # VIX : Ornstein-Uhlenbeck en log, opposé aux rendements ES
    log_vix = np.empty(n)
    level = np.log(cfg.vix_mean)
    shocks = rng.normal(0.0, 0.06, n)
    for t in range(n):
        level += cfg.vix_speed * (np.log(cfg.vix_mean) - level) - 3.0 * daytime[t] + shocks[t]
        log_vix[t] = level
    vix_close = np.exp(log_vix)
    vix_open = np.concatenate([[cfg.vix_mean], vix_close[:-1]]) * (1 + rng.normal(0, 0.01, n))
    vix = _ohlc_frame(dates, vix_open, vix_close, np.abs(rng.normal(0, 0.02, n)), np.abs(rng.normal(0, 0.02, n)))

    months = pd.date_range(dates[0].replace(day=1), dates[-1], freq='MS')
    if cfg.rate_mode == 'constant':
        yields = np.full(len(months), cfg.rate_percent)
    else:
        # Un palier de +0.25 point par trimestre
        yields = cfg.rate_percent + 0.25 * (np.arange(len(months)) // 3)
    rates = pd.DataFrame({'date': months.strftime('%Y-%m-%d'), 'annual_yield_percent': np.round(yields, 2)})
    return es, vix, rates


def write_synthetic(out_dir: str | Path, cfg: SynthConfig | None = None) -> tuple[Path, Path, Path]:
    """Écrit es.csv, vix.csv et rates.csv dans out_dir et renvoie leurs chemins"""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = (out / ES_FILE, out / VIX_FILE, out / RATES_FILE)
    for frame, path in zip(generate(cfg), paths):
        path.write_text(frame.to_csv(index=False, lineterminator='\n'), encoding='utf-8', newline='\n')
    logger.info(f"Données synthétiques écrites dans {out} ({(cfg or SynthConfig()).n_days} séances)")
    return paths

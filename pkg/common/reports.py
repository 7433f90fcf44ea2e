# Assemblage des rapports : sections de mesures, tableau markdown, CSV et comparaison de runs

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from common import metrics
from common.backtest import SignalSeries
from common.errors import DataError
from common.utils import pretty

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')

# Titres des sections et libellés exacts des lignes
SECTION_ACCURACY = 'Prediction Accuracy'
SECTION_SUMMARY = 'Summary Statistics'
SECTION_STANDARD = 'Standard Performance Metrics'
SECTION_FURTHER = 'Further Performance Metrics'
SECTION_EXPOSURE = 'Market Exposure Efficiency'
SECTION_MONTHLY = 'Monthly Percentage Profits'

REPORT_COLUMNS = ['section', 'metric', 'kind', 'strategy', 'benchmark']


@dataclass(frozen=True)
class MetricRow:
    label: str
    kind: str # 'percent' ou 'ratio'
    values: tuple[float | None, ...]


@dataclass(frozen=True)
class Section:
    title: str
    rows: tuple[MetricRow, ...]

    def row(self, label: str) -> MetricRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)


def _rows(layout: list[tuple[str, str]], values: Sequence[dict[str, float | None]]) -> tuple[MetricRow, ...]:
    return tuple(MetricRow(label, kind, tuple(v[label] for v in values)) for label, kind in layout)

# Blocs de mesures --------------------------------------------------------------

ACCURACY_ROWS = [('Accuracy', 'percent'), ('Positive Predictive Value', 'percent'), ('Negative Predictive Value', 'percent')]
SUMMARY_ROWS = [('Mean', 'percent'), ('Standard deviation', 'percent'), ('Minimum', 'percent'), ('Maximum', 'percent'),
                ('Skew', 'ratio'), ('Kurtosis', 'ratio')]
STANDARD_ROWS = [('Alpha (annualised)', 'percent'), ('Annualised Return', 'percent'), ('Average Return (Monthly)', 'percent'),
                 ('Average Gain (Monthly)', 'percent'), ('Average Loss (Monthly)', 'percent'),
                 ('Annualized Volatility', 'percent'), ('Beta', 'ratio'), ('Sharpe Ratio', 'ratio'), ('Sortino Ratio', 'ratio')]
FURTHER_ROWS = [('Maximum Drawdown', 'percent'), ('% Winning Months', 'percent'), ('% Losing Months', 'percent'),
                ('Calmar Ratio', 'ratio'), ('Information Ratio', 'ratio')]
DAILY_DRAWDOWN_ROW = ('Maximum Drawdown (Daily)', 'percent')
EXPOSURE_ROWS = [('% Exposure Long', 'percent'), ('% Exposure Short', 'percent'), ('Long Contribution', 'percent'),
                 ('Short Contribution', 'percent')]


def accuracy_values(signals: SignalSeries) -> dict[str, float | None]:
    counts = metrics.confusion_counts(signals.predictions(), signals.labels)
    if counts.total == 0:
        return {'Accuracy': None, 'Positive Predictive Value': None, 'Negative Predictive Value': None}
    rates = metrics.classification_rates(counts)
    return {'Accuracy': rates.accuracy, 'Positive Predictive Value': rates.ppv, 'Negative Predictive Value': rates.npv}


def summary_values(daily: np.ndarray) -> dict[str, float | None]:
    s = metrics.summary_stats(daily)
    return {'Mean': s.mean, 'Standard deviation': s.std, 'Minimum': s.min, 'Maximum': s.max, 'Skew': s.skew, 'Kurtosis': s.kurtosis}


def performance_values(report: metrics.PerfReport) -> dict[str, float | None]:
    return {
        'Alpha (annualised)': report.alpha_annualized,
        'Annualised Return': report.annualized_return,
        'Average Return (Monthly)': report.avg_monthly_return,
        'Average Gain (Monthly)': report.avg_monthly_gain,
        'Average Loss (Monthly)': report.avg_monthly_loss,
        'Annualized Volatility': report.annualized_vol,
        'Beta': report.beta,
        'Sharpe Ratio': report.sharpe,
        'Sortino Ratio': report.sortino,
        'Maximum Drawdown': report.max_drawdown,
        '% Winning Months': report.pct_winning_months,
        '% Losing Months': report.pct_losing_months,
        'Calmar Ratio': report.calmar,
        'Information Ratio': report.information_ratio
    }


def exposure_values(signals: SignalSeries) -> dict[str, float | None]:
    e = metrics.exposure_stats(signals.directions, signals.scales, signals.strategy_returns)
    return {'% Exposure Long': e.pct_long_days, '% Exposure Short': e.pct_short_days,
            'Long Contribution': e.long_contribution, 'Short Contribution': e.short_contribution}

# Rapports ---------------------------------------------------------------------

def performance_sections(model: metrics.MonthlyReturns, benchmark: metrics.MonthlyReturns, rf: np.ndarray, *,
                         excess_mode: str = 'geometric') -> list[Section]:
    """Sections mensuelles seules (standard et complémentaires), stratégie puis benchmark"""
    values = [performance_values(metrics.performance_report(m, benchmark, rf, excess_mode=excess_mode)) for m in (model, benchmark)]
    return [Section(SECTION_STANDARD, _rows(STANDARD_ROWS, values)), Section(SECTION_FURTHER, _rows(FURTHER_ROWS, values))]


def run_sections(signals: SignalSeries, benchmark: SignalSeries, rf_dates: np.ndarray, rf_annual: np.ndarray, *,
                 excess_mode: str = 'geometric', daily_drawdown: bool = False) -> list[Section]:
    """Les cinq sections d'un run : précision, statistiques journalières, mesures mensuelles, exposition

    :param signals: Signaux de la stratégie
    :param benchmark: Signaux du benchmark (mêmes dates)
    :param rf_dates: Dates des taux sans risque
    :param rf_annual: Taux annuels correspondants
    :param excess_mode: Convention du numérateur des ratios
    :param daily_drawdown: Ajoute le drawdown calculé sur la courbe journalière
    :return: Liste de Section
    """
    if not np.array_equal(signals.dates, benchmark.dates):
        raise DataError("la stratégie et le benchmark ne couvrent pas les mêmes séances")
    monthly = [metrics.compound_monthly(s.daily_returns()) for s in (signals, benchmark)]
    rf = metrics.monthly_risk_free(rf_dates, rf_annual, monthly[0].periods)
    sections = [
        Section(SECTION_ACCURACY, _rows(ACCURACY_ROWS, [accuracy_values(s) for s in (signals, benchmark)])),
        Section(SECTION_SUMMARY, _rows(SUMMARY_ROWS, [summary_values(s.strategy_returns) for s in (signals, benchmark)]))
    ]
    standard, further = performance_sections(monthly[0], monthly[1], rf, excess_mode=excess_mode)
    if daily_drawdown:
        row = MetricRow(*DAILY_DRAWDOWN_ROW, tuple(metrics.max_drawdown_daily(s.strategy_returns) for s in (signals, benchmark)))
        further = Section(further.title, further.rows + (row,))
    sections += [standard, further,
                 Section(SECTION_EXPOSURE, _rows(EXPOSURE_ROWS, [exposure_values(s) for s in (signals, benchmark)]))]
    return sections

# Sérialisation ----------------------------------------------------------------

def sections_to_markdown(title: str, sections: Sequence[Section], columns: Sequence[str], *,
                         monthly: metrics.MonthlyReturns | None = None, notes: Sequence[str] = ()) -> str:
    """Document markdown : une table par section, colonnes `Metric | <col> ...`"""
    parts = [f"# {title}", '']
    parts += [f"{n}" for n in notes]
    if notes:
        parts.append('')
    for section in sections:
        parts += [f"## {section.title}", '',
                  pretty.markdown_table(['Metric', *columns],
                                        [[r.label, *(pretty.format_value(v, r.kind) for v in r.values)] for r in section.rows]), '']
    if monthly is not None:
        parts += [f"## {SECTION_MONTHLY}", '', monthly_grid_markdown(monthly), '']
    return '\n'.join(parts)


def monthly_grid_markdown(monthly: metrics.MonthlyReturns) -> str:
    """Profits mensuels en % : une ligne par année (la plus récente en tête), une colonne par mois"""
    grid = monthly.by_year()
    rows = []
    for year in sorted(grid, reverse=True):
        rows.append([str(year), *(pretty.format_percent(grid[year].get(m)) for m in range(1, 13))])
    return pretty.markdown_table(['Year', *pretty.MONTH_NAMES], rows)


def sections_to_frame(sections: Sequence[Section], columns: Sequence[str] = ('strategy', 'benchmark')) -> pd.DataFrame:
    """Tableau plat `section,metric,kind,<colonnes>` (fractions brutes, vide si absent)"""
    records = []
    for section in sections:
        for r in section.rows:
            records.append([section.title, r.label, r.kind, *(pretty.csv_value(None if v is None else float(v)) for v in r.values)])
    return pd.DataFrame(records, columns=['section', 'metric', 'kind', *columns])


def frame_to_sections(frame: pd.DataFrame, column: str) -> list[Section]:
    """Relit une colonne d'un report.csv en sections"""
    sections : dict[str, list[MetricRow]] = {}
    try:
        for _, rec in frame.iterrows():
            sections.setdefault(rec['section'], []).append(MetricRow(rec['metric'], rec['kind'], (pretty.parse_csv_value(rec[column]),)))
    except (KeyError, ValueError) as e:
        raise DataError(f"report.csv invalide ({e})")
    return [Section(title, tuple(rows)) for title, rows in sections.items()]


def merge_columns(columns: Sequence[list[Section]]) -> list[Section]:
    """Juxtapose les sections de plusieurs runs (mêmes libellés, même ordre que le premier)"""
    merged = []
    for section in columns[0]:
        rows = []
        for row in section.rows:
            values : list[float | None] = []
            for sections in columns:
                match = next((s for s in sections if s.title == section.title), None)
                try:
                    values.extend(match.row(row.label).values if match else (None,))
                except KeyError:
                    values.append(None)
            rows.append(MetricRow(row.label, row.kind, tuple(values)))
        merged.append(Section(section.title, tuple(rows)))
    return merged

# Graphiques SVG reproductibles (courbes de capital, histogrammes)

import io
import logging
from typing import Mapping

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')

SVG_STYLE = {
    'svg.hashsalt': 'seance',  # Identifiants internes stables d'une exécution à l'autre
    'svg.fonttype': 'none',
    'path.simplify': False
}
# Ordre des couleurs : stratégie, benchmark, puis les autres
PALETTE = ['#1f77b4', '#7f7f7f', '#d62728', '#2ca02c', '#ff7f0e', '#9467bd', '#8c564b']


def _render(fig) -> str:
    buffer = io.StringIO()
    fig.savefig(buffer, format='svg', metadata={'Date': None, 'Creator': None})
    plt.close(fig)
    return buffer.getvalue()


def equity_svg(curves: Mapping[str, tuple[np.ndarray, np.ndarray]], *, title: str = 'Cumulative Daytime Percentage Profit') -> str:
    """Courbes de profit cumulé (en %) superposées

    :param curves: Nom → (dates, valeurs du capital partant de 1)
    :param title: Titre du graphique
    :return: Document SVG
    """
    with plt.rc_context(SVG_STYLE):
        fig, ax = plt.subplots(figsize=(10, 5))
        for (name, (dates, values)), color in zip(curves.items(), PALETTE * 2):
            ax.plot(np.asarray(dates, dtype='datetime64[D]'), (np.asarray(values) - 1.0) * 100, label=name, color=color, linewidth=1.2)
        ax.axhline(0.0, color='gray', linestyle=':', alpha=0.7)
        ax.set_title(title)
        ax.set_xlabel('Date')
        ax.set_ylabel('Cumulative profit (%)')
        ax.grid(True, linestyle=':', alpha=0.4)
        ax.legend(loc='upper left')
        fig.tight_layout()
        return _render(fig)


def histogram_svg(histograms: Mapping[str, list[tuple[float, int]]], bin_width: float, *,
                  title: str = 'Daily Returns Histogram') -> str:
    """Histogrammes de rendements journaliers superposés, classes de largeur fixe

    :param histograms: Nom → liste (borne inférieure, effectif)
    :param bin_width: Largeur de classe (fraction)
    :param title: Titre du graphique
    :return: Document SVG
    """
    with plt.rc_context(SVG_STYLE):
        fig, ax = plt.subplots(figsize=(10, 5))
        for (name, bins), color in zip(histograms.items(), PALETTE * 2):
            if not bins:
                continue
            edges = np.array([e for e, _ in bins]) * 100
            counts = np.array([c for _, c in bins])
            ax.bar(edges, counts, width=bin_width * 100, align='edge', alpha=0.5, label=name, color=color)
        ax.set_title(f"{title} (bin size = {bin_width * 100:.2f}%)")
        ax.set_xlabel('Daily return (%)')
        ax.set_ylabel('Days')
        ax.grid(True, linestyle=':', alpha=0.4)
        ax.legend(loc='upper left')
        fig.tight_layout()
        return _render(fig)

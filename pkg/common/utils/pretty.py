# Fonctions transverses d'aide à l'affichage

from typing import Any, Iterable, Sequence

from tabulate import tabulate

ABSENT_MARKDOWN = '-' # Valeur absente dans les tableaux markdown
ABSENT_CSV = ''       # Valeur absente dans les CSV

MONTH_NAMES = ['Jan', 'Feb', 'Mar', 'Apr', 'May', 'Jun', 'Jul', 'Aug', 'Sep', 'Oct', 'Nov', 'Dec']

# Nombres ----------------------------------------------------------

def _clean(value: float, digits: int) -> float:
    # Évite les "-0.00"
    return 0.0 if round(value, digits) == 0 else value

def format_percent(value: float | None, digits: int = 2) -> str:
    """Retourne une fraction formatée en pourcentage (ex. 0.0309 → 3.09%)

    :param value: Fraction à formatter, None si absente
    :param digits: Nombre de décimales, par défaut 2
    :return: str
    """
    if value is None:
        return ABSENT_MARKDOWN
    return f"{_clean(value * 100, digits):.{digits}f}%"

def format_ratio(value: float | None, digits: int = 2) -> str:
    """Retourne un ratio formaté (ex. 1.1634 → 1.16)

    :param value: Ratio à formatter, None si absent
    :param digits: Nombre de décimales, par défaut 2
    :return: str
    """
    if value is None:
        return ABSENT_MARKDOWN
    return f"{_clean(value, digits):.{digits}f}"

def format_value(value: float | None, kind: str) -> str:
    """Formatte selon le type de mesure ('percent' ou 'ratio')"""
    return format_percent(value) if kind == 'percent' else format_ratio(value)

def csv_value(value: Any) -> str:
    """Valeur pour un CSV : précision aller-retour pour les flottants, vide si absente"""
    if value is None:
        return ABSENT_CSV
    if isinstance(value, float):
        return repr(value)
    return str(value)

def parse_csv_value(text: str) -> float | None:
    """Inverse de csv_value pour les nombres"""
    return None if text.strip() == ABSENT_CSV else float(text)

# Tableaux ---------------------------------------------------------

def markdown_table(headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Retourne un tableau markdown (style GitHub), colonnes numériques alignées à droite

    :param headers: En-têtes
    :param rows: Lignes déjà formatées
    :return: str
    """
    return tabulate([list(r) for r in rows], headers=list(headers), tablefmt='github', stralign='right', disable_numparse=True)

def plain_table(headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Retourne un tableau texte pour le terminal"""
    return tabulate([list(r) for r in rows], headers=list(headers), tablefmt='simple', disable_numparse=True)

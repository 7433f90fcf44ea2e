# Arbres de décision CART (classification Gini, régression par réduction de variance)

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')

CRITERIA = ('gini', 'variance')
TIE_TOLERANCE = 1e-12 # Deux gains plus proches que ça sont considérés égaux

# Types -----------------------------------------------------------------------

@dataclass(frozen=True)
class TreeConfig:
    """Hyperparamètres d'un arbre

    :param max_depth: Profondeur maximale (None = illimitée)
    :param min_samples_split: Nombre minimal d'échantillons pour découper un nœud
    :param features_per_split: Nombre de variables candidates par nœud, 'all' ou 'sqrt'
    :param rng_seed: Graine du tirage des variables candidates
    """
    max_depth: int | None = 6
    min_samples_split: int = 2
    features_per_split: int | str = 'all'
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError(f"max_depth doit être ≥ 0 ({self.max_depth})")
        if self.min_samples_split < 2:
            raise ValueError(f"min_samples_split doit être ≥ 2 ({self.min_samples_split})")
        if isinstance(self.features_per_split, str):
            if self.features_per_split not in ('all', 'sqrt'):
                raise ValueError(f"features_per_split inconnu : {self.features_per_split!r}")
        elif self.features_per_split < 1:
            raise ValueError(f"features_per_split doit être ≥ 1 ({self.features_per_split})")
        if self.rng_seed < 0:
            raise ValueError("la graine doit être positive")

    def candidates(self, n_features: int) -> int:
        """Nombre de variables examinées à chaque nœud pour D variables"""
        if self.features_per_split == 'all':
            return n_features
        if self.features_per_split == 'sqrt':
            return max(1, int(math.sqrt(n_features)))
        return min(int(self.features_per_split), n_features)


@dataclass(frozen=True)
class Node:
    """Nœud d'arbre : feuille si feature < 0

    La valeur d'une feuille est la fraction (pondérée) de +1 pour un arbre de classification,
    la valeur ajustée pour un arbre de régression.
    """
    value: float
    n_samples: int
    feature: int = -1
    threshold: float = 0.0
    left: 'Node | None' = None
    right: 'Node | None' = None

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0

    @property
    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth, self.right.depth) # type: ignore

    def count_leaves(self) -> int:
        if self.is_leaf:
            return 1
        return self.left.count_leaves() + self.right.count_leaves() # type: ignore


@dataclass(frozen=True)
class Tree:
    root: Node
    n_features: int
    criterion: str = 'gini'

    @property
    def depth(self) -> int:
        return self.root.depth

# Contrôles ------------------------------------------------------------------

def check_inputs(X: np.ndarray, y: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray | None]:
    """Vérifie la matrice de variables (N×D, finie) et la cohérence des dimensions"""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"matrice N×D attendue, reçu {X.ndim} dimension(s)")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("données vides")
    if not np.all(np.isfinite(X)):
        raise ValueError("variables NaN ou infinies")
    if y is not None:
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise ValueError(f"{X.shape[0]} lignes pour {y.shape} labels")
    return X, y


def check_labels(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y)
    if not np.all((y == 1) | (y == -1)):
        raise ValueError("labels ±1 attendus")
    return y.astype(np.int64)

# Construction ---------------------------------------------------------------

class _Grower:
    """Croissance récursive d'un arbre, un seul flux aléatoire consommé en profondeur d'abord"""
    def __init__(self, X: np.ndarray, target: np.ndarray, weights: np.ndarray, cfg: TreeConfig,
                 criterion: str, leaf_value: Callable[[np.ndarray], float]):
        self.X = X
        self.target = target
        self.weights = weights
        self.cfg = cfg
        self.criterion = criterion
        self.leaf_value = leaf_value
        self.k = cfg.candidates(X.shape[1])
        self.rng = np.random.default_rng(cfg.rng_seed)

    def grow(self, idx: np.ndarray, depth: int = 0) -> Node:
        leaf = Node(value=self.leaf_value(idx), n_samples=len(idx))
        if self.cfg.max_depth is not None and depth >= self.cfg.max_depth:
            return leaf
        if len(idx) < self.cfg.min_samples_split or np.ptp(self.target[idx]) == 0:
            return leaf
        split = self.best_split(idx)
        if split is None:
            return leaf
        feature, threshold = split
        go_left = self.X[idx, feature] <= threshold
        return Node(value=leaf.value, n_samples=len(idx), feature=feature, threshold=threshold,
                    left=self.grow(idx[go_left], depth + 1), right=self.grow(idx[~go_left], depth + 1))

    def best_split(self, idx: np.ndarray) -> tuple[int, float] | None:
        best : tuple[float, int, float] | None = None # (impureté, variable, seuil)
        seen = 0
        for feature in self.rng.permutation(self.X.shape[1]):
            if seen >= self.k:
                break
            values = self.X[idx, feature]
            if np.ptp(values) == 0:
                continue
            seen += 1
            impurity, threshold = self.scan(values, idx)
            candidate = (impurity, int(feature), threshold)
            if best is None or impurity < best[0] - TIE_TOLERANCE:
                best = candidate
            elif abs(impurity - best[0]) <= TIE_TOLERANCE and (candidate[1], candidate[2]) < (best[1], best[2]):
                best = candidate
        return None if best is None else (best[1], best[2])

    def scan(self, values: np.ndarray, idx: np.ndarray) -> tuple[float, float]:
        """Meilleur seuil (milieu entre deux valeurs distinctes consécutives) pour une variable"""
        order = np.argsort(values, kind='stable')
        v = values[order]
        w = self.weights[idx][order]
        t = self.target[idx][order]
        cuts = np.nonzero(v[1:] > v[:-1])[0] # dernière position à gauche
        wl = np.cumsum(w)[cuts]
        wt = float(np.sum(w))
        wr = wt - wl
        if self.criterion == 'gini':
            pos = np.cumsum(w * (t > 0))[cuts]
            pos_total = float(np.sum(w * (t > 0)))
            with np.errstate(divide='ignore', invalid='ignore'):
                pl = np.where(wl > 0, pos / wl, 0.0)
                pr = np.where(wr > 0, (pos_total - pos) / wr, 0.0)
            impurity = wl * 2 * pl * (1 - pl) + wr * 2 * pr * (1 - pr)
        else:
            s = np.cumsum(w * t)[cuts]
            s2 = np.cumsum(w * t * t)[cuts]
            st, s2t = float(np.sum(w * t)), float(np.sum(w * t * t))
            with np.errstate(divide='ignore', invalid='ignore'):
                sse_l = np.where(wl > 0, s2 - s * s / wl, 0.0)
                sse_r = np.where(wr > 0, (s2t - s2) - (st - s) ** 2 / wr, 0.0)
            impurity = sse_l + sse_r
        thresholds = (v[cuts] + v[cuts + 1]) / 2.0
        low = float(np.min(impurity))
        # À impureté égale, le seuil le plus bas l'emporte
        i = int(np.nonzero(impurity <= low + TIE_TOLERANCE)[0][0])
        return float(impurity[i]), float(thresholds[i])


def tree_fit(X: np.ndarray, y: np.ndarray, sample_weights: np.ndarray | None = None, cfg: TreeConfig | None = None) -> Tree:
    """Ajuste un arbre de classification CART (impureté de Gini pondérée)

    :param X: Matrice N×D de variables
    :param y: Labels ±1
    :param sample_weights: Poids positifs ou nuls, par défaut None (poids 1)
    :param cfg: Hyperparamètres, par défaut TreeConfig()
    :return: Tree
    """
    cfg = cfg or TreeConfig()
    X, y = check_inputs(X, y)
    y = check_labels(y) # type: ignore
    w = np.ones(len(y)) if sample_weights is None else np.asarray(sample_weights, dtype=float)
    if w.shape != y.shape or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("poids invalides")
    keep = np.nonzero(w > 0)[0]
    if not len(keep):
        raise ValueError("tous les poids sont nuls")

    def purity(idx: np.ndarray) -> float:
        return float(np.sum(w[idx] * (y[idx] > 0)) / np.sum(w[idx]))

    root = _Grower(X, y.astype(float), w, cfg, 'gini', purity).grow(keep)
    logger.debug(f"Arbre ajusté : profondeur {root.depth}, {root.count_leaves()} feuilles, {len(keep)} échantillons")
    return Tree(root=root, n_features=X.shape[1], criterion='gini')


def regression_tree_fit(X: np.ndarray, target: np.ndarray, cfg: TreeConfig | None = None, *,
                        hessian: np.ndarray | None = None) -> Tree:
    """Ajuste un arbre de régression (réduction de variance)

    :param X: Matrice N×D de variables
    :param target: Cible réelle (résidus pour le boosting)
    :param cfg: Hyperparamètres, par défaut TreeConfig()
    :param hessian: Si fourni, la valeur d'une feuille est Σtarget / Σhessian (pas de Newton), sinon la moyenne
    :return: Tree
    """
    cfg = cfg or TreeConfig()
    X, target = check_inputs(X, target)
    target = np.asarray(target, dtype=float)
    if not np.all(np.isfinite(target)):
        raise ValueError("cible NaN ou infinie")
    w = np.ones(len(target))

    def newton(idx: np.ndarray) -> float:
        if hessian is None:
            return float(np.mean(target[idx]))
        den = float(np.sum(hessian[idx]))
        return float(np.sum(target[idx])) / den if den > 1e-300 else 0.0

    root = _Grower(X, target, w, cfg, 'variance', newton).grow(np.arange(len(target)))
    return Tree(root=root, n_features=X.shape[1], criterion='variance')

# Prédiction -----------------------------------------------------------------

def _apply(node: Node, X: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
    if node.is_leaf:
        out[idx] = node.value
        return
    go_left = X[idx, node.feature] <= node.threshold
    _apply(node.left, X, idx[go_left], out) # type: ignore
    _apply(node.right, X, idx[~go_left], out) # type: ignore


def tree_values(tree: Tree, X: np.ndarray) -> np.ndarray:
    """Valeur de la feuille atteinte par chaque ligne"""
    X, _ = check_inputs(np.atleast_2d(X))
    if X.shape[1] != tree.n_features:
        raise ValueError(f"{X.shape[1]} variables pour un arbre à {tree.n_features}")
    out = np.empty(X.shape[0])
    _apply(tree.root, X, np.arange(X.shape[0]), out)
    return out


def tree_predict_proba(tree: Tree, X: np.ndarray) -> np.ndarray:
    """Probabilité de +1 (pureté de la feuille) pour chaque ligne"""
    if tree.criterion != 'gini':
        raise ValueError("arbre de régression : utiliser tree_values")
    return tree_values(tree, X)


def tree_predict(tree: Tree, X: np.ndarray) -> np.ndarray:
    """Classe prédite ±1 (une feuille à 50/50 prédit -1)"""
    return np.where(tree_predict_proba(tree, X) > 0.5, 1, -1)

# Forêt aléatoire : arbres Gini sur rééchantillons bootstrap, vote majoritaire

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from common.learners.tree import Tree, TreeConfig, check_inputs, check_labels, tree_fit, tree_predict

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')

BOOTSTRAP_STREAM = 0xB007 # Sépare le flux du bootstrap de celui des variables candidates


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    bootstrap: bool = True
    tree: TreeConfig = field(default_factory=lambda: TreeConfig(max_depth=8, features_per_split='sqrt'))
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError(f"n_trees doit être ≥ 1 ({self.n_trees})")
        if self.n_jobs < 1:
            raise ValueError(f"n_jobs doit être ≥ 1 ({self.n_jobs})")


@dataclass(frozen=True)
class Forest:
    trees: tuple[Tree, ...]
    n_features: int


def _fit_member(X: np.ndarray, y: np.ndarray, cfg: ForestConfig, seed: int) -> Tree:
    weights = None
    if cfg.bootstrap:
        rng = np.random.default_rng([seed, BOOTSTRAP_STREAM])
        draws = rng.integers(0, len(y), size=len(y))
        weights = np.bincount(draws, minlength=len(y)).astype(float)
    return tree_fit(X, y, weights, replace(cfg.tree, rng_seed=seed))


def forest_fit(X: np.ndarray, y: np.ndarray, cfg: ForestConfig | None = None) -> Forest:
    """Ajuste une forêt aléatoire

    L'arbre i utilise la graine `graine ^ i`, tirée avant toute répartition sur les threads :
    le résultat ne dépend pas de n_jobs.

    :param X: Matrice N×D de variables
    :param y: Labels ±1
    :param cfg: Hyperparamètres, par défaut ForestConfig()
    :return: Forest
    """
    cfg = cfg or ForestConfig()
    X, y = check_inputs(X, y)
    y = check_labels(y) # type: ignore
    seeds = [cfg.tree.rng_seed ^ i for i in range(cfg.n_trees)]
    if cfg.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
            trees = tuple(pool.map(lambda s: _fit_member(X, y, cfg, s), seeds))
    else:
        trees = tuple(_fit_member(X, y, cfg, s) for s in seeds)
    logger.debug(f"Forêt ajustée : {len(trees)} arbres, profondeur max {max(t.depth for t in trees)}")
    return Forest(trees=trees, n_features=X.shape[1])


def forest_votes(forest: Forest, X: np.ndarray) -> np.ndarray:
    """Fraction d'arbres votant +1 pour chaque ligne"""
    votes = np.stack([tree_predict(t, X) > 0 for t in forest.trees])
    return votes.mean(axis=0)


def forest_predict(forest: Forest, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vote majoritaire ; une égalité parfaite donne -1

    :return: (directions ±1, fractions de vote +1)
    """
    votes = forest_votes(forest, X)
    return np.where(votes > 0.5, 1, -1), votes

# Gradient boosting à perte logistique (arbres de régression, pas de Newton par feuille)

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from common.learners.tree import Tree, TreeConfig, check_inputs, check_labels, regression_tree_fit, tree_values

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')

PRIOR_CLIP = 1e-12 # Évite un log-odds infini si la fenêtre n'a qu'une seule classe


@dataclass(frozen=True)
class BoostConfig:
    n_rounds: int = 100
    learning_rate: float = 0.1
    tree: TreeConfig = field(default_factory=lambda: TreeConfig(max_depth=3))

    def __post_init__(self):
        if self.n_rounds < 0:
            raise ValueError(f"n_rounds doit être ≥ 0 ({self.n_rounds})")
        if not 0 < self.learning_rate <= 1:
            raise ValueError(f"learning_rate hors de ]0, 1] ({self.learning_rate})")


@dataclass(frozen=True)
class BoostedModel:
    f0: float
    learning_rate: float
    trees: tuple[Tree, ...]
    n_features: int
    loss_trace: tuple[float, ...] = () # perte moyenne après F0 puis après chaque tour


def log_loss(y: np.ndarray, scores: np.ndarray) -> float:
    """Perte logistique moyenne log(1 + exp(-y·F)) pour y ±1"""
    return float(np.mean(np.logaddexp(0.0, -y * scores)))


def gbt_fit(X: np.ndarray, y: np.ndarray, cfg: BoostConfig | None = None) -> BoostedModel:
    """Ajuste un modèle de gradient boosting

    F0 est le log-odds a priori de +1. À chaque tour, un arbre de régression est ajusté aux gradients
    négatifs r = y01 - σ(F) ; chaque feuille prend la valeur Σr / Σσ(1-σ).

    :param X: Matrice N×D de variables
    :param y: Labels ±1
    :param cfg: Hyperparamètres, par défaut BoostConfig()
    :return: BoostedModel
    """
    cfg = cfg or BoostConfig()
    X, y = check_inputs(X, y)
    y = check_labels(y) # type: ignore
    y01 = (y > 0).astype(float)
    prior = min(max(float(np.mean(y01)), PRIOR_CLIP), 1 - PRIOR_CLIP)
    f0 = math.log(prior / (1 - prior))

    scores = np.full(len(y), f0)
    trace = [log_loss(y, scores)]
    trees = []
    for m in range(cfg.n_rounds):
        p = expit(scores)
        tree = regression_tree_fit(X, y01 - p, replace(cfg.tree, rng_seed=cfg.tree.rng_seed ^ m), hessian=p * (1 - p))
        scores = scores + cfg.learning_rate * tree_values(tree, X)
        trees.append(tree)
        trace.append(log_loss(y, scores))
    if cfg.n_rounds:
        logger.debug(f"Boosting : perte {trace[0]:.5f} → {trace[-1]:.5f} en {cfg.n_rounds} tours")
    return BoostedModel(f0=f0, learning_rate=cfg.learning_rate, trees=tuple(trees), n_features=X.shape[1],
                        loss_trace=tuple(trace))


def gbt_scores(model: BoostedModel, X: np.ndarray) -> np.ndarray:
    """Score F(x) (log-odds de +1)"""
    X, _ = check_inputs(np.atleast_2d(X))
    scores = np.full(X.shape[0], model.f0)
    for tree in model.trees:
        scores += model.learning_rate * tree_values(tree, X)
    return scores


def gbt_predict(model: BoostedModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Direction ±1 et probabilité σ(F) de +1 (0.5 exactement donne -1)"""
    proba = expit(gbt_scores(model, X))
    return np.where(proba > 0.5, 1, -1), proba


def gbt_loss_trace(model: BoostedModel) -> tuple[float, ...]:
    """Perte d'entraînement après F0 puis après chaque tour"""
    return model.loss_trace

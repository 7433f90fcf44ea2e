# Perceptron à deux couches cachées tanh et sortie logistique (premier agent du modèle A)

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from common.errors import DivergenceError

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int
    hidden: tuple[int, int] = (16, 8)
    epochs: int = 300
    learning_rate: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        if self.input_dim < 1 or len(self.hidden) != 2 or min(self.hidden) < 1:
            raise ValueError(f"architecture invalide : {self.input_dim} → {self.hidden} → 1")
        if self.epochs < 0 or not self.learning_rate > 0:
            raise ValueError("epochs ≥ 0 et learning_rate > 0 requis")


@dataclass
class MlpParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: float

    @property
    def input_dim(self) -> int:
        return self.W1.shape[0]

    @property
    def hidden(self) -> tuple[int, int]:
        return (self.W1.shape[1], self.W2.shape[1])

    def arrays(self) -> dict[str, np.ndarray]:
        return {'W1': self.W1, 'b1': self.b1, 'W2': self.W2, 'b2': self.b2, 'w3': self.w3, 'b3': np.array(self.b3)}

    def copy(self) -> 'MlpParams':
        return MlpParams(self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy(), self.w3.copy(), float(self.b3))


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    shape = (fan_in, fan_out) if fan_out > 1 else (fan_in,)
    return rng.uniform(-limit, limit, size=shape)


def mlp_init(cfg: MlpConfig) -> MlpParams:
    """Initialisation Glorot uniforme, biais nuls"""
    rng = np.random.default_rng(cfg.rng_seed)
    h1, h2 = cfg.hidden
    return MlpParams(W1=_glorot(rng, cfg.input_dim, h1), b1=np.zeros(h1), W2=_glorot(rng, h1, h2), b2=np.zeros(h2),
                     w3=_glorot(rng, h2, 1), b3=0.0)


def _layers(params: MlpParams, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a1 = np.tanh(X @ params.W1 + params.b1)
    a2 = np.tanh(a1 @ params.W2 + params.b2)
    return a1, a2, a2 @ params.w3 + params.b3


def mlp_forward(params: MlpParams, X: np.ndarray) -> np.ndarray:
    """Probabilités de +1 pour chaque ligne de X"""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != params.input_dim:
        raise ValueError(f"{X.shape[1]} variables pour un réseau à {params.input_dim} entrées")
    return expit(_layers(params, X)[2])


def mlp_loss_and_grads(params: MlpParams, X: np.ndarray, y01: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Entropie croisée binaire moyenne et gradients"""
    N = X.shape[0]
    a1, a2, logits = _layers(params, X)
    loss = float(np.mean(np.logaddexp(0.0, logits) - y01 * logits))
    dlogits = (expit(logits) - y01) / N
    dz2 = np.outer(dlogits, params.w3) * (1 - a2 ** 2)
    dz1 = (dz2 @ params.W2.T) * (1 - a1 ** 2)
    return loss, {
        'W1': X.T @ dz1, 'b1': dz1.sum(axis=0),
        'W2': a1.T @ dz2, 'b2': dz2.sum(axis=0),
        'w3': a2.T @ dlogits, 'b3': np.array(np.sum(dlogits))
    }


def mlp_fit(X: np.ndarray, y: np.ndarray, cfg: MlpConfig, *, init: MlpParams | None = None, epochs: int | None = None) -> MlpParams:
    """Descente de gradient plein lot sur l'entropie croisée moyenne

    :param X: Matrice N×D
    :param y: Labels ±1
    :param cfg: Hyperparamètres
    :param init: Poids de départ (reprise à chaud), par défaut None (initialisation depuis la graine)
    :param epochs: Nombre d'itérations, par défaut cfg.epochs
    :return: MlpParams (init n'est jamais modifié)
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y)
    if X.shape[0] < 1 or X.shape[1] != cfg.input_dim or y.shape != (X.shape[0],):
        raise ValueError(f"dimensions incohérentes : X {X.shape}, y {y.shape}, entrées {cfg.input_dim}")
    if not np.all(np.isfinite(X)):
        raise ValueError("variables NaN ou infinies")
    if not np.all((y == 1) | (y == -1)):
        raise ValueError("labels ±1 attendus")
    if init is not None and (init.input_dim, init.hidden) != (cfg.input_dim, tuple(cfg.hidden)):
        raise ValueError("poids de reprise incompatibles avec la configuration")
    y01 = (y > 0).astype(float)

    params = init.copy() if init is not None else mlp_init(cfg)
    last = math.nan
    for epoch in range(cfg.epochs if epochs is None else epochs):
        loss, grads = mlp_loss_and_grads(params, X, y01)
        if not math.isfinite(loss):
            raise DivergenceError(epoch, last)
        last = loss
        params.W1 -= cfg.learning_rate * grads['W1']
        params.b1 -= cfg.learning_rate * grads['b1']
        params.W2 -= cfg.learning_rate * grads['W2']
        params.b2 -= cfg.learning_rate * grads['b2']
        params.w3 -= cfg.learning_rate * grads['w3']
        params.b3 -= cfg.learning_rate * float(grads['b3'])
    return params

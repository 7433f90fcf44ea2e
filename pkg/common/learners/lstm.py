# Classifieur LSTM binaire (une couche, tête dense logistique), rétropropagation dans le temps

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from common.errors import DivergenceError

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')

INIT_RANGE = 0.08
FORGET_BIAS = 1.0
PARAM_NAMES = ('W_x', 'W_h', 'b', 'w_out', 'b_out')

# Types -----------------------------------------------------------------------

@dataclass(frozen=True)
class LstmConfig:
    input_dim: int = 3
    hidden_dim: int = 16
    sequence_length: int = 20
    epochs: int = 150
    learning_rate: float = 0.3
    rng_seed: int = 0

    def __post_init__(self):
        if self.input_dim < 1 or self.hidden_dim < 1 or self.sequence_length < 1:
            raise ValueError("dimensions LSTM invalides")
        if self.epochs < 0:
            raise ValueError(f"epochs doit être ≥ 0 ({self.epochs})")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate doit être > 0 ({self.learning_rate})")


@dataclass
class LstmParams:
    """Poids de la cellule, portes empilées dans l'ordre entrée / oubli / sortie / candidat

    W_x : (D, 4H), W_h : (H, 4H), b : (4H,), w_out : (H,), b_out : scalaire
    """
    W_x: np.ndarray
    W_h: np.ndarray
    b: np.ndarray
    w_out: np.ndarray
    b_out: float

    def __post_init__(self):
        hidden = self.W_h.shape[0]
        if self.W_h.shape != (hidden, 4 * hidden) or self.W_x.shape[1:] != (4 * hidden,) \
                or self.b.shape != (4 * hidden,) or self.w_out.shape != (hidden,):
            raise ValueError(f"formes incohérentes : W_x {self.W_x.shape}, W_h {self.W_h.shape}, b {self.b.shape}, w_out {self.w_out.shape}")

    @property
    def input_dim(self) -> int:
        return self.W_x.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.W_h.shape[0]

    def arrays(self) -> dict[str, np.ndarray]:
        return {'W_x': self.W_x, 'W_h': self.W_h, 'b': self.b, 'w_out': self.w_out, 'b_out': np.array(self.b_out)}

    def copy(self) -> 'LstmParams':
        return LstmParams(self.W_x.copy(), self.W_h.copy(), self.b.copy(), self.w_out.copy(), float(self.b_out))


def lstm_init(cfg: LstmConfig) -> LstmParams:
    """Initialisation uniforme(-0.08, 0.08) depuis la graine, biais d'oubli à 1"""
    rng = np.random.default_rng(cfg.rng_seed)
    D, H = cfg.input_dim, cfg.hidden_dim
    W_x = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(D, 4 * H))
    W_h = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(H, 4 * H))
    w_out = rng.uniform(-INIT_RANGE, INIT_RANGE, size=H)
    b = np.zeros(4 * H)
    b[H:2 * H] = FORGET_BIAS
    return LstmParams(W_x=W_x, W_h=W_h, b=b, w_out=w_out, b_out=0.0)

# Propagation ----------------------------------------------------------------

def _check_batch(X: np.ndarray, params: LstmParams) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 3 or X.shape[2] != params.input_dim or X.shape[1] < 1:
        raise ValueError(f"séquences (N, T, {params.input_dim}) attendues, reçu {X.shape}")
    return X


def _forward(params: LstmParams, X: np.ndarray) -> tuple[np.ndarray, list[tuple[np.ndarray, ...]]]:
    N, T, _ = X.shape
    H = params.hidden_dim
    h = np.zeros((N, H))
    c = np.zeros((N, H))
    cache = []
    for t in range(T):
        z = X[:, t, :] @ params.W_x + h @ params.W_h + params.b
        i = expit(z[:, :H])
        f = expit(z[:, H:2 * H])
        o = expit(z[:, 2 * H:3 * H])
        g = np.tanh(z[:, 3 * H:])
        c_next = f * c + i * g
        tanh_c = np.tanh(c_next)
        h_next = o * tanh_c
        cache.append((X[:, t, :], h, c, i, f, o, g, tanh_c))
        h, c = h_next, c_next
    logits = h @ params.w_out + params.b_out
    return logits, cache + [(h,)]


def lstm_logits(params: LstmParams, X: np.ndarray) -> np.ndarray:
    """Logits de sortie pour un lot de séquences (N, T, D)"""
    return _forward(params, _check_batch(X, params))[0]


def lstm_predict_proba(params: LstmParams, X: np.ndarray) -> np.ndarray:
    """Probabilités de +1 pour un lot de séquences (N, T, D)"""
    return expit(lstm_logits(params, X))


def lstm_forward(sequence: np.ndarray, params: LstmParams) -> float:
    """Probabilité de +1 pour une séquence T×D, états initiaux nuls

    :param sequence: Matrice T×D
    :param params: Poids du réseau
    :return: float dans ]0, 1[
    """
    sequence = np.asarray(sequence, dtype=float)
    if sequence.ndim != 2:
        raise ValueError(f"séquence T×D attendue, reçu {sequence.shape}")
    return float(lstm_predict_proba(params, sequence[None, :, :])[0])


def lstm_loss_and_grads(params: LstmParams, X: np.ndarray, y01: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Entropie croisée binaire moyenne et gradients analytiques (BPTT sur tous les pas)

    :param params: Poids du réseau
    :param X: Séquences (N, T, D)
    :param y01: Labels 0/1
    :return: (perte, gradients par nom de paramètre)
    """
    X = _check_batch(X, params)
    y01 = np.asarray(y01, dtype=float)
    if y01.shape != (X.shape[0],):
        raise ValueError(f"{X.shape[0]} séquences pour {y01.shape} labels")
    N = X.shape[0]
    H = params.hidden_dim
    logits, cache = _forward(params, X)
    loss = float(np.mean(np.logaddexp(0.0, logits) - y01 * logits))

    dlogits = (expit(logits) - y01) / N
    h_last = cache[-1][0]
    grads = {
        'w_out': h_last.T @ dlogits,
        'b_out': np.array(np.sum(dlogits)),
        'W_x': np.zeros_like(params.W_x),
        'W_h': np.zeros_like(params.W_h),
        'b': np.zeros_like(params.b),
    }
    dh = np.outer(dlogits, params.w_out)
    dc = np.zeros((N, H))
    for x_t, h_prev, c_prev, i, f, o, g, tanh_c in reversed(cache[:-1]):
        do = dh * tanh_c
        dc = dc + dh * o * (1 - tanh_c ** 2)
        dz = np.concatenate([
            dc * g * i * (1 - i),
            dc * c_prev * f * (1 - f),
            do * o * (1 - o),
            dc * i * (1 - g ** 2)
        ], axis=1)
        grads['W_x'] += x_t.T @ dz
        grads['W_h'] += h_prev.T @ dz
        grads['b'] += dz.sum(axis=0)
        dh = dz @ params.W_h.T
        dc = dc * f
    return loss, grads

# Entraînement ---------------------------------------------------------------

def lstm_fit(sequences: np.ndarray, labels: np.ndarray, cfg: LstmConfig | None = None) -> LstmParams:
    """Descente de gradient plein lot à pas fixe sur l'entropie croisée moyenne

    :param sequences: Séquences (N, T, D), T = cfg.sequence_length
    :param labels: Labels ±1
    :param cfg: Hyperparamètres, par défaut LstmConfig()
    :return: LstmParams
    :raises DivergenceError: Si la perte devient non finie
    """
    cfg = cfg or LstmConfig()
    X = np.asarray(sequences, dtype=float)
    labels = np.asarray(labels)
    if X.ndim != 3 or X.shape[0] < 1:
        raise ValueError("au moins une séquence (N, T, D) requise")
    if X.shape[1:] != (cfg.sequence_length, cfg.input_dim):
        raise ValueError(f"séquences {X.shape[1:]} pour une configuration ({cfg.sequence_length}, {cfg.input_dim})")
    if not np.all(np.isfinite(X)):
        raise ValueError("séquences NaN ou infinies")
    if not np.all((labels == 1) | (labels == -1)):
        raise ValueError("labels ±1 attendus")
    y01 = (labels > 0).astype(float)

    params = lstm_init(cfg)
    last = math.nan
    for epoch in range(cfg.epochs):
        loss, grads = lstm_loss_and_grads(params, X, y01)
        if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
            raise DivergenceError(epoch, last)
        last = loss
        params.W_x -= cfg.learning_rate * grads['W_x']
        params.W_h -= cfg.learning_rate * grads['W_h']
        params.b -= cfg.learning_rate * grads['b']
        params.w_out -= cfg.learning_rate * grads['w_out']
        params.b_out -= cfg.learning_rate * float(grads['b_out'])
        if epoch % 50 == 0:
            logger.debug(f"LSTM époque {epoch} : perte {loss:.5f}")
    return params

# Modèle A : deux agents autonomes (réseau dense, arbre séquentiel) et une politique d'exposition
# long / court / fermé dont le seuil θ est resélectionné chaque jour sur les récompenses réalisées

import logging
import math
from dataclasses import dataclass

import numpy as np

from common.dataio import Dataset, MarketColumns, MarketView
from common.learners.mlp import MlpConfig, MlpParams, mlp_fit, mlp_forward
from common.learners.tree import Tree, TreeConfig, tree_fit, tree_predict_proba
from common.signals import Decision, Strategy, ZScore, build_tree_features, direction_of, training_indices

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')

SCORE_TOLERANCE = 1e-12

# Variables du second agent ---------------------------------------------------

def sequence_features(cols: MarketColumns, t: int, window: int, *, es_open: float | None = None,
                      vix_open: float | None = None) -> np.ndarray:
    """Clôtures ES et VIX des `window` jours précédents, en log-ratio aux ouvertures du jour t"""
    if t < window:
        raise ValueError(f"historique insuffisant pour le jour {t} (séquence de {window})")
    es_open = float(cols.es_open[t]) if es_open is None else es_open
    vix_open = float(cols.vix_open[t]) if vix_open is None else vix_open
    block = slice(t - window, t)
    return np.concatenate([np.log(cols.es_close[block] / es_open), np.log(cols.vix_close[block] / vix_open)])

# Politique -------------------------------------------------------------------

def confidence(p_net: float, p_tree: float) -> float:
    """Confiance combinée ½(|2p_net - 1| + |2p_tree - 1|)"""
    return 0.5 * (abs(2 * p_net - 1) + abs(2 * p_tree - 1))


def gate(p_net: float, p_tree: float, theta: float) -> Decision:
    """Position ouverte si les deux agents s'accordent et que la confiance atteint θ

    Une position fermée garde le sens du réseau à titre indicatif.
    """
    d_net, d_tree = direction_of(p_net), direction_of(p_tree)
    c = confidence(p_net, p_tree)
    opened = d_net == d_tree and c >= theta
    return Decision(direction=d_net, scale=1.0 if opened else 0.0,
                    diagnostics={'p_net': p_net, 'p_tree': p_tree, 'theta': theta, 'confidence': c})


def replay_score(replay: np.ndarray, theta: float) -> float:
    """Récompense ajustée du risque (moyenne / écart-type) de la politique rejouée, 0 si écart-type nul

    :param replay: Lignes (p_net, p_tree, rendement réalisé)
    :param theta: Seuil d'exposition
    """
    rewards = np.array([gate(p, q, theta).position * r for p, q, r in replay])
    std = float(np.std(rewards))
    return float(np.mean(rewards)) / std if std > 0 else 0.0


def select_theta(replay: np.ndarray, grid: tuple[float, ...]) -> float:
    """θ maximisant la récompense rejouée ; à égalité, le plus petit"""
    best_theta, best_score = None, -math.inf
    for theta in sorted(grid):
        score = replay_score(replay, theta)
        if score > best_score + SCORE_TOLERANCE:
            best_theta, best_score = theta, score
    logger.debug(f"θ = {best_theta} (score {best_score:.4f} sur {len(replay)} jours)")
    return best_theta # type: ignore

# État ------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelAState:
    """État immuable après un ajustement quotidien

    :param net: Poids du premier agent
    :param net_zscore: Normalisation de ses variables
    :param tree: Second agent
    :param theta: Seuil d'exposition retenu
    :param replay: Tampon hors échantillon (p_net, p_tree, rendement) des derniers jours décidés
    :param trained_until: Longueur de l'historique à l'ajustement (premier jour décidé par cet état)
    """
    net: MlpParams
    net_zscore: ZScore
    tree: Tree
    theta: float
    replay: tuple[tuple[float, float, float], ...]
    trained_until: int


class ModelA(Strategy):
    """Deux agents et une politique d'exposition réévaluée toutes les 24 heures"""
    id = 'model_a'
    stateful = True
    diagnostics = ('p_net', 'p_tree', 'theta', 'confidence')
    defaults = {
        'model_a.use_volume': False,
        'model_a.hidden': '16,8',
        'model_a.epochs': 300,
        'model_a.warm_epochs': 30,
        'model_a.learning_rate': 0.1,
        'model_a.tree_window': 20,
        'model_a.tree_max_depth': 4,
        'model_a.tree_min_samples_split': 20,
        'model_a.theta_grid': '0.5,0.55,0.6,0.65,0.7,0.75,0.8,0.85,0.9',
        'model_a.replay_days': 50
    }

    # ---- Paramètres ----

    @property
    def lookback(self) -> int:
        return int(self.param('features.lookback'))

    @property
    def theta_grid(self) -> tuple[float, ...]:
        value = self.param('theta_grid')
        items = value.split(',') if isinstance(value, str) else value
        return tuple(float(v) for v in items)

    @property
    def hidden(self) -> tuple[int, int]:
        value = self.param('hidden')
        items = value.split(',') if isinstance(value, str) else value
        h1, h2 = (int(v) for v in items)
        return (h1, h2)

    def first_usable(self) -> int:
        return max(self.lookback, int(self.param('tree_window')))

    # ---- Agents ----

    def net_features(self, cols: MarketColumns, t: int, es_open: float | None = None, vix_open: float | None = None) -> np.ndarray:
        return build_tree_features(cols, t, self.lookback, es_open=es_open, vix_open=vix_open,
                                   include_volume=bool(self.param('use_volume')),
                                   raw_prices=bool(self.param('features.raw_prices')))

    def agents(self, state: ModelAState, cols: MarketColumns, t: int, es_open: float | None = None,
               vix_open: float | None = None) -> tuple[float, float]:
        """Probabilités de hausse (p_net, p_tree) des deux agents pour le jour t"""
        x_net = state.net_zscore.apply(self.net_features(cols, t, es_open, vix_open))
        x_tree = sequence_features(cols, t, int(self.param('tree_window')), es_open=es_open, vix_open=vix_open)
        return float(mlp_forward(state.net, x_net)[0]), float(tree_predict_proba(state.tree, x_tree)[0])

    # ---- Contrat ----

    def fit(self, history: Dataset, train_start: int, seed: int, prior_state: ModelAState | None = None) -> ModelAState:
        return model_a_fit(self, history, train_start, seed, prior_state)

    def decide(self, state: ModelAState, view: MarketView) -> Decision:
        return model_a_decide(self, state, view)

    def models(self, state: ModelAState) -> dict:
        return {'net': state.net, 'tree': state.tree}


def model_a_fit(model: ModelA, history: Dataset, train_start: int, seed: int,
                prior_state: ModelAState | None = None) -> ModelAState:
    """Ajustement quotidien : les deux agents, puis le seuil θ

    Le réseau reprend à chaud les poids de l'état précédent. Le tampon de rejeu est complété par les
    jours décidés par l'état précédent, dont les rendements sont désormais réalisés.

    :param model: Stratégie (hyperparamètres)
    :param history: Historique tronqué au jour à décider
    :param train_start: Début de la fenêtre d'entraînement
    :param seed: Graine de la fenêtre
    :param prior_state: État de la veille, par défaut None
    :return: ModelAState
    """
    cols = history.columns
    days = training_indices(history, train_start, model.first_usable())
    if not len(days):
        raise ValueError("aucun jour d'entraînement utilisable")
    labels = cols.label[days]

    # Agent 1 : réseau dense
    raw = np.vstack([model.net_features(cols, int(t)) for t in days])
    zscore = ZScore.fit(raw)
    warm = prior_state is not None and prior_state.net.input_dim == raw.shape[1] and prior_state.net.hidden == model.hidden
    cfg = MlpConfig(input_dim=raw.shape[1], hidden=model.hidden, epochs=int(model.param('epochs')),
                    learning_rate=float(model.param('learning_rate')), rng_seed=seed)
    net = mlp_fit(zscore.apply(raw), labels, cfg, init=prior_state.net if warm else None, # type: ignore
                  epochs=int(model.param('warm_epochs')) if warm else None)

    # Agent 2 : arbre sur la séquence des 20 derniers jours
    window = int(model.param('tree_window'))
    X_tree = np.vstack([sequence_features(cols, int(t), window) for t in days])
    tree = tree_fit(X_tree, labels, cfg=TreeConfig(max_depth=int(model.param('tree_max_depth')),
                                                   min_samples_split=int(model.param('tree_min_samples_split')),
                                                   rng_seed=seed))

    # Rejeu : jours décidés par l'état précédent, désormais réalisés
    replay_days = int(model.param('replay_days'))
    replay = list(prior_state.replay) if prior_state is not None else []
    if prior_state is not None:
        for t in range(max(prior_state.trained_until, model.first_usable()), len(history)):
            p, q = model.agents(prior_state, cols, t)
            replay.append((p, q, float(cols.daytime_return[t])))
    replay = replay[-replay_days:]

    state = ModelAState(net=net, net_zscore=zscore, tree=tree, theta=min(model.theta_grid), replay=tuple(replay),
                        trained_until=len(history))
    if len(replay) >= replay_days:
        sample = np.array(replay)
    else:
        # Tampon encore trop court : rejeu dans l'échantillon sur les derniers jours d'entraînement
        sample = np.array([(*model.agents(state, cols, int(t)), float(cols.daytime_return[t])) for t in days[-replay_days:]])
    theta = select_theta(sample, model.theta_grid)
    return ModelAState(net=net, net_zscore=zscore, tree=tree, theta=theta, replay=tuple(replay), trained_until=len(history))


def model_a_decide(model: ModelA, state: ModelAState, view: MarketView) -> Decision:
    """Long, court ou fermé selon l'accord des deux agents et le seuil θ"""
    p_net, p_tree = model.agents(state, view.past, view.t, view.es_open, view.vix_open)
    return gate(p_net, p_tree, state.theta)


def setup(registry):
    registry.register(ModelA)

# Sauvegarde et rechargement exacts des modèles au format YAML

import logging
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from common.learners.boosting import BoostedModel
from common.learners.forest import Forest
from common.learners.lstm import LstmParams
from common.learners.mlp import MlpParams
from common.learners.tree import Node, Tree

logger = logging.getLogger(f'SEANCE.{__name__.split(".")[-1]}')

MODEL_FORMAT = 'seance-model'
MODEL_VERSION = 1

Model = Tree | Forest | BoostedModel | LstmParams | MlpParams

# Conversion en documents ---------------------------------------------------

def _node_doc(node: Node) -> dict[str, Any]:
    doc : dict[str, Any] = {'value': float(node.value), 'n': node.n_samples}
    if not node.is_leaf:
        doc.update(feature=node.feature, threshold=float(node.threshold),
                   left=_node_doc(node.left), right=_node_doc(node.right)) # type: ignore
    return doc


def _doc_node(doc: dict[str, Any]) -> Node:
    if 'feature' not in doc:
        return Node(value=float(doc['value']), n_samples=int(doc['n']))
    return Node(value=float(doc['value']), n_samples=int(doc['n']), feature=int(doc['feature']),
                threshold=float(doc['threshold']), left=_doc_node(doc['left']), right=_doc_node(doc['right']))


def _tree_doc(tree: Tree) -> dict[str, Any]:
    return {'n_features': tree.n_features, 'criterion': tree.criterion, 'root': _node_doc(tree.root)}


def _doc_tree(doc: dict[str, Any]) -> Tree:
    return Tree(root=_doc_node(doc['root']), n_features=int(doc['n_features']), criterion=doc['criterion'])


def model_to_doc(model: Model) -> dict[str, Any]:
    """Document YAML auto-descriptif d'un modèle (flottants Python, précision aller-retour)"""
    doc : dict[str, Any] = {'format': MODEL_FORMAT, 'version': MODEL_VERSION}
    if isinstance(model, Tree):
        doc.update(kind='tree', tree=_tree_doc(model))
    elif isinstance(model, Forest):
        doc.update(kind='forest', n_features=model.n_features, trees=[_tree_doc(t) for t in model.trees])
    elif isinstance(model, BoostedModel):
        doc.update(kind='gbt', f0=float(model.f0), learning_rate=float(model.learning_rate), n_features=model.n_features,
                   loss_trace=[float(x) for x in model.loss_trace], trees=[_tree_doc(t) for t in model.trees])
    elif isinstance(model, (LstmParams, MlpParams)):
        doc.update(kind='lstm' if isinstance(model, LstmParams) else 'mlp',
                   params={k: v.tolist() for k, v in model.arrays().items()})
    else:
        raise TypeError(f"type de modèle non sérialisable : {type(model).__name__}")
    return doc


def doc_to_model(doc: dict[str, Any]) -> Model:
    if not isinstance(doc, dict) or doc.get('format') != MODEL_FORMAT:
        raise ValueError("document de modèle invalide")
    if doc.get('version') != MODEL_VERSION:
        raise ValueError(f"version de modèle non supportée : {doc.get('version')}")
    kind = doc.get('kind')
    if kind == 'tree':
        return _doc_tree(doc['tree'])
    if kind == 'forest':
        return Forest(trees=tuple(_doc_tree(t) for t in doc['trees']), n_features=int(doc['n_features']))
    if kind == 'gbt':
        return BoostedModel(f0=float(doc['f0']), learning_rate=float(doc['learning_rate']),
                            trees=tuple(_doc_tree(t) for t in doc['trees']), n_features=int(doc['n_features']),
                            loss_trace=tuple(float(x) for x in doc['loss_trace']))
    if kind in ('lstm', 'mlp'):
        p = {k: np.asarray(v, dtype=float) for k, v in doc['params'].items()}
        if kind == 'lstm':
            return LstmParams(W_x=p['W_x'], W_h=p['W_h'], b=p['b'], w_out=p['w_out'], b_out=float(p['b_out']))
        return MlpParams(W1=p['W1'], b1=p['b1'], W2=p['W2'], b2=p['b2'], w3=p['w3'], b3=float(p['b3']))
    raise ValueError(f"type de modèle inconnu : {kind!r}")

# Fichiers ------------------------------------------------------------------

def save_model(model: Model, path: str | Path) -> None:
    """Écrit le modèle dans un fichier YAML"""
    path = Path(path)
    path.write_text(yaml.safe_dump(model_to_doc(model), sort_keys=False), encoding='utf-8')
    logger.info(f"Modèle enregistré dans {path}")


def load_model(path: str | Path) -> Model:
    """Recharge exactement un modèle enregistré par save_model"""
    return doc_to_model(yaml.safe_load(Path(path).read_text(encoding='utf-8')))

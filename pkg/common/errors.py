# Exceptions communes, chaque catégorie porte son code de sortie

class SeanceError(Exception):
    """Erreur de base du moteur, convertie en code de sortie par le point d'entrée"""
    exit_code : int = 1
    category : str = 'erreur'


class ConfigError(SeanceError):
    """Configuration invalide (clé inconnue, valeur mal typée, modèle non reconnu...)"""
    exit_code = 1
    category = 'configuration'


class DataError(SeanceError):
    """Fichier de données absent, ligne malformée ou calendrier incohérent

    :param message: Description de l'erreur
    :param path: Fichier concerné, si connu
    :param line: Numéro de ligne (1 = en-tête), si connu
    """
    exit_code = 2
    category = 'données'

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ''
        if path is not None:
            prefix = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            prefix = f"ligne {line}: "
        super().__init__(prefix + message)


class ModelError(SeanceError):
    """Échec d'un modèle pendant l'entraînement ou la décision

    :param message: Description de l'erreur
    :param window: Index de la fenêtre walk-forward concernée, si connu
    """
    exit_code = 3
    category = 'modèle'

    def __init__(self, message: str, *, window: int | None = None):
        self.window = window
        super().__init__(f"fenêtre {window}: {message}" if window is not None else message)


class DivergenceError(ModelError):
    """La perte d'entraînement n'est plus finie"""
    def __init__(self, epoch: int, last_loss: float):
        self.epoch = epoch
        self.last_loss = last_loss
        super().__init__(f"divergence à l'époque {epoch} (dernière perte finie : {last_loss:.6g})")

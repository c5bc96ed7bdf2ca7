"""Enhanced-dependency graph parsing toolkit."""

__version__ = "0.1.0"

from .conllu import NodeId, Sentence, Token, parse_conllu, read_conllu, validate_level2, write_conllu
from .evaluation import EvalReport, elas, evaluate
from .graph import EudGraph, from_graph, to_graph
from .model import EudParser, Hyperparams, LabelVocab
from .training import Checkpoint, TrainConfig, load_checkpoint, save_checkpoint, train

__all__ = [
    "NodeId", "Sentence", "Token", "parse_conllu", "read_conllu", "validate_level2", "write_conllu",
    "EvalReport", "elas", "evaluate",
    "EudGraph", "from_graph", "to_graph",
    "EudParser", "Hyperparams", "LabelVocab",
    "Checkpoint", "TrainConfig", "load_checkpoint", "save_checkpoint", "train",
    "__version__",
]

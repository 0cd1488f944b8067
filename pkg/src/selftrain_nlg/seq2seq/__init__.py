"""GRU encoder-decoder generator: model, training loop, checkpoints."""

from .model import EncoderCache, EncodingError, ModelConfig, Seq2SeqModel, sequence_nll
from .train import TrainConfig, TrainingDiverged, TrainLog, train

__all__ = [
    "EncoderCache", "EncodingError", "ModelConfig", "Seq2SeqModel", "TrainConfig", "TrainLog",
    "TrainingDiverged", "sequence_nll", "train",
]

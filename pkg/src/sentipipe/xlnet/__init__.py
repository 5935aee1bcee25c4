from .masks import PermutationMask, build_plm_masks, ranks, sample_permutation
from .model import (
    ModelConfig,
    Prediction,
    StreamState,
    XLNetClassifier,
    classification_loss,
    classify_logits,
    content_forward,
    init_params,
    make_prediction,
    plm_loss,
    two_stream_forward,
)
from .train import EpochRecord, FineTuneResult, TrainConfig, fine_tune, new_model, plm_batch_masks, pretrain
from .vocab import CLS, MASK, PAD, UNK, Vocab, build_vocab, encode, encode_batch

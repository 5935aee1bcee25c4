from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .gradcheck import GradCheckReport, check_gradients
from .optim import AdamW, adamw_step
from .tensor import (
    GradientError,
    Parameter,
    Tensor,
    add,
    as_tensor,
    backward,
    concat,
    cross_entropy,
    default_dtype,
    gather,
    gelu,
    layer_norm,
    matmul,
    mean_all,
    mul,
    reshape,
    scale,
    set_default_dtype,
    softmax,
    sub,
    sum_all,
    take,
    transpose,
)

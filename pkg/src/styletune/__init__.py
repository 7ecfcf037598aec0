"""Feed-forward style transfer with a continuous strength input.

A single transformer network stylizes at any strength: its residual blocks
are gated by gamma_i = 2|alpha*beta_i| / (1 + |alpha*beta_i|) and training
draws a fresh strength per minibatch.  Everything runs on a small numpy
tensor core with tape-based reverse-mode autodiff.
"""

from .tensor import (
    Tensor,
    Tape,
    ShapeError,
    TapeError,
    backward,
    add,
    sub,
    mul,
    scale,
    scale_by,
    relu,
    sigmoid,
    tsum,
)
from .ops import (
    conv2d,
    instance_norm,
    nearest_upsample,
    avg_pool2x2,
    gram,
    mse,
    total_variation,
)
from .gradcheck import GradCheckReport, grad_check
from .rng import Xorshift64Star, splitmix64
from .checkpoint import (
    CheckpointError,
    CheckpointCrcError,
    CheckpointMagicError,
    CheckpointTruncatedError,
    CheckpointVersionError,
    load_checkpoint,
    save_checkpoint,
    checkpoint_crc,
)
from .encoder import (
    EncoderWeights,
    FeatureSet,
    encode,
    generate_encoder,
    import_encoder,
    save_encoder,
)
from .network import (
    ArchitectureConfig,
    TransformerWeights,
    forward,
    gamma,
    init_weights,
    parameter_count,
    residual_block_forward,
    strength_gate,
)
from .losses import (
    LossBreakdown,
    LossWeights,
    StyleTarget,
    content_loss,
    make_style_target,
    style_loss,
    total_loss,
)
from .imageio import ImageFormatError, decode_image, load_image, save_image, to_png_bytes
from .training import (
    ALPHA_GRID,
    AdamState,
    ConfigError,
    TrainConfig,
    TrainingError,
    adam_step,
    sample_strength,
    train,
)
from .evaluation import (
    LossTableRow,
    RatioReport,
    evaluate_model,
    loss_ratio,
    train_fixed_strength_baseline,
)
from .infer import load_transformer, stylize_png_bytes

__version__ = "0.1.0"

"""Conditional stochastic networks for multimodal forecasting, on a small numpy autodiff engine."""

from .errors import CSNetError, DomainError, FormatError, InputError, ShapeError, TrainingError, UsageError
from .evaluation import EvalReport, evaluate, frame_l2, topk_curve, velocity_l2
from .losses import LossConfig, Scheme, kbest_loss, mcml_loss, regression_loss, va_loss
from .models import DecoderKind, ModelConfig, StochasticNet, load_checkpoint, save_checkpoint
from .nn import GaussianParams, LatentSample, kl_diag, replicate_spatial, sample
from .synthdata import DatasetSpec, SyntheticDataset, Task, generate, read_dataset, write_dataset
from .report import markdown_table, render_svg
from .tensor import Tensor, no_grad
from .train import TrainConfig, load_config, train

__version__ = "0.1.0"

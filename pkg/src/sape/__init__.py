"""Coordinate-MLP fitting with spatially-adaptive progressive encoding.

The library fits implicit neural functions (1D signals, 2D images, 2D
silhouettes, occupancy fields) with positional encodings whose
frequencies are unmasked over time at rates that vary per spatial region
under a loss-feedback loop.
"""

from .encodings import (EncodingBasis, build_rbf_grid_basis, encode,
                        identity_basis, lipschitz_order, sample_fourier_basis)
from .mask import (MaskGrid, MaskSchedule, accumulate_loss, advance, heatmap,
                   interp_alpha, node_alpha, schedule_alpha)
from .metrics import MetricResult, chamfer_symmetric, iou, mse, psnr
from .nn import (AdamState, Batch, MlpParams, TrainingDiverged, adam_step,
                 init_params, mlp_backward, mlp_forward)
from .tasks import (TrainConfig, TrainReport, fit_image, fit_occupancy,
                    fit_signal_1d, fit_silhouette, train)

__version__ = "0.1.0"

__all__ = [
    "AdamState", "Batch", "EncodingBasis", "MaskGrid", "MaskSchedule",
    "MetricResult", "MlpParams", "TrainConfig", "TrainReport",
    "TrainingDiverged", "accumulate_loss", "adam_step", "advance",
    "build_rbf_grid_basis", "chamfer_symmetric", "encode", "fit_image",
    "fit_occupancy", "fit_signal_1d", "fit_silhouette", "heatmap",
    "identity_basis", "init_params", "interp_alpha", "iou",
    "lipschitz_order", "mlp_backward", "mlp_forward", "mse", "node_alpha",
    "psnr", "sample_fourier_basis", "schedule_alpha", "train",
]

"""Plug-and-play undersampled MRI reconstruction with a 1D CNN denoiser
trained purely on synthetic data.

The pieces: a multi-coil Fourier forward model (`forward_model`),
retrospective sampling masks (`sampling`), synthetic paired line data
(`synthdata`), a small residual 1D CNN plus hand-rolled training
(`denoiser`, `training`), the proximal-gradient reconstruction loop
(`reconstruct`), PSNR evaluation and sweeps (`evaluate`), test phantoms
(`phantom`), and bit-exact file formats (`fileio`). The `pnpmri` console
script ties them together.
"""

__version__ = "0.1.0"

from .core import inner_product, l2_norm, make_rng, relative_change
from .denoiser import (
    DenoiserModel,
    apply_denoiser_2d,
    denoise_batch,
    denoise_line,
    init_model,
)
from .evaluate import EvalReport, error_map, make_mask_for, psnr, run_sweep
from .fileio import (
    FileFormatError,
    read_complex_image,
    read_dataset,
    read_mask,
    read_model,
    write_complex_image,
    write_dataset,
    write_mask,
    write_model,
)
from .forward_model import (
    NoiseSpec,
    add_measurement_noise,
    adjoint,
    estimate_op_norm,
    forward,
    simulate_coil_maps,
)
from .fourier import fft1c, fft2c, ifft1c, ifft2c
from .phantom import Phantom, load_phantom, shepp_logan, synthetic_phantom
from .reconstruct import ReconConfig, ReconResult, pnp_reconstruct, residual
from .reconstruct import zero_filled
from .sampling import (
    SamplingMask,
    apply_mask,
    make_cartesian1d_mask,
    make_full_mask,
    make_random2d_mask,
)
from .synthdata import (
    DatasetConfig,
    DatasetRecord,
    MagnitudeSource,
    build_dataset,
    extract_lines,
    make_pair,
    procedural_magnitude,
    random_phase_map,
)
from .training import TrainConfig, adam_step, gradients, train_denoiser

__all__ = [
    "__version__",
    "make_rng",
    "inner_product",
    "l2_norm",
    "relative_change",
    "fft2c",
    "ifft2c",
    "fft1c",
    "ifft1c",
    "SamplingMask",
    "make_cartesian1d_mask",
    "make_random2d_mask",
    "make_full_mask",
    "apply_mask",
    "NoiseSpec",
    "simulate_coil_maps",
    "forward",
    "adjoint",
    "add_measurement_noise",
    "estimate_op_norm",
    "DatasetRecord",
    "MagnitudeSource",
    "DatasetConfig",
    "procedural_magnitude",
    "random_phase_map",
    "extract_lines",
    "make_pair",
    "build_dataset",
    "DenoiserModel",
    "init_model",
    "denoise_line",
    "denoise_batch",
    "apply_denoiser_2d",
    "TrainConfig",
    "gradients",
    "adam_step",
    "train_denoiser",
    "ReconConfig",
    "ReconResult",
    "pnp_reconstruct",
    "zero_filled",
    "residual",
    "psnr",
    "error_map",
    "make_mask_for",
    "run_sweep",
    "EvalReport",
    "Phantom",
    "shepp_logan",
    "synthetic_phantom",
    "load_phantom",
    "FileFormatError",
    "read_complex_image",
    "write_complex_image",
    "read_mask",
    "write_mask",
    "read_dataset",
    "write_dataset",
    "read_model",
    "write_model",
]

"""Low-light haze simulation.

Images are float64 numpy arrays of shape (H, W, 3) with values in [0, 1];
depth and transmission maps are (H, W) arrays.
"""

from ._lhsim import (
    InvalidArgument,
    IoError,
    MappingError,
    add_noise,
    apply_haze,
    compute_metrics,
    estimate_atmospheric_light,
    exposure_loss,
    generate_dataset,
    gradient_loss,
    invert_haze,
    invert_lowlight,
    l1,
    l2,
    load_depth,
    load_image,
    oracle_two_path,
    path_invariance_loss,
    psnr,
    render_lowlight,
    sample_params,
    save_image,
    simulate,
    ssim,
    total_loss,
    train_count,
    transmission_from_depth,
    verify_manifest,
)

try:
    from ._lhsim import run_cli
except ImportError:  # built without the command-line front end
    pass

__version__ = "0.1.0"

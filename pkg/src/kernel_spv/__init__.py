"""Principal angles between kernel dictionaries and their Koopman images, with SPV pruning."""

__version__ = "0.1.0"

from .dynamics import (  # noqa: E402
    SnapshotData,
    advance,
    duffing_step,
    duffing_system,
    identity_system,
    linear_system,
    sample_uniform,
)
from .errors import *  # noqa: E402,F401,F403
from .geometry import (  # noqa: E402
    KernelOperators,
    PrincipalDecomposition,
    exact_principal,
    gram_triple,
    implicit_qr,
    invariance_proximity,
    solve_koopman_image,
)
from .kernels import KernelSpec, gram, kernel_eval  # noqa: E402
from .nystrom import (  # noqa: E402
    NystromFeatures,
    NystromModel,
    approx_principal,
    feature_map,
    feature_matrix,
    fit_landmarks,
)
from .pruning import PruneConfig, PruneReport, approx_kernel_spv, kernel_spv, spv_step  # noqa: E402

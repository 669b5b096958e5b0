"""Domain decomposition for dual total-variation imaging problems.

Denoising, inpainting and convex segmentation with anisotropic TV are solved
on a pixel grid whose dual variable lives in the lowest-order Raviart-Thomas
space.  The grid is split into rectangular subdomains; interface continuity
of the dual field is enforced by Lagrange multipliers and the local saddle
problems are solved in parallel.
"""

from . import imaging, oracle
from ._backend import BACKENDS, default_backend_name, get_backend
from .decomposition import (
    JumpViolation,
    Partition,
    Subdomain,
    TornDualField,
    assemble,
    extend_image,
    jump,
    jump_adjoint,
    local_divergence,
    local_divergence_adjoint,
    restrict_image,
    tear,
)
from .fidelity import (
    FidelityModel,
    Variant,
    energy_F,
    energy_F_local,
    energy_total,
    prox_F,
    prox_F_local,
    segmentation_weight,
    shrink,
    threshold,
)
from .grid import (
    DualField,
    GridShape,
    divergence,
    divergence_adjoint,
    inner,
    inner_dual,
    norm1,
    norm2,
    project_unit_ball,
    total_variation,
)
from .solvers import (
    DDResult,
    InnerParams,
    OuterParams,
    SolveReport,
    SolverDivergence,
    dd_solve,
    ergodic_averages,
    solve_full_primal_dual,
    solve_local_saddle,
)

from .imaging import add_gaussian, add_salt_pepper, load_image, psnr, save_image

__version__ = "0.1.0"

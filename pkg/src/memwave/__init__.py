"""Dynamic inverse problem for the 1-d wave equation with memory.

The forward model is u_tt = u_xx - q(x) u - int_0^t K(t-s) u(x, s) ds on the
half line, driven from the boundary and observed there.  This package
simulates the forward system, synthesizes the boundary response, assembles
the connecting operator from that data alone, solves the resulting integral
equations and recovers q - with an independent oracle route for every stage.
"""

from .catalog import PROBLEMS, ProblemSpec, get_problem
from .connecting import (
    ConnectingKernel,
    PsiField,
    connecting_form_from_interior,
    connecting_form_from_kernel,
    connecting_kernel_from_response,
    connecting_kernel_from_w,
    solve_blagoveshchenskii,
)
from .errors import (
    AssemblyError,
    IllConditionedError,
    NumericalInstabilityError,
    UsageError,
)
from .forward import (
    SpaceTimeField,
    WaveSnapshot,
    apply_control_operator,
    apply_response,
    fd_boundary_trace,
    fd_forward,
    duhamel_eval,
    solve_control,
)
from .gelfand_levitan import (
    GLSolution,
    gl_residual,
    operator_identity_residual,
    reconstruction_errors,
    recover_potential,
    solve_gl,
    z_from_w,
)
from .goursat import (
    GoursatSolution,
    ResponseData,
    diagonal_residual,
    linearized_memory_field,
    response_kernel,
    solve_goursat,
)
from .model import (
    CoefficientField,
    ControlSignal,
    GridSpec,
    MemoryKernel,
    TriangularField,
    coefficient_from_family,
    control_from_family,
    kernel_from_family,
)
from .pipeline import (
    PipelineConfig,
    load_config,
    run_convergence,
    run_reconstruct,
    run_synth,
    run_verify,
)

__version__ = "0.1.0"

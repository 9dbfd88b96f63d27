"""Continuously bounds-preserving limiting for nodal DG discretizations of the
compressible Euler equations.

States are plain numpy arrays whose last axis holds the conserved variables
``[rho, m_1, ..., m_d, E]`` (or primitives ``[rho, v_1, ..., v_d, P]``).
"""

from dglimit.euler import (
    ConstraintKind,
    ConstraintSpec,
    DegenerateStateError,
    GasParams,
    cons_to_prim,
    constraint_g,
    flux,
    max_wave_speed,
    pressure,
    prim_to_cons,
    specific_entropy,
)
from dglimit.element import (
    ElementSolution,
    ModalForm,
    QuadratureRule,
    element_mean,
    eval_at,
    gauss_legendre_rule,
    gauss_lobatto_nodes,
    nodal_to_modal,
    numeric_grad_hess,
)
from dglimit.limiter import (
    LimiterConfig,
    LimitResult,
    LimitStatus,
    Mode,
    compute_alpha,
    find_min_h,
    h_functional,
    h_minus_linear,
    h_plus,
    illinois_alpha_star,
    limit_element,
    pressure_alpha_star,
    squeeze,
)

__version__ = "0.1.0"

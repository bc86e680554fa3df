"""Penalized Willmore bending energy of graphs: closed-form relaxation,
limit functional, and constructive verification machinery.

The raw density penalizes any bending at strength lambda; its quasiconvex
envelope ``h_lambda`` and the limit functional (bulk term plus gradient-jump
line energy) are implemented in closed form, together with the oracles that
certify them numerically: laminate constructions, brute-force envelope
minimization, and mollified recovery fields.
"""

from .energies import (
    G_density,
    G_inf_density,
    JumpDatum,
    Penalty,
    envelope_1d,
    f1d_raw,
    f_raw,
    g_lambda,
    h_lambda,
    jump_cost,
    polyconvex_H,
)
from .fields import (
    EnergyBreakdown,
    GraphScene,
    GridField,
    JumpSegment,
    PolyCell,
    SceneValidationError,
    energy_F_lambda,
    energy_G,
    energy_h_lambda,
    limit_energy,
    load_scene,
    rasterize,
    scene_from_dict,
    scene_to_dict,
    validate_scene,
)
from .geometry import (
    SymMat2,
    Tilt,
    UnitNormal3,
    eig_sym2,
    inverse_shape_operator,
    norm_inf,
    normal,
    rho0,
    shape_operator,
    turning_angle,
)
from .oracles import (
    EnvelopeEqualsRawError,
    FlatInputError,
    LaminateSpec,
    OracleConfig,
    build_laminate,
    convex_envelope_1d_numeric,
    laminate_oscillation,
    numeric_Q2,
    numeric_jump_cost,
    realize_laminate,
    slice_energy_bound_check,
)
from .recovery import (
    MollifierSpec,
    RecoveryReport,
    choose_epsilon,
    corrector_insertion,
    default_epsilon_ladder,
    mollify,
    recovery_experiment,
)

__version__ = "0.1.0"

"""Stochastic adaptive neural-network tracking control.

A tracking controller for control-affine plants whose feedforward model is
a small feedforward network adapted online. The weight update is a
stochastic differential law: a drift that descends a generalized internal
energy plus thermal noise whose intensity follows a temperature that
shrinks with the tracking error, all kept inside a bounded search region
by a smooth projection. The package bundles the network, the projection,
the update law, the benchmark plant, an Euler-Maruyama simulator with
Lyapunov diagnostics, and an experiment CLI.
"""

from .config import SCENARIO_LAWS, SCENARIO_NAMES, ExperimentConfig
from .diagnostics import (
    GainConditionResult,
    InfeasibleConstantsError,
    LyapunovConstants,
    escape_risk,
    gain_condition_check,
    lyapunov_value,
)
from .network import (
    ACTIVATIONS,
    ActivationBounds,
    Network,
    NetworkEvaluator,
    NetworkShape,
    he_init,
    load_theta,
    measure_activation_bounds,
    save_theta,
    swish,
    swish_prime,
    swish_second,
)
from .numerics import RandomSource, finite_diff_jacobian, rms_over_log, wiener_increment
from .plant import (
    STATE_DIM,
    X0_DEFAULT,
    DesiredTrajectory,
    PlantModel,
    SingularEffectivenessError,
    control_input,
    desired,
    plant_drift,
    right_pseudo_inverse,
    tracking_error,
)
from .projection import ConvexBall, Membership, ProjectionDomainError
from .sim import (
    CSV_COLUMNS,
    EARLY_WINDOW,
    LATE_WINDOW,
    DivergenceError,
    MetricsReport,
    SimState,
    TrajectoryLog,
    evaluate_state,
    metrics,
    run,
    step,
    write_csv,
)
from .thermo import (
    Gains,
    TemperatureLaw,
    diffusion_coefficient,
    drift,
    internal_energy,
    validate_custom_law,
)

__version__ = "0.1.0"

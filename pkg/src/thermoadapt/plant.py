"""Benchmark plant, desired trajectory, and the compensating controller.

The plant is a five-state system ``dx/dt = f(x) + g(x) u`` with identity
control effectiveness. The drift ``f`` is known only to the integrator and
the error metrics; the controller and the weight update see the state
alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .network import Network
from .thermo import Gains, TemperatureLaw

__all__ = [
    "STATE_DIM",
    "X0_DEFAULT",
    "PlantModel",
    "DesiredTrajectory",
    "SingularEffectivenessError",
    "plant_drift",
    "desired",
    "tracking_error",
    "right_pseudo_inverse",
    "control_input",
]

STATE_DIM = 5

X0_DEFAULT = np.array([0.0, -1.0, 3.0, -3.0, 3.0])


class SingularEffectivenessError(ValueError):
    """Control effectiveness matrix is not full row rank."""


def plant_drift(x: np.ndarray) -> np.ndarray:
    """Drift field of the five-state benchmark plant."""
    x = np.asarray(x, dtype=float)
    if x.shape != (STATE_DIM,):
        raise ValueError(f"state has shape {x.shape}, expected ({STATE_DIM},)")
    x1, x2, x3, x4, x5 = x
    return np.array(
        [
            5.0 * np.tanh(50.0 * x1) * x5 * x5 + np.cos(x4),
            np.cos(20.0 * x3) + 2.0 * np.sin(x1 * x2) * np.sin(x4 * x5),
            10.0 * np.exp(-25.0 * x4 * x4) * x3 - 0.1 * x3**3,
            2.0 * np.sin(15.0 * (x1 * x5 - x2 * x3)),
            -x1 * x5 + 5.0 * np.tanh(20.0 * (x2 - x4)),
        ]
    )


def desired(t: float) -> tuple[np.ndarray, np.ndarray]:
    """Desired trajectory and its time derivative at time ``t``.

    Components are sums of low-frequency sinusoids; the derivative is the
    hand-differentiated closed form (checked against finite differences in
    the tests).
    """
    value = np.array(
        [
            np.sin(2.0 * t),
            -np.cos(t),
            np.sin(3.0 * t) + np.cos(-2.0 * t),
            np.sin(t) - np.cos(-0.5 * t),
            np.sin(-t),
        ]
    )
    rate = np.array(
        [
            2.0 * np.cos(2.0 * t),
            np.sin(t),
            3.0 * np.cos(3.0 * t) - 2.0 * np.sin(2.0 * t),
            np.cos(t) + 0.5 * np.sin(0.5 * t),
            -np.cos(t),
        ]
    )
    return value, rate


@dataclass(frozen=True)
class DesiredTrajectory:
    """The closed-form reference with per-component amplitude bounds."""

    component_bounds: tuple[float, ...] = (1.0, 1.0, 2.0, 2.0, 1.0)
    rate_component_bounds: tuple[float, ...] = (2.0, 1.0, 5.0, 1.5, 1.0)

    def value(self, t: float) -> np.ndarray:
        return desired(t)[0]

    def rate(self, t: float) -> np.ndarray:
        return desired(t)[1]

    @property
    def norm_bound(self) -> float:
        return float(np.linalg.norm(self.component_bounds))

    @property
    def rate_norm_bound(self) -> float:
        return float(np.linalg.norm(self.rate_component_bounds))


@dataclass(frozen=True)
class PlantModel:
    """Benchmark plant bundle: dimension, drift, and effectiveness.

    ``effectiveness=None`` means the identity matrix (the benchmark case,
    handled without a pseudo-inverse).
    """

    dimension: int = STATE_DIM
    drift: Callable[[np.ndarray], np.ndarray] = field(default=plant_drift)
    effectiveness: Optional[np.ndarray] = None


def tracking_error(x: np.ndarray, t: float) -> np.ndarray:
    """Deviation of the state from the desired trajectory."""
    return np.asarray(x, dtype=float) - desired(t)[0]


def right_pseudo_inverse(g: np.ndarray) -> np.ndarray:
    """Right pseudo-inverse ``g.T (g g.T)^-1`` of a full-row-rank matrix."""
    g = np.asarray(g, dtype=float)
    gram = g @ g.T
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularEffectivenessError(
            f"effectiveness matrix is rank deficient (gram condition {cond:.3g})"
        )
    return g.T @ np.linalg.inv(gram)


def control_input(
    net: Network,
    law: TemperatureLaw,
    gains: Gains,
    x: np.ndarray,
    theta_hat: np.ndarray,
    t: float,
    effectiveness: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Tracking controller with feedforward, feedback, and thermal compensation.

    Follows the desired rate, cancels the learned model, applies
    proportional error feedback, and subtracts the temperature-coupling
    term that offsets the stochastic exploration. With identity
    effectiveness the pseudo-inverse is skipped.
    """
    x = np.asarray(x, dtype=float)
    _, xd_rate = desired(t)
    e = tracking_error(x, t)
    phi = net.with_theta(theta_hat).forward(x)
    mu = law.mu(x, theta_hat, e)
    v = xd_rate - gains.control_gain * e - phi - gains.thermal_coeff * mu
    if effectiveness is None:
        return v
    return right_pseudo_inverse(effectiveness) @ v

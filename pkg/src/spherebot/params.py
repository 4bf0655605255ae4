"""Physical parameters of the spherical robot and its actuators, plus the
three benchmark parameter sets (inner cart, balanced gyroscopic mechanism,
three reaction-wheel pairs) and the controller-side perturbation used in the
robustness studies.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import ConfigError


class ActuatorClass(Enum):
    BARYCENTRIC_CART = "cart"
    BALANCED_GYROSCOPIC = "gyro"
    REACTION_WHEEL_PAIR = "wheel"


@dataclass(frozen=True)
class ActuatorParams:
    """One actuator unit.

    mass      kg
    inertia   (3, 3) about its own center of mass, in the actuator frame
              (reaction wheels: diag(Ip, Ip, Iz), spin axis is the third axis)
    offset    m, distance of the actuator center of mass from the sphere
              center (0 for balanced actuators; for a wheel pair this is the
              mounting distance of each wheel along the spin axis)
    klass     actuator family
    axis      unit spin axis in the sphere body frame (wheel pairs only)
    """

    mass: float
    inertia: np.ndarray
    offset: float
    klass: ActuatorClass
    axis: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float))
        if self.axis is not None:
            a = np.asarray(self.axis, dtype=float)
            n = np.linalg.norm(a)
            if abs(n - 1.0) > 1e-9:
                a = a / n
            object.__setattr__(self, "axis", a)

    def validate(self, radius):
        if self.mass <= 0:
            raise ConfigError("actuator mass must be positive")
        I = self.inertia
        if I.shape != (3, 3) or np.linalg.norm(I - I.T) > 1e-12:
            raise ConfigError("actuator inertia must be symmetric 3x3")
        if np.min(np.linalg.eigvalsh(I)) <= 0:
            raise ConfigError("actuator inertia must be positive definite")
        if self.klass is ActuatorClass.BARYCENTRIC_CART:
            if not 0 < self.offset < radius:
                raise ConfigError("cart offset l_i must satisfy 0 < l_i < r")
        if self.klass is ActuatorClass.REACTION_WHEEL_PAIR:
            if self.axis is None:
                raise ConfigError("reaction wheel pair needs an axis")
            if abs(I[0, 0] - I[1, 1]) > 1e-12:
                raise ConfigError("wheel inertia must be symmetric about its spin axis")

    @property
    def spin_inertia(self):
        """Inertia about the spin axis (wheel pairs)."""
        return float(self.inertia[2, 2])


def incline_gravity(beta_rad, direction="y"):
    """Unit vector e_g for a plane inclined by ``beta`` (gravity is -g e_g in
    the surface frame). A y-direction incline tilts gravity toward +y.
    """
    s, c = math.sin(beta_rad), math.cos(beta_rad)
    if direction == "y":
        return np.array([0.0, -s, c])
    if direction == "x":
        return np.array([-s, 0.0, c])
    raise ConfigError(f"unknown incline direction {direction!r}")


@dataclass(frozen=True)
class RobotParams:
    """Sphere shell plus actuator set, and the gravity directions.

    e_g   true gravity direction (unit, surface frame; gravity force -g e_g)
    e_g0  gravity direction the controller believes in (nominal incline)
    """

    m_b: float
    inertia_b: np.ndarray
    radius: float
    actuators: tuple
    gravity: float = 9.81
    e_g: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    e_g0: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        object.__setattr__(self, "inertia_b", np.asarray(self.inertia_b, dtype=float))
        object.__setattr__(self, "actuators", tuple(self.actuators))
        for name in ("e_g", "e_g0"):
            v = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, v / np.linalg.norm(v))

    def validate(self):
        if self.radius <= 0:
            raise ConfigError("r: sphere radius must be positive")
        if self.m_b <= 0:
            raise ConfigError("m_b: shell mass must be positive")
        if self.gravity <= 0:
            raise ConfigError("g: gravity must be positive")
        I = self.inertia_b
        if I.shape != (3, 3) or np.linalg.norm(I - I.T) > 1e-12:
            raise ConfigError("I_b: shell inertia must be symmetric 3x3")
        if np.min(np.linalg.eigvalsh(I)) <= 0:
            raise ConfigError("I_b: shell inertia must be positive definite")
        if not self.actuators:
            raise ConfigError("actuators: at least one actuator required")
        kinds = {a.klass for a in self.actuators}
        if len(kinds) > 1:
            raise ConfigError("actuators: mixing actuator classes is not supported")
        for a in self.actuators:
            a.validate(self.radius)
        return self

    @property
    def actuator_class(self):
        return self.actuators[0].klass

    @property
    def m_a(self):
        """Total actuator mass (always derived, never stored)."""
        return float(sum(a.mass for a in self.actuators))

    @property
    def total_mass(self):
        return self.m_b + self.m_a

    def with_incline(self, beta_rad, nominal_beta_rad=None, direction="y"):
        e_g = incline_gravity(beta_rad, direction)
        e_g0 = incline_gravity(
            beta_rad if nominal_beta_rad is None else nominal_beta_rad, direction
        )
        return replace(self, e_g=e_g, e_g0=e_g0)


def perturbed(params: RobotParams, fraction: float, rng: np.random.Generator) -> RobotParams:
    """Controller-side parameter set: every mass and inertia diagonal entry
    scaled by (1 + u), u uniform in [-fraction, fraction]. Off-diagonals stay
    zero so the perturbed tensors remain physical. Draw order is fixed
    (shell mass, shell inertia diagonal, then per actuator mass + diagonal)
    so a seed pins the draws.
    """
    if not 0 <= fraction < 1:
        raise ConfigError("perturbation fraction must lie in [0, 1)")

    def scale(x):
        return x * (1.0 + rng.uniform(-fraction, fraction))

    m_b = scale(params.m_b)
    ib = np.diag([scale(d) for d in np.diag(params.inertia_b)])
    acts = []
    for a in params.actuators:
        m = scale(a.mass)
        if a.klass is ActuatorClass.REACTION_WHEEL_PAIR:
            # keep the axis symmetry Ip, Ip, Iz
            ip = scale(a.inertia[0, 0])
            iz = scale(a.inertia[2, 2])
            ii = np.diag([ip, ip, iz])
        else:
            ii = np.diag([scale(d) for d in np.diag(a.inertia)])
        acts.append(replace(a, mass=m, inertia=ii))
    return replace(params, m_b=m_b, inertia_b=ib, actuators=tuple(acts))


# ---------------------------------------------------------------------------
# Benchmark parameter sets (desk-scale plastic shell, 3 mm, density 850 kg/m3)

SHELL_MASS = 1.00
SHELL_INERTIA = np.diag([0.0213, 0.0205, 0.0228])
SHELL_RADIUS = 0.18

CART_MASS = 3.28
CART_INERTIA = np.diag([0.0353, 0.0378, 0.0368])
# Offset back-solved so the maximum equilibrium incline is exactly 25 deg:
# l = sin(25 deg) (m_b + m_i) r / m_i  ~ 0.0993 m
CART_MAX_INCLINE_DEG = 25.0
CART_OFFSET = math.sin(math.radians(CART_MAX_INCLINE_DEG)) * (SHELL_MASS + CART_MASS) * SHELL_RADIUS / CART_MASS

GYRO_MASS = 4.58
GYRO_INERTIA = np.diag([0.0535, 0.0516, 0.0480])

WHEEL_MASSES = (5.78, 4.21, 4.91)
WHEEL_INERTIAS = (
    np.diag([0.0105, 0.0105, 0.0204]),
    np.diag([0.0070, 0.0070, 0.0138]),
    np.diag([0.0086, 0.0086, 0.0169]),
)
WHEEL_OFFSET = 0.11
WHEEL_AXES = (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]))
# Remaining mechanism structure, rigidly attached and balanced; folded into
# the shell mass/inertia.
WHEEL_FRAME_MASS = 4.337
WHEEL_FRAME_INERTIA = np.diag([0.0166, 0.0195, 0.0053])


def cart_robot(offset=None) -> RobotParams:
    """Inner-cart (hamster ball) robot."""
    act = ActuatorParams(
        mass=CART_MASS,
        inertia=CART_INERTIA,
        offset=CART_OFFSET if offset is None else offset,
        klass=ActuatorClass.BARYCENTRIC_CART,
    )
    return RobotParams(SHELL_MASS, SHELL_INERTIA, SHELL_RADIUS, (act,)).validate()


def gyro_robot() -> RobotParams:
    """Balanced gyroscopic-moment robot (actuator center of mass at the
    sphere center, full 3-axis moment control)."""
    act = ActuatorParams(
        mass=GYRO_MASS,
        inertia=GYRO_INERTIA,
        offset=0.0,
        klass=ActuatorClass.BALANCED_GYROSCOPIC,
    )
    return RobotParams(SHELL_MASS, SHELL_INERTIA, SHELL_RADIUS, (act,)).validate()


def wheel_robot() -> RobotParams:
    """Three balanced reaction-wheel pairs on orthogonal axes; the wheel
    support structure rides rigidly with the shell."""
    acts = tuple(
        ActuatorParams(
            mass=m,
            inertia=I,
            offset=WHEEL_OFFSET,
            klass=ActuatorClass.REACTION_WHEEL_PAIR,
            axis=ax,
        )
        for m, I, ax in zip(WHEEL_MASSES, WHEEL_INERTIAS, WHEEL_AXES)
    )
    return RobotParams(
        SHELL_MASS + WHEEL_FRAME_MASS,
        SHELL_INERTIA + WHEEL_FRAME_INERTIA,
        SHELL_RADIUS,
        acts,
    ).validate()


ROBOT_PRESETS = {"cart": cart_robot, "gyro": gyro_robot, "wheels": wheel_robot}


@dataclass(frozen=True)
class ControllerGains:
    """Split PID gains; the derived scalars feed the Lyapunov certificate."""

    k_p: float
    k_d: float
    k_I: float

    def validate(self):
        if min(self.k_p, self.k_d, self.k_I) <= 0:
            raise ConfigError("gains k_p, k_d, k_I must all be positive")
        return self

    # coupling weights used by the certificate ("alpha, beta, gamma, sigma")
    @property
    def alpha(self):
        return self.k_I / self.k_d**2

    @property
    def beta(self):
        return self.k_I / self.k_d

    @property
    def gamma(self):
        return self.k_I * (self.k_I + self.k_p * self.k_d) / self.k_d**2

    def sigma(self, mu_max):
        return 2.0 * self.k_I / mu_max

"""System state containers and packing helpers."""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AxisViolation, ConfigError
from .params import ActuatorClass, RobotParams
from .so3 import E3, is_rotation

CONTACT_TOL = 1e-6
WHEEL_AXIS_TOL = 1e-8


@dataclass
class ActuatorState:
    """Attitude R_i and spatial angular velocity of one actuator.

    For reaction-wheel pairs the authoritative coordinates are the spin angle
    and spin rate; attitude/velocity are reconstructed views kept in sync by
    the simulator.
    """

    attitude: np.ndarray
    omega: np.ndarray
    wheel_angle: float = 0.0
    wheel_speed: float = 0.0

    def __post_init__(self):
        self.attitude = np.asarray(self.attitude, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)


@dataclass
class SystemState:
    """Sphere pose/velocity, per-actuator states, and the controller
    integrator state o_I."""

    position: np.ndarray
    attitude: np.ndarray
    omega: np.ndarray
    actuators: list
    o_I: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.attitude = np.asarray(self.attitude, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)
        self.o_I = np.asarray(self.o_I, dtype=float)

    def copy(self):
        return SystemState(
            self.position.copy(),
            self.attitude.copy(),
            self.omega.copy(),
            [replace(a, attitude=a.attitude.copy(), omega=a.omega.copy()) for a in self.actuators],
            self.o_I.copy(),
        )

    def validate(self, params: RobotParams):
        if abs(self.position[2] - params.radius) > CONTACT_TOL:
            raise ConfigError("state position must keep e3 . o = r (contact)")
        if not is_rotation(self.attitude):
            raise ConfigError("sphere attitude is not a rotation matrix")
        if len(self.actuators) != len(params.actuators):
            raise ConfigError("actuator state count does not match params")
        for st, ap in zip(self.actuators, params.actuators):
            if not is_rotation(st.attitude):
                raise ConfigError("actuator attitude is not a rotation matrix")
            if ap.klass is ActuatorClass.REACTION_WHEEL_PAIR:
                rel = self.attitude.T @ (st.omega - self.omega)
                off_axis = np.linalg.norm(np.cross(rel, ap.axis))
                if off_axis > WHEEL_AXIS_TOL:
                    raise AxisViolation(
                        f"wheel relative velocity off axis by {off_axis:.2e}"
                    )
        return self


def wheel_attitude(R, axis, angle, base=None):
    """Attitude of a wheel spun by ``angle`` about its body-frame ``axis``.

    The wheel frame's third axis is the spin axis: R_i = R B exp(angle K3)
    where B maps e3 to ``axis``.
    """
    from .so3 import exp_so3, hat

    if base is None:
        base = rotation_to(axis)
    return R @ base @ exp_so3(np.array([0.0, 0.0, angle]))


def rotation_to(axis):
    """Any rotation mapping e3 to ``axis`` (deterministic choice)."""
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    v = np.cross(E3, a)
    c = float(E3 @ a)
    if np.linalg.norm(v) < 1e-12:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    from .so3 import hat

    K = hat(v)
    return np.eye(3) + K + K @ K / (1.0 + c)


def initial_state(params: RobotParams, position_xy=(0.0, 0.0), omega=(0.0, 0.0, 0.0),
                  actuator_omegas=None, wheel_speeds=None) -> SystemState:
    """Build a valid initial state: sphere at the given planar position,
    all attitudes identity, wheels spun from wheel_speeds."""
    o = np.array([position_xy[0], position_xy[1], params.radius])
    R = np.eye(3)
    w = np.asarray(omega, dtype=float)
    acts = []
    for i, ap in enumerate(params.actuators):
        if ap.klass is ActuatorClass.REACTION_WHEEL_PAIR:
            s = 0.0 if wheel_speeds is None else float(wheel_speeds[i])
            wi = w + s * (R @ ap.axis)
            acts.append(ActuatorState(wheel_attitude(R, ap.axis, 0.0), wi,
                                      wheel_angle=0.0, wheel_speed=s))
        else:
            wi = np.zeros(3) if actuator_omegas is None else np.asarray(actuator_omegas[i], dtype=float)
            acts.append(ActuatorState(np.eye(3), wi))
    return SystemState(o, R, w, acts).validate(params)


@dataclass(frozen=True)
class Wrench:
    """Contact force and moment about the sphere's geometric center."""

    force: np.ndarray
    moment: np.ndarray
    contact_lost: bool = False

    @property
    def normal_force(self):
        return float(self.force @ E3)

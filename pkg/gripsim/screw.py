"""Statics and quasi-static stepping of the translation/rotation switching
screw drive.

The drive shaft is threaded into gear 1 and clamped by a preloaded
slider. Under a light axial load the slider holds the shaft still and
the motor screws it forward (Translation); once the load needs more
thread torque than the slider friction can supply, the shaft slips in
the slider and turns with gear 1 instead (Rotation).
"""

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .utils import InvalidParameters, StallError, require

logger = logging.getLogger(__name__)


class Mode(enum.Enum):
    TRANSLATION = 'Translation'
    ROTATION = 'Rotation'

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ScrewDriveParams:
    """Geometry, friction, preload and motor limits of the drive.

    Lengths in mm, angles in rad, torques in N·mm. ``kinetic_ratio``
    scales the slider friction once it slips, ``max_step`` bounds the
    motor increment of a single :func:`step`.
    """
    r_g1: float = 12.0
    r_g2: float = 21.0
    theta_th: float = math.radians(20.0)
    mu_st: float = 0.3
    tau_pre_max: float = 90.0
    tau_m_max: float = 250.0
    kinetic_ratio: float = 1.0
    max_step: float = 0.01

    def __post_init__(self):
        require(self.r_g1 > 0 and self.r_g2 > 0,
                "gear radii must be positive, got r_g1={} r_g2={}",
                self.r_g1, self.r_g2)
        require(0 < self.theta_th < math.pi / 2,
                "lead angle must lie in (0, pi/2), got {}", self.theta_th)
        require(self.mu_st >= 0, "mu_st must be >= 0, got {}", self.mu_st)
        require(self.tau_pre_max >= 0,
                "tau_pre_max must be >= 0, got {}", self.tau_pre_max)
        require(self.tau_m_max > 0,
                "tau_m_max must be positive, got {}", self.tau_m_max)
        require(0 < self.kinetic_ratio <= 1,
                "kinetic_ratio must lie in (0, 1], got {}",
                self.kinetic_ratio)
        require(self.max_step > 0,
                "max_step must be positive, got {}", self.max_step)

    @property
    def gear_ratio(self):
        """Gear-1 rotation per unit motor rotation, r_g2/r_g1."""
        return self.r_g2 / self.r_g1

    @property
    def lead(self):
        """Shaft travel per unit motor rotation in Translation (mm/rad)."""
        return self.r_g2 * math.tan(self.theta_th)


@dataclass(frozen=True)
class MechanismState:
    mode: Mode = Mode.TRANSLATION
    theta_m: float = 0.0
    x_shaft: float = 0.0
    theta_sh: float = 0.0
    f_ex: float = 0.0
    tau_m: float = 0.0


@dataclass(frozen=True)
class Check:
    """One design condition: whether it holds and by how much."""
    name: str
    passed: bool
    margin: float
    detail: str = ''


@dataclass(frozen=True)
class DesignReport:
    checks: tuple
    load_window: tuple

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    def __getitem__(self, name):
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def failures(self):
        return [check for check in self.checks if not check.passed]


# Load models. ``force`` is the axial load at the shaft tip, positive when
# it resists forward (+x) travel. ``limit`` returns the position past
# which the load is rigid for the given travel direction, or None.

class LoadModel:
    kind = 'load'

    def force(self, x):
        raise NotImplementedError

    def limit(self, direction):
        return None

    def blocks(self, x, direction):
        """True if travel in ``direction`` from ``x`` is impossible."""
        stop = self.limit(direction)
        return stop is not None and (x - stop) * direction >= 0

    def crossing(self, x0, x1, level):
        """First position between ``x0`` and ``x1`` where ``|force|``
        reaches ``level``, or None."""
        if abs(self.force(x0)) >= level:
            return x0
        if abs(self.force(x1)) < level:
            return None
        lo, hi = min(x0, x1), max(x0, x1)
        return brentq(lambda x: abs(self.force(x)) - level, lo, hi,
                      xtol=1e-13, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class Free(LoadModel):
    kind = 'free'

    def force(self, x):
        return 0.0

    def crossing(self, x0, x1, level):
        return x0 if level <= 0 else None


@dataclass(frozen=True)
class LinearSpring(LoadModel):
    """A spring gauge: ``f = stiffness * (x - rest)``."""
    stiffness: float
    rest: float = 0.0
    kind = 'linear_spring'

    def __post_init__(self):
        require(self.stiffness >= 0,
                "spring stiffness must be >= 0, got {}", self.stiffness)

    def force(self, x):
        return self.stiffness * (x - self.rest)

    def crossing(self, x0, x1, level):
        if abs(self.force(x0)) >= level:
            return x0
        if self.stiffness == 0:
            return None
        hits = [self.rest + level / self.stiffness,
                self.rest - level / self.stiffness]
        lo, hi = min(x0, x1), max(x0, x1)
        hits = [x for x in hits if lo <= x <= hi]
        if not hits:
            return None
        return min(hits, key=lambda x: abs(x - x0))


@dataclass(frozen=True)
class Constant(LoadModel):
    value: float = 0.0
    kind = 'constant'

    def force(self, x):
        return self.value

    def crossing(self, x0, x1, level):
        return x0 if abs(self.value) >= level else None


@dataclass(frozen=True)
class HardStop(LoadModel):
    """Rigid past ``position`` for travel in ``direction`` (+1 or -1);
    ``base`` gives the load everywhere else."""
    position: float
    direction: int = 1
    base: LoadModel = field(default_factory=Free)
    kind = 'hard_stop'

    def __post_init__(self):
        require(self.direction in (1, -1),
                "stop direction must be +1 or -1, got {}", self.direction)

    def force(self, x):
        return self.base.force(x)

    def limit(self, direction):
        if direction == self.direction:
            return self.position
        return self.base.limit(direction)

    def crossing(self, x0, x1, level):
        return self.base.crossing(x0, x1, level)


@dataclass(frozen=True)
class Tabulated(LoadModel):
    """Load interpolated from a monotone ``(x, f)`` table.

    With ``rigid_end`` the load cannot be pushed past the last table
    position (used for a finger that wrapped fully around an object).
    """
    x: tuple
    f: tuple
    rigid_end: bool = False
    kind = 'tabulated'

    def __post_init__(self):
        require(len(self.x) == len(self.f) and len(self.x) >= 2,
                "a load table needs two or more matching points")
        require(bool(np.all(np.diff(self.x) >= 0)),
                "load table positions must be non-decreasing")

    def force(self, x):
        return float(np.interp(x, self.x, self.f))

    def limit(self, direction):
        if self.rigid_end and direction > 0:
            return self.x[-1]
        return None


def input_torque(params, tau_m):
    """Torque delivered to gear 1 (and hence to the drive shaft).

    :param tau_m: motor torque (N·mm).
    :return: ``r_g1 * tau_m / r_g2``.
    """
    return params.r_g1 * tau_m / params.r_g2


def thread_statics(f_n, f_fri, theta_th, r_g1):
    """Thrust and torque on the drive shaft from the aggregated thread
    contact forces.

    :param f_n: total normal force on the thread (N), ``>= 0``.
    :param f_fri: total tangential (friction) force on the thread (N).
    :return: ``(f_sh, tau_sh)`` in N and N·mm.
    """
    require(f_n >= 0, "normal force must be >= 0, got {}", f_n)
    c, s = math.cos(theta_th), math.sin(theta_th)
    f_sh = f_n * c - f_fri * s
    tau_sh = r_g1 * (f_n * s + f_fri * c)
    return f_sh, tau_sh


def switching_threshold(params):
    """External load at which the slider slips and translation yields
    to rotation (N)."""
    tan_th = math.tan(params.theta_th)
    require(tan_th > 0, "lead angle must be positive")
    return params.tau_pre_max / (params.r_g1 * tan_th)


def required_preload_torque(params, f_ex):
    """Slider friction torque needed to keep the shaft from turning
    under ``f_ex`` (N·mm)."""
    return params.r_g1 * math.tan(params.theta_th) * f_ex


def stall_load(params):
    """Largest load the motor can push in Translation (N)."""
    return params.tau_m_max / params.lead


def validate_design(params):
    """Check the switching conditions of a drive.

    * ``lead_angle``: the thread does not self-lock, ``tan(theta_th) <
      1/mu_st``; margin ``1/mu_st - tan(theta_th)`` (``inf`` when
      frictionless).
    * ``motor_bound``: the motor can make the slider slip,
      ``tau_pre_max <= (r_g1/r_g2) * tau_m_max``; margin is the slack in
      N·mm.
    * ``translation_window``: a positive load window ``(0, f_ex_sw)``
      exists in which the drive translates; margin is ``f_ex_sw``.

    :return: a :class:`DesignReport`; failures are entries, not errors.
    """
    tan_th = math.tan(params.theta_th)
    if params.mu_st == 0:
        lead_margin = math.inf
    else:
        lead_margin = 1.0 / params.mu_st - tan_th
    bound = params.r_g1 / params.r_g2 * params.tau_m_max
    f_sw = switching_threshold(params)
    checks = (
        Check('lead_angle', lead_margin > 0, lead_margin,
              'tan(theta_th) < 1/mu_st'),
        Check('motor_bound', params.tau_pre_max <= bound,
              bound - params.tau_pre_max,
              'tau_pre_max <= (r_g1/r_g2) tau_m_max'),
        Check('translation_window', f_sw > 0, f_sw,
              'translation under loads below f_ex_sw'),
    )
    return DesignReport(checks=checks, load_window=(0.0, f_sw))


def preload_from_slit(d_slit, table=None):
    """Slider preload for a slit width, from a calibration table.

    :param table: sequence of ``(d_slit_mm, tau_pre_max)`` pairs with
        increasing widths and non-decreasing preload. Defaults to
        :data:`SLIT_CALIBRATION`.
    """
    if table is None:
        table = SLIT_CALIBRATION
    widths = np.array([row[0] for row in table], dtype=float)
    torques = np.array([row[1] for row in table], dtype=float)
    require(len(widths) >= 2, "a slit calibration needs two or more rows")
    require(bool(np.all(np.diff(widths) > 0)),
            "slit widths must be strictly increasing")
    require(bool(np.all(np.diff(torques) >= 0)),
            "preload must not decrease with slit width")
    require(widths[0] <= d_slit <= widths[-1],
            "slit width {} outside the calibrated range [{}, {}]",
            d_slit, widths[0], widths[-1])
    return float(np.interp(d_slit, widths, torques))


# Slit widths of the preload experiments; 0 mm leaves the shaft unclamped
# and 3 mm exceeds what the default motor can slip.
SLIT_CALIBRATION = ((0.0, 0.0), (1.0, 30.0), (1.5, 60.0), (2.0, 90.0),
                    (3.0, 200.0))


# Relative slack on the switching comparison; a shaft stopped exactly at
# the threshold must not creep forward on rounding.
_RTOL = 1e-9


def _motor_torque(params, mode, f_ex):
    if mode is Mode.TRANSLATION:
        return params.lead * abs(f_ex)
    return params.gear_ratio * params.kinetic_ratio * params.tau_pre_max


def _rotate(params, state, load, d_theta_m, f_hold=None):
    tau = _motor_torque(params, Mode.ROTATION, 0.0)
    # the slider starts slipping against the static preload
    onset = params.gear_ratio * params.tau_pre_max \
        if state.mode is Mode.TRANSLATION else tau
    if onset > params.tau_m_max:
        raise StallError(
            "motor stalls: slipping the slider needs {:.6g} N·mm, motor "
            "gives {:.6g} N·mm".format(onset, params.tau_m_max),
            state=state, tau_required=onset)
    f_ex = load.force(state.x_shaft) if f_hold is None else f_hold
    return replace(state,
                   mode=Mode.ROTATION,
                   theta_m=state.theta_m + d_theta_m,
                   theta_sh=state.theta_sh + params.gear_ratio * d_theta_m,
                   f_ex=f_ex,
                   tau_m=tau)


def _stall(params, state, x, f_ex):
    tau = params.lead * abs(f_ex)
    stalled = replace(state, x_shaft=x, f_ex=f_ex, tau_m=params.tau_m_max)
    raise StallError(
        "motor stalls at x_shaft={:.6g} mm: the load needs {:.6g} N·mm "
        "before the slider slips".format(x, tau),
        state=stalled, tau_required=tau)


def _translate(params, state, load, d_theta_m, f_sw):
    direction = 1 if d_theta_m > 0 else -1
    x0 = state.x_shaft
    x1 = x0 + params.lead * d_theta_m
    stop = load.limit(direction)
    blocked = stop is not None and (x1 - stop) * direction > 0
    x_end = stop if blocked else x1
    f_stall = stall_load(params)
    level = min(f_sw, f_stall)

    x_cross = load.crossing(x0, x_end, level)
    if x_cross is not None:
        f_cross = math.copysign(level, load.force(x_cross))
        if f_stall < f_sw:
            _stall(params, state, x_cross, f_cross)
        logger.info("translation -> rotation at x_shaft=%.6g mm, "
                    "f_ex=%.6g N", x_cross, f_cross)
        x_end, f_end = x_cross, f_cross
    else:
        f_end = load.force(x_end)
        if blocked:
            logger.info("shaft reaches a rigid stop at x_shaft=%.6g mm",
                        x_end)
    used = d_theta_m if x_end == x1 else (x_end - x0) / params.lead
    return replace(state,
                   mode=Mode.TRANSLATION,
                   theta_m=state.theta_m + used,
                   x_shaft=x_end,
                   f_ex=f_end,
                   tau_m=params.lead * abs(f_end))


def step(params, state, load, d_theta_m):
    """Advance the drive by one motor increment.

    The drive translates while the load at the shaft is below the
    switching threshold ``f_ex_sw`` (below ``kinetic_ratio * f_ex_sw``
    when coming back from Rotation). A step never mixes the two motions:
    when the load reaches the threshold, or the shaft reaches a rigid
    stop, inside the increment, the step ends there and the returned
    ``theta_m`` shows how much of the increment was used. Otherwise the
    shaft turns with gear 1 and holds its axial position.

    :param d_theta_m: signed motor increment (rad), ``|d_theta_m| <=
        params.max_step``.
    :return: the new :class:`MechanismState`.
    :raise StallError: if the motor cannot supply the needed torque.
    """
    require(abs(d_theta_m) <= params.max_step * (1 + 1e-9),
            "motor increment {} exceeds max_step {}",
            d_theta_m, params.max_step)
    if d_theta_m == 0:
        return state
    direction = 1 if d_theta_m > 0 else -1
    f_sw = switching_threshold(params)

    if load.blocks(state.x_shaft, direction):
        if stall_load(params) < f_sw:
            _stall(params, state, state.x_shaft,
                   direction * stall_load(params))
        if state.mode is Mode.TRANSLATION:
            logger.info("shaft held at x_shaft=%.6g mm, slider slips",
                        state.x_shaft)
        return _rotate(params, state, load, d_theta_m,
                       f_hold=direction * f_sw)

    f_now = abs(load.force(state.x_shaft))
    if state.mode is Mode.ROTATION:
        translates = f_now < params.kinetic_ratio * f_sw * (1 - _RTOL)
        if translates:
            logger.info("rotation -> translation at x_shaft=%.6g mm",
                        state.x_shaft)
    else:
        translates = f_now < f_sw * (1 - _RTOL)
    if not translates:
        return _rotate(params, state, load, d_theta_m)
    return _translate(params, state, load, d_theta_m, f_sw)


class ScrewDrive:
    """A drive that keeps its state and the trace of every step.

    :param params: :class:`ScrewDriveParams`, defaults if omitted.
    :param load: the :class:`LoadModel` at the shaft tip, :class:`Free`
        if omitted.
    :param state: initial :class:`MechanismState`.

    Example ::

        drive = ScrewDrive(load=LinearSpring(stiffness=2.0))
        drive.rotate(3.0)
        peak = peak_load(drive.trace)
    """

    def __init__(self, params=None, load=None, state=None):
        self.params = params if params is not None else ScrewDriveParams()
        self.load = load if load is not None else Free()
        self.state = state if state is not None else MechanismState()
        self.trace = [self.state]

    def set_load(self, load):
        self.load = load

    def step(self, d_theta_m):
        """Run one :func:`step` and record it."""
        try:
            self.state = step(self.params, self.state, self.load, d_theta_m)
        except StallError as error:
            error.trace = list(self.trace)
            raise
        self.trace.append(self.state)
        return self.state

    def rotate(self, angle, max_step=None):
        """Turn the motor by ``angle`` in increments no larger than
        ``max_step`` (``params.max_step`` by default). A step cut short
        at a mode switch is followed by the rest of its increment."""
        if max_step is None:
            max_step = self.params.max_step
        max_step = min(max_step, self.params.max_step)
        target = self.state.theta_m + angle
        tolerance = 1e-12 * max(1.0, abs(angle))
        while abs(target - self.state.theta_m) > tolerance:
            remaining = target - self.state.theta_m
            self.step(math.copysign(min(abs(remaining), max_step),
                                    remaining))
        return self.state


def motor_sweep(params, load, total_angle, d_theta_m=None, state=None):
    """States of a drive turned through ``total_angle``, initial state
    included. A stall raises :class:`StallError` whose ``trace`` holds
    the states reached."""
    drive = ScrewDrive(params, load, state)
    drive.rotate(total_angle, d_theta_m)
    return drive.trace


def peak_load(trace):
    """Largest ``|f_ex|`` along a trace (N)."""
    if not trace:
        raise InvalidParameters("empty trace")
    return max(abs(state.f_ex) for state in trace)

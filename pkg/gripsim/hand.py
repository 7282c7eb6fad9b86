"""Grasp and release with a single motor.

Forward rotation screws the drive shaft in and bends the fingers. When
the motor torque reaches ``tau_th`` the motor stops and the ratchet
lock holds the posture. Reversing the motor pulls the shaft back until
the lock catches it; the load then climbs to the switching threshold,
the shaft starts to turn instead of translating, and its roll unlocks
the ratchet. With the lock open the load collapses, the drive falls
back to translation and the shaft returns to the origin.
"""

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import ratchet
from .finger import (FingerParams, FingerPosture, loading_table,
                     shaft_insertion, solve_posture)
from .grasp import Termination, wrap_simulate
from .ratchet import LockMode, LockParams
from .screw import (Check, DesignReport, HardStop, MechanismState, Mode,
                    ScrewDrive, ScrewDriveParams, Tabulated,
                    switching_threshold, validate_design)
from .utils import (DesignInfeasible, InfeasibleCycle, InvalidParameters,
                    StallError, require)

logger = logging.getLogger(__name__)

STANDARD_GRAVITY = 9.80665

LOCK_ASSUMPTION = ("the lock is taken as rigid up to finger_strength; its "
                   "blocking capacity above f_ex_sw is not checked")


class Phase(enum.Enum):
    GRASP = 'Grasp'
    HOLD = 'Hold'
    RELEASE_ROTATE = 'ReleaseRotate'
    EXTEND = 'Extend'

    def __str__(self):
        return self.value


# cycle phase each feasibility check guards
CHECK_PHASES = {
    'grasp_in_translation': Phase.GRASP,
    'lock_travel': Phase.HOLD,
    'lead_angle': Phase.RELEASE_ROTATE,
    'motor_bound': Phase.RELEASE_ROTATE,
    'switch_back': Phase.EXTEND,
}


def failing_phase(report):
    """Earliest cycle phase guarded by a failing check, or None."""
    order = list(Phase)
    phases = [CHECK_PHASES[c.name] for c in report.failures()
              if c.name in CHECK_PHASES]
    return min(phases, key=order.index) if phases else None


@dataclass(frozen=True)
class HandConfig:
    """Everything a grasp/release cycle needs.

    :param tau_th: motor torque at which grasping stops (N·mm).
    :param finger_strength: force one finger withstands before breaking
        (N).
    :param motor_step: motor increment of the cycle simulation (rad).
    :param table_step: force spacing of the free-finger loading table
        (N).
    """
    trsw: ScrewDriveParams = field(default_factory=ScrewDriveParams)
    finger: FingerParams = field(default_factory=FingerParams)
    lock: LockParams = field(default_factory=LockParams)
    tau_th: float = 100.0
    finger_count: int = 3
    finger_strength: float = 104.2
    motor_step: float = 0.005
    table_step: float = 0.05

    def __post_init__(self):
        require(0 < self.tau_th < self.trsw.tau_m_max,
                "tau_th must lie in (0, tau_m_max={}), got {}",
                self.trsw.tau_m_max, self.tau_th)
        require(self.finger_count >= 1,
                "a hand needs at least one finger, got {}",
                self.finger_count)
        require(self.finger_strength > 0,
                "finger strength must be positive, got {}",
                self.finger_strength)
        require(0 < self.motor_step <= self.trsw.max_step,
                "motor step must lie in (0, {}], got {}",
                self.trsw.max_step, self.motor_step)
        require(self.table_step > 0,
                "table step must be positive, got {}", self.table_step)

    @property
    def grasp_force(self):
        """Insertion force at which the motor torque reaches ``tau_th``."""
        return self.tau_th / self.trsw.lead


@dataclass(frozen=True)
class FeasibilityReport(DesignReport):
    """:class:`~gripsim.screw.DesignReport` of a whole cycle, plus the
    assumptions the checks rely on."""
    assumptions: tuple = ()


@dataclass(frozen=True)
class CycleRecord:
    step: int
    phase: Phase
    theta_m: float
    mode: Mode
    x_shaft: float
    theta_sh: float
    f_ex: float
    lock_engaged: bool
    sum_theta: float


class CycleTrace:
    """Ordered records of a cycle."""

    COLUMNS = ('step', 'phase', 'theta_m_rad', 'mode', 'x_shaft_mm',
               'theta_sh_rad', 'f_ex_N', 'lock_engaged', 'sum_theta_rad')

    def __init__(self, records=()):
        self.records = list(records)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, index):
        return self.records[index]

    def append(self, phase, mechanism, lock, posture):
        self.records.append(CycleRecord(
            step=len(self.records), phase=phase,
            theta_m=mechanism.theta_m, mode=mechanism.mode,
            x_shaft=mechanism.x_shaft, theta_sh=mechanism.theta_sh,
            f_ex=mechanism.f_ex, lock_engaged=lock.engaged,
            sum_theta=posture.total_bend))

    def extend(self, other):
        for record in other:
            self.records.append(replace(record, step=len(self.records)))

    def phases(self):
        """Phase labels in order of appearance, without repeats."""
        labels = []
        for record in self.records:
            if not labels or labels[-1] is not record.phase:
                labels.append(record.phase)
        return labels

    def mode_transitions(self):
        return [(a.mode, b.mode) for a, b in
                zip(self.records, self.records[1:]) if a.mode is not b.mode]


@dataclass(frozen=True, eq=False)
class InsertionTable:
    """Finger response along the shaft insertion ``u = x_shaft``."""
    insertions: np.ndarray
    forces: np.ndarray
    angles: np.ndarray
    rigid_end: bool = False

    @classmethod
    def from_postures(cls, params, forces, postures, rigid_end=False):
        insertions = np.maximum.accumulate(
            [shaft_insertion(params, p) for p in postures])
        angles = np.array([p.theta_L for p in postures])
        return cls(insertions=insertions, forces=np.asarray(forces, float),
                   angles=angles, rigid_end=rigid_end)

    def load(self):
        return Tabulated(x=tuple(self.insertions), f=tuple(self.forces),
                         rigid_end=self.rigid_end)

    def posture_at(self, u):
        return FingerPosture(tuple(
            np.interp(u, self.insertions, self.angles[:, j])
            for j in range(self.angles.shape[1])))


@dataclass(frozen=True)
class CycleState:
    """Where a cycle stands: drive, lock and finger."""
    mechanism: MechanismState
    lock: ratchet.LockState
    posture: FingerPosture
    table: InsertionTable = field(repr=False)
    phase: Phase = Phase.GRASP
    wrap: object = field(default=None, repr=False)


def _force_grid(f_max, step):
    forces = np.arange(0.0, f_max, step)
    if f_max - forces[-1] < 1e-9 * max(1.0, f_max):
        forces = forces[:-1]
    return np.append(forces, f_max)


def grasp_table(config, obj=None, **solve_kwargs):
    """Finger response to insertion up to the grasp force: the free
    loading table, or the wrap trace around ``obj``."""
    f_grasp = config.grasp_force
    if obj is None:
        table = loading_table(config.finger,
                              _force_grid(f_grasp, config.table_step),
                              **solve_kwargs)
        return InsertionTable.from_postures(
            config.finger, table.forces, table.postures), None
    wrap = wrap_simulate(config.finger, obj, config.trsw, config.tau_th,
                         **solve_kwargs)
    forces = [0.0] + [s.f_tr for s in wrap.trace]
    postures = [FingerPosture.straight(config.finger.n)] + \
        [s.posture for s in wrap.trace]
    rigid = wrap.terminated_by is not Termination.TORQUE_THRESHOLD
    return InsertionTable.from_postures(config.finger, forces, postures,
                                        rigid_end=rigid), wrap


def grasp_phase(config, obj=None, strict=True, **solve_kwargs):
    """Drive the motor forward until its torque reaches ``tau_th``.

    The shaft insertion sets the finger load through the loading table
    (or the wrap around ``obj``); the lock ratchets along with the
    shaft. A finger that wraps fully cannot take more shaft, so the
    torque climbs to ``tau_th`` at once there.

    :return: ``(CycleTrace, CycleState)``.
    :raise DesignInfeasible: if ``strict`` and the drive fails
        :func:`~gripsim.screw.validate_design`.
    :raise InfeasibleCycle: if the drive slips into rotation before
        the grasp force is reached.
    """
    if strict:
        report = validate_design(config.trsw)
        if not report.passed:
            raise DesignInfeasible(
                "drive design fails: {}".format(
                    ', '.join(c.name for c in report.failures())),
                report=report)
    table, wrap = grasp_table(config, obj, **solve_kwargs)
    drive = ScrewDrive(config.trsw, table.load())
    lock = ratchet.initial_state(config.lock)
    f_grasp = config.grasp_force
    posture = table.posture_at(0.0)
    trace = CycleTrace()
    trace.append(Phase.GRASP, drive.state, lock, posture)
    logger.info("grasp: motor forward until f_ex reaches %.6g N", f_grasp)

    while drive.state.f_ex < f_grasp * (1 - 1e-12):
        if drive.load.blocks(drive.state.x_shaft, 1):
            drive.state = replace(drive.state, f_ex=f_grasp,
                                  tau_m=config.tau_th)
            trace.append(Phase.GRASP, drive.state, lock, posture)
            break
        x_before = drive.state.x_shaft
        drive.step(config.motor_step)
        if drive.state.mode is Mode.ROTATION:
            raise InfeasibleCycle(
                "drive switches to rotation at {:.6g} N, before the grasp "
                "force {:.6g} N".format(drive.state.f_ex, f_grasp),
                phase=Phase.GRASP, trace=trace.records)
        dx = drive.state.x_shaft - x_before
        if dx > 0:
            lock = ratchet.advance(config.lock, lock, dx)
        posture = table.posture_at(drive.state.x_shaft)
        trace.append(Phase.GRASP, drive.state, lock, posture)

    logger.info("grasp ends at x_shaft=%.6g mm, total bend %.6g rad",
                drive.state.x_shaft, posture.total_bend)
    state = CycleState(mechanism=drive.state, lock=lock, posture=posture,
                       table=table, phase=Phase.GRASP, wrap=wrap)
    return trace, state


def _hold_load(config, lock, table_load):
    stop = lock.s - ratchet.backlash(config.lock, lock)
    return HardStop(position=stop, direction=-1, base=table_load)


def release_phase(config, state, strict=True, max_steps=1000000):
    """Reverse the motor until the shaft is back at the origin.

    Phases: Hold (the shaft backs off until the lock catches it),
    ReleaseRotate (the blocked drive turns the shaft, whose roll opens
    the lock), Extend (translation back to the origin). A lock that is
    already open skips straight to Extend.

    :return: the :class:`CycleTrace` of the release.
    :raise InfeasibleCycle: if ``strict`` and
        :func:`check_cycle_feasibility` fails (reported in the earliest
        phase a failing check guards), or when the motor stalls
        (reported in ReleaseRotate).
    """
    report = check_cycle_feasibility(config)
    if strict and not report.passed:
        raise InfeasibleCycle(
            "cycle is infeasible: {}".format(
                ', '.join(c.name for c in report.failures())),
            report=report, phase=failing_phase(report))
    table_load = state.table.load()
    lock = state.lock
    drive = ScrewDrive(config.trsw, table_load, state.mechanism)
    posture = state.posture
    trace = CycleTrace()

    if lock.mode is LockMode.SELF_LOCKING:
        phase = Phase.HOLD
        drive.set_load(_hold_load(config, lock, table_load))
    else:
        phase = Phase.EXTEND
    logger.info("release starts in %s", phase)

    steps = 0
    while drive.state.x_shaft > 1e-12:
        steps += 1
        if steps > max_steps:
            raise InfeasibleCycle(
                "release did not finish in {} steps".format(max_steps),
                report=report, phase=phase, trace=trace.records)
        d_theta = -min(config.motor_step,
                       drive.state.x_shaft / config.trsw.lead)
        if drive.state.mode is Mode.ROTATION or phase is Phase.HOLD:
            d_theta = -config.motor_step
        x_before = drive.state.x_shaft
        try:
            drive.step(d_theta)
        except StallError as error:
            raise InfeasibleCycle(
                "motor stalls while the lock holds the shaft: {}".format(
                    error),
                report=report, phase=Phase.RELEASE_ROTATE,
                trace=trace.records)

        dx = x_before - drive.state.x_shaft
        if dx > 0:
            lock, _, _ = ratchet.retract(config.lock, lock, dx)
        if drive.state.mode is Mode.ROTATION:
            if phase is Phase.HOLD:
                phase = Phase.RELEASE_ROTATE
                logger.info("shaft blocked at x_shaft=%.6g mm, rotating",
                            drive.state.x_shaft)
            lock = ratchet.set_roll(lock, drive.state.theta_sh)
            if lock.mode is LockMode.UNLOCKING:
                drive.set_load(table_load)
        elif phase is Phase.RELEASE_ROTATE:
            phase = Phase.EXTEND
        posture = state.table.posture_at(drive.state.x_shaft)
        trace.append(phase, drive.state, lock, posture)

    logger.info("release ends at x_shaft=%.6g mm after %d steps",
                drive.state.x_shaft, steps)
    return trace


def run_cycle(config, obj=None, strict=True, **solve_kwargs):
    """Grasp then release, as one trace.

    :return: ``(CycleTrace, CycleState)`` with the state at the end of
        the grasp.
    """
    trace, state = grasp_phase(config, obj, strict=strict, **solve_kwargs)
    trace.extend(release_phase(config, state, strict=strict))
    return trace, state


def check_cycle_feasibility(config):
    """Conditions under which a grasp/release cycle completes.

    * ``lead_angle`` and ``motor_bound``: the drive checks of
      :func:`~gripsim.screw.validate_design`.
    * ``grasp_in_translation``: the grasp force stays below the
      switching threshold, so grasping never turns the shaft.
    * ``switch_back``: the grasp force stays below the kinetic
      threshold, so the drive translates again once the lock opens.
    * ``lock_travel``: the free finger at the grasp force needs no more
      shaft than the lock's travel range.

    The lock's holding capacity is recorded in ``assumptions``.
    """
    drive = validate_design(config.trsw)
    f_sw = switching_threshold(config.trsw)
    f_grasp = config.grasp_force
    f_back = config.trsw.kinetic_ratio * f_sw
    checks = [drive['lead_angle'], drive['motor_bound']]
    checks.append(Check('grasp_in_translation', f_grasp < f_sw,
                        f_sw - f_grasp, 'tau_th / (r_g2 tan(theta_th)) < '
                        'f_ex_sw'))
    checks.append(Check('switch_back', f_grasp < f_back, f_back - f_grasp,
                        'grasp force < kinetic_ratio * f_ex_sw'))
    posture = solve_posture(config.finger, f_grasp).posture
    insertion = shaft_insertion(config.finger, posture)
    travel = config.lock.travel_range
    checks.append(Check('lock_travel', insertion <= travel,
                        travel - insertion,
                        'shaft insertion at the grasp force within the '
                        'lock travel range'))
    return FeasibilityReport(checks=tuple(checks), load_window=(0.0, f_sw),
                             assumptions=(LOCK_ASSUMPTION,))


def payload(finger_count, finger_strength):
    """Mass (kg) the fingers hold together before one breaks."""
    if finger_count < 0 or finger_strength < 0:
        raise InvalidParameters("finger count and strength must be >= 0")
    return finger_count * finger_strength / STANDARD_GRAVITY


def payload_estimate(config):
    return payload(config.finger_count, config.finger_strength)


def meets_payload(config, required_kg=20.0):
    return payload_estimate(config) >= required_kg


@dataclass(frozen=True)
class DisturbanceResponse:
    """How a grasping finger reacts to an opening force.

    ``retraction`` is how far the shaft backs off before the lock
    catches it (mm); ``holds`` is False once the force exceeds the
    finger strength.
    """
    force: float
    retraction: float
    backlash: float
    holds: bool
    lock: ratchet.LockState


def disturbance_response(config, state, force):
    """Push a grasping finger open with ``force`` (N)."""
    require(force >= 0, "opening force must be >= 0, got {}", force)
    lock = state.lock
    if lock.mode is LockMode.UNLOCKING:
        raise InvalidParameters("the lock is open, nothing holds the finger")
    slack = ratchet.backlash(config.lock, lock)
    retraction = 0.0
    if force > 0 and lock.s > 0:
        lock, _, retraction = ratchet.retract(config.lock, lock, lock.s)
    holds = force <= config.finger_strength and (force == 0 or lock.engaged)
    if not holds:
        logger.info("opening force %.6g N exceeds the finger strength "
                    "%.6g N", force, config.finger_strength)
    return DisturbanceResponse(force=force, retraction=retraction,
                               backlash=slack, holds=holds, lock=lock)

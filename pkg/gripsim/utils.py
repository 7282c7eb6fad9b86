import logging
import math
import os


class GripSimError(Exception):
    """Base class of every error raised by gripsim.

    This happens in situations like (non-exhaustive list):

    * A parameter set violates one of its invariants (e.g. a negative
      gear radius, a lead angle outside ``(0, pi/2)``), or an operation
      is called outside its precondition (e.g. a negative insertion
      force, see :class:`InvalidParameters`).

    * The motor cannot supply the torque a step asks for
      (:class:`StallError`).

    * A numerical solve, an identification or a design does not
      produce a usable answer (:class:`SolverNonConvergence`,
      :class:`IdentificationError`, :class:`DesignInfeasible`).

    * A scenario file cannot be read (:class:`ScenarioError`).
    """
    pass


class InvalidParameters(GripSimError, ValueError):
    """A value type invariant or an operation precondition is violated."""
    pass


class StallError(GripSimError):
    """The motor would need more than its maximum torque.

    :param state: the last state reached before the stall.
    :param tau_required: the motor torque the step would need (N·mm).
    """
    def __init__(self, message, state=None, tau_required=None, trace=None):
        super().__init__(message)
        self.state = state
        self.tau_required = tau_required
        self.trace = trace if trace is not None else []


class SolverNonConvergence(GripSimError):
    """Projected descent stopped before meeting its tolerance.

    ``best`` holds the best iterate found and ``residual`` the last
    objective decrease. ``trace`` is filled in by callers that were
    stepping a load when the solve failed.
    """
    def __init__(self, message, best=None, residual=None, trace=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.trace = trace if trace is not None else []


class IdentificationError(GripSimError):
    """No observation carries a load, so no stiffness can be fitted."""
    pass


class DesignInfeasible(GripSimError):
    """A design (spring set or drive configuration) cannot meet its goal.

    ``report`` is the :class:`~gripsim.screw.DesignReport` when the
    failure comes from the screw-drive checks.
    """
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InfeasibleCycle(GripSimError):
    """A release cycle cannot be completed.

    :param report: the :class:`~gripsim.hand.FeasibilityReport`.
    :param phase: the cycle phase in which the cycle stopped.
    :param trace: the records produced before stopping.
    """
    def __init__(self, message, report=None, phase=None, trace=None):
        super().__init__(message)
        self.report = report
        self.phase = phase
        self.trace = trace if trace is not None else []


class ScenarioError(GripSimError):
    """A scenario file is malformed or holds an invalid value."""
    def __init__(self, message, line=None):
        if line is not None:
            message = "line {}: {}".format(line, message)
        super().__init__(message)
        self.line = line


LOG_LEVELS = {
    'error': logging.ERROR,
    'info': logging.INFO,
    'debug': logging.DEBUG,
}


def setup_logging(level=None):
    """Attach a stderr handler to the ``gripsim`` logger.

    :param level: one of ``'error'``, ``'info'``, ``'debug'``. Defaults
        to the ``GRIPSIM_LOG`` environment variable, then ``'error'``.
    :return: the configured logger.
    """
    if level is None:
        level = os.environ.get('GRIPSIM_LOG', 'error')
    level = level.strip().lower()
    if level not in LOG_LEVELS:
        raise InvalidParameters(
            "unknown log level {!r}, expected one of {}".format(
                level, ', '.join(LOG_LEVELS)))
    logger = logging.getLogger('gripsim')
    logger.setLevel(LOG_LEVELS[level])
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(
            logging.Formatter('%(levelname)s %(name)s: %(message)s'))
        logger.addHandler(handler)
    return logger


def deg_to_rad(value):
    return math.radians(value)


def rad_to_deg(value):
    return math.degrees(value)


def per_deg_to_per_rad(value):
    """Convert a stiffness in N·mm/deg to N·mm/rad."""
    return value * 180.0 / math.pi


def per_rad_to_per_deg(value):
    return value * math.pi / 180.0


def require(condition, message, *args):
    """Raise :class:`InvalidParameters` unless ``condition`` holds."""
    if not condition:
        raise InvalidParameters(message.format(*args))

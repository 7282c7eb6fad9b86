"""Wrapping a finger around a cylinder by incremental loading.

The insertion force grows from zero in small steps. Whenever a link
that is not yet in contact would sink into the object, the step is cut
back by bisection until it just touches; the joints from the palm up to
that link are then held at their current angles and loading resumes.
The force each link carries at that moment stays on it, and every later
increment is shared by the links beyond the contact.
Loading stops when the motor torque reaches its threshold, when every
joint is held, or when the fingertip link lands on the object while a
more proximal joint could still bend.
"""

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .finger import FingerPosture, forward_kinematics, solve_posture
from .screw import ScrewDriveParams
from .utils import InvalidParameters, SolverNonConvergence, require

logger = logging.getLogger(__name__)


class Termination(enum.Enum):
    TORQUE_THRESHOLD = 'TorqueThreshold'
    FULL_WRAP = 'FullWrap'
    FINGERTIP_COLLISION = 'FingertipCollision'

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class CircularObject:
    """A cylinder seen end-on: center in the palm frame (mm) and
    diameter (mm)."""
    center: tuple
    diameter: float

    def __post_init__(self):
        require(self.diameter > 0, "object diameter must be positive, "
                "got {}", self.diameter)
        center = tuple(float(c) for c in self.center)
        require(len(center) == 2, "object center needs two coordinates")
        object.__setattr__(self, 'center', center)

    @property
    def radius(self):
        return self.diameter / 2


def default_object(params, diameter, clearance=2.0, offset=None):
    """Cylinder above the first link, ``clearance`` away from it.

    :param offset: position of the center along the straight finger,
        ``l_L / 2 - 1`` if omitted.
    """
    if offset is None:
        offset = params.l_L / 2 - 1
    return CircularObject(center=(offset, diameter / 2 + clearance),
                          diameter=diameter)


@dataclass(frozen=True)
class WrapStep:
    f_tr: float
    held: tuple
    posture: FingerPosture


@dataclass(frozen=True)
class WrapResult:
    """Outcome of :func:`wrap_simulate`.

    ``trace`` holds one :class:`WrapStep` per accepted load, ``events``
    one ``(f_tr, links)`` pair per new contact.
    """
    posture: FingerPosture
    contact_links: frozenset
    f_tr_final: float
    terminated_by: Termination
    trace: tuple = field(default=(), repr=False)
    events: tuple = ()

    @property
    def contact_count(self):
        return len(self.contact_links)


def link_gaps(params, posture, obj):
    """Signed clearance between each link segment and the object (mm),
    negative inside it."""
    points = forward_kinematics(params, posture)
    a, b = points[:-1], points[1:]
    c = np.asarray(obj.center)
    ab = b - a
    t = np.einsum('ij,ij->i', c - a, ab) / np.einsum('ij,ij->i', ab, ab)
    nearest = a + np.clip(t, 0.0, 1.0)[:, np.newaxis] * ab
    return np.linalg.norm(nearest - c, axis=1) - obj.radius


def link_penetration(params, posture, obj):
    """Depth (mm, >= 0) by which each link enters the object; link ``n``
    runs from pin ``n`` to the fingertip."""
    return np.maximum(-link_gaps(params, posture, obj), 0.0)


def _threshold_force(trsw, tau_th):
    return tau_th / trsw.lead


def wrap_simulate(params, obj, trsw=None, tau_th=100.0, step=0.05,
                  tolerance=1e-2, max_bisections=60, **solve_kwargs):
    """Load the finger against ``obj`` until it stops adapting.

    The load stops at ``f_th = tau_th / (r_g2 tan theta_th)``, the force
    at which the motor torque reaches ``tau_th``; the last step is
    clamped to it.

    :param trsw: :class:`ScrewDriveParams` converting ``tau_th``,
        defaults if omitted.
    :param step: load increment (N).
    :param tolerance: allowed penetration (mm).
    :return: a :class:`WrapResult`.
    :raise SolverNonConvergence: with the trace so far, also when the
        contact search ends with a link still inside the object.
    """
    require(tau_th > 0, "torque threshold must be positive, got {}", tau_th)
    require(step > 0, "load step must be positive, got {}", step)
    require(tolerance > 0, "tolerance must be positive, got {}", tolerance)
    if trsw is None:
        trsw = ScrewDriveParams()
    n = params.n
    f_th = _threshold_force(trsw, tau_th)
    held = {}
    contacts = set()
    carried = None
    carriers = None
    trace = []
    events = []

    straight = FingerPosture.straight(n)
    if np.min(link_gaps(params, straight, obj)) < -tolerance:
        raise InvalidParameters(
            "object at {} overlaps the straight finger".format(obj.center))

    def solve(f_tr):
        return solve_posture(params, f_tr, fixed=held, carried=carried,
                             carriers=carriers, **solve_kwargs)

    def free_gap(posture):
        gaps = link_gaps(params, posture, obj)
        free = [g for i, g in enumerate(gaps, start=1) if i not in contacts]
        return min(free) if free else np.inf

    f = 0.0
    solution = solve(f)
    try:
        while True:
            f_next = min(f + step, f_th)
            candidate = solve(f_next)
            if free_gap(candidate.posture) >= -tolerance:
                f, solution = f_next, candidate
                trace.append(WrapStep(f, tuple(sorted(held)),
                                      solution.posture))
                if f >= f_th:
                    terminated = Termination.TORQUE_THRESHOLD
                    break
                continue

            lo, hi = f, f_next
            for _ in range(max_bisections):
                mid = 0.5 * (lo + hi)
                gap = free_gap(solve(mid).posture)
                if gap < -tolerance:
                    hi = mid
                elif gap > 0:
                    lo = mid
                else:
                    hi = mid
                    break
            f, solution = hi, solve(hi)
            gap = free_gap(solution.posture)
            if gap < -tolerance:
                raise SolverNonConvergence(
                    "contact search stopped {:.3g} mm inside the object "
                    "at f_tr={:.6g} N".format(-gap, f), residual=-gap)
            gaps = link_gaps(params, solution.posture, obj)
            hit = [i for i, g in enumerate(gaps, start=1)
                   if i not in contacts and g <= tolerance]
            contacts.update(hit)
            events.append((f, tuple(hit)))
            trace.append(WrapStep(f, tuple(sorted(held)), solution.posture))
            logger.info("contact on link(s) %s at f_tr=%.6g N", hit, f)

            far = max(hit)
            if far == n and any(j not in held for j in range(1, n)):
                terminated = Termination.FINGERTIP_COLLISION
                break
            for joint in range(1, far + 1):
                held.setdefault(joint, solution.posture.theta_L[joint - 1])
            if len(held) == n:
                terminated = Termination.FULL_WRAP
                break
            # links up to the contact keep their share of the load
            carried = solution.distribution.as_array()
            carriers = range(far + 1, n + 1)
    except SolverNonConvergence as error:
        error.trace = list(trace)
        raise

    posture = solution.posture

    logger.info("wrap ends by %s at f_tr=%.6g N with %d contact link(s)",
                terminated, f, len(contacts))
    return WrapResult(posture=posture, contact_links=frozenset(contacts),
                      f_tr_final=f, terminated_by=terminated,
                      trace=tuple(trace), events=tuple(events))

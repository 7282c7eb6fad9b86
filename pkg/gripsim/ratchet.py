"""Ratchet lock between the flexible shaft and the finger links.

Rectangular protrusions on the shaft pass spring-loaded pawls in the
links. Pushing the shaft in is never blocked; pulling it back stops as
soon as a protrusion face meets a pawl face, unless the shaft has been
rolled by the unlock angle so the protrusions slip past the pawls.

Positions are arc lengths along the shaft path (mm), increasing towards
the fingertip. Protrusion ``j`` (``j = 0 .. count-1``) sits at
``s - j * pitch``: protrusion 0 is at the proximal pin when ``s = 0`` and
the others trail into the palm. A pawl at ``p`` therefore blocks
retraction at every ``s = p + j * pitch``.
"""

import enum
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .utils import InvalidParameters, require

logger = logging.getLogger(__name__)


class LockMode(enum.Enum):
    SELF_LOCKING = 'SelfLocking'
    UNLOCKING = 'Unlocking'

    def __str__(self):
        return self.value


def staggered_pawls(n=7, l_L=12.0, pitch=4.0, stagger=None, offset=None):
    """Pawl positions for ``n`` links, two per link.

    The first pawl of link ``i`` sits ``offset`` past its proximal pin
    (``pitch / 4`` by default), the second ``stagger`` further
    (``pitch / 2`` by default). ``stagger=0`` leaves one pawl per link.

    :return: a tuple of per-link tuples.
    """
    if stagger is None:
        stagger = pitch / 2
    if offset is None:
        offset = pitch / 4
    require(n >= 1, "need at least one link, got {}", n)
    require(0 <= stagger < l_L, "stagger must lie in [0, l_L), got {}",
            stagger)
    require(0 <= offset and offset + stagger < l_L,
            "pawls must fit inside a link (offset {}, stagger {})",
            offset, stagger)
    links = []
    for i in range(n):
        first = i * l_L + offset
        links.append((first,) if stagger == 0 else (first, first + stagger))
    return tuple(links)


@dataclass(frozen=True)
class LockParams:
    """Protrusion layout, pawl positions and unlock geometry.

    :param pawl_axial_positions: per-link tuples of pawl positions (mm),
        two per link (one for the single-pawl comparison layout).
        Defaults to :func:`staggered_pawls` for the default finger.
    :param unlock_roll_angle: shaft roll that lets the protrusions slip
        past the pawls (rad).
    :param roll_tolerance: half-width of the unlocking band (rad).
    :param engage_tolerance: distance at which faces count as touching.
    """
    protrusion_pitch: float = 4.0
    protrusion_count: int = 30
    pawl_axial_positions: tuple = None
    unlock_roll_angle: float = math.pi / 2
    roll_tolerance: float = 0.1
    engage_tolerance: float = 1e-6

    def __post_init__(self):
        require(self.protrusion_pitch > 0,
                "protrusion pitch must be positive, got {}",
                self.protrusion_pitch)
        require(self.protrusion_count >= 1,
                "need at least one protrusion, got {}",
                self.protrusion_count)
        pawls = self.pawl_axial_positions
        if pawls is None:
            pawls = staggered_pawls(pitch=self.protrusion_pitch)
        pawls = tuple(tuple(float(p) for p in link) for link in pawls)
        require(len(pawls) >= 1, "need pawls for at least one link")
        for link in pawls:
            require(len(link) in (1, 2),
                    "each link carries two pawls (or one), got {}", link)
            require(all(b > a for a, b in zip(link, link[1:])),
                    "pawl positions must increase within a link, got {}",
                    link)
        object.__setattr__(self, 'pawl_axial_positions', pawls)
        require(math.isfinite(self.unlock_roll_angle),
                "unlock roll angle must be finite")
        require(self.roll_tolerance >= 0,
                "roll tolerance must be >= 0, got {}", self.roll_tolerance)
        require(self.engage_tolerance >= 0,
                "engage tolerance must be >= 0, got {}",
                self.engage_tolerance)

    @property
    def pawls(self):
        """All pawl positions, link by link."""
        return tuple(p for link in self.pawl_axial_positions for p in link)

    @property
    def travel_range(self):
        return self.protrusion_count * self.protrusion_pitch


@dataclass(frozen=True)
class LockState:
    """Shaft position and roll seen by the lock.

    The mode follows from ``roll``: Unlocking when it lies within
    ``roll_tolerance`` of ``unlock_roll_angle``, modulo pi since the
    protrusions are rectangular.
    """
    s: float = 0.0
    roll: float = 0.0
    engaged: bool = False
    engaged_pair: tuple = None
    unlock_roll_angle: float = math.pi / 2
    roll_tolerance: float = 0.1

    @property
    def mode(self):
        delta = (self.roll - self.unlock_roll_angle) % math.pi
        if min(delta, math.pi - delta) <= self.roll_tolerance:
            return LockMode.UNLOCKING
        return LockMode.SELF_LOCKING


def initial_state(params, s=0.0, roll=0.0):
    return LockState(s=s, roll=roll,
                     unlock_roll_angle=params.unlock_roll_angle,
                     roll_tolerance=params.roll_tolerance)


def engagement_positions(params):
    """Every shaft position where a protrusion face meets a pawl face.

    :return: ``(positions, pairs)``: sorted positions within the travel
        range and, for each, its ``(protrusion index, pawl index)``
        (0-based, pawls numbered link by link).
    """
    pawls = np.asarray(params.pawls)
    j = np.arange(params.protrusion_count)
    grid = pawls[np.newaxis, :] + params.protrusion_pitch * j[:, np.newaxis]
    protrusion, pawl = np.meshgrid(j, np.arange(len(pawls)), indexing='ij')
    positions = grid.ravel()
    order = np.argsort(positions, kind='stable')
    positions = positions[order]
    pairs = list(zip(protrusion.ravel()[order].tolist(),
                     pawl.ravel()[order].tolist()))
    keep = positions <= params.travel_range
    pairs = [pair for pair, k in zip(pairs, keep) if k]
    return positions[keep], pairs


def _floor(params, s):
    """Nearest engagement at or below ``s`` and its pair, or the origin
    with no pair."""
    positions, pairs = engagement_positions(params)
    index = np.searchsorted(positions, s + params.engage_tolerance,
                            side='right') - 1
    if index < 0:
        return 0.0, None
    return float(positions[index]), pairs[index]


def advance(params, state, dx):
    """Push the shaft in by ``dx`` (mm); the pawls ratchet over the
    protrusions in either mode."""
    require(dx > 0, "advance needs dx > 0, got {}", dx)
    s = state.s + dx
    if s > params.travel_range * (1 + 1e-12):
        raise InvalidParameters(
            "shaft position {:.6g} mm exceeds the travel range {:.6g} "
            "mm".format(s, params.travel_range))
    return replace(state, s=s, engaged=False, engaged_pair=None)


def retract(params, state, dx):
    """Pull the shaft back by up to ``dx`` (mm).

    Unlocking: the whole ``dx`` is honored. SelfLocking: the shaft stops
    at the nearest engagement below it (or at the origin), and the state
    records the blocking pair.

    :return: ``(state, blocked, travel)``.
    """
    require(dx > 0, "retract needs dx > 0, got {}", dx)
    if state.mode is LockMode.UNLOCKING:
        s = state.s - dx
        if s < -params.engage_tolerance:
            raise InvalidParameters(
                "retracting {:.6g} mm from {:.6g} mm passes the origin"
                .format(dx, state.s))
        return replace(state, s=max(s, 0.0), engaged=False,
                       engaged_pair=None), False, dx

    if state.engaged:
        return state, True, 0.0
    floor, pair = _floor(params, state.s)
    room = max(state.s - floor, 0.0)
    if dx < room - params.engage_tolerance:
        return replace(state, s=state.s - dx), False, dx
    engaged = pair is not None
    if engaged:
        logger.debug("lock engages at s=%.6g mm (protrusion %d, pawl %d)",
                     floor, pair[0], pair[1])
    new_state = replace(state, s=floor, engaged=engaged, engaged_pair=pair)
    return new_state, dx > room, room


def set_roll(state, roll):
    """Roll the shaft to ``roll`` (rad); leaving the SelfLocking band
    frees an engaged pair."""
    new_state = replace(state, roll=roll)
    if new_state.mode is LockMode.UNLOCKING:
        if state.mode is LockMode.SELF_LOCKING:
            logger.info("lock switches to Unlocking at roll %.6g rad", roll)
        new_state = replace(new_state, engaged=False, engaged_pair=None)
    return new_state


def backlash(params, state):
    """Retraction left before the lock engages (mm), 0 when engaged.

    :raise InvalidParameters: in Unlocking mode, where nothing blocks.
    """
    if state.mode is LockMode.UNLOCKING:
        raise InvalidParameters("backlash is undefined in Unlocking mode")
    if state.engaged:
        return 0.0
    floor, _ = _floor(params, state.s)
    return max(state.s - floor, 0.0)

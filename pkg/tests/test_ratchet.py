import math
import sys

import numpy as np
import pytest
import setpath  # noqa:F401, must come before 'import gripsim'
from utils import scan_backlash

from gripsim import ratchet
from gripsim.ratchet import LockMode, LockParams, staggered_pawls
from gripsim.utils import InvalidParameters


def test_staggered_pawls():
    assert staggered_pawls(n=2) == ((1, 3), (13, 15))
    assert staggered_pawls(n=2, stagger=0) == ((1,), (13,))
    assert len(LockParams().pawl_axial_positions) == 7
    with pytest.raises(InvalidParameters):
        staggered_pawls(stagger=12.0)
    with pytest.raises(InvalidParameters):
        staggered_pawls(n=0)


@pytest.mark.parametrize("kwargs", [
    pytest.param({'protrusion_pitch': 0}, id='pitch'),
    pytest.param({'protrusion_count': 0}, id='count'),
    pytest.param({'pawl_axial_positions': ((1, 2, 3),)}, id='three-pawls'),
    pytest.param({'pawl_axial_positions': ((3, 1),)}, id='decreasing'),
    pytest.param({'roll_tolerance': -0.1}, id='tolerance'),
])
def test_invalid_params(kwargs):
    with pytest.raises(InvalidParameters):
        LockParams(**kwargs)


def test_engagement_positions():
    params = LockParams()
    assert params.travel_range == 120
    positions, pairs = ratchet.engagement_positions(params)
    assert np.all(np.diff(positions) >= 0)
    assert np.unique(positions) == pytest.approx(np.arange(1, 120, 2))
    assert len(pairs) == len(positions)
    assert pairs[0] == (0, 0)


def test_retract_stops_at_the_next_engagement():
    params = LockParams()
    state = ratchet.initial_state(params, s=10.5)
    state, blocked, travel = ratchet.retract(params, state, 0.5)
    assert (state.s, blocked, travel) == (10.0, False, 0.5)
    assert not state.engaged
    state, blocked, travel = ratchet.retract(params, state, 5.0)
    assert state.s == 9.0
    assert blocked
    assert travel == pytest.approx(1.0)
    assert state.engaged
    assert state.engaged_pair == (2, 0)
    assert ratchet.backlash(params, state) == 0.0


def test_engaged_lock_blocks_until_advanced():
    params = LockParams()
    state = ratchet.retract(params, ratchet.initial_state(params, s=9.5),
                            1.0)[0]
    assert ratchet.retract(params, state, 0.1) == (state, True, 0.0)
    state = ratchet.advance(params, state, 0.5)
    assert not state.engaged
    assert state.engaged_pair is None
    assert ratchet.backlash(params, state) == pytest.approx(0.5)


def test_retract_below_first_pawl_reaches_origin():
    params = LockParams()
    state = ratchet.initial_state(params, s=0.5)
    state, blocked, travel = ratchet.retract(params, state, 2.0)
    assert state.s == 0.0
    assert blocked
    assert travel == pytest.approx(0.5)
    assert not state.engaged


def test_advance_limits():
    params = LockParams()
    with pytest.raises(InvalidParameters, match="travel range"):
        ratchet.advance(params, ratchet.initial_state(params, s=119.0), 2.0)
    with pytest.raises(InvalidParameters):
        ratchet.advance(params, ratchet.initial_state(params), 0.0)
    with pytest.raises(InvalidParameters):
        ratchet.retract(params, ratchet.initial_state(params), -1.0)


@pytest.mark.parametrize("roll, mode", [
    pytest.param(0.0, LockMode.SELF_LOCKING, id='rest'),
    pytest.param(math.pi / 2 + 0.09, LockMode.UNLOCKING, id='inside-band'),
    pytest.param(math.pi / 2 + 0.11, LockMode.SELF_LOCKING,
                 id='outside-band'),
    pytest.param(-math.pi / 2, LockMode.UNLOCKING, id='negative'),
    pytest.param(3 * math.pi / 2, LockMode.UNLOCKING, id='half-turn-later'),
    pytest.param(math.pi, LockMode.SELF_LOCKING, id='half-turn'),
])
def test_roll_selects_mode(roll, mode):
    state = ratchet.set_roll(ratchet.initial_state(LockParams()), roll)
    assert state.mode is mode


def test_unlocking_frees_the_shaft():
    params = LockParams()
    state = ratchet.retract(params, ratchet.initial_state(params, s=50.0),
                            5.0)[0]
    assert state.engaged
    state = ratchet.set_roll(state, math.pi / 2)
    assert state.mode is LockMode.UNLOCKING
    assert not state.engaged
    state, blocked, travel = ratchet.retract(params, state, 30.0)
    assert (state.s, blocked, travel) == (19.0, False, 30.0)
    with pytest.raises(InvalidParameters, match="backlash"):
        ratchet.backlash(params, state)
    with pytest.raises(InvalidParameters, match="origin"):
        ratchet.retract(params, state, 20.0)


@pytest.mark.parametrize("start", [0.0, 40.0, 116.0])
def test_staggered_backlash_stays_below_half_pitch(start):
    params = LockParams()
    s, expected = scan_backlash(params.pawls, params.protrusion_pitch,
                                params.protrusion_count, start, start + 4.0)
    assert expected.max() <= params.protrusion_pitch / 2 + 1e-9
    computed = [ratchet.backlash(params, ratchet.initial_state(params, x))
                for x in s]
    assert computed == pytest.approx(np.maximum(expected, 0.0), abs=1e-9)


def test_single_pawl_backlash_reaches_full_pitch():
    params = LockParams(pawl_axial_positions=staggered_pawls(stagger=0))
    s, expected = scan_backlash(params.pawls, params.protrusion_pitch,
                                params.protrusion_count, 41.0, 45.0)
    assert expected.max() >= 3.9
    worst = s[np.argmax(expected)]
    state = ratchet.initial_state(params, worst)
    assert ratchet.backlash(params, state) >= 3.9


if __name__ == '__main__':
    pytest.main(sys.argv)

"""
Utilities for testing GripSim: brute-force oracles and scenario helpers.

The oracles recompute what the package computes by the plainest means
available and never import the code under test.
"""

import json
import math

import numpy as np


def finger_energy(k, d, l, forces, rotation='adjacent'):  # noqa: E741
    """Elastic energy of a free finger for every row of ``forces``.

    Walks from the fingertip to the palm with explicit rotation
    matrices.
    """
    forces = np.atleast_2d(np.asarray(forces, dtype=float))
    m, n = forces.shape
    k = np.asarray(k, dtype=float)
    theta = np.zeros((m, n))
    moment = np.zeros(m)
    carried = np.zeros((m, 2))
    for i in reversed(range(n)):
        if i < n - 1:
            if rotation == 'cumulative':
                phi = theta[:, i + 1:].sum(axis=1)
            else:
                phi = theta[:, i + 1]
            rotated = np.empty_like(carried)
            rotated[:, 0] = np.cos(phi) * carried[:, 0] - \
                np.sin(phi) * carried[:, 1]
            rotated[:, 1] = np.sin(phi) * carried[:, 0] + \
                np.cos(phi) * carried[:, 1]
            moment = moment - l * rotated[:, 1]
            carried = rotated
        moment = moment + d * forces[:, i]
        carried = carried + np.column_stack([forces[:, i], np.zeros(m)])
        theta[:, i] = moment / k[i]
    return 0.5 * np.sum(k * theta ** 2, axis=1)


def simplex_grid(n, resolution):
    """Every point of the unit simplex whose coordinates are multiples of
    ``1 / resolution`` (n = 2 or 3)."""
    steps = np.arange(resolution + 1) / resolution
    if n == 2:
        return np.column_stack([steps, 1 - steps])
    if n == 3:
        a, b = np.meshgrid(steps, steps, indexing='ij')
        keep = a + b <= 1 + 1e-12
        a, b = a[keep], b[keep]
        return np.column_stack([a, b, np.maximum(1 - a - b, 0.0)])
    raise ValueError("grid search only for n = 2 or 3")


def grid_search_objective(k, d, l, f_tr,  # noqa: E741
                          sense='min', resolution=2000, chunk=200000):
    """Lowest objective (``U`` for ``min``, ``-U`` for ``max``) over the
    simplex grid of force fractions."""
    points = simplex_grid(len(k), resolution)
    sign = -1.0 if sense == 'max' else 1.0
    best = math.inf
    for start in range(0, len(points), chunk):
        batch = points[start:start + chunk]
        values = sign * finger_energy(k, d, l, f_tr * batch)
        best = min(best, float(values.min()))
    return best


def lock_floor(pawls, pitch, count, s, tolerance=1e-6):
    """Highest engagement at or below ``s``, or 0 when there is none."""
    floor = 0.0
    for p in pawls:
        for j in range(count):
            position = p + j * pitch
            if position <= count * pitch and position <= s + tolerance:
                floor = max(floor, position)
    return floor


def scan_backlash(pawls, pitch, count, start, stop, resolution=1e-3):
    """Backlash at every point of ``[start, stop]`` spaced by
    ``resolution``."""
    positions = np.array([p + j * pitch for p in pawls for j in range(count)
                          if p + j * pitch <= count * pitch])
    s = np.arange(start, stop + resolution / 2, resolution)
    below = positions[np.newaxis, :] <= s[:, np.newaxis] + 1e-6
    floors = np.where(below, positions[np.newaxis, :], 0.0).max(axis=1)
    return s, s - floors


def write_scenario(path, **sections):
    """Write a scenario file from keyword sections, units in mm, N, rad,
    N·mm unless given."""
    sections.setdefault('units', {'length': 'mm', 'force': 'N',
                                  'angle': 'rad', 'torque': 'N*mm',
                                  'stiffness': 'N*mm/rad'})
    with open(path, 'w', encoding='utf-8') as fd:
        json.dump(sections, fd, indent=2)
    return str(path)

"""Planar statics of the multi-link finger bent by an inserted flexible
shaft.

The shaft passes through ``n`` finger-body links at a distance ``d_L``
from the joint pins. Pushing it in with a force ``f_tr`` drags every link
through a friction force ``f_FS_i`` (all non-negative, summing to
``f_tr``), and each joint bends against its torsion spring and the
shaft's own flexural stiffness. Which split of ``f_tr`` over the links
occurs is decided by an energy principle over the force simplex, see
:func:`solve_posture`.

Indices of joints, links and pins are 1-based in every public function;
arrays are 0-based as usual.
"""

import csv
import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .simplex import centroid, minimize_multistart, project_simplex, vertices
from .utils import (DesignInfeasible, IdentificationError, InvalidParameters,
                    SolverNonConvergence, per_deg_to_per_rad, require)

logger = logging.getLogger(__name__)

ROTATIONS = ('adjacent', 'cumulative')
SENSES = ('min', 'max')


@dataclass(frozen=True)
class FingerParams:
    """Geometry and stiffness of the finger.

    :param n: number of links.
    :param l_L: distance between consecutive joint pins (mm).
    :param d_L: offset of the shaft from the pins (mm).
    :param k_FS: flexural stiffness of the shaft (N·mm/rad).
    :param k_sp: torsion spring per joint (N·mm/rad), zeros if omitted.
    :param l_tip: length of the last link beyond pin ``n`` (mm),
        ``l_L`` if omitted.
    :param rotation: ``'adjacent'`` turns the force of link ``i+1`` into
        the frame of link ``i`` by ``theta_{i+1}``; ``'cumulative'`` by
        the sum of every more distal angle.
    """
    n: int = 7
    l_L: float = 12.0
    d_L: float = 13.0
    k_FS: float = per_deg_to_per_rad(4.5)
    k_sp: tuple = None
    l_tip: float = None
    rotation: str = 'adjacent'

    def __post_init__(self):
        require(isinstance(self.n, int) and self.n >= 1,
                "finger needs at least one link, got n={}", self.n)
        require(self.l_L > 0, "l_L must be positive, got {}", self.l_L)
        require(self.d_L > 0, "d_L must be positive, got {}", self.d_L)
        require(self.k_FS > 0, "k_FS must be positive, got {}", self.k_FS)
        k_sp = (0.0,) * self.n if self.k_sp is None else \
            tuple(float(k) for k in self.k_sp)
        require(len(k_sp) == self.n,
                "expected {} spring coefficients, got {}",
                self.n, len(k_sp))
        require(all(k >= 0 for k in k_sp),
                "spring coefficients must be >= 0, got {}", k_sp)
        object.__setattr__(self, 'k_sp', k_sp)
        if self.l_tip is None:
            object.__setattr__(self, 'l_tip', self.l_L)
        require(self.l_tip > 0, "l_tip must be positive, got {}",
                self.l_tip)
        require(self.rotation in ROTATIONS,
                "rotation must be one of {}, got {!r}",
                ROTATIONS, self.rotation)

    @property
    def stiffness(self):
        """Joint stiffnesses ``k_L_i = k_sp_i + k_FS`` as an array."""
        return np.asarray(self.k_sp) + self.k_FS

    def with_springs(self, k_sp):
        return replace(self, k_sp=tuple(k_sp))

    def with_kfs(self, k_FS):
        return replace(self, k_FS=k_FS)


@dataclass(frozen=True)
class FingerPosture:
    """Joint angles (rad, flexion positive)."""
    theta_L: tuple

    def __post_init__(self):
        theta = tuple(float(t) for t in self.theta_L)
        require(all(math.isfinite(t) for t in theta),
                "posture angles must be finite, got {}", theta)
        object.__setattr__(self, 'theta_L', theta)

    @classmethod
    def straight(cls, n):
        return cls((0.0,) * n)

    @property
    def total_bend(self):
        return math.fsum(self.theta_L)

    def as_array(self):
        return np.asarray(self.theta_L)


@dataclass(frozen=True)
class ShaftForceDistribution:
    """Friction force the shaft applies to each link (N)."""
    f_FS: tuple

    def __post_init__(self):
        f_FS = tuple(float(f) for f in self.f_FS)
        require(all(f >= 0 for f in f_FS),
                "shaft forces must be >= 0, got {}", f_FS)
        object.__setattr__(self, 'f_FS', f_FS)

    @property
    def total(self):
        return math.fsum(self.f_FS)

    def as_array(self):
        return np.asarray(self.f_FS)


@dataclass(frozen=True)
class JointLoads:
    """Force ``f_L_i`` (in the frame of link ``i``) and moment ``m_L_i``
    carried by each joint.

    ``m_L_i = k_L_i * theta_L_i`` for joints that are free to bend. A
    joint held at a fixed angle still carries ``m_L_i``; the holding
    reaction makes up the difference.
    """
    f_L: tuple
    m_L: tuple


@dataclass(frozen=True)
class PostureObservation:
    """Measured joint-pin positions for an insertion force."""
    f_tr: float
    p_act: tuple

    def __post_init__(self):
        require(self.f_tr >= 0, "observation force must be >= 0, got {}",
                self.f_tr)
        p_act = tuple((float(x), float(y)) for x, y in self.p_act)
        require(len(p_act) >= 1, "an observation needs pin positions")
        require(all(math.isfinite(c) for p in p_act for c in p),
                "pin positions must be finite")
        object.__setattr__(self, 'p_act', p_act)


@dataclass(frozen=True)
class PostureSolution:
    """What :func:`solve_posture` found.

    Unpacks as ``(distribution, posture)``. ``objective`` is the
    minimized quantity: the elastic energy for ``sense='min'``, minus
    the elastic energy for ``sense='max'``.
    """
    distribution: ShaftForceDistribution
    posture: FingerPosture
    loads: JointLoads
    objective: float
    energy: float
    start: int = None
    nfev: int = 0

    def __iter__(self):
        yield self.distribution
        yield self.posture


def joint_stiffness(params, i):
    """Stiffness of joint ``i`` (1-based), ``k_sp_i + k_FS``."""
    if not isinstance(i, (int, np.integer)) or not 1 <= i <= params.n:
        raise InvalidParameters(
            "joint index {} out of range 1..{}".format(i, params.n))
    return params.k_sp[i - 1] + params.k_FS


def _held_array(params, fixed):
    held = np.full(params.n, np.nan)
    if fixed:
        for joint, angle in fixed.items():
            if not 1 <= joint <= params.n:
                raise InvalidParameters(
                    "held joint {} out of range 1..{}".format(
                        joint, params.n))
            held[joint - 1] = angle
    return held


def _recursion(params, forces, held):
    """Batched distal-to-proximal balance.

    :param forces: ``(m, n)`` array, one distribution per row.
    :param held: ``(n,)`` angles of held joints, NaN where free.
    :return: ``theta, moment, fx, fy`` arrays of shape ``(m, n)``.
    """
    k = params.stiffness
    d, l = params.d_L, params.l_L  # noqa: E741
    n = params.n
    theta = np.empty_like(forces)
    moment = np.empty_like(forces)
    fx = np.empty_like(forces)
    fy = np.empty_like(forces)
    is_held = ~np.isnan(held)

    moment[:, n - 1] = d * forces[:, n - 1]
    fx[:, n - 1] = forces[:, n - 1]
    fy[:, n - 1] = 0.0
    theta[:, n - 1] = held[n - 1] if is_held[n - 1] else \
        moment[:, n - 1] / k[n - 1]
    for i in range(n - 2, -1, -1):
        if params.rotation == 'cumulative':
            phi = theta[:, i + 1:].sum(axis=1)
        else:
            phi = theta[:, i + 1]
        c, s = np.cos(phi), np.sin(phi)
        rx = c * fx[:, i + 1] - s * fy[:, i + 1]
        ry = s * fx[:, i + 1] + c * fy[:, i + 1]
        # the transverse pull of the distal links unloads joint i
        moment[:, i] = moment[:, i + 1] + d * forces[:, i] - l * ry
        fx[:, i] = rx + forces[:, i]
        fy[:, i] = ry
        theta[:, i] = held[i] if is_held[i] else moment[:, i] / k[i]
    return theta, moment, fx, fy


def equilibrium_recursion(params, dist, fixed=None):
    """Posture and joint loads produced by a force distribution.

    Starts at the distal link, whose angle follows from its own friction
    force alone, and works towards the palm: by the time joint ``i`` is
    reached every more distal angle is known, so the force handed over
    by link ``i+1`` can be turned into the frame of link ``i``.

    :param dist: a :class:`ShaftForceDistribution` of length ``n``.
    :param fixed: optional mapping of joint index to a held angle.
    :return: ``(FingerPosture, JointLoads)``.
    """
    forces = dist.as_array()
    require(len(forces) == params.n,
            "distribution has {} entries for a {}-link finger",
            len(forces), params.n)
    theta, moment, fx, fy = _recursion(params, forces[np.newaxis],
                                       _held_array(params, fixed))
    loads = JointLoads(
        f_L=tuple((float(x), float(y)) for x, y in zip(fx[0], fy[0])),
        m_L=tuple(float(m) for m in moment[0]))
    return FingerPosture(tuple(theta[0])), loads


def forward_kinematics(params, posture):
    """Joint pins and fingertip in the palm frame.

    Pin 1 sits at the origin and the finger points along +x when
    straight; link ``i`` leaves pin ``i`` at the accumulated angle
    ``theta_1 + ... + theta_i``.

    :return: ``(n + 1, 2)`` array, pins ``1..n`` then the fingertip.
    """
    theta = posture.as_array()
    require(len(theta) == params.n,
            "posture has {} angles for a {}-link finger",
            len(theta), params.n)
    heading = np.cumsum(theta)
    lengths = np.full(params.n, params.l_L)
    lengths[-1] = params.l_tip
    steps = np.column_stack([lengths * np.cos(heading),
                             lengths * np.sin(heading)])
    points = np.zeros((params.n + 1, 2))
    points[1:] = np.cumsum(steps, axis=0)
    return points


def elastic_energy(params, posture):
    """``0.5 * sum(k_L_i * theta_L_i**2)`` in N·mm."""
    theta = posture.as_array()
    return float(0.5 * np.sum(params.stiffness * theta ** 2))


def shaft_insertion(params, posture):
    """Shaft length drawn into the finger by a posture (mm)."""
    return params.d_L * posture.total_bend


def _starts(n, warm_start, jitter, seed):
    starts = vertices(n) + [centroid(n)]
    if warm_start is not None:
        warm = np.asarray(warm_start, dtype=float)
        total = warm.sum()
        starts.append(project_simplex(warm / total if total > 0 else warm))
    if jitter:
        rng = np.random.default_rng(seed)
        for _ in range(jitter):
            starts.append(project_simplex(
                centroid(n) + rng.normal(scale=0.5 / n, size=n)))
    return starts


def _solution(params, forces, fixed, sign, start=None, nfev=0):
    dist = ShaftForceDistribution(tuple(forces))
    posture, loads = equilibrium_recursion(params, dist, fixed)
    energy = elastic_energy(params, posture)
    return PostureSolution(distribution=dist, posture=posture, loads=loads,
                           objective=sign * energy, energy=energy,
                           start=start, nfev=nfev)


def _carrier_indices(params, carriers):
    if carriers is None:
        return np.arange(params.n)
    links = sorted(set(carriers))
    require(links and 1 <= links[0] and links[-1] <= params.n,
            "carrier links must lie in 1..{}, got {}", params.n, carriers)
    return np.asarray(links) - 1


def solve_posture(params, f_tr, sense='min', fixed=None, carried=None,
                  carriers=None, warm_start=None, jitter=0, seed=None,
                  tol=1e-10, max_iter=500):
    """Split ``f_tr`` over the links and return the resulting posture.

    The distribution is the one of least elastic energy on the simplex
    ``f_FS_i >= 0, sum f_FS_i = f_tr``. Light loads settle on the
    proximal link; past a few newtons the distal link takes a share and
    its transverse pull relieves the joints behind it. ``sense='max'``
    searches the most energetic distribution instead.

    Starts are the vertices and the centroid, then ``warm_start``
    (fractions or forces, rescaled) and ``jitter`` seeded perturbations
    of the centroid. The lowest objective wins, ties to the first start.

    :param fixed: mapping of joint index (1-based) to a held angle.
        Held joints keep their angle and their energy is a constant.
    :param carried: forces (N) the links already carry and keep; only
        ``f_tr - sum(carried)`` is distributed.
    :param carriers: links (1-based) sharing the distributed force, all
        of them if omitted.
    :return: a :class:`PostureSolution`, which unpacks as
        ``(distribution, posture)``.
    :raise SolverNonConvergence: if the descent hits ``max_iter`` and
        cannot be polished. Its ``best`` is the
        :class:`PostureSolution` of the best iterate.
    """
    require(f_tr >= 0, "insertion force must be >= 0, got {}", f_tr)
    require(sense in SENSES, "sense must be one of {}, got {!r}",
            SENSES, sense)
    n = params.n
    held = _held_array(params, fixed)
    k = params.stiffness
    sign = -1.0 if sense == 'max' else 1.0
    base = np.zeros(n) if carried is None else \
        np.asarray(carried, dtype=float)
    require(base.shape == (n,) and bool(np.all(base >= 0)),
            "carried forces must be {} values >= 0, got {}", n, carried)
    free = f_tr - base.sum()
    require(free >= -1e-9 * max(1.0, f_tr),
            "carried forces {:.6g} N exceed f_tr={:.6g} N", base.sum(), f_tr)
    free = max(free, 0.0)
    links = _carrier_indices(params, carriers)

    def spread(fractions):
        rows = np.tile(base, (len(fractions), 1))
        rows[:, links] += free * fractions
        return rows

    def objective(fractions):
        theta = _recursion(params, spread(fractions), held)[0]
        return sign * 0.5 * np.sum(k * theta ** 2, axis=1)

    if free == 0 or len(links) == 1:
        share = np.full((1, len(links)), 1.0 / len(links))
        return _solution(params, spread(share)[0], fixed, sign)
    warm = None if warm_start is None else \
        np.asarray(warm_start, dtype=float)[links]
    try:
        result = minimize_multistart(
            objective, _starts(len(links), warm, jitter, seed),
            tol=tol, max_iter=max_iter)
    except SolverNonConvergence as error:
        best = error.best
        raise SolverNonConvergence(
            "f_tr={:.6g} N: {}".format(f_tr, error),
            best=_solution(params, spread(best.x[np.newaxis])[0], fixed,
                           sign, best.start, best.nfev),
            residual=error.residual)
    solution = _solution(params, spread(result.x[np.newaxis])[0], fixed,
                         sign, result.start, result.nfev)
    logger.debug("f_tr=%.6g N: total bend %.6g rad, start %s, %d evals",
                 f_tr, solution.posture.total_bend, result.start,
                 result.nfev)
    return solution


def equilibrium_residuals(params, dist, posture, loads, fixed=None):
    """Largest force (N) and moment (N·mm) imbalance over the links.

    Re-evaluates the balance of every link with the angles of
    ``posture``: the distal link is loaded by its own friction force
    only, link ``i`` by its friction force and the force of link
    ``i+1`` turned into its frame. Free joints must also satisfy
    ``m_L_i = k_L_i * theta_L_i``.

    :return: ``(force_residual, moment_residual)``.
    """
    theta = posture.as_array()
    f = dist.as_array()
    fl = np.asarray(loads.f_L, dtype=float)
    m = np.asarray(loads.m_L, dtype=float)
    n = params.n
    held = _held_array(params, fixed)
    force_res = [abs(fl[n - 1, 0] - f[n - 1]), abs(fl[n - 1, 1])]
    moment_res = [abs(m[n - 1] - params.d_L * f[n - 1])]
    for i in range(n - 1):
        phi = theta[i + 1:].sum() if params.rotation == 'cumulative' \
            else theta[i + 1]
        c, s = math.cos(phi), math.sin(phi)
        passed = np.array([c * fl[i + 1, 0] - s * fl[i + 1, 1],
                           s * fl[i + 1, 0] + c * fl[i + 1, 1]])
        force_res.append(abs(fl[i, 0] - passed[0] - f[i]))
        force_res.append(abs(fl[i, 1] - passed[1]))
        moment_res.append(abs(m[i] - m[i + 1] - params.d_L * f[i]
                              + params.l_L * passed[1]))
    for i in range(n):
        if np.isnan(held[i]):
            moment_res.append(abs(m[i] - params.stiffness[i] * theta[i]))
    return max(force_res), max(moment_res)


@dataclass(frozen=True, eq=False)
class LoadingTable:
    """Solved postures over increasing insertion forces.

    ``insertions[j]`` is the shaft length drawn in at ``forces[j]``;
    :meth:`force_at` inverts that relation on its running maximum so the
    inverse stays monotone.
    """
    forces: np.ndarray
    insertions: np.ndarray
    postures: tuple = field(repr=False)

    def force_at(self, u):
        envelope = np.maximum.accumulate(self.insertions)
        return float(np.interp(u, envelope, self.forces))

    def insertion_at(self, f_tr):
        return float(np.interp(f_tr, self.forces, self.insertions))

    def posture_at(self, f_tr):
        """Posture interpolated joint by joint at ``f_tr``."""
        angles = np.array([p.theta_L for p in self.postures])
        return FingerPosture(tuple(
            np.interp(f_tr, self.forces, angles[:, j])
            for j in range(angles.shape[1])))


def _table_posture(params, f_tr, solve_kwargs):
    try:
        return solve_posture(params, f_tr, **solve_kwargs).posture
    except SolverNonConvergence as error:
        logger.warning("%s; tabulating the best iterate", error)
        return error.best.posture


def loading_table(params, forces, **solve_kwargs):
    """Solve the free finger at every force of an increasing grid.

    A force whose solve stops at its iteration limit contributes the
    best iterate found, with a warning.
    """
    forces = np.asarray(forces, dtype=float)
    require(len(forces) >= 2, "a loading table needs two or more forces")
    require(forces[0] >= 0 and bool(np.all(np.diff(forces) > 0)),
            "table forces must be >= 0 and strictly increasing")
    postures = tuple(_table_posture(params, f, solve_kwargs)
                     for f in forces)
    insertions = np.array([shaft_insertion(params, p) for p in postures])
    logger.info("loading table: %d forces up to %.6g N, insertion up to "
                "%.6g mm", len(forces), forces[-1], insertions.max())
    return LoadingTable(forces=forces, insertions=insertions,
                        postures=postures)


def posture_error(params, posture, p_act):
    """Distance (mm) between each computed pin and its measurement."""
    pins = forward_kinematics(params, posture)[:params.n]
    p_act = np.asarray(p_act, dtype=float)
    require(p_act.shape == pins.shape,
            "expected {} measured pins, got {}", params.n, len(p_act))
    return np.linalg.norm(pins - p_act, axis=1)


OBSERVATION_COLUMNS = ('f_tr_N', 'pin_index', 'x_mm', 'y_mm')


def read_observations(path):
    """Read measured pin positions from a CSV file.

    Columns are ``f_tr_N, pin_index, x_mm, y_mm``, one row per pin.
    Consecutive rows with the same force and increasing pin indices
    starting at 1 form one observation.

    :return: a list of :class:`PostureObservation`.
    """
    observations = []
    with open(path, newline='') as csv_file:
        reader = csv.DictReader(csv_file)
        missing = set(OBSERVATION_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise InvalidParameters(
                "{}: missing columns {}".format(path, sorted(missing)))
        current_force, pins = None, []
        for line, row in enumerate(reader, start=2):
            try:
                force = float(row['f_tr_N'])
                index = int(row['pin_index'])
                point = (float(row['x_mm']), float(row['y_mm']))
            except (TypeError, ValueError):
                raise InvalidParameters(
                    "{}:{}: malformed row {}".format(path, line, row))
            if pins and (force != current_force or index == 1):
                observations.append(PostureObservation(current_force, pins))
                pins = []
            if index != len(pins) + 1:
                raise InvalidParameters(
                    "{}:{}: expected pin {}, got {}".format(
                        path, line, len(pins) + 1, index))
            current_force = force
            pins.append(point)
        if pins:
            observations.append(PostureObservation(current_force, pins))
    return observations


def write_observations(path, observations):
    with open(path, 'w', newline='') as csv_file:
        writer = csv.writer(csv_file, lineterminator='\n')
        writer.writerow(OBSERVATION_COLUMNS)
        for observation in observations:
            for index, (x, y) in enumerate(observation.p_act, start=1):
                writer.writerow([format(observation.f_tr, '.9g'), index,
                                 format(x, '.9g'), format(y, '.9g')])


def synthesize_observations(params, forces, noise=0.0, seed=0,
                            **solve_kwargs):
    """Pin positions computed at ``params``, with optional Gaussian noise
    of standard deviation ``noise`` (mm) on every coordinate."""
    rng = np.random.default_rng(seed)
    observations = []
    for f_tr in forces:
        posture = solve_posture(params, f_tr, **solve_kwargs).posture
        pins = forward_kinematics(params, posture)[:params.n]
        if noise:
            pins = pins + rng.normal(scale=noise, size=pins.shape)
        observations.append(PostureObservation(f_tr, tuple(map(tuple,
                                                               pins))))
    return observations


@dataclass(frozen=True)
class KfsFit:
    """Fitted shaft stiffness.

    ``fits`` and ``residuals`` hold, per observation used, the fitted
    stiffness and the summed pin distance at it. ``k_fs`` is ``inf``
    and ``identifiable`` False when the best fit runs into the upper
    search bound (e.g. a finger that did not bend at all).
    """
    k_fs: float
    fits: tuple
    residuals: tuple
    identifiable: bool


def _pin_misfit(geometry, observations, log_k, solve_kwargs):
    params = geometry.with_kfs(math.exp(log_k))
    total = 0.0
    for observation in observations:
        posture = solve_posture(params, observation.f_tr,
                                **solve_kwargs).posture
        total += float(np.sum(posture_error(params, posture,
                                            observation.p_act)))
    return total


def identify_kfs(geometry, observations, combine='mean',
                 bounds=(1.0, 1e6), xatol=1e-9, **solve_kwargs):
    """Fit the shaft stiffness to measured pin positions.

    For each observation, the stiffness minimizing the summed distance
    between computed and measured pins is searched on a log scale
    within ``bounds`` (N·mm/rad). ``combine='mean'`` averages the
    per-observation fits, ``combine='joint'`` fits all observations at
    once. Observations without load carry no information and are
    skipped.

    :param geometry: :class:`FingerParams`; its ``k_FS`` is ignored.
    :return: a :class:`KfsFit`.
    :raise IdentificationError: if no observation has ``f_tr > 0``.
    """
    require(combine in ('mean', 'joint'),
            "combine must be 'mean' or 'joint', got {!r}", combine)
    require(0 < bounds[0] < bounds[1], "invalid stiffness bounds {}",
            bounds)
    loaded = [o for o in observations if o.f_tr > 0]
    if not loaded:
        raise IdentificationError(
            "no observation with a positive insertion force")
    for observation in loaded:
        require(len(observation.p_act) == geometry.n,
                "observation at {} N has {} pins, finger has {}",
                observation.f_tr, len(observation.p_act), geometry.n)
    lo, hi = math.log(bounds[0]), math.log(bounds[1])
    groups = [[o] for o in loaded] if combine == 'mean' else [loaded]

    fits, residuals = [], []
    identifiable = True
    for group in groups:
        result = minimize_scalar(
            lambda log_k: _pin_misfit(geometry, group, log_k, solve_kwargs),
            bounds=(lo, hi), method='bounded', options={'xatol': xatol})
        if result.x >= hi - 1e-3:
            identifiable = False
            fits.append(math.inf)
        else:
            fits.append(math.exp(result.x))
        residuals.append(float(result.fun))
        logger.info("k_FS fit over %d observation(s): %.6g N·mm/rad "
                    "(residual %.3g mm)", len(group), fits[-1],
                    residuals[-1])
    k_fs = math.inf if not identifiable else float(np.mean(fits))
    return KfsFit(k_fs=k_fs, fits=tuple(fits), residuals=tuple(residuals),
                  identifiable=identifiable)


class SpringObjective(enum.Enum):
    UNIFORM_BEND = 'UniformBend'
    PROXIMAL_FIRST = 'ProximalFirst'

    def __str__(self):
        return self.value


def _moments_at(params, forces, angle):
    """Joint moments under ``forces`` with every joint held at
    ``angle``."""
    held = np.full(params.n, angle)
    return _recursion(params, forces[np.newaxis], held)[1][0]


def _even_springs(params, forces):
    """Springs bending every joint by one angle under ``forces``.

    The angle is the smallest one at which the softest joint needs no
    spring, ``min_i m_L_i(c) / c = k_FS``, searched in steps of one
    degree up to ``pi``.

    :return: ``(k_sp, c)``, or None when no angle fits.
    """
    k_FS = params.k_FS

    def excess(c):
        return float(np.min(_moments_at(params, forces, c))) / c - k_FS

    lo = 1e-9
    if not excess(lo) > 0:
        return None
    for hi in np.radians(np.arange(1.0, 181.0)):
        if excess(hi) <= 0:
            break
        lo = hi
    else:
        return None
    c = brentq(excess, lo, hi, xtol=1e-14)
    k_sp = _moments_at(params, forces, c) / c - k_FS
    return np.maximum(k_sp, 0.0), c


def _energy_gradient(params, forces, h):
    n = params.n
    rows = np.vstack([forces + h * np.eye(n), forces - h * np.eye(n)])
    theta = _recursion(params, rows, np.full(n, np.nan))[0]
    energy = 0.5 * np.sum(params.stiffness * theta ** 2, axis=1)
    return (energy[:n] - energy[n:]) / (2 * h)


def _even_loadings(params, f_tr_ref, scan):
    """Load splits whose even-bend springs make them stationary.

    A finger bends at every joint only if the distal link carries load.
    The first split tried is the whole load on link ``n``; then, for
    each partner link ``j``, the share ``s`` on link ``n`` (the rest on
    ``j``) at which the energy gradient is the same on both links.
    """
    n = params.n
    h = 1e-6 * f_tr_ref

    def split(partner, share):
        forces = np.zeros(n)
        forces[-1] = share * f_tr_ref
        forces[partner - 1] += (1 - share) * f_tr_ref
        return forces

    def imbalance(partner, share):
        forces = split(partner, share)
        design = _even_springs(params, forces)
        if design is None:
            return math.nan
        grad = _energy_gradient(params.with_springs(design[0]), forces, h)
        return grad[-1] - grad[partner - 1]

    yield split(n, 1.0)
    shares = np.linspace(1.0, 0.0, scan + 1)[:-1]
    for partner in range(1, n):
        values = [imbalance(partner, s) for s in shares]
        for (s0, v0), (s1, v1) in zip(zip(shares, values),
                                      zip(shares[1:], values[1:])):
            if not (math.isfinite(v0) and math.isfinite(v1)) or \
                    v0 * v1 > 0:
                continue
            share = brentq(lambda s: imbalance(partner, s), s1, s0,
                           xtol=1e-12)
            yield split(partner, share)


def _uniform_bend(params, f_tr_ref, scan, solve_kwargs):
    tried = 0
    for forces in _even_loadings(params, f_tr_ref, scan):
        design = _even_springs(params, forces)
        if design is None:
            continue
        k_sp, c = design
        tried += 1
        theta = solve_posture(params.with_springs(k_sp), f_tr_ref,
                              **solve_kwargs).posture.as_array()
        spread = theta.max() - theta.min()
        if spread <= 0.01 * abs(theta.mean()):
            logger.debug("even bend of %.6g rad with loads %s", c,
                         np.round(forces, 6).tolist())
            return k_sp
        logger.debug("loads %s: re-solved spread %.3g rad",
                     np.round(forces, 6).tolist(), spread)
    raise DesignInfeasible(
        "no spring set bends all {} joints evenly at {:.6g} N ({} "
        "candidate load split(s) re-solved unevenly)".format(
            params.n, f_tr_ref, tried))


def _proximal_first(params, ratio):
    n = params.n
    profile = ratio ** (np.arange(n) / (n - 1)) if n > 1 else np.ones(1)
    return params.k_FS * (profile - 1.0)


def design_springs(params, objective=SpringObjective.UNIFORM_BEND,
                   f_tr_ref=0.8, ratio=1.25, scan=40, **solve_kwargs):
    """Torsion springs giving a prescribed bending pattern at
    ``f_tr_ref``.

    * ``UniformBend``: every joint bends by the same angle. For each
      candidate load split the springs follow from the joint moments
      with all joints at a common angle; the softest joint gets no
      spring. The first candidate whose
      re-solved posture spreads by at most 1% of its mean angle wins.
      Under light loads the least-energy split leaves everything on the
      proximal link, so no spring set bends a long finger evenly there.

    * ``ProximalFirst``: stiffness grows geometrically from ``k_FS`` at
      the palm to ``ratio * k_FS`` at the fingertip. The re-solved
      angles must not increase towards the fingertip, with
      ``theta_1 >= 2 theta_n``.

    :param scan: shares tried per partner link before refining the
        stationary ones.
    :return: tuple of ``k_sp`` (N·mm/rad).
    :raise DesignInfeasible: if the re-solved posture misses the
        pattern.
    """
    objective = SpringObjective(str(objective))
    require(f_tr_ref > 0, "reference force must be positive, got {}",
            f_tr_ref)
    require(ratio >= 1, "stiffness ratio must be >= 1, got {}", ratio)
    require(scan >= 1, "scan needs at least one share, got {}", scan)
    if objective is SpringObjective.UNIFORM_BEND:
        k_sp = _uniform_bend(params, f_tr_ref, scan, solve_kwargs)
    else:
        k_sp = _proximal_first(params, ratio)
        check = solve_posture(params.with_springs(k_sp), f_tr_ref,
                              **solve_kwargs).posture.as_array()
        slack = 1e-6 * abs(check).max()
        too_flat = params.n > 1 and check[0] < 2 * check[-1]
        if np.any(np.diff(check) > slack) or too_flat:
            raise DesignInfeasible(
                "proximal-first design does not bend from the palm: "
                "angles {}".format(np.round(check, 6).tolist()))
    logger.info("%s springs at %.6g N: %s", objective, f_tr_ref,
                np.round(k_sp, 3).tolist())
    return tuple(float(k) for k in k_sp)

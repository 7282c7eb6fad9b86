"""Command-line front end: ``gripsim run`` and ``gripsim sweep``.

Each experiment reads its sections from the scenario, writes its CSV
traces into the output directory and returns a summary, which is
written as ``summary.json``. Exit codes: 0 on success, 1 for a bad
scenario or parameter, 2 when the solver does not converge, 3 for an
infeasible design or cycle (and failed checks under ``--strict``).
"""

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import finger, grasp, hand, scenario, screw
from .__version__ import __version__
from .ratchet import LockMode
from .utils import (DesignInfeasible, GripSimError, InfeasibleCycle,
                    InvalidParameters, ScenarioError,
                    SolverNonConvergence, StallError, per_rad_to_per_deg,
                    setup_logging)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_INFEASIBLE = 3

OUTPUT_UNITS = {'length': 'mm', 'force': 'N', 'angle': 'rad',
                'torque': 'N·mm', 'stiffness': 'N·mm/rad'}


def exit_code(error):
    """Exit code for an error raised while running an experiment."""
    if isinstance(error, SolverNonConvergence):
        return EXIT_SOLVER
    if isinstance(error, (DesignInfeasible, InfeasibleCycle)):
        return EXIT_INFEASIBLE
    return EXIT_CONFIG


def _path(out_dir, name):
    return os.path.join(out_dir, name)


def _report(report):
    return {check.name: {'passed': check.passed, 'margin': check.margin}
            for check in report.checks}


def _check_rows(group, report):
    return [(group, check.name, check.passed, check.margin, check.detail)
            for check in report.checks]


STATE_COLUMNS = ('step', 'theta_m_rad', 'mode', 'x_shaft_mm',
                 'theta_sh_rad', 'f_ex_N', 'tau_m_Nmm')


def run_trsw(plan, out_dir, strict=False, seed=None):
    """Turn the motor against a load and record every step.

    A stall ends the trace; it is a regime of the drive, not an error.
    """
    params = plan.trsw_params()
    load = plan.load_model()
    motor = plan.section('motor')
    report = screw.validate_design(params)
    if strict and not report.passed:
        raise DesignInfeasible("drive design fails: {}".format(
            ', '.join(c.name for c in report.failures())), report=report)
    stalled = None
    try:
        trace = screw.motor_sweep(params, load, motor.get('angle', 4.0),
                                  motor.get('step'))
    except StallError as error:
        trace = error.trace + [error.state]
        stalled = error
    scenario.write_csv(_path(out_dir, 'trace.csv'), STATE_COLUMNS, [
        (i, s.theta_m, str(s.mode), s.x_shaft, s.theta_sh, s.f_ex, s.tau_m)
        for i, s in enumerate(trace)])
    switches = [(str(a.mode), str(b.mode)) for a, b in zip(trace, trace[1:])
                if a.mode is not b.mode]
    final = trace[-1]
    return {
        'switching_threshold_N': screw.switching_threshold(params),
        'stall_load_N': screw.stall_load(params),
        'peak_f_ex_N': screw.peak_load(trace),
        'stalled': stalled is not None,
        'tau_required_Nmm': (stalled.tau_required if stalled
                             else None),
        'transitions': ['{}->{}'.format(a, b) for a, b in switches],
        'final_mode': str(final.mode),
        'final_x_shaft_mm': final.x_shaft,
        'final_theta_sh_rad': final.theta_sh,
        'steps': len(trace) - 1,
        'design': _report(report),
        'design_passed': report.passed,
    }


POSTURE_COLUMNS = ('link', 'f_FS_N', 'theta_rad', 'm_L_Nmm', 'pin_x_mm',
                   'pin_y_mm')


def _require_forces(plan):
    if not plan.forces:
        raise ScenarioError("experiment {} needs a forces list".format(
            plan.experiment))
    return plan.forces


def run_finger_solve(plan, out_dir, strict=False, seed=None):
    """Solve the free finger at every force; one CSV per force."""
    params = plan.finger_params()
    options = plan.solver_options(seed)
    solutions = []
    for index, f_tr in enumerate(_require_forces(plan), start=1):
        solution = finger.solve_posture(params, f_tr, **options)
        pins = finger.forward_kinematics(params, solution.posture)
        rows = [(i + 1, solution.distribution.f_FS[i],
                 solution.posture.theta_L[i], solution.loads.m_L[i],
                 pins[i, 0], pins[i, 1]) for i in range(params.n)]
        scenario.write_csv(_path(out_dir, 'posture_{:02d}.csv'.format(index)),
                           POSTURE_COLUMNS, rows)
        force_res, moment_res = finger.equilibrium_residuals(
            params, solution.distribution, solution.posture, solution.loads)
        solutions.append({
            'f_tr_N': f_tr,
            'objective': solution.objective,
            'energy_Nmm': solution.energy,
            'total_bend_rad': solution.posture.total_bend,
            'insertion_mm': finger.shaft_insertion(params, solution.posture),
            'fingertip_mm': pins[-1].tolist(),
            'force_residual_N': force_res,
            'moment_residual_Nmm': moment_res,
            'start': solution.start,
        })
    return {
        'n': params.n,
        'k_FS_Nmm_per_rad': params.k_FS,
        'solutions': solutions,
        'total_bend_rad': solutions[-1]['total_bend_rad'],
    }


def _observations(plan, geometry, seed):
    values = plan.section('observations')
    if 'path' in values:
        path = values['path']
        if not os.path.isabs(path):
            path = os.path.join(plan.base_dir(), path)
        try:
            return finger.read_observations(path)
        except OSError as error:
            raise ScenarioError("cannot read observations: {}".format(error))
    forces = values.get('forces') or plan.forces
    if not forces:
        raise ScenarioError("observations need a path or a forces list")
    truth = geometry.with_kfs(values.get('k_FS', geometry.k_FS))
    return finger.synthesize_observations(
        truth, forces, noise=values.get('noise', 0.0),
        seed=values.get('seed', 0 if seed is None else seed),
        **plan.solver_options(seed))


FIT_COLUMNS = ('observation', 'f_tr_N', 'k_FS_Nmm_per_rad', 'residual_mm')
ERROR_COLUMNS = ('f_tr_N', 'pin_index', 'error_mm')


def run_identify(plan, out_dir, strict=False, seed=None):
    """Fit ``k_FS`` to measured (or synthesized) pin positions."""
    geometry = plan.finger_params()
    observations = _observations(plan, geometry, seed)
    finger.write_observations(_path(out_dir, 'observations.csv'),
                              observations)
    combine = plan.section('observations').get('combine', 'mean')
    options = plan.solver_options(seed)
    fit = finger.identify_kfs(geometry, observations, combine=combine,
                              **options)
    loaded = [o for o in observations if o.f_tr > 0]
    labels = ([(i, o.f_tr) for i, o in enumerate(loaded, start=1)]
              if combine == 'mean' else [('all', '')])
    scenario.write_csv(_path(out_dir, 'fits.csv'), FIT_COLUMNS, [
        (label, f_tr, k, r) for (label, f_tr), k, r
        in zip(labels, fit.fits, fit.residuals)])
    errors = []
    if fit.identifiable:
        fitted = geometry.with_kfs(fit.k_fs)
        for observation in loaded:
            posture = finger.solve_posture(fitted, observation.f_tr,
                                           **options).posture
            distances = finger.posture_error(fitted, posture,
                                             observation.p_act)
            errors.extend((observation.f_tr, i, d)
                          for i, d in enumerate(distances, start=1))
    scenario.write_csv(_path(out_dir, 'errors.csv'), ERROR_COLUMNS, errors)
    return {
        'k_FS_Nmm_per_rad': fit.k_fs,
        'k_FS_Nmm_per_deg': per_rad_to_per_deg(fit.k_fs),
        'identifiable': fit.identifiable,
        'fits_Nmm_per_rad': list(fit.fits),
        'residuals_mm': list(fit.residuals),
        'observations': len(observations),
        'max_pin_error_mm': max((e[2] for e in errors), default=None),
    }


def _spring_design(plan, params, seed):
    values = plan.section('design')
    objective = values.get('objective', str(
        finger.SpringObjective.UNIFORM_BEND))
    try:
        objective = finger.SpringObjective(objective)
    except ValueError:
        raise ScenarioError("unknown spring objective {!r}".format(objective))
    return objective, finger.design_springs(
        params, objective, values.get('f_tr_ref', 0.8),
        values.get('ratio', 1.25), **plan.solver_options(seed))


SPRING_COLUMNS = ('joint', 'k_sp_Nmm_per_rad', 'k_L_Nmm_per_rad',
                  'theta_rad')


def run_design_springs(plan, out_dir, strict=False, seed=None):
    """Design the joint springs and check the posture they give."""
    params = plan.finger_params()
    objective, k_sp = _spring_design(plan, params, seed)
    designed = params.with_springs(k_sp)
    f_tr_ref = plan.section('design').get('f_tr_ref', 0.8)
    posture = finger.solve_posture(designed, f_tr_ref,
                                   **plan.solver_options(seed)).posture
    scenario.write_csv(_path(out_dir, 'springs.csv'), SPRING_COLUMNS, [
        (i + 1, k_sp[i], designed.stiffness[i], posture.theta_L[i])
        for i in range(params.n)])
    return {
        'objective': str(objective),
        'f_tr_ref_N': f_tr_ref,
        'k_sp_Nmm_per_rad': list(k_sp),
        'theta_rad': list(posture.theta_L),
        'total_bend_rad': posture.total_bend,
    }


def _grasp_finger(plan, seed):
    """Finger params, with designed springs when a design is given."""
    params = plan.finger_params()
    if plan.section('design').get('objective') is None:
        return params, None
    objective, k_sp = _spring_design(plan, params, seed)
    return params.with_springs(k_sp), objective


def run_grasp(plan, out_dir, strict=False, seed=None):
    """Wrap the finger around the scenario's object."""
    params, objective = _grasp_finger(plan, seed)
    obj = plan.circular_object(params)
    trsw = plan.trsw_params()
    tau_th = plan.section('hand').get('tau_th', hand.HandConfig.tau_th)
    options = dict(plan.solver_options(seed), **plan.wrap_options())
    result = grasp.wrap_simulate(params, obj, trsw, tau_th, **options)
    columns = ('f_tr_N', 'held') + tuple(
        'theta_{}_rad'.format(i) for i in range(1, params.n + 1)) + \
        ('sum_theta_rad',)
    scenario.write_csv(_path(out_dir, 'wrap.csv'), columns, [
        (s.f_tr, ' '.join(map(str, s.held))) + s.posture.theta_L +
        (s.posture.total_bend,) for s in result.trace])
    scenario.write_csv(_path(out_dir, 'contacts.csv'), ('f_tr_N', 'links'),
                       [(f, ' '.join(map(str, links)))
                        for f, links in result.events])
    return {
        'springs': str(objective) if objective else 'given',
        'object_center_mm': list(obj.center),
        'object_diameter_mm': obj.diameter,
        'terminated_by': str(result.terminated_by),
        'contact_links': sorted(result.contact_links),
        'contact_count': result.contact_count,
        'f_tr_final_N': result.f_tr_final,
        'theta_rad': list(result.posture.theta_L),
        'total_bend_rad': result.posture.total_bend,
    }


def run_cycle(plan, out_dir, strict=False, seed=None):
    """Grasp, then release back to the origin."""
    params, _ = _grasp_finger(plan, seed)
    config = plan.hand_config(params)
    obj = None
    if plan.section('object'):
        obj = plan.circular_object(params)
    options = plan.solver_options(seed)
    report = hand.check_cycle_feasibility(config)
    trace, state = hand.run_cycle(config, obj, strict=strict, **options)
    scenario.write_csv(_path(out_dir, 'cycle.csv'), hand.CycleTrace.COLUMNS, [
        (r.step, str(r.phase), r.theta_m, str(r.mode), r.x_shaft,
         r.theta_sh, r.f_ex, r.lock_engaged, r.sum_theta) for r in trace])
    final = trace[-1]
    retraction, holds = None, None
    if state.lock.mode is LockMode.SELF_LOCKING:
        disturbance = hand.disturbance_response(config, state,
                                                config.finger_strength)
        retraction, holds = disturbance.retraction, disturbance.holds
    return {
        'phases': [str(p) for p in trace.phases()],
        'transitions': ['{}->{}'.format(a, b)
                        for a, b in trace.mode_transitions()],
        'grasp_force_N': config.grasp_force,
        'grasp_x_shaft_mm': state.mechanism.x_shaft,
        'grasp_total_bend_rad': state.posture.total_bend,
        'final_x_shaft_mm': final.x_shaft,
        'final_sum_theta_rad': final.sum_theta,
        'steps': len(trace),
        'feasibility': _report(report),
        'feasible': report.passed,
        'assumptions': list(report.assumptions),
        'payload_kg': hand.payload_estimate(config),
        'disturbance_retraction_mm': retraction,
        'disturbance_holds': holds,
    }


CHECK_COLUMNS = ('group', 'check', 'passed', 'margin', 'detail')


def run_validate(plan, out_dir, strict=False, seed=None):
    """Drive and cycle checks plus the payload estimate.

    Failed checks are reported; with ``strict`` they raise
    :class:`~gripsim.utils.DesignInfeasible`.
    """
    config = plan.hand_config()
    drive = screw.validate_design(config.trsw)
    cycle = hand.check_cycle_feasibility(config)
    scenario.write_csv(_path(out_dir, 'checks.csv'), CHECK_COLUMNS,
                       _check_rows('trsw', drive) +
                       _check_rows('cycle', cycle))
    passed = drive.passed and cycle.passed
    summary = {
        'trsw': _report(drive),
        'cycle': _report(cycle),
        'passed': passed,
        'switching_threshold_N': screw.switching_threshold(config.trsw),
        'grasp_force_N': config.grasp_force,
        'payload_kg': hand.payload_estimate(config),
        'meets_payload': hand.meets_payload(config),
        'assumptions': list(cycle.assumptions),
    }
    if strict and not passed:
        failed = [c.name for c in drive.failures() + cycle.failures()]
        raise DesignInfeasible("checks fail: {}".format(', '.join(failed)),
                               report=drive)
    return summary


EXPERIMENTS = {
    'trsw-sim': run_trsw,
    'finger-solve': run_finger_solve,
    'identify-kfs': run_identify,
    'design-springs': run_design_springs,
    'grasp-sim': run_grasp,
    'cycle-sim': run_cycle,
    'validate': run_validate,
}


def run_experiment(plan, out_dir, strict=False, seed=None):
    """Run the scenario's experiment into ``out_dir``.

    :return: the summary, also written to ``summary.json``.
    """
    os.makedirs(out_dir, exist_ok=True)
    logger.info("running %s into %s", plan.experiment, out_dir)
    summary = EXPERIMENTS[plan.experiment](plan, out_dir, strict=strict,
                                           seed=seed)
    summary = dict(summary, experiment=plan.experiment, units=OUTPUT_UNITS,
                   scenario=plan.raw, version=__version__)
    scenario.write_summary(_path(out_dir, 'summary.json'), summary)
    return summary


def _scalars(summary):
    return {key: value for key, value in summary.items()
            if key not in ('experiment', 'units', 'version')
            and (value is None or isinstance(value, (bool, int, float, str)))}


def _sweep_point(plan, key, value, out_dir, strict, seed):
    try:
        point = plan.with_value(key, value)
        summary = run_experiment(point, out_dir, strict=strict, seed=seed)
    except GripSimError as error:
        logger.info("sweep point %s=%r fails: %s", key, value, error)
        return exit_code(error), {'error': str(error)}
    return EXIT_OK, _scalars(summary)


def run_sweep(plan, out_dir, strict=False, seed=None, threads=1):
    """Run the experiment once per sweep value, in ``point_NNN``
    directories, and tabulate the scalar results in ``sweep.csv``.

    Points are collected in grid order whatever ``threads`` is.

    :return: the exit code of the first failing point, else 0.
    """
    values = plan.section('sweep')
    if 'key' not in values or 'values' not in values:
        raise ScenarioError("sweep needs a key and a list of values")
    key, grid = values['key'], values['values']
    if not isinstance(grid, list) or not grid:
        raise ScenarioError("sweep values must be a non-empty list")
    if any(isinstance(v, float) and not math.isfinite(v) for v in grid):
        raise ScenarioError("sweep values must be finite")
    os.makedirs(out_dir, exist_ok=True)
    dirs = [_path(out_dir, 'point_{:03d}'.format(i)) for i in range(len(grid))]

    with ThreadPoolExecutor(max_workers=threads) as executor:
        results = list(executor.map(
            lambda args: _sweep_point(plan, key, args[0], args[1], strict,
                                      seed),
            zip(grid, dirs)))

    columns = sorted(set().union(*(r[1] for r in results)))
    header = ('point', key, 'status') + tuple(columns)
    rows = []
    for index, (value, (code, result)) in enumerate(zip(grid, results)):
        shown = value if isinstance(value, (int, float)) else str(value)
        rows.append((index, shown, code) + tuple(
            '' if result.get(c) is None else result[c] for c in columns))
    scenario.write_csv(_path(out_dir, 'sweep.csv'), header, rows)
    codes = [code for code, _ in results]
    scenario.write_summary(_path(out_dir, 'summary.json'), {
        'experiment': plan.experiment,
        'sweep_key': key,
        'points': len(grid),
        'failed_points': sum(1 for c in codes if c != EXIT_OK),
        'scenario': plan.raw,
        'units': OUTPUT_UNITS,
        'version': __version__,
    })
    return next((c for c in codes if c != EXIT_OK), EXIT_OK)


def build_parser():
    parser = argparse.ArgumentParser(
        prog='gripsim',
        description='Simulate and check a 1-DOF self-adaptive gripper.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True
    for name, text in (('run', 'run the scenario once'),
                       ('sweep', 'run the scenario over its sweep grid')):
        command = commands.add_parser(name, help=text)
        command.add_argument('--scenario', required=True,
                             help='scenario file (JSON)')
        command.add_argument('--out', required=True,
                             help='output directory')
        command.add_argument('--strict', action='store_true',
                             help='fail (exit 3) on failed design checks')
        command.add_argument('--threads', type=int, default=1,
                             help='worker threads for sweep points')
        command.add_argument('--seed', type=int, default=None,
                             help='seed of the solver jitter starts')
    return parser


def main(argv=None):
    """Entry point of the ``gripsim`` command.

    :return: the exit code.
    """
    args = build_parser().parse_args(argv)
    try:
        setup_logging()
        if args.threads < 1:
            raise InvalidParameters(
                "--threads must be >= 1, got {}".format(args.threads))
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise InvalidParameters(
                "--seed must lie in [0, 2**64), got {}".format(args.seed))
        plan = scenario.read_scenario(args.scenario)
        if args.command == 'sweep':
            code = run_sweep(plan, args.out, strict=args.strict,
                             seed=args.seed, threads=args.threads)
        else:
            run_experiment(plan, args.out, strict=args.strict,
                           seed=args.seed)
            code = EXIT_OK
    except GripSimError as error:
        print('gripsim: error: {}'.format(error), file=sys.stderr)
        return exit_code(error)
    if code != EXIT_OK:
        print('gripsim: a sweep point failed, see sweep.csv',
              file=sys.stderr)
    return code

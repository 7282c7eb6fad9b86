import csv
import json
import sys

import pytest
import setpath  # noqa:F401, must come before 'import gripsim'
from utils import write_scenario

from gripsim import cli
from gripsim.scenario import fixture_path, read_summary
from gripsim.utils import (DesignInfeasible, IdentificationError,
                           InfeasibleCycle, ScenarioError,
                           SolverNonConvergence, StallError)


def run(*argv):
    return cli.main([str(arg) for arg in argv])


def read_rows(path):
    with open(path, newline='') as fd:
        return list(csv.DictReader(fd))


def tree(path):
    """Relative path to bytes for every file below ``path``."""
    return {str(p.relative_to(path)): p.read_bytes()
            for p in sorted(path.rglob('*')) if p.is_file()}


@pytest.fixture(scope='module')
def fig5_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp('fig5')
    code = run('sweep', '--scenario', fixture_path('fig5.scenario'),
               '--out', out)
    return code, out


@pytest.mark.parametrize("error, code", [
    pytest.param(ScenarioError("x"), 1, id='scenario'),
    pytest.param(IdentificationError("x"), 1, id='identification'),
    pytest.param(StallError("x"), 1, id='stall'),
    pytest.param(SolverNonConvergence("x"), 2, id='solver'),
    pytest.param(DesignInfeasible("x"), 3, id='design'),
    pytest.param(InfeasibleCycle("x"), 3, id='cycle'),
])
def test_exit_code(error, code):
    assert cli.exit_code(error) == code


def test_empty_scenario(tmp_path, capsys):
    scenario = tmp_path / 'empty.scenario'
    scenario.write_text('')
    assert run('run', '--scenario', scenario, '--out', tmp_path / 'o') == 1
    err = capsys.readouterr().err
    assert 'missing experiment selector' in err
    assert err.startswith('gripsim: error:')


def test_bad_thread_count(tmp_path, capsys):
    assert run('sweep', '--scenario', fixture_path('fig5.scenario'),
               '--out', tmp_path, '--threads', '0') == 1
    assert '--threads' in capsys.readouterr().err


def test_finger_solve_run(tmp_path):
    out = tmp_path / 'first'
    assert run('run', '--scenario', fixture_path('fig10.scenario'),
               '--out', out) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ['posture_01.csv', 'posture_02.csv', 'posture_03.csv',
                     'summary.json']
    rows = read_rows(out / 'posture_02.csv')
    assert [row['link'] for row in rows] == [str(i) for i in range(1, 8)]
    assert sum(float(row['f_FS_N']) for row in rows) == \
        pytest.approx(5.1, rel=1e-6)
    summary = read_summary(out / 'summary.json')
    assert summary['experiment'] == 'finger-solve'
    assert summary['units']['length'] == 'mm'
    assert [s['f_tr_N'] for s in summary['solutions']] == [3.2, 5.1, 6.3]
    for solution in summary['solutions']:
        assert solution['force_residual_N'] <= 1e-9
        assert solution['moment_residual_Nmm'] <= 1e-9


def test_reruns_are_byte_identical(tmp_path):
    for name in ('first', 'second'):
        assert run('run', '--scenario', fixture_path('fig10.scenario'),
                   '--out', tmp_path / name) == 0
    assert tree(tmp_path / 'first') == tree(tmp_path / 'second')


def test_trsw_sweep(fig5_sweep):
    code, out = fig5_sweep
    assert code == 0
    rows = read_rows(out / 'sweep.csv')
    assert [row['trsw.tau_pre_max'] for row in rows] == \
        ['0', '30', '60', '90', '120', '200']
    assert all(row['status'] == '0' for row in rows)
    peaks = [float(row['peak_f_ex_N']) for row in rows]
    assert peaks == sorted(peaks)
    assert [row['stalled'] for row in rows] == ['false'] * 5 + ['true']
    stalled = read_summary(out / 'point_005' / 'summary.json')
    assert stalled['stalled'] is True
    moderate = read_summary(out / 'point_003' / 'summary.json')
    assert moderate['transitions'] == ['Translation->Rotation']
    assert moderate['peak_f_ex_N'] == pytest.approx(20.6061, rel=1e-4)
    summary = read_summary(out / 'summary.json')
    assert summary['points'] == 6
    assert summary['failed_points'] == 0


def test_sweep_threads_do_not_change_results(fig5_sweep, tmp_path):
    _, single = fig5_sweep
    assert run('sweep', '--scenario', fixture_path('fig5.scenario'),
               '--out', tmp_path, '--threads', '3') == 0
    assert tree(tmp_path) == tree(single)


def test_single_point_sweep_matches_run(tmp_path):
    with open(fixture_path('fig5.scenario'), encoding='utf-8') as fd:
        raw = json.load(fd)
    raw['sweep']['values'] = [90]
    scenario = write_scenario(tmp_path / 'one.scenario', **raw)
    assert run('sweep', '--scenario', scenario, '--out',
               tmp_path / 'sweep') == 0
    assert run('run', '--scenario', scenario, '--out',
               tmp_path / 'run') == 0
    assert tree(tmp_path / 'sweep' / 'point_000') == tree(tmp_path / 'run')


def test_grasp_sweep_over_diameters(tmp_path):
    scenario = write_scenario(
        tmp_path / 'wrap.scenario', experiment='grasp-sim',
        finger={'n': 2}, object={'diameter': 40, 'clearance': 2},
        sweep={'key': 'object.diameter', 'values': [40, 50]})
    assert run('sweep', '--scenario', scenario, '--out', tmp_path / 'o') == 0
    rows = read_rows(tmp_path / 'o' / 'sweep.csv')
    assert [row['object.diameter'] for row in rows] == ['40', '50']
    assert all(row['status'] == '0' for row in rows)
    assert rows[0]['terminated_by'] == 'FullWrap'
    assert rows[0]['contact_count'] == '2'
    point = tmp_path / 'o' / 'point_000'
    summary = read_summary(point / 'summary.json')
    assert summary['contact_links'] == [1, 2]
    assert summary['scenario']['object']['diameter'] == 40
    contacts = read_rows(point / 'contacts.csv')
    assert [row['links'] for row in contacts] == ['1', '2']
    assert len(read_rows(point / 'wrap.csv')) > 2


def test_cycle_run(tmp_path):
    scenario = write_scenario(tmp_path / 'cycle.scenario',
                              experiment='cycle-sim',
                              hand={'table_step': 1.0})
    assert run('run', '--scenario', scenario, '--out', tmp_path / 'o') == 0
    summary = read_summary(tmp_path / 'o' / 'summary.json')
    assert summary['phases'] == ['Grasp', 'Hold', 'ReleaseRotate', 'Extend']
    assert summary['feasible'] is True
    assert summary['final_x_shaft_mm'] == pytest.approx(0.0, abs=1e-9)
    assert summary['disturbance_holds'] is True
    rows = read_rows(tmp_path / 'o' / 'cycle.csv')
    assert len(rows) == summary['steps']
    assert rows[0]['phase'] == 'Grasp'
    assert rows[-1]['mode'] == 'Translation'


def test_shipped_wrap_scenario_designs_springs(mocker, tmp_path):
    wrap = mocker.patch('gripsim.grasp.wrap_simulate',
                        side_effect=SolverNonConvergence("stopped"))
    assert run('run', '--scenario', fixture_path('wrap.scenario'),
               '--out', tmp_path) == 2
    params = wrap.call_args[0][0]
    assert params.k_sp[0] == 0.0
    assert list(params.k_sp) == sorted(params.k_sp)


@pytest.fixture
def infeasible_hand(tmp_path):
    return write_scenario(tmp_path / 'strong.scenario',
                          experiment='validate', hand={'tau_th': 200})


def test_validate_reports_failures(infeasible_hand, tmp_path):
    assert run('run', '--scenario', infeasible_hand, '--out', tmp_path) == 0
    summary = read_summary(tmp_path / 'summary.json')
    assert summary['passed'] is False
    assert summary['cycle']['grasp_in_translation']['passed'] is False
    assert summary['meets_payload'] is True
    rows = read_rows(tmp_path / 'checks.csv')
    assert {row['group'] for row in rows} == {'trsw', 'cycle'}


def test_validate_strict(infeasible_hand, tmp_path, capsys):
    assert run('run', '--scenario', infeasible_hand, '--out', tmp_path,
               '--strict') == 3
    assert 'grasp_in_translation' in capsys.readouterr().err


def test_solver_failure_exit_code(mocker, tmp_path):
    mocker.patch('gripsim.finger.solve_posture',
                 side_effect=SolverNonConvergence("no descent"))
    assert run('run', '--scenario', fixture_path('fig10.scenario'),
               '--out', tmp_path) == 2


def test_design_failure_exit_code(mocker, tmp_path):
    mocker.patch('gripsim.finger.design_springs',
                 side_effect=DesignInfeasible("negative spring"))
    scenario = write_scenario(tmp_path / 'design.scenario',
                              experiment='design-springs',
                              design={'objective': 'UniformBend'})
    assert run('run', '--scenario', scenario, '--out', tmp_path / 'o') == 3


def test_identification_without_load(tmp_path, capsys):
    scenario = write_scenario(tmp_path / 'idle.scenario',
                              experiment='identify-kfs',
                              observations={'forces': [0]})
    assert run('run', '--scenario', scenario, '--out', tmp_path / 'o') == 1
    assert 'positive insertion force' in capsys.readouterr().err


def test_identify_synthesized_observations(tmp_path):
    scenario = write_scenario(
        tmp_path / 'identify.scenario', experiment='identify-kfs',
        units={'length': 'mm', 'force': 'N', 'stiffness': 'N*mm/deg'},
        finger={'n': 3}, observations={'forces': [2.0, 4.0], 'k_FS': 4.5})
    assert run('run', '--scenario', scenario, '--out', tmp_path / 'o') == 0
    summary = read_summary(tmp_path / 'o' / 'summary.json')
    assert summary['identifiable'] is True
    assert summary['k_FS_Nmm_per_deg'] == pytest.approx(4.5, rel=1e-3)
    assert len(read_rows(tmp_path / 'o' / 'fits.csv')) == 2


def test_unknown_sweep_key(tmp_path):
    scenario = write_scenario(tmp_path / 'sweep.scenario',
                              experiment='validate',
                              sweep={'key': 'hand.grip', 'values': [1]})
    assert run('sweep', '--scenario', scenario, '--out', tmp_path / 'o') == 1
    rows = read_rows(tmp_path / 'o' / 'sweep.csv')
    assert rows[0]['status'] == '1'


if __name__ == '__main__':
    pytest.main(sys.argv)

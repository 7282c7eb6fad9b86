"""Scenario files: reading, unit conversion, and the parameter objects
built from them. Also the writers for the CSV and summary outputs.

A scenario is a JSON object naming an ``experiment`` and the ``units``
its numbers are written in. Numbers are converted once, here, to N, mm
and rad; unknown sections and keys are rejected.
"""

import copy
import csv
import json
import math
import os

from . import finger, grasp, hand, ratchet, screw
from .utils import GripSimError, ScenarioError, per_deg_to_per_rad

EXPERIMENTS = ('trsw-sim', 'finger-solve', 'identify-kfs', 'design-springs',
               'grasp-sim', 'cycle-sim', 'validate')

UNIT_TAGS = {
    'length': {'mm': 1.0},
    'force': {'N': 1.0},
    'angle': {'rad': 1.0, 'deg': math.pi / 180.0},
    'torque': {'N·mm': 1.0, 'N*mm': 1.0},
    'stiffness': {'N·mm/rad': 1.0, 'N*mm/rad': 1.0,
                  'N·mm/deg': per_deg_to_per_rad(1.0),
                  'N*mm/deg': per_deg_to_per_rad(1.0)},
}

DEFAULT_UNITS = {'length': 'mm', 'force': 'N', 'angle': 'rad',
                 'torque': 'N·mm', 'stiffness': 'N·mm/rad'}

# Value kinds: a unit dimension converts numbers (or lists of numbers),
# the rest are checked for type only.
SCHEMA = {
    'trsw': {
        'r_g1': 'length', 'r_g2': 'length', 'theta_th': 'angle',
        'mu_st': 'number', 'tau_pre_max': 'torque', 'tau_m_max': 'torque',
        'kinetic_ratio': 'number', 'max_step': 'angle',
        'd_slit': 'length', 'slit_calibration': 'table',
    },
    'finger': {
        'n': 'int', 'l_L': 'length', 'd_L': 'length', 'l_tip': 'length',
        'k_FS': 'stiffness', 'k_sp': 'stiffness', 'rotation': 'str',
    },
    'lock': {
        'pitch': 'length', 'count': 'int', 'stagger': 'length',
        'offset': 'length', 'pawls': 'length',
        'unlock_roll_angle': 'angle', 'roll_tolerance': 'angle',
    },
    'hand': {
        'tau_th': 'torque', 'finger_count': 'int',
        'finger_strength': 'force', 'motor_step': 'angle',
        'table_step': 'force',
    },
    'object': {
        'diameter': 'length', 'center': 'length', 'clearance': 'length',
    },
    'load': {
        'kind': 'str', 'stiffness': 'number', 'rest': 'length',
        'value': 'force', 'position': 'length', 'direction': 'int',
    },
    'observations': {
        'path': 'str', 'forces': 'force', 'noise': 'length', 'seed': 'int',
        'k_FS': 'stiffness', 'combine': 'str',
    },
    'design': {
        'objective': 'str', 'f_tr_ref': 'force', 'ratio': 'number',
    },
    'motor': {
        'angle': 'angle', 'step': 'angle',
    },
    'sweep': {
        'key': 'str', 'values': 'any',
    },
    'solver': {
        'sense': 'str', 'tol': 'number', 'max_iter': 'int', 'jitter': 'int',
        'wrap_step': 'force', 'wrap_tolerance': 'length',
    },
}

TOP_LEVEL = ('experiment', 'units', 'forces') + tuple(SCHEMA)


def _line_of(text, key, section=None):
    """Line (1-based) of the first occurrence of a JSON key, or None.

    With ``section``, only the lines of that top-level object are
    searched; the section's own line is the fallback.
    """
    needle = '"{}"'.format(key)
    lines = text.splitlines()
    first, last = 1, len(lines)
    if section is not None:
        first = _line_of(text, section)
        if first is None:
            return None
        depth = 0
        for last in range(first, len(lines) + 1):
            line = lines[last - 1]
            depth += line.count('{') + line.count('[') - \
                line.count('}') - line.count(']')
            if depth <= 0:
                break
    for number in range(first, last + 1):
        if needle in lines[number - 1]:
            return number
    return None if section is None else first


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError("{} must be a number, got {!r}".format(where, value))
    return float(value)


def _convert(value, kind, units, where):
    if kind in UNIT_TAGS:
        scale = UNIT_TAGS[kind][units[kind]]
        if isinstance(value, list):
            return [_convert(v, kind, units, where) for v in value]
        return _number(value, where) * scale
    if kind == 'number':
        return _number(value, where)
    if kind == 'int':
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError("{} must be an integer, got {!r}".format(
                where, value))
        return value
    if kind == 'str':
        if not isinstance(value, str):
            raise ValueError("{} must be a string, got {!r}".format(
                where, value))
        return value
    if kind == 'table':
        # (slit width, preload torque) rows
        return [(_number(w, where) * UNIT_TAGS['length'][units['length']],
                 _number(t, where) * UNIT_TAGS['torque'][units['torque']])
                for w, t in value]
    return value


def _parse_units(raw, text):
    if 'units' not in raw:
        raise ScenarioError("missing units block",
                            _line_of(text, 'experiment'))
    block = raw['units']
    if not isinstance(block, dict):
        raise ScenarioError("units must be an object", _line_of(text, 'units'))
    units = dict(DEFAULT_UNITS)
    for dimension, tag in block.items():
        if dimension not in UNIT_TAGS:
            raise ScenarioError("unknown unit dimension {!r}".format(
                dimension), _line_of(text, dimension, 'units'))
        if tag not in UNIT_TAGS[dimension]:
            raise ScenarioError(
                "unknown {} unit {!r}, expected one of {}".format(
                    dimension, tag, ', '.join(UNIT_TAGS[dimension])),
                _line_of(text, dimension, 'units'))
        units[dimension] = tag
    return units


class Scenario:
    """A parsed scenario.

    ``sections`` maps each section present to its converted values;
    ``raw`` keeps the document as written, for sweeps.
    """

    def __init__(self, raw, text=None, path=None):
        if text is None:
            text = json.dumps(raw, indent=1)
        self.raw = raw
        self.path = path
        if not isinstance(raw, dict):
            raise ScenarioError("a scenario must be a JSON object", 1)
        for key in raw:
            if key not in TOP_LEVEL:
                raise ScenarioError("unknown section {!r}".format(key),
                                    _line_of(text, key))
        if 'experiment' not in raw:
            raise ScenarioError("missing experiment selector", 1)
        self.experiment = raw['experiment']
        if self.experiment not in EXPERIMENTS:
            raise ScenarioError(
                "unknown experiment {!r}, expected one of {}".format(
                    self.experiment, ', '.join(EXPERIMENTS)),
                _line_of(text, 'experiment'))
        self.units = _parse_units(raw, text)
        self.sections = {}
        for name, schema in SCHEMA.items():
            block = raw.get(name, {})
            if not isinstance(block, dict):
                raise ScenarioError("section {!r} must be an object".format(
                    name), _line_of(text, name))
            values = {}
            for key, value in block.items():
                if key not in schema:
                    raise ScenarioError(
                        "unknown key {!r} in section {!r}".format(key, name),
                        _line_of(text, key, name))
                try:
                    values[key] = _convert(value, schema[key], self.units,
                                           '{}.{}'.format(name, key))
                except (ValueError, TypeError) as error:
                    raise ScenarioError(str(error),
                                        _line_of(text, key, name))
            self.sections[name] = values
        try:
            self.forces = _convert(raw.get('forces', []), 'force',
                                   self.units, 'forces')
        except (ValueError, TypeError) as error:
            raise ScenarioError(str(error), _line_of(text, 'forces'))
        self._text = text

    def section(self, name):
        return self.sections[name]

    def base_dir(self):
        return os.path.dirname(os.path.abspath(self.path)) if self.path \
            else os.getcwd()

    def _build(self, section, factory):
        try:
            return factory()
        except GripSimError as error:
            if isinstance(error, ScenarioError):
                raise
            raise ScenarioError("{}: {}".format(section, error),
                                _line_of(self._text, section))

    def trsw_params(self):
        values = dict(self.sections['trsw'])
        d_slit = values.pop('d_slit', None)
        table = values.pop('slit_calibration', None)

        def build():
            if d_slit is not None:
                values['tau_pre_max'] = screw.preload_from_slit(d_slit, table)
            return screw.ScrewDriveParams(**values)
        return self._build('trsw', build)

    def finger_params(self):
        values = dict(self.sections['finger'])
        k_sp = values.get('k_sp')
        if k_sp is not None and not isinstance(k_sp, list):
            values['k_sp'] = [k_sp] * values.get('n', finger.FingerParams.n)
        return self._build('finger', lambda: finger.FingerParams(**values))

    def lock_params(self):
        values = self.sections['lock']
        n = self.sections['finger'].get('n', finger.FingerParams.n)
        l_L = self.sections['finger'].get('l_L', finger.FingerParams.l_L)

        def build():
            pitch = values.get('pitch', ratchet.LockParams.protrusion_pitch)
            pawls = values.get('pawls')
            if pawls is None:
                pawls = ratchet.staggered_pawls(
                    n, l_L, pitch, values.get('stagger'),
                    values.get('offset'))
            kwargs = {'protrusion_pitch': pitch,
                      'pawl_axial_positions': pawls}
            for key, name in (('count', 'protrusion_count'),
                              ('unlock_roll_angle', 'unlock_roll_angle'),
                              ('roll_tolerance', 'roll_tolerance')):
                if key in values:
                    kwargs[name] = values[key]
            return ratchet.LockParams(**kwargs)
        return self._build('lock', build)

    def hand_config(self, finger_params=None):
        if finger_params is None:
            finger_params = self.finger_params()
        trsw = self.trsw_params()
        lock = self.lock_params()
        values = self.sections['hand']
        return self._build('hand', lambda: hand.HandConfig(
            trsw=trsw, finger=finger_params, lock=lock, **values))

    def load_model(self):
        values = dict(self.sections['load'])
        kind = values.pop('kind', 'free')

        def build():
            if kind == 'free':
                return screw.Free()
            if kind == 'linear_spring':
                return screw.LinearSpring(**values)
            if kind == 'constant':
                return screw.Constant(**values)
            if kind == 'hard_stop':
                return screw.HardStop(**values)
            raise ScenarioError("unknown load kind {!r}".format(kind),
                                _line_of(self._text, 'kind', 'load'))
        try:
            return self._build('load', build)
        except TypeError as error:
            raise ScenarioError("load: {}".format(error),
                                _line_of(self._text, 'load'))

    def circular_object(self, params):
        values = self.sections['object']
        if 'diameter' not in values:
            raise ScenarioError("object needs a diameter",
                                _line_of(self._text, 'object'))

        def build():
            if 'center' in values:
                return grasp.CircularObject(tuple(values['center']),
                                            values['diameter'])
            return grasp.default_object(params, values['diameter'],
                                        values.get('clearance', 2.0))
        return self._build('object', build)

    def solver_options(self, seed=None):
        """Keyword arguments for :func:`~gripsim.finger.solve_posture`."""
        values = self.sections['solver']
        options = {key: values[key] for key in ('sense', 'tol', 'max_iter',
                                                'jitter') if key in values}
        if options.get('jitter'):
            options['seed'] = 0 if seed is None else seed
        return options

    def wrap_options(self):
        values = self.sections['solver']
        options = {}
        if 'wrap_step' in values:
            options['step'] = values['wrap_step']
        if 'wrap_tolerance' in values:
            options['tolerance'] = values['wrap_tolerance']
        return options

    def with_value(self, dotted_key, value):
        """Copy of the scenario with one key replaced, in file units.

        ``forces`` (or its alias ``finger.f_tr``) replaces the force list
        by the single value.
        """
        raw = copy.deepcopy(self.raw)
        raw.pop('sweep', None)
        if dotted_key in ('forces', 'finger.f_tr'):
            raw['forces'] = [value]
            return Scenario(raw, path=self.path)
        section, _, key = dotted_key.partition('.')
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ScenarioError("cannot sweep unknown key {!r}".format(
                dotted_key), _line_of(self._text, 'key', 'sweep'))
        raw.setdefault(section, {})[key] = value
        return Scenario(raw, path=self.path)


def read_scenario(path):
    """Parse a scenario file.

    :raise ScenarioError: with the line number when the file is not
        valid JSON or breaks the schema.
    """
    try:
        with open(path, encoding='utf-8') as fd:
            text = fd.read()
    except OSError as error:
        raise ScenarioError("cannot read scenario: {}".format(error))
    if not text.strip():
        raw = {}
    else:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as error:
            raise ScenarioError(error.msg, error.lineno)
    return Scenario(raw, text=text, path=path)


def fixture_path(name):
    """Path of a scenario shipped with the package."""
    return os.path.join(os.path.dirname(os.path.abspath(__file__)),
                        'scenarios', name)


def format_number(value):
    """Nine significant digits, ``inf``/``-inf``/``nan`` spelled out."""
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, int):
        return str(value)
    return format(float(value), '.9g')


def _normalize(value):
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return format_number(value)
        return float(format(value, '.9g'))
    if isinstance(value, dict):
        return {str(k): _normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_normalize(v) for v in value]
    if hasattr(value, 'item'):
        return _normalize(value.item())
    return str(value)


def write_csv(path, columns, rows):
    with open(path, 'w', newline='', encoding='utf-8') as fd:
        writer = csv.writer(fd, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([value if isinstance(value, str)
                             else format_number(value) for value in row])


def write_summary(path, summary):
    """Write a summary as JSON: sorted keys, nine significant digits,
    non-finite numbers as strings, LF line endings."""
    text = json.dumps(_normalize(summary), sort_keys=True, indent=2,
                      ensure_ascii=False)
    with open(path, 'w', newline='\n', encoding='utf-8') as fd:
        fd.write(text + '\n')


def _restore(value):
    if isinstance(value, str) and value in ('inf', '-inf', 'nan'):
        return float(value)
    if isinstance(value, dict):
        return {k: _restore(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_restore(v) for v in value]
    return value


def read_summary(path):
    """Read a summary written by :func:`write_summary`.

    The ``experiment`` and ``units`` of the summary, and the ``scenario``
    it echoes when there is one, go through the scenario schema.

    :raise ScenarioError: if the file is not a summary or breaks the
        schema.
    """
    with open(path, encoding='utf-8') as fd:
        text = fd.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        raise ScenarioError(error.msg, error.lineno)
    if not isinstance(data, dict) or 'experiment' not in data:
        raise ScenarioError("not a summary: missing experiment", 1)
    Scenario({'experiment': data['experiment'],
              'units': data.get('units', DEFAULT_UNITS)}, text=text)
    echoed = data.get('scenario')
    if echoed is not None:
        run = Scenario(echoed)
        if run.experiment != data['experiment']:
            raise ScenarioError(
                "summary of {!r} echoes a {!r} scenario".format(
                    data['experiment'], run.experiment),
                _line_of(text, 'scenario'))
    return _restore(data)

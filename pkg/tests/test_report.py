"""
Tests for hombifrun/report.py
"""

import json
import math
import os

import numpy as np
import pytest

from hombifrun.report import Artifacts, dumps, format_cell

from tests import HombifTestCase


class TestDumps:

    def test_seventeen_digits(self):
        text = dumps({'lambda': 0.1, 'third': np.float64(1.0) / 3})
        assert '"lambda": 0.10000000000000001' in text
        assert '"third": 0.33333333333333331' in text
        assert json.loads(text) == {'lambda': 0.1, 'third': 1.0 / 3}

    def test_types_survive(self):
        data = {'window': [-2.0, 2.0], 'count': 3, 'flag': np.bool_(True),
                'none': None, 'big': 1e20, 'matrix': np.eye(2),
                'empty': [], 'nested': {}}
        loaded = json.loads(dumps(data))
        assert loaded['window'] == [-2.0, 2.0]
        assert isinstance(loaded['window'][0], float)
        assert isinstance(loaded['count'], int)
        assert loaded['flag'] is True
        assert loaded['none'] is None
        assert loaded['big'] == 1e20
        assert loaded['matrix'] == [[1.0, 0.0], [0.0, 1.0]]
        assert loaded['empty'] == [] and loaded['nested'] == {}

    def test_matches_csv_cells(self):
        value = math.pi * 1e-7
        assert dumps([value]).split()[1] == format_cell(value)

    def test_non_finite(self):
        loaded = json.loads(dumps([math.inf, -math.inf]))
        assert loaded == [math.inf, -math.inf]

    def test_indented(self):
        assert dumps({'a': [1, 2]}) == '{\n    "a": [\n        1,\n' \
            '        2\n    ]\n}\n'

    def test_unknown_type(self):
        with pytest.raises(TypeError):
            dumps({'bad': object()})


class TestArtifacts(HombifTestCase):

    def test_files(self):
        artifacts = Artifacts(self.outdir)
        artifacts.write_json('data.json', {'x': 0.1})
        artifacts.write_csv('rows.csv', ['x', 'ok'], [(0.1, True)])
        artifacts.write_manifest('scan', True)
        assert artifacts.read_json('data.json') == {'x': 0.1}
        with open(os.path.join(self.outdir, 'rows.csv')) as fd:
            assert fd.read() == 'x,ok\n0.10000000000000001,true\n'
        assert artifacts.read_json('MANIFEST')['files'] == ['data.json',
                                                            'rows.csv']

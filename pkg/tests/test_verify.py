"""
Tests for hombifrun/verify.py
"""

import dataclasses

import numpy as np
import pytest

from hombif.homoclinic import Continuum, HomoclinicSolution
from hombif.oracle import ClosedFormMismatch, ExampleConfig
from hombifrun.config import parse_config
from hombifrun.verify import Verifier, run_suite

from tests import HombifTestCase, mock

CHECKS = ['closed_form', 'evans_signs', 'critical_values', 'subspaces',
          'transcritical', 'bounded_loop', 'parameter_boundary', 'properties',
          'tan_transcritical', 'touch_zero_branches', 'periodic_branch']


def _point(lam, y0):
    mesh = np.array([-1.0, 0.0, 1.0])
    values = np.array([[0.0, 0.0], [y0, 0.0], [0.0, 0.0]])
    return HomoclinicSolution(lambda_=lam, mesh=mesh, values=values,
                              residual=0.0, horizon=1.0)


class TestVerifier(HombifTestCase):

    def test_closed_form(self):
        verifier = Verifier(parse_config())
        verifier.closed_form()
        result = verifier.results[0]
        assert result.name == 'closed_form'
        assert result.passed
        for residual in result.detail['residuals'].values():
            assert residual <= 1e-10

    def test_example_follows_config(self):
        self.write_config("beta: -1", "n: 3")
        verifier = Verifier(parse_config())
        cfg = verifier.example('sin')
        assert (cfg.beta, cfg.n) == (-1.0, 3)
        assert verifier.example('sin', beta=2.0).beta == 2.0

    def test_guarded(self):
        verifier = Verifier(parse_config())
        verifier.guarded('broken', mock.Mock(
            side_effect=ClosedFormMismatch("residual too large")))
        result = verifier.results[0]
        assert not result.passed
        assert result.detail['error']['error'] == 'ClosedFormMismatch'
        assert result.to_dict()['name'] == 'broken'

    def test_unexpected_errors_propagate(self):
        verifier = Verifier(parse_config())
        with pytest.raises(ZeroDivisionError):
            verifier.guarded('broken', mock.Mock(side_effect=ZeroDivisionError))

    def test_runs_every_check(self):
        verifier = Verifier(parse_config())
        with mock.patch.multiple(verifier, **{name: mock.DEFAULT
                                              for name in CHECKS}) as checks:
            assert verifier.run() == []
        for name in CHECKS:
            checks[name].assert_called_once_with()

    def test_grid(self):
        self.write_config("grid_step: 0.5")
        verifier = Verifier(parse_config())
        assert np.allclose(verifier.grid('tan'), np.linspace(-1.5, 1.5, 7))

    def test_worst_fit(self):
        continuum = Continuum(points=[_point(0.01, 5.0), _point(0.5, -0.75),
                                      _point(-1.0, 1.53), _point(2.0, 0.0)],
                              events=())
        worst = Verifier.worst_fit(continuum, lambda lam: -1.5 * lam)
        assert worst == pytest.approx(0.02)

    def test_solved(self):
        opts = dataclasses.replace(
            Verifier(parse_config()).options(None), horizon=12.0,
            mesh_step=0.04)
        cfg = ExampleConfig(beta=1.0, n=2, gamma_kind='linear')
        solution = Verifier.solved(cfg, -0.5, 0.75, opts)
        assert solution.y0[0] == pytest.approx(0.75, abs=1e-3)
        assert solution.horizon == 12.0

    @pytest.mark.slow
    def test_properties(self):
        verifier = Verifier(parse_config())
        verifier.properties()
        assert [(r.name, r.passed) for r in verifier.results] == [
            ('transition_cocycle', True),
            ('jacobian_consistency', True),
            ('basis_invariance', True),
            ('mesh_convergence', True),
            ('mirror_symmetry', True),
        ]
        assert verifier.results[3].detail['ratio'] >= 3.0

    @pytest.mark.slow
    @pytest.mark.parametrize("check, names", [
        ('tan_transcritical', ['tan_transcritical']),
        ('touch_zero_branches', ['touch_zero_even', 'touch_zero_odd']),
        ('periodic_branch', ['periodic_branch']),
    ])
    def test_branch_checks(self, check, names):
        verifier = Verifier(parse_config())
        getattr(verifier, check)()
        assert [r.name for r in verifier.results] == names
        for result in verifier.results:
            assert result.passed, result.detail

    @pytest.mark.slow
    def test_suite(self):
        results = run_suite(parse_config())
        assert [r.name for r in results if not r.passed] == []

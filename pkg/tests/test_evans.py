"""
Tests for hombif/evans.py
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

from hombif.core import linear_system
from hombif.dichotomy import principal_angles
from hombif.evans import (
    AngleTooLarge,
    EndpointCritical,
    IndexFailure,
    NoGapRegion,
    RankCollapse,
    UncertifiedParity,
    align_basis,
    canonical_basis,
    evans_at,
    evans_scan,
    parity,
    parity_certificate,
)
from hombif.oracle import ExampleConfig, example_system, gamma

from tests import rotation


def _grid(lo, hi, step=0.05):
    return np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)


def _scalar_example(coefficient):
    """ The linearized example with gamma replaced by COEFFICIENT(lam) """
    def matrix(t, lam):
        s = np.sign(t)
        return np.array([[-s, 0.0], [coefficient(lam), s]])
    return linear_system(matrix, 2, switching_times=(0.0,))


def _two_blocks(first, second):
    """ Two decoupled copies, E vanishes where either coefficient does """
    def matrix(t, lam):
        s = np.sign(t)
        result = np.zeros((4, 4))
        result[:2, :2] = [[-s, 0.0], [first(lam), s]]
        result[2:, 2:] = [[-s, 0.0], [second(lam), s]]
        return result
    return linear_system(matrix, 4, switching_times=(0.0,))


def _rotated_saddle(rate, angle):
    """ rate(lam) * R diag(-1, 1) R^T, R the rotation by angle(lam) """
    def matrix(_t, lam):
        turn = rotation(angle(lam))
        return rate(lam) * turn @ np.diag([-1.0, 1.0]) @ turn.T
    return linear_system(matrix, 2)


class TestAlignment:

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0, 2 * math.pi), st.integers(0, 2 ** 16))
    def test_idempotent(self, angle, seed):
        basis = ortho_group.rvs(3, random_state=seed)[:, :2]
        basis = basis @ rotation(angle)
        assert np.allclose(align_basis(basis, basis), basis, atol=1e-12)

    def test_inherits_orientation(self):
        prev = np.array([[1.0], [0.0]])
        tilted = np.array([[-math.cos(0.3)], [-math.sin(0.3)]])
        aligned = align_basis(prev, tilted)
        assert aligned[0, 0] > 0
        assert max(principal_angles(aligned, tilted)) <= 1e-12

    def test_angle_cap(self):
        with pytest.raises(AngleTooLarge) as err:
            align_basis(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]]))
        assert err.value.angle == pytest.approx(math.pi / 2)

    def test_rank_change(self):
        with pytest.raises(RankCollapse):
            align_basis(np.eye(3)[:, :2], np.eye(3)[:, :1])

    def test_canonical(self):
        diagonal = -np.array([[1.0], [1.0]]) / math.sqrt(2)
        assert np.allclose(canonical_basis(diagonal),
                           np.array([[1.0], [1.0]]) / math.sqrt(2))
        assert canonical_basis(np.zeros((2, 0))).shape == (2, 0)


class TestEvansAt:

    @pytest.mark.parametrize("lam", [-1.0, 0.5, 1.0])
    def test_value(self, lam):
        cfg = ExampleConfig(gamma_kind='linear')
        sample = evans_at(example_system(cfg), lam)
        g = gamma(cfg, lam)
        assert abs(sample.value) == pytest.approx(4 * abs(g) / (4 + g * g),
                                                  rel=1e-8)
        assert sample.restart

    def test_aligned(self):
        sys = example_system(ExampleConfig(gamma_kind='linear'))
        first = evans_at(sys, 1.0)
        second = evans_at(sys, 1.05, prev=first)
        assert not second.restart
        assert second.sign == first.sign

    def test_index_failure(self):
        sys = linear_system(lambda t, _lam: np.sign(t) * np.eye(2), 2,
                            switching_times=(0.0,))
        with pytest.raises(IndexFailure):
            evans_at(sys, 0.0, T=10.0)


def _oracle_flip(scan, cfg):
    """ The global sign relating the scan to -4 gamma, None on mismatch """
    flip = None
    for sample in scan.samples:
        g = gamma(cfg, sample.lambda_)
        if abs(g) <= 1e-3:
            continue
        expected = -1 if g > 0 else 1
        if flip is None:
            flip = sample.sign * expected
        if sample.sign * flip != expected:
            return None
    return flip


class TestScan:

    @pytest.mark.parametrize("kind, window, roots", [
        ('linear', (-2.0, 2.0), [0.0]),
        ('tan', (-1.5, 1.5), [0.0]),
    ])
    def test_sign_changes(self, kind, window, roots):
        cfg = ExampleConfig(gamma_kind=kind)
        scan = evans_scan(example_system(cfg), _grid(*window))
        assert _oracle_flip(scan, cfg) is not None
        found = [c.critical for c in scan.certificates]
        assert len(found) == len(roots)
        for value, root in zip(found, roots):
            assert abs(value - root) <= 1e-4
        assert not scan.touch_zeros

    def test_touch_zero(self):
        cfg = ExampleConfig(gamma_kind='abs')
        scan = evans_scan(example_system(cfg), _grid(-2.0, 2.0))
        assert _oracle_flip(scan, cfg) is not None
        assert not scan.certificates
        assert len(scan.touch_zeros) == 1
        assert abs(scan.touch_zeros[0]) <= 1e-4
        assert parity(scan, -1.0, 1.0) == 1

    def test_touch_zero_between_grid_points(self):
        sys = _scalar_example(lambda lam: (lam - 0.013) ** 2)
        scan = evans_scan(sys, _grid(-0.5, 0.5))
        assert not scan.certificates
        assert len(scan.touch_zeros) == 1
        assert scan.touch_zeros[0] == pytest.approx(0.013, abs=1e-4)

    def test_double_root_between_grid_points(self):
        # E changes sign at 0.01 and 0.03, both inside one grid step
        sys = _scalar_example(lambda lam: (lam - 0.01) * (lam - 0.03))
        scan = evans_scan(sys, _grid(-0.5, 0.5))
        found = sorted(c.critical for c in scan.certificates)
        assert len(found) == 2
        assert found[0] == pytest.approx(0.01, abs=1e-4)
        assert found[1] == pytest.approx(0.03, abs=1e-4)

    @pytest.mark.slow
    def test_sin(self):
        cfg = ExampleConfig(beta=1.0, n=3, gamma_kind='sin')
        scan = evans_scan(example_system(cfg), _grid(-7.0, 7.0), workers=2)
        assert _oracle_flip(scan, cfg) is not None
        found = [c.critical for c in scan.certificates]
        roots = [k * math.pi for k in range(-2, 3)]
        assert len(found) == len(roots)
        for value, root in zip(found, roots):
            assert abs(value - root) <= 1e-4
        assert scan.critical_values == found

    def test_plateau(self):
        def flat(lam):
            return math.copysign(max(0.0, abs(lam) - 0.1), lam)
        scan = evans_scan(_scalar_example(flat), _grid(-0.5, 0.5))
        assert len(scan.critical_intervals) == 1
        interval = scan.critical_intervals[0]
        assert interval.lo == pytest.approx(-0.1)
        assert interval.hi == pytest.approx(0.1)
        assert interval.crossing
        assert not interval.non_hyperbolic
        assert scan.sign_at(0.0) == 0
        assert parity(scan, -0.3, 0.3) == -1

    def test_no_gap_anywhere(self):
        sys = linear_system(np.zeros((2, 2)), 2)
        with pytest.raises(NoGapRegion):
            evans_scan(sys, _grid(-0.2, 0.2))

    def test_non_hyperbolic_gap(self):
        # x' = 0 for |lam| <= 0.12, no dichotomy there
        def matrix(_t, lam):
            rate = min(1.0, max(0.0, abs(lam) - 0.12) * 10)
            return np.diag([-rate, rate])
        sys = linear_system(matrix, 2)
        scan = evans_scan(sys, _grid(-0.5, 0.5), T=10.0)
        gaps = [c for c in scan.critical_intervals if c.non_hyperbolic]
        assert len(gaps) == 1
        assert gaps[0].lo == pytest.approx(-0.1)
        assert gaps[0].hi == pytest.approx(0.1)
        assert sum(1 for s in scan.samples if s.restart) == 2

    def test_no_gap_inside_refined_step(self):
        # the bases turn by 1.3 rad between the grid points 0 and 0.05 and the
        # bisection midpoint has no dichotomy
        sys = _rotated_saddle(
            lambda lam: min(1.0, max(0.0, abs(lam - 0.025) - 0.01) * 40),
            lambda lam: 0.1 if lam < 0.025 else 1.4)
        scan = evans_scan(sys, _grid(-0.2, 0.2), T=10.0)
        gaps = [c for c in scan.critical_intervals if c.non_hyperbolic]
        assert len(gaps) == 1
        assert gaps[0].lo == pytest.approx(0.0, abs=1e-12)
        assert gaps[0].hi == pytest.approx(0.05)
        restarts = [s.lambda_ for s in scan.samples if s.restart]
        assert restarts == pytest.approx([-0.2, 0.05])
        assert not scan.certificates
        assert scan.sign_at(0.025) == 0
        with pytest.raises(UncertifiedParity):
            parity(scan, -0.2, 0.2)

    @pytest.mark.parametrize("args", [
        ([0.0],),
        ([0.0, -1.0],),
    ])
    def test_bad_grid(self, args):
        sys = example_system(ExampleConfig())
        with pytest.raises(ValueError):
            evans_scan(sys, *args)

    def test_grid_outside_parameter_interval(self):
        sys = example_system(ExampleConfig(gamma_kind='tan'))
        with pytest.raises(ValueError):
            evans_scan(sys, [1.0, 1.6])

    def test_to_dict(self):
        scan = evans_scan(example_system(ExampleConfig()), _grid(-0.2, 0.2))
        data = scan.to_dict()
        assert data['window'] == [-0.2, 0.2]
        assert len(data['certificates']) == 1
        assert len(scan.rows()) == 9


class TestParity:

    def setup_method(self, method):
        _unused = method
        sys = example_system(ExampleConfig(gamma_kind='linear'))
        self.scan = evans_scan(sys, _grid(-1.0, 1.0))

    def test_sign_change(self):
        assert parity(self.scan, -1.0, 1.0) == -1
        assert parity(self.scan, 0.2, 0.9) == 1

    def test_endpoint_critical(self):
        with pytest.raises(EndpointCritical):
            parity(self.scan, 0.0, 1.0)

    def test_certified(self):
        assert parity_certificate(self.scan, -1.0, 1.0) == (-1, True)

    def test_restart_across_gap(self):
        # E never vanishes, the orientations on the two sides of the
        # non-hyperbolic stretch are unrelated
        sys = _rotated_saddle(
            lambda lam: min(1.0, max(0.0, abs(lam) - 0.12) * 10),
            lambda lam: 0.1 if lam < 0 else 1.4)
        scan = evans_scan(sys, _grid(-0.5, 0.5), T=10.0)
        assert not scan.certificates
        assert parity_certificate(scan, -0.5, 0.5) == (-1, False)
        with pytest.raises(UncertifiedParity) as err:
            parity(scan, -0.5, 0.5)
        assert err.value.details['parity'] == -1
        assert parity(scan, -0.5, -0.2) == 1
        assert parity(scan, 0.2, 0.5) == 1

    @pytest.mark.parametrize("lam_minus, lam_plus", [
        (0.5, 0.5),
        (0.5, -0.5),
        (-2.0, 0.5),
    ])
    def test_invalid(self, lam_minus, lam_plus):
        with pytest.raises(ValueError):
            parity(self.scan, lam_minus, lam_plus)


class TestBasisInvariance:

    @pytest.mark.parametrize("seed", range(10))
    def test_random_initial_bases(self, seed):
        sys = _two_blocks(lambda lam: lam, lambda lam: lam - 0.5)
        grid = _grid(-0.4, 0.9)
        reference = evans_scan(sys, grid, T=10.0)
        rng = np.random.default_rng(seed)
        rotations = (ortho_group.rvs(2, random_state=rng),
                     ortho_group.rvs(2, random_state=rng))
        rotated = evans_scan(sys, grid, T=10.0, initial_rotation=rotations)
        expected = [c.critical for c in reference.certificates]
        found = [c.critical for c in rotated.certificates]
        assert len(expected) == 2
        assert np.allclose(found, expected, atol=2e-6)

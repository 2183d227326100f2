"""
Tests for hombif/cover.py
"""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hombif.cover import (
    JCover,
    NoHyperbolicWindow,
    bifurcation_index,
    build_cover,
    j_parity,
)
from hombif.evans import CriticalInterval, EvansSample, EvansScan


def _scan(points, critical_values=(), critical_intervals=()):
    """ EvansScan from (lambda, sign) pairs, E is taken equal to the sign """
    empty = np.zeros((2, 1))
    samples = [EvansSample(lambda_=lam, plus=empty, minus=empty,
                           value=float(sign), sign=sign)
               for lam, sign in points]
    return EvansScan(samples=samples, zero_tol=1e-8, refine_tol=1e-6,
                     critical_values=list(critical_values),
                     critical_intervals=list(critical_intervals))


def _sin_like():
    grid = np.linspace(-7.0, 7.0, 281)
    points = [(float(lam), -int(np.sign(math.sin(lam)))) for lam in grid]
    roots = [k * math.pi for k in range(-2, 3)]
    return _scan(points, roots)


class TestBuildCover:

    def test_sin_like(self):
        cover = build_cover(_sin_like())
        assert len(cover.intervals) == 6
        assert len(cover.closures) == 5
        assert cover.signs == [1, -1, 1, -1, 1, -1]
        assert j_parity(cover) == [-1, 1, -1, 1, -1]
        for (lo, hi), root in zip(cover.closures,
                                  [k * math.pi for k in range(-2, 3)]):
            assert lo < root < hi
            assert hi - lo == pytest.approx(1e-5)
        assert cover.intervals[0][0] == -7.0
        assert cover.intervals[-1][1] == 7.0
        assert not cover.edge

    def test_test_points(self):
        cover = build_cover(_sin_like())
        for (lo, hi), point in zip(cover.intervals, cover.test_points):
            assert lo < point < hi

    def test_cluster(self):
        points = [(-1.0, 1), (-0.5, 1), (0.5, -1), (1.0, -1)]
        cover = build_cover(_scan(points, [0.0, 4e-6]))
        assert len(cover.closures) == 1
        lo, hi = cover.closures[0]
        assert lo == pytest.approx(-5e-6)
        assert hi == pytest.approx(9e-6)

    def test_absorb_signless_interval(self):
        # no sample lies between the two critical values
        points = [(-1.0, 1), (-0.5, 1), (0.5, -1), (1.0, -1)]
        cover = build_cover(_scan(points, [0.0, 0.001]))
        assert cover.signs == [1, -1]
        assert len(cover.closures) == 1
        lo, hi = cover.closures[0]
        assert lo < 0.0 and 0.001 < hi

    def test_plateau(self):
        points = [(-1.0, 1), (-0.1, 0), (0.0, 0), (0.1, 0), (1.0, -1)]
        scan = _scan(points, critical_intervals=[
            CriticalInterval(lo=-0.1, hi=0.1, crossing=True)])
        cover = build_cover(scan)
        assert cover.signs == [1, -1]
        assert cover.closures[0][0] < -0.1
        assert cover.closures[0][1] > 0.1

    def test_edge(self):
        points = [(-1.0, 0), (-0.5, 1), (0.0, 1), (0.5, -1), (1.0, -1)]
        cover = build_cover(_scan(points, [-1.0, 0.25]))
        assert cover.edge == [(-1.0, -1.0 + 5e-6)]
        assert len(cover.closures) == 1
        assert cover.signs == [1, -1]

    def test_no_hyperbolic_window(self):
        points = [(-1.0, 0), (0.0, 0), (1.0, 0)]
        scan = _scan(points, critical_intervals=[
            CriticalInterval(lo=-1.0, hi=1.0)])
        with pytest.raises(NoHyperbolicWindow):
            build_cover(scan)

    def test_to_dict(self):
        cover = build_cover(_sin_like())
        data = cover.to_dict({'0': 0})
        assert data['pi'] == [-1, 1, -1, 1, -1]
        assert data['index_per_continuum'] == {'0': 0}
        assert len(data['test_points']) == 6


class TestIndex:

    def setup_method(self, method):
        _unused = method
        self.cover = build_cover(_sin_like())

    @pytest.mark.parametrize("touched, index", [
        ([], 0),
        ([2], -1),
        ([2, 3], 0),
        ([1, 2, 3], 1),
        ([3, 3], 1),
    ])
    def test_bifurcation_index(self, touched, index):
        assert bifurcation_index(self.cover, touched) == index

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            bifurcation_index(self.cover, [5])

    @pytest.mark.parametrize("lam, expected", [
        (math.pi, 3),
        (math.pi + 0.005, 3),
        (0.5, None),
        (-2 * math.pi, 0),
    ])
    def test_index_of(self, lam, expected):
        assert self.cover.index_of(lam) == expected

    @given(st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=12))
    def test_telescoping(self, signs):
        cover = JCover(intervals=[(i, i + 0.5) for i in range(len(signs))],
                       closures=[(i + 0.5, i + 1) for i in
                                 range(len(signs) - 1)],
                       test_points=[i + 0.25 for i in range(len(signs))],
                       signs=signs)
        everything = range(len(signs) - 1)
        assert bifurcation_index(cover, everything) == \
            (signs[-1] - signs[0]) // 2
        assert all(abs(p) <= 1 for p in j_parity(cover))

"""
Tests for hombif/dichotomy.py
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

from hombif.core import linear_system, transition_matrix
from hombif.dichotomy import (
    DichotomyConstants,
    NoGap,
    NonDecay,
    estimate_dichotomy_constants,
    fredholm_index_check,
    principal_angles,
    stable_subspace_plus,
    unstable_subspace_minus,
)
from hombif.helpers import HalfLine
from hombif.oracle import ExampleConfig, example_system, oracle_subspaces

SADDLE = linear_system(np.diag([-1.0, 1.0]), 2)


class TestSubspaces:

    def test_saddle(self):
        plus = stable_subspace_plus(SADDLE, 0.0, T=10.0)
        assert plus.rank == 1
        assert plus.halfline == HalfLine.PLUS
        assert plus.gap == pytest.approx(math.exp(20.0), rel=1e-6)
        assert abs(plus.basis[0, 0]) == pytest.approx(1.0, abs=1e-9)

        minus = unstable_subspace_minus(SADDLE, 0.0, T=10.0)
        assert minus.rank == 1
        assert abs(minus.basis[1, 0]) == pytest.approx(1.0, abs=1e-9)

    def test_all_unstable(self):
        sys = linear_system(np.eye(2), 2)
        plus = stable_subspace_plus(sys, 0.0, T=10.0)
        assert plus.rank == 0
        assert plus.basis.shape == (2, 0)
        assert unstable_subspace_minus(sys, 0.0, T=10.0).rank == 2

    def test_scalar_system(self):
        sys = linear_system([[-2.0]], 1)
        assert stable_subspace_plus(sys, 0.0, T=5.0).rank == 1
        assert unstable_subspace_minus(sys, 0.0, T=5.0).rank == 0

    def test_no_gap(self):
        sys = linear_system(np.zeros((2, 2)), 2)
        with pytest.raises(NoGap) as err:
            stable_subspace_plus(sys, 0.3, T=10.0)
        assert err.value.lam == 0.3
        assert err.value.to_dict()['details']['halfline'] == HalfLine.PLUS

    @pytest.mark.parametrize("kwargs", [
        {'T': 0.0},
        {'gap_threshold': 1.0},
    ])
    def test_bad_arguments(self, kwargs):
        with pytest.raises(ValueError):
            stable_subspace_plus(SADDLE, 0.0, **kwargs)

    def test_rank_hint(self):
        plus = stable_subspace_plus(SADDLE, 0.0, T=10.0, rank_hint=1)
        assert plus.rank == 1
        with pytest.raises(ValueError):
            stable_subspace_plus(SADDLE, 0.0, T=10.0, rank_hint=3)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2 ** 16), st.floats(0.5, 2.0), st.floats(0.5, 2.0))
    def test_similarity(self, seed, a, b):
        # S diag(-1, -2, 1.5) S^-1 has the stable columns S[:, :2]
        rng = np.random.default_rng(seed)
        S = ortho_group.rvs(3, random_state=rng) @ np.diag([1.0, a, b]) @ \
            ortho_group.rvs(3, random_state=rng)
        sys = linear_system(S @ np.diag([-1.0, -2.0, 1.5]) @ np.linalg.inv(S),
                            3)
        plus = stable_subspace_plus(sys, 0.0, T=10.0)
        minus = unstable_subspace_minus(sys, 0.0, T=10.0)
        assert (plus.rank, minus.rank) == (2, 1)
        assert max(principal_angles(plus.basis, S[:, :2])) <= 1e-6
        assert max(principal_angles(minus.basis, S[:, 2:])) <= 1e-6

    @pytest.mark.parametrize("kind, lam", [
        ('linear', 0.6),
        ('sin', -2.0),
    ])
    def test_horizon_doubling(self, kind, lam):
        sys = example_system(ExampleConfig(gamma_kind=kind))
        for finder in (stable_subspace_plus, unstable_subspace_minus):
            short = finder(sys, lam, T=8.0)
            long = finder(sys, lam, T=16.0)
            assert short.rank == long.rank
            assert max(principal_angles(short.basis, long.basis)) <= 1e-6

    @pytest.mark.parametrize("kind, lam", [
        ('linear', -1.3),
        ('linear', 0.6),
        ('sin', 2.0),
        ('tan', -1.2),
    ])
    def test_example_oracle(self, kind, lam):
        cfg = ExampleConfig(beta=1.0, n=3, gamma_kind=kind)
        sys = example_system(cfg)
        plus = stable_subspace_plus(sys, lam)
        minus = unstable_subspace_minus(sys, lam)
        exact_plus, exact_minus = oracle_subspaces(cfg, lam)
        assert max(principal_angles(plus.basis, exact_plus)) <= 1e-6
        assert max(principal_angles(minus.basis, exact_minus)) <= 1e-6

    def test_anchor(self):
        # x' = diag(-1, 1) is autonomous, the subspaces do not move
        plus = stable_subspace_plus(SADDLE, 0.0, T=10.0, t0=5.0)
        assert plus.anchor == 5.0
        assert abs(plus.basis[0, 0]) == pytest.approx(1.0, abs=1e-9)

    def test_to_dict(self):
        plus = stable_subspace_plus(SADDLE, 0.0, T=10.0)
        data = plus.with_constants(DichotomyConstants(1.0, 1.0, 0.0)).to_dict()
        assert data['rank'] == 1
        assert data['horizon'] == 10.0
        assert data['K'] == 1.0
        assert 'K' not in plus.to_dict()


class TestConstants:

    def test_saddle(self):
        plus = stable_subspace_plus(SADDLE, 0.0, T=10.0)
        K, alpha, residual = estimate_dichotomy_constants(SADDLE, 0.0, plus)
        assert alpha == pytest.approx(1.0, abs=1e-4)
        assert K == pytest.approx(1.0, abs=1e-4)
        assert residual <= 1e-6

    def test_minus_half_line(self):
        sys = linear_system(np.diag([-0.5, 2.0]), 2)
        minus = unstable_subspace_minus(sys, 0.0, T=10.0)
        _, alpha, _ = estimate_dichotomy_constants(sys, 0.0, minus)
        assert alpha == pytest.approx(2.0, abs=1e-3)

    def test_example(self):
        sys = example_system(ExampleConfig(gamma_kind='linear'))
        plus = stable_subspace_plus(sys, 0.8)
        K, alpha, _ = estimate_dichotomy_constants(sys, 0.8, plus)
        assert alpha == pytest.approx(1.0, abs=1e-3)
        assert K >= 1.0

    def test_held_out_pairs(self):
        # the bound fitted on the default grid also holds off the grid
        sys = example_system(ExampleConfig(gamma_kind='linear'))
        plus = stable_subspace_plus(sys, 0.8)
        K, alpha, _ = estimate_dichotomy_constants(sys, 0.8, plus)
        for s in (0.25, 1.7):
            basis = stable_subspace_plus(sys, 0.8, T=plus.truncation,
                                         rank_hint=plus.rank, t0=s).basis
            for elapsed in (0.3, 2.2, 6.5):
                phi = transition_matrix(sys, 0.8, s, s + elapsed, 1e-11)
                norm = np.linalg.norm(phi @ basis, 2)
                assert norm <= K * math.exp(-alpha * elapsed) * (1 + 1e-4)

    def test_non_decay(self):
        # pretend the unstable direction were the stable one
        plus = stable_subspace_plus(SADDLE, 0.0, T=10.0)
        fake = type(plus)(lambda_=0.0, halfline=HalfLine.PLUS,
                          basis=np.array([[0.0], [1.0]]), rank=1,
                          gap=plus.gap, truncation=10.0)
        with pytest.raises(NonDecay):
            estimate_dichotomy_constants(SADDLE, 0.0, fake,
                                         sample_grid=[(0.0, 1.0), (0.0, 2.0)])


class TestIndex:

    def test_example(self):
        sys = example_system(ExampleConfig(gamma_kind='linear'))
        report = fredholm_index_check(stable_subspace_plus(sys, 1.0),
                                      unstable_subspace_minus(sys, 1.0))
        assert report.index == 0
        assert report.intersection_dim == 0
        assert report.to_dict()['lambda'] == 1.0

    def test_intersection(self):
        sys = example_system(ExampleConfig(gamma_kind='linear'))
        # gamma(0) = 0, both subspaces are span(1, 0)
        report = fredholm_index_check(stable_subspace_plus(sys, 0.0),
                                      unstable_subspace_minus(sys, 0.0))
        assert report.index == 0
        assert report.intersection_dim == 1
        assert report.angles[0] <= 1e-7

    @pytest.mark.parametrize("factor, index", [
        (1.0, -2),
        (-1.0, 2),
    ])
    def test_index(self, factor, index):
        sys = linear_system(lambda t, _lam: factor * np.sign(t) * np.eye(2),
                            2, switching_times=(0.0,))
        report = fredholm_index_check(stable_subspace_plus(sys, 0.0, T=10.0),
                                      unstable_subspace_minus(sys, 0.0,
                                                              T=10.0))
        assert report.index == index

    def test_different_parameters(self):
        with pytest.raises(ValueError):
            fredholm_index_check(stable_subspace_plus(SADDLE, 0.0, T=10.0),
                                 unstable_subspace_minus(SADDLE, 1.0, T=10.0))

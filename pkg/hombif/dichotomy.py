# Exponential dichotomy subspaces on the half-lines.
# Copyright (C) 2024 hombif authors
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 2 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License along
# with this program; if not, write to the Free Software Foundation, Inc.,
# 51 Franklin Street, Fifth Floor, Boston, MA 02110-1301 USA.

"""
Approximations of R(P+(t0)) and N(P-(t0)) from the singular value
decomposition of the (factored) transition matrix over a finite horizon.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import subspace_angles
from scipy.stats import linregress

from hombif.core import transition_matrix
from hombif.helpers import HalfLine, NumericalError

log = logging.getLogger(__name__)

DEFAULT_HORIZON = 20.0
DEFAULT_GAP_THRESHOLD = 1e2
DEFAULT_TOL = 1e-10
ALPHA_FLOOR = 1e-6
INTERSECTION_ANGLE = 1e-6


class NoGap(NumericalError):
    def __init__(self, lam, halfline, gap, horizon):
        super(NoGap, self).__init__(
            "no spectral gap on the {0} half-line at lambda={1:g} "
            "(best gap {2:.3g}, horizon {3:g})".format(halfline, lam, gap,
                                                      horizon),
            lam=lam, halfline=halfline, gap=gap, horizon=horizon)
        self.lam = lam


class NonDecay(NumericalError):
    pass


@dataclass(frozen=True)
class DichotomyConstants:
    K: float
    alpha: float
    residual: float


@dataclass(frozen=True, eq=False)
class DichotomySubspaces:
    """
    Orthonormal basis of R(P+(anchor)) (plus) or N(P-(anchor)) (minus)
    computed at horizon ``truncation``.
    """
    lambda_: float
    halfline: str
    basis: np.ndarray
    rank: int
    gap: float
    truncation: float
    anchor: float = 0.0
    log_singular_values: Tuple[float, ...] = ()
    constants: Optional[DichotomyConstants] = None

    @property
    def dim(self):
        return self.basis.shape[0]

    def with_constants(self, constants):
        return dataclasses.replace(self, constants=constants)

    def to_dict(self):
        data = {
            'lambda': self.lambda_,
            'halfline': self.halfline,
            'rank': self.rank,
            'gap': self.gap,
            'horizon': self.truncation,
            'basis': self.basis.tolist(),
        }
        if self.constants:
            data['K'] = self.constants.K
            data['alpha'] = self.constants.alpha
            data['fit_residual'] = self.constants.residual
        return data


def _rank_cut(logs, rank_hint=None):
    """
    Return (rank, log_gap) for descending log singular values.  Cutting after
    k values keeps the d - k smallest; the end cuts compare against the
    neutral level log(1) = 0.
    """
    dim = len(logs)

    def log_gap(k):
        if k == 0:
            return -logs[0]
        if k == dim:
            return logs[dim - 1]
        return logs[k - 1] - logs[k]

    if rank_hint is not None:
        if not 0 <= rank_hint <= dim:
            raise ValueError("rank hint {0} out of range".format(rank_hint))
        return rank_hint, log_gap(dim - rank_hint)

    def straddles_zero(k):
        upper = logs[k - 1] if k > 0 else math.inf
        lower = logs[k] if k < dim else -math.inf
        return upper >= 0.0 > lower

    best = max(range(dim + 1), key=lambda k: (log_gap(k), straddles_zero(k)))
    return dim - best, log_gap(best)


def _subspace(sys, lam, halfline, horizon, gap_threshold, rank_hint, t0, tol,
              window):
    end = t0 + horizon if halfline == HalfLine.PLUS else t0 - horizon
    prop = transition_matrix(sys, lam, t0, end, tol, window=window,
                             factored=True)
    logs, vt = prop.singular_values()
    rank, log_gap = _rank_cut(logs, rank_hint)
    gap = math.exp(min(log_gap, 700.0))
    if gap <= gap_threshold:
        raise NoGap(lam, halfline, gap, horizon)

    basis = vt[sys.dim - rank:].T.copy()
    log.debug("%s subspace at lambda=%g: rank %d, log gap %.3g", halfline,
              lam, rank, log_gap)
    return DichotomySubspaces(
        lambda_=lam, halfline=halfline, basis=basis, rank=rank, gap=gap,
        truncation=horizon, anchor=t0,
        log_singular_values=tuple(float(x) for x in logs),
    )


def stable_subspace_plus(sys, lam, T=DEFAULT_HORIZON,
                         gap_threshold=DEFAULT_GAP_THRESHOLD, rank_hint=None,
                         t0=0.0, tol=DEFAULT_TOL, window=1.0):
    """
    R(P+(t0)): initial values at t0 whose forward solutions decay, taken as
    the right-singular subspace of the smallest singular values of
    Phi(t0 + T, t0).
    """
    if T <= 0 or gap_threshold <= 1:
        raise ValueError("need T > 0 and gap_threshold > 1")
    return _subspace(sys, lam, HalfLine.PLUS, T, gap_threshold, rank_hint, t0,
                     tol, window)


def unstable_subspace_minus(sys, lam, T=DEFAULT_HORIZON,
                            gap_threshold=DEFAULT_GAP_THRESHOLD,
                            rank_hint=None, t0=0.0, tol=DEFAULT_TOL,
                            window=1.0):
    """ N(P-(t0)), the mirror image of stable_subspace_plus() on t <= t0 """
    if T <= 0 or gap_threshold <= 1:
        raise ValueError("need T > 0 and gap_threshold > 1")
    return _subspace(sys, lam, HalfLine.MINUS, T, gap_threshold, rank_hint, t0,
                     tol, window)


def default_sample_grid(sub, starts=3, steps=10, step=0.5):
    """ (s, t) pairs, s <= t on the plus half-line and t <= s on the minus one """
    direction = 1.0 if sub.halfline == HalfLine.PLUS else -1.0
    pairs = []
    for i in range(starts):
        s = sub.anchor + direction * i
        for j in range(1, steps + 1):
            pairs.append((s, s + direction * j * step))
    return pairs


def estimate_dichotomy_constants(sys, lam, sub, sample_grid=None,
                                 tol=DEFAULT_TOL, window=1.0):
    """
    Fit log|Phi(t, s) Pi(s)| <= log K - alpha |t - s| over the sample grid.
    Pi(s) is the orthogonal projector onto the subspace carried to time s,
    which is recomputed at anchor s instead of being propagated.
    """
    if sample_grid is None:
        sample_grid = default_sample_grid(sub)

    finder = stable_subspace_plus if sub.halfline == HalfLine.PLUS \
        else unstable_subspace_minus
    bases = {sub.anchor: sub.basis}
    elapsed, log_norms = [], []
    for s, t in sample_grid:
        if s not in bases:
            bases[s] = finder(sys, lam, T=sub.truncation, rank_hint=sub.rank,
                              gap_threshold=1.0 + 1e-12, t0=s, tol=tol,
                              window=window).basis
        phi = transition_matrix(sys, lam, s, t, tol, window=window)
        norm = np.linalg.norm(phi @ bases[s], 2)
        elapsed.append(abs(t - s))
        log_norms.append(math.log(max(norm, 1e-300)))

    elapsed = np.array(elapsed)
    log_norms = np.array(log_norms)
    fit = linregress(elapsed, log_norms)
    alpha = -fit.slope
    if not alpha > ALPHA_FLOOR:
        raise NonDecay("fitted decay rate {0:.3g} is not positive at "
                       "lambda={1:g}".format(alpha, lam), lam=lam, alpha=alpha)

    residuals = log_norms - (fit.intercept + fit.slope * elapsed)
    log_k = float(np.max(log_norms + alpha * elapsed))
    K = max(1.0, math.exp(log_k))
    residual = float(np.sqrt(np.mean(residuals ** 2)))
    log.debug("%s constants at lambda=%g: K=%.4g alpha=%.4g", sub.halfline,
              lam, K, alpha)
    return K, alpha, residual


@dataclass(frozen=True)
class IndexReport:
    lambda_: float
    index: int
    intersection_dim: int
    angles: Tuple[float, ...]

    def to_dict(self):
        return {
            'lambda': self.lambda_,
            'index': self.index,
            'intersection_dim': self.intersection_dim,
            'principal_angles': list(self.angles),
        }


def principal_angles(first, second):
    """ Principal angles between the column spans, ascending """
    if first.shape[1] == 0 or second.shape[1] == 0:
        return ()
    return tuple(sorted(float(a) for a in subspace_angles(first, second)))


def fredholm_index_check(plus, minus, angle_tol=INTERSECTION_ANGLE):
    """ r + n - d and the dimension of R(P+(0)) intersected with N(P-(0)) """
    if plus.lambda_ != minus.lambda_:
        raise ValueError("subspaces taken at different parameters")
    angles = principal_angles(plus.basis, minus.basis)
    report = IndexReport(
        lambda_=plus.lambda_,
        index=plus.rank + minus.rank - plus.dim,
        intersection_dim=sum(1 for a in angles if a < angle_tol),
        angles=angles,
    )
    if report.index:
        log.warning("index %d at lambda=%g, hypothesis r + n = d fails",
                    report.index, plus.lambda_)
    return report

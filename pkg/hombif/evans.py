# Global Evans function over a parameter grid.
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
E(lam) = det[Xi+ | Xi-] where the bases of R(P+(0)) and N(P-(0)) are carried
continuously along the parameter by sequential alignment.  Sign changes of E
certify bifurcation values, zeros without a sign change are only reported.
"""

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.linalg import subspace_angles
from scipy.optimize import minimize_scalar

from hombif.dichotomy import (
    DEFAULT_GAP_THRESHOLD,
    DEFAULT_HORIZON,
    DEFAULT_TOL,
    NoGap,
    stable_subspace_plus,
    unstable_subspace_minus,
)
from hombif.helpers import NumericalError, orthonormalize, sign

log = logging.getLogger(__name__)

DEFAULT_ANGLE_CAP = math.radians(60.0)
DEFAULT_ZERO_TOL = 1e-8
DEFAULT_REFINE_TOL = 1e-6


class AngleTooLarge(NumericalError):
    def __init__(self, angle, cap):
        super(AngleTooLarge, self).__init__(
            "principal angle {0:.3g} rad exceeds the alignment cap {1:.3g} rad"
            .format(angle, cap), angle=angle, cap=cap)
        self.angle = angle


class RankCollapse(NumericalError):
    pass


class NoGapRegion(NumericalError):
    pass


class EndpointCritical(NumericalError):
    pass


class UncertifiedParity(NumericalError):
    pass


def align_basis(prev, new_subspace, angle_cap=DEFAULT_ANGLE_CAP):
    """
    Project the columns of PREV onto span(NEW_SUBSPACE) and orthonormalize
    them in PREV's column order.  The overlap PREV^T * result is triangular
    with positive diagonal, so the orientation is inherited from PREV.
    """
    if prev.shape != new_subspace.shape:
        raise RankCollapse("subspace dimension changed from {0} to {1}"
                           .format(prev.shape[1], new_subspace.shape[1]))
    if prev.shape[1] == 0:
        return new_subspace.copy()
    if angle_cap is not None:
        angle = float(np.max(subspace_angles(prev, new_subspace)))
        if angle >= angle_cap:
            raise AngleTooLarge(angle, angle_cap)
    projected = new_subspace @ (new_subspace.T @ prev)
    aligned = orthonormalize(projected)
    if aligned is None:
        raise RankCollapse("projection onto the new subspace is rank deficient")
    return aligned


def canonical_basis(basis):
    """
    Orientation for a basis without history: align it against the coordinate
    vectors picked by column-pivoted QR, taken in ascending coordinate order.
    """
    dim, rank = basis.shape
    if rank == 0:
        return basis.copy()
    _, pivots = scipy.linalg.qr(basis.T, mode='r', pivoting=True)
    reference = np.eye(dim)[:, sorted(pivots[:rank])]
    return align_basis(reference, basis, angle_cap=None)


@dataclass(frozen=True, eq=False)
class EvansSample:
    lambda_: float
    plus: np.ndarray
    minus: np.ndarray
    value: float
    sign: int
    # basis chosen afresh (scan start or after a non-hyperbolic gap)
    restart: bool = False

    def resigned(self, zero_tol):
        return dataclasses.replace(self, sign=sign(self.value, zero_tol))


class IndexFailure(NumericalError):
    pass


def evans_at(sys, lam, T=DEFAULT_HORIZON, prev=None,
             gap_threshold=DEFAULT_GAP_THRESHOLD, zero_tol=DEFAULT_ZERO_TOL,
             tol=DEFAULT_TOL, window=1.0, angle_cap=DEFAULT_ANGLE_CAP,
             subspaces=None):
    """
    Evans function at LAM.  With PREV the bases are aligned against the
    previous sample, otherwise canonical bases are used.  SUBSPACES may pass
    precomputed (plus, minus) dichotomy subspaces.
    """
    if subspaces is None:
        subspaces = (
            stable_subspace_plus(sys, lam, T, gap_threshold, tol=tol,
                                 window=window),
            unstable_subspace_minus(sys, lam, T, gap_threshold, tol=tol,
                                    window=window),
        )
    plus, minus = subspaces
    if plus.rank + minus.rank != sys.dim:
        raise IndexFailure(
            "r + n = {0} + {1} differs from d = {2} at lambda={3:g}"
            .format(plus.rank, minus.rank, sys.dim, lam),
            lam=lam, plus_rank=plus.rank, minus_rank=minus.rank,
            log_singular_values_plus=list(plus.log_singular_values),
            log_singular_values_minus=list(minus.log_singular_values))

    if prev is None:
        xi_plus = canonical_basis(plus.basis)
        xi_minus = canonical_basis(minus.basis)
    else:
        xi_plus = align_basis(prev.plus, plus.basis, angle_cap)
        xi_minus = align_basis(prev.minus, minus.basis, angle_cap)

    value = float(np.linalg.det(np.hstack([xi_plus, xi_minus])))
    return EvansSample(lambda_=lam, plus=xi_plus, minus=xi_minus, value=value,
                       sign=sign(value, zero_tol), restart=prev is None)


@dataclass(frozen=True)
class SignChange:
    """ Certified sign change of E inside [lo, hi] """
    lo: float
    hi: float
    sign_lo: int
    sign_hi: int
    critical: float
    bisections: int = 0
    initial_width: float = 0.0

    def to_dict(self):
        return {
            'bracket': [self.lo, self.hi],
            'signs': [self.sign_lo, self.sign_hi],
            'critical_value': self.critical,
        }


@dataclass(frozen=True)
class CriticalInterval:
    """ Interval-valued part of the critical set """
    lo: float
    hi: float
    # sign differs on the two sides
    crossing: bool = False
    # no dichotomy gap at the horizon instead of E = 0
    non_hyperbolic: bool = False

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass
class EvansScan:
    samples: List[EvansSample]
    zero_tol: float
    refine_tol: float
    critical_values: List[float] = field(default_factory=list)
    critical_intervals: List[CriticalInterval] = field(default_factory=list)
    certificates: List[SignChange] = field(default_factory=list)
    touch_zeros: List[float] = field(default_factory=list)
    refinements: List[EvansSample] = field(default_factory=list)
    # relative zero_tol times max |E|
    abs_zero_tol: float = 0.0

    @property
    def window(self):
        return self.samples[0].lambda_, self.samples[-1].lambda_

    def critical_entries(self):
        """ Sorted (lo, hi) pairs of all critical values and intervals """
        entries = [(c, c) for c in self.critical_values]
        entries += [(c.lo, c.hi) for c in self.critical_intervals]
        return sorted(entries)

    def _separated(self, a, b):
        lo, hi = min(a, b), max(a, b)
        return any(c_hi >= lo and c_lo <= hi
                   for c_lo, c_hi in self.critical_entries())

    def sign_at(self, lam):
        """
        Sign of E at LAM, read from the nearest sample not separated from LAM
        by a critical entry.  Zero if LAM is itself critical.
        """
        for c_lo, c_hi in self.critical_entries():
            if c_lo - self.refine_tol <= lam <= c_hi + self.refine_tol:
                return 0
        candidates = sorted(self.samples + self.refinements,
                            key=lambda s: abs(s.lambda_ - lam))
        for sample in candidates:
            if sample.sign and not self._separated(sample.lambda_, lam):
                return sample.sign
        return 0

    def rows(self):
        return [(s.lambda_, s.value, s.sign) for s in self.samples]

    def to_dict(self):
        return {
            'window': list(self.window),
            'zero_tol': self.zero_tol,
            'refine_tol': self.refine_tol,
            'critical_values': list(self.critical_values),
            'critical_intervals': [c.to_dict() for c in self.critical_intervals],
            'certificates': [c.to_dict() for c in self.certificates],
            'touch_zeros': list(self.touch_zeros),
        }


class _Scanner(object):
    def __init__(self, sys, T, zero_tol, refine_tol, gap_threshold, tol,
                 window, angle_cap, max_depth):
        self.sys = sys
        self.T = T
        self.zero_tol = zero_tol
        self.refine_tol = refine_tol
        self.gap_threshold = gap_threshold
        self.tol = tol
        self.window = window
        self.angle_cap = angle_cap
        self.max_depth = max_depth
        self.abs_zero = 0.0
        self.refinements = []

    def subspaces(self, lam):
        try:
            return (
                stable_subspace_plus(self.sys, lam, self.T, self.gap_threshold,
                                     tol=self.tol, window=self.window),
                unstable_subspace_minus(self.sys, lam, self.T,
                                        self.gap_threshold, tol=self.tol,
                                        window=self.window),
            )
        except NoGap as err:
            log.debug("no gap at lambda=%g: %s", lam, err.message)
            return None

    def sample(self, lam, prev, subspaces=None):
        if subspaces is None:
            subspaces = self.subspaces(lam)
            if subspaces is None:
                raise NoGap(lam, "plus/minus", 1.0, self.T)
        return evans_at(self.sys, lam, self.T, prev=prev,
                        zero_tol=self.abs_zero, angle_cap=self.angle_cap,
                        subspaces=subspaces)

    def advance(self, prev, lam, subspaces, depth=0):
        """
        Align onto LAM, bisecting the step while the angle is too big.  Raises
        NoGap when a bisection midpoint has no dichotomy gap.
        """
        try:
            return [self.sample(lam, prev, subspaces)]
        except AngleTooLarge:
            if depth >= self.max_depth:
                raise
            mid = 0.5 * (prev.lambda_ + lam)
            log.debug("refining grid step [%g, %g]", prev.lambda_, lam)
            left = self.advance(prev, mid, self.subspaces(mid), depth + 1)
            return left + self.advance(left[-1], lam, subspaces, depth + 1)

    def refined(self, lam, prev):
        found = self.sample(lam, prev).resigned(self.abs_zero)
        self.refinements.append(found)
        return found

    def bisect(self, left, right):
        """ Shrink a sign-change bracket down to refine_tol """
        initial = right.lambda_ - left.lambda_
        count = 0
        critical = None
        while right.lambda_ - left.lambda_ > self.refine_tol:
            mid = self.refined(0.5 * (left.lambda_ + right.lambda_), left)
            count += 1
            if mid.sign == left.sign:
                left = mid
            elif mid.sign == right.sign:
                right = mid
            else:
                critical = mid.lambda_
                half = 0.5 * self.refine_tol
                narrow_left = self.refined(critical - half, left)
                narrow_right = self.refined(critical + half, mid)
                if narrow_left.sign == left.sign and \
                        narrow_right.sign == right.sign:
                    left, right = narrow_left, narrow_right
                break
        if critical is None:
            critical = 0.5 * (left.lambda_ + right.lambda_)
        return SignChange(lo=left.lambda_, hi=right.lambda_,
                          sign_lo=left.sign, sign_hi=right.sign,
                          critical=critical, bisections=count,
                          initial_width=initial)

    def minimum(self, left, right):
        """
        Refine a local minimum of |E| between two samples of equal sign.  The
        signed value is minimized so a pair of roots is not mistaken for a
        touch-zero.
        """
        def objective(lam):
            return left.sign * self.sample(lam, left).value
        found = minimize_scalar(objective,
                                bounds=(left.lambda_, right.lambda_),
                                method='bounded',
                                options={'xatol': self.refine_tol * 1e-3})
        return self.refined(float(found.x), left)


def evans_scan(sys, lam_grid, T=DEFAULT_HORIZON, zero_tol=DEFAULT_ZERO_TOL,
               refine_tol=DEFAULT_REFINE_TOL,
               gap_threshold=DEFAULT_GAP_THRESHOLD, tol=DEFAULT_TOL,
               window=1.0, angle_cap=DEFAULT_ANGLE_CAP, max_depth=6,
               workers=1, initial_rotation=None):
    """
    Sweep the Evans function over LAM_GRID.  Subspaces are computed (possibly
    in parallel) first, then the bases are aligned in parameter order, sign
    flips are bisected down to REFINE_TOL and zeros without a flip are kept
    as touch-zeros.  INITIAL_ROTATION is an optional (R+, R-) pair of
    orthogonal matrices applied to the first bases.
    """
    grid = [float(x) for x in lam_grid]
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("need at least two strictly increasing grid points")
    if not all(sys.contains_param(x) for x in grid):
        raise ValueError("grid leaves the parameter interval")

    scanner = _Scanner(sys, T, zero_tol, refine_tol, gap_threshold, tol,
                       window, angle_cap, max_depth)
    log.info("Evans scan on [%g, %g], %d points", grid[0], grid[-1], len(grid))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(scanner.subspaces, grid))
    else:
        raw = [scanner.subspaces(lam) for lam in grid]

    if all(r is None for r in raw):
        raise NoGapRegion("no dichotomy gap anywhere on [{0:g}, {1:g}]"
                          .format(grid[0], grid[-1]), window=[grid[0], grid[-1]])

    # sequential alignment pass over (lo, hi, sample) entries, a None sample
    # marks a non-hyperbolic stretch [lo, hi]
    sequence = []
    prev = None
    for lam, subspaces in zip(grid, raw):
        if subspaces is None:
            sequence.append((lam, lam, None))
            prev = None
            continue
        if prev is not None:
            try:
                current = scanner.advance(prev, lam, subspaces)
            except NoGap as err:
                log.info("no gap at lambda=%g inside [%g, %g], restarting "
                         "the alignment", err.lam, prev.lambda_, lam)
                sequence.append((prev.lambda_, lam, None))
                prev = None
        if prev is None:
            current = [scanner.sample(lam, None, subspaces)]
            if initial_rotation is not None and not any(
                    s is not None for _, _, s in sequence):
                rot_plus, rot_minus = initial_rotation
                first = current[0]
                current = [evans_at(sys, lam, T, zero_tol=0.0, angle_cap=None,
                                    subspaces=subspaces,
                                    prev=dataclasses.replace(
                                        first, plus=first.plus @ rot_plus,
                                        minus=first.minus @ rot_minus))]
                current = [dataclasses.replace(current[0], restart=True)]
        sequence.extend((s.lambda_, s.lambda_, s) for s in current)
        prev = current[-1]

    samples = [s for _, _, s in sequence if s is not None]
    scanner.abs_zero = zero_tol * max(abs(s.value) for s in samples)
    samples = [s.resigned(scanner.abs_zero) for s in samples]
    resigned = iter(samples)
    sequence = [(lo, hi, None if s is None else next(resigned))
                for lo, hi, s in sequence]

    scan = EvansScan(samples=samples, zero_tol=zero_tol, refine_tol=refine_tol,
                     abs_zero_tol=scanner.abs_zero)
    _classify_zeros(scanner, sequence, scan)
    scan.refinements = scanner.refinements
    scan.critical_values.sort()
    scan.touch_zeros.sort()
    scan.certificates.sort(key=lambda c: c.lo)
    log.info("Evans scan done: %d sign changes, %d touch-zeros, "
             "%d critical intervals", len(scan.certificates),
             len(scan.touch_zeros), len(scan.critical_intervals))
    return scan


def _segments(sequence):
    """ Split the aligned sequence at non-hyperbolic runs """
    segments, gaps = [[]], []
    open_gap = False
    for lo, hi, sample in sequence:
        if sample is None:
            if open_gap:
                gaps[-1][1] = hi
            else:
                gaps.append([lo, hi])
                open_gap = True
            if segments[-1]:
                segments.append([])
            continue
        open_gap = False
        segments[-1].append(sample)
    return [s for s in segments if s], gaps


def _classify_zeros(scanner, sequence, scan):
    segments, gaps = _segments(sequence)
    for lo, hi in gaps:
        scan.critical_intervals.append(CriticalInterval(
            lo=lo, hi=hi, non_hyperbolic=True))

    for samples in segments:
        index = 0
        while index < len(samples):
            sample = samples[index]
            if sample.sign == 0:
                # a run of zero signs
                end = index
                while end + 1 < len(samples) and samples[end + 1].sign == 0:
                    end += 1
                left = samples[index - 1] if index > 0 else None
                right = samples[end + 1] if end + 1 < len(samples) else None
                crossing = bool(left and right and left.sign != right.sign)
                if end > index:
                    scan.critical_intervals.append(CriticalInterval(
                        lo=sample.lambda_, hi=samples[end].lambda_,
                        crossing=crossing))
                    if crossing:
                        scan.certificates.append(SignChange(
                            lo=left.lambda_, hi=right.lambda_,
                            sign_lo=left.sign, sign_hi=right.sign,
                            critical=0.5 * (sample.lambda_ +
                                            samples[end].lambda_)))
                elif crossing:
                    _certify(scanner, scan, left, right)
                else:
                    scan.touch_zeros.append(sample.lambda_)
                    scan.critical_values.append(sample.lambda_)
                index = end + 1
                continue

            if index + 1 < len(samples):
                following = samples[index + 1]
                if following.sign and following.sign != sample.sign:
                    _certify(scanner, scan, sample, following)
                elif index > 0 and following.sign == sample.sign and \
                        samples[index - 1].sign == sample.sign and \
                        abs(sample.value) < abs(samples[index - 1].value) and \
                        abs(sample.value) < abs(following.value):
                    _inspect_minimum(scanner, scan, samples[index - 1],
                                     following)
            index += 1


def _unresolved(scan, left, right, err):
    log.info("no gap at lambda=%g while refining [%.10g, %.10g]", err.lam,
             left.lambda_, right.lambda_)
    scan.critical_intervals.append(CriticalInterval(
        lo=left.lambda_, hi=right.lambda_,
        crossing=left.sign * right.sign < 0, non_hyperbolic=True))


def _certify(scanner, scan, left, right):
    try:
        change = scanner.bisect(left, right)
    except NoGap as err:
        _unresolved(scan, left, right, err)
        return
    log.info("sign change of E in [%.10g, %.10g]", change.lo, change.hi)
    scan.certificates.append(change)
    scan.critical_values.append(change.critical)


def _inspect_minimum(scanner, scan, left, right):
    try:
        lowest = scanner.minimum(left, right)
    except NoGap as err:
        _unresolved(scan, left, right, err)
        return
    if lowest.sign == 0:
        log.info("touch-zero of E at %.10g", lowest.lambda_)
        scan.touch_zeros.append(lowest.lambda_)
        scan.critical_values.append(lowest.lambda_)
    elif lowest.sign != left.sign:
        # two roots between neighbouring grid points
        _certify(scanner, scan, left, lowest)
        _certify(scanner, scan, lowest, right)


def parity_certificate(scan, lam_minus, lam_plus):
    """
    Return (parity, certified) where parity is sgn E(lam_minus) *
    sgn E(lam_plus).  The product only certifies anything when both signs
    come from one continuously aligned run, i.e. no basis restart and no
    non-hyperbolic stretch lies between the endpoints.
    """
    if not lam_minus < lam_plus:
        raise ValueError("need lam_minus < lam_plus")
    lo, hi = scan.window
    if not (lo <= lam_minus <= hi and lo <= lam_plus <= hi):
        raise ValueError("parity endpoints outside of the scanned window")
    signs = (scan.sign_at(lam_minus), scan.sign_at(lam_plus))
    if 0 in signs:
        raise EndpointCritical(
            "E vanishes at an endpoint of [{0:g}, {1:g}]".format(lam_minus,
                                                               lam_plus),
            endpoints=[lam_minus, lam_plus], signs=list(signs))
    breaks = [s.lambda_ for s in scan.samples + scan.refinements
              if s.restart and lam_minus < s.lambda_ <= lam_plus]
    breaks += [c.lo for c in scan.critical_intervals
               if c.non_hyperbolic and c.hi >= lam_minus and c.lo <= lam_plus]
    if breaks:
        log.warning("parity on [%g, %g] is not certified, the orientation "
                    "restarts at %s", lam_minus, lam_plus,
                    ", ".join("{0:g}".format(b) for b in sorted(breaks)))
    return signs[0] * signs[1], not breaks


def parity(scan, lam_minus, lam_plus):
    """
    sgn E(lam_minus) * sgn E(lam_plus); -1 certifies a bifurcation value in
    between.  Raises UncertifiedParity when the orientation is not carried
    continuously across the interval.
    """
    value, certified = parity_certificate(scan, lam_minus, lam_plus)
    if not certified:
        raise UncertifiedParity(
            "the signs at {0:g} and {1:g} come from separately oriented runs"
            .format(lam_minus, lam_plus),
            endpoints=[lam_minus, lam_plus], parity=value)
    return value

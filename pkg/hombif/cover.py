# J-covers of the critical set and the J-parity map.
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

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

from hombif.helpers import NumericalError

log = logging.getLogger(__name__)

DEFAULT_CLUSTER_TOL = 1e-5
DEFAULT_MATCH_TOL = 1e-2


class NoHyperbolicWindow(NumericalError):
    pass


@dataclass
class JCover:
    """
    Open intervals J_0 < J_1 < ... free of critical values, with the compact
    gaps closures[i] = [sup J_i, inf J_{i+1}] holding the critical set.
    """
    intervals: List[Tuple[float, float]]
    closures: List[Tuple[float, float]]
    test_points: List[float]
    signs: List[int]
    # critical clusters at the window edge, outside of every closure
    edge: List[Tuple[float, float]] = field(default_factory=list)

    def index_of(self, lam, match_tol=DEFAULT_MATCH_TOL):
        """ Index of the closure containing LAM (up to MATCH_TOL), or None """
        best, best_dist = None, None
        for i, (lo, hi) in enumerate(self.closures):
            dist = max(lo - lam, lam - hi, 0.0)
            if dist <= match_tol and (best is None or dist < best_dist):
                best, best_dist = i, dist
        return best

    def to_dict(self, index_per_continuum=None):
        return {
            'intervals': [list(j) for j in self.intervals],
            'closures': [list(j) for j in self.closures],
            'test_points': list(self.test_points),
            'signs': list(self.signs),
            'pi': j_parity(self),
            'index_per_continuum': dict(index_per_continuum or {}),
        }


def _clusters(entries, cluster_tol):
    clusters = []
    for lo, hi in sorted(entries):
        if clusters and lo - clusters[-1][1] < cluster_tol:
            clusters[-1][1] = max(clusters[-1][1], hi)
        else:
            clusters.append([lo, hi])
    return clusters


def build_cover(scan, cluster_tol=DEFAULT_CLUSTER_TOL):
    """
    Cluster the critical entries of SCAN into the closures and take the open
    complements inside the scan window as the J intervals.  A J interval
    without a nonzero sign is absorbed into its neighbouring closures.
    """
    w_lo, w_hi = scan.window
    pad = 0.5 * cluster_tol
    gaps = [[max(lo - pad, w_lo), min(hi + pad, w_hi)]
            for lo, hi in _clusters(scan.critical_entries(), cluster_tol)]

    edges = [w_lo] + [x for gap in gaps for x in gap] + [w_hi]
    # alternating: J, gap, J, gap, ..., J; None marks an unusable J
    pieces = []
    for k in range(len(gaps) + 1):
        lo, hi = edges[2 * k], edges[2 * k + 1]
        sign = scan.sign_at(0.5 * (lo + hi)) if hi > lo else 0
        pieces.append((lo, hi, sign))

    intervals, closures, signs, edge = [], [], [], []
    # closure collected since the last usable J
    span = None
    for k, (lo, hi, sign) in enumerate(pieces):
        if sign:
            if span is not None:
                (closures if intervals else edge).append(tuple(span))
            intervals.append((lo, hi))
            signs.append(sign)
            span = None
        if k < len(gaps):
            span = list(gaps[k]) if span is None else [span[0], gaps[k][1]]
    if span is not None:
        edge.append(tuple(span))

    if not intervals:
        raise NoHyperbolicWindow(
            "no subinterval of [{0:g}, {1:g}] has a nonzero Evans sign"
            .format(w_lo, w_hi), window=[w_lo, w_hi])

    cover = JCover(intervals=intervals, closures=closures,
                   test_points=[0.5 * (lo + hi) for lo, hi in intervals],
                   signs=signs, edge=edge)
    log.info("J-cover with %d intervals and %d closures", len(intervals),
             len(closures))
    return cover


def j_parity(cover):
    """ pi_J(i) = (a_{i+1} - a_i) / 2 for every closure i """
    return [(b - a) // 2 for a, b in zip(cover.signs, cover.signs[1:])]


def bifurcation_index(cover, touched):
    """ Sum of pi_J over the TOUCHED closure indices """
    parities = j_parity(cover)
    for i in touched:
        if not 0 <= i < len(parities):
            raise ValueError("closure index {0} out of range".format(i))
    return sum(parities[i] for i in set(touched))

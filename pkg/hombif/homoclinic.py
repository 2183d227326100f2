# Homoclinic solutions, branch continuation and continuum classification.
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
Nontrivial homoclinic perturbations y = x - phi_lam solve

    y' = f(t, phi_lam + y, lam) - f(t, phi_lam, lam)

on [-T, T].  At t = T the component of y orthogonal to R(P+(T)) vanishes,
at t = -T the component orthogonal to N(P-(-T)).  The problem is discretized
by midpoint collocation and solved with sparse Newton iterations; branches are
followed by pseudo-arclength continuation in (y, lam).
"""

import collections
import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.linalg import null_space, svd
from scipy.sparse.linalg import splu

from hombif.dichotomy import (
    DEFAULT_GAP_THRESHOLD,
    DEFAULT_HORIZON,
    DEFAULT_TOL,
    stable_subspace_plus,
    unstable_subspace_minus,
)
from hombif.core import DomainExit
from hombif.cover import DEFAULT_MATCH_TOL, bifurcation_index
from hombif.evans import IndexFailure, RankCollapse, align_basis, \
    canonical_basis
from hombif.helpers import (
    Classification,
    Event,
    Inconclusive,
    NumericalError,
)

log = logging.getLogger(__name__)

KERNEL_ANGLE = 1e-3
# chord closest approach below this share of the larger norm is a crossing
CROSSING_RATIO = 0.2


class NoIntersection(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class TrivialCollapse(NumericalError):
    pass


class ContinuationStall(NumericalError):
    pass


class TheoremViolation(NumericalError):
    pass


@dataclass
class ContinuationOptions:
    horizon: float = 20.0
    dichotomy_horizon: float = DEFAULT_HORIZON
    gap_threshold: float = DEFAULT_GAP_THRESHOLD
    tol: float = DEFAULT_TOL
    window: float = 1.0
    mesh_step: float = 0.02
    newton_tol: float = 1e-8
    max_newton: int = 12
    triviality_floor: float = 1e-6
    norm_cap: float = 1e6
    amplitude: float = 1e-2
    ds0: float = 0.02
    ds_max: float = 0.1
    ds_min: float = 1e-7
    max_steps: int = 2000
    param_margin: float = 1e-3
    domain_margin: float = 1e-6
    crossing_resolution: float = 2e-2
    # a crossing this close to the seeding value is passed, not an end
    origin_tol: float = 1e-2
    # chords through y = 0 with a smaller lambda share turn back (fold type)
    # and end the run, steeper ones cross transversally and are passed
    fold_tol: float = 0.1
    # (lo, hi) parameter window of the run, None for no limit
    lambda_window: Optional[Tuple[float, float]] = None


def build_mesh(sys, T, step):
    """
    Uniform mesh on every piece between -T, the switching times, 0 and T, so
    that the switching times and t = 0 are nodes.
    """
    if T <= 0 or step <= 0:
        raise ValueError("need T > 0 and a positive mesh step")
    breaks = sorted({-T, 0.0, T} |
                    {t for t in sys.switching_times if -T < t < T})
    parts = []
    for a, b in zip(breaks, breaks[1:]):
        count = max(1, int(math.ceil((b - a) / step - 1e-9)))
        parts.append(np.linspace(a, b, count + 1)[:-1])
    parts.append(np.array([T]))
    return np.concatenate(parts)


@dataclass(frozen=True, eq=False)
class HomoclinicSolution:
    lambda_: float
    mesh: np.ndarray
    values: np.ndarray
    residual: float
    horizon: float

    @property
    def sup_norm(self):
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    @property
    def derivative_norm(self):
        slopes = np.diff(self.values, axis=0) / np.diff(self.mesh)[:, None]
        return float(np.max(np.linalg.norm(slopes, axis=1)))

    @property
    def w1inf_norm(self):
        return self.sup_norm + self.derivative_norm

    @property
    def y0(self):
        return self.values[int(np.argmin(np.abs(self.mesh)))]

    def mirrored(self):
        return HomoclinicSolution(lambda_=self.lambda_, mesh=self.mesh,
                                  values=-self.values, residual=self.residual,
                                  horizon=self.horizon)

    def row(self, event=""):
        return [self.lambda_, self.sup_norm, self.w1inf_norm] + \
            [float(v) for v in self.y0] + [self.residual, event]


@dataclass(frozen=True)
class EndEvent:
    kind: str
    lambda_: float
    sup_norm: float = 0.0
    detail: str = ""

    def to_dict(self):
        return {'event': self.kind, 'lambda': self.lambda_,
                'sup_norm': self.sup_norm, 'detail': self.detail}


@dataclass
class Continuum:
    points: List[HomoclinicSolution]
    events: Tuple[EndEvent, EndEvent]
    # critical value the run was seeded from
    origin: Optional[float] = None
    # trivial-branch crossings passed through at the origin
    crossings: List[float] = field(default_factory=list)
    # transversal crossings of the trivial branch away from the origin
    transversal: List[float] = field(default_factory=list)

    def return_points(self):
        found = [e.lambda_ for e in self.events
                 if e.kind == Event.RETURNS_TO_TRIVIAL]
        if self.origin is not None:
            found.append(self.origin)
        return sorted(found + list(self.crossings) + list(self.transversal))

    def to_dict(self):
        lams = [p.lambda_ for p in self.points]
        return {
            'events': [e.to_dict() for e in self.events],
            'origin': self.origin,
            'crossings': list(self.crossings),
            'transversal': list(self.transversal),
            'points': len(self.points),
            'lambda_range': [min(lams), max(lams)] if lams else [],
            'max_sup_norm': max((p.sup_norm for p in self.points),
                                default=0.0),
        }


def _factor(matrix):
    try:
        return splu(sparse.csc_matrix(matrix))
    except RuntimeError as err:
        raise NoConvergence("singular Newton matrix: {0}".format(err))


class _Collocation(object):
    """ Midpoint collocation of the perturbation equation on a fixed mesh """

    def __init__(self, sys, mesh, opts):
        self.sys = sys
        self.opts = opts
        self.mesh = np.asarray(mesh, dtype=float)
        self.h = np.diff(self.mesh)
        self.tau = 0.5 * (self.mesh[1:] + self.mesh[:-1])
        self.intervals = len(self.h)
        self.dim = sys.dim
        self.size = (self.intervals + 1) * self.dim
        nodes = np.zeros(self.intervals + 1)
        nodes[:-1] += 0.5 * self.h
        nodes[1:] += 0.5 * self.h
        self.weights = np.repeat(nodes, self.dim)
        self.zero_index = int(np.argmin(np.abs(self.mesh)))
        self._boundary = collections.OrderedDict()
        self._last = None

    # -- boundary conditions ------------------------------------------------

    def _complement(self, basis, previous):
        dim, rank = basis.shape
        if rank == 0:
            raw = np.eye(dim)
        elif rank == dim:
            return np.zeros((dim, 0))
        else:
            raw = null_space(basis.T)
        if previous is not None:
            try:
                return align_basis(previous, raw, angle_cap=None)
            except RankCollapse:
                pass
        return canonical_basis(raw)

    def boundary(self, lam):
        """ (W+, W-, decay): complements of R(P+(T)) and N(P-(-T)) """
        key = float(lam)
        if key in self._boundary:
            return self._boundary[key]
        opts = self.opts
        plus = stable_subspace_plus(
            self.sys, lam, opts.dichotomy_horizon, opts.gap_threshold,
            t0=self.mesh[-1], tol=opts.tol, window=opts.window)
        minus = unstable_subspace_minus(
            self.sys, lam, opts.dichotomy_horizon, opts.gap_threshold,
            t0=self.mesh[0], tol=opts.tol, window=opts.window)
        if plus.rank + minus.rank != self.dim:
            raise IndexFailure(
                "boundary subspaces have ranks {0} + {1} != {2}"
                .format(plus.rank, minus.rank, self.dim), lam=lam)
        prev_plus, prev_minus = self._last or (None, None)
        w_plus = self._complement(plus.basis, prev_plus)
        w_minus = self._complement(minus.basis, prev_minus)
        self._last = (w_plus, w_minus)
        decay = math.log(plus.gap) / (2.0 * opts.dichotomy_horizon)
        self._boundary[key] = (w_plus, w_minus, decay)
        if len(self._boundary) > 256:
            self._boundary.popitem(last=False)
        return self._boundary[key]

    # -- residual and derivatives ---------------------------------------------

    def check_domain(self, values, lam):
        domain = self.sys.state_domain
        if domain.unbounded:
            return
        states = self.sys.branch_value(self.mesh, lam) + values
        for t, x in zip(self.mesh, states):
            if not domain.contains(x):
                raise DomainExit(float(t), state=x)

    def domain_distance(self, values, lam):
        domain = self.sys.state_domain
        if domain.unbounded:
            return math.inf
        states = self.sys.branch_value(self.mesh, lam) + values
        return min(domain.distance(x) for x in states)

    def residual(self, values, lam):
        self.check_domain(values, lam)
        mean = 0.5 * (values[1:] + values[:-1])
        branch = self.sys.branch_value(self.tau, lam)
        forced = self.sys.rhs_batch(self.tau, branch + mean, lam) - \
            self.sys.rhs_batch(self.tau, branch, lam)
        interior = np.diff(values, axis=0) / self.h[:, None] - forced
        w_plus, w_minus, _ = self.boundary(lam)
        return np.concatenate([interior.ravel(), w_plus.T @ values[-1],
                               w_minus.T @ values[0]])

    def jacobian(self, values, lam):
        """ Sparse derivative of residual() with respect to the values """
        m, d = self.intervals, self.dim
        mean = 0.5 * (values[1:] + values[:-1])
        branch = self.sys.branch_value(self.tau, lam)
        jac = self.sys.jacobian_batch(self.tau, branch + mean, lam)
        scaled = np.eye(d)[None, :, :] / self.h[:, None, None]
        k, i, j = np.meshgrid(np.arange(m), np.arange(d), np.arange(d),
                              indexing='ij')
        rows = (k * d + i).ravel()
        cols = (k * d + j).ravel()
        data = [(-scaled - 0.5 * jac).ravel(), (scaled - 0.5 * jac).ravel()]
        all_rows = [rows, rows]
        all_cols = [cols, cols + d]

        w_plus, w_minus, _ = self.boundary(lam)
        base = m * d
        for weights, column in ((w_plus, m * d), (w_minus, 0)):
            count = weights.shape[1]
            a, b = np.meshgrid(np.arange(count), np.arange(d), indexing='ij')
            all_rows.append((base + a).ravel())
            all_cols.append((column + b).ravel())
            data.append(weights.T.ravel())
            base += count
        return sparse.coo_matrix(
            (np.concatenate(data),
             (np.concatenate(all_rows), np.concatenate(all_cols))),
            shape=(self.size, self.size)).tocsc()

    def residual_lambda(self, values, lam):
        delta = 1e-6 * max(1.0, abs(lam))
        ahead = self.residual(values, lam + delta)
        behind = self.residual(values, lam - delta)
        return (ahead - behind) / (2.0 * delta)

    def augmented(self, values, lam, row, corner):
        column = self.residual_lambda(values, lam)
        return sparse.bmat([
            [self.jacobian(values, lam), sparse.csc_matrix(column[:, None])],
            [sparse.csr_matrix(row[None, :]), sparse.csr_matrix([[corner]])],
        ], format='csc')

    # -- helpers -----------------------------------------------------------

    def inner(self, a, b):
        return float(np.sum(self.weights * a * b))

    def z_inner(self, a, b):
        return self.inner(a[:-1], b[:-1]) + float(a[-1] * b[-1])

    def pack(self, values, lam):
        return np.concatenate([values.ravel(), [lam]])

    def unpack(self, z):
        return z[:-1].reshape(self.intervals + 1, self.dim), float(z[-1])

    def scale(self, values):
        return max(1.0, float(np.abs(values).max()))

    def solution(self, values, lam):
        residual = float(np.abs(self.residual(values, lam)).max())
        return HomoclinicSolution(lambda_=lam, mesh=self.mesh,
                                  values=values.copy(), residual=residual,
                                  horizon=float(self.mesh[-1]))

    # -- Newton iterations -------------------------------------------------------

    def newton(self, values, lam):
        """ Damped Newton on the values at fixed LAM """
        opts = self.opts
        current = self.residual(values, lam)
        for _ in range(opts.max_newton):
            error = float(np.abs(current).max())
            if error <= opts.newton_tol * self.scale(values):
                return values
            step = _factor(self.jacobian(values, lam)).solve(-current)
            step = step.reshape(values.shape)
            damping = 1.0
            while True:
                trial = values + damping * step
                try:
                    candidate = self.residual(trial, lam)
                    if np.abs(candidate).max() <= (1 - 0.5 * damping) * error:
                        break
                except DomainExit:
                    pass
                damping *= 0.5
                if damping < 1.0 / 64:
                    raise NoConvergence(
                        "Newton line search failed at lambda={0:g}"
                        .format(lam), lam=lam, residual=error)
            values, current = trial, candidate
        error = float(np.abs(current).max())
        if error <= opts.newton_tol * self.scale(values):
            return values
        raise NoConvergence("Newton did not converge at lambda={0:g}"
                            .format(lam), lam=lam, residual=error)

    def bordered_newton(self, z, row, target):
        """
        Newton on residual(z) = 0 together with the linear condition
        row . z = target, solving for the values and lam at once.
        """
        opts = self.opts
        start_error = None
        for iteration in range(opts.max_newton + 1):
            values, lam = self.unpack(z)
            current = self.residual(values, lam)
            extra = float(row @ z) - target
            error = float(np.abs(current).max())
            if start_error is None:
                start_error = max(error, opts.newton_tol)
            if error <= opts.newton_tol * self.scale(values) and \
                    abs(extra) <= opts.newton_tol * self.scale(values):
                return z, iteration
            if iteration == opts.max_newton or error > 1e3 * start_error:
                break
            matrix = self.augmented(values, lam, row[:-1], row[-1])
            z = z + _factor(matrix).solve(-np.concatenate([current, [extra]]))
            if not self.sys.contains_param(z[-1]):
                raise NoConvergence("corrector left the parameter interval",
                                    lam=float(z[-1]))
        raise NoConvergence("bordered Newton did not converge near "
                            "lambda={0:g}".format(z[-1]), lam=float(z[-1]),
                            residual=error)

    def tangent(self, z, row):
        """ Unit tangent t of the solution curve with row . t = 1 """
        values, lam = self.unpack(z)
        matrix = self.augmented(values, lam, row[:-1], row[-1])
        rhs = np.zeros(self.size + 1)
        rhs[-1] = 1.0
        tangent = _factor(matrix).solve(rhs)
        return tangent / math.sqrt(self.z_inner(tangent, tangent))

    def null_vector(self, lam, direction, decay, iterations=3):
        """
        Inverse iteration on the collocation matrix at y = 0, started from
        DIRECTION times an exp(-decay |t|) envelope.
        """
        zero = np.zeros((self.intervals + 1, self.dim))
        matrix = self.jacobian(zero, lam)
        try:
            lu = splu(matrix)
        except RuntimeError:
            lu = _factor(matrix + 1e-12 * sparse.identity(self.size,
                                                          format='csc'))
        guess = np.exp(-decay * np.abs(self.mesh))[:, None] * direction[None, :]
        vector = guess.ravel()
        for _ in range(iterations):
            vector = lu.solve(vector)
            vector /= math.sqrt(self.inner(vector, vector))
        values = vector.reshape(zero.shape)
        if float(values[self.zero_index] @ direction) < 0:
            values = -values
        return values


def kernel_direction(sys, lam, T=DEFAULT_HORIZON,
                     gap_threshold=DEFAULT_GAP_THRESHOLD, tol=DEFAULT_TOL,
                     window=1.0, angle_tol=KERNEL_ANGLE):
    """
    Unit vector in R(P+(0)) intersected with N(P-(0)), taken from the pair
    of principal vectors with the smallest principal angle.
    """
    plus = stable_subspace_plus(sys, lam, T, gap_threshold, tol=tol,
                                window=window)
    minus = unstable_subspace_minus(sys, lam, T, gap_threshold, tol=tol,
                                    window=window)
    if plus.rank == 0 or minus.rank == 0:
        raise NoIntersection("one of the subspaces is trivial at "
                             "lambda={0:g}".format(lam), lam=lam)
    left, cosines, right_t = svd(plus.basis.T @ minus.basis)
    first = plus.basis @ left[:, 0]
    second = minus.basis @ right_t[0]
    if first @ second < 0:
        second = -second
    angle = 2.0 * math.asin(min(1.0, 0.5 * np.linalg.norm(first - second)))
    if angle > angle_tol:
        raise NoIntersection(
            "smallest principal angle {0:.3g} at lambda={1:g}"
            .format(angle, lam), lam=lam, angle=angle)
    direction = first + second
    direction /= np.linalg.norm(direction)
    if direction[np.argmax(np.abs(direction))] < 0:
        direction = -direction
    log.debug("kernel direction at lambda=%g: %s (angle %.3g)", lam,
              direction, angle)
    return direction


def _guess_values(mesh, guess, dim):
    if callable(guess):
        values = np.asarray(guess(mesh), dtype=float)
    else:
        values = np.asarray(guess, dtype=float)
    if values.shape != (len(mesh), dim):
        raise ValueError("guess must provide ({0}, {1}) values"
                         .format(len(mesh), dim))
    return values


def solve_homoclinic(sys, lam, guess, T=None, newton_tol=None, opts=None,
                     mesh=None):
    """
    Damped Newton on the collocation system at fixed LAM.  GUESS is either
    a callable on the mesh or an array of values on it.
    """
    opts = opts or ContinuationOptions()
    if T is not None:
        opts = dataclasses.replace(opts, horizon=T)
    if newton_tol is not None:
        opts = dataclasses.replace(opts, newton_tol=newton_tol)
    if mesh is None:
        mesh = build_mesh(sys, opts.horizon, opts.mesh_step)
    coll = _Collocation(sys, mesh, opts)
    values = coll.newton(_guess_values(coll.mesh, guess, sys.dim), lam)
    solution = coll.solution(values, lam)
    if solution.sup_norm <= opts.triviality_floor:
        raise TrivialCollapse(
            "Newton converged to the prescribed branch at lambda={0:g}"
            .format(lam), lam=lam, sup_norm=solution.sup_norm)
    log.debug("homoclinic solution at lambda=%g, sup norm %.6g", lam,
              solution.sup_norm)
    return solution


def seed(sys, lam_star, direction=None, amplitude=None, opts=None):
    """
    Initial guess amplitude * p for branch switching at LAM_STAR, where p is
    the discrete kernel of the collocation matrix (unit in the weighted L2
    norm), started from the kernel direction.  Returns (mesh, values).
    """
    opts = opts or ContinuationOptions()
    amplitude = opts.amplitude if amplitude is None else amplitude
    if direction is None:
        direction = kernel_direction(sys, lam_star, opts.dichotomy_horizon,
                                     opts.gap_threshold, opts.tol, opts.window)
    coll = _Collocation(sys, build_mesh(sys, opts.horizon, opts.mesh_step),
                        opts)
    decay = max(0.1, coll.boundary(lam_star)[2])
    kernel = coll.null_vector(lam_star, np.asarray(direction, dtype=float),
                              decay)
    return coll.mesh, amplitude * kernel


def branch_switch(sys, lam_star, amplitude=None, direction=None, opts=None):
    """
    Nontrivial solution near (0, LAM_STAR) with weighted projection AMPLITUDE
    onto the kernel; lambda is solved for together with the values.
    """
    opts = opts or ContinuationOptions()
    amplitude = opts.amplitude if amplitude is None else amplitude
    solution, _ = _switch(sys, lam_star, amplitude, direction, opts)
    return solution


def _switch(sys, lam_star, amplitude, direction, opts):
    mesh, kernel = seed(sys, lam_star, direction, 1.0, opts)
    coll = _Collocation(sys, mesh, opts)
    row = np.concatenate([coll.weights * kernel.ravel(), [0.0]])
    z, _ = coll.bordered_newton(coll.pack(amplitude * kernel, lam_star), row,
                                amplitude)
    values, lam = coll.unpack(z)
    solution = coll.solution(values, lam)
    if solution.sup_norm <= opts.triviality_floor:
        raise TrivialCollapse("branch switching fell back to the trivial "
                              "branch", lam=lam)
    log.info("switched onto a branch at lambda=%.10g (critical %.10g)", lam,
             lam_star)
    return solution, (coll, row)


def _chord_crossing(coll, a, b):
    """ (ratio, s) for the closest approach of the chord a->b to y = 0 """
    ya, yb = a.values.ravel(), b.values.ravel()
    diff = yb - ya
    length = coll.inner(diff, diff)
    if length == 0.0:
        return 1.0, 1.0
    s = -coll.inner(ya, diff) / length
    if not 0.0 < s < 1.0:
        return 1.0, min(max(s, 0.0), 1.0)
    closest = ya + s * diff
    biggest = max(coll.inner(ya, ya), coll.inner(yb, yb))
    return math.sqrt(coll.inner(closest, closest) / biggest), s


def _end_event(sys, coll, solution, opts):
    lam = solution.lambda_
    norm = solution.sup_norm
    if coll.domain_distance(solution.values, lam) < opts.domain_margin:
        return EndEvent(Event.DOMAIN_BOUNDARY, lam, norm)
    if not sys.contains_param(lam, opts.param_margin):
        return EndEvent(Event.PARAM_BOUNDARY, lam, norm)
    window = opts.lambda_window
    if window is not None and not window[0] <= lam <= window[1]:
        return EndEvent(Event.WINDOW_EXIT, lam, norm)
    if norm > opts.norm_cap:
        return EndEvent(Event.NORM_CAP, lam, norm)
    return None


def continue_branch(sys, start, direction=1, opts=None, tangent=None,
                    origin=None):
    """
    Pseudo-arclength continuation from START.  DIRECTION orients the first
    tangent by the sign of its lambda component unless TANGENT is given.
    Runs until an end event; the start end is tagged as seed.
    """
    opts = opts or ContinuationOptions()
    coll = _Collocation(sys, start.mesh, opts)
    z = coll.pack(start.values, start.lambda_)
    if tangent is None:
        lam_row = np.zeros(coll.size + 1)
        lam_row[-1] = 1.0
        try:
            tangent = coll.tangent(z, lam_row)
        except NoConvergence:
            tangent = coll.tangent(z, np.concatenate(
                [coll.weights * start.values.ravel(), [0.0]]))
        lam_part = tangent[-1] if abs(tangent[-1]) > 1e-12 else 1.0
        if lam_part * direction < 0:
            tangent = -tangent
    else:
        tangent = tangent / math.sqrt(coll.z_inner(tangent, tangent))

    points = [start]
    crossings, transversal = [], []
    # the point right after a passed crossing sits next to y = 0 itself
    just_crossed = False
    ds = opts.ds0
    event = None
    while event is None:
        if len(points) > opts.max_steps:
            last = points[-1]
            event = EndEvent(Event.STEP_LIMIT, last.lambda_, last.sup_norm)
            break
        cap = opts.ds_max * max(1.0, math.sqrt(coll.inner(z[:-1], z[:-1])))
        ds = min(ds, cap)
        predicted = z + ds * tangent
        row = np.concatenate([coll.weights * tangent[:-1], [tangent[-1]]])
        try:
            found, iterations = coll.bordered_newton(
                predicted, row, float(row @ predicted))
        except (NoConvergence, DomainExit) as err:
            ds *= 0.5
            log.debug("corrector failed (%s), step %.3g", err.message, ds)
            if ds < opts.ds_min:
                last = points[-1]
                if isinstance(err, DomainExit):
                    event = EndEvent(Event.DOMAIN_BOUNDARY, last.lambda_,
                                     last.sup_norm, err.message)
                    break
                raise ContinuationStall(
                    "continuation step underflow at lambda={0:g}"
                    .format(last.lambda_), lam=last.lambda_,
                    sup_norm=last.sup_norm)
            continue

        values, lam = coll.unpack(found)
        current = coll.solution(values, lam)
        previous = points[-1]
        ratio, s = _chord_crossing(coll, previous, current)
        trivial = current.sup_norm < opts.triviality_floor
        crossing = trivial or (ratio < CROSSING_RATIO and not just_crossed)
        just_crossed = False
        if crossing:
            coarse = max(previous.sup_norm, current.sup_norm) > \
                opts.crossing_resolution
            if coarse and 0.5 * ds >= opts.ds_min:
                ds *= 0.5
                continue
            lam_star = previous.lambda_ + s * (lam - previous.lambda_)
            if trivial:
                lam_star = lam
            chord = found - z
            lam_share = abs(chord[-1]) / math.sqrt(coll.z_inner(chord, chord))
            if origin is not None and not trivial and \
                    abs(lam_star - origin) <= opts.origin_tol:
                log.info("passing the trivial branch at lambda=%.10g",
                         lam_star)
                crossings.append(lam_star)
                just_crossed = True
            elif not trivial and lam_share >= opts.fold_tol:
                log.info("crossing the trivial branch transversally at "
                         "lambda=%.10g", lam_star)
                transversal.append(lam_star)
                just_crossed = True
            else:
                event = EndEvent(Event.RETURNS_TO_TRIVIAL, lam_star,
                                 previous.sup_norm)
                break

        points.append(current)
        secant = found - z
        tangent = secant / math.sqrt(coll.z_inner(secant, secant))
        z = found
        if iterations <= 3:
            ds *= 1.5
        elif iterations >= 6:
            ds *= 0.7
        event = _end_event(sys, coll, current, opts)

    log.info("continuation from lambda=%g ended with %s at lambda=%.10g "
             "after %d points", start.lambda_, event.kind, event.lambda_,
             len(points))
    begin = EndEvent(Event.SEED, start.lambda_, start.sup_norm)
    return Continuum(points=points, events=(begin, event), origin=origin,
                     crossings=crossings, transversal=transversal)


def join_continua(backward, forward):
    """ Glue two runs that share their seed end into one continuum """
    if backward.points and forward.points and \
            backward.points[0].lambda_ == forward.points[0].lambda_ and \
            np.array_equal(backward.points[0].values, forward.points[0].values):
        forward_points = forward.points[1:]
    else:
        forward_points = forward.points
    return Continuum(
        points=list(reversed(backward.points)) + list(forward_points),
        events=(backward.events[1], forward.events[1]),
        origin=forward.origin if forward.origin is not None
        else backward.origin,
        crossings=sorted(backward.crossings + forward.crossings),
        transversal=sorted(backward.transversal + forward.transversal),
    )


def trace_continuum(sys, lam_star, opts=None, direction=None):
    """
    Switch onto the branch bifurcating at LAM_STAR with amplitudes +eps and
    -eps and continue each half away from the trivial branch.
    """
    opts = opts or ContinuationOptions()
    if direction is None:
        direction = kernel_direction(sys, lam_star, opts.dichotomy_horizon,
                                     opts.gap_threshold, opts.tol, opts.window)
    halves = []
    for orientation in (-1.0, 1.0):
        start, (coll, row) = _switch(sys, lam_star,
                                     orientation * opts.amplitude, direction,
                                     opts)
        z = coll.pack(start.values, start.lambda_)
        # amplitude grows along the tangent
        tangent = orientation * coll.tangent(z, row)
        halves.append(continue_branch(sys, start, opts=opts, tangent=tangent,
                                      origin=lam_star))
    return join_continua(*halves)


@dataclass
class ContinuumReport:
    classification: str
    touched: List[int]
    index: int
    return_points: List[float]
    unmatched: List[float]
    events: Tuple[EndEvent, EndEvent]
    # Sigma pi_J != 0 certifies unboundedness
    certified_unbounded: bool
    consistent: bool = True

    def to_dict(self):
        return {
            'classification': self.classification,
            'touched_indices': list(self.touched),
            'bifurcation_index': self.index,
            'return_points': list(self.return_points),
            'unmatched_return_points': list(self.unmatched),
            'events': [e.to_dict() for e in self.events],
            'certified_unbounded': self.certified_unbounded,
            'consistent': self.consistent,
        }


def _growing(points, at_end):
    norms = [p.sup_norm for p in points]
    tail = norms[-3:] if at_end else list(reversed(norms[:3]))
    return len(tail) >= 2 and all(b > a for a, b in zip(tail, tail[1:]))


def _end_verdict(event, growing, recrossing=False):
    """
    GROWING tells whether the norm increases towards the end.  A branch that
    keeps crossing the trivial branch transversally (RECROSSING) and leaves
    the window is unbounded in lambda even with a bounded norm.
    """
    if event.kind == Event.NORM_CAP:
        return Classification.UNBOUNDED
    if event.kind in (Event.PARAM_BOUNDARY, Event.WINDOW_EXIT) and \
            (growing or recrossing):
        return Classification.UNBOUNDED
    if event.kind == Event.DOMAIN_BOUNDARY or \
            event.kind == Event.PARAM_BOUNDARY:
        return Classification.DOMAIN_BOUNDARY
    if event.kind == Event.RETURNS_TO_TRIVIAL:
        return Classification.RETURNS
    return Classification.INCONCLUSIVE


def classify_continuum(continuum, cover, match_tol=DEFAULT_MATCH_TOL):
    """
    Map the end events to the global alternatives and compute the
    bifurcation index over the closures the continuum touches.
    """
    if not continuum.points:
        raise Inconclusive("empty continuum")
    recrossing = bool(continuum.transversal)
    verdicts = [
        _end_verdict(continuum.events[0], _growing(continuum.points, False),
                     recrossing),
        _end_verdict(continuum.events[1], _growing(continuum.points, True),
                     recrossing),
    ]
    if Classification.UNBOUNDED in verdicts:
        classification = Classification.UNBOUNDED
    elif Classification.DOMAIN_BOUNDARY in verdicts:
        classification = Classification.DOMAIN_BOUNDARY
    elif all(v == Classification.RETURNS for v in verdicts):
        classification = Classification.RETURNS
    else:
        classification = Classification.INCONCLUSIVE

    touched, unmatched = set(), []
    returns = continuum.return_points()
    for lam in returns:
        index = cover.index_of(lam, match_tol)
        if index is None:
            unmatched.append(lam)
        else:
            touched.add(index)
    total = bifurcation_index(cover, touched)
    report = ContinuumReport(
        classification=classification, touched=sorted(touched), index=total,
        return_points=returns, unmatched=unmatched, events=continuum.events,
        certified_unbounded=total != 0,
        consistent=not (classification == Classification.RETURNS and total),
    )
    if unmatched:
        log.warning("return points %s lie outside of every closure",
                    unmatched)
    if not report.consistent:
        raise TheoremViolation(
            "bounded continuum with nonzero bifurcation index {0}"
            .format(total), touched=sorted(touched), index=total)
    log.info("continuum classified as %s, touched %s, index %d",
             classification, sorted(touched), total)
    return report

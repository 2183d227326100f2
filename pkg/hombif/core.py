# Parametrized Caratheodory systems, trajectories and transition matrices.
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
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from hombif.helpers import ConfigError, NumericalError

log = logging.getLogger(__name__)

INTEGRATOR = "DOP853"

# Largest exponent numpy.exp() survives with float64.
LOG_MAX_FLOAT = math.log(np.finfo(float).max)


class InvalidSystem(ConfigError):
    pass


class DomainExit(NumericalError):
    """ The trajectory left the state domain Omega """
    def __init__(self, t_exit, state=None):
        super(DomainExit, self).__init__(
            "trajectory left the state domain at t={0:g}".format(t_exit),
            t_exit=t_exit, state=state)
        self.t_exit = t_exit


class StepFailure(NumericalError):
    pass


class Overflow(NumericalError):
    def __init__(self, window):
        super(Overflow, self).__init__(
            "propagator exceeds the float range on window [{0:g}, {1:g}]"
            .format(*window), window=list(window))
        self.window = window


def _everywhere(_x):
    return True


def _infinitely_far(_x):
    return math.inf


def _zero_branch(t, _lam, dim=1):
    if np.ndim(t):
        return np.zeros((len(t), dim))
    return np.zeros(dim)


@dataclass(frozen=True)
class StateDomain:
    """
    The open state domain Omega, given as a membership predicate and an
    estimate of the distance to its boundary.  Defaults to the whole space.
    """
    contains: Callable = _everywhere
    distance: Callable = _infinitely_far

    @property
    def unbounded(self):
        return self.contains is _everywhere and self.distance is _infinitely_far


@dataclass(frozen=True)
class SystemSpec:
    """
    The parametrized equation x' = f(t, x, lam) together with its Jacobian
    D_2 f, the prescribed branch phi(t, lam) of bounded entire solutions and
    the admissible parameter interval.

    With ``vectorized`` set, rhs/jacobian/branch accept an (M,) array of times
    with (M, d) states and return (M, d) resp. (M, d, d) arrays.
    """
    dim: int
    rhs: Callable
    jacobian: Callable
    switching_times: Tuple[float, ...] = ()
    branch: Optional[Callable] = None
    param_interval: Tuple[float, float] = (-math.inf, math.inf)
    state_domain: StateDomain = field(default_factory=StateDomain)
    # The admissibility hypothesis on the limit sets is the user's promise,
    # nothing in the library checks it.
    admissible: bool = False
    vectorized: bool = False
    name: str = ""

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidSystem("dimension must be a positive integer",
                                dim=self.dim)
        times = tuple(float(t) for t in self.switching_times)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidSystem("switching times must be strictly increasing",
                                switching_times=list(times))
        object.__setattr__(self, 'switching_times', times)
        lo, hi = self.param_interval
        if not lo < hi:
            raise InvalidSystem("empty parameter interval",
                                param_interval=[lo, hi])

    def contains_param(self, lam, margin=0.0):
        lo, hi = self.param_interval
        return lo + margin < lam < hi - margin

    def branch_value(self, t, lam):
        if self.branch is None:
            return _zero_branch(t, lam, self.dim)
        if np.ndim(t) and not self.vectorized:
            return np.array([self.branch(ti, lam) for ti in t], dtype=float)
        return np.asarray(self.branch(t, lam), dtype=float)

    def rhs_batch(self, times, states, lam):
        """ f at many (t, x) pairs, (M,) times and (M, d) states """
        if self.vectorized:
            return np.asarray(self.rhs(times, states, lam), dtype=float)
        return np.array([self.rhs(t, x, lam) for t, x in zip(times, states)],
                        dtype=float).reshape(len(times), self.dim)

    def jacobian_batch(self, times, states, lam):
        if self.vectorized:
            return np.asarray(self.jacobian(times, states, lam), dtype=float)
        return np.array([self.jacobian(t, x, lam)
                         for t, x in zip(times, states)],
                        dtype=float).reshape(len(times), self.dim, self.dim)

    def variational_matrix(self, t, lam):
        """ D_2 f(t, phi(t), lam), the coefficient matrix of (V_lam) """
        x = self.branch_value(t, lam)
        if self.vectorized:
            return self.jacobian_batch(np.array([t]), x[None, :], lam)[0]
        return np.asarray(self.jacobian(t, x, lam), dtype=float)

    def check_jacobian(self, lam, points, step=1e-5):
        """
        Largest relative deviation between the Jacobian and central finite
        differences of the right-hand side over the (t, x) POINTS.
        """
        worst = 0.0
        for t, x in points:
            x = np.asarray(x, dtype=float)
            exact = np.asarray(self.jacobian_batch(
                np.array([t]), x[None, :], lam)[0])
            approx = np.empty_like(exact)
            for j in range(self.dim):
                dx = np.zeros(self.dim)
                dx[j] = step
                plus = self.rhs_batch(np.array([t]), (x + dx)[None, :], lam)[0]
                minus = self.rhs_batch(np.array([t]), (x - dx)[None, :], lam)[0]
                approx[:, j] = (plus - minus) / (2 * step)
            scale = max(np.linalg.norm(exact), 1.0)
            worst = max(worst, np.linalg.norm(exact - approx) / scale)
        return worst

    def check_branch(self, lam, times, step=1e-6):
        """ Largest |phi'(t) - f(t, phi(t), lam)| on TIMES (finite differences) """
        times = np.asarray(times, dtype=float)
        ahead = self.branch_value(times + step, lam)
        behind = self.branch_value(times - step, lam)
        slope = (ahead - behind) / (2 * step)
        field_ = self.rhs_batch(times, self.branch_value(times, lam), lam)
        return float(np.max(np.abs(slope - field_))) if len(times) else 0.0


def linear_system(matrix, dim, switching_times=(), param_interval=None,
                  name="linear"):
    """
    SystemSpec for x' = A(t, lam) x, where MATRIX is either a constant d x d
    array or a callable A(t, lam).
    """
    if callable(matrix):
        coefficients = matrix
    else:
        constant = np.array(matrix, dtype=float)

        def coefficients(_t, _lam):
            return constant

    def rhs(t, x, lam):
        return coefficients(t, lam) @ x

    def jacobian(t, _x, lam):
        return coefficients(t, lam)

    return SystemSpec(
        dim=dim, rhs=rhs, jacobian=jacobian,
        switching_times=tuple(switching_times),
        param_interval=param_interval or (-math.inf, math.inf),
        name=name,
    )


def _pieces(start, stop, switching_times, window=None):
    """
    Break [start, stop] (in integration direction) at the switching times and,
    when WINDOW is given, additionally every WINDOW time units.
    """
    direction = 1.0 if stop >= start else -1.0
    lo, hi = min(start, stop), max(start, stop)
    cuts = {t for t in switching_times if lo < t < hi}
    if window:
        count = int(math.ceil((hi - lo) / window - 1e-12))
        for k in range(1, count):
            cuts.add(start + direction * k * window)
    points = [start] + sorted(cuts, key=lambda t: direction * t) + [stop]
    return [(a, b) for a, b in zip(points, points[1:]) if a != b]


def _inside(t, a, b):
    """
    Clamp T into the open piece between A and B, so that the right-hand side
    is evaluated with the one-sided data of this piece at its end points.
    """
    lo, hi = min(a, b), max(a, b)
    return min(max(t, np.nextafter(lo, hi)), np.nextafter(hi, lo))


@dataclass
class Trajectory:
    """
    Solution of an initial value problem, one dense-output segment per piece
    between switching times.  Each segment stores the accepted step nodes,
    the states and the one-sided derivatives there.
    """
    segments: List[Tuple[np.ndarray, np.ndarray, np.ndarray]]
    tol: float
    order: int = 3

    @property
    def times(self):
        parts = [self.segments[0][0]]
        parts += [seg[0][1:] for seg in self.segments[1:]]
        return np.concatenate(parts)

    @property
    def states(self):
        parts = [self.segments[0][1]]
        parts += [seg[1][1:] for seg in self.segments[1:]]
        return np.concatenate(parts)

    @property
    def final(self):
        return self.segments[-1][1][-1]

    def __call__(self, t):
        """ Cubic Hermite interpolation on the accepted steps """
        for times, states, slopes in self.segments:
            lo, hi = min(times[0], times[-1]), max(times[0], times[-1])
            if lo <= t <= hi:
                if len(times) == 1:
                    return states[0]
                order = np.argsort(times)
                spline = CubicHermiteSpline(times[order], states[order],
                                            slopes[order], axis=0)
                return spline(t)
        raise ValueError("t={0:g} outside of the trajectory".format(t))


def _domain_event(sys):
    def event(_t, x):
        return sys.state_domain.distance(x)
    event.terminal = True
    event.direction = -1
    return event


def integrate_ivp(sys, lam, t0, x0, t1, tol):
    """
    Solve x' = f(t, x, lam), x(t0) = x0 on [t0, t1] (either direction) with an
    adaptive embedded Runge-Kutta pair.  The integration restarts at every
    switching time so no step straddles a discontinuity of f in t.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    x = np.array(x0, dtype=float)
    if not sys.state_domain.contains(x):
        raise DomainExit(t0, state=x)

    events = None if sys.state_domain.unbounded else [_domain_event(sys)]
    segments = []
    for a, b in _pieces(t0, t1, sys.switching_times) or [(t0, t0)]:
        def fun(t, y, a=a, b=b):
            return np.asarray(sys.rhs(_inside(t, a, b), y, lam), dtype=float)

        if a == b:
            segments.append((np.array([a]), x[None, :], fun(a, x)[None, :]))
            break

        sol = solve_ivp(fun, (a, b), x, method=INTEGRATOR, rtol=tol, atol=tol,
                        events=events)
        if sol.status == -1:
            raise StepFailure("integration failed on [{0:g}, {1:g}]: {2}"
                              .format(a, b, sol.message), piece=[a, b])
        states = sol.y.T
        slopes = np.array([fun(t, y) for t, y in zip(sol.t, states)])
        segments.append((sol.t, states, slopes))
        if sol.status == 1:
            raise DomainExit(float(sol.t_events[0][0]), state=states[-1])
        x = states[-1]

    trajectory = Trajectory(segments=segments, tol=tol)
    for state in trajectory.states:
        if not sys.state_domain.contains(state):
            raise DomainExit(float(trajectory.times[-1]), state=state)
    return trajectory


@dataclass
class FactoredPropagator:
    """
    Transition matrix kept as exp(log_scale) * q @ r, with q orthogonal and r
    upper triangular normalized to unit max-entry.  The raw matrix is only
    assembled on request.
    """
    q: np.ndarray
    r: np.ndarray
    log_scale: float
    windows: List[Tuple[float, float]]

    def matrix(self):
        magnitude = self.log_scale + math.log(max(np.abs(self.r).max(), 1e-300))
        if magnitude > LOG_MAX_FLOAT:
            raise Overflow(self.windows[-1] if self.windows else (0.0, 0.0))
        return math.exp(self.log_scale) * (self.q @ self.r)

    def singular_values(self):
        """
        Return (log_singular_values, right_singular_vectors) in descending
        order of singular values; the rows of the second item are the vectors.
        """
        _, svals, vt = np.linalg.svd(self.r)
        with np.errstate(divide='ignore'):
            logs = np.log(svals) + self.log_scale
        return logs, vt


def _identity_propagator(dim):
    return FactoredPropagator(q=np.eye(dim), r=np.eye(dim), log_scale=0.0,
                              windows=[])


def transition_matrix(sys, lam, s, t, tol, window=1.0, factored=False):
    """
    Phi_lam(t, s) of the variational equation along the prescribed branch.
    The matrix IVP is integrated window by window, every window starting from
    the orthogonal factor of the previous one.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    dim = sys.dim
    prop = _identity_propagator(dim)

    for a, b in _pieces(s, t, sys.switching_times, window):
        def fun(tau, z, a=a, b=b):
            coeff = sys.variational_matrix(_inside(tau, a, b), lam)
            return (coeff @ z.reshape(dim, dim)).ravel()

        sol = solve_ivp(fun, (a, b), prop.q.ravel(), method=INTEGRATOR,
                        rtol=tol, atol=tol)
        if sol.status == -1:
            raise StepFailure("variational integration failed on "
                              "[{0:g}, {1:g}]: {2}".format(a, b, sol.message),
                              window=[a, b])
        end = sol.y[:, -1].reshape(dim, dim)
        if not np.all(np.isfinite(end)):
            raise Overflow((a, b))

        q, r = np.linalg.qr(end)
        # positive diagonal keeps the factorization unique
        signs = np.where(np.diag(r) < 0, -1.0, 1.0)
        q, r = q * signs, signs[:, None] * r

        total = r @ prop.r
        scale = np.abs(total).max()
        if not np.isfinite(scale) or scale == 0.0:
            raise Overflow((a, b))
        prop = FactoredPropagator(q=q, r=total / scale,
                                  log_scale=prop.log_scale + math.log(scale),
                                  windows=prop.windows + [(a, b)])

    log.debug("Phi(%g, %g) at lambda=%g over %d windows, log scale %.3g",
              t, s, lam, len(prop.windows), prop.log_scale)
    if factored:
        return prop
    return prop.matrix()

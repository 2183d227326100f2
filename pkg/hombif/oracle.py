# Closed-form planar example family used as ground truth.
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
The planar Caratheodory equation

    x1' = -sgn(t) x1
    x2' = gamma(lam) x1 + sgn(t) x2 + beta x1^n

with the trivial branch x = 0.  Its solutions, the dichotomy subspaces and
the Evans function E = -4 gamma are known in closed form.
"""

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np

from hombif.core import InvalidSystem, SystemSpec
from hombif.helpers import HalfLine, NumericalError, StateSet

log = logging.getLogger(__name__)

TAN_CLAMP = 1e-6
CLOSED_FORM_TOL = 1e-10


class GammaKind(StateSet):
    values = [
        'LINEAR',
        'ABS',
        'SIN',
        'TAN',
    ]


class ClosedFormMismatch(NumericalError):
    pass


@dataclass(frozen=True)
class ExampleConfig:
    beta: float = 1.0
    n: int = 2
    gamma_kind: str = GammaKind.LINEAR

    def __post_init__(self):
        if self.beta == 0:
            raise InvalidSystem("beta must be nonzero", beta=self.beta)
        if int(self.n) != self.n or self.n < 2:
            raise InvalidSystem("n must be an integer >= 2", n=self.n)
        if self.gamma_kind not in GammaKind:
            raise InvalidSystem("unknown gamma kind '{0}'"
                                .format(self.gamma_kind),
                                gamma_kind=self.gamma_kind)
        object.__setattr__(self, 'n', int(self.n))
        object.__setattr__(self, 'gamma_kind', GammaKind[self.gamma_kind])


def param_interval(kind):
    if kind == GammaKind.TAN:
        return (-math.pi / 2, math.pi / 2)
    return (-math.inf, math.inf)


def gamma(cfg, lam):
    kind = cfg.gamma_kind
    if kind == GammaKind.LINEAR:
        return float(lam)
    if kind == GammaKind.ABS:
        return abs(float(lam))
    if kind == GammaKind.SIN:
        return math.sin(lam)
    edge = math.pi / 2 - TAN_CLAMP
    return math.tan(min(max(lam, -edge), edge))


def example_system(cfg):
    """ SystemSpec of the example, vectorized over times and states """
    beta, n = cfg.beta, cfg.n

    def rhs(t, x, lam):
        x = np.asarray(x, dtype=float)
        s = np.sign(t)
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([-s * x1,
                         gamma(cfg, lam) * x1 + s * x2 + beta * x1 ** n],
                        axis=-1)

    def jacobian(t, x, lam):
        x = np.asarray(x, dtype=float)
        s = np.sign(t)
        x1 = x[..., 0]
        jac = np.zeros(x.shape + (2,))
        jac[..., 0, 0] = -s
        jac[..., 1, 0] = gamma(cfg, lam) + n * beta * x1 ** (n - 1)
        jac[..., 1, 1] = s
        return jac

    def branch(t, _lam):
        if np.ndim(t):
            return np.zeros((len(t), 2))
        return np.zeros(2)

    return SystemSpec(
        dim=2, rhs=rhs, jacobian=jacobian, switching_times=(0.0,),
        branch=branch, param_interval=param_interval(cfg.gamma_kind),
        # the limit flows only have the bounded solution 0
        admissible=True, vectorized=True,
        name="example-{0}".format(cfg.gamma_kind),
    )


def _flow(cfg, lam, xi, t, side, bounded=False):
    """
    Solution of the autonomous system with sgn(t) frozen to SIDE.  BOUNDED
    drops the growing mode, which vanishes for homoclinic initial values.
    """
    xi1, xi2 = float(xi[0]), float(xi[1])
    t = np.asarray(t, dtype=float)
    half = 0.5 * gamma(cfg, lam) * xi1
    power = cfg.beta / (cfg.n + 1) * xi1 ** cfg.n
    growing = 0.0 if bounded else \
        (xi2 + side * (half + power)) * np.exp(side * t)
    decaying = side * (half * np.exp(-side * t) +
                       power * np.exp(-cfg.n * side * t))
    return np.stack([np.exp(-side * t) * xi1, growing - decaying], axis=-1)


def limit_flow(cfg, lam, side, xi, t):
    """ Closed-form flow of the limit system f+ (t > 0) or f- (t < 0) """
    return _flow(cfg, lam, xi, t, 1.0 if side == HalfLine.PLUS else -1.0)


def closed_form_solution(cfg, lam, xi, t, bounded=False):
    """
    phi(t; xi) with phi(0) = xi.  The second component is

      [xi2 + s(g/2 xi1 + b xi1^n)] e^|t| - s(g/2 xi1 e^-|t| + b xi1^n e^-n|t|)

    where s = sgn t, g = gamma(lam) and b = beta / (n + 1).
    """
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        return _flow(cfg, lam, xi, t, 1.0 if t >= 0 else -1.0, bounded)
    out = np.empty(t.shape + (2,))
    ahead = t >= 0
    out[ahead] = _flow(cfg, lam, xi, t[ahead], 1.0, bounded)
    out[~ahead] = _flow(cfg, lam, xi, t[~ahead], -1.0, bounded)
    return out


def closed_form_derivative(cfg, lam, xi, t):
    """ Exact time derivative of closed_form_solution() for t != 0 """
    xi1, xi2 = float(xi[0]), float(xi[1])
    t = np.asarray(t, dtype=float)
    s = np.sign(t)
    a = np.abs(t)
    half = 0.5 * gamma(cfg, lam) * xi1
    power = cfg.beta / (cfg.n + 1) * xi1 ** cfg.n
    first = -s * np.exp(-a) * xi1
    second = s * (xi2 + s * (half + power)) * np.exp(a) \
        + half * np.exp(-a) + cfg.n * power * np.exp(-cfg.n * a)
    return np.stack([first, second], axis=-1)


@functools.lru_cache(maxsize=None)
def verify_closed_form(cfg, tol=CLOSED_FORM_TOL):
    """
    Check the closed form against the right-hand side on a fixed sample set.
    Returns the largest relative residual, raises ClosedFormMismatch above
    TOL.  Cached per configuration.
    """
    sys = example_system(cfg)
    edge = param_interval(cfg.gamma_kind)[1]
    lams = [x for x in (-1.3, -0.4, 0.0, 0.7, 1.4) if abs(x) < edge]
    xis = [(0.0, 0.0), (0.5, -0.25), (-1.2, 0.8), (1.5, 0.0)]
    times = np.array([-3.0, -1.1, -0.5, -1e-3, 1e-3, 0.5, 1.1, 3.0])

    worst = 0.0
    for lam in lams:
        for xi in xis:
            states = closed_form_solution(cfg, lam, xi, times)
            slope = closed_form_derivative(cfg, lam, xi, times)
            field_ = sys.rhs_batch(times, states, lam)
            scale = np.maximum(np.abs(field_), 1.0)
            worst = max(worst, float(np.max(np.abs(slope - field_) / scale)))
            start = closed_form_solution(cfg, lam, xi, 0.0)
            if not np.allclose(start, xi, rtol=0, atol=tol):
                raise ClosedFormMismatch("closed form misses the initial "
                                         "value", xi=list(xi), lam=lam)
    if worst > tol:
        raise ClosedFormMismatch(
            "closed form residual {0:.3g} exceeds {1:.3g}".format(worst, tol),
            residual=worst, beta=cfg.beta, n=cfg.n,
            gamma_kind=cfg.gamma_kind)
    log.debug("closed form of %s verified, residual %.3g", sys.name, worst)
    return worst


def _gated(func):
    @functools.wraps(func)
    def wrapper(cfg, *args, **kwargs):
        verify_closed_form(cfg)
        return func(cfg, *args, **kwargs)
    return wrapper


@_gated
def homoclinic_initial_conditions(cfg, lam):
    """
    All real xi1 with xi1 (gamma + 2 beta / (n + 1) xi1^(n-1)) = 0; the
    solution through (xi1, 0) is homoclinic to 0 exactly for these.
    """
    rhs = -(cfg.n + 1) * gamma(cfg, lam) / (2.0 * cfg.beta)
    roots = {0.0}
    degree = cfg.n - 1
    if rhs != 0.0:
        magnitude = abs(rhs) ** (1.0 / degree)
        if degree % 2:
            roots.add(math.copysign(magnitude, rhs))
        elif rhs > 0:
            roots.update((magnitude, -magnitude))
    return tuple(sorted(roots))


@_gated
def oracle_evans(cfg, lam):
    return -4.0 * gamma(cfg, lam)


@_gated
def oracle_subspaces(cfg, lam):
    """ Unit bases of R(P+(0)) = span(-2, g) and N(P-(0)) = span(2, g) """
    g = gamma(cfg, lam)
    plus = np.array([[-2.0], [g]]) / math.hypot(2.0, g)
    minus = np.array([[2.0], [g]]) / math.hypot(2.0, g)
    return plus, minus


@_gated
def oracle_branch(cfg, lam):
    """ Initial values (xi1, 0) of the nontrivial homoclinic solutions """
    return [np.array([xi1, 0.0])
            for xi1 in homoclinic_initial_conditions(cfg, lam) if xi1 != 0.0]


@_gated
def oracle_trajectory(cfg, lam, xi1, mesh):
    return closed_form_solution(cfg, lam, (xi1, 0.0), mesh, bounded=True)

# Acceptance checks of the numerical pipeline against the closed-form example.
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

import dataclasses
import logging
import math

import numpy as np

from hombif.core import transition_matrix
from hombif.cover import build_cover
from hombif.dichotomy import (
    fredholm_index_check,
    principal_angles,
    stable_subspace_plus,
    unstable_subspace_minus,
)
from hombif.evans import evans_scan
from hombif.helpers import Classification, Event, HombifError
from hombif.homoclinic import (
    build_mesh,
    classify_continuum,
    continue_branch,
    join_continua,
    solve_homoclinic,
    trace_continuum,
)
from hombif.oracle import (
    ExampleConfig,
    GammaKind,
    example_system,
    gamma,
    oracle_subspaces,
    oracle_trajectory,
    verify_closed_form,
)

log = logging.getLogger(__name__)

SCAN_WINDOWS = {
    GammaKind.LINEAR: (-2.0, 2.0),
    GammaKind.ABS: (-2.0, 2.0),
    GammaKind.SIN: (-7.0, 7.0),
    GammaKind.TAN: (-1.5, 1.5),
}


@dataclasses.dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict

    def to_dict(self):
        return {'name': self.name, 'passed': self.passed,
                'detail': self.detail}


class Verifier(object):
    """ Runs the oracle comparisons one by one, sharing the Evans scans """

    def __init__(self, cfg):
        self.cfg = cfg
        self.scans = {}
        self.results = []

    def example(self, kind, beta=None, n=None):
        return ExampleConfig(
            beta=self.cfg['beta'] if beta is None else beta,
            n=self.cfg['n'] if n is None else n, gamma_kind=kind)

    def grid(self, kind):
        lo, hi = SCAN_WINDOWS[kind]
        count = int(round((hi - lo) / self.cfg['grid_step']))
        return np.linspace(lo, hi, count + 1)

    def scan(self, kind):
        if kind not in self.scans:
            self.scans[kind] = evans_scan(
                example_system(self.example(kind)), self.grid(kind),
                **self.cfg.scan_options())
        return self.scans[kind]

    def cover(self, kind):
        return build_cover(self.scan(kind), self.cfg['cluster_tol'])

    def classify(self, continuum, kind):
        return classify_continuum(continuum, self.cover(kind),
                                  self.cfg['branch']['match_tol'])

    def options(self, window):
        return dataclasses.replace(self.cfg.continuation_options(),
                                   lambda_window=window)

    @staticmethod
    def solved(cfg, lam, xi1, opts, **kwargs):
        """ The homoclinic solution of the example started from the oracle """
        sys = example_system(cfg)
        mesh = build_mesh(sys, opts.horizon, opts.mesh_step)
        guess = oracle_trajectory(cfg, lam, xi1, mesh)
        return solve_homoclinic(sys, lam, guess, opts=opts, mesh=mesh,
                                **kwargs)

    @staticmethod
    def worst_fit(continuum, exact, lo=0.05, hi=1.5):
        """ Largest relative error of y(0)_1 for lo <= |lambda| <= hi """
        worst = 0.0
        for point in continuum.points:
            if lo <= abs(point.lambda_) <= hi:
                expected = exact(point.lambda_)
                worst = max(worst, abs(point.y0[0] - expected) / abs(expected))
        return worst

    def record(self, name, passed, **detail):
        result = CheckResult(name, bool(passed), detail)
        self.results.append(result)
        log.info("%s %s", "PASS" if passed else "FAIL", name)
        return result

    def guarded(self, name, check):
        try:
            check()
        except HombifError as err:
            self.record(name, False, error=err.to_dict())

    # -- individual checks ------------------------------------------------------

    def closed_form(self):
        residuals = {kind: verify_closed_form(self.example(kind))
                     for kind in SCAN_WINDOWS}
        self.record('closed_form', True, residuals=residuals)

    def evans_signs(self):
        mismatches = {}
        for kind in SCAN_WINDOWS:
            cfg = self.example(kind)
            flip, bad = None, []
            for sample in self.scan(kind).samples:
                g = gamma(cfg, sample.lambda_)
                if abs(g) <= 1e-3:
                    continue
                expected = -1 if g > 0 else 1
                if flip is None:
                    flip = sample.sign * expected
                if sample.sign * flip != expected:
                    bad.append(sample.lambda_)
            mismatches[kind] = bad
        self.record('evans_sign_oracle',
                    not any(mismatches.values()), mismatches=mismatches)

    def critical_values(self):
        sin = self.scan(GammaKind.SIN)
        roots = [k * math.pi for k in range(-2, 3)]
        found = [c.critical for c in sin.certificates]
        matched = len(found) == len(roots) and all(
            min(abs(c - r) for c in found) <= 1e-4 for r in roots)
        absolute = self.scan(GammaKind.ABS)
        touch = absolute.touch_zeros
        abs_ok = not absolute.certificates and len(touch) == 1 and \
            abs(touch[0]) <= 1e-4
        self.record('critical_values', matched and abs_ok,
                    sin_certificates=found, abs_touch_zeros=touch,
                    abs_certificates=len(absolute.certificates))

    def subspaces(self):
        cfg = self.example(GammaKind.LINEAR)
        sys = example_system(cfg)
        rng = np.random.default_rng(self.cfg['seed'])
        worst, indices = 0.0, []
        count = self.cfg['verify']['subspace_samples']
        while len(indices) < count:
            lam = float(rng.uniform(-2.0, 2.0))
            if abs(gamma(cfg, lam)) < 0.1:
                continue
            plus = stable_subspace_plus(sys, lam, self.cfg['horizon'])
            minus = unstable_subspace_minus(sys, lam, self.cfg['horizon'])
            exact_plus, exact_minus = oracle_subspaces(cfg, lam)
            worst = max([worst] +
                        list(principal_angles(plus.basis, exact_plus)) +
                        list(principal_angles(minus.basis, exact_minus)))
            indices.append(fredholm_index_check(plus, minus).index)
        self.record('subspace_oracle', worst <= 1e-6 and not any(indices),
                    worst_angle=worst, indices=indices)

    def _critical_near(self, kind, value):
        scan = self.scan(kind)
        return min((c.critical for c in scan.certificates),
                   key=lambda c: abs(c - value))

    def transcritical(self):
        cfg = self.example(GammaKind.LINEAR, beta=1.0, n=2)
        sys = example_system(cfg)
        lam_star = self._critical_near(GammaKind.LINEAR, 0.0)
        continuum = trace_continuum(sys, lam_star, self.options((-1.6, 1.6)))
        worst = self.worst_fit(continuum, lambda lam: -1.5 * lam)
        report = self.classify(continuum, GammaKind.LINEAR)
        self.record('transcritical_branch',
                    worst <= 1e-3 and
                    report.classification == Classification.UNBOUNDED,
                    worst_relative_error=worst,
                    classification=report.classification)
        self.record('unboundedness_certificate', abs(report.index) == 1 and
                    report.classification == Classification.UNBOUNDED,
                    index=report.index, touched=report.touched)

    def bounded_loop(self):
        # beta < 0 puts the odd-n loop over (0, pi)
        cfg = self.example(GammaKind.SIN, beta=-1.0, n=3)
        sys = example_system(cfg)
        lam_star = self._critical_near(GammaKind.SIN, math.pi)
        continuum = trace_continuum(sys, lam_star, self.options((-0.5, 3.6)))
        returns = continuum.return_points()
        near = all(any(abs(r - target) <= 1e-3 for r in returns)
                   for target in (0.0, math.pi))
        report = self.classify(continuum, GammaKind.SIN)
        self.record('bounded_continuum_index',
                    near and report.index == 0 and
                    report.classification == Classification.RETURNS,
                    return_points=returns, index=report.index,
                    classification=report.classification)

    def parameter_boundary(self):
        cfg = self.example(GammaKind.TAN, beta=1.0, n=3)
        sys = example_system(cfg)
        lam_star = self._critical_near(GammaKind.TAN, 0.0)
        continuum = trace_continuum(sys, lam_star,
                                    self.options((-math.pi / 2, math.pi / 2)))
        ends = [(e.kind, e.lambda_) for e in continuum.events]
        passed = all(kind == Event.PARAM_BOUNDARY and
                     abs(abs(lam) - math.pi / 2) <= 2e-3
                     for kind, lam in ends)
        self.record('parameter_boundary', passed,
                    events=[list(e) for e in ends])

    def properties(self):
        """ Structural properties of the building blocks """
        rng = np.random.default_rng(self.cfg['seed'])
        sys = example_system(self.example(GammaKind.SIN))

        cocycle = 0.0
        for _ in range(5):
            r, s, t = (float(x) for x in rng.uniform(-3.0, 3.0, size=3))
            whole = transition_matrix(sys, 0.4, r, t, 1e-11)
            split = transition_matrix(sys, 0.4, s, t, 1e-11) @ \
                transition_matrix(sys, 0.4, r, s, 1e-11)
            cocycle = max(cocycle, float(np.abs(whole - split).max()) /
                          max(1.0, float(np.abs(whole).max())))
        identity = float(np.abs(transition_matrix(sys, 0.4, 1.3, 1.3, 1e-11) -
                                np.eye(2)).max())
        self.record('transition_cocycle', cocycle <= 1e-8 and
                    identity <= 1e-12, cocycle=cocycle, identity=identity)

        points = [(float(t), rng.uniform(-1.0, 1.0, size=2))
                  for t in rng.uniform(-3.0, 3.0, size=8) if abs(t) > 1e-3]
        deviation = max(example_system(self.example(kind)).check_jacobian(
            0.7, points) for kind in SCAN_WINDOWS)
        self.record('jacobian_consistency', deviation <= 1e-5,
                    deviation=deviation)

        # the example has one-dimensional subspaces, their orthogonal
        # changes of basis are the reflections
        linear = self.example(GammaKind.LINEAR)
        reference = self.scan(GammaKind.LINEAR)
        expected = [c.critical for c in reference.certificates]
        shift, consistent = 0.0, True
        for _ in range(10):
            flips = [float(f) for f in rng.choice([-1.0, 1.0], size=2)]
            rotated = evans_scan(example_system(linear),
                                 self.grid(GammaKind.LINEAR),
                                 initial_rotation=(np.array([[flips[0]]]),
                                                   np.array([[flips[1]]])),
                                 **self.cfg.scan_options())
            found = [c.critical for c in rotated.certificates]
            if len(found) != len(expected):
                consistent = False
                continue
            shift = max([shift] + [abs(a - b) for a, b in zip(found,
                                                              expected)])
            consistent = consistent and all(
                mine.sign == flips[0] * flips[1] * other.sign
                for mine, other in zip(rotated.samples, reference.samples))
        self.record('basis_invariance', consistent and shift <= 2e-6,
                    critical_shift=shift, signs_consistent=consistent)

        transcritical = self.example(GammaKind.LINEAR, beta=1.0, n=2)
        base = self.options(None)
        errors = []
        for factor in (2.0, 1.0):
            opts = dataclasses.replace(base, mesh_step=factor * base.mesh_step)
            solution = self.solved(transcritical, -0.5, 0.75, opts)
            exact = oracle_trajectory(transcritical, -0.5, 0.75, solution.mesh)
            errors.append(float(np.abs(solution.values - exact).max()))
        ratio = errors[0] / max(errors[1], 1e-300)
        self.record('mesh_convergence', ratio >= 3.0, errors=errors,
                    ratio=ratio)

        pitchfork = self.example(GammaKind.LINEAR, beta=1.0, n=3)
        upper = self.solved(pitchfork, -0.5, 1.0, base, newton_tol=1e-11)
        lower = self.solved(pitchfork, -0.5, -1.0, base, newton_tol=1e-11)
        mirror = float(np.abs(upper.mirrored().values - lower.values).max())
        self.record('mirror_symmetry', mirror <= 1e-8, deviation=mirror)

    def tan_transcritical(self):
        # n even: one branch y(0)_1 = -1.5 tan(lambda) joining both ends of
        # the parameter interval
        cfg = self.example(GammaKind.TAN, beta=1.0, n=2)
        lam_star = self._critical_near(GammaKind.TAN, 0.0)
        opts = dataclasses.replace(
            self.options((-math.pi / 2, math.pi / 2)), norm_cap=1e4)
        continuum = trace_continuum(example_system(cfg), lam_star, opts)
        ends = [(e.kind, e.lambda_) for e in continuum.events]
        reached = sorted(lam for _, lam in ends)
        worst = self.worst_fit(continuum, lambda lam: -1.5 * math.tan(lam),
                               hi=1.3)
        report = self.classify(continuum, GammaKind.TAN)
        passed = all(kind in (Event.PARAM_BOUNDARY, Event.NORM_CAP)
                     for kind, _ in ends) and \
            reached[0] <= -1.5 and reached[1] >= 1.5 and worst <= 1e-3 and \
            report.classification == Classification.UNBOUNDED
        self.record('tan_transcritical', passed,
                    events=[list(e) for e in ends], worst_relative_error=worst,
                    classification=report.classification, index=report.index)

    def touch_zero_branches(self):
        opts = self.options((-1.5, 1.5))

        # n even: y(0)_1 = -1.5 |lambda| runs through the touch-zero
        even = self.example(GammaKind.ABS, beta=1.0, n=2)
        sys = example_system(even)
        start = self.solved(even, -1.0, -1.5, opts)
        continuum = join_continua(
            continue_branch(sys, start, direction=-1, opts=opts),
            continue_branch(sys, start, direction=1, opts=opts))
        reached = sorted(e.lambda_ for e in continuum.events)
        worst = self.worst_fit(continuum, lambda lam: -1.5 * abs(lam))
        report = self.classify(continuum, GammaKind.ABS)
        self.record('touch_zero_even', reached[0] < -1.5 and
                    reached[1] > 1.5 and worst <= 1e-3 and
                    report.index == 0 and
                    report.classification == Classification.UNBOUNDED,
                    reached=reached, worst_relative_error=worst,
                    classification=report.classification, index=report.index)

        # n odd, beta < 0: y(0)_1 = +-sqrt(2 |lambda|), both halves meet the
        # trivial branch at the touch-zero
        odd = self.example(GammaKind.ABS, beta=-1.0, n=3)
        sys = example_system(odd)
        worst, classes, near = 0.0, [], []
        for lam in (-1.0, 1.0):
            start = self.solved(odd, lam, math.sqrt(2.0), opts)
            run = continue_branch(sys, start, direction=int(lam), opts=opts)
            worst = max(worst, self.worst_fit(
                run, lambda x: math.sqrt(2.0 * abs(x))))
            classes.append(self.classify(run, GammaKind.ABS).classification)
            near.append(self.solved(odd, 0.02 * lam, 0.2, opts).sup_norm)
        self.record('touch_zero_odd', worst <= 1e-3 and max(near) <= 0.25 and
                    all(c == Classification.UNBOUNDED for c in classes),
                    worst_relative_error=worst, classifications=classes,
                    norms_near_zero=near)

    def periodic_branch(self):
        # n even: y(0)_1 = -1.5 sin(lambda) crosses every k pi transversally
        cfg = self.example(GammaKind.SIN, beta=1.0, n=2)
        lam_star = self._critical_near(GammaKind.SIN, 0.0)
        continuum = trace_continuum(example_system(cfg), lam_star,
                                    self.options((-4.0, 4.0)))
        crossings = list(continuum.transversal)
        near = len(crossings) == 2 and all(
            abs(c - target) <= 1e-2
            for c, target in zip(crossings, (-math.pi, math.pi)))
        report = self.classify(continuum, GammaKind.SIN)
        self.record('periodic_branch', near and abs(report.index) == 1 and
                    report.classification == Classification.UNBOUNDED,
                    transversal=crossings, touched=report.touched,
                    index=report.index, classification=report.classification)

    def run(self):
        self.guarded('closed_form', self.closed_form)
        self.guarded('properties', self.properties)
        self.guarded('evans_sign_oracle', self.evans_signs)
        self.guarded('critical_values', self.critical_values)
        self.guarded('subspace_oracle', self.subspaces)
        self.guarded('transcritical_branch', self.transcritical)
        self.guarded('bounded_continuum_index', self.bounded_loop)
        self.guarded('parameter_boundary', self.parameter_boundary)
        self.guarded('tan_transcritical', self.tan_transcritical)
        self.guarded('touch_zero_branches', self.touch_zero_branches)
        self.guarded('periodic_branch', self.periodic_branch)
        return self.results


def run_suite(cfg):
    """ List of CheckResult, one per acceptance criterion """
    return Verifier(cfg).run()

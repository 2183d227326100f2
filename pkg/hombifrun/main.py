# hombif runner commands.
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

import sys

import numpy as np

from hombif.cover import JCover, bifurcation_index, build_cover
from hombif.dichotomy import (
    DichotomyConstants,
    NoGap,
    NonDecay,
    estimate_dichotomy_constants,
    fredholm_index_check,
    stable_subspace_plus,
    unstable_subspace_minus,
)
from hombif.evans import evans_scan, parity_certificate
from hombif.helpers import Classification, HombifError, Inconclusive
from hombif.homoclinic import (
    TheoremViolation,
    classify_continuum,
    trace_continuum,
)
from hombifrun.app import app, artifact_scope
from hombifrun.report import dumps
from hombifrun.verify import run_suite

EXIT_OK = 0
EXIT_INCONCLUSIVE = Inconclusive.exit_code

BRANCH_HEADER_START = ['lambda', 'sup_norm', 'w1inf_norm']


def _scan(cfg):
    return evans_scan(app.system, cfg.grid(), **cfg.scan_options())


def _scan_report(scan, cover):
    data = scan.to_dict()
    data['cover'] = cover.to_dict() if cover else None
    return data


def _cover(cfg, scan):
    return build_cover(scan, cfg['cluster_tol'])


def cmd_scan(cfg, artifacts):
    scan = _scan(cfg)
    artifacts.write_csv('evans.csv', ['lambda', 'E', 'sign'], scan.rows())
    try:
        cover = _cover(cfg, scan)
    except HombifError as err:
        app.log.warning("no J-cover: %s", err.message)
        cover = None
    artifacts.write_json('critical_values.json', _scan_report(scan, cover))
    return EXIT_OK


def cmd_bifurcations(cfg, artifacts):
    scan = _scan(cfg)
    cover = _cover(cfg, scan)
    pairs = cfg['bifurcations']['parity'] or [list(cfg.window)]
    parities = []
    for lam_minus, lam_plus in pairs:
        value, certified = parity_certificate(scan, lam_minus, lam_plus)
        parities.append({'interval': [lam_minus, lam_plus],
                         'parity': value, 'certified': certified})
    artifacts.write_json('certificates.json', {
        'certificates': [c.to_dict() for c in scan.certificates],
        'touch_zeros': list(scan.touch_zeros),
        'critical_intervals': [c.to_dict() for c in scan.critical_intervals],
        'parity': parities,
    })
    artifacts.write_json('cover.json', cover.to_dict())
    return EXIT_OK


def _seeds(cfg, scan):
    seeds = cfg['branch']['seeds']
    if seeds:
        return [float(s) for s in seeds]
    return [c.critical for c in scan.certificates]


def cmd_branch(cfg, artifacts):
    scan = _scan(cfg)
    cover = _cover(cfg, scan)
    opts = cfg.continuation_options()
    records, indices = [], {}
    status = EXIT_OK
    for number, lam_star in enumerate(_seeds(cfg, scan)):
        continuum = trace_continuum(app.system, lam_star, opts)
        report = classify_continuum(continuum, cover,
                                    cfg['branch']['match_tol'])
        dim = app.system.dim
        header = BRANCH_HEADER_START + \
            ['y0_{0}'.format(i + 1) for i in range(dim)] + \
            ['residual', 'event']
        rows = []
        last = len(continuum.points) - 1
        for k, point in enumerate(continuum.points):
            event = ""
            if k == 0:
                event = continuum.events[0].kind
            elif k == last:
                event = continuum.events[1].kind
            rows.append(point.row(event))
        artifacts.write_csv('branch_{0}.csv'.format(number), header, rows)
        records.append({
            'id': number,
            'seed': lam_star,
            'continuum': continuum.to_dict(),
            'report': report.to_dict(),
        })
        indices[str(number)] = report.index
        if report.classification == Classification.INCONCLUSIVE:
            status = EXIT_INCONCLUSIVE
    artifacts.write_json('continuum.json', {'continua': records})
    artifacts.write_json('cover.json', cover.to_dict(indices))
    return status


def _load_cover(data):
    return JCover(intervals=[tuple(j) for j in data['intervals']],
                  closures=[tuple(j) for j in data['closures']],
                  test_points=list(data['test_points']),
                  signs=list(data['signs']))


def cmd_classify(cfg, artifacts):
    """ Recompute touched closures and indices of the recorded continua """
    try:
        recorded = artifacts.read_json('continuum.json')
        cover = _load_cover(artifacts.read_json('cover.json'))
    except (OSError, ValueError, KeyError) as err:
        raise Inconclusive("no recorded continua to classify: {0}"
                           .format(err))
    match_tol = cfg['branch']['match_tol']
    results, indices = [], {}
    status = EXIT_OK
    for record in recorded['continua']:
        report = record['report']
        touched = sorted({i for i in (cover.index_of(lam, match_tol)
                                      for lam in report['return_points'])
                          if i is not None})
        index = bifurcation_index(cover, touched)
        classification = report['classification']
        if classification == Classification.RETURNS and index:
            raise TheoremViolation(
                "bounded continuum {0} has bifurcation index {1}"
                .format(record['id'], index), touched=touched, index=index)
        if classification == Classification.INCONCLUSIVE:
            status = EXIT_INCONCLUSIVE
        indices[str(record['id'])] = index
        results.append({'id': record['id'], 'classification': classification,
                        'touched_indices': touched,
                        'bifurcation_index': index,
                        'certified_unbounded': index != 0})
    artifacts.write_json('classification.json', {'continua': results})
    artifacts.write_json('cover.json', cover.to_dict(indices))
    return status


def cmd_verify_example(cfg, artifacts):
    results = run_suite(cfg)
    for result in results:
        print("{0} {1}".format("PASS" if result.passed else "FAIL",
                               result.name))
    passed = all(r.passed for r in results)
    artifacts.write_json('verify.json', {
        'passed': passed,
        'checks': [r.to_dict() for r in results],
    })
    return EXIT_OK if passed else 3


def cmd_dichotomy(cfg, artifacts):
    lo, hi = cfg.window
    samples = []
    for lam in np.linspace(lo, hi, cfg['dichotomy']['samples']):
        lam = float(lam)
        try:
            plus = stable_subspace_plus(app.system, lam, cfg['horizon'],
                                        cfg['gap_threshold'], tol=cfg['tol'],
                                        window=cfg['window'])
            minus = unstable_subspace_minus(app.system, lam, cfg['horizon'],
                                            cfg['gap_threshold'],
                                            tol=cfg['tol'],
                                            window=cfg['window'])
        except NoGap as err:
            app.log.warning("%s", err.message)
            samples.append({'lambda': lam, 'non_hyperbolic': True,
                            'error': err.to_dict()})
            continue
        entry = {'lambda': lam, 'non_hyperbolic': False}
        for name, sub in (('plus', plus), ('minus', minus)):
            if cfg['dichotomy']['constants'] and sub.rank:
                try:
                    K, alpha, residual = estimate_dichotomy_constants(
                        app.system, lam, sub, tol=cfg['tol'],
                        window=cfg['window'])
                    sub = sub.with_constants(
                        DichotomyConstants(K, alpha, residual))
                except NonDecay as err:
                    app.log.warning("%s", err.message)
            entry[name] = sub.to_dict()
        entry['index'] = fredholm_index_check(plus, minus).to_dict()
        samples.append(entry)
    artifacts.write_json('projectors.json', {'samples': samples})
    return EXIT_OK


COMMANDS = {
    'scan': cmd_scan,
    'bifurcations': cmd_bifurcations,
    'branch': cmd_branch,
    'classify': cmd_classify,
    'verify-example': cmd_verify_example,
    'dichotomy': cmd_dichotomy,
}


def run(command, cfg):
    """ Run COMMAND with the validated CFG, return the exit status """
    if command not in COMMANDS:
        raise ValueError("unknown command '{0}'".format(command))
    app.configure(cfg)
    app.log.info("Running %s for %s on [%g, %g]", command, cfg['system'],
                 *cfg.window)
    try:
        with artifact_scope(command) as artifacts:
            status = COMMANDS[command](cfg, artifacts)
    except HombifError as err:
        app.log.error("%s failed: %s", command, err.message)
        data = err.to_dict()
        data['exit_code'] = err.exit_code
        sys.stdout.write(dumps(data))
        return err.exit_code
    except Exception:
        app.log.exception("Exception raised in %s", command)
        raise
    return status

"""Command line interface, exercised through subprocesses."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from bosvs import bench, problem_io

BOSVS = [sys.executable, '-m', 'bosvs.cli']


def run_cli(args, **kw):
    env = dict(os.environ)
    env.setdefault('BOSVS_THREADS', '1')
    env.update(kw.pop('env', {}))
    return subprocess.run(BOSVS + args, capture_output=True, text=True,
                          env=env, **kw)


@pytest.fixture(scope='module')
def lasso_file(tmp_path_factory):
    path = tmp_path_factory.mktemp('cli') / 'lasso.json'
    p = bench.make_lasso(bench.LassoConfig(n=20, d=30, seed=4))
    problem_io.save_problem(p, str(path))
    return str(path)


def test_solve_runs_and_writes_artifacts(tmp_path, lasso_file):
    trace = str(tmp_path / 'trace.csv')
    summary = str(tmp_path / 'summary.json')
    proc = run_cli(['solve', '--problem', lasso_file, '--scheme',
                    'generalized', '--rho', '1.0', '--tol', '1e-8',
                    '--trace', trace, '--summary', summary])
    assert proc.returncode == 0, proc.stderr
    assert 'generalized:' in proc.stdout and '(converged)' in proc.stdout
    with open(summary) as fh:
        doc = json.load(fh)
    assert doc['converged'] is True and doc['scheme'] == 'generalized'
    header = open(trace).readline().strip().split(',')
    assert header[:4] == ['k', 'time_s', 'objective', 'e_k']
    assert header[-2:] == ['delta_1', 'delta_2']


def test_solve_budget_exhaustion_exit_code(lasso_file):
    proc = run_cli(['solve', '--problem', lasso_file, '--scheme', 'exact',
                    '--rho', '1.0', '--tol', '1e-12', '--max-iters', '3'])
    assert proc.returncode == 2
    assert '(max_iters)' in proc.stdout


def test_solve_missing_file_is_an_error():
    proc = run_cli(['solve', '--problem', '/nonexistent/p.json',
                    '--scheme', 'exact', '--rho', '1.0'])
    assert proc.returncode == 1
    assert 'error:' in proc.stderr


def test_bad_usage_reports_usage():
    proc = run_cli(['solve', '--problem', 'x.json', '--scheme', 'sneaky',
                    '--rho', '1.0'])
    assert proc.returncode != 0
    assert 'usage' in proc.stderr.lower()


def test_refsolve_subcommand(tmp_path, lasso_file):
    summary = str(tmp_path / 'ref.json')
    proc = run_cli(['refsolve', '--problem', lasso_file, '--rho', '1.0',
                    '--summary', summary])
    assert proc.returncode == 0, proc.stderr
    assert 'phi_star=' in proc.stdout
    with open(summary) as fh:
        doc = json.load(fh)
    assert doc['termination'] == 'callback'
    assert doc['phi_star'] == pytest.approx(
        float(proc.stdout.split('phi_star=')[1].split()[0]), rel=1e-9)


def test_bench_lasso_end_to_end(tmp_path):
    out = str(tmp_path / 'out')
    proc = run_cli(['bench', 'lasso', '--n', '20', '--d', '30', '--seed',
                    '5', '--scheme', 'accelerated', '--tol', '1e-8',
                    '--out', out])
    assert proc.returncode == 0, proc.stderr
    assert 'ista reference objective:' in proc.stdout
    for name in ('problem.json', 'index.json', 'ista.json',
                 'accelerated_trace.csv', 'accelerated_summary.json',
                 'accelerated_plotdata.csv'):
        assert os.path.exists(os.path.join(out, name)), name
    with open(os.path.join(out, 'index.json')) as fh:
        index = json.load(fh)
    assert index['schemes'] == {'accelerated': 0}
    with open(os.path.join(out, 'ista.json')) as fh:
        ista = json.load(fh)
    assert abs(index['phi_star'] - ista['objective']) \
        <= 1e-6 * abs(ista['objective'])
    # the saved problem file reproduces the generated instance
    p = problem_io.load_problem(os.path.join(out, 'problem.json'))
    q = bench.make_lasso(bench.LassoConfig(n=20, d=30, seed=5))
    assert np.array_equal(p.blocks[0].f.data, q.blocks[0].f.data)


def test_bench_all_schemes_with_thread_cap(tmp_path):
    out = str(tmp_path / 'out')
    proc = run_cli(['bench', 'lasso', '--n', '30', '--d', '60', '--nnz',
                    '4', '--seed', '6', '--tol', '1e-7', '--out', out],
                   env={'BOSVS_THREADS': '2'})
    assert proc.returncode == 0, proc.stderr
    with open(os.path.join(out, 'index.json')) as fh:
        index = json.load(fh)
    assert sorted(index['schemes']) == ['accelerated', 'exact',
                                        'generalized', 'multistep']
    assert set(index['schemes'].values()) == {0}

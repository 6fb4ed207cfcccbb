"""Command line front end.

Subcommands: ``solve`` runs one scheme on a problem file; ``bench
deblur`` / ``bench lasso`` generate an instance, save it, and run one or
all schemes; ``refsolve`` computes the reference objective by the
accelerated refinement protocol. Exit code 0 on convergence, 2 when the
iteration budget ran out, 1 on any other error. BOSVS_THREADS caps the
run-matrix parallelism of ``bench``.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .bench import (DeblurConfig, LassoConfig, REFERENCE_CAP, ista_oracle,
                    make_deblur, make_lasso, refsolve, run_benchmark)
from .errors import MaxItersReached, SolverError
from .inner import RelaxationParams
from .outer import OuterParams, solve, write_summary, write_trace_csv
from .problem_io import load_problem, save_problem

SCHEME_CHOICES = ['generalized', 'multistep', 'accelerated', 'exact']


def _bool(text):
    val = text.strip().lower()
    if val in ('1', 'true', 'yes', 'on'):
        return True
    if val in ('0', 'false', 'no', 'off'):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _thread_budget(njobs):
    cap = os.environ.get('BOSVS_THREADS')
    try:
        cap = int(cap) if cap else (os.cpu_count() or 1)
    except ValueError:
        cap = 1
    return max(1, min(njobs, cap))


def _build_params(args, scheme):
    return OuterParams(
        rho=args.rho, alpha=args.alpha, scheme=scheme,
        accel_schedule=getattr(args, 'accel_schedule', 'adaptive'),
        relax=RelaxationParams(enabled=args.relaxed),
        stop_tol=args.tol, max_outer_iters=args.max_iters)


def _add_common(sp, rho_default=None):
    sp.add_argument('--rho', type=float, required=rho_default is None,
                    default=rho_default, help='penalty parameter')
    sp.add_argument('--alpha', type=float, default=0.999,
                    help='correction stepsize in (0, 1)')
    sp.add_argument('--tol', type=float, default=None,
                    help='stopping tolerance on e_k (default: scaled 1e-8)')
    sp.add_argument('--max-iters', type=int, default=100000)
    sp.add_argument('--relaxed', type=_bool, default=True,
                    help='practical stopping/line-search slack (true/false)')
    sp.add_argument('--accel-schedule', choices=['adaptive', 'constant'],
                    default='adaptive')


def _add_ref_rho(sp):
    sp.add_argument('--ref-rho', type=float, default=None,
                    help='penalty used for the reference-objective run '
                         '(default: same as --rho; the refinement protocol '
                         'can stall below the optimum when rho is tiny)')


def _cmd_solve(args):
    p = load_problem(args.problem)
    params = _build_params(args, args.scheme)
    code = 0
    try:
        result = solve(p, params)
    except MaxItersReached as exc:
        result = exc.result
        code = 2
    if args.trace:
        write_trace_csv(result.trace, args.trace, p.m)
    if args.summary:
        write_summary(result, args.summary, extra={'scheme': args.scheme})
    last = result.trace[-1]
    print(f"{args.scheme}: k={last.k} objective={last.objective:.9e} "
          f"e={last.e_k:.3e} ({result.reason})")
    return code


def _bench_run_matrix(p, problem_path, args, out_dir):
    schemes = SCHEME_CHOICES if args.scheme == 'all' else [args.scheme]
    ref_rho = args.ref_rho if args.ref_rho is not None else args.rho
    phi_star, _ = refsolve(p, ref_rho, args.alpha)
    jobs = []
    with ThreadPoolExecutor(max_workers=_thread_budget(len(schemes))) as ex:
        for scheme in schemes:
            params = _build_params(args, scheme)
            jobs.append((scheme, ex.submit(
                run_benchmark, problem_path, scheme, params, out_dir,
                phi_star=phi_star)))
        codes = {scheme: fut.result() for scheme, fut in jobs}
    index = {'problem': str(problem_path), 'phi_star': phi_star,
             'schemes': codes}
    with open(os.path.join(out_dir, 'index.json'), 'w') as fh:
        json.dump(index, fh, indent=2, sort_keys=True)
        fh.write('\n')
    for scheme in schemes:
        print(f"{scheme}: exit {codes[scheme]}")
    return max(codes.values())


def _cmd_bench_deblur(args):
    cfg = DeblurConfig(size=args.size, blur_size=args.blur, snr_db=args.snr,
                       alpha_tv=args.alpha_tv, beta_wav=args.beta_wav,
                       seed=args.seed, haar_levels=args.haar_levels)
    p = make_deblur(cfg)
    os.makedirs(args.out, exist_ok=True)
    problem_path = os.path.join(args.out, 'problem.json')
    save_problem(p, problem_path)
    return _bench_run_matrix(p, problem_path, args, args.out)


def _cmd_bench_lasso(args):
    cfg = LassoConfig(n=args.n, d=args.d, nnz=args.nnz,
                      noise_std=args.noise_std, beta=args.beta,
                      seed=args.seed)
    p = make_lasso(cfg)
    os.makedirs(args.out, exist_ok=True)
    problem_path = os.path.join(args.out, 'problem.json')
    save_problem(p, problem_path)
    code = _bench_run_matrix(p, problem_path, args, args.out)
    u = ista_oracle(p.meta['design'], p.meta['data'], args.beta)
    ref = 0.5 * float(np.sum((p.meta['design'] @ u - p.meta['data']) ** 2)) \
        + args.beta * float(np.sum(np.abs(u)))
    with open(os.path.join(args.out, 'ista.json'), 'w') as fh:
        json.dump({'objective': ref}, fh, indent=2, sort_keys=True)
        fh.write('\n')
    print(f"ista reference objective: {ref:.9e}")
    return code


def _cmd_refsolve(args):
    p = load_problem(args.problem)
    phi_star, result = refsolve(p, args.rho, args.alpha, cap=args.cap)
    doc = {'phi_star': phi_star, 'iterations': result.iterations,
           'termination': result.reason}
    if args.summary:
        with open(args.summary, 'w') as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write('\n')
    print(f"phi_star={phi_star:.9e} after {result.iterations} iterations "
          f"({result.reason})")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog='bosvs',
                                 description='inexact multi-block ADMM '
                                             'solvers and benchmarks')
    sub = ap.add_subparsers(dest='command', required=True)

    sp = sub.add_parser('solve', help='run one scheme on a problem file')
    sp.add_argument('--problem', required=True)
    sp.add_argument('--scheme', choices=SCHEME_CHOICES, required=True)
    _add_common(sp)
    sp.add_argument('--trace', help='trace CSV output path')
    sp.add_argument('--summary', help='summary JSON output path')
    sp.set_defaults(func=_cmd_solve)

    bench = sub.add_parser('bench', help='generate and run an instance')
    bsub = bench.add_subparsers(dest='family', required=True)

    bd = bsub.add_parser('deblur', help='image deblurring benchmark')
    bd.add_argument('--size', type=int, default=32)
    bd.add_argument('--seed', type=int, default=0)
    bd.add_argument('--blur', type=int, default=3)
    bd.add_argument('--snr', type=float, default=40.0)
    bd.add_argument('--alpha-tv', type=float, default=0.005)
    bd.add_argument('--beta-wav', type=float, default=0.001)
    bd.add_argument('--haar-levels', type=int, default=None)
    bd.add_argument('--scheme', choices=SCHEME_CHOICES + ['all'],
                    default='all')
    bd.add_argument('--out', required=True)
    _add_common(bd, rho_default=5e-4)
    _add_ref_rho(bd)
    bd.set_defaults(func=_cmd_bench_deblur)

    bl = bsub.add_parser('lasso', help='lasso consensus benchmark')
    bl.add_argument('--n', type=int, default=100)
    bl.add_argument('--d', type=int, default=150)
    bl.add_argument('--nnz', type=int, default=10)
    bl.add_argument('--noise-std', type=float, default=0.01)
    bl.add_argument('--beta', type=float, default=0.1)
    bl.add_argument('--seed', type=int, default=0)
    bl.add_argument('--scheme', choices=SCHEME_CHOICES + ['all'],
                    default='all')
    bl.add_argument('--out', required=True)
    _add_common(bl, rho_default=1.0)
    _add_ref_rho(bl)
    bl.set_defaults(func=_cmd_bench_lasso)

    rf = sub.add_parser('refsolve', help='reference objective protocol')
    rf.add_argument('--problem', required=True)
    rf.add_argument('--rho', type=float, required=True)
    rf.add_argument('--alpha', type=float, default=0.999)
    rf.add_argument('--cap', type=int, default=REFERENCE_CAP)
    rf.add_argument('--summary')
    rf.set_defaults(func=_cmd_refsolve)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MaxItersReached:
        print("error: iteration budget exhausted", file=sys.stderr)
        return 2
    except (SolverError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())

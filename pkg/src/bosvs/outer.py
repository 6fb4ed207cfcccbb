"""Outer loop: block sweep, error measure, correction step, diagnostics.

One outer iteration sweeps the blocks in order (each sees the already
updated z of earlier blocks and the y of later ones), forms the combined
error measure

    e^k = theta_1 ||z_+ - y_+|| + theta_2 ||A z - b|| + theta_3 sqrt(sum r_i),

then corrects: y_1 <- z_1, y_+ <- y_+ + alpha M^{-T} H (z_+ - y_+) by
back substitution, lam <- lam + alpha rho (A z - b). The reported
solution is the z iterate (switchable to x).

``solve`` drives outer_step until e^k falls below the stopping tolerance.
``energy_E`` evaluates the merit function used by the decay diagnostics
when a reference solution is available.
"""

import csv
import json
import time

import numpy as np

from .errors import (DimensionMismatch, MaxItersReached, MissingReference,
                     NegativeR)
from .inner import (BlockState, BlockWorkspace, InnerContext, LineSearchParams,
                    RelaxationParams, accelerated_loop, exact_block_solve,
                    generalized_step, multistep_loop)
from .linops import assemble_back_sub, back_substitute
from .problem import b_i_k, objective

__all__ = ['OuterParams', 'OuterState', 'TraceRecord', 'SolveResult',
           'error_measure', 'outer_step', 'solve', 'energy_E',
           'default_thetas', 'psi_multistep', 'psi_accelerated',
           'write_trace_csv', 'write_summary', 'CSV_BASE_FIELDS']

SCHEMES = ('generalized', 'multistep', 'accelerated', 'exact')

CSV_BASE_FIELDS = ['k', 'time_s', 'objective', 'e_k', 'primal_res', 'E_k',
                   'inner_iters_total']


def default_thetas(rho, sigma, alpha):
    """Error-measure weights tied to the penalty and safeguard constants."""
    return (1e-6 * np.sqrt(rho), np.sqrt(rho),
            1e-6 * np.sqrt(sigma / (1.0 - alpha)))


def psi_multistep(t):
    """Default inner forcing for the multistep scheme: min(0.1 t, t^1.1)."""
    return min(0.1 * t, t ** 1.1)


def psi_accelerated(t):
    """Default inner forcing for the accelerated scheme: 0.5 t."""
    return 0.5 * t


class OuterParams:
    """Configuration for one solve.

    Parameters
    ----------
    rho : float
        Penalty parameter, > 0.
    alpha : float
        Correction stepsize, strictly inside (0, 1).
    scheme : str or list of str
        One of 'generalized', 'multistep', 'accelerated', 'exact'; a list
        gives one scheme per block.
    accel_schedule : str
        'adaptive' (line-searched) or 'constant' (needs Lipschitz
        constants).
    ls : LineSearchParams
    relax : RelaxationParams
        Practical slack; construct with enabled=False for the strict
        variants.
    thetas : tuple or None
        Error-measure weights; None picks the defaults tied to rho,
        sigma, alpha.
    stop_tol : float or None
        Terminate when e^k <= stop_tol. None resolves after the first
        iteration to 1e-8 * (1 + |Phi(z^1)|).
    max_outer_iters : int
    psi_ms, psi_acc : callables or None
        Inner forcing functions of e^{k-1}; None picks the defaults.
    cg_tol, cg_maxit : exact-scheme CG controls.
    reference : (x_star, lam_star) or None
        Enables the E_k column in the trace.
    solution_iterate : 'z' or 'x'
        Which iterate the result reports.
    """

    def __init__(self, rho, alpha=0.999, scheme='accelerated',
                 accel_schedule='adaptive', ls=None, relax=None, thetas=None,
                 stop_tol=None, max_outer_iters=100000, psi_ms=None,
                 psi_acc=None, cg_tol=1e-6, cg_maxit=100000, reference=None,
                 solution_iterate='z'):
        if rho <= 0:
            raise ValueError("rho must be positive")
        if not (0.0 < alpha < 1.0):
            raise ValueError("alpha must lie strictly inside (0, 1)")
        self.rho = float(rho)
        self.alpha = float(alpha)
        self.scheme = scheme
        self.accel_schedule = accel_schedule
        self.ls = ls if ls is not None else LineSearchParams()
        self.relax = relax if relax is not None else RelaxationParams()
        if thetas is None:
            thetas = default_thetas(self.rho, self.ls.sigma, self.alpha)
        if any(t <= 0 for t in thetas):
            raise ValueError("thetas must be positive")
        self.thetas = tuple(float(t) for t in thetas)
        self.stop_tol = stop_tol
        self.max_outer_iters = int(max_outer_iters)
        self.psi_ms = psi_ms if psi_ms is not None else psi_multistep
        self.psi_acc = psi_acc if psi_acc is not None else psi_accelerated
        self.cg_tol = float(cg_tol)
        self.cg_maxit = int(cg_maxit)
        self.reference = reference
        if solution_iterate not in ('z', 'x'):
            raise ValueError("solution_iterate must be 'z' or 'x'")
        self.solution_iterate = solution_iterate

    def scheme_for(self, i, m):
        s = self.scheme
        if isinstance(s, str):
            name = s
        else:
            s = list(s)
            if len(s) != m:
                raise ValueError(f"scheme list needs {m} entries")
            name = s[i]
        if name not in SCHEMES:
            raise ValueError(f"unknown scheme {name!r}")
        return name

    def energy_mode(self, m):
        """Generalized energy when every block runs generalized steps."""
        names = {self.scheme_for(i, m) for i in range(m)}
        return 'generalized' if names == {'generalized'} else 'multistep'


class OuterState:
    """Iterate bundle: x, y, lam, last z, per-block inner bookkeeping."""

    def __init__(self, p, params, x0=None, lam0=None):
        n = p.n
        if x0 is None:
            x0 = np.zeros(n)
        x0 = p.check_vector(x0).copy()
        if lam0 is None:
            lam0 = np.zeros(p.rows)
        lam0 = np.asarray(lam0, dtype=float).ravel().copy()
        if lam0.size != p.rows:
            raise DimensionMismatch("lam0 length mismatch")
        self.x = x0
        self.y = x0.copy()
        self.z = None
        self.lam = lam0
        self.bstates = [BlockState(x0[p.block_slice(i)].copy(),
                                   params.ls.delta_min)
                        for i in range(p.m)]
        self.e_prev = np.inf
        self.k = 1

    @property
    def deltas(self):
        return [b.delta_prev for b in self.bstates]

    @property
    def Gammas(self):
        return [b.Gamma_prev for b in self.bstates]


class _Snapshot:
    """State view handed to energy_E: entering iterates, fresh weights."""

    def __init__(self, x, y, lam, deltas, Gammas):
        self.x = x
        self.y = y
        self.lam = lam
        self.deltas = deltas
        self.Gammas = Gammas


class TraceRecord:
    """One outer iteration's diagnostics."""

    def __init__(self, k, time_s, objective, e_k, primal_res, E_k,
                 inner_iters, deltas, gammas):
        self.k = int(k)
        self.time_s = float(time_s)
        self.objective = float(objective)
        self.e_k = float(e_k)
        self.primal_res = float(primal_res)
        self.E_k = None if E_k is None else float(E_k)
        self.inner_iters = list(inner_iters)
        self.deltas = list(deltas)
        self.gammas = list(gammas)

    @property
    def inner_iters_total(self):
        return int(sum(self.inner_iters))


class SolveResult:
    """Final iterates, trace, and termination report."""

    def __init__(self, p, solution, x, y, z, lam, trace, converged, reason,
                 stop_tol):
        self.p = p
        self.solution = solution
        self.x = x
        self.y = y
        self.z = z
        self.lam = lam
        self.trace = trace
        self.converged = bool(converged)
        self.reason = reason
        self.stop_tol = stop_tol

    @property
    def iterations(self):
        return len(self.trace)

    @property
    def final_objective(self):
        return self.trace[-1].objective if self.trace else None


def error_measure(theta, z, y, r_list, p, primal_vec=None):
    """theta_1 ||z_+ - y_+|| + theta_2 ||Az - b|| + theta_3 sqrt(sum r_i).

    The consensus term drops block 1. r_i must be nonnegative. Passing a
    precomputed A z - b avoids one operator sweep.
    """
    t1, t2, t3 = theta
    z = p.check_vector(z)
    y = p.check_vector(y)
    r_arr = np.asarray(r_list, dtype=float).ravel()
    if r_arr.size != p.m:
        raise DimensionMismatch(f"need {p.m} inexactness terms")
    if np.any(r_arr < 0.0):
        raise NegativeR(f"negative inexactness term in {list(r_arr)}")
    off1 = int(p.offsets[1])
    cons = np.linalg.norm(z[off1:] - y[off1:])
    if primal_vec is None:
        primal_vec = p.apply_A(z) - p.b
    return float(t1 * cons + t2 * np.linalg.norm(primal_vec)
                 + t3 * np.sqrt(r_arr.sum()))


def energy_E(p, state, rho, alpha, reference, bs, mode='multistep'):
    """Merit function against a reference pair (x*, lam*).

    rho * ||y_+ - x*_+||_P^2 + (1/rho) ||lam - lam*||^2 plus alpha times
    either sum_i delta_i ||x_i - x*_i||^2 (mode 'generalized') or
    sum_i ||x_i - x*_i||^2 / Gamma_i (mode 'multistep'); P = M H^{-1} M^T.
    """
    if reference is None:
        raise MissingReference("energy_E needs a reference pair")
    x_star, lam_star = reference
    x_star = p.check_vector(x_star)
    lam_star = np.asarray(lam_star, dtype=float).ravel()
    off1 = int(p.offsets[1])
    pterm = bs.p_quadratic(state.y[off1:] - x_star[off1:]) if p.m > 1 else 0.0
    dl = state.lam - lam_star
    out = rho * pterm + float(dl @ dl) / rho
    for i in range(p.m):
        sl = p.block_slice(i)
        d = state.x[sl] - x_star[sl]
        dd = float(d @ d)
        if mode == 'generalized':
            delta = state.deltas[i]
            if delta is None:
                raise MissingReference("no accepted delta recorded yet")
            out += alpha * delta * dd
        elif mode == 'multistep':
            g = state.Gammas[i]
            out += 0.0 if g == np.inf else alpha * dd / g
        else:
            raise ValueError(f"unknown energy mode {mode!r}")
    return float(out)


def _dispatch_block(p, i, s, params, workspaces, scheme):
    bst = s.bstates[i]
    ctx = InnerContext(p, i, b_i_k(p, i, s._z_partial, s.y), s.lam,
                       params.rho, params.ls, params.relax, s.k,
                       workspaces[i])
    if scheme == 'generalized':
        return generalized_step(ctx, bst)
    if scheme == 'multistep':
        return multistep_loop(ctx, bst, params.psi_ms(s.e_prev))
    if scheme == 'accelerated':
        return accelerated_loop(ctx, bst, params.psi_acc(s.e_prev),
                                schedule=params.accel_schedule)
    return exact_block_solve(ctx, bst, params.cg_tol, params.cg_maxit)


def outer_step(p, s, params, bs, workspaces=None, t0=None):
    """Advance the state by one outer iteration; returns (s, TraceRecord)."""
    if workspaces is None:
        workspaces = [BlockWorkspace(blk.A) for blk in p.blocks]
    if t0 is None:
        t0 = time.perf_counter()
    m = p.m
    z = np.zeros(p.n)
    s._z_partial = z  # blocks j < i already written when block i runs
    results = []
    for i in range(m):
        bst = s.bstates[i]
        bst.x = s.x[p.block_slice(i)].copy()
        res = _dispatch_block(p, i, s, params, workspaces,
                              params.scheme_for(i, m))
        z[p.block_slice(i)] = res.z
        results.append(res)
    del s._z_partial
    r_list = [res.r for res in results]
    primal_vec = p.apply_A(z) - p.b
    e = error_measure(params.thetas, z, s.y, r_list, p, primal_vec)
    E = None
    if params.reference is not None:
        snap = _Snapshot(s.x, s.y, s.lam,
                         [res.delta_final for res in results],
                         [res.Gamma for res in results])
        E = energy_E(p, snap, params.rho, params.alpha, params.reference,
                     bs, params.energy_mode(m))
    rec = TraceRecord(s.k, time.perf_counter() - t0, objective(p, z), e,
                      np.linalg.norm(primal_vec), E,
                      [res.inner_iters for res in results],
                      [res.delta_final for res in results],
                      [res.Gamma for res in results])
    # correction step, then roll the per-block bookkeeping forward
    off1 = int(p.offsets[1])
    x_new = np.concatenate([res.x_next for res in results])
    y_new = np.empty_like(s.y)
    y_new[:off1] = z[:off1]
    y_new[off1:] = back_substitute(bs, s.y[off1:], z[off1:], params.alpha)
    for i, res in enumerate(results):
        bst = s.bstates[i]
        bst.x_prev = s.x[p.block_slice(i)].copy()
        bst.delta_prev = res.delta_final
        bst.Gamma_prev = res.Gamma
        bst.l_prev = res.inner_iters
    s.lam = s.lam + params.alpha * params.rho * primal_vec
    s.x = x_new
    s.y = y_new
    s.z = z
    s.e_prev = e
    s.k += 1
    return s, rec


def solve(p, params, x0=None, lam0=None, callbacks=None,
          raise_on_maxiter=True):
    """Run the outer loop until e^k <= stop_tol or the budget runs out.

    Returns a SolveResult whose ``solution`` is the final z iterate (or x
    when configured). Callbacks receive (state, record) after every
    iteration; a truthy return stops the run with reason 'callback'.
    Raises MaxItersReached (result attached) when the budget is exhausted
    and raise_on_maxiter is set.
    """
    bs = assemble_back_sub([blk.A for blk in p.blocks[1:]])
    workspaces = [BlockWorkspace(blk.A) for blk in p.blocks]
    s = OuterState(p, params, x0, lam0)
    callbacks = list(callbacks or [])
    trace = []
    stop_tol = params.stop_tol
    reason = 'max_iters'
    converged = False
    t0 = time.perf_counter()
    for _ in range(params.max_outer_iters):
        s, rec = outer_step(p, s, params, bs, workspaces, t0)
        trace.append(rec)
        if stop_tol is None:
            stop_tol = 1e-8 * (1.0 + abs(rec.objective))
        stopped = False
        for cb in callbacks:
            if cb(s, rec):
                stopped = True
        if rec.e_k <= stop_tol:
            converged = True
            reason = 'converged'
            break
        if stopped:
            reason = 'callback'
            break
    solution = s.z if params.solution_iterate == 'z' else s.x
    result = SolveResult(p, solution, s.x, s.y, s.z, s.lam, trace, converged,
                         reason, stop_tol)
    if not converged and reason == 'max_iters' and raise_on_maxiter:
        raise MaxItersReached(result)
    return result


def write_trace_csv(records, path, m):
    """Write the per-iteration trace; one delta column per block."""
    fields = CSV_BASE_FIELDS + [f"delta_{i + 1}" for i in range(m)]
    with open(path, 'w', newline='') as fh:
        w = csv.writer(fh)
        w.writerow(fields)
        for r in records:
            row = [r.k, repr(r.time_s), repr(r.objective), repr(r.e_k),
                   repr(r.primal_res),
                   '' if r.E_k is None else repr(r.E_k),
                   r.inner_iters_total]
            row += [repr(d) for d in r.deltas]
            w.writerow(row)


def write_summary(result, path, extra=None):
    """JSON run summary: objective, iterations, termination, residuals."""
    last = result.trace[-1] if result.trace else None
    doc = {
        'final_objective': None if last is None else last.objective,
        'iterations': result.iterations,
        'termination': result.reason,
        'converged': result.converged,
        'stop_tol': result.stop_tol,
        'final_e': None if last is None else last.e_k,
        'final_primal_res': None if last is None else last.primal_res,
    }
    doc.update(extra or {})
    with open(path, 'w') as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write('\n')
    return doc

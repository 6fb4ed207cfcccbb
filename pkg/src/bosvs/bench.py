"""Benchmark instances and runners.

Two desk-scale instance families: image deblurring with a total
variation plus wavelet-sparsity objective (three blocks), and lasso
consensus (two blocks). ``ista_oracle`` gives an independent reference
solution for the lasso family. ``run_benchmark`` executes one scheme on
a problem file, computes the reference objective by the accelerated
refinement protocol, and writes trace, summary, and plot-data files.
"""

import copy
import math
import os

import numpy as np

from .errors import BadDims, MaxItersReached
from .linops import (BlurOperator, DenseOp, DiffOperator, HaarTransform,
                     IdentityOp, NegIdentityOp, VStackOp, ZeroOp)
from .outer import (OuterParams, solve, write_summary, write_trace_csv)
from .problem import Block, Problem, objective
from .problem_io import load_problem
from .prox import (GroupL2, QuadraticLS, ScaledL1, ZeroProx, ZeroSmooth,
                   soft_threshold)

__all__ = ['DeblurConfig', 'LassoConfig', 'phantom', 'make_deblur',
           'make_lasso', 'ista_oracle', 'refsolve', 'run_benchmark',
           'REFERENCE_CAP']

REFERENCE_CAP = 50000
REFERENCE_WINDOW = 4


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


class DeblurConfig:
    """Deblurring instance settings.

    size x size image (power of two, >= 8), uniform blur_size x
    blur_size kernel (odd), Gaussian noise at snr_db (math.inf for
    noiseless), total-variation weight alpha_tv, wavelet-sparsity weight
    beta_wav, Haar levels (default 2 for sizes up to 64, else 4).
    """

    def __init__(self, size=32, blur_size=3, snr_db=40.0, alpha_tv=0.005,
                 beta_wav=0.001, seed=0, haar_levels=None):
        size = int(size)
        if not _is_pow2(size) or size < 8:
            raise BadDims(f"size must be a power of two >= 8, got {size}")
        if blur_size % 2 == 0 or blur_size < 1:
            raise BadDims("blur_size must be odd and positive")
        self.size = size
        self.blur_size = int(blur_size)
        self.snr_db = float(snr_db)
        self.alpha_tv = float(alpha_tv)
        self.beta_wav = float(beta_wav)
        self.seed = int(seed)
        self.haar_levels = int(haar_levels) if haar_levels is not None \
            else (2 if size <= 64 else 4)

    def as_dict(self):
        return dict(size=self.size, blur_size=self.blur_size,
                    snr_db=self.snr_db, alpha_tv=self.alpha_tv,
                    beta_wav=self.beta_wav, seed=self.seed,
                    haar_levels=self.haar_levels)


class LassoConfig:
    """Lasso instance settings: d x n Gaussian design, sparse truth."""

    def __init__(self, n=100, d=150, nnz=10, noise_std=0.01, beta=0.1,
                 seed=0):
        if n < 1 or d < 1 or nnz < 0 or nnz > n:
            raise BadDims("need n, d >= 1 and 0 <= nnz <= n")
        self.n = int(n)
        self.d = int(d)
        self.nnz = int(nnz)
        self.noise_std = float(noise_std)
        self.beta = float(beta)
        self.seed = int(seed)

    def as_dict(self):
        return dict(n=self.n, d=self.d, nnz=self.nnz,
                    noise_std=self.noise_std, beta=self.beta, seed=self.seed)


def phantom(rows, cols, seed=0):
    """Piecewise-constant test image in [0, 1]: blocks plus a disk."""
    rng = np.random.default_rng(seed)
    img = np.full((rows, cols), 0.1)
    for _ in range(4):
        r0, r1 = np.sort(rng.integers(0, rows, size=2))
        c0, c1 = np.sort(rng.integers(0, cols, size=2))
        img[r0:r1 + 1, c0:c1 + 1] = rng.uniform(0.2, 0.9)
    cr, cc = rows / 2.0, cols / 2.0
    rad = min(rows, cols) / 4.0
    ri, ci = np.ogrid[:rows, :cols]
    img[(ri - cr) ** 2 + (ci - cc) ** 2 <= rad * rad] = 1.0
    return np.clip(img, 0.0, 1.0)


def make_deblur(cfg):
    """Three-block deblurring problem.

    Block 1 is the image u with the data-fit smooth part; blocks 2 and 3
    carry the difference field and wavelet coefficients with group-l2 and
    l1 parts. The constraint stacks [B u; Psi^T u] = [w; v], so the Gram
    of each auxiliary block is exactly the identity.
    """
    n = cfg.size * cfg.size
    B = DiffOperator(cfg.size, cfg.size)
    Psi = HaarTransform(cfg.size, cfg.size, cfg.haar_levels)
    A1 = VStackOp([B, Psi])
    A2 = VStackOp([NegIdentityOp(2 * n), ZeroOp(n, 2 * n)])
    A3 = VStackOp([ZeroOp(2 * n, n), NegIdentityOp(n)])
    F = BlurOperator.uniform(cfg.size, cfg.size, cfg.blur_size)
    truth = phantom(cfg.size, cfg.size, cfg.seed)
    clean = F.apply(truth.ravel())
    if math.isinf(cfg.snr_db):
        data = clean
    else:
        rng = np.random.default_rng(cfg.seed + 1)
        std = np.linalg.norm(clean) * 10.0 ** (-cfg.snr_db / 20.0) \
            / np.sqrt(clean.size)
        data = clean + std * rng.standard_normal(clean.size)
    blocks = [
        Block(A1, QuadraticLS(F, data), ZeroProx()),
        Block(A2, ZeroSmooth(), GroupL2(cfg.alpha_tv, 2)),
        Block(A3, ZeroSmooth(), ScaledL1(cfg.beta_wav)),
    ]
    meta = {'family': 'deblur', 'config': cfg.as_dict(),
            'truth': truth.ravel(), 'data': data}
    return Problem(blocks, np.zeros(3 * n), meta=meta)


def make_lasso(cfg):
    """Two-block lasso consensus: u - z = 0, data fit on u, l1 on z."""
    rng = np.random.default_rng(cfg.seed)
    F = rng.standard_normal((cfg.d, cfg.n)) / np.sqrt(cfg.d)
    u_true = np.zeros(cfg.n)
    support = rng.choice(cfg.n, size=cfg.nnz, replace=False)
    u_true[support] = rng.choice([-1.0, 1.0], size=cfg.nnz) \
        * rng.uniform(0.5, 2.0, size=cfg.nnz)
    data = F @ u_true + cfg.noise_std * rng.standard_normal(cfg.d)
    blocks = [
        Block(IdentityOp(cfg.n), QuadraticLS(DenseOp(F), data), ZeroProx()),
        Block(NegIdentityOp(cfg.n), ZeroSmooth(), ScaledL1(cfg.beta)),
    ]
    meta = {'family': 'lasso', 'config': cfg.as_dict(), 'truth': u_true,
            'data': data, 'design': F}
    return Problem(blocks, np.zeros(cfg.n), meta=meta)


def ista_oracle(F, data, beta, tol=1e-10, maxit=200000):
    """Proximal-gradient reference for min 0.5||Fu - f||^2 + beta||u||_1.

    Fixed stepsize 1/L with L the largest eigenvalue of F^T F. Stops when
    the unit-scale fixed-point residual ||u - prox(u - grad, beta)||
    drops below tol; raises MaxItersReached otherwise.
    """
    if not hasattr(F, 'apply'):
        F = DenseOp(np.asarray(F, dtype=float))
    f = QuadraticLS(F, data)
    L = f.lipschitz
    if L <= 0.0:
        return np.zeros(F.cols)
    t = 1.0 / L
    u = np.zeros(F.cols)
    for _ in range(maxit):
        g = f.gradient(u)
        if np.linalg.norm(u - soft_threshold(u - g, beta)) <= tol:
            return u
        u = soft_threshold(u - t * g, t * beta)
    raise MaxItersReached(message=f"ista_oracle: no convergence in {maxit}")


def _stable_digits_callback(window=REFERENCE_WINDOW):
    seen = []

    def cb(_state, rec):
        seen.append(f"{rec.objective:.7e}")
        return len(seen) >= window and len(set(seen[-window:])) == 1

    return cb


def refsolve(p, rho, alpha=0.999, cap=REFERENCE_CAP, relaxed=True):
    """Reference objective by the accelerated refinement protocol.

    Runs the accelerated scheme until the objective's first eight
    significant digits stay unchanged over four consecutive iterations
    (cap 50000). Returns (phi_star, SolveResult).
    """
    from .inner import RelaxationParams
    params = OuterParams(rho=rho, alpha=alpha, scheme='accelerated',
                         stop_tol=0.0, max_outer_iters=cap,
                         relax=RelaxationParams(enabled=relaxed))
    result = solve(p, params, callbacks=[_stable_digits_callback()],
                   raise_on_maxiter=False)
    return result.final_objective, result


def run_benchmark(problem_file, scheme, params, out_dir, prefix=None,
                  phi_star=None):
    """Run one scheme on a problem file and write its artifacts.

    Writes <prefix>_trace.csv, <prefix>_summary.json, and
    <prefix>_plotdata.csv (wall time against log10 relative objective
    error versus the reference). The reference objective comes from
    ``refsolve`` unless supplied. Returns 0 when the run converged and
    2 when it exhausted its iteration budget.
    """
    p = load_problem(problem_file) if isinstance(problem_file, (str, os.PathLike)) \
        else problem_file
    os.makedirs(out_dir, exist_ok=True)
    prefix = prefix or scheme
    if phi_star is None:
        phi_star, _ = refsolve(p, params.rho, params.alpha)
    run_params = copy.copy(params)
    run_params.scheme = scheme
    code = 0
    try:
        result = solve(p, run_params)
    except MaxItersReached as exc:
        result = exc.result
        code = 2
    write_trace_csv(result.trace, os.path.join(out_dir, f"{prefix}_trace.csv"),
                    p.m)
    scale = max(abs(phi_star), 1e-300)
    with open(os.path.join(out_dir, f"{prefix}_plotdata.csv"), 'w') as fh:
        fh.write("time_s,log10_rel_err\n")
        for rec in result.trace:
            rel = abs(rec.objective - phi_star) / scale
            val = math.log10(rel) if rel > 0 else -math.inf
            fh.write(f"{rec.time_s!r},{val!r}\n")
    write_summary(result, os.path.join(out_dir, f"{prefix}_summary.json"),
                  extra={'scheme': scheme, 'phi_star': phi_star,
                         'problem': str(problem_file)})
    return code

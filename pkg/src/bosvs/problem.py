"""Problem container: separable objective plus linear coupling.

A ``Problem`` is m blocks, each with a coupling operator A_i, a smooth
convex part f_i (gradient available) and a nonsmooth convex part h_i
(prox available, value may be +inf), tied by sum_i A_i x_i = b. Block
vectors are stored as one contiguous array with an offset table.

The module-level functions evaluate the objective, the augmented
Lagrangian, the per-block linearized subproblem objective Phi_i, the
exact subproblem objective L_i, the partial right-hand sides b_i, and a
KKT residual report.
"""

import numpy as np

from .errors import DimensionMismatch

__all__ = ['SmoothPart', 'NonsmoothPart', 'Block', 'Problem', 'KKTReport',
           'objective', 'augmented_lagrangian', 'b_i_k', 'phi_i_k', 'L_i_k',
           'kkt_residual']


class SmoothPart:
    """Interface for f_i: convex, differentiable, Lipschitz gradient.

    ``lipschitz`` may be None; every algorithm runs without it (the line
    searches adapt). ``hess_apply`` is optional and, when present, must
    be the state-independent Hessian action of a quadratic.
    """

    lipschitz = None
    hess_apply = None
    is_zero = False

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError


class NonsmoothPart:
    """Interface for h_i: proper closed convex, prox available.

    ``value`` may return +inf outside the domain. ``prox(v, t)`` solves
    argmin_u h(u) + ||u - v||^2 / (2 t). Zero parts set ``is_zero``.
    """

    is_zero = False

    def value(self, x):
        raise NotImplementedError

    def prox(self, v, t):
        raise NotImplementedError


class Block:
    """One block: coupling operator A, smooth part f, nonsmooth part h."""

    def __init__(self, A, f, h):
        self.A = A
        self.f = f
        self.h = h

    @property
    def dim(self):
        return self.A.cols


class Problem:
    """Blocks plus the right-hand side b of the coupling constraint."""

    def __init__(self, blocks, b, meta=None):
        blocks = list(blocks)
        if not blocks:
            raise DimensionMismatch("need at least one block")
        b = np.asarray(b, dtype=float).ravel()
        rows = blocks[0].A.rows
        for i, blk in enumerate(blocks):
            if blk.A.rows != rows:
                raise DimensionMismatch(
                    f"block {i + 1} has {blk.A.rows} rows, expected {rows}")
        if b.size != rows:
            raise DimensionMismatch(
                f"b has length {b.size}, expected {rows}")
        self.blocks = blocks
        self.b = b
        self.meta = dict(meta or {})
        self.dims = [blk.dim for blk in blocks]
        self.offsets = np.concatenate([[0], np.cumsum(self.dims)]).astype(int)
        self.n = int(self.offsets[-1])
        self.rows = rows

    @property
    def m(self):
        return len(self.blocks)

    def check_vector(self, x):
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n:
            raise DimensionMismatch(
                f"block vector has length {x.size}, expected {self.n}")
        return x

    def split(self, x):
        x = self.check_vector(x)
        return [x[self.offsets[i]:self.offsets[i + 1]] for i in range(self.m)]

    def block_slice(self, i):
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def apply_A(self, x):
        """sum_i A_i x_i for a stacked block vector."""
        parts = self.split(x)
        out = np.zeros(self.rows)
        for blk, xi in zip(self.blocks, parts):
            out += blk.A.apply(xi)
        return out


def objective(p, x):
    """Phi(x) = sum_i f_i(x_i) + h_i(x_i); +inf propagates."""
    total = 0.0
    for blk, xi in zip(p.blocks, p.split(x)):
        total += blk.f.value(xi)
        hv = blk.h.value(xi)
        if hv == np.inf:
            return np.inf
        total += hv
    return float(total)


def augmented_lagrangian(p, x, lam, rho):
    """Phi(x) + <lam, Ax - b> + (rho/2) ||Ax - b||^2."""
    lam = np.asarray(lam, dtype=float).ravel()
    if lam.size != p.rows:
        raise DimensionMismatch("multiplier length mismatch")
    r = p.apply_A(x) - p.b
    phi = objective(p, x)
    if phi == np.inf:
        return np.inf
    return phi + float(lam @ r) + 0.5 * rho * float(r @ r)


def b_i_k(p, i, z, y):
    """Partial right-hand side for block i.

    b minus the already-updated blocks of z (j < i) minus the not yet
    updated blocks of y (j > i). z and y are full stacked vectors; only
    the relevant slices are read.
    """
    z = p.check_vector(z)
    y = p.check_vector(y)
    out = p.b.copy()
    for j in range(i):
        sl = p.block_slice(j)
        out -= p.blocks[j].A.apply(z[sl])
    for j in range(i + 1, p.m):
        sl = p.block_slice(j)
        out -= p.blocks[j].A.apply(y[sl])
    return out


def phi_i_k(p, i, u, v, delta, b_ik, lam, rho):
    """Linearized proximal subproblem objective for block i.

    f_i(v) + <grad f_i(v), u - v> + (delta/2)||u - v||^2 + h_i(u)
    + (rho/2)||A_i u - b_ik + lam/rho||^2.
    """
    blk = p.blocks[i]
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.size != blk.dim or v.size != blk.dim:
        raise DimensionMismatch(f"block {i + 1} expects dim {blk.dim}")
    d = u - v
    hv = blk.h.value(u)
    if hv == np.inf:
        return np.inf
    pen = blk.A.apply(u) - b_ik + lam / rho
    return (blk.f.value(v) + float(blk.f.gradient(v) @ d)
            + 0.5 * delta * float(d @ d) + hv
            + 0.5 * rho * float(pen @ pen))


def L_i_k(p, i, u, b_ik, lam, rho):
    """Exact subproblem objective for block i.

    f_i(u) + h_i(u) + (rho/2)||A_i u - b_ik + lam/rho||^2.
    """
    blk = p.blocks[i]
    u = np.asarray(u, dtype=float).ravel()
    if u.size != blk.dim:
        raise DimensionMismatch(f"block {i + 1} expects dim {blk.dim}")
    hv = blk.h.value(u)
    if hv == np.inf:
        return np.inf
    pen = blk.A.apply(u) - b_ik + lam / rho
    return blk.f.value(u) + hv + 0.5 * rho * float(pen @ pen)


class KKTReport:
    """Primal residual plus per-block prox-stationarity residuals."""

    def __init__(self, primal, blocks):
        self.primal = float(primal)
        self.blocks = [float(v) for v in blocks]
        self.aggregate = self.primal + sum(self.blocks)

    def __repr__(self):
        return (f"KKTReport(primal={self.primal:.3e}, "
                f"aggregate={self.aggregate:.3e})")


def kkt_residual(p, x, lam):
    """Stationarity and feasibility residuals at (x, lam).

    Block i residual is ||x_i - prox_{h_i}(x_i - grad f_i(x_i)
    - A_i^T lam)|| at unit prox scale; primal is ||Ax - b||.
    """
    x = p.check_vector(x)
    lam = np.asarray(lam, dtype=float).ravel()
    if lam.size != p.rows:
        raise DimensionMismatch("multiplier length mismatch")
    primal = np.linalg.norm(p.apply_A(x) - p.b)
    blocks = []
    for i, blk in enumerate(p.blocks):
        xi = x[p.block_slice(i)]
        step = xi - blk.f.gradient(xi) - blk.A.apply_adjoint(lam)
        blocks.append(np.linalg.norm(xi - blk.h.prox(step, 1.0)))
    return KKTReport(primal, blocks)

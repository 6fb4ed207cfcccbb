"""Linear operators and the block back-substitution machinery.

Every coupling block A_i is a ``LinOp``: a matrix-free pair
(apply, apply_adjoint) with explicit ``rows``/``cols``. Dense matrices,
signed identities, vertical stacks, an orthonormal 2-D Haar transform,
forward differences with replicate boundary, and explicit small-kernel
blur cover the structures used by the benchmark problems.

``assemble_back_sub`` builds the lower block-triangular Gram matrix M
(entries A_{i+1}^T A_{j+1} for blocks 2..m), its block diagonal H, and
Cholesky factors of the diagonal blocks; ``back_substitute`` applies the
correction y + alpha * M^{-T} H (z - y) by blockwise back substitution.
Everything is dense at desk scale; operators are immutable after
construction.
"""

import numpy as np
from scipy import sparse
from scipy.fft import dctn, idctn
from scipy.linalg import cho_factor, cho_solve, eigvalsh

from .errors import BadDims, DimensionMismatch, RankDeficient

__all__ = ['LinOp', 'DenseOp', 'ScaledIdentityOp', 'IdentityOp', 'NegIdentityOp',
           'ZeroOp', 'VStackOp', 'HaarTransform', 'DiffOperator', 'BlurOperator',
           'GramBasis', 'gram', 'assemble_back_sub', 'back_substitute',
           'smallest_gram_eigenvalue', 'BackSubMatrices']


class GramBasis:
    """Orthonormal fast transform diagonalizing a Gram matrix.

    A^T A = Q^T diag(eig) Q with Q v = forward(v) computed by a fast
    transform (and inverse the transpose), so a shifted system
    (delta I + rho A^T A) u = rhs solves as one forward/inverse pair.
    Operators that admit such a basis expose it through ``gram_basis``.
    """

    def __init__(self, eig, forward, inverse):
        self.eig = np.asarray(eig, dtype=float)
        self.forward = forward
        self.inverse = inverse


class LinOp:
    """Base linear operator with shape (rows, cols).

    Subclasses implement ``apply`` (forward) and ``apply_adjoint``. The
    default ``to_dense`` materializes by applying to identity columns,
    which is fine at desk scale.
    """

    rows = None
    cols = None

    def apply(self, v):
        raise NotImplementedError

    def apply_adjoint(self, w):
        raise NotImplementedError

    def to_dense(self):
        out = np.empty((self.rows, self.cols), order='F')
        e = np.zeros(self.cols)
        for j in range(self.cols):
            e[j] = 1.0
            out[:, j] = self.apply(e)
            e[j] = 0.0
        return out

    def _check_apply(self, v):
        v = np.asarray(v, dtype=float).ravel()
        if v.size != self.cols:
            raise DimensionMismatch(
                f"apply expects length {self.cols}, got {v.size}")
        return v

    def _check_adjoint(self, w):
        w = np.asarray(w, dtype=float).ravel()
        if w.size != self.rows:
            raise DimensionMismatch(
                f"apply_adjoint expects length {self.rows}, got {w.size}")
        return w

    @property
    def shape(self):
        return (self.rows, self.cols)


class DenseOp(LinOp):
    """Wrap an explicit matrix. Storage is column-major contiguous."""

    def __init__(self, a):
        a = np.asfortranarray(a, dtype=float)
        if a.ndim != 2:
            raise DimensionMismatch("dense operator needs a 2-D array")
        self._a = a
        self.rows, self.cols = a.shape

    def apply(self, v):
        return self._a @ self._check_apply(v)

    def apply_adjoint(self, w):
        return self._a.T @ self._check_adjoint(w)

    def to_dense(self):
        return np.array(self._a)


class ScaledIdentityOp(LinOp):
    """s * I on n coordinates."""

    def __init__(self, n, scale=1.0):
        if n <= 0:
            raise DimensionMismatch("identity needs n >= 1")
        self.rows = self.cols = int(n)
        self.scale = float(scale)

    def apply(self, v):
        return self.scale * self._check_apply(v)

    def apply_adjoint(self, w):
        return self.scale * self._check_adjoint(w)

    def to_dense(self):
        return self.scale * np.eye(self.rows)


def IdentityOp(n):
    return ScaledIdentityOp(n, 1.0)


def NegIdentityOp(n):
    return ScaledIdentityOp(n, -1.0)


class ZeroOp(LinOp):
    """Zero map, used to pad signed identities into taller stacks."""

    def __init__(self, rows, cols):
        self.rows = int(rows)
        self.cols = int(cols)

    def apply(self, v):
        self._check_apply(v)
        return np.zeros(self.rows)

    def apply_adjoint(self, w):
        self._check_adjoint(w)
        return np.zeros(self.cols)

    def to_dense(self):
        return np.zeros((self.rows, self.cols))


class VStackOp(LinOp):
    """Vertical stack [P_1; P_2; ...]; all parts share the column count."""

    def __init__(self, parts):
        parts = tuple(parts)
        if not parts:
            raise DimensionMismatch("vstack needs at least one part")
        cols = parts[0].cols
        for p in parts:
            if p.cols != cols:
                raise DimensionMismatch("vstack parts must share cols")
        self.parts = parts
        self.cols = cols
        self.rows = sum(p.rows for p in parts)

    def apply(self, v):
        v = self._check_apply(v)
        return np.concatenate([p.apply(v) for p in self.parts])

    def apply_adjoint(self, w):
        w = self._check_adjoint(w)
        out = np.zeros(self.cols)
        at = 0
        for p in self.parts:
            out += p.apply_adjoint(w[at:at + p.rows])
            at += p.rows
        return out

    def to_dense(self):
        return np.vstack([p.to_dense() for p in self.parts])

    def row_splits(self):
        return tuple(p.rows for p in self.parts)

    def gram_basis(self):
        """Fast basis for the stacked Gram when at most one part needs one.

        The stack Gram is the sum of part Grams. Parts whose Gram is a
        multiple of the identity shift the spectrum; a single remaining
        part may supply its own basis. Returns None otherwise.
        """
        spectral = None
        shift = 0.0
        for p in self.parts:
            gb = getattr(p, 'gram_basis', None)
            b = gb() if gb is not None else None
            if b is not None:
                if spectral is not None:
                    return None
                spectral = b
                continue
            c = identity_multiple(gram(p, p))
            if c is None:
                return None
            shift += c
        if spectral is None:
            return None
        return GramBasis(spectral.eig + shift, spectral.forward,
                         spectral.inverse)


class HaarTransform(LinOp):
    """Orthonormal multilevel 2-D Haar analysis on flattened images.

    ``apply`` decomposes (the transpose of the synthesis basis), and
    ``apply_adjoint`` reconstructs; the transform is square and
    orthonormal, so adjoint(apply(v)) == v to machine precision. Image
    dims must be divisible by 2**levels.
    """

    def __init__(self, imrows, imcols, levels=2):
        imrows, imcols, levels = int(imrows), int(imcols), int(levels)
        if levels < 1:
            raise BadDims("levels must be >= 1")
        step = 2 ** levels
        if imrows % step or imcols % step or imrows < step or imcols < step:
            raise BadDims(
                f"image dims ({imrows}, {imcols}) not divisible by 2^{levels}")
        self.imrows, self.imcols, self.levels = imrows, imcols, levels
        self.rows = self.cols = imrows * imcols

    @staticmethod
    def _fwd_axis(x, axis):
        # pairwise (sum, diff)/sqrt(2) along one axis, averages first
        a = np.take(x, np.arange(0, x.shape[axis], 2), axis=axis)
        b = np.take(x, np.arange(1, x.shape[axis], 2), axis=axis)
        s = 1.0 / np.sqrt(2.0)
        return np.concatenate([(a + b) * s, (a - b) * s], axis=axis)

    @staticmethod
    def _inv_axis(x, axis):
        h = x.shape[axis] // 2
        a = np.take(x, np.arange(h), axis=axis)
        d = np.take(x, np.arange(h, 2 * h), axis=axis)
        s = 1.0 / np.sqrt(2.0)
        out = np.empty_like(x)
        sl_even = [slice(None)] * x.ndim
        sl_odd = [slice(None)] * x.ndim
        sl_even[axis] = slice(0, None, 2)
        sl_odd[axis] = slice(1, None, 2)
        out[tuple(sl_even)] = (a + d) * s
        out[tuple(sl_odd)] = (a - d) * s
        return out

    def apply(self, v):
        x = self._check_apply(v).reshape(self.imrows, self.imcols).copy()
        r, c = self.imrows, self.imcols
        for _ in range(self.levels):
            ll = self._fwd_axis(self._fwd_axis(x[:r, :c], 0), 1)
            x[:r, :c] = ll
            r //= 2
            c //= 2
        return x.ravel()

    def apply_adjoint(self, w):
        x = self._check_adjoint(w).reshape(self.imrows, self.imcols).copy()
        # undo levels from the coarsest scale outward
        scales = [(self.imrows >> s, self.imcols >> s)
                  for s in range(self.levels - 1, -1, -1)]
        for r, c in scales:
            x[:r, :c] = self._inv_axis(self._inv_axis(x[:r, :c], 1), 0)
        return x.ravel()


class DiffOperator(LinOp):
    """Forward differences on a 2-D grid with replicate boundary.

    Output stacks the horizontal then vertical differences, so the two
    components of pixel p sit at positions p and p + N. Constant images
    map to zero.
    """

    def __init__(self, imrows, imcols):
        imrows, imcols = int(imrows), int(imcols)
        if imrows < 1 or imcols < 1:
            raise BadDims("grid dims must be >= 1")
        self.imrows, self.imcols = imrows, imcols
        self.cols = imrows * imcols
        self.rows = 2 * self.cols

    def apply(self, v):
        u = self._check_apply(v).reshape(self.imrows, self.imcols)
        gx = np.zeros_like(u)
        gy = np.zeros_like(u)
        gx[:, :-1] = u[:, 1:] - u[:, :-1]
        gy[:-1, :] = u[1:, :] - u[:-1, :]
        return np.concatenate([gx.ravel(), gy.ravel()])

    def apply_adjoint(self, w):
        w = self._check_adjoint(w)
        n = self.cols
        gx = w[:n].reshape(self.imrows, self.imcols)
        gy = w[n:].reshape(self.imrows, self.imcols)
        out = np.zeros((self.imrows, self.imcols))
        out[:, :-1] -= gx[:, :-1]
        out[:, 1:] += gx[:, :-1]
        out[:-1, :] -= gy[:-1, :]
        out[1:, :] += gy[:-1, :]
        return out.ravel()

    def gram_basis(self):
        """D^T D is the free-boundary grid Laplacian, diagonal in DCT-II.

        Eigenvalues are 4 sin^2(pi i / 2r) + 4 sin^2(pi j / 2c) on the
        (i, j) frequency grid, with the orthonormal 2-D DCT-II as basis.
        """
        r, c = self.imrows, self.imcols
        lr = 4.0 * np.sin(np.pi * np.arange(r) / (2.0 * r)) ** 2
        lc = 4.0 * np.sin(np.pi * np.arange(c) / (2.0 * c)) ** 2
        eig = (lr[:, None] + lc[None, :]).ravel()

        def fwd(v):
            return dctn(np.asarray(v, dtype=float).reshape(r, c),
                        type=2, norm='ortho').ravel()

        def inv(w):
            return idctn(np.asarray(w, dtype=float).reshape(r, c),
                         type=2, norm='ortho').ravel()

        return GramBasis(eig, fwd, inv)


class BlurOperator(LinOp):
    """Explicit 2-D correlation with replicate boundary handling.

    Boundary pixels reuse their nearest in-image neighbor (clipped
    indices). The taps are assembled once into a sparse matrix, so apply
    and adjoint are single sparse products and the adjoint is exact by
    construction. No FFT; meant for desk-scale kernels and images.
    """

    def __init__(self, imrows, imcols, kernel):
        imrows, imcols = int(imrows), int(imcols)
        kernel = np.asarray(kernel, dtype=float)
        if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
            raise BadDims("kernel must be 2-D with odd side lengths")
        self.imrows, self.imcols = imrows, imcols
        self.kernel = kernel.copy()
        self.rows = self.cols = n = imrows * imcols
        kh, kw = kernel.shape
        hr, hc = kh // 2, kw // 2
        ri = np.arange(imrows)
        ci = np.arange(imcols)
        rows_idx, cols_idx, vals = [], [], []
        for di in range(-hr, hr + 1):
            for dj in range(-hc, hc + 1):
                w = kernel[di + hr, dj + hc]
                if w == 0.0:
                    continue
                ir = np.clip(ri + di, 0, imrows - 1)
                ic = np.clip(ci + dj, 0, imcols - 1)
                src = (ir[:, None] * imcols + ic[None, :]).ravel()
                rows_idx.append(np.arange(n))
                cols_idx.append(src)
                vals.append(np.full(n, w))
        mat = sparse.coo_matrix(
            (np.concatenate(vals),
             (np.concatenate(rows_idx), np.concatenate(cols_idx))),
            shape=(n, n))
        self._mat = mat.tocsr()
        self._mat_t = self._mat.T.tocsr()

    @staticmethod
    def uniform(imrows, imcols, size):
        """Uniform size x size averaging kernel (size odd)."""
        size = int(size)
        k = np.full((size, size), 1.0 / (size * size))
        return BlurOperator(imrows, imcols, k)

    def apply(self, v):
        return self._mat @ self._check_apply(v)

    def apply_adjoint(self, w):
        return self._mat_t @ self._check_adjoint(w)

    def to_dense(self):
        return self._mat.toarray()


def gram(a, b):
    """Dense A^T B for two operators with equal row counts.

    Structured pairs (signed identities, zero blocks, a Haar transform
    with itself, aligned vertical stacks) produce exact arrays without
    materializing the operands; anything else falls back to dense
    multiplication.
    """
    if a.rows != b.rows:
        raise DimensionMismatch("gram needs equal row counts")
    if isinstance(a, ZeroOp) or isinstance(b, ZeroOp):
        return np.zeros((a.cols, b.cols))
    if isinstance(a, ScaledIdentityOp) and isinstance(b, ScaledIdentityOp):
        return (a.scale * b.scale) * np.eye(a.cols)
    if isinstance(a, HaarTransform) and a is b:
        return np.eye(a.cols)
    if (isinstance(a, VStackOp) and isinstance(b, VStackOp)
            and a.row_splits() == b.row_splits()):
        out = np.zeros((a.cols, b.cols))
        for pa, pb in zip(a.parts, b.parts):
            out += gram(pa, pb)
        return out
    return a.to_dense().T @ b.to_dense()


def identity_multiple(g, tol=1e-12):
    """Return c when the dense Gram g equals c*I within tol, else None."""
    n = g.shape[0]
    if g.shape[0] != g.shape[1]:
        return None
    d = np.diagonal(g)
    c = d[0]
    scale = max(abs(c), 1.0)
    if np.max(np.abs(d - c)) > tol * scale:
        return None
    off = g - np.diag(d)
    if np.max(np.abs(off)) > tol * scale:
        return None
    return float(c)


class BackSubMatrices:
    """Assembled Gram structure for the coupling blocks beyond the first.

    Holds the dense lower-triangular blocks of M, Cholesky factors of the
    diagonal blocks H_i, the per-block smallest Gram eigenvalues nu_i, and
    the block offsets into the stacked (z - y) vector. Blocks whose Gram
    is a multiple of the identity (the usual signed-identity couplings)
    take scalar shortcuts instead of dense products and factorized solves.
    """

    def __init__(self, mblocks, chol, nu, dims):
        self.mblocks = mblocks          # mblocks[i][j] = A_{i+2}^T A_{j+2}, j <= i
        self.chol = chol                # cho_factor of each diagonal block
        self.nu = nu
        self.dims = dims
        self.offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
        self.total = int(self.offsets[-1])
        self._ci = [[self._classify(mblocks[i][j]) for j in range(i + 1)]
                    for i in range(len(dims))]

    @staticmethod
    def _classify(g):
        """Scalar c when g == c*I, 0.0 for all-zero blocks, else None."""
        if not np.any(g):
            return 0.0
        if g.shape[0] != g.shape[1]:
            return None
        return identity_multiple(g)

    @property
    def nblocks(self):
        return len(self.dims)

    def _split(self, v):
        return [v[self.offsets[i]:self.offsets[i + 1]]
                for i in range(self.nblocks)]

    def _diag_apply(self, i, v):
        c = self._ci[i][i]
        return c * v if c is not None else self.mblocks[i][i] @ v

    def _diag_solve(self, i, v):
        c = self._ci[i][i]
        if c is not None:
            return v / c
        return cho_solve(self.chol[i], v, check_finite=False)

    def _off_apply_T(self, j, i, v):
        """M_{ji}^T v, or None when the block is exactly zero."""
        c = self._ci[j][i]
        if c is not None:
            return None if c == 0.0 else c * v
        return self.mblocks[j][i].T @ v

    def apply_H(self, v):
        parts = self._split(np.asarray(v, dtype=float).ravel())
        return np.concatenate([self._diag_apply(i, parts[i])
                               for i in range(self.nblocks)]) if self.nblocks \
            else np.zeros(0)

    def solve_H(self, v):
        parts = self._split(np.asarray(v, dtype=float).ravel())
        return np.concatenate([self._diag_solve(i, parts[i])
                               for i in range(self.nblocks)]) if self.nblocks \
            else np.zeros(0)

    def apply_M_T(self, v):
        # (M^T v)_i = sum_{j >= i} M_{ji}^T v_j
        parts = self._split(np.asarray(v, dtype=float).ravel())
        out = []
        for i in range(self.nblocks):
            acc = self._diag_apply(i, parts[i])
            for j in range(i + 1, self.nblocks):
                term = self._off_apply_T(j, i, parts[j])
                if term is not None:
                    acc = acc + term
            out.append(acc)
        return np.concatenate(out) if out else np.zeros(0)

    def p_quadratic(self, v):
        """v^T (M H^{-1} M^T) v, used by the energy diagnostic."""
        w = self.apply_M_T(v)
        return float(w @ self.solve_H(w))


def assemble_back_sub(blocks, rank_tol=1e-10):
    """Build BackSubMatrices from the operators A_2..A_m.

    Each block must have full column rank; the check compares the
    smallest Gram eigenvalue against rank_tol times the largest.
    Raises RankDeficient with the 1-based position among these blocks.
    """
    blocks = list(blocks)
    dims = [b.cols for b in blocks]
    mblocks = []
    chol = []
    nu = []
    for i, bi in enumerate(blocks):
        row = [gram(bi, bj) for bj in blocks[:i + 1]]
        mblocks.append(row)
        ci = identity_multiple(row[i])
        if ci is not None:
            if ci <= 0.0:
                raise RankDeficient(i + 2)
            nu.append(ci)
            chol.append(None)
            continue
        evals = eigvalsh(row[i])
        lo, hi = float(evals[0]), float(evals[-1])
        if hi <= 0.0 or lo <= rank_tol * hi:
            raise RankDeficient(i + 2)
        nu.append(max(lo, 0.0))
        chol.append(cho_factor(row[i], lower=True, check_finite=False))
    return BackSubMatrices(mblocks, chol, nu, dims)


def back_substitute(bs, y_plus, z_plus, alpha):
    """Return y + alpha * M^{-T} H (z - y) by blockwise back substitution.

    M^T is block upper triangular with symmetric diagonal blocks H_i, so
    the correction u solves M^T u = H (z - y) from the last block upward.
    With M = H = I this is exactly y + alpha * (z - y).
    """
    y_plus = np.asarray(y_plus, dtype=float).ravel()
    z_plus = np.asarray(z_plus, dtype=float).ravel()
    if y_plus.size != bs.total or z_plus.size != bs.total:
        raise DimensionMismatch("back_substitute: block vector length "
                                f"{bs.total} expected")
    if bs.nblocks == 0:
        return y_plus.copy()
    w = bs._split(z_plus - y_plus)
    rhs = [bs._diag_apply(i, w[i]) for i in range(bs.nblocks)]
    u = [None] * bs.nblocks
    for i in range(bs.nblocks - 1, -1, -1):
        acc = rhs[i]
        for j in range(i + 1, bs.nblocks):
            term = bs._off_apply_T(j, i, u[j])
            if term is not None:
                acc = acc - term
        u[i] = bs._diag_solve(i, acc)
    return y_plus + alpha * np.concatenate(u)


def smallest_gram_eigenvalue(a):
    """Smallest eigenvalue of A^T A, clamped at zero."""
    evals = eigvalsh(gram(a, a))
    return max(float(evals[0]), 0.0)

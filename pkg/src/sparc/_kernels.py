"""Compiled inner loops for the Walsh-Hadamard design operators.

The sub-sampled Hadamard design picks, for section ``l``, rows ``rows[l, i]``
of ``H_k`` and the last ``M`` columns.  Because Sylvester matrices factor as
``H_k = H_{k-m} (x) H_m`` with ``M = 2^m``, row ``c*M + d`` restricted to the
final column block equals ``(-1)^popcount(c) * H_m[d, :]``.  Each section
therefore needs one size-``M`` transform plus an ``O(n)`` signed gather or
scatter instead of a full size-``2^k`` transform.

``gains[r, c]`` scales output rows of row-block ``r`` for sections in
column-block ``c``; a plain design uses a 1x1 gain matrix.  ``nzr[c, :nnz[c]]``
lists the row blocks with non-zero gain for column block ``c``.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def fwht_inplace(x):
    h = 1
    N = x.shape[0]
    while h < N:
        for i in range(0, N, 2 * h):
            for j in range(i, i + h):
                a = x[j]
                b = x[j + h]
                x[j] = a + b
                x[j + h] = a - b
        h *= 2


@njit(cache=True)
def fwht_rows_inplace(X):
    for r in range(X.shape[0]):
        fwht_inplace(X[r])


@njit(cache=True)
def parity_table(size):
    out = np.empty(size, dtype=np.float64)
    for c in range(size):
        v = c
        p = 0
        while v:
            p ^= v & 1
            v >>= 1
        out[c] = -1.0 if p else 1.0
    return out


@njit(cache=True)
def hadamard_forward(beta, rows, m, signs, gains, sec_block, nzr, nnz, rb_size, out):
    """out[:] = A @ beta for a (block-scaled) sub-sampled Hadamard design.

    beta: (L, M); rows: (L, n) Hadamard row indices; out: (n,) zeroed here.
    """
    L, M = beta.shape
    mask = M - 1
    out[:] = 0.0
    v = np.empty(M)
    for l in range(L):
        nonzero = False
        for b in range(M):
            v[b] = beta[l, b]
            if v[b] != 0.0:
                nonzero = True
        if not nonzero:
            continue
        fwht_inplace(v)
        c = sec_block[l]
        for q in range(nnz[c]):
            r = nzr[c, q]
            g = gains[r, c]
            lo = r * rb_size
            hi = lo + rb_size
            for i in range(lo, hi):
                row = rows[l, i]
                out[i] += g * signs[row >> m] * v[row & mask]


@njit(cache=True)
def hadamard_adjoint(z, rows, m, signs, gains, sec_block, nzr, nnz, rb_size, out):
    """out[:, :] = (A^T z) reshaped to (L, M)."""
    L, M = out.shape
    mask = M - 1
    for l in range(L):
        w = out[l]
        w[:] = 0.0
        c = sec_block[l]
        for q in range(nnz[c]):
            r = nzr[c, q]
            g = gains[r, c]
            lo = r * rb_size
            hi = lo + rb_size
            for i in range(lo, hi):
                row = rows[l, i]
                w[row & mask] += g * signs[row >> m] * z[i]
        fwht_inplace(w)


@njit(cache=True)
def section_softmax(stat, scale, out):
    """Row-wise ``out[l] = softmax(stat[l] * scale[l])`` with max subtraction."""
    L, M = stat.shape
    for l in range(L):
        s = scale[l]
        mx = -np.inf
        for j in range(M):
            v = stat[l, j] * s
            if v > mx:
                mx = v
        tot = 0.0
        for j in range(M):
            e = np.exp(stat[l, j] * s - mx)
            out[l, j] = e
            tot += e
        inv = 1.0 / tot
        for j in range(M):
            out[l, j] *= inv


@njit(cache=True, fastmath=True)
def soft_success_mc(nus, U):
    """Monte-Carlo estimate of E[softmax weight on the true entry].

    With the true entry having exponent ``nu*(U[s,i] + nu)`` and the others
    ``nu*U[s,j]``, every row of ``U`` is exchangeable, so each of its ``M``
    entries is used in turn as the true one and the results are averaged
    (same O(M) cost per row, much lower variance).  Returns (mean, standard
    error over rows) arrays.
    """
    S, M = U.shape
    K = nus.shape[0]
    mean = np.empty(K)
    se = np.empty(K)
    w = np.empty(M)
    for k in range(K):
        nu = nus[k]
        g = np.exp(-nu * nu)
        acc = 0.0
        acc2 = 0.0
        for s in range(S):
            mx = nu * U[s, 0]
            for j in range(1, M):
                mx = max(mx, nu * U[s, j])
            tot = 0.0
            for j in range(M):
                w[j] = np.exp(nu * U[s, j] - mx)
                tot += w[j]
            f = 0.0
            for j in range(M):
                if w[j] > 0.0:
                    f += 1.0 / (1.0 + max(tot - w[j], 0.0) * g / w[j])
            f /= M
            acc += f
            acc2 += f * f
        mu = acc / S
        mean[k] = mu
        var = acc2 / S - mu * mu
        se[k] = np.sqrt(max(var, 0.0) / S)
    return mean, se


@njit(cache=True)
def full_hadamard_forward(beta, rows, col0, N, out):
    """out = A @ beta where section ``l`` uses rows ``rows[l]`` and columns
    ``col0 .. col0+M-1`` of ``H`` (size ``N``), via one size-``N`` transform
    per non-zero section.  Unscaled (``+-1`` entries)."""
    L, M = beta.shape
    n = rows.shape[1]
    out[:] = 0.0
    w = np.empty(N)
    for l in range(L):
        nonzero = False
        for b in range(M):
            if beta[l, b] != 0.0:
                nonzero = True
                break
        if not nonzero:
            continue
        w[:] = 0.0
        for b in range(M):
            w[col0 + b] = beta[l, b]
        fwht_inplace(w)
        for i in range(n):
            out[i] += w[rows[l, i]]


@njit(cache=True)
def full_hadamard_adjoint(z, rows, col0, N, out):
    L, M = out.shape
    n = rows.shape[1]
    w = np.empty(N)
    for l in range(L):
        w[:] = 0.0
        for i in range(n):
            w[rows[l, i]] += z[i]
        fwht_inplace(w)
        for b in range(M):
            out[l, b] = w[col0 + b]


@njit(cache=True)
def exhaustive_search(cols, target, first_lo, first_hi):
    """Lexicographic search over section tuples for ``argmin |target - sum_l cols[l, m_l]|``.

    ``cols[l, j]`` is the scaled column ``sqrt(nP_l) A_{l,j}``.  The first
    section is restricted to ``first_lo..first_hi-1``.  Residuals are kept per
    depth so each step costs ``O(n)``; the last section is scored for all
    ``M`` candidates with ``|r - c|^2 = |r|^2 - 2 c.r + |c|^2``.  Strict
    comparison keeps the first minimiser.
    """
    L, M, n = cols.shape
    norms = np.empty((L, M))
    for l in range(L):
        for j in range(M):
            s = 0.0
            for i in range(n):
                s += cols[l, j, i] * cols[l, j, i]
            norms[l, j] = s
    res = np.empty((L, n))
    idx = np.zeros(L, dtype=np.int64)
    best = np.zeros(L, dtype=np.int64)
    best_d = np.inf
    idx[0] = first_lo
    depth = 0
    for i in range(n):
        res[0, i] = target[i]
    if first_lo >= first_hi:
        return best, best_d
    while True:
        if depth == L - 1:
            rn = 0.0
            for i in range(n):
                rn += res[depth, i] * res[depth, i]
            lo = first_lo if L == 1 else 0
            hi = first_hi if L == 1 else M
            for j in range(lo, hi):
                dot = 0.0
                for i in range(n):
                    dot += cols[depth, j, i] * res[depth, i]
                d = rn - 2.0 * dot + norms[depth, j]
                if d < best_d:
                    best_d = d
                    for q in range(L - 1):
                        best[q] = idx[q]
                    best[L - 1] = j
            # backtrack to the deepest section that can still advance
            depth -= 1
            while depth >= 0:
                idx[depth] += 1
                lim = first_hi if depth == 0 else M
                if idx[depth] < lim:
                    break
                depth -= 1
            if depth < 0:
                break
        j = idx[depth]
        for i in range(n):
            res[depth + 1, i] = res[depth, i] - cols[depth, j, i]
        depth += 1
        idx[depth] = 0
    return best, best_d


@njit(cache=True)
def bit_posteriors_rows(beta, out):
    """Weighted position posteriors to bit posteriors, one row per section.

    Literal loop structure with 1-based column ``j`` read as ``beta[j - 1]``:
    for ``i = 2^s`` the bit ``b = log M - s - 1`` collects the weight of every
    second run of ``i`` consecutive columns, starting after the first run.
    """
    L, M = beta.shape
    logM = out.shape[1]
    for l in range(L):
        c = 0.0
        for j in range(M):
            c += beta[l, j]
        for b in range(logM):
            out[l, b] = 0.0
        for s in range(logM):
            i = 1 << s
            b = logM - s - 1
            k = i
            while k < M:
                for j in range(k + 1, k + i + 1):
                    out[l, b] += beta[l, j - 1] / c
                k += 2 * i

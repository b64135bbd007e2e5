"""Pure-NumPy reference implementations of the hot kernels.

These are the semantic ground truth; the compiled extension in ``_core.pyx``
must agree with them (see tests/test_kernels.py).
"""

import numpy as np


def em_loop(like, shift, w_init, max_iters, rel_tol):
    """Run EM weight updates on a precomputed likelihood matrix.

    ``like[i, j] = exp(logpdf[i, j] - shift[i])`` with ``shift[i]`` the
    per-row max.  Returns ``(weights, loglik_trace, iters)``;
    ``loglik_trace[t]`` is the log-likelihood of the iterate entering
    update ``t``.  Stops once the relative log-likelihood change drops
    below ``rel_tol``.
    """
    n = like.shape[0]
    w = np.array(w_init, dtype=np.float64)
    shift_sum = float(np.sum(shift))
    trace = np.empty(max_iters, dtype=np.float64)
    prev = 0.0
    iters = 0
    for it in range(max_iters):
        f = like @ w
        ll = shift_sum + float(np.sum(np.log(f)))
        w = w * (like.T @ (1.0 / f)) / n
        w /= w.sum()
        trace[it] = ll
        iters = it + 1
        if it > 0 and abs(ll - prev) <= rel_tol * abs(prev):
            break
        prev = ll
    return w, trace[:iters].copy(), iters


def perm_sample(logpdf, rowmax, prob, u, perms, logw):
    """Sample permutations coordinate-by-coordinate, each assignment drawn
    proportional to its likelihood among still-available atoms.

    Same contract as the compiled version: fills ``perms`` and the log
    importance weights ``logw[b] = sum_k (rowmax[k] + log S_bk)``.
    """
    nb, n = perms.shape
    avail = np.ones((nb, n), dtype=np.float64)
    logw[:] = 0.0
    rows = np.arange(nb)
    for k in range(n):
        p = prob[k][None, :] * avail
        csum = np.cumsum(p, axis=1)
        total = csum[:, -1]
        ok = total > 0.0
        target = u[:, k] * total
        j = np.minimum((csum <= target[:, None]).sum(axis=1), n - 1)
        # rounding can land on a zero-probability slot; take the last
        # positive one instead
        stuck = ok & (p[rows, j] == 0.0)
        if np.any(stuck):
            last_pos = n - 1 - (p[:, ::-1] > 0.0).argmax(axis=1)
            j[stuck] = last_pos[stuck]
        if not np.all(ok):
            bad = ~ok
            masked = np.where(avail[bad] > 0.0, logpdf[k][None, :], -np.inf)
            j[bad] = masked.argmax(axis=1)
            logw[bad] += logpdf[k, j[bad]]
        logw[ok] += rowmax[k] + np.log(total[ok])
        perms[:, k] = j
        avail[rows, j] = 0.0

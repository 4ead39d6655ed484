"""Compiled inner loops for embedding and classifier training.

All kernels mutate float32 matrices in place. The serial variants are
deterministic for a fixed seed; the parallel variants split work across
worker chunks whose unsynchronized sparse updates may race on shared rows
(the usual lock-free SGD regime), so they are only statistically
reproducible. Scalar math runs in float64, storage stays float32.

The in-kernel ``np.random`` calls draw from numba's MT19937, which is
stream-compatible with numpy's legacy ``np.random`` API; tests exploit that
to replay sampling decisions in pure Python.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_SPLITMIX_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SPLITMIX_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_SPLITMIX_MUL2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def fill_uniform(mat, scale, seed):
    """Fill ``mat`` with uniform values in ``[-scale, scale)`` using a
    splitmix64 stream; deterministic and platform independent."""
    state = np.uint64(seed)
    n, d = mat.shape
    for i in range(n):
        for j in range(d):
            state += _SPLITMIX_GAMMA
            z = state
            z = (z ^ (z >> np.uint64(30))) * _SPLITMIX_MUL1
            z = (z ^ (z >> np.uint64(27))) * _SPLITMIX_MUL2
            z = z ^ (z >> np.uint64(31))
            u = np.float64(z >> np.uint64(11)) * (1.0 / 9007199254740992.0)
            mat[i, j] = np.float32((2.0 * u - 1.0) * scale)


@njit(cache=True, inline="always")
def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def _sg_chunk(
    inp,
    out,
    sent_flat,
    sent_off,
    first_sent,
    last_sent,
    unit_idx,
    unit_off,
    neg_cum,
    keep_prob,
    window,
    negatives,
    lr0,
    total_planned,
    processed_start,
    progress_stride,
):
    """Skip-gram negative-sampling pass over sentences
    ``[first_sent, last_sent)``.

    For each kept center word the composed input vector is the sum of its
    unit rows; one positive context row and ``negatives`` noise rows are
    pulled toward / pushed from it. The learning rate decays linearly with
    scanned tokens, where each local token advances global progress by
    ``progress_stride`` (1 for serial runs, the worker count for parallel
    chunks). Returns (scanned token count, summed loss, loss terms).
    """
    d = inp.shape[1]
    vocab_size = out.shape[0]
    cum_total = neg_cum[vocab_size - 1]
    max_len = 0
    for s in range(first_sent, last_sent):
        length = np.int64(sent_off[s + 1] - sent_off[s])
        if length > max_len:
            max_len = length
    kept = np.empty(max_len, dtype=np.int32)
    u = np.empty(d, dtype=np.float32)
    g = np.empty(d, dtype=np.float32)
    processed = np.int64(0)
    loss_sum = 0.0
    loss_terms = np.int64(0)
    for s in range(first_sent, last_sent):
        lr = lr0 * (
            1.0
            - np.float64(processed_start + processed * progress_stride)
            / np.float64(total_planned)
        )
        if lr < 0.0:
            lr = 0.0
        n_kept = 0
        for j in range(sent_off[s], sent_off[s + 1]):
            w = sent_flat[j]
            processed += 1
            if keep_prob[w] >= 1.0 or np.random.random() < keep_prob[w]:
                kept[n_kept] = w
                n_kept += 1
        for t in range(n_kept):
            center = kept[t]
            b = np.random.randint(1, window + 1)
            lo = t - b
            if lo < 0:
                lo = 0
            hi = t + b
            if hi > n_kept - 1:
                hi = n_kept - 1
            for c in range(lo, hi + 1):
                if c == t:
                    continue
                context = kept[c]
                u0 = unit_off[center]
                u1 = unit_off[center + 1]
                for m in range(d):
                    u[m] = 0.0
                for j in range(u0, u1):
                    r = unit_idx[j]
                    for m in range(d):
                        u[m] += inp[r, m]
                for m in range(d):
                    g[m] = 0.0
                for k in range(negatives + 1):
                    if k == 0:
                        row = np.int64(context)
                        label = 1.0
                    else:
                        draw = np.random.random() * cum_total
                        row = np.searchsorted(neg_cum, draw, side="right")
                        if row >= vocab_size:
                            row = vocab_size - 1
                        if row == context:
                            continue
                        label = 0.0
                    score = 0.0
                    for m in range(d):
                        score += np.float64(u[m]) * np.float64(out[row, m])
                    f = _sigmoid(score)
                    if label == 1.0:
                        loss_sum += -np.log(max(f, 1e-300))
                    else:
                        loss_sum += -np.log(max(1.0 - f, 1e-300))
                    loss_terms += 1
                    alpha = np.float32(lr * (label - f))
                    for m in range(d):
                        g[m] += alpha * out[row, m]
                        out[row, m] += alpha * u[m]
                for j in range(u0, u1):
                    r = unit_idx[j]
                    for m in range(d):
                        inp[r, m] += g[m]
    return processed, loss_sum, loss_terms


@njit(cache=True)
def sg_epoch_serial(
    inp,
    out,
    sent_flat,
    sent_off,
    unit_idx,
    unit_off,
    neg_cum,
    keep_prob,
    window,
    negatives,
    lr0,
    total_planned,
    processed_start,
    seed,
):
    np.random.seed(seed)
    n_sent = sent_off.shape[0] - 1
    return _sg_chunk(
        inp,
        out,
        sent_flat,
        sent_off,
        0,
        n_sent,
        unit_idx,
        unit_off,
        neg_cum,
        keep_prob,
        window,
        negatives,
        lr0,
        total_planned,
        processed_start,
        1,
    )


@njit(cache=True, parallel=True)
def sg_epoch_parallel(
    inp,
    out,
    sent_flat,
    sent_off,
    unit_idx,
    unit_off,
    neg_cum,
    keep_prob,
    window,
    negatives,
    lr0,
    total_planned,
    processed_start,
    seed,
    workers,
):
    n_sent = sent_off.shape[0] - 1
    bounds = np.empty(workers + 1, dtype=np.int64)
    for w in range(workers + 1):
        bounds[w] = (n_sent * w) // workers
    processed = np.zeros(workers, dtype=np.int64)
    losses = np.zeros(workers, dtype=np.float64)
    terms = np.zeros(workers, dtype=np.int64)
    for w in prange(workers):
        np.random.seed(seed + w)
        p, l, t = _sg_chunk(
            inp,
            out,
            sent_flat,
            sent_off,
            bounds[w],
            bounds[w + 1],
            unit_idx,
            unit_off,
            neg_cum,
            keep_prob,
            window,
            negatives,
            lr0,
            total_planned,
            processed_start,
            workers,
        )
        processed[w] = p
        losses[w] = l
        terms[w] = t
    return processed.sum(), losses.sum(), terms.sum()


@njit(cache=True)
def _clf_chunk(
    inp,
    weights,
    ex_units,
    ex_off,
    ex_nwords,
    labels,
    order,
    first,
    last,
    lr0,
    total_planned,
    processed_start,
    progress_stride,
    freeze,
):
    """Softmax cross-entropy SGD over examples ``order[first:last]``.

    The sentence vector is the summed unit rows divided by the token count;
    output weights and (unless frozen) the touched embedding rows move one
    gradient step per example. Returns (examples seen, summed loss).
    """
    d = inp.shape[1]
    s = np.empty(d, dtype=np.float32)
    ds = np.empty(d, dtype=np.float32)
    loss_sum = 0.0
    seen = np.int64(0)
    for pos in range(first, last):
        i = order[pos]
        lr = lr0 * (
            1.0
            - np.float64(processed_start + seen * progress_stride)
            / np.float64(total_planned)
        )
        if lr < 0.0:
            lr = 0.0
        seen += 1
        u0 = ex_off[i]
        u1 = ex_off[i + 1]
        nw = ex_nwords[i]
        for m in range(d):
            s[m] = 0.0
        for j in range(u0, u1):
            r = ex_units[j]
            for m in range(d):
                s[m] += inp[r, m]
        if nw > 0:
            inv = np.float32(1.0) / np.float32(nw)
            for m in range(d):
                s[m] *= inv
        z0 = 0.0
        z1 = 0.0
        for m in range(d):
            z0 += np.float64(weights[0, m]) * np.float64(s[m])
            z1 += np.float64(weights[1, m]) * np.float64(s[m])
        zmax = z0 if z0 > z1 else z1
        e0 = np.exp(z0 - zmax)
        e1 = np.exp(z1 - zmax)
        inv_z = 1.0 / (e0 + e1)
        p0 = e0 * inv_z
        p1 = e1 * inv_z
        y = labels[i]
        loss_sum += -np.log(max(p1 if y == 1 else p0, 1e-300))
        d0 = np.float32(p0 - (1.0 if y == 0 else 0.0))
        d1 = np.float32(p1 - (1.0 if y == 1 else 0.0))
        for m in range(d):
            ds[m] = d0 * weights[0, m] + d1 * weights[1, m]
        lr32 = np.float32(lr)
        for m in range(d):
            weights[0, m] -= lr32 * d0 * s[m]
            weights[1, m] -= lr32 * d1 * s[m]
        if not freeze and nw > 0:
            coef = lr32 / np.float32(nw)
            for m in range(d):
                ds[m] *= coef
            for j in range(u0, u1):
                r = ex_units[j]
                for m in range(d):
                    inp[r, m] -= ds[m]
    return seen, loss_sum


@njit(cache=True)
def clf_epoch_serial(
    inp,
    weights,
    ex_units,
    ex_off,
    ex_nwords,
    labels,
    order,
    lr0,
    total_planned,
    processed_start,
    freeze,
):
    return _clf_chunk(
        inp,
        weights,
        ex_units,
        ex_off,
        ex_nwords,
        labels,
        order,
        0,
        order.shape[0],
        lr0,
        total_planned,
        processed_start,
        1,
        freeze,
    )


@njit(cache=True, parallel=True)
def clf_epoch_parallel(
    inp,
    weights,
    ex_units,
    ex_off,
    ex_nwords,
    labels,
    order,
    lr0,
    total_planned,
    processed_start,
    freeze,
    workers,
):
    n = order.shape[0]
    bounds = np.empty(workers + 1, dtype=np.int64)
    for w in range(workers + 1):
        bounds[w] = (n * w) // workers
    seen = np.zeros(workers, dtype=np.int64)
    losses = np.zeros(workers, dtype=np.float64)
    for w in prange(workers):
        c, l = _clf_chunk(
            inp,
            weights,
            ex_units,
            ex_off,
            ex_nwords,
            labels,
            order,
            bounds[w],
            bounds[w + 1],
            lr0,
            total_planned,
            processed_start,
            workers,
            freeze,
        )
        seen[w] = c
        losses[w] = l
    return seen.sum(), losses.sum()


@njit(cache=True)
def compose_rows(mat, rows):
    """Sequential float32 sum of the given matrix rows (order preserved,
    no pairwise reassociation), so results are bit-stable."""
    d = mat.shape[1]
    acc = np.zeros(d, dtype=np.float32)
    for j in range(rows.shape[0]):
        r = rows[j]
        for m in range(d):
            acc[m] += mat[r, m]
    return acc


@njit(cache=True)
def btm_sweep(z, w1, w2, n_z, n_wz, alpha, beta, seed):
    """One collapsed Gibbs sweep over all biterms.

    Each biterm's topic is resampled from
    ``(n_z + alpha) * phi[z, w1] * phi[z, w2]`` with its own counts removed,
    where ``phi[z, w] = (n_wz + beta) / (2 n_z + V beta)``. Counts are
    updated in place.
    """
    np.random.seed(seed)
    K = n_z.shape[0]
    V = n_wz.shape[1]
    probs = np.empty(K, dtype=np.float64)
    for i in range(z.shape[0]):
        zi = z[i]
        a = w1[i]
        b = w2[i]
        n_z[zi] -= 1
        n_wz[zi, a] -= 1
        n_wz[zi, b] -= 1
        total = 0.0
        for k in range(K):
            denom = 2.0 * n_z[k] + V * beta
            p = (
                (n_z[k] + alpha)
                * ((n_wz[k, a] + beta) / denom)
                * ((n_wz[k, b] + beta) / denom)
            )
            probs[k] = p
            total += p
        draw = np.random.random() * total
        acc = 0.0
        chosen = K - 1
        for k in range(K):
            acc += probs[k]
            if draw < acc:
                chosen = k
                break
        z[i] = chosen
        n_z[chosen] += 1
        n_wz[chosen, a] += 1
        n_wz[chosen, b] += 1

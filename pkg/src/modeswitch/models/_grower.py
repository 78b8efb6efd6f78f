"""Compiled kernels for growing and evaluating binary decision trees.

Trees are grown best-first: every open leaf knows its best candidate split
(the one maximizing the impurity improvement) and the leaf with the
globally largest improvement is expanded next. Grown to exhaustion this
yields the same tree as depth-first growth, while a split budget
(`max_splits`) reproduces the boosting convention of trees with a fixed
number of splits.

Split candidates are midpoints between consecutive distinct observed
values; ties on improvement resolve to the lowest feature index, then the
lowest threshold. Feature values are pre-binned once per fit into integer
codes so node statistics reduce to histogram accumulation; small nodes
with many bins fall back to sorting their codes.

Feature subsampling (`mtry`) inside the kernel uses an inline splitmix64
generator so the whole fit is a pure function of the seed.
"""
from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64


def prebin(X: np.ndarray):
    """Map each column of X to integer codes over its sorted unique values.

    Returns (codes_t, bin_starts, bin_values) where codes_t is (p, n) int32,
    bin_values concatenates the per-feature unique values and bin_starts
    delimits them.
    """
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    codes_t = np.empty((p, n), dtype=np.int32)
    starts = np.zeros(p + 1, dtype=np.int64)
    vals = []
    for t in range(p):
        u = np.unique(X[:, t])
        codes_t[t] = np.searchsorted(u, X[:, t]).astype(np.int32)
        vals.append(u)
        starts[t + 1] = starts[t] + u.size
    return np.ascontiguousarray(codes_t), starts, np.concatenate(vals)


@njit(cache=True, inline="always")
def _splitmix64(state):
    state = state + U64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U64(27))) * U64(0x94D4A2C62ED4D1CF)
    z = z ^ (z >> U64(31))
    return state, z


@njit(cache=True)
def grow_tree(codes_t, bin_starts, bin_vals, w, g, h, rows,
              min_leaf, max_splits, mtry, seed, leaf_mode, purity_stop,
              row_value):
    """Grow one tree and return (feat, thr, left, right, value, n_nodes).

    codes_t: (p, n) pre-binned feature codes. w: per-row weights (0 keeps a
    row out entirely; `rows` must list the positive-weight rows). g: the
    target (class labels for gini, residuals for regression). h: curvature
    weights used only for newton leaf values.

    leaf_mode 0: leaf value = weighted mean of g (class-1 fraction).
    leaf_mode 1: newton step sum(w*g)/sum(w*h); a root-only tree scores 0.
    purity_stop: stop expanding pure classification nodes.

    row_value[r] receives the leaf value of every row r in `rows`.
    """
    p = codes_t.shape[0]
    n0 = rows.shape[0]
    if max_splits < 0 or max_splits > n0:
        max_splits = n0
    cap = 2 * max_splits + 1
    node_feat = np.full(cap, -1, np.int32)
    node_thr = np.zeros(cap, np.float64)
    node_left = np.full(cap, -1, np.int32)
    node_right = np.full(cap, -1, np.int32)
    node_value = np.zeros(cap, np.float64)
    cand_gain = np.full(cap, -1.0, np.float64)
    cand_feat = np.full(cap, -1, np.int32)
    cand_code = np.zeros(cap, np.int32)
    cand_thr = np.zeros(cap, np.float64)
    node_start = np.zeros(cap, np.int64)
    node_end = np.zeros(cap, np.int64)
    node_W = np.zeros(cap, np.float64)
    node_S = np.zeros(cap, np.float64)
    node_SH = np.zeros(cap, np.float64)
    evaluated = np.zeros(cap, np.bool_)
    is_open = np.zeros(cap, np.bool_)

    max_bins = 0
    for t in range(p):
        k = bin_starts[t + 1] - bin_starts[t]
        if k > max_bins:
            max_bins = k
    hist_w = np.zeros(max_bins, np.float64)
    hist_s = np.zeros(max_bins, np.float64)
    scr_code = np.empty(n0, np.int32)
    scr_w = np.empty(n0, np.float64)
    scr_s = np.empty(n0, np.float64)
    left_buf = np.empty(n0, np.int32)
    right_buf = np.empty(n0, np.int32)
    feat_sel = np.empty(p, np.int32)
    rng = seed

    w_root = 0.0
    s_root = 0.0
    sh_root = 0.0
    for i in range(n0):
        r = rows[i]
        w_root += w[r]
        s_root += w[r] * g[r]
        sh_root += w[r] * h[r]
    node_start[0] = 0
    node_end[0] = n0
    node_W[0] = w_root
    node_S[0] = s_root
    node_SH[0] = sh_root
    is_open[0] = True
    n_nodes = 1
    n_splits = 0

    while n_splits < max_splits:
        for nd in range(n_nodes):
            if not is_open[nd] or evaluated[nd]:
                continue
            evaluated[nd] = True
            cand_gain[nd] = -1.0
            wn = node_W[nd]
            sn = node_S[nd]
            lo = node_start[nd]
            hi = node_end[nd]
            nn = hi - lo
            if wn < 2.0 * min_leaf or nn < 2:
                continue
            if purity_stop and (sn == 0.0 or sn == wn):
                continue
            parent_phi = sn * sn / wn
            nsel = p
            use_subset = mtry < p
            if use_subset:
                for t in range(p):
                    feat_sel[t] = t
                for j in range(mtry):
                    rng, z = _splitmix64(rng)
                    k = j + np.int64(z % U64(p - j))
                    feat_sel[j], feat_sel[k] = feat_sel[k], feat_sel[j]
                for a in range(1, mtry):  # canonical order for tie-breaking
                    key = feat_sel[a]
                    b = a - 1
                    while b >= 0 and feat_sel[b] > key:
                        feat_sel[b + 1] = feat_sel[b]
                        b -= 1
                    feat_sel[b + 1] = key
                nsel = mtry
            best_gain = 0.0
            best_feat = -1
            best_code = -1
            best_thr = 0.0
            for si in range(nsel):
                t = feat_sel[si] if use_subset else si
                off = bin_starts[t]
                nbins = bin_starts[t + 1] - off
                if nbins < 2:
                    continue
                if nbins <= 4 * nn:
                    for b in range(nbins):
                        hist_w[b] = 0.0
                        hist_s[b] = 0.0
                    for i in range(lo, hi):
                        r = rows[i]
                        c = codes_t[t, r]
                        hist_w[c] += w[r]
                        hist_s[c] += w[r] * g[r]
                    cw = 0.0
                    cs = 0.0
                    prev = -1
                    for b in range(nbins):
                        if hist_w[b] == 0.0:
                            continue
                        if prev >= 0 and cw >= min_leaf and wn - cw >= min_leaf:
                            rw = wn - cw
                            rs = sn - cs
                            gain = cs * cs / cw + rs * rs / rw - parent_phi
                            if gain > best_gain:
                                best_gain = gain
                                best_feat = t
                                best_code = prev
                                best_thr = 0.5 * (bin_vals[off + prev] + bin_vals[off + b])
                        cw += hist_w[b]
                        cs += hist_s[b]
                        prev = b
                else:  # few rows spread over many bins: sort instead
                    m = 0
                    for i in range(lo, hi):
                        r = rows[i]
                        scr_code[m] = codes_t[t, r]
                        scr_w[m] = w[r]
                        scr_s[m] = w[r] * g[r]
                        m += 1
                    order = np.argsort(scr_code[:m], kind="mergesort")
                    cw = 0.0
                    cs = 0.0
                    prev = -1
                    j = 0
                    while j < m:
                        c = scr_code[order[j]]
                        bw = 0.0
                        bs = 0.0
                        while j < m and scr_code[order[j]] == c:
                            o = order[j]
                            bw += scr_w[o]
                            bs += scr_s[o]
                            j += 1
                        if prev >= 0 and cw >= min_leaf and wn - cw >= min_leaf:
                            rw = wn - cw
                            rs = sn - cs
                            gain = cs * cs / cw + rs * rs / rw - parent_phi
                            if gain > best_gain:
                                best_gain = gain
                                best_feat = t
                                best_code = prev
                                best_thr = 0.5 * (bin_vals[off + prev] + bin_vals[off + c])
                        cw += bw
                        cs += bs
                        prev = c
            if best_feat >= 0 and best_gain > 0.0:
                cand_gain[nd] = best_gain
                cand_feat[nd] = best_feat
                cand_code[nd] = best_code
                cand_thr[nd] = best_thr

        pick = -1
        pick_gain = 0.0
        for nd in range(n_nodes):
            if is_open[nd] and cand_gain[nd] > pick_gain:
                pick_gain = cand_gain[nd]
                pick = nd
        if pick < 0:
            break

        t = cand_feat[pick]
        code = cand_code[pick]
        lo = node_start[pick]
        hi = node_end[pick]
        nl = 0
        nr = 0
        wl = 0.0
        sl = 0.0
        shl = 0.0
        for i in range(lo, hi):
            r = rows[i]
            if codes_t[t, r] <= code:
                left_buf[nl] = r
                nl += 1
                wl += w[r]
                sl += w[r] * g[r]
                shl += w[r] * h[r]
            else:
                right_buf[nr] = r
                nr += 1
        for i in range(nl):
            rows[lo + i] = left_buf[i]
        for i in range(nr):
            rows[lo + nl + i] = right_buf[i]
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        node_feat[pick] = t
        node_thr[pick] = cand_thr[pick]
        node_left[pick] = lid
        node_right[pick] = rid
        is_open[pick] = False
        node_start[lid] = lo
        node_end[lid] = lo + nl
        node_W[lid] = wl
        node_S[lid] = sl
        node_SH[lid] = shl
        is_open[lid] = True
        node_start[rid] = lo + nl
        node_end[rid] = hi
        node_W[rid] = node_W[pick] - wl
        node_S[rid] = node_S[pick] - sl
        node_SH[rid] = node_SH[pick] - shl
        is_open[rid] = True
        n_splits += 1

    for nd in range(n_nodes):
        if node_feat[nd] >= 0:
            continue
        if leaf_mode == 0:
            val = node_S[nd] / node_W[nd]
        elif n_nodes == 1:
            val = 0.0  # degenerate stage: contributes nothing
        elif node_SH[nd] > 1e-300:
            val = node_S[nd] / node_SH[nd]
        else:
            val = 0.0
        node_value[nd] = val
        for i in range(node_start[nd], node_end[nd]):
            row_value[rows[i]] = val

    return (node_feat[:n_nodes].copy(), node_thr[:n_nodes].copy(),
            node_left[:n_nodes].copy(), node_right[:n_nodes].copy(),
            node_value[:n_nodes].copy(), n_nodes)


@njit(cache=True)
def accumulate_forest(feat, thr, left, right, value, tree_off, X, scale, out):
    """Add scale * leaf_value(x) to out for every tree, in tree order.

    Routing is strictly-less: x < threshold goes left, so a value sitting
    exactly on a (midpoint) threshold groups with the right-hand children.
    Training rows never land on a threshold, so this only affects new
    values probed between observed ones.

    Sequential per-row accumulation keeps single-row and batched prediction
    bit-identical and preserves the staged structure of boosted scores.
    """
    n_trees = tree_off.shape[0] - 1
    n = X.shape[0]
    for t in range(n_trees):
        base = tree_off[t]
        for i in range(n):
            nd = 0
            while feat[base + nd] >= 0:
                if X[i, feat[base + nd]] < thr[base + nd]:
                    nd = left[base + nd]
                else:
                    nd = right[base + nd]
            out[i] += scale * value[base + nd]

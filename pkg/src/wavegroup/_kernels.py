"""Compiled CART kernels (regression, variance-reduction splits)."""
import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True, nogil=True)
def _splitmix(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True, nogil=True)
def build_tree(X, y, rows, mtry, min_leaf, key):
    """Grow one unpruned regression tree on ``rows`` (a multiset of row ids).

    Feature subsets are drawn from a splitmix64 counter stream started at
    ``key``.  Returns node arrays (feature, threshold, left, right, value,
    n_samples); leaves have feature == -1.
    """
    n = rows.shape[0]
    n_features = X.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap)
    n_samples = np.zeros(cap, np.int64)

    idx = rows.copy()
    scratch = np.empty(n, np.int64)
    vals = np.empty(n)
    pool = np.arange(n_features)
    cand = np.empty(mtry, np.int64)

    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_node = np.empty(cap, np.int64)
    sp = 0
    st_start[0] = 0
    st_end[0] = n
    st_node[0] = 0
    sp = 1
    n_nodes = 1
    state = np.uint64(key)

    while sp > 0:
        sp -= 1
        s = st_start[sp]
        e = st_end[sp]
        node = st_node[sp]
        m = e - s

        total = 0.0
        ymin = np.inf
        ymax = -np.inf
        for i in range(s, e):
            v = y[idx[i]]
            total += v
            if v < ymin:
                ymin = v
            if v > ymax:
                ymax = v
        mean = total / m
        value[node] = mean
        n_samples[node] = m
        if ymin == ymax or m < 2 * min_leaf:
            continue

        for i in range(mtry):
            state, z = _splitmix(state)
            u = float(z >> np.uint64(11)) * _TO_UNIT
            j = i + int(u * (n_features - i))
            tmp = pool[i]
            pool[i] = pool[j]
            pool[j] = tmp
            cand[i] = pool[i]
        cand.sort()

        best_gain = -1.0
        best_f = -1
        best_thr = 0.0
        for c in range(mtry):
            f = cand[c]
            for i in range(m):
                vals[i] = X[idx[s + i], f]
            order = np.argsort(vals[:m])
            if vals[order[0]] == vals[order[m - 1]]:
                continue
            acc = 0.0
            for i in range(m - 1):
                acc += y[idx[s + order[i]]] - mean
                n_left = i + 1
                n_right = m - n_left
                v0 = vals[order[i]]
                v1 = vals[order[i + 1]]
                if v0 == v1 or n_left < min_leaf or n_right < min_leaf:
                    continue
                gain = acc * acc * (1.0 / n_left + 1.0 / n_right)
                # relative slack so round-off never breaks an exact tie
                if gain > best_gain + 1e-12 * abs(best_gain):
                    best_gain = gain
                    best_f = f
                    t = 0.5 * (v0 + v1)
                    if t >= v1 or t < v0:
                        t = v0
                    best_thr = t

        if best_f < 0:
            continue

        # stable partition of idx[s:e]
        n_left = 0
        for i in range(s, e):
            r = idx[i]
            if X[r, best_f] <= best_thr:
                scratch[n_left] = r
                n_left += 1
        k = n_left
        for i in range(s, e):
            r = idx[i]
            if X[r, best_f] > best_thr:
                scratch[k] = r
                k += 1
        for i in range(m):
            idx[s + i] = scratch[i]

        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        # right pushed first so the left subtree is grown first
        st_start[sp] = s + n_left
        st_end[sp] = e
        st_node[sp] = n_nodes + 1
        sp += 1
        st_start[sp] = s
        st_end[sp] = s + n_left
        st_node[sp] = n_nodes
        sp += 1
        n_nodes += 2

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy(), n_samples[:n_nodes].copy())


@njit(cache=True, nogil=True)
def predict_rows(feature, threshold, left, right, value, X, rows, source, mask):
    """Predict ``rows`` of ``X``; where ``mask[f]`` is set, feature ``f`` is
    read from row ``source[i]`` instead of ``rows[i]``."""
    out = np.empty(rows.shape[0])
    for i in range(rows.shape[0]):
        r = rows[i]
        s = source[i]
        node = 0
        while feature[node] >= 0:
            f = feature[node]
            x = X[s, f] if mask[f] else X[r, f]
            if x <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


@njit(cache=True, nogil=True)
def squared_error(pred, y, rows):
    acc = 0.0
    for i in range(rows.shape[0]):
        d = y[rows[i]] - pred[i]
        acc += d * d
    return acc / rows.shape[0]

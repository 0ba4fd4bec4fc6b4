"""Independent reference implementations the package is checked against.

Everything here is written from the defining formulas with plain loops and
scalar math, sharing no code with ``meterguard`` beyond its data containers.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# ----------------------------------------------------------------------------- LSTM


def logistic(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def lstm_step(w_ih, w_hh, b_ih, b_hh, x, h, c):
    """One cell update, gate by gate and unit by unit."""
    H = len(h)
    new_h, new_c = [0.0] * H, [0.0] * H
    for j in range(H):
        pre = []
        for gate in range(4):
            row = gate * H + j
            z = b_ih[row] + b_hh[row]
            z += sum(w_ih[row][k] * x[k] for k in range(len(x)))
            z += sum(w_hh[row][k] * h[k] for k in range(H))
            pre.append(z)
        i, f, o = logistic(pre[0]), logistic(pre[1]), logistic(pre[3])
        g = math.tanh(pre[2])
        new_c[j] = f * c[j] + i * g
        new_h[j] = o * math.tanh(new_c[j])
    return new_h, new_c


def lstm_run(p, xs, h=None, c=None):
    H = p.w_hh.shape[1]
    h = [0.0] * H if h is None else list(h)
    c = [0.0] * H if c is None else list(c)
    out = []
    args = (p.w_ih.tolist(), p.w_hh.tolist(), p.b_ih.tolist(), p.b_hh.tolist())
    for x in xs:
        h, c = lstm_step(*args, list(x), h, c)
        out.append(h)
    return np.array(out), np.array(h), np.array(c)


def bilstm_run(fwd, bwd, xs):
    hf, _, _ = lstm_run(fwd, xs)
    hb, _, _ = lstm_run(bwd, xs[::-1])
    return np.array([list(a) + list(b) for a, b in zip(hf, hb[::-1])])


# ----------------------------------------------------------------------------- GCN


def gcn_operator(adjacency) -> np.ndarray:
    a = np.asarray(adjacency, dtype=float)
    n = len(a)
    a_hat = [[a[i][j] + (1.0 if i == j else 0.0) for j in range(n)] for i in range(n)]
    deg = [sum(row) for row in a_hat]
    return np.array([[a_hat[i][j] / math.sqrt(deg[i] * deg[j]) for j in range(n)] for i in range(n)])


def matmul(a, b) -> np.ndarray:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.array(
        [[sum(a[i][k] * b[k][j] for k in range(a.shape[1])) for j in range(b.shape[1])] for i in range(a.shape[0])]
    )


def gcn_layer(adjacency, H, W) -> np.ndarray:
    return np.maximum(matmul(matmul(gcn_operator(adjacency), H), W), 0.0)


# ----------------------------------------------------------------------------- gradients


def finite_difference_check(loss_fn, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], step=1e-5):
    """Max relative error between analytic ``grads`` and central differences of ``loss_fn``."""
    worst = 0.0
    for name, p in params.items():
        g = grads[name]
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + step
            up = loss_fn()
            p[idx] = old - step
            down = loss_fn()
            p[idx] = old
            numeric = (up - down) / (2 * step)
            scale = max(abs(numeric), abs(g[idx]), 1e-6)
            worst = max(worst, abs(numeric - g[idx]) / scale)
    return worst


# ----------------------------------------------------------------------------- data pipeline


def haar_matrix(n: int) -> np.ndarray:
    """One-level orthonormal Haar analysis matrix: approximations first, then details."""
    m = np.zeros((n, n))
    s = 1.0 / math.sqrt(2.0)
    for k in range(n // 2):
        m[k, 2 * k] = m[k, 2 * k + 1] = s
        m[n // 2 + k, 2 * k] = s
        m[n // 2 + k, 2 * k + 1] = -s
    return m


def haar_levels(x, levels: int):
    a = np.asarray(x, float)
    details = []
    for _ in range(levels):
        y = haar_matrix(len(a)) @ a
        a, d = y[: len(a) // 2], y[len(a) // 2 :]
        details.append(d)
    return a, details


def lof(points, k: int) -> np.ndarray:
    """Local outlier factor from the reachability-density definition, O(n^2) loops."""
    X = [tuple(np.atleast_1d(p)) for p in np.asarray(points, float)]
    n = len(X)

    def d(i, j):
        return math.sqrt(sum((a - b) ** 2 for a, b in zip(X[i], X[j])))

    dist = [[d(i, j) for j in range(n)] for i in range(n)]
    kdist, neigh = [], []
    for i in range(n):
        others = sorted(dist[i][j] for j in range(n) if j != i)
        kd = others[k - 1]
        kdist.append(kd)
        neigh.append([j for j in range(n) if j != i and dist[i][j] <= kd])
    lrd = []
    for i in range(n):
        reach = [max(dist[i][j], kdist[j]) for j in neigh[i]]
        mean = sum(reach) / len(reach)
        lrd.append(math.inf if mean == 0 else 1.0 / mean)
    out = []
    for i in range(n):
        ratios = [1.0 if math.isinf(lrd[j]) and math.isinf(lrd[i]) else lrd[j] / lrd[i] for j in neigh[i]]
        out.append(sum(ratios) / len(ratios))
    return np.array(out)


def percentile_by_sort(values, q: float) -> float:
    """Linear interpolation between closest ranks on the sorted sample."""
    s = sorted(float(v) for v in values)
    pos = (len(s) - 1) * q / 100.0
    lo = math.floor(pos)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (s[hi] - s[lo]) * (pos - lo)


# ----------------------------------------------------------------------------- metrics


def pairwise_auc(scores, positives) -> float:
    pos = [s for s, y in zip(scores, positives) if y]
    neg = [s for s, y in zip(scores, positives) if not y]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))


def confusion(tp, tn, fp, fn) -> dict:
    accuracy = (tp + tn) / (tp + fn + fp + tn) if tp + fn + fp + tn else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"accuracy": accuracy, "precision": precision, "recall": recall, "f1": f1}


# ----------------------------------------------------------------------------- power


def rule_table(pw_grid, pw_pv, pw_max, soc, soc_min, soc_max, o_lstm=None, pw_grid_hat=None) -> int:
    """Charge/discharge decision; with ``o_lstm`` given, the flagged reading is swapped for the estimate."""
    g = pw_grid if o_lstm is None else max(pw_grid * o_lstm, pw_grid_hat)
    if g - pw_pv > pw_max and soc > soc_min:
        return -1
    if g - pw_pv < pw_max and soc < soc_max:
        return 1
    return 0


def tou(seconds: int) -> float:
    h = seconds / 3600.0
    if h > 23 or h <= 9:
        return 0.06
    if 9 < h <= 10 or 12 < h <= 13 or 17 < h <= 23:
        return 0.12
    return 0.18


def prog(total: float) -> float:
    if total <= 300:
        return 0.008
    if total <= 450:
        return 0.018
    return 0.027


def bill(net_kwh, timestamps, ccec=0.010, export_rate=0.0) -> float:
    """Step-by-step bill: each step priced at its end instant, usage resets monthly."""
    total, used, month = 0.0, 0.0, None
    for e, ts in zip(net_kwh, timestamps):
        ts = np.datetime64(ts, "s")
        m = ts.astype("datetime64[M]")
        if m != month:
            month, used = m, 0.0
        end = ts + np.timedelta64(900, "s")
        sec = int((end - end.astype("datetime64[D]")).astype(int))
        price = tou(sec) + prog(used) + ccec
        if e > 0:
            total += e * price
            used += e
        elif e < 0:
            total -= -e * export_rate
    return total


def schedule_cost(profiles, starts, base, pv, prices, alpha=1.0, beta=1.0, dt=0.25) -> float:
    net = [b - p for b, p in zip(base, pv)]
    for prof, s in zip(profiles, starts):
        for k, w in enumerate(prof):
            net[s + k] += w
    pos = [max(v, 0.0) for v in net]
    return alpha * max(pos) + beta * sum(v * c * dt for v, c in zip(pos, prices))


def brute_force_schedule(windows, profiles, base, pv, prices, alpha=1.0, beta=1.0):
    """Minimum over every combination of feasible starts; ``windows`` are (earliest, latest)."""
    ranges = [range(lo, hi - len(p) + 1) for (lo, hi), p in zip(windows, profiles)]
    return min(schedule_cost(profiles, s, base, pv, prices, alpha, beta) for s in itertools.product(*ranges))

"""Independent reference implementations used only by the test suite.

Deliberately written in a different style from the package (scalar
loops, no vectorization, no shared helpers) so that agreement between
the two is meaningful.
"""

from __future__ import annotations

import heapq
import math


# ---------------------------------------------------------------------------
# Direct nested-loop TCN forward pass
# ---------------------------------------------------------------------------

def conv_oracle(x_rows, weights, bias, kernel, dilation):
    """Causal dilated convolution, x_rows as list-of-lists (T, C_in)."""
    t_len = len(x_rows)
    c_out = len(bias)
    c_in = len(x_rows[0])
    out = []
    for t in range(t_len):
        row = []
        for o in range(c_out):
            acc = bias[o]
            for j in range(kernel):
                src = t - (kernel - 1 - j) * dilation
                if src < 0:
                    continue
                for i in range(c_in):
                    acc += weights[o][i][j] * x_rows[src][i]
            row.append(acc)
        out.append(row)
    return out


def _relu_rows(rows):
    return [[v if v > 0.0 else 0.0 for v in row] for row in rows]


def tcn_oracle(weights, window_rows, context_pair):
    """Power prediction replicated with scalar loops from a TcnWeights
    instance; window_rows is the raw (T, 5) feature window, T <= tau."""
    fm = list(weights.feature_means)
    fs = list(weights.feature_stds)
    x = [[(window_rows[t][i] - fm[i]) / fs[i] for i in range(5)]
         for t in range(len(window_rows))]
    for block in weights.blocks:
        w1 = block.conv1.weights.tolist()
        b1 = block.conv1.bias.tolist()
        w2 = block.conv2.weights.tolist()
        b2 = block.conv2.bias.tolist()
        h = _relu_rows(conv_oracle(x, w1, b1, block.conv1.kernel_size,
                                   block.conv1.dilation))
        h = _relu_rows(conv_oracle(h, w2, b2, block.conv2.kernel_size,
                                   block.conv2.dilation))
        if block.projection_weights is not None:
            pw = block.projection_weights.tolist()
            pb = block.projection_bias.tolist()
            res = []
            for t in range(len(x)):
                res.append([pb[o] + sum(pw[o][i] * x[t][i]
                                        for i in range(len(x[t])))
                            for o in range(len(pb))])
        else:
            res = x
        x = [[max(hv + rv, 0.0) for hv, rv in zip(hrow, rrow)]
             for hrow, rrow in zip(h, res)]
    phi = x[-1]
    cm = list(weights.context_means)
    cs = list(weights.context_stds)
    ctx = [(context_pair[i] - cm[i]) / cs[i] for i in range(2)]
    hw = weights.head_weights.tolist()
    y = weights.head_bias
    for i, v in enumerate(phi):
        y += hw[i] * v
    for i, v in enumerate(ctx):
        y += hw[len(phi) + i] * v
    power = weights.target_mean + weights.target_std * y
    return max(power, weights.clamp_floor_w)


# ---------------------------------------------------------------------------
# Brute-force tail statistics
# ---------------------------------------------------------------------------

def var_oracle(samples, nu):
    s = sorted(samples)
    idx = math.ceil(nu * len(s)) - 1
    if idx < 0:
        idx = 0
    if idx > len(s) - 1:
        idx = len(s) - 1
    return s[idx]


def cvar_oracle(samples, nu):
    """Sort, pick the quantile, average the excess over the tail mass."""
    v = var_oracle(samples, nu)
    total = 0.0
    for x in samples:
        if x > v:
            total += x - v
    return v + total / ((1.0 - nu) * len(samples))


# ---------------------------------------------------------------------------
# Grid shortest path (uniform-cost search, no heuristic)
# ---------------------------------------------------------------------------

def dijkstra_cost(occupied, start, goal):
    """Exact 8-connected shortest-path cost as (straights, diagonals).

    Same graph semantics as the planner: diagonal moves cost sqrt(2)
    and require both adjacent side cells to be free.
    """
    nx = len(occupied)
    ny = len(occupied[0])
    if occupied[start[0]][start[1]] or occupied[goal[0]][goal[1]]:
        return None
    dist = {start: (0, 0)}
    heap = [(0.0, start)]
    done = set()
    root2 = math.sqrt(2.0)
    while heap:
        d, cell = heapq.heappop(heap)
        if cell == goal:
            return dist[cell]
        if cell in done:
            continue
        done.add(cell)
        ci, cj = cell
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di == 0 and dj == 0:
                    continue
                ni, nj = ci + di, cj + dj
                if not (0 <= ni < nx and 0 <= nj < ny):
                    continue
                if occupied[ni][nj]:
                    continue
                diag = di != 0 and dj != 0
                if diag and (occupied[ci][nj] or occupied[ni][cj]):
                    continue
                ns, nd = dist[cell]
                cand = (ns + (0 if diag else 1), nd + (1 if diag else 0))
                val = cand[0] + root2 * cand[1]
                old = dist.get((ni, nj))
                if old is None or val < old[0] + root2 * old[1]:
                    dist[(ni, nj)] = cand
                    heapq.heappush(heap, (val, (ni, nj)))
    return None


# ---------------------------------------------------------------------------
# Dryden reference quantities
# ---------------------------------------------------------------------------

def dryden_reference(altitude, w20):
    """Intensities and length scales from the low-altitude formulas."""
    sigma_w = 0.1 * w20
    factor = (0.177 + 0.000823 * altitude) ** 0.4
    sigma_u = sigma_w / factor
    l_w = altitude
    l_u = altitude / (0.177 + 0.000823 * altitude) ** 1.2
    return {"sigma_u": sigma_u, "sigma_v": sigma_u, "sigma_w": sigma_w,
            "l_u": l_u, "l_v": l_u, "l_w": l_w}


def dryden_psd_u(freq_hz, sigma_u, l_u, speed):
    """One-sided longitudinal spectrum in (m/s)^2 per Hz."""
    tc = l_u / speed
    omega = 2.0 * math.pi * freq_hz
    # one-sided over rad/s is 2 sigma^2 tc / pi / (1 + (tc w)^2); per Hz x 2pi
    return (2.0 * sigma_u ** 2 * tc / math.pi / (1.0 + (tc * omega) ** 2)
            * 2.0 * math.pi)

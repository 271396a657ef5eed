"""Pure-Python numerical kernels.

Mirrors the compiled extension ``cptquit._kernels._core`` function for
function.  Selected at import time when the extension is unavailable; kept
readable but arithmetically identical (same summation orders) so that both
backends agree to float rounding.

Conventions shared by every kernel:

* A strategy tree on horizon T is a flat float array over lattice nodes
  (t, x), t = 0..T, x = -t, -t+2, .., t, stored at index
  t*(t+1)//2 + (x+t)//2.  Entry = probability of stopping at that node.
  The terminal layer t = T is treated as all ones regardless of content.
* Exit-state masses use a dense array of length 2T+1, index x + T.
* Tail vectors pack as one array of length 2H: first the H gain tails
  (decumulative mass at >= +n), then the H loss tails (mass at <= -n).
"""

from __future__ import annotations

import numpy as np

# ---------------------------------------------------------------------------
# probability weighting and rank-dependent valuation


def weight(p, delta):
    """Inverse-S probability weighting of a single probability.

    Arguments outside [0, 1] are clamped, which keeps penalized line
    searches well defined while they are still infeasible.
    """
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    a = p**delta
    b = (1.0 - p) ** delta
    return a / (a + b) ** (1.0 / delta)


def cpt_value_mass(mass, lo, ap, am, dp, dm, lam):
    """Prospect-theory value of an integer-supported distribution.

    mass[i] is the probability of state lo + i; the reference point is 0.
    Gains are aggregated from the best outcome downward, losses from the
    worst upward, each through its own weighting exponent.
    """
    n = len(mass)
    hi = lo + n - 1
    total = 0.0
    tail = 0.0
    wprev = 0.0
    for v in range(hi, 0, -1):
        i = v - lo
        if 0 <= i < n:
            tail += mass[i]
        w = weight(tail, dp)
        if w != wprev:
            total += (w - wprev) * float(v) ** ap
            wprev = w
    tail = 0.0
    wprev = 0.0
    for v in range(lo, 0):
        tail += mass[v - lo]
        w = weight(tail, dm)
        if w != wprev:
            total -= lam * (w - wprev) * float(-v) ** am
            wprev = w
    return total


# ---------------------------------------------------------------------------
# strategy trees: forward flow of mass


def forward_exit_mass(stop, T):
    """Exit-state mass array (length 2T+1) induced by a strategy tree."""
    mass = np.zeros(2 * T + 1)
    reach = [1.0]
    for t in range(T + 1):
        base = t * (t + 1) // 2
        if t == T:
            for j in range(t + 1):
                mass[2 * j] += reach[j]  # 2j - t + T = 2j at t = T
            break
        new = [0.0] * (t + 2)
        for j in range(t + 1):
            r = reach[j]
            if r == 0.0:
                continue
            s = stop[base + j]
            if s > 0.0:
                mass[2 * j - t + T] += r * s
            half = 0.5 * r * (1.0 - s)
            new[j] += half
            new[j + 1] += half
        reach = new
    return mass


def forward_node_flow(stop, T):
    """Per-node reach and exit probabilities for a strategy tree.

    Returns two flat arrays over the node indexing described in the module
    docstring: reach[k] = P(arrive at node k unstopped), exitp[k] = P(stop
    exactly there).
    """
    n_nodes = (T + 1) * (T + 2) // 2
    reach = np.zeros(n_nodes)
    exitp = np.zeros(n_nodes)
    reach[0] = 1.0
    for t in range(T + 1):
        base = t * (t + 1) // 2
        nxt = base + t + 1
        for j in range(t + 1):
            k = base + j
            r = reach[k]
            if r == 0.0:
                continue
            s = stop[k] if t < T else 1.0
            exitp[k] = r * s
            if t < T:
                half = 0.5 * r * (1.0 - s)
                reach[nxt + j] += half
                reach[nxt + j + 1] += half
    return reach, exitp


# ---------------------------------------------------------------------------
# tail-vector objective

# Each tail coordinate enters the valuation through exactly one weighted
# term coef * w(arg, delta) with arg either the tail itself or 1 - tail;
# ranks whose decision weight multiplies a certain outcome contribute a
# constant.  This makes single-coordinate probes O(1) in the search below.


def objective_terms(H, shift, ap, am, dp, dm, lam):
    """Per-coordinate contribution tables (coef, delta, flip, const)."""
    coef = np.zeros(2 * H)
    delta = np.zeros(2 * H)
    flip = np.zeros(2 * H, dtype=np.intp)
    const = 0.0
    for k in range(1, H + 1):  # gain tail x_k
        i = k - 1
        m = k + shift
        if m >= 1:
            coef[i] = float(m) ** ap - float(m - 1) ** ap
            delta[i] = dp
        else:  # shifted below the reference: enters as a loss rank
            mm = 1 - m
            coef[i] = -lam * (float(mm) ** am - float(mm - 1) ** am)
            delta[i] = dm
            flip[i] = 1
    for k in range(1, H + 1):  # loss tail y_k
        i = H + k - 1
        m = k - shift
        if m >= 1:
            coef[i] = -lam * (float(m) ** am - float(m - 1) ** am)
            delta[i] = dm
        else:  # shifted above the reference: enters as a gain rank
            mm = 1 - m
            coef[i] = float(mm) ** ap - float(mm - 1) ** ap
            delta[i] = dp
            flip[i] = 1
    if shift > H:
        for m in range(1, shift - H + 1):  # support floor above 0
            const += float(m) ** ap - float(m - 1) ** ap
    elif shift < -H:
        for m in range(1, -shift - H + 1):  # support ceiling below 0
            const -= lam * (float(m) ** am - float(m - 1) ** am)
    return coef, delta, flip, const


def objective_tails(xy, H, shift, ap, am, dp, dm, lam):
    """Prospect value of the law encoded by tail vectors, support moved by shift."""
    coef, delta, flip, const = objective_terms(H, shift, ap, am, dp, dm, lam)
    total = const
    for i in range(2 * H):
        arg = 1.0 - xy[i] if flip[i] else xy[i]
        total += coef[i] * weight(arg, delta[i])
    return total


# ---------------------------------------------------------------------------
# feasibility: tail-cone conditions plus the stopping-time certificate


def _embed_violation(x, y, H):
    """Total positive violation of the even-step embeddability inequalities.

    Runs the min-capped averaging recursion (H-1 smoothing passes of the
    cone |x| capped at the target potential) and sums how far each
    constrained interior state ends up above the admissible average.
    """
    if H < 2:
        return 0.0
    W = 2 * H + 1
    cap = [0.0] * W
    sufx = 0.0
    sufy = 0.0
    # cap[c] is the target potential at state c - H, built from tail sums
    for g in range(H, -1, -1):
        cap[g + H] = 2.0 * sufx + float(g)
        if g >= 1:
            cap[H - g] = 2.0 * sufy + float(g)
        if g >= 1:
            sufx += x[g - 1]
            sufy += y[g - 1]
    prev = [float(abs(c - H)) for c in range(W)]
    cur = [0.0] * W
    cur[0] = float(H)
    cur[W - 1] = float(H)
    for _ in range(H - 1):
        for c in range(1, W - 1):
            a = 0.5 * (prev[c - 1] + prev[c + 1])
            cc = cap[c]
            cur[c] = a if a < cc else cc
        prev, cur = cur, prev
    total = 0.0
    for c in range(2, W - 2 + 1, 2):
        resid = cap[c] - 0.5 * (prev[c - 1] + prev[c + 1])
        if resid > 0.0:
            total += resid
    return total


def constraint_violation(xy, H):
    """Total positive violation of the feasible cone for packed tails."""
    x = xy[:H]
    y = xy[H:]
    v = 0.0
    if x[0] > 1.0:
        v += x[0] - 1.0
    if y[0] > 1.0:
        v += y[0] - 1.0
    for i in range(H - 1):
        if x[i + 1] > x[i]:
            v += x[i + 1] - x[i]
        if y[i + 1] > y[i]:
            v += y[i + 1] - y[i]
    if x[H - 1] < 0.0:
        v += -x[H - 1]
    if y[H - 1] < 0.0:
        v += -y[H - 1]
    if x[0] + y[0] > 1.0:
        v += x[0] + y[0] - 1.0
    sx = 0.0
    sy = 0.0
    for i in range(H):
        sx += x[i]
        sy += y[i]
    v += abs(sx - sy)
    v += _embed_violation(x, y, H)
    return v


# ---------------------------------------------------------------------------
# penalized compass search over tail vectors


def _directions(H):
    """Probe directions: singles, neighbour trades, balanced cross moves."""
    dirs = []
    for i in range(2 * H):
        dirs.append((i, -1, 1.0, 0.0))
        dirs.append((i, -1, -1.0, 0.0))
    for i in range(H - 1):
        dirs.append((i, i + 1, 1.0, -1.0))
        dirs.append((i, i + 1, -1.0, 1.0))
    for i in range(H, 2 * H - 1):
        dirs.append((i, i + 1, 1.0, -1.0))
        dirs.append((i, i + 1, -1.0, 1.0))
    for i in range(H):
        dirs.append((i, H, 1.0, 1.0))
        dirs.append((i, H, -1.0, -1.0))
    for j in range(H + 1, 2 * H):
        dirs.append((0, j, 1.0, 1.0))
        dirs.append((0, j, -1.0, -1.0))
    return dirs


def pattern_search(
    xy0,
    H,
    shift,
    ap,
    am,
    dp,
    dm,
    lam,
    rho0,
    step0,
    step_tol,
    feas_tol,
    max_rounds,
    max_sweeps,
):
    """Penalized compass search maximizing the tail objective.

    Runs rounds of coordinate/pair probes with a shrinking step; after each
    round the exact penalty weight doubles if the incumbent still violates
    the constraints by more than feas_tol.  Only strictly improving probes
    are accepted, in a fixed direction order, so the result is a
    deterministic function of the inputs.

    Returns (point, objective, violation, evaluations, final_penalty).
    """
    p = np.array(xy0, dtype=float).copy()
    n = 2 * H
    coef, delta, flip, const = objective_terms(H, shift, ap, am, dp, dm, lam)

    def term(i, v):
        arg = 1.0 - v if flip[i] else v
        return coef[i] * weight(arg, delta[i])

    terms = [term(i, p[i]) for i in range(n)]
    obj = const
    for i in range(n):
        obj += terms[i]
    viol = constraint_violation(p, H)
    evals = 1
    rho = rho0
    dirs = _directions(H)
    for rnd in range(max_rounds):
        step = step0 if rnd == 0 else min(step0, 0.005)
        F = obj - rho * viol
        sweeps = 0
        while step >= step_tol and sweeps < max_sweeps:
            improved = False
            for i, j, si, sj in dirs:
                vi = p[i] + si * step
                ti = term(i, vi)
                tobj = obj - terms[i] + ti
                old_i = p[i]
                p[i] = vi
                if j >= 0:
                    vj = p[j] + sj * step
                    tj = term(j, vj)
                    tobj = tobj - terms[j] + tj
                    old_j = p[j]
                    p[j] = vj
                tv = constraint_violation(p, H)
                evals += 1
                tF = tobj - rho * tv
                if tF > F:
                    terms[i] = ti
                    if j >= 0:
                        terms[j] = tj
                    obj = tobj
                    viol = tv
                    F = tF
                    improved = True
                else:
                    p[i] = old_i
                    if j >= 0:
                        p[j] = old_j
            sweeps += 1
            if not improved:
                step *= 0.5
                # flush incremental drift at each refinement
                terms = [term(i, p[i]) for i in range(n)]
                obj = const
                for i in range(n):
                    obj += terms[i]
                viol = constraint_violation(p, H)
                F = obj - rho * viol
        terms = [term(i, p[i]) for i in range(n)]
        obj = const
        for i in range(n):
            obj += terms[i]
        viol = constraint_violation(p, H)
        if viol <= feas_tol:
            break
        rho *= 2.0
    return p, obj, viol, evals, rho


# ---------------------------------------------------------------------------
# brute-force oracles

# Interior nodes are enumerated latest layer first, states ascending within
# a layer; candidate k of the scan toggles bit/digit k of that ordering.


def interior_order(T):
    """(t, j) pairs for interior nodes, t descending then state ascending."""
    return [(t, j) for t in range(T - 1, -1, -1) for j in range(t + 1)]


def exhaustive_scan(T, ap, am, dp, dm, lam):
    """Best deterministic (0/1) strategy tree by full enumeration.

    Returns (value, bitmask over interior_order, candidate count); ties keep
    the lowest mask.
    """
    order = interior_order(T)
    n_int = len(order)
    n_nodes = (T + 1) * (T + 2) // 2
    stop = np.ones(n_nodes)
    count = 1 << n_int
    best = -np.inf
    best_mask = 0
    for mask in range(count):
        for k, (t, j) in enumerate(order):
            stop[t * (t + 1) // 2 + j] = float((mask >> k) & 1)
        mass = forward_exit_mass(stop, T)
        v = cpt_value_mass(mass, -T, ap, am, dp, dm, lam)
        if v > best:
            best = v
            best_mask = mask
    return best, best_mask, count


def _weight_arr(p, d):
    p = np.clip(p, 0.0, 1.0)
    a = p**d
    b = (1.0 - p) ** d
    denom = (a + b) ** (1.0 / d)
    return np.where(denom > 0.0, a / np.where(denom > 0.0, denom, 1.0), 0.0)


def _cpt_mass_arr(mass, lo, ap, am, dp, dm, lam):
    """Vectorized cpt_value_mass over axis 0 of a (n_candidates, states) array."""
    n = mass.shape[1]
    hi = lo + n - 1
    total = np.zeros(mass.shape[0])
    tail = np.zeros(mass.shape[0])
    wprev = np.zeros(mass.shape[0])
    for v in range(hi, 0, -1):
        i = v - lo
        if 0 <= i < n:
            tail += mass[:, i]
        w = _weight_arr(tail, dp)
        total += (w - wprev) * float(v) ** ap
        wprev = w
    tail[:] = 0.0
    wprev[:] = 0.0
    for v in range(lo, 0):
        tail += mass[:, v - lo]
        w = _weight_arr(tail, dm)
        total -= lam * (w - wprev) * float(-v) ** am
        wprev = w
    return total


def grid_scan(T, levels, ap, am, dp, dm, lam):
    """Best strategy tree with per-node stop probabilities on a uniform grid.

    Stop probabilities take values k/(levels-1); candidates are enumerated
    as integers in base `levels` over interior_order digits.  Returns
    (value, code, candidate count), ties keeping the lowest code.  The
    innermost digit is vectorized; results match the compiled scalar scan.
    """
    order = interior_order(T)
    n_int = len(order)
    n_nodes = (T + 1) * (T + 2) // 2
    count = levels**n_int
    grid = np.linspace(0.0, 1.0, levels)
    stop = np.ones(n_nodes)
    t0, j0 = order[0]
    k0 = t0 * (t0 + 1) // 2 + j0
    best = -np.inf
    best_code = 0
    outer_count = count // levels
    masses = np.empty((levels, 2 * T + 1))
    for outer in range(outer_count):
        rest = outer
        for k in range(1, n_int):
            t, j = order[k]
            stop[t * (t + 1) // 2 + j] = grid[rest % levels]
            rest //= levels
        for g in range(levels):
            stop[k0] = grid[g]
            masses[g] = forward_exit_mass(stop, T)
        vals = _cpt_mass_arr(masses, -T, ap, am, dp, dm, lam)
        g = int(np.argmax(vals))
        if vals[g] > best:
            best = float(vals[g])
            best_code = outer * levels + g
    return best, best_code, count


# ---------------------------------------------------------------------------
# Monte Carlo paths with a counter-based generator

_MASK = (1 << 64) - 1


def _mix64(z):
    """splitmix64 finalizer on a Python int."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _mix64_arr(z):
    z = (z + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(_MASK)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def simulate_paths(stop, T, n_paths, seed):
    """Exit-state counts from n_paths independent plays of a strategy tree.

    Draw u used at (path, event) comes from a counter-based hash of
    (seed, path, event), so results do not depend on evaluation order and
    reruns with the same seed are bit-identical.  Event 2t decides stopping
    at time t, event 2t+1 the coin flip.
    """
    stop = np.asarray(stop, dtype=float)
    counts = np.zeros(2 * T + 1, dtype=np.int64)
    ids = np.arange(n_paths, dtype=np.uint64)
    s0 = np.uint64(_mix64(seed & _MASK))
    x = np.zeros(n_paths, dtype=np.int64)
    alive = np.ones(n_paths, dtype=bool)
    with np.errstate(over="ignore"):
        h1 = _mix64_arr(ids ^ s0)
        for t in range(T + 1):
            idx = t * (t + 1) // 2 + (x + t) // 2
            sp = stop[idx] if t < T else np.ones(n_paths)
            u = _mix64_arr(h1 ^ (np.uint64(2 * t) * np.uint64(0x9E3779B97F4A7C15)))
            u01 = (u >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
            exiting = alive & (u01 < sp)
            if exiting.any():
                counts += np.bincount(x[exiting] + T, minlength=2 * T + 1)
            alive &= ~exiting
            if t < T:
                u = _mix64_arr(
                    h1 ^ (np.uint64(2 * t + 1) * np.uint64(0x9E3779B97F4A7C15))
                )
                u01 = (u >> np.uint64(11)).astype(np.float64) * (
                    1.0 / 9007199254740992.0
                )
                step = np.where(u01 < 0.5, 1, -1)
                x[alive] += step[alive]
            if not alive.any():
                break
    return counts

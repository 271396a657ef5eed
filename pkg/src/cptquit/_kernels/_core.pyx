# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels.

Mirrors ``cptquit._kernels._pyfallback`` function for function with the
same summation orders, so both backends agree to float rounding.  See the
fallback module for the shared array conventions.
"""

from libc.math cimport fabs, pow
from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef unsigned long long u64

cdef u64 _GOLDEN = <u64> 0x9E3779B97F4A7C15


cdef inline double _weight(double p, double delta) nogil:
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    cdef double a = pow(p, delta)
    cdef double b = pow(1.0 - p, delta)
    return a / pow(a + b, 1.0 / delta)


def weight(double p, double delta):
    """Inverse-S probability weighting of a single probability.

    Arguments outside [0, 1] are clamped, which keeps penalized line
    searches well defined while they are still infeasible.
    """
    return _weight(p, delta)


cdef double _cpt_mass(double* mass, int n, int lo, double ap, double am,
                      double dp, double dm, double lam) nogil:
    cdef int hi = lo + n - 1
    cdef double total = 0.0
    cdef double tail = 0.0
    cdef double wprev = 0.0
    cdef double w
    cdef int v, i
    for v in range(hi, 0, -1):
        i = v - lo
        if 0 <= i < n:
            tail += mass[i]
        w = _weight(tail, dp)
        if w != wprev:
            total += (w - wprev) * pow(<double> v, ap)
            wprev = w
    tail = 0.0
    wprev = 0.0
    for v in range(lo, 0):
        tail += mass[v - lo]
        w = _weight(tail, dm)
        if w != wprev:
            total -= lam * (w - wprev) * pow(<double> (-v), am)
            wprev = w
    return total


def cpt_value_mass(mass, int lo, double ap, double am, double dp, double dm,
                   double lam):
    """Prospect-theory value of an integer-supported distribution.

    mass[i] is the probability of state lo + i; the reference point is 0.
    Gains are aggregated from the best outcome downward, losses from the
    worst upward, each through its own weighting exponent.
    """
    cdef double[::1] m = np.ascontiguousarray(mass, dtype=np.float64)
    cdef int n = m.shape[0]
    if n == 0:
        return 0.0
    return _cpt_mass(&m[0], n, lo, ap, am, dp, dm, lam)


cdef void _forward_mass(double* stop, int T, double* mass, double* reach,
                        double* scratch) nogil:
    # reach and scratch must hold T + 2 doubles; mass holds 2T + 1
    cdef int t, j, base
    cdef double r, s, half
    cdef double* cur = reach
    cdef double* nxt = scratch
    cdef double* tmp
    for j in range(2 * T + 1):
        mass[j] = 0.0
    cur[0] = 1.0
    for t in range(T + 1):
        base = t * (t + 1) // 2
        if t == T:
            for j in range(t + 1):
                mass[2 * j] += cur[j]
            break
        for j in range(t + 2):
            nxt[j] = 0.0
        for j in range(t + 1):
            r = cur[j]
            if r == 0.0:
                continue
            s = stop[base + j]
            if s > 0.0:
                mass[2 * j - t + T] += r * s
            half = 0.5 * r * (1.0 - s)
            nxt[j] += half
            nxt[j + 1] += half
        tmp = cur
        cur = nxt
        nxt = tmp


def forward_exit_mass(stop, int T):
    """Exit-state mass array (length 2T+1) induced by a strategy tree."""
    cdef double[::1] s = np.ascontiguousarray(stop, dtype=np.float64)
    out = np.zeros(2 * T + 1)
    cdef double[::1] mass = out
    cdef double* reach = <double*> malloc(2 * (T + 2) * sizeof(double))
    if reach == NULL:
        raise MemoryError()
    try:
        _forward_mass(&s[0], T, &mass[0], reach, reach + (T + 2))
    finally:
        free(reach)
    return out


def forward_node_flow(stop, int T):
    """Per-node reach and exit probabilities for a strategy tree.

    Returns two flat arrays over the node indexing described in the
    fallback module docstring: reach[k] = P(arrive at node k unstopped),
    exitp[k] = P(stop exactly there).
    """
    cdef double[::1] sv = np.ascontiguousarray(stop, dtype=np.float64)
    cdef int n_nodes = (T + 1) * (T + 2) // 2
    reach_arr = np.zeros(n_nodes)
    exit_arr = np.zeros(n_nodes)
    cdef double[::1] reach = reach_arr
    cdef double[::1] exitp = exit_arr
    cdef int t, j, base, nxt, k
    cdef double r, s, half
    reach[0] = 1.0
    for t in range(T + 1):
        base = t * (t + 1) // 2
        nxt = base + t + 1
        for j in range(t + 1):
            k = base + j
            r = reach[k]
            if r == 0.0:
                continue
            s = sv[k] if t < T else 1.0
            exitp[k] = r * s
            if t < T:
                half = 0.5 * r * (1.0 - s)
                reach[nxt + j] += half
                reach[nxt + j + 1] += half
    return reach_arr, exit_arr


def objective_terms(int H, int shift, double ap, double am, double dp,
                    double dm, double lam):
    """Per-coordinate contribution tables (coef, delta, flip, const)."""
    coef = np.zeros(2 * H)
    delta = np.zeros(2 * H)
    flip = np.zeros(2 * H, dtype=np.intp)
    cdef double[::1] cv = coef
    cdef double[::1] dv = delta
    cdef cnp.intp_t[::1] fv = flip
    cdef double const = 0.0
    cdef int k, i, m, mm
    for k in range(1, H + 1):  # gain tail x_k
        i = k - 1
        m = k + shift
        if m >= 1:
            cv[i] = pow(<double> m, ap) - pow(<double> (m - 1), ap)
            dv[i] = dp
        else:  # shifted below the reference: enters as a loss rank
            mm = 1 - m
            cv[i] = -lam * (pow(<double> mm, am) - pow(<double> (mm - 1), am))
            dv[i] = dm
            fv[i] = 1
    for k in range(1, H + 1):  # loss tail y_k
        i = H + k - 1
        m = k - shift
        if m >= 1:
            cv[i] = -lam * (pow(<double> m, am) - pow(<double> (m - 1), am))
            dv[i] = dm
        else:  # shifted above the reference: enters as a gain rank
            mm = 1 - m
            cv[i] = pow(<double> mm, ap) - pow(<double> (mm - 1), ap)
            dv[i] = dp
            fv[i] = 1
    if shift > H:
        for m in range(1, shift - H + 1):  # support floor above 0
            const += pow(<double> m, ap) - pow(<double> (m - 1), ap)
    elif shift < -H:
        for m in range(1, -shift - H + 1):  # support ceiling below 0
            const -= lam * (pow(<double> m, am) - pow(<double> (m - 1), am))
    return coef, delta, flip, const


def objective_tails(xy, int H, int shift, double ap, double am, double dp,
                    double dm, double lam):
    """Prospect value of the law encoded by tail vectors, support moved by shift."""
    coef, delta, flip, const = objective_terms(H, shift, ap, am, dp, dm, lam)
    cdef double[::1] xv = np.ascontiguousarray(xy, dtype=np.float64)
    cdef double[::1] cv = coef
    cdef double[::1] dv = delta
    cdef cnp.intp_t[::1] fv = flip
    cdef double total = const
    cdef double arg
    cdef int i
    for i in range(2 * H):
        arg = 1.0 - xv[i] if fv[i] else xv[i]
        total += cv[i] * _weight(arg, dv[i])
    return total


cdef double _embed_violation(double* x, double* y, int H, double* cap,
                             double* prev, double* cur) nogil:
    # cap, prev, cur must each hold 2H + 1 doubles
    cdef int W = 2 * H + 1
    cdef double sufx = 0.0
    cdef double sufy = 0.0
    cdef int g, c, it
    cdef double a, cc, resid, total
    cdef double* pp
    cdef double* qq
    cdef double* tmp
    if H < 2:
        return 0.0
    for g in range(H, -1, -1):
        cap[g + H] = 2.0 * sufx + <double> g
        if g >= 1:
            cap[H - g] = 2.0 * sufy + <double> g
        if g >= 1:
            sufx += x[g - 1]
            sufy += y[g - 1]
    for c in range(W):
        prev[c] = fabs(<double> (c - H))
    for c in range(W):
        cur[c] = 0.0
    cur[0] = <double> H
    cur[W - 1] = <double> H
    pp = prev
    qq = cur
    for it in range(H - 1):
        for c in range(1, W - 1):
            a = 0.5 * (pp[c - 1] + pp[c + 1])
            cc = cap[c]
            qq[c] = a if a < cc else cc
        tmp = pp
        pp = qq
        qq = tmp
    total = 0.0
    for c in range(2, W - 1, 2):
        resid = cap[c] - 0.5 * (pp[c - 1] + pp[c + 1])
        if resid > 0.0:
            total += resid
    return total


cdef double _violation(double* xy, int H, double* cap, double* prev,
                       double* cur) nogil:
    cdef double* x = xy
    cdef double* y = xy + H
    cdef double v = 0.0
    cdef double sx = 0.0
    cdef double sy = 0.0
    cdef int i
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
    for i in range(H):
        sx += x[i]
        sy += y[i]
    v += fabs(sx - sy)
    v += _embed_violation(x, y, H, cap, prev, cur)
    return v


def constraint_violation(xy, int H):
    """Total positive violation of the feasible cone for packed tails."""
    cdef double[::1] xv = np.ascontiguousarray(xy, dtype=np.float64)
    cdef int W = 2 * H + 1
    cdef double* buf = <double*> malloc(3 * W * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        return _violation(&xv[0], H, buf, buf + W, buf + 2 * W)
    finally:
        free(buf)


def interior_order(T):
    """(t, j) pairs for interior nodes, t descending then state ascending."""
    return [(t, j) for t in range(T - 1, -1, -1) for j in range(t + 1)]


cdef inline double _term(double v, double coef, double delta, cnp.intp_t flip) nogil:
    cdef double arg = 1.0 - v if flip else v
    return coef * _weight(arg, delta)


def pattern_search(xy0, int H, int shift, double ap, double am, double dp,
                   double dm, double lam, double rho0, double step0,
                   double step_tol, double feas_tol, int max_rounds,
                   int max_sweeps):
    """Penalized compass search maximizing the tail objective.

    Runs rounds of coordinate/pair probes with a shrinking step; after each
    round the exact penalty weight doubles if the incumbent still violates
    the constraints by more than feas_tol.  Only strictly improving probes
    are accepted, in a fixed direction order, so the result is a
    deterministic function of the inputs.

    Returns (point, objective, violation, evaluations, final_penalty).
    """
    p_arr = np.array(xy0, dtype=np.float64).copy()
    coef_arr, delta_arr, flip_arr, const_py = objective_terms(
        H, shift, ap, am, dp, dm, lam
    )
    cdef double[::1] p = p_arr
    cdef double[::1] coef = coef_arr
    cdef double[::1] delta = delta_arr
    cdef cnp.intp_t[::1] flip = flip_arr
    cdef double const = const_py
    cdef int n = 2 * H
    cdef int W = 2 * H + 1

    # direction table: singles, neighbour trades, balanced cross moves
    cdef int n_dirs = 2 * (2 * H) + 2 * (H - 1) * 2 + 2 * H + 2 * (H - 1)
    cdef int* di = <int*> malloc(n_dirs * sizeof(int))
    cdef int* dj = <int*> malloc(n_dirs * sizeof(int))
    cdef double* dsi = <double*> malloc(n_dirs * sizeof(double))
    cdef double* dsj = <double*> malloc(n_dirs * sizeof(double))
    cdef double* terms = <double*> malloc(n * sizeof(double))
    cdef double* buf = <double*> malloc(3 * W * sizeof(double))
    if (di == NULL or dj == NULL or dsi == NULL or dsj == NULL
            or terms == NULL or buf == NULL):
        free(di); free(dj); free(dsi); free(dsj); free(terms); free(buf)
        raise MemoryError()

    cdef int nd = 0
    cdef int i, j
    for i in range(2 * H):
        di[nd] = i; dj[nd] = -1; dsi[nd] = 1.0; dsj[nd] = 0.0; nd += 1
        di[nd] = i; dj[nd] = -1; dsi[nd] = -1.0; dsj[nd] = 0.0; nd += 1
    for i in range(H - 1):
        di[nd] = i; dj[nd] = i + 1; dsi[nd] = 1.0; dsj[nd] = -1.0; nd += 1
        di[nd] = i; dj[nd] = i + 1; dsi[nd] = -1.0; dsj[nd] = 1.0; nd += 1
    for i in range(H, 2 * H - 1):
        di[nd] = i; dj[nd] = i + 1; dsi[nd] = 1.0; dsj[nd] = -1.0; nd += 1
        di[nd] = i; dj[nd] = i + 1; dsi[nd] = -1.0; dsj[nd] = 1.0; nd += 1
    for i in range(H):
        di[nd] = i; dj[nd] = H; dsi[nd] = 1.0; dsj[nd] = 1.0; nd += 1
        di[nd] = i; dj[nd] = H; dsi[nd] = -1.0; dsj[nd] = -1.0; nd += 1
    for j in range(H + 1, 2 * H):
        di[nd] = 0; dj[nd] = j; dsi[nd] = 1.0; dsj[nd] = 1.0; nd += 1
        di[nd] = 0; dj[nd] = j; dsi[nd] = -1.0; dsj[nd] = -1.0; nd += 1

    cdef double obj, viol, rho, step, F, tobj, tF, tv
    cdef double vi, vj, ti, tj, old_i, old_j
    cdef long long evals
    cdef int rnd, d, sweeps
    cdef bint improved
    try:
        with nogil:
            for i in range(n):
                terms[i] = _term(p[i], coef[i], delta[i], flip[i])
            obj = const
            for i in range(n):
                obj += terms[i]
            viol = _violation(&p[0], H, buf, buf + W, buf + 2 * W)
            evals = 1
            rho = rho0
            for rnd in range(max_rounds):
                step = step0 if rnd == 0 else min(step0, 0.005)
                F = obj - rho * viol
                sweeps = 0
                while step >= step_tol and sweeps < max_sweeps:
                    improved = False
                    for d in range(nd):
                        i = di[d]
                        j = dj[d]
                        vi = p[i] + dsi[d] * step
                        ti = _term(vi, coef[i], delta[i], flip[i])
                        tobj = obj - terms[i] + ti
                        old_i = p[i]
                        p[i] = vi
                        tj = 0.0
                        old_j = 0.0
                        if j >= 0:
                            vj = p[j] + dsj[d] * step
                            tj = _term(vj, coef[j], delta[j], flip[j])
                            tobj = tobj - terms[j] + tj
                            old_j = p[j]
                            p[j] = vj
                        tv = _violation(&p[0], H, buf, buf + W, buf + 2 * W)
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
                        for i in range(n):
                            terms[i] = _term(p[i], coef[i], delta[i], flip[i])
                        obj = const
                        for i in range(n):
                            obj += terms[i]
                        viol = _violation(&p[0], H, buf, buf + W, buf + 2 * W)
                        F = obj - rho * viol
                for i in range(n):
                    terms[i] = _term(p[i], coef[i], delta[i], flip[i])
                obj = const
                for i in range(n):
                    obj += terms[i]
                viol = _violation(&p[0], H, buf, buf + W, buf + 2 * W)
                if viol <= feas_tol:
                    break
                rho *= 2.0
    finally:
        free(di); free(dj); free(dsi); free(dsj); free(terms); free(buf)
    return p_arr, obj, viol, int(evals), rho


def exhaustive_scan(int T, double ap, double am, double dp, double dm,
                    double lam):
    """Best deterministic (0/1) strategy tree by full enumeration.

    Returns (value, bitmask over interior_order, candidate count); ties keep
    the lowest mask.
    """
    order = interior_order(T)
    cdef int n_int = len(order)
    cdef int n_nodes = (T + 1) * (T + 2) // 2
    cdef int n_states = 2 * T + 1
    cdef long long count = 1LL << n_int
    cdef int* node_of = <int*> malloc(n_int * sizeof(int))
    cdef double* stop = <double*> malloc(n_nodes * sizeof(double))
    cdef double* mass = <double*> malloc(n_states * sizeof(double))
    cdef double* reach = <double*> malloc(2 * (T + 2) * sizeof(double))
    if node_of == NULL or stop == NULL or mass == NULL or reach == NULL:
        free(node_of); free(stop); free(mass); free(reach)
        raise MemoryError()
    cdef int k, t, j
    for k, (t, j) in enumerate(order):
        node_of[k] = t * (t + 1) // 2 + j
    cdef double best = -np.inf
    cdef long long best_mask = 0
    cdef long long mask
    cdef double v
    try:
        with nogil:
            for k in range(n_nodes):
                stop[k] = 1.0
            for mask in range(count):
                for k in range(n_int):
                    stop[node_of[k]] = <double> ((mask >> k) & 1)
                _forward_mass(stop, T, mass, reach, reach + (T + 2))
                v = _cpt_mass(mass, n_states, -T, ap, am, dp, dm, lam)
                if v > best:
                    best = v
                    best_mask = mask
    finally:
        free(node_of); free(stop); free(mass); free(reach)
    return best, int(best_mask), int(count)


def grid_scan(int T, int levels, double ap, double am, double dp, double dm,
              double lam):
    """Best strategy tree with per-node stop probabilities on a uniform grid.

    Stop probabilities take values k/(levels-1); candidates are enumerated
    as integers in base `levels` over interior_order digits.  Returns
    (value, code, candidate count), ties keeping the lowest code.
    """
    order = interior_order(T)
    cdef int n_int = len(order)
    cdef int n_nodes = (T + 1) * (T + 2) // 2
    cdef int n_states = 2 * T + 1
    cdef long long count = 1
    cdef int k, t, j
    for k in range(n_int):
        count *= levels
    grid_arr = np.linspace(0.0, 1.0, levels)
    cdef double[::1] grid = grid_arr
    cdef int* node_of = <int*> malloc(n_int * sizeof(int))
    cdef double* stop = <double*> malloc(n_nodes * sizeof(double))
    cdef double* mass = <double*> malloc(n_states * sizeof(double))
    cdef double* reach = <double*> malloc(2 * (T + 2) * sizeof(double))
    if node_of == NULL or stop == NULL or mass == NULL or reach == NULL:
        free(node_of); free(stop); free(mass); free(reach)
        raise MemoryError()
    for k, (t, j) in enumerate(order):
        node_of[k] = t * (t + 1) // 2 + j
    cdef double best = -np.inf
    cdef long long best_code = 0
    cdef long long code, rest
    cdef double v
    try:
        with nogil:
            for k in range(n_nodes):
                stop[k] = 1.0
            for code in range(count):
                rest = code
                for k in range(n_int):
                    stop[node_of[k]] = grid[rest % levels]
                    rest //= levels
                _forward_mass(stop, T, mass, reach, reach + (T + 2))
                v = _cpt_mass(mass, n_states, -T, ap, am, dp, dm, lam)
                if v > best:
                    best = v
                    best_code = code
    finally:
        free(node_of); free(stop); free(mass); free(reach)
    return best, int(best_code), int(count)


cdef inline u64 _mix64(u64 z) nogil:
    z = z + _GOLDEN
    z = (z ^ (z >> 30)) * (<u64> 0xBF58476D1CE4E5B9)
    z = (z ^ (z >> 27)) * (<u64> 0x94D049BB133111EB)
    return z ^ (z >> 31)


def simulate_paths(stop, int T, long long n_paths, seed):
    """Exit-state counts from n_paths independent plays of a strategy tree.

    Draw u used at (path, event) comes from a counter-based hash of
    (seed, path, event), so results do not depend on evaluation order and
    reruns with the same seed are bit-identical.  Event 2t decides stopping
    at time t, event 2t+1 the coin flip.
    """
    cdef double[::1] sv = np.ascontiguousarray(stop, dtype=np.float64)
    counts_arr = np.zeros(2 * T + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef u64 s0 = _mix64(<u64> (int(seed) & 0xFFFFFFFFFFFFFFFF))
    cdef u64 h1, u
    cdef double u01, sp
    cdef long long path
    cdef int t, x, idx
    with nogil:
        for path in range(n_paths):
            h1 = _mix64((<u64> path) ^ s0)
            x = 0
            for t in range(T + 1):
                idx = t * (t + 1) // 2 + (x + t) // 2
                sp = sv[idx] if t < T else 1.0
                u = _mix64(h1 ^ ((<u64> (2 * t)) * _GOLDEN))
                u01 = <double> (u >> 11) * (1.0 / 9007199254740992.0)
                if u01 < sp:
                    counts[x + T] += 1
                    break
                u = _mix64(h1 ^ ((<u64> (2 * t + 1)) * _GOLDEN))
                u01 = <double> (u >> 11) * (1.0 / 9007199254740992.0)
                if u01 < 0.5:
                    x += 1
                else:
                    x -= 1
    return counts_arr

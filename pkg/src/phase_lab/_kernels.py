"""Compiled inner loops.

The hot paths of the laboratory are solvability checks (rare-event
generation, lattice construction) and backtracking solution counts for
problems too large to enumerate. Problems are passed as an ``allowed`` table:
``allowed[i * d + a, j]`` is the bitmask of values of variable ``j`` that are
compatible with ``i = a``. Domains are bitmasks too, so ``d <= 62``.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True)
def lowest_bit(x):
    b = 0
    while not (x >> b) & 1:
        b += 1
    return b


@njit(cache=True)
def build_allowed(n, d, ng_i, ng_a, ng_j, ng_b, selected, out):
    """Fill ``out`` (shape ``(n*d, n)``) from the selected nogood indices."""
    full = (np.int64(1) << d) - 1
    out[:, :] = full
    for t in range(selected.shape[0]):
        g = selected[t]
        i = ng_i[g]
        a = ng_a[g]
        j = ng_j[g]
        b = ng_b[g]
        out[i * d + a, j] &= ~(np.int64(1) << b)
        out[j * d + b, i] &= ~(np.int64(1) << a)


@njit(cache=True)
def count_fc(n, d, allowed, active, cap):
    """Count consistent assignments of the active variables.

    Forward-checking depth-first enumeration with smallest-domain variable
    choice. Stops once ``cap`` solutions are found when ``cap > 0``.
    """
    k = 0
    for v in range(n):
        if active[v]:
            k += 1
    if k == 0:
        return 1
    full = (np.int64(1) << d) - 1
    doms = np.empty((k + 1, n), dtype=np.int64)
    for v in range(n):
        doms[0, v] = full
    var_at = np.empty(k, dtype=np.int64)
    vals = np.empty(k, dtype=np.int64)
    assigned = np.zeros(n, dtype=np.bool_)

    # choose first variable: all domains full, take the lowest active index
    first = -1
    for v in range(n):
        if active[v]:
            first = v
            break
    var_at[0] = first
    vals[0] = full
    assigned[first] = True
    depth = 0
    count = 0
    while depth >= 0:
        if vals[depth] == 0:
            assigned[var_at[depth]] = False
            depth -= 1
            continue
        v = var_at[depth]
        b = lowest_bit(vals[depth])
        vals[depth] &= vals[depth] - 1
        if depth == k - 1:
            count += 1
            if cap > 0 and count >= cap:
                return count
            continue
        row = v * d + b
        ok = True
        best = -1
        best_size = d + 1
        for j in range(n):
            if active[j] and not assigned[j]:
                nd = doms[depth, j] & allowed[row, j]
                if nd == 0:
                    ok = False
                    break
                doms[depth + 1, j] = nd
                s = popcount(nd)
                if s < best_size:
                    best_size = s
                    best = j
        if not ok:
            continue
        if depth + 1 == k - 1:
            # last variable: every remaining value is a solution
            count += best_size
            if cap > 0 and count >= cap:
                return cap
            continue
        depth += 1
        var_at[depth] = best
        vals[depth] = doms[depth, best]
        assigned[best] = True
    return count


@njit(cache=True)
def sample_until(n, d, m, ng_i, ng_a, ng_j, ng_b, mode, k, max_attempts, seed):
    """Draw uniform m-nogood problems until one satisfies the predicate.

    ``mode``: 0 any, 1 solvable, 2 unsolvable, 3 exactly k, 4 at least k
    solutions. Returns ``(selected, attempts, capped_count)``; ``attempts`` is
    negative when the budget ran out.
    """
    np.random.seed(seed)
    total = ng_i.shape[0]
    perm = np.arange(total)
    allowed = np.empty((n * d, n), dtype=np.int64)
    active = np.ones(n, dtype=np.bool_)
    if mode == 1 or mode == 2:
        cap = 1
    elif mode == 3:
        cap = k + 1
    elif mode == 4:
        cap = k
    else:
        cap = 0
    attempts = 0
    while attempts < max_attempts:
        attempts += 1
        for t in range(m):
            r = t + np.random.randint(0, total - t)
            tmp = perm[t]
            perm[t] = perm[r]
            perm[r] = tmp
        if mode == 0:
            return perm[:m].copy(), attempts, -1
        build_allowed(n, d, ng_i, ng_a, ng_j, ng_b, perm[:m], allowed)
        c = count_fc(n, d, allowed, active, cap)
        if mode == 1 and c >= 1:
            return perm[:m].copy(), attempts, c
        if mode == 2 and c == 0:
            return perm[:m].copy(), attempts, c
        if mode == 3 and c == k:
            return perm[:m].copy(), attempts, c
        if mode == 4 and c >= k:
            return perm[:m].copy(), attempts, c
    return perm[:m].copy(), -attempts, -1


@njit(cache=True)
def subset_lattice(n, d, allowed, prune):
    """Solvability of every induced subproblem, indexed by variable bitmask.

    Subsets are visited in increasing numeric order, which visits every
    proper subset before its supersets. With ``prune`` a subset having an
    unsolvable subset one element smaller is marked unsolvable without
    search; otherwise every subset is searched.
    """
    size = 1 << n
    solvable = np.ones(size, dtype=np.bool_)
    active = np.zeros(n, dtype=np.bool_)
    searched = 0
    for s in range(size):
        if prune:
            dead = False
            for v in range(n):
                if (s >> v) & 1 and not solvable[s ^ (1 << v)]:
                    dead = True
                    break
            if dead:
                solvable[s] = False
                continue
        for v in range(n):
            active[v] = (s >> v) & 1
        searched += 1
        solvable[s] = count_fc(n, d, allowed, active, 1) >= 1
    return solvable, searched

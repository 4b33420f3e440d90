"""Pure-Python depth-first search for ``W r = target`` with ``sum(r) = M``.

Each level of the search picks one pass; column indices are non-decreasing
along a branch so every multiset of columns is visited once, and the first
solution found is the one whose sorted pass list is lexicographically
smallest.  Status codes: 0 found, 1 infeasible, 2 node budget exhausted.
"""
import numpy as np


def dfs_solve(cols, sufmax, target, negmask, N, M, budget):
    cols = [list(map(int, row)) for row in np.asarray(cols)]
    sufmax = [list(map(int, row)) for row in np.asarray(sufmax)]
    rem = [int(x) for x in target]
    neg = [j for j, flag in enumerate(negmask) if flag]
    ncol = len(cols)
    d = len(rem)
    rng = range(d)
    picks = [-1] * M
    nxt = [0] * (M + 1)
    level = 0
    nodes = 0

    while True:
        if level == M:
            if not any(rem):
                return 0, np.array(picks, dtype=np.int64), nodes
            level -= 1
            col = cols[picks[level]]
            for j in rng:
                rem[j] += col[j]
            continue

        k = M - level
        found = -1
        if sum(rem[j] for j in neg) <= k * N:
            n = nxt[level]
            while n < ncol:
                cap = sufmax[n]
                if any(rem[j] > k * cap[j] for j in rng):
                    break
                col = cols[n]
                if all(col[j] <= rem[j] for j in rng):
                    found = n
                    break
                n += 1

        if found >= 0:
            nodes += 1
            if nodes > budget:
                return 2, np.array(picks, dtype=np.int64), nodes
            col = cols[found]
            for j in rng:
                rem[j] -= col[j]
            picks[level] = found
            nxt[level] = found + 1
            level += 1
            nxt[level] = found
        else:
            if level == 0:
                return 1, np.array(picks, dtype=np.int64), nodes
            level -= 1
            col = cols[picks[level]]
            for j in rng:
                rem[j] += col[j]

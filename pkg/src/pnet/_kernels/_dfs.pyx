# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled depth-first search for ``W r = target`` with ``sum(r) = M``.

Mirrors ``_dfs_py.dfs_solve`` step for step, including the node count.
"""
import numpy as np


def dfs_solve(const long long[:, ::1] cols,
              const long long[:, ::1] sufmax,
              const long long[::1] target,
              const unsigned char[::1] negmask,
              long long N, long long M, long long budget):
    cdef Py_ssize_t ncol = cols.shape[0]
    cdef Py_ssize_t d = cols.shape[1]
    cdef Py_ssize_t j
    cdef long long level = 0, k, n, found, nodes = 0, negsum
    cdef bint bad, fits, done

    picks = np.full(M, -1, dtype=np.int64)
    nxt_arr = np.zeros(M + 1, dtype=np.int64)
    rem_arr = np.array(target, dtype=np.int64, copy=True)
    cdef long long[::1] pk = picks
    cdef long long[::1] nxt = nxt_arr
    cdef long long[::1] rem = rem_arr

    while True:
        if level == M:
            done = True
            for j in range(d):
                if rem[j] != 0:
                    done = False
                    break
            if done:
                return 0, picks, nodes
            level -= 1
            n = pk[level]
            for j in range(d):
                rem[j] += cols[n, j]
            continue

        k = M - level
        found = -1
        negsum = 0
        for j in range(d):
            if negmask[j]:
                negsum += rem[j]
        if negsum <= k * N:
            n = nxt[level]
            while n < ncol:
                bad = False
                for j in range(d):
                    if rem[j] > k * sufmax[n, j]:
                        bad = True
                        break
                if bad:
                    break
                fits = True
                for j in range(d):
                    if cols[n, j] > rem[j]:
                        fits = False
                        break
                if fits:
                    found = n
                    break
                n += 1

        if found >= 0:
            nodes += 1
            if nodes > budget:
                return 2, picks, nodes
            for j in range(d):
                rem[j] -= cols[found, j]
            pk[level] = found
            nxt[level] = found + 1
            level += 1
            nxt[level] = found
        else:
            if level == 0:
                return 1, picks, nodes
            level -= 1
            n = pk[level]
            for j in range(d):
                rem[j] += cols[n, j]

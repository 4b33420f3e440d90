"""Compare the compiled and pure-Python schedule search kernels.

Each instance runs both kernels on identical inputs with the same node
budget; the table reports wall time, nodes visited and throughput.  The
odd-first-mode instances are infeasible by parity, so the search must
exhaust (or hit the budget) instead of stopping at the first hit.

    python benchmarks/bench_solver.py [--budget N] [--repeat R]
"""
import argparse
import time

from pnet import _kernels
from pnet.design import OmegaSet, build_omega_set, kernel_inputs


def instance(alpha, N, M, keep=None):
    full = build_omega_set(alpha, N)
    cols = full.columns if keep is None else tuple(c for c in full.columns if keep(c))
    return OmegaSet(full.alpha, N, cols, None), M


def odd_first(col):
    return col[0] % 2 == 1


INSTANCES = {
    "feasible d=5 N=10 M=4": instance(["1"] * 5, 10, 4),
    "feasible mixed d=5 N=6 M=6": instance(["3", "-1", "-1", "-1", "-1"], 6, 6),
    "parity-infeasible d=4 N=8 M=5": instance(["1"] * 4, 8, 5, odd_first),
    "parity-infeasible d=4 N=8 M=7": instance(["1"] * 4, 8, 7, odd_first),
}


def best_time(kernel, args, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = kernel(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--budget", type=int, default=300_000, help="node budget per run")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    if _kernels.compiled_dfs_solve is None:
        raise SystemExit("compiled kernel not built; reinstall with Cython available")
    status_name = {0: "found", 1: "infeasible", 2: "budget"}
    print(f"{'instance':34s} {'|W|':>5s} {'status':>10s} {'nodes':>9s} "
          f"{'cython s':>10s} {'python s':>10s} {'speedup':>8s}")
    for name, (ws, M) in INSTANCES.items():
        call = (*kernel_inputs(ws, M), ws.N, M, args.budget)
        t_c, (st_c, picks_c, nodes_c) = best_time(_kernels.compiled_dfs_solve, call, args.repeat)
        t_p, (st_p, picks_p, nodes_p) = best_time(_kernels.python_dfs_solve, call, args.repeat)
        assert (st_c, nodes_c, list(picks_c)) == (st_p, nodes_p, list(picks_p)), name
        print(f"{name:34s} {len(ws):5d} {status_name[st_c]:>10s} {nodes_c:9d} "
              f"{t_c:10.5f} {t_p:10.5f} {t_p / max(t_c, 1e-9):7.0f}x")


if __name__ == "__main__":
    main()

"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--n 100000] [--repeat 5]

LDPC kernels have a vectorized numpy twin; the NR text scans fall back to
the same loop run by the interpreter (``py_func``), timed on a small input.
"""

import argparse
import time

import numpy as np

from nrlab import kernels
from nrlab._accel import HAVE_NUMBA
from nrlab.ldpc import ERASED, build_regular_graph


def best_of(fn, repeat):
    fn()                                  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def ldpc_cases(n, seed):
    g = build_regular_graph(n, 5, 100, seed)
    rng = np.random.default_rng(seed)
    ce, dv = g.check_edges, g.dv
    word = np.where(rng.random(n) < 0.03, ERASED, 0).astype(np.uint8)
    init = word.copy()
    init[rng.random(n) < 0.001] = 1
    fixed = word != ERASED
    v2c = np.repeat(init, dv)
    llr = rng.normal(4.0, 2.0, n)
    lv2c = np.repeat(llr, dv)
    active = rng.random(n) < 0.2
    av2c = np.repeat(active, dv)
    return {
        "peel_round": (lambda f: f(word.copy(), ce, dv)),
        "gen_iteration": (lambda f: f(init, fixed, v2c, ce, dv, 1, 4)),
        "bp_iteration": (lambda f: f(llr, lv2c, ce, dv, 30.0)),
        "bec_flood": (lambda f: f(active, av2c, ce, dv)),
    }


def nr_case():
    from nrlab import data, nr_kernels as nk
    from nrlab.nr_text import get_model

    d = data.desk_dictionary()
    model = get_model(d, data.desk_lexicon())
    rng = np.random.default_rng(0)
    rows = rng.integers(0, d.size, size=(20000, 6)).astype(np.int64)
    t = model.word_trie
    args = (rows, model.pat_ptr, model.pat_sym, model.all_alnum, model.lead_len,
            model.trail_len, t.trans, t.terminal, True)
    return nk.bridge_filter, args


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is disabled or missing; nothing to compare")
    print(f"{'kernel':<16}{'numba ms':>12}{'numpy ms':>12}{'speed-up':>10}")
    for name, call in ldpc_cases(a.n, a.seed).items():
        t_nb = best_of(lambda: call(getattr(kernels, name + "_nb")), a.repeat)
        t_np = best_of(lambda: call(getattr(kernels, name + "_np")), a.repeat)
        print(f"{name:<16}{t_nb * 1e3:>12.2f}{t_np * 1e3:>12.2f}{t_np / t_nb:>9.1f}x")
    fn, args = nr_case()
    t_nb = best_of(lambda: fn(*args), a.repeat)
    t_py = best_of(lambda: fn.py_func(*args), 1)
    print(f"{'bridge_filter':<16}{t_nb * 1e3:>12.2f}{t_py * 1e3:>12.2f}{t_py / t_nb:>9.1f}x"
          "  (python loop)")


if __name__ == "__main__":
    main()

"""Acceptance criteria, one test per criterion, each reporting a pass/fail line.

The lines are collected in ``conftest.ACCEPTANCE_LINES`` and printed in the
terminal summary (and to stdout with ``-s``).
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from nrlab import cli, data
from nrlab.decoders import GenDecoderConfig, bp_decode, generalized_decode, peel_decode
from nrlab.density import (IterDEParams, SeqDEParams, classic_node_erasure, classic_threshold,
                           iter_de_run, iter_threshold, map_info_erasure_rate, noise_entropy,
                           noise_reduction, segment_model_simulate, seq_de_initial, seq_de_run,
                           seq_de_step, seq_threshold)
from nrlab.ldpc import ERASED, bec, bsc, build_regular_graph, encode, to_systematic, transmit
from nrlab.lzw import compress, decompress
from nrlab.nr_text import WindowParams, enumerate_candidates, nr_decode
from nrlab.rng import derive_seed, trial_rng
from nrlab.soft import SoftEstimatorSpec, bsc_nr_ldpc, channel_llr

SEQ = SeqDEParams(5, 100, 1, 4, 0.2, 0.143, 0.0003)
ITER = IterDEParams(5, 100, 120, 30, 0.9, 0.2)


def report(label, ok, detail):
    line = f"criterion {label}: {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------


def test_criterion_1_classic_threshold():
    t0 = time.perf_counter()
    classic = classic_threshold(5, 100).eps_star
    via_iter = iter_threshold(ITER.with_p(0.0)).eps_star
    dt = time.perf_counter() - t0
    ok = abs(classic - 0.036) <= 0.001 and abs(via_iter - 0.036) <= 0.001 and dt < 1.0
    report(1, ok, f"classic eps*={classic:.5f}, p=0 segment recursion eps*={via_iter:.5f}, "
                  f"target 0.036 +- 0.001, {dt:.2f} s")


def test_criterion_2_sequential_scheme():
    t0 = time.perf_counter()
    run = seq_de_run(SEQ, tol=1e-9, t_max=2000)
    last = run.trajectory[-1]
    th = seq_threshold(SEQ).eps_star
    dt = time.perf_counter() - t0
    ok = run.success and last.alpha + last.beta < 1e-9 and last.t <= 2000 and th >= 0.2 and dt < 5
    report(2, ok, f"alpha+beta={last.alpha + last.beta:.2e} at t={last.t}, eps*={th:.5f} (>= 0.2), "
                  f"{dt:.2f} s")


def test_criterion_3_iterative_threshold():
    t0 = time.perf_counter()
    ps = [round(0.1 * i, 1) for i in range(11)]
    th = [iter_threshold(ITER.with_p(p)).eps_star for p in ps]
    dt = time.perf_counter() - t0
    at09 = th[ps.index(0.9)]
    monotone = all(b >= a for a, b in zip(th, th[1:]))
    ok = abs(at09 - 0.224) <= 0.005 and monotone and dt < 30
    report(3, ok, f"eps*(p=0.9)={at09:.4f} (target 0.224 +- 0.005), monotone={monotone}, "
                  f"sweep " + " ".join(f"{x:.4f}" for x in th) + f", {dt:.1f} s")


def test_criterion_4_iterative_convergence():
    t0 = time.perf_counter()
    run = iter_de_run(ITER, tol=1e-6, t_max=100)
    dt = time.perf_counter() - t0
    first = next((s.t for s in run.trajectory if s.eps < 1e-6), None)
    eps10 = next((s.eps for s in run.trajectory if s.t == 10), run.trajectory[-1].eps)
    ok = first is not None and first <= 10 and dt < 1
    report(4, ok, f"eps_t < 1e-6 first at t={first} (need <= 10), eps_10={eps10:.2e}, {dt:.3f} s")


TABLE_II = [  # eps, delta, rho, E_NR, reduction %
    (0.05, 8.22e-2, 9.18e-5, 4.18e-3, 91.6),
    (0.10, 8.67e-2, 1.83e-4, 8.92e-3, 91.1),
    (0.15, 9.19e-2, 1.82e-4, 1.42e-2, 90.6),
    (0.20, 9.76e-2, 3.61e-4, 2.04e-2, 89.8),
    (0.25, 1.05e-1, 4.48e-4, 2.76e-2, 89.0),
    (0.30, 1.12e-1, 7.11e-4, 3.60e-2, 88.0),
]


def _sig3(x):
    return float(f"{x:.3g}")


def test_criterion_5_table_formulas():
    t0 = time.perf_counter()
    misses, spans = [], []
    for eps, delta, rho, e_ref, red_ref in TABLE_II:
        e = noise_entropy(eps, delta, rho)
        red = 100 * noise_reduction(eps, e)
        if _sig3(e) != e_ref or abs(red - red_ref) > 0.1 + 1e-9:
            # E_NR over the rounding intervals of the 3-figure delta and rho inputs
            grid = [noise_entropy(eps, delta + dd, rho + dr)
                    for dd in np.linspace(-0.5, 0.5, 11) * 10 ** (math.floor(math.log10(delta)) - 2)
                    for dr in np.linspace(-0.5, 0.5, 11) * 10 ** (math.floor(math.log10(rho)) - 2)]
            spans.append(f"eps={eps}: inputs within their rounding give E_NR in "
                         f"[{min(grid):.5f}, {max(grid):.5f}]")
            misses.append(f"eps={eps}: E_NR={e:.4e} (3 s.f. {_sig3(e):.3g} vs {e_ref:.3g}), "
                          f"reduction {red:.2f}% vs {red_ref}%")
    dt = time.perf_counter() - t0
    ok = not misses and dt < 1
    detail = "all six rows match" if not misses else "; ".join(misses + spans)
    report(5, ok, f"{detail}, {dt:.3f} s")


def test_criterion_6_p0_mapping():
    v = map_info_erasure_rate(0.0976, 0.95)
    report(6, round(v, 3) == 0.143, f"p0 = {v:.5f} -> {round(v, 3)}")


# ---------------------------------------------------------------------------
# criterion 7: simulation against analysis


CRIT7_START = []


def _crit7_clock():
    if not CRIT7_START:
        CRIT7_START.append(time.perf_counter())
    return CRIT7_START[0]


def test_criterion_7a_peeling_vs_de():
    _crit7_clock()
    n, eps0 = 10 ** 5, 0.03
    g = build_regular_graph(n, 5, 100, seed=0)
    w = transmit(np.zeros(n, np.uint8), bec(eps0), seed=0)
    out = peel_decode(g, w, record=True)
    h = np.array(out.history)
    # node-level DE evaluated at the realized channel erasure rate
    pred = classic_node_erasure(h[0], 5, 100, len(h) - 1)
    sigma = np.sqrt(np.maximum(pred * (1 - pred), 1e-300) / n)
    z = np.where(pred > 0, (h - pred) / sigma, 0.0)
    worst = int(np.argmax(np.abs(z)))
    ok = bool(np.all(np.abs(h - pred) <= 3 * sigma))
    report("7a", ok, f"{len(h) - 1} rounds, max |z|={abs(z[worst]):.2f} at round {worst} "
                     f"(channel eps={h[0]:.5f})")


def test_criterion_7b_generalized_one_step():
    _crit7_clock()
    n = 10 ** 6
    g = build_regular_graph(n, 5, 100, seed=0)
    u = trial_rng(0, "gen-one-step").random(n)
    word = np.zeros(n, np.uint8)
    word[u < SEQ.beta0] = ERASED
    word[(u >= SEQ.beta0) & (u < SEQ.beta0 + SEQ.alpha0)] = 1
    fixed = u >= SEQ.eps0
    out = generalized_decode(g, word, fixed, GenDecoderConfig(1, 4, 1),
                             truth=np.zeros(n, np.uint8), record=True)
    alpha_emp, beta_emp = out.history[1]
    pred = seq_de_step(seq_de_initial(SEQ), SEQ)
    za = (alpha_emp - pred.alpha) / math.sqrt(pred.alpha * (1 - pred.alpha) / n)
    zb = (beta_emp - pred.beta) / math.sqrt(pred.beta * (1 - pred.beta) / n)
    ok = abs(za) <= 3 and abs(zb) <= 3
    report("7b", ok, f"alpha_1 {alpha_emp:.3e} vs {pred.alpha:.3e} (z={za:.2f}), "
                     f"beta_1 {beta_emp:.5f} vs {pred.beta:.5f} (z={zb:.2f})")


def test_criterion_7c_segment_model():
    t0 = _crit7_clock()
    n = 1_200_000
    sim = segment_model_simulate(ITER, n, seed=0, t_max=10, trials=24, count_mode="message")
    traj = iter_de_run(ITER, t_max=10).trajectory
    de = np.array([s.eps for s in traj])
    m = min(len(de), len(sim.eps), 11)
    dev = np.abs(sim.eps[:m] - de[:m])
    total = time.perf_counter() - t0
    ok = bool(dev.max() <= 0.002) and total < 300
    report("7c", ok, f"max |eps_sim - eps_DE| = {dev.max():.5f} over t <= {m - 1} (24 trials); "
                     f"criterion 7 total {total:.0f} s")


# ---------------------------------------------------------------------------
# criterion 8: NR text decoder on the desk corpus

NR_EPS = (0.05, 0.10, 0.15, 0.20, 0.25, 0.30)
NR_BITS = 1_000_000


@pytest.fixture(scope="module")
def heldout_bits(desk_dict):
    return compress(data.desk_heldout(), desk_dict).bits


def test_criterion_8_nr_decoder(heldout_bits, desk_dict, desk_lex):
    t0 = time.perf_counter()
    ell = desk_dict.ell
    truth = heldout_bits[: -(-NR_BITS // ell) * ell]
    rows, failures = [], []
    oracle_windows = oracle_bad = 0
    for eps in NR_EPS:
        rng = trial_rng(0, f"criterion-8:{eps!r}")
        w = truth.copy()
        w[rng.random(w.size) < eps] = ERASED
        traced = eps == NR_EPS[0]
        res = nr_decode(w, desk_dict, desk_lex, WindowParams(), truth=truth, trace=traced)
        out, rep = res[0], res[1]
        keep = w != ERASED
        violations = int(np.count_nonzero(out[keep] != w[keep]))
        e_nr = rep.e_nr
        rows.append(f"eps={eps}: eps_hat={rep.eps_hat:.5f} delta={rep.delta_hat:.4f} "
                    f"rho={rep.rho_hat:.2e} E_NR={e_nr:.5f} (nominal eps {'>' if eps > e_nr else '<='} "
                    f"E_NR) violations={violations}")
        if violations or not rep.rho_hat < 1e-2 or not e_nr < rep.eps_hat:
            failures.append(eps)
        if traced:
            for s in res[2].joined:
                if s.t > 10:
                    continue
                oracle_windows += 1
                ref = enumerate_candidates(w[s.start * ell:(s.start + s.size) * ell], desk_dict,
                                           desk_lex, 20, s.start)
                if s.capped or ref.as_set() != s.as_set():
                    oracle_bad += 1
    dt = time.perf_counter() - t0
    ok = (not failures and oracle_windows >= 10_000 and oracle_bad == 0 and dt < 600
          and truth.size >= 10 ** 6 and len(data.desk_heldout()) >= 2 * 10 ** 6)
    report(8, ok, f"{truth.size} bits per eps from {len(data.desk_heldout())} held-out bytes; "
                  + "; ".join(rows)
                  + f"; oracle {oracle_windows - oracle_bad}/{oracle_windows} windows with t <= 10 "
                    f"match brute force; {dt:.0f} s")


# ---------------------------------------------------------------------------
# criterion 9: soft pipeline on a rate-0.95 code


@pytest.fixture(scope="module")
def code_4320():
    return to_systematic(build_regular_graph(4320, 4, 80, seed=0))


def _sign_test_p(wins, losses):
    """One-sided P(X >= wins) for X ~ Bin(wins + losses, 1/2)."""
    m = wins + losses
    if m == 0:
        return 1.0
    return sum(math.comb(m, i) for i in range(wins, m + 1)) / 2 ** m


def test_criterion_9_soft_pipeline(code_4320):
    t0 = time.perf_counter()
    code = code_4320
    # bit-exactness of the uninformative estimator
    exact = 0
    for i in range(100):
        rng = np.random.default_rng(derive_seed(0, "criterion-9-exact", i))
        cw = encode(code, rng.integers(0, 2, code.k, dtype=np.uint8))
        rx = transmit(cw, bsc(0.008), rng)
        a = bp_decode(code.graph, channel_llr(rx, 0.008).values, 50)
        b = bsc_nr_ldpc(rx, code, SoftEstimatorSpec(), 0.008, cw[code.info_positions], 50)
        exact += np.array_equal(a.word, b.word) and a.iterations_used == b.iterations_used
    parts, ok = [f"uninformative bit-exact {exact}/100"], exact == 100
    spec = SoftEstimatorSpec("oracle", 0.99)
    for p in (0.004, 0.008, 0.012):
        ld = nr = wins = losses = 0
        for i in range(500):
            rng = np.random.default_rng(derive_seed(0, f"criterion-9:{p!r}", i))
            cw = encode(code, rng.integers(0, 2, code.k, dtype=np.uint8))
            rx = transmit(cw, bsc(p), rng)
            ref = bp_decode(code.graph, channel_llr(rx, p).values, 50)
            a = ref.converged and np.array_equal(ref.word, cw)
            out = bsc_nr_ldpc(rx, code, spec, p, cw[code.info_positions], 50)
            b = out.converged and np.array_equal(out.word, cw)
            ld += a
            nr += b
            wins += b and not a
            losses += a and not b
        p_worse = _sign_test_p(losses, wins)      # evidence that LDPC-alone is better
        p_better = _sign_test_p(wins, losses)
        ok = ok and nr >= ld and p_worse >= 0.05
        parts.append(f"p={p}: LDPC {ld}/500, NR-LDPC {nr}/500, discordant +{wins}/-{losses}, "
                     f"sign-test p(NR better)={p_better:.1e}")
    dt = time.perf_counter() - t0
    ok = ok and dt < 600
    report(9, ok, f"(n,k)=({code.n},{code.k}); " + "; ".join(parts) + f"; {dt:.0f} s")


# ---------------------------------------------------------------------------
# criterion 10: round trip and determinism


def test_criterion_10_round_trip_and_determinism(desk_dict, tmp_path):
    corpus = data.desk_train() + data.desk_heldout()
    c = compress(corpus, desk_dict)
    rt = decompress(c.bits, desk_dict) == corpus
    args = ["sim-gen", "trials=6", "n=20000", "eps0=0.1,0.2"]
    assert cli.main([*args, "--out", str(tmp_path / "a")]) == 0
    assert cli.main([*args, "--out", str(tmp_path / "b"), "threads=1"]) == 0
    same = (tmp_path / "a" / "sim-gen.csv").read_bytes() == (tmp_path / "b" / "sim-gen.csv").read_bytes()
    report(10, rt and same, f"LZW round trip on {len(corpus)} bytes: {rt}; "
                            f"sim-gen CSV byte-identical on re-run: {same}")

"""``nrlab <experiment> --config <path> [--out <dir>] [--seed <u64>] [key=value ...]``

Overrides may also be written as ``--key value``.  Exit status: 0 success,
2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import bz2
import filecmp
import io
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import ConfigError, ExperimentConfig
from .rng import derive_seed, trial_rng

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


# ---------------------------------------------------------------------------
# CSV


def fmt(v) -> str:
    """Shortest round-trip text for floats, 1/0 for booleans, '' for None."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header: str, rows) -> None:
    buf = io.StringIO(newline="")
    buf.write(header + "\n")
    for r in rows:
        buf.write(",".join(fmt(v) for v in r) + "\n")
    path.write_bytes(buf.getvalue().encode("utf-8"))


class _ParamErrors:
    """Turn constructor-level ValueErrors into configuration errors."""

    def __enter__(self):
        return self

    def __exit__(self, et, ev, tb):
        if et is not None and issubclass(et, ValueError) and not issubclass(et, ConfigError):
            raise ConfigError(str(ev)) from None
        return False


def _map(cfg: ExperimentConfig, fn, items):
    """Trial-level map; results come back in input order."""
    items = list(items)
    if cfg.threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(cfg.threads) as ex:
        return list(ex.map(fn, items))


def _read_corpus(spec: str, which: str) -> bytes:
    from . import data

    if spec == "desk":
        return data.desk_train() if which == "train" else data.desk_heldout()
    p = Path(spec)
    try:
        raw = p.read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read corpus {spec}: {e.strerror}") from None
    return bz2.decompress(raw) if p.suffix == ".bz2" else raw


# ---------------------------------------------------------------------------
# experiments: each returns (file name, header, rows)


def exp_de_seq(cfg):
    from .density import SeqDEParams, seq_de_run

    with _ParamErrors():
        prms = [SeqDEParams(cfg["code.dv"], cfg["code.dc"], cfg["scheme.pi"], cfg["scheme.tau"],
                            e, p0, cfg["scheme.gamma0"])
                for p0 in cfg["scheme.p0"] for e in cfg["channel.eps0"]]
    rows = []
    for prm in prms:
        run = seq_de_run(prm, cfg["scheme.tol"], cfg["scheme.t_max"])
        last = run.trajectory[-1]
        print(f"eps0={prm.eps0} p0={prm.p0}: {'success' if run.success else 'stuck'} "
              f"after {last.t} iterations, alpha+beta={last.alpha + last.beta:.3g}")
        rows += [(prm.eps0, prm.p0, s.t, s.alpha, s.beta) for s in run.trajectory]
    return "de-seq.csv", "eps0,p0,t,alpha,beta", rows


def exp_de_iter(cfg):
    from .density import IterDEParams, iter_de_run

    with _ParamErrors():
        prms = [IterDEParams(cfg["code.dv"], cfg["code.dc"], cfg["scheme.l"], cfg["scheme.l_theta"],
                             p, e) for p in cfg["scheme.p_lucky"] for e in cfg["channel.eps0"]]
    rows = []
    for prm in prms:
        run = iter_de_run(prm, cfg["scheme.tol"], cfg["scheme.t_max"])
        last = run.trajectory[-1]
        print(f"eps0={prm.eps0} p={prm.p}: {'success' if run.success else 'stuck'} "
              f"after {last.t} iterations, eps={last.eps:.3g}")
        rows += [(prm.eps0, prm.p, s.t, s.eps, s.eps_prime, s.q, s.d) for s in run.trajectory]
    return "de-iter.csv", "eps0,p,t,eps,eps_prime,q,d", rows


def exp_threshold(cfg):
    from .density import (IterDEParams, SeqDEParams, classic_threshold, iter_threshold,
                          seq_threshold)

    scheme = cfg["scheme.scheme"]
    tol = cfg["scheme.bisect_tol"]
    dv, dc = cfg["code.dv"], cfg["code.dc"]
    with _ParamErrors():
        if scheme == "classic":
            jobs = [(None, lambda: classic_threshold(dv, dc, tol))]
        elif scheme == "seq":
            jobs = [(p0, (lambda prm: lambda: seq_threshold(prm, tol=tol))(
                SeqDEParams(dv, dc, cfg["scheme.pi"], cfg["scheme.tau"], 0.0, p0,
                            cfg["scheme.gamma0"]))) for p0 in cfg["scheme.p0"]]
        elif scheme == "iter":
            jobs = [(p, (lambda prm: lambda: iter_threshold(prm, tol=tol))(
                IterDEParams(dv, dc, cfg["scheme.l"], cfg["scheme.l_theta"], p, 0.0)))
                for p in cfg["scheme.p_lucky"]]
        else:
            raise ConfigError(f"scheme must be classic, seq or iter, got {scheme!r}")
    rows = []
    for param, job in jobs:
        r = job()
        print(f"{scheme} param_p={fmt(param) or '-'}: eps*={r.eps_star:.5f}")
        rows.append((param, r.eps_star, r.bracket[0], r.bracket[1]))
    return "threshold.csv", "param_p,eps_star,bracket_lo,bracket_hi", rows


def _graph(cfg):
    from .ldpc import build_regular_graph

    with _ParamErrors():
        return build_regular_graph(cfg["code.n"], cfg["code.dv"], cfg["code.dc"], cfg["code.seed"])


def _rate_summary(name, rate, recs, idx):
    ok = sum(1 for r in recs if r[idx])
    print(f"{name}={rate}: {ok}/{len(recs)} converged")


def exp_sim_peel(cfg):
    from .decoders import peel_decode
    from .ldpc import ERASED

    graph = _graph(cfg)
    trials = cfg["run.trials"]
    rows = []
    for eps in cfg["channel.eps0"]:
        def one(i, eps=eps):
            seed = derive_seed(cfg.seed, f"sim-peel:{eps!r}", i)
            w = np.zeros(graph.n, dtype=np.uint8)
            w[np.random.default_rng(seed).random(graph.n) < eps] = ERASED
            out = peel_decode(graph, w, cfg["code.max_iters"])
            return (eps, i, seed, out.converged, out.iterations_used, out.residual_erasures,
                    out.residual_erasures / graph.n)
        recs = _map(cfg, one, range(trials))
        _rate_summary("eps0", eps, recs, 3)
        rows += recs
    return ("sim-peel.csv",
            "eps0,trial,seed,converged,iterations,residual_erasures,residual_fraction", rows)


def exp_sim_gen(cfg):
    from .decoders import GenDecoderConfig, generalized_decode
    from .density import SeqDEParams
    from .ldpc import ERASED

    graph = _graph(cfg)
    trials = cfg["run.trials"]
    with _ParamErrors():
        gcfg = GenDecoderConfig(cfg["scheme.pi"], cfg["scheme.tau"], cfg["code.max_iters"])
        gcfg.validate(graph.dv)
        prms = [SeqDEParams(graph.dv, graph.dc, gcfg.pi, gcfg.tau, e, p0, cfg["scheme.gamma0"])
                for p0 in cfg["scheme.p0"] for e in cfg["channel.eps0"]]
    rows = []
    for prm in prms:
        def one(i, prm=prm):
            seed = derive_seed(cfg.seed, f"sim-gen:{prm.eps0!r}:{prm.p0!r}", i)
            u = np.random.default_rng(seed).random(graph.n)
            # all-zero codeword; NR output: erased (beta0), wrong (alpha0), right
            w = np.zeros(graph.n, dtype=np.uint8)
            w[u < prm.beta0] = ERASED
            w[(u >= prm.beta0) & (u < prm.beta0 + prm.alpha0)] = 1
            out = generalized_decode(graph, w, u >= prm.eps0, gcfg,
                                     truth=np.zeros(graph.n, dtype=np.uint8))
            return (prm.eps0, prm.p0, i, seed, out.converged, out.iterations_used,
                    out.residual_erasures, out.residual_errors)
        recs = _map(cfg, one, range(trials))
        _rate_summary("eps0", prm.eps0, recs, 4)
        rows += recs
    return ("sim-gen.csv",
            "eps0,p0,trial,seed,converged,iterations,residual_erasures,residual_errors", rows)


def _code(cfg):
    from .ldpc import to_systematic

    graph = _graph(cfg)
    return to_systematic(graph)


def exp_sim_iter_nr(cfg):
    from .ldpc import ERASED, encode
    from .soft import LuckySegmentOracle, iterative_nr_ldpc

    code = _code(cfg)
    l, lt = cfg["scheme.l"], cfg["scheme.l_theta"]
    if code.k % l:
        raise ConfigError(f"code dimension k={code.k} is not a multiple of l={l}")
    if not 0 <= lt <= l:
        raise ConfigError(f"l_theta={lt} outside [0, l={l}]")
    trials = cfg["run.trials"]
    rows = []
    for p in cfg["scheme.p_lucky"]:
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"p_lucky={p} outside [0, 1]")
        for eps in cfg["channel.eps0"]:
            def one(i, eps=eps, p=p):
                seed = derive_seed(cfg.seed, f"sim-iter-nr:{eps!r}:{p!r}", i)
                rng = np.random.default_rng(seed)
                info = rng.integers(0, 2, code.k, dtype=np.uint8)
                cw = encode(code, info)
                w = cw.copy()
                w[rng.random(code.n) < eps] = ERASED
                oracle = LuckySegmentOracle(info, l, p, rng)
                out = iterative_nr_ldpc(w, code, oracle, l, lt, cfg["code.max_iters"], truth=cw)
                return (eps, p, i, seed, out.converged, out.iterations_used,
                        out.residual_erasures, out.oracle_calls)
            recs = _map(cfg, one, range(trials))
            _rate_summary(f"p={p} eps0", eps, recs, 4)
            rows += recs
    return ("sim-iter-nr.csv",
            "eps0,p,trial,seed,converged,iterations,residual_erasures,oracle_calls", rows)


def exp_sim_bsc_soft(cfg):
    from .ldpc import encode
    from .soft import SoftEstimatorSpec, bsc_nr_ldpc

    code = _code(cfg)
    with _ParamErrors():
        est = SoftEstimatorSpec(cfg["scheme.estimator"], cfg["scheme.accuracy"], cfg.seed)
        base = SoftEstimatorSpec("uninformative")
        for p in cfg["channel.p"]:
            if not 0.0 < p < 0.5:
                raise ValueError(f"BSC crossover {p} outside (0, 0.5)")
    trials = cfg["run.trials"]
    iters = cfg["code.max_iters"]
    rows = []
    for p in cfg["channel.p"]:
        def one(i, p=p):
            seed = derive_seed(cfg.seed, f"sim-bsc-soft:{p!r}", i)
            rng = np.random.default_rng(seed)
            info = rng.integers(0, 2, code.k, dtype=np.uint8)
            cw = encode(code, info)
            rx = cw ^ (rng.random(code.n) < p).astype(np.uint8)
            a = bsc_nr_ldpc(rx, code, base, p, info, iters)
            b = bsc_nr_ldpc(rx, code, est, p, info, iters)
            return (p, i, seed, bool(np.array_equal(a.word, cw)), bool(np.array_equal(b.word, cw)),
                    a.iterations_used, b.iterations_used)
        recs = _map(cfg, one, range(trials))
        a_ok = sum(r[3] for r in recs)
        b_ok = sum(r[4] for r in recs)
        print(f"p={p}: ldpc {a_ok}/{len(recs)}, nr-ldpc {b_ok}/{len(recs)}")
        rows += recs
    return ("sim-bsc-soft.csv",
            "p,trial,seed,ldpc_ok,nr_ldpc_ok,ldpc_iterations,nr_ldpc_iterations", rows)


def _window_params(cfg):
    from .nr_text import WindowParams

    with _ParamErrors():
        return WindowParams(**cfg.values["window"])


def _dictionary(cfg):
    from . import data
    from .lzw import LzwError, build_dictionary

    ell = cfg["corpus.ell"]
    if cfg["corpus.train"] == "desk":
        with _ParamErrors():
            return data.desk_dictionary(ell)
    try:
        return build_dictionary(_read_corpus(cfg["corpus.train"], "train"), ell)
    except LzwError as e:
        raise ConfigError(str(e)) from None


def _lexicon(cfg):
    from . import data
    from .lexicon import LexiconError, base_vocabulary, build_lexicon

    c = cfg.values["corpus"]
    if c["train"] == "desk" and (c["min_count"], c["pmi_threshold"], c["context_window"]) == (5, 3.0, 20):
        return data.desk_lexicon(c["base_vocab"])
    try:
        return build_lexicon(_read_corpus(c["train"], "train"), c["min_count"], c["pmi_threshold"],
                             c["context_window"],
                             base_words=base_vocabulary() if c["base_vocab"] else None)
    except LexiconError as e:
        raise ConfigError(str(e)) from None


def exp_nr_decode(cfg):
    from .ldpc import ERASED
    from .lzw import compress
    from .nr_text import NrReport, nr_decode

    wp = _window_params(cfg)
    d = _dictionary(cfg)
    lex = _lexicon(cfg)
    text = _read_corpus(cfg["corpus.heldout"], "heldout")
    nbits = cfg["corpus.bits"]
    # compress just enough text for the requested number of bits
    chars = min(len(text), int(nbits / 2.0) + 1024)
    while True:
        comp = compress(text[:chars], d)
        if comp.bits.size >= nbits or chars == len(text):
            break
        chars = min(len(text), chars * 2)
    truth = comp.bits[: (min(nbits, comp.bits.size) // d.ell) * d.ell]
    rows = []
    for eps in cfg["channel.eps0"]:
        if not 0.0 <= eps <= 1.0:
            raise ConfigError(f"eps0={eps} outside [0, 1]")
        rng = trial_rng(cfg.seed, f"nr-decode:{eps!r}")
        w = truth.copy()
        w[rng.random(w.size) < eps] = ERASED
        out, rep = nr_decode(w, d, lex, wp, truth=truth)
        viol = int(np.count_nonzero((w != ERASED) & (out != w)))
        if viol:
            raise RuntimeError(f"{viol} non-erased bits changed")
        print(f"eps={eps}: delta={fmt(rep.delta_hat)} rho={fmt(rep.rho_hat)} "
              f"E_NR={fmt(rep.e_nr)} over {rep.bits} bits")
        rows.append(rep.csv_row(eps))
    return "nr-decode.csv", NrReport.CSV_HEADER, rows


def exp_lzw_build_dict(cfg, out: Path):
    from .lzw import compress, decompress, save_dictionary

    d = _dictionary(cfg)
    path = out / f"dictionary-ell{d.ell}.txt"
    save_dictionary(d, path)
    train = _read_corpus(cfg["corpus.train"], "train")
    held = _read_corpus(cfg["corpus.heldout"], "heldout")
    comp = compress(held, d)
    ok = decompress(comp, d) == held
    print(f"ell={d.ell}: {d.size} patterns, held-out {comp.bits_per_char():.4f} bits/char, "
          f"round trip {'ok' if ok else 'FAILED'}; wrote {path.name}")
    if not ok:
        raise RuntimeError("LZW round trip failed")
    return ("lzw-build-dict.csv", "ell,patterns,train_bytes,heldout_bytes,heldout_bits,bits_per_char",
            [(d.ell, d.size, len(train), len(held), comp.bits.size, comp.bits_per_char())])


def exp_lexicon_build(cfg, out: Path):
    from .lexicon import save_lexicon

    lex = _lexicon(cfg)
    path = out / "lexicon.txt"
    save_lexicon(lex, path)
    c = cfg.values["corpus"]
    print(f"{len(lex.words)} words, {len(lex.phrases)} phrases, {len(lex.colocations)} "
          f"co-locations; wrote {path.name}")
    return ("lexicon-build.csv", "words,phrases,colocations,min_count,pmi_threshold,context_window",
            [(len(lex.words), len(lex.phrases), len(lex.colocations), c["min_count"],
              c["pmi_threshold"], c["context_window"])])


EXPERIMENTS = {
    "de-seq": exp_de_seq,
    "de-iter": exp_de_iter,
    "threshold": exp_threshold,
    "sim-peel": exp_sim_peel,
    "sim-gen": exp_sim_gen,
    "sim-iter-nr": exp_sim_iter_nr,
    "sim-bsc-soft": exp_sim_bsc_soft,
    "nr-decode": exp_nr_decode,
    "lzw-build-dict": exp_lzw_build_dict,
    "lexicon-build": exp_lexicon_build,
}
_WRITES_FILES = {"lzw-build-dict", "lexicon-build"}


def run(cfg: ExperimentConfig, out_dir=None) -> Path:
    """Run the configured experiment and return the CSV path."""
    name = cfg.experiment
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    out = Path(out_dir if out_dir is not None else cfg["run.out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"cannot create output directory {out}: {e.strerror}") from None
    fn = EXPERIMENTS[name]
    fname, header, rows = fn(cfg, out) if name in _WRITES_FILES else fn(cfg)
    path = out / fname
    write_csv(path, header, rows)
    return path


def verify_reproducibility(cfg: ExperimentConfig) -> bool:
    """Run twice into scratch directories and byte-compare the CSVs."""
    with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
        pa, pb = run(cfg, a), run(cfg, b)
        return filecmp.cmp(pa, pb, shallow=False)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nrlab", description="NR-assisted LDPC decoding experiments")
    ap.add_argument("experiment", choices=sorted(EXPERIMENTS))
    ap.add_argument("--config", help="key=value config file with [section] headers")
    ap.add_argument("--out", help="output directory (default: [run] out)")
    ap.add_argument("--seed", help="master seed (u64)")
    ap.add_argument("--verify", action="store_true",
                    help="run twice and check the CSV is byte-identical")
    ap.add_argument("overrides", nargs="*", metavar="key=value")
    return ap


# short names accepted on the command line
_ALIASES = {"ltheta": "scheme.l_theta", "p_lucky": "scheme.p_lucky"}
# experiments where a bare ``p`` is the segment success probability, not a BSC crossover
_P_IS_LUCKY = {"de-iter", "threshold", "sim-iter-nr"}


def _flag_overrides(extra: list) -> list:
    """Turn ``--key value`` / ``--key=value`` leftovers into ``key=value``;
    bare ``key=value`` items that followed an option pass through."""
    out, i = [], 0
    while i < len(extra):
        a = extra[i]
        if not a.startswith("-") and "=" in a:
            out.append(a)
            i += 1
            continue
        if not a.startswith("--") or len(a) == 2:
            raise ConfigError(f"unexpected argument {a!r}")
        key, eq, val = a[2:].partition("=")
        if not eq:
            if i + 1 >= len(extra):
                raise ConfigError(f"option {a} needs a value")
            val = extra[i + 1]
            i += 1
        out.append(f"{key.replace('-', '_')}={val}")
        i += 1
    return out


def _resolve(key: str, experiment: str) -> str:
    if key in _ALIASES:
        return _ALIASES[key]
    if key == "p" and experiment in _P_IS_LUCKY:
        return "scheme.p_lucky"
    return key


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args, extra = ap.parse_known_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    try:
        cfg = cfgmod.load(args.config) if args.config else cfgmod.defaults()
        cfg.values["run"]["experiment"] = args.experiment
        if args.seed is not None:
            cfg.set("run.seed", args.seed)
        for ov in args.overrides + _flag_overrides(extra):
            key, eq, val = ov.partition("=")
            if not eq:
                raise ConfigError(f"override {ov!r} is not key=value")
            cfg.set(_resolve(key.strip(), args.experiment), val)
        t0 = time.perf_counter()
        if args.verify:
            same = verify_reproducibility(cfg)
            print("reproducible" if same else "NOT reproducible")
            return EXIT_OK if same else EXIT_RUNTIME
        path = run(cfg, args.out)
        print(f"wrote {path} ({time.perf_counter() - t0:.1f} s)")
        return EXIT_OK
    except ConfigError as e:
        print(f"nrlab: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:     # noqa: BLE001 - any failure inside an experiment
        print(f"nrlab: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

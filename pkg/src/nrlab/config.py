"""Experiment configuration: ``key = value`` lines under ``[section]`` headers.

Keys before the first header belong to ``[run]``.  Lists are comma
separated.  Every key has a type and a default; unknown sections or keys
are errors, so typos do not silently fall back to defaults.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 1 << 64:
        raise ValueError(f"seed {v} outside [0, 2**64)")
    return v


def _nonneg(s: str) -> int:
    v = int(s)
    if v < 0:
        raise ValueError(f"{v} is negative")
    return v


# section -> key -> (parser, default)
SCHEMA = {
    "run": {
        "experiment": (str, ""),
        "seed": (_u64, 0),
        "trials": (_nonneg, 100),
        "threads": (_nonneg, 0),          # 0: all available cores
        "out": (str, "."),
    },
    "code": {
        "n": (int, 100_000),
        "dv": (int, 5),
        "dc": (int, 100),
        "seed": (_u64, 0),
        "max_iters": (int, 100),
    },
    "channel": {
        "eps0": (_floats, (0.2,)),
        "p": (_floats, (0.004, 0.008, 0.012)),
    },
    "scheme": {
        "scheme": (str, "classic"),       # classic | seq | iter (threshold)
        "pi": (int, 1),
        "tau": (int, 4),
        "p0": (_floats, (0.143,)),
        "gamma0": (float, 0.0003),
        "l": (int, 120),
        "l_theta": (int, 30),
        "p_lucky": (_floats, (0.9,)),
        "t_max": (int, 2000),
        "tol": (float, 1e-10),
        "bisect_tol": (float, 1e-4),
        "estimator": (str, "oracle"),
        "accuracy": (float, 0.99),
    },
    "window": {
        "n_min": (int, 2),
        "n_max": (int, 6),
        "t_cap": (int, 20),
        "long_len": (int, 12),
        "coloc_span": (int, 3),
        "numbers_valid": (_bool, True),
        "max_candidates": (int, 4096),
        "coloc_min_score": (float, 7.0),
        "coloc_max_set": (int, 256),
    },
    "corpus": {
        "train": (str, "desk"),           # "desk": the bundled corpus
        "heldout": (str, "desk"),
        "ell": (int, 14),
        "bits": (int, 1_000_000),         # held-out bits used by nr-decode
        "base_vocab": (_bool, True),
        "min_count": (int, 5),
        "pmi_threshold": (float, 3.0),
        "context_window": (int, 20),
    },
}

# bare override keys that live outside [run]
_OWNER = {}
for _sec, _keys in SCHEMA.items():
    for _k in _keys:
        _OWNER.setdefault(_k, []).append(_sec)


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)     # section -> key -> value
    source: str = ""

    def __getitem__(self, dotted: str):
        sec, _, key = dotted.partition(".")
        return self.values[sec][key]

    @property
    def experiment(self) -> str:
        return self.values["run"]["experiment"]

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]

    @property
    def threads(self) -> int:
        t = self.values["run"]["threads"]
        return t if t > 0 else (os.cpu_count() or 1)

    def set(self, key: str, raw: str) -> None:
        """Apply an override ``section.key`` or a bare key owned by one section."""
        if "." in key:
            sec, _, k = key.partition(".")
        else:
            owners = _OWNER.get(key, [])
            if "run" in owners:
                sec = "run"
            elif len(owners) == 1:
                sec = owners[0]
            elif not owners:
                raise ConfigError(f"unknown key {key!r}")
            else:
                raise ConfigError(f"key {key!r} is ambiguous, use one of "
                                  + ", ".join(f"{s}.{key}" for s in owners))
            k = key
        self.values[sec][k] = _parse(sec, k, raw)

    def dumps(self) -> str:
        lines = []
        for sec, keys in self.values.items():
            lines.append(f"[{sec}]")
            for k, v in keys.items():
                if isinstance(v, tuple):
                    v = ",".join(repr(x) for x in v)
                lines.append(f"{k} = {v}")
            lines.append("")
        return "\n".join(lines)


def _parse(sec: str, key: str, raw: str):
    if sec not in SCHEMA:
        raise ConfigError(f"unknown section [{sec}]")
    if key not in SCHEMA[sec]:
        raise ConfigError(f"unknown key {key!r} in [{sec}]")
    parser = SCHEMA[sec][key][0]
    try:
        return parser(raw.strip())
    except ValueError as e:
        raise ConfigError(f"[{sec}] {key} = {raw!r}: {e}") from None


def defaults() -> ExperimentConfig:
    return ExperimentConfig({s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()})


def loads(text: str, source: str = "<string>") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                   comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
                                   default_section="\0none", strict=False)
    cp.optionxform = str
    try:
        cp.read_string("[run]\n" + text, source=source)
    except configparser.Error as e:
        raise ConfigError(f"{source}: {e}") from None
    cfg = defaults()
    cfg.source = source
    for sec in cp.sections():
        for key, raw in cp.items(sec):
            cfg.values.setdefault(sec, {})
            if sec not in SCHEMA:
                raise ConfigError(f"{source}: unknown section [{sec}]")
            cfg.values[sec][key] = _parse(sec, key, raw)
    return cfg


def load(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    return loads(text, str(p))

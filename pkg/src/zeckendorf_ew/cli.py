"""Command-line front end: ``zeckew {verify,charfn,dist,bound,example}``.

Settings are resolved as CLI flag, then config file (flat ``key = value``),
then built-in default.  Exit codes: 0 success, 1 identity failure, 2 invalid
configuration, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import bounds, verify
from .charfn import METHODS, phi
from .distribution import dist_exact, dist_prefix
from .errors import AtomCapError, ConfigError, NonConvergenceError, ThetaRangeError
from .numeration import g
from .weights import WeightSequence, make_family, read_weight_file

EXIT_OK, EXIT_IDENTITY, EXIT_CONFIG, EXIT_NONCONVERGENCE = 0, 1, 2, 3

COMMANDS = ("verify", "charfn", "dist", "bound", "example")
BOUND_KINDS = ("master", "main", "split", "smoothing", "phi_gap")

DEFAULTS: dict[str, Any] = {
    "family": "example",
    "params": "",
    "weights": None,
    "k": None,
    "N": None,
    "T": None,
    "L": None,
    "h": None,
    "grid": "-1:1:21",
    "method": "scalar-recursion",
    "kind": "master",
    "tol": bounds.LIMIT_EPS,
    "limit_cap": bounds.LIMIT_K_CAP,
    "bin_width": None,
    "seed": verify.DEFAULT_SEED,
    "trials": verify.DEFAULT_TRIALS,
    "m_list": "1000,10000,100000,1000000",
    "out": None,
    "overwrite": False,
    "corrupt_frame": False,
}

_INT_KEYS = {"k", "N", "L", "h", "seed", "trials", "limit_cap"}
_FLOAT_KEYS = {"tol", "bin_width"}
_BOOL_KEYS = {"overwrite", "corrupt_frame"}


@dataclass
class RunConfig:
    command: str
    settings: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.settings[name]
        except KeyError:
            raise AttributeError(name) from None

    def weight_sequence(self) -> WeightSequence:
        if self.settings.get("weights"):
            return read_weight_file(self.settings["weights"])
        return make_family(self.settings["family"], self.settings["params"] or None)


# -- config handling ---------------------------------------------------------------


def read_config_file(path: str | Path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _coerce(key: str, value):
    if value is None:
        return None
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _BOOL_KEYS:
            if isinstance(value, bool):
                return value
            low = str(value).strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return low in ("true", "1", "yes")
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {value!r}") from None
    return value


def resolve_settings(cli: dict, file_values: dict | None = None) -> dict:
    merged = dict(DEFAULTS)
    for source in (file_values or {}, cli):
        for key, value in source.items():
            if value is not None:
                merged[key] = _coerce(key, value)
    return merged


def parse_grid(spec: str) -> np.ndarray:
    """``a:b:n`` -> n equally spaced points from a to b."""
    parts = str(spec).split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must look like 'a:b:n', got {spec!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"grid must look like 'a:b:n', got {spec!r}") from None
    if n < 1:
        raise ConfigError("grid must be nonempty")
    return np.linspace(a, b, n)


def validate(cfg: RunConfig) -> None:
    s = cfg.settings
    if cfg.command not in COMMANDS:
        raise ConfigError(f"unknown command {cfg.command!r}")
    if s["weights"] and s["params"]:
        raise ConfigError("--params applies to --family, not to --weights")
    for key in ("k", "N", "L", "h"):
        if s[key] is not None and s[key] < 0:
            raise ConfigError(f"{key} must be >= 0, got {s[key]}")
    if s["N"] is not None and s["N"] < 1:
        raise ConfigError(f"N must be >= 1, got {s['N']}")
    if s["L"] is not None and s["h"] is not None and not s["L"] > 2 * s["h"]:
        raise ConfigError(f"need L > 2h, got L={s['L']}, h={s['h']}")
    if s["T"] is not None and str(s["T"]).strip() not in ("logN", "logN^2"):
        try:
            T = float(s["T"])
        except ValueError:
            raise ConfigError(f"T must be a number, 'logN' or 'logN^2', got {s['T']!r}") from None
        if not T > 0:
            raise ConfigError(f"T must be > 0, got {T}")
    if not s["tol"] > 0:
        raise ConfigError(f"tol must be > 0, got {s['tol']}")
    if s["bin_width"] is not None and not s["bin_width"] > 0:
        raise ConfigError(f"bin_width must be > 0, got {s['bin_width']}")
    if s["method"] not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {s['method']!r}")
    if s["kind"] not in BOUND_KINDS:
        raise ConfigError(f"kind must be one of {BOUND_KINDS}, got {s['kind']!r}")
    if s["limit_cap"] < 1:
        raise ConfigError("limit_cap must be >= 1")
    if s["trials"] < 1:
        raise ConfigError("trials must be >= 1")
    parse_grid(s["grid"])


# -- output ---------------------------------------------------------------------


def fmt(x) -> str:
    """Round-trip decimal text; integral floats print without a fraction."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x.is_integer() and abs(x) < 2**53:
            return str(int(x))
        return repr(x)
    return str(x)


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


class Output:
    """Writes named files into ``out`` or, without a directory, to stdout."""

    def __init__(self, out: str | None, overwrite: bool, stdout=None):
        self.dir = Path(out) if out else None
        self.stdout = stdout or sys.stdout
        if self.dir is not None:
            if self.dir.exists() and not self.dir.is_dir():
                raise ConfigError(f"output path {self.dir} exists and is not a directory")
            if self.dir.exists() and any(self.dir.iterdir()) and not overwrite:
                raise ConfigError(f"output directory {self.dir} is not empty; pass --overwrite to replace")
            self.dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str) -> None:
        if self.dir is None:
            self.stdout.write(text)
        else:
            with open(self.dir / name, "w", newline="\n") as fh:
                fh.write(text)

    def info(self, text: str) -> None:
        self.stdout.write(text if text.endswith("\n") else text + "\n")


# -- commands ----------------------------------------------------------------------


def cmd_verify(cfg: RunConfig, out: Output) -> int:
    frame = verify.corrupted_frame() if cfg.corrupt_frame else verify.FRAME
    report = verify.run_battery(seed=cfg.seed, trials=cfg.trials, frame=frame)
    text = report.text()
    out.write("verify_report.txt", text)
    if out.dir is not None:
        out.info(report.lines()[-1])
    if not report.passed:
        sys.stderr.write(f"identity failed: {report.first_failure.name}\n")
        return EXIT_IDENTITY
    return EXIT_OK


def cmd_charfn(cfg: RunConfig, out: Output) -> int:
    seq = cfg.weight_sequence()
    k = 20 if cfg.k is None else cfg.k
    prof = phi(seq, k, parse_grid(cfg.grid), cfg.method)
    rows = ((t, v.real, v.imag, abs(v)) for t, v in zip(prof.t_grid, prof.values))
    out.write("charfn.csv", csv_text(("t", "re", "im", "abs"), rows))
    return EXIT_OK


def cmd_dist(cfg: RunConfig, out: Output) -> int:
    seq = cfg.weight_sequence()
    if cfg.N is not None:
        d = dist_prefix(seq, cfg.N)
    else:
        d = dist_exact(seq, 10 if cfg.k is None else cfg.k, bin_width=cfg.bin_width)
    out.write("dist.csv", csv_text(("value", "mass"), zip(d.values, d.masses)))
    return EXIT_OK


def _bound_rows(reports) -> str:
    terms: list[str] = []
    for r in reports:
        terms += [t for t in r.rhs_terms if t not in terms]
    header = ["kind", "N", "T", "lhs", "rhs", "fitted_constant", *terms]
    rows = []
    for r in reports:
        p = r.parameters
        T = p.get("T_smooth", p.get("T_freq"))
        rows.append([r.kind, p.get("N"), T, r.lhs, r.rhs, r.fitted_constant,
                     *(r.rhs_terms.get(t, "") for t in terms)])
    return csv_text(header, rows)


def _jsonl(reports) -> str:
    return "".join(r.to_json() + "\n" for r in reports)


def _limit(cfg: RunConfig, seq: WeightSequence):
    return bounds.stabilized_limit(seq, eps=cfg.tol, k_cap=cfg.limit_cap, strict=True)


def cmd_bound(cfg: RunConfig, out: Output) -> int:
    seq = cfg.weight_sequence()
    kind = cfg.kind
    if kind == "phi_gap":
        k = 20 if cfg.k is None else cfg.k
        T = 1.0 if cfg.T is None else bounds.resolve_T(cfg.T, g(k))
        report = bounds.phi_gap(seq, k, T_freq=T, eps=min(cfg.tol, 1e-6))
    else:
        N = cfg.N if cfg.N is not None else g(20 if cfg.k is None else cfg.k)
        if N < 2:
            raise ConfigError("bounds need N >= 2")
        default_T = "logN^2" if kind in ("master", "smoothing") else 1.0
        T = bounds.resolve_T(default_T if cfg.T is None else cfg.T, N)
        limit = _limit(cfg, seq)
        if kind == "master":
            report = bounds.master_bound(seq, N, T, cfg.L, cfg.h, limit=limit)
        elif kind == "main":
            report = bounds.main_bound(seq, N, T, cfg.L, cfg.h, limit=limit)
        elif kind == "split":
            cut = None if cfg.L is None or cfg.h is None else cfg.L - 2 * cfg.h
            report = bounds.split_bound(seq, N, T, cut, limit=limit)
        else:
            report = bounds.smoothing_bound(seq, N, T, limit=limit)
    if out.dir is None:
        out.write("", _jsonl([report]))
    else:
        out.write("bound_report.jsonl", _jsonl([report]))
        out.write("bound_report.csv", _bound_rows([report]))
    return EXIT_OK


def example_k_list(cap: int) -> list[int]:
    ks = list(range(10, cap + 1, 5))
    return ks or [cap]


def cmd_example(cfg: RunConfig, out: Output) -> int:
    if out.dir is None:
        raise ConfigError("example writes several files; pass --out DIR")
    seq = cfg.weight_sequence()
    try:
        m_list = [int(float(m)) for m in str(cfg.m_list).split(",") if m.strip()]
    except ValueError:
        raise ConfigError(f"m_list must be comma-separated integers, got {cfg.m_list!r}") from None
    tails = bounds.example_asymptotics(m_list, seq)
    out.write("tail_asymptotics.csv", csv_text(
        ("m", "tail_l2", "tail_times_log_m", "tail_error"),
        ((r.m, r.tail, r.tail_times_log_m, r.error) for r in tails)))

    cap = 25 if cfg.k is None else cfg.k
    if cap < 2:
        raise ConfigError("example needs k >= 2")
    limit = _limit(cfg, seq)
    rows = bounds.convergence_experiment(seq, example_k_list(cap), limit=limit)
    C = bounds.single_constant(min(r.reports, key=lambda b: b.rhs) for r in rows)
    out.write("convergence.csv", csv_text(
        ("k", "N", "lhs", "best_rhs", "best_T", "ratio", "single_constant", "limit_depth", "limit_gap"),
        ((r.k, r.N, r.lhs, r.best_rhs, r.best_T, r.ratio, C, limit.K, limit.gap) for r in rows)))

    # reports at T = (log N)^2
    reports = [r.reports[1] for r in rows]
    out.write("bound_reports.csv", _bound_rows(reports))
    out.write("bound_reports.jsonl", _jsonl(reports))
    out.info(f"wrote {len(tails)} tail rows and {len(rows)} convergence rows to {out.dir}")
    return EXIT_OK


HANDLERS = {
    "verify": cmd_verify,
    "charfn": cmd_charfn,
    "dist": cmd_dist,
    "bound": cmd_bound,
    "example": cmd_example,
}


# -- argument parsing ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat 'key = value' file; CLI flags take precedence")
    src = common.add_mutually_exclusive_group()
    src.add_argument("--weights", help="weight file with 'j value' lines")
    src.add_argument("--family", help="built-in family: example, zero-after, constant, zero")
    common.add_argument("--params", help="family parameters, e.g. 'J=12' or 'c=0.5,J=20'")
    common.add_argument("--k", type=int, help="layer count (N = G_k) or cap for 'example'")
    common.add_argument("--N", type=int, help="prefix length N")
    common.add_argument("--T", help="T value, or 'logN' / 'logN^2'")
    common.add_argument("--L", type=int)
    common.add_argument("--h", type=int)
    common.add_argument("--grid", help="t grid 'a:b:n'")
    common.add_argument("--method", help=f"charfn route, one of {', '.join(METHODS)}")
    common.add_argument("--kind", help=f"bound kind, one of {', '.join(BOUND_KINDS)}")
    common.add_argument("--tol", type=float, help="Cauchy tolerance for the limit law")
    common.add_argument("--limit-cap", dest="limit_cap", type=int, help="deepest layer tried for the limit law")
    common.add_argument("--bin-width", dest="bin_width", type=float, help="atom grid for dist")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int, help="random trials per identity (verify)")
    common.add_argument("--m-list", dest="m_list", help="comma-separated m values (example)")
    common.add_argument("--out", help="output directory (default: stdout where possible)")
    common.add_argument("--overwrite", action="store_const", const=True, default=None)
    common.add_argument("--corrupt-frame", dest="corrupt_frame", action="store_const", const=True,
                        default=None, help=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="zeckew", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def make_config(argv: Sequence[str] | None = None) -> RunConfig:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        raise ConfigError("invalid command line") if exc.code else exc
    cli = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    file_values = read_config_file(ns.config) if ns.config else {}
    if cli.get("weights") and file_values.get("family"):
        file_values.pop("family")
    cfg = RunConfig(ns.command, resolve_settings(cli, file_values))
    validate(cfg)
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = make_config(argv)
        out = Output(cfg.out, cfg.overwrite)
        return HANDLERS[cfg.command](cfg, out)
    except (ConfigError, ThetaRangeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except (NonConvergenceError, AtomCapError) as exc:
        hint = "raise --tol or --bin-width" if isinstance(exc, AtomCapError) else "raise --tol or --limit-cap"
        sys.stderr.write(f"non-convergence: {exc}; {hint}\n")
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())

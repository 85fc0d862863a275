"""Run configuration: an INI file read with :mod:`configparser`.

Grammar
-------
Standard INI: ``[section]`` headers, ``key = value`` lines, ``#`` or ``;``
comments.  Lists are comma separated.  Reciprocal values may be written as
``1/16``.  KP measurement indices are written ``sigma1:sigma2``.  Every key is
optional; omitted keys take the defaults documented in ``SCHEMA``.

Example::

    [run]
    equation = kdv

    [grid]
    eps_list = 1/16, 1/32, 1/64, 1/128
    oversample = 8

    [profile]
    half_width = 1.5

    [experiment]
    s1 = -1.5
    sigma_list = -1.5, -2, -3
"""

from __future__ import annotations

import ast
import configparser
import difflib
import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Optional

from .errors import ConfigError
from .profiles import Profile


def _real(text: str) -> float:
    text = text.strip()
    if "/" in text:
        return float(Fraction(text))
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def _optional_real(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "none", "auto") else _real(text)


def _integer(text: str) -> int:
    return int(text.strip())


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _real_list(text: str) -> tuple[float, ...]:
    return tuple(_real(part) for part in text.split(",") if part.strip())


def _sigma_list(text: str) -> tuple:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            a, b = part.split(":")
            out.append((_real(a), _real(b)))
        else:
            out.append(_real(part))
    return tuple(out)


def _word_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _fmt_real(v: float) -> str:
    return repr(float(v))


def _fmt_reciprocals(values) -> str:
    return ", ".join(f"1/{round(1 / e)}" if abs(round(1 / e) * e - 1) < 1e-15 else repr(e) for e in values)


def _fmt(value: Any) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _fmt_real(value)
    if isinstance(value, str):
        return value
    parts = []
    for item in value:
        if isinstance(item, tuple):
            parts.append(f"{_fmt_real(item[0])}:{_fmt_real(item[1])}")
        else:
            parts.append(_fmt(item))
    return ", ".join(parts)


# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple[Callable, Any]]] = {
    "run": {
        "equation": (str.strip, "kdv"),
    },
    "grid": {
        "eps_list": (_real_list, (1 / 16, 1 / 32, 1 / 64, 1 / 128)),
        "oversample": (_integer, 8),
    },
    "profile": {
        "center": (_real, 0.0),
        "half_width": (_real, 1.5),
        "amplitude": (_real, 1.0),
    },
    "profile_y": {
        "center": (_real, 0.0),
        "half_width": (_real, 1.5),
        "amplitude": (_real, 1.0),
    },
    "phase": {
        "k1": (_integer, 1),
        "k2": (_integer, 1),
        "lambda": (_integer, 1),
    },
    "solver": {
        "dt_factor": (_real, 0.05),
        "final_time": (_optional_real, None),
        "richardson": (_bool, True),
        "max_halvings": (_integer, 3),
    },
    "experiment": {
        "beta": (_real, 2.0),
        "s1": (_real, -1.5),
        "s2": (_real, -0.25),
        "sigma_list": (_sigma_list, (-1.5, -2.0, -3.0)),
        "K": (_real, 3.0),
        "delta": (_real, 0.5),
        "tau": (_optional_real, None),
        "amplitude_boost": (_optional_real, None),
    },
    "checks": {
        "data_slope": (_optional_real, None),
        "ratio_slope": (_optional_real, None),
        "slope_tol": (_real, 0.1),
        "limit_slope_min": (_optional_real, None),
        "residual_slope_min": (_optional_real, None),
        "error_slope_min": (_optional_real, None),
        "drift_max": (_real, 1e-7),
    },
    "output": {
        "directory": (str.strip, "results"),
        "formats": (_word_list, ("csv", "json")),
        "snapshot_stride": (_integer, 0),
    },
    "tolerances": {
        "hermitian": (_real, 1e-12),
        "antiderivative_mean": (_real, 1e-10),
        "max_grid_points": (_integer, 2**23),
    },
}


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=dict)

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    @property
    def equation(self) -> str:
        return self.values["run"]["equation"]

    @property
    def eps_list(self) -> tuple[float, ...]:
        return self.values["grid"]["eps_list"]

    def profiles(self) -> tuple[Profile, ...]:
        px = Profile(**self.values["profile"])
        if self.equation == "kp":
            return px, Profile(**self.values["profile_y"])
        return (px,)

    def phase(self):
        from .wkb_kp import KPPhase

        p = self.values["phase"]
        return KPPhase(p["k1"], p["k2"], p["lambda"])

    def inflation_config(self):
        from .inflation import InflationConfig
        from .solvers import SolverConfig

        ex, ck, sv = self.values["experiment"], self.values["checks"], self.values["solver"]
        return InflationConfig(
            equation=self.equation,
            s1=ex["s1"],
            s2=ex["s2"],
            sigma_list=ex["sigma_list"],
            K=ex["K"],
            beta=ex["beta"],
            eps_list=self.eps_list,
            tau=ex["tau"],
            profiles=self.profiles(),
            amplitude_boost=ex["amplitude_boost"],
            delta=ex["delta"],
            phase=self.phase(),
            oversample=self.values["grid"]["oversample"],
            solver=SolverConfig(dt_factor=sv["dt_factor"], richardson=sv["richardson"],
                                max_halvings=sv["max_halvings"]),
            expected_data_slope=ck["data_slope"],
            expected_ratio_slope=ck["ratio_slope"],
            slope_tol=ck["slope_tol"],
            min_limit_slope=ck["limit_slope_min"],
        )


def _cross_checks(v: dict) -> list[str]:
    out = []
    eq = v["run"]["equation"]
    ex = v["experiment"]
    if eq not in ("kdv", "kp"):
        out.append(f"equation must be 'kdv' or 'kp', got {eq!r}")
    eps = v["grid"]["eps_list"]
    if len(eps) < 1:
        out.append("eps_list must not be empty")
    if any(e <= 0 or abs(round(1 / e) * e - 1) > 1e-12 for e in eps):
        out.append("every eps must be 1/N for an integer N")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        out.append("eps_list must be strictly decreasing")
    if v["grid"]["oversample"] < 8:
        out.append("oversample >= 8 required")
    for name in ("profile", "profile_y"):
        p = v[name]
        if not 0 < p["half_width"] < math.pi:
            out.append(f"[{name}] half_width must lie in (0, pi)")
        if p["amplitude"] <= 0:
            out.append(f"[{name}] amplitude must be positive")
    if v["phase"]["k1"] == 0:
        out.append("k1 != 0 required")
    if v["phase"]["lambda"] not in (1, -1):
        out.append("lambda must be +1 or -1")
    if not 0 < v["solver"]["dt_factor"] <= 1:
        out.append("dt_factor must lie in (0, 1]")
    if eq == "kdv" and not ex["s1"] < -1:
        out.append("s1 < -1 required (Theorem 1.1 hypothesis)")
    if eq == "kp" and not ex["s1"] + 2 * ex["s2"] < -1:
        out.append("s1 + 2 s2 < -1 required (KP inflation hypothesis)")
    if not 0 < ex["beta"] <= 2:
        out.append("0 < beta <= 2 required")
    if ex["K"] <= 0:
        out.append("K > 0 required")
    if ex["delta"] <= 0:
        out.append("delta > 0 required")
    for sig in ex["sigma_list"]:
        paired = isinstance(sig, tuple)
        if paired != (eq == "kp"):
            out.append(f"sigma {_fmt([sig])} has the wrong shape for {eq}")
            continue
        level = sig[0] + 2 * sig[1] if paired else sig
        if not -ex["K"] <= level < -1:
            out.append(f"sigma {_fmt([sig])} must satisfy -K <= sigma < -1")
    bad_formats = set(v["output"]["formats"]) - {"csv", "json"}
    if bad_formats:
        out.append(f"unknown output formats {sorted(bad_formats)}")
    return out


def _suggest(word: str, options) -> str:
    close = difflib.get_close_matches(word, list(options), n=1)
    return f" (did you mean {close[0]!r}?)" if close else ""


def parse_config(text: str) -> RunConfig:
    """Parse and validate; raises ConfigError carrying every violation found."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case-sensitive ("K")
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}: missing [section] header") from None
    except configparser.ParsingError as exc:
        # configparser stores each offending line as its repr
        raise ConfigError([f"line {n}: cannot parse {ast.literal_eval(line).strip()!r}" for n, line in exc.errors]) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"line {exc.lineno}: duplicate key {exc.option!r} in [{exc.section}]") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"line {exc.lineno}: duplicate section [{exc.section}]") from None

    problems: list[str] = []
    values = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    for sec in parser.sections():
        if sec not in SCHEMA:
            problems.append(f"unknown section [{sec}]{_suggest(sec, SCHEMA)}")
            continue
        for key, raw in parser.items(sec):
            if key not in SCHEMA[sec]:
                problems.append(f"unknown key {key!r} in [{sec}]{_suggest(key, SCHEMA[sec])}")
                continue
            conv = SCHEMA[sec][key][0]
            try:
                values[sec][key] = conv(raw)
            except (ValueError, ZeroDivisionError) as exc:
                problems.append(f"[{sec}] {key} = {raw!r}: {exc}")
    # unparseable values kept their defaults, so cross-field checks still apply
    problems += _cross_checks(values)
    if problems:
        raise ConfigError(problems)
    return RunConfig(values)


def serialize(cfg: RunConfig) -> str:
    """Canonical text: every section and key in schema order, defaults written out."""
    lines = []
    for sec, keys in SCHEMA.items():
        lines.append(f"[{sec}]")
        for key in keys:
            value = cfg.values[sec][key]
            text = _fmt_reciprocals(value) if key == "eps_list" else _fmt(value)
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)


def normalize(text: str) -> str:
    return serialize(parse_config(text))


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(serialize(cfg).encode()).hexdigest()[:16]


def default_config(equation: str = "kdv") -> RunConfig:
    text = f"[run]\nequation = {equation}\n"
    if equation == "kp":
        text += "[grid]\neps_list = 1/4, 1/6, 1/8\n[solver]\ndt_factor = 0.01\n"
        text += "[experiment]\ns1 = -1\ns2 = -0.25\nsigma_list = -1:-0.25\n"
    return parse_config(text)

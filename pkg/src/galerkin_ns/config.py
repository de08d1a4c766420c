"""Flat ``key = value`` experiment configuration.

Real-valued keys accept decimals (kept as float) or integers and ratios such
as ``1/6`` (kept as exact Fractions until use), so saving a loaded file gives
back the same bytes.  Unknown keys are rejected.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from pathlib import Path

from .uniqueness import BesovParams, validate_params

COMMANDS = (
    "sample", "simulate", "check-coefficients", "check-conservation", "moment-test", "bnorm-test",
    "series-bound", "invariance-test", "contraction-test", "uniqueness-divergence", "report",
)
OUTPUT_ENV = "GALERKIN_NS_OUT"

Real = float | Fraction


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    command: str = "sample"
    nu: Real = Fraction(1)
    N: int = 8
    T: Real = Fraction(1)
    dt: Real = 0.001
    M: int = 1000
    seed: int = 0
    mode: str = "full"          # full | linear-only
    stride: int = 10
    s: Real = Fraction(1, 6)    # Besov block: state space B^-s_pq, smoothing target B^a_pq
    a: Real = Fraction(1, 2)
    p: Real = Fraction(3)
    q: Real = Fraction(3)
    alpha: Real = Fraction(3)
    r: Real = Fraction(1, 2)    # B measured in H^(-r-1)
    rho: Real = Fraction(2)
    n: int = 2                  # moment order 2n
    kmax: int = 64
    R: int = 256
    probes: int = 10
    seeds: int = 5
    output_dir: str = "."
    input: str = ""             # report to re-check (command "report")

    @property
    def besov(self) -> BesovParams:
        return BesovParams(self.s, self.a, self.p, self.q, self.alpha)

    def floats(self) -> dict:
        return {f.name: float(getattr(self, f.name)) if _kind(f) == "real" else getattr(self, f.name)
                for f in fields(self)}


def _kind(f) -> str:
    if f.type in ("int", int):
        return "int"
    if f.type in ("str", str):
        return "str"
    return "real"


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}


def parse_real(text: str) -> Real:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return Fraction(int(num), int(den))
    try:
        return Fraction(int(text))
    except ValueError:
        return float(text)


def format_real(x: Real) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def coerce(key: str, text: str):
    if key not in _FIELDS:
        raise ConfigError(f"unknown key {key!r}")
    kind = _kind(_FIELDS[key])
    try:
        if kind == "int":
            return int(text)
        if kind == "real":
            return parse_real(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"key {key!r}: cannot parse {text!r} ({exc})") from exc
    return text.strip()


def parse(text: str, base: ExperimentConfig | None = None, source: str = "<config>") -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = coerce(key, value)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from exc
    return replace(base or default_config(), **values)


def default_config() -> ExperimentConfig:
    return ExperimentConfig(output_dir=os.environ.get(OUTPUT_ENV, "."))


def dumps(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {format_real(v) if _kind(f) == 'real' else v}")
    return "\n".join(lines) + "\n"


def load(path: Path | str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    path = Path(path)
    return parse(path.read_text(encoding="utf-8"), base, source=str(path))


def save(cfg: ExperimentConfig, path: Path | str) -> Path:
    path = Path(path)
    path.write_text(dumps(cfg), encoding="utf-8")
    return path


def config_hash(cfg: ExperimentConfig) -> str:
    """Hash of the fields that affect results; where artifacts go does not count."""
    core = replace(cfg, output_dir="", input="")
    return hashlib.sha256(dumps(core).encode("utf-8")).hexdigest()[:12]


def violations(cfg: ExperimentConfig) -> list[str]:
    """Every violated precondition for the configured command."""
    out = []
    if cfg.command not in COMMANDS:
        out.append(f"command in {{{', '.join(COMMANDS)}}} (got {cfg.command!r})")
    if cfg.mode not in ("full", "linear-only"):
        out.append(f"mode in {{full, linear-only}} (got {cfg.mode!r})")
    checks = [
        (cfg.nu > 0, "nu > 0"),
        (cfg.N >= 1, "N >= 1"),
        (cfg.T > 0, "T > 0"),
        (cfg.dt > 0, "dt > 0"),
        (cfg.M >= 1, "M >= 1"),
        (cfg.seed >= 0, "seed >= 0"),
        (cfg.stride >= 1, "stride >= 1"),
        (cfg.r > 0, "r > 0"),
        (cfg.rho >= 1, "rho >= 1"),
        (cfg.n >= 1, "n >= 1"),
        (cfg.kmax >= 4, "kmax >= 4"),
        (cfg.R >= 4 * cfg.kmax, "R >= 4 kmax"),
        (cfg.probes >= 10, "probes >= 10"),
        (cfg.seeds >= 1, "seeds >= 1"),
    ]
    out += [clause for ok, clause in checks if not ok]
    if cfg.T > 0 and cfg.dt > 0:
        ratio = float(cfg.T) / float(cfg.dt)
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            out.append("T an integer multiple of dt")
    if cfg.command in ("moment-test", "invariance-test") and cfg.M < 100:
        out.append("M >= 100")
    if cfg.command in ("bnorm-test",) and cfg.N < 2:
        out.append("N >= 2")
    if cfg.command in ("contraction-test", "uniqueness-divergence"):
        try:
            out += [f"Besov parameters: {c}" for c in validate_params(cfg.besov)]
        except ValueError as exc:
            out.append(f"Besov parameters: {exc}")
    if cfg.command == "report" and not cfg.input:
        out.append("input names a report CSV")
    return out

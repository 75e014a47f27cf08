"""INI scenario files.

Layout::

    [scenario]
    horizon = 10
    lam = 0.1
    diffusion_rho = 0.4
    n_runs = 100000
    seed = 7

    [firm.A]
    sigma = 0.09
    jump_mean = -0.2
    jump_std = 0.5

    [analytic]
    labels = A, Baa, Ba, B
    z = 8.06, 6.46, 3.73, 2.10
    rho = 0.4
    horizons = 1, 2, 5, 10

    [calibrate]
    data = data/illustrative_curves.csv
    labels = A

Firms give either ``sigma`` (combined through ``diffusion_rho``) or an explicit
``sigma_row``; mixing the two across firms is rejected. Unknown sections and
keys are rejected with the offending line number.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .model import FirmSpec, ModelError, SystemSpec, correlated_sigma_matrix

# rating presets used by the bundled configs and the acceptance suite
RATING_PRESETS = {
    "A": dict(sigma=0.09, jump_mean=-0.2, jump_std=0.5),
    "Baa": dict(sigma=0.0894, jump_mean=-0.296, jump_std=0.6039),
    "Ba": dict(sigma=0.1587, jump_mean=-0.5515, jump_std=1.6412),
    "B": dict(sigma=0.45, jump_mean=-0.8, jump_std=1.5),
}
ZHOU_Z = {"A": 8.06, "Baa": 6.46, "Ba": 3.73, "B": 2.10}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key


@dataclass(frozen=True)
class ScenarioConfig:
    horizon: float = 10.0
    mean_interjump: float = 1.0
    lam: float = 0.1
    diffusion_rho: float = 0.0
    n_runs: int = 100_000
    seed: int = 12345
    workers: int = 1
    method: str = "unif"
    dt: float = 1e-3
    report_times: tuple[float, ...] = (1.0, 2.0, 5.0, 10.0)


@dataclass(frozen=True)
class FirmConfig:
    name: str
    sigma: float | None = None
    sigma_row: tuple[float, ...] | None = None
    jump_mean: float = 0.0
    jump_std: float = 0.0
    x0: float = 2.0
    kappa_log: float = 0.0
    mu: float = -0.001
    gamma: float = -0.001


@dataclass(frozen=True)
class AnalyticConfig:
    labels: tuple[str, ...]
    z: tuple[float, ...]
    rho: float = 0.4
    horizons: tuple[float, ...] = (1.0, 2.0, 5.0, 10.0)


@dataclass(frozen=True)
class CalibrateConfig:
    data: str
    labels: tuple[str, ...] = ()
    free: tuple[str, ...] = ("sigma", "lam", "jump_mean", "jump_std")
    shared_lambda: bool = True
    n_runs: int = 50_000
    seed: int = 12345
    maxiter: int = 200
    xatol: float = 1e-3


@dataclass(frozen=True)
class Config:
    scenario: ScenarioConfig = ScenarioConfig()
    firms: tuple[FirmConfig, ...] = ()
    analytic: AnalyticConfig | None = None
    calibrate: CalibrateConfig | None = None
    source: str = field(default="", compare=False)

    def firm(self, name: str) -> FirmConfig:
        for f in self.firms:
            if f.name == name:
                return f
        raise ConfigError(f"no [firm.{name}] section")

    def system(self, names=None) -> SystemSpec:
        """SystemSpec for all firms, or the named subset in the given order."""
        chosen = self.firms if names is None else tuple(self.firm(n) for n in names)
        if not chosen:
            raise ConfigError("scenario has no [firm.*] sections")
        sc = self.scenario
        try:
            if chosen[0].sigma_row is not None:
                rows = [f.sigma_row for f in chosen]
            else:
                rows = correlated_sigma_matrix([f.sigma for f in chosen], sc.diffusion_rho).tolist()
            specs = tuple(
                FirmSpec(mu=f.mu, sigma_row=tuple(r), jump_mean=f.jump_mean, jump_std=f.jump_std,
                         x0=f.x0, kappa_log=f.kappa_log, gamma=f.gamma, name=f.name)
                for f, r in zip(chosen, rows)
            )
            return SystemSpec(specs, lam=sc.lam, mean_interjump=sc.mean_interjump,
                              horizon=sc.horizon)
        except ModelError as exc:
            raise ConfigError(str(exc)) from None


# ------------------------------------------------------------ parsing

def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _words(text: str) -> tuple[str, ...]:
    return tuple(v for v in text.replace(",", " ").split())


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_CONVERTERS = {
    "float": float, "int": int, "str": str, "bool": _bool,
    "tuple[float, ...]": _floats, "tuple[str, ...]": _words,
    "float | None": float, "tuple[float, ...] | None": _floats,
}


def _line_index(text: str) -> dict[tuple[str, str | None], int]:
    """Line number of each section header and key."""
    out: dict[tuple[str, str | None], int] = {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[(.+)\]$", line)
        if m:
            section = m.group(1).strip()
            out.setdefault((section, None), no)
        elif section is not None:
            key = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
            out.setdefault((section, key), no)
    return out


def _build(cls, section: str, items: dict, lines, extra=None):
    known = {f.name: f for f in fields(cls)}
    kwargs = dict(extra or {})
    for key, value in items.items():
        if key not in known or key in kwargs:
            raise ConfigError(f"unknown key in [{section}]", lines.get((section, key)), key)
        try:
            kwargs[key] = _CONVERTERS[str(known[key].type)](value)
        except ValueError as exc:
            raise ConfigError(str(exc), lines.get((section, key)), key) from None
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"[{section}] {exc}", lines.get((section, None))) from None


def parse_config(text: str, source: str = "<string>") -> Config:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc).replace("\n", " "), getattr(exc, "lineno", None)) from None
    lines = _line_index(text)
    scenario, firms, analytic, calib = ScenarioConfig(), [], None, None
    for name in parser.sections():
        items = dict(parser.items(name))
        if name == "scenario":
            scenario = _build(ScenarioConfig, name, items, lines)
        elif name.startswith("firm."):
            label = name[5:].strip()
            if not label:
                raise ConfigError("empty firm name", lines.get((name, None)))
            firms.append(_build(FirmConfig, name, items, lines, {"name": label}))
        elif name == "analytic":
            analytic = _build(AnalyticConfig, name, items, lines)
        elif name == "calibrate":
            calib = _build(CalibrateConfig, name, items, lines)
        else:
            raise ConfigError(f"unknown section [{name}]", lines.get((name, None)))
    cfg = Config(scenario, tuple(firms), analytic, calib, source)
    validate(cfg, lines)
    return cfg


def validate(cfg: Config, lines=None) -> None:
    lines = lines or {}
    sc = cfg.scenario
    if sc.horizon <= 0:
        raise ConfigError("horizon must be positive", lines.get(("scenario", "horizon")), "horizon")
    if sc.n_runs < 1:
        raise ConfigError("n_runs must be >= 1", lines.get(("scenario", "n_runs")), "n_runs")
    if sc.workers < 1:
        raise ConfigError("workers must be >= 1", lines.get(("scenario", "workers")), "workers")
    if sc.method not in ("unif", "conventional"):
        raise ConfigError("method must be unif or conventional", lines.get(("scenario", "method")),
                          "method")
    if not -1 <= sc.diffusion_rho <= 1:
        raise ConfigError("diffusion_rho must lie in [-1, 1]",
                          lines.get(("scenario", "diffusion_rho")), "diffusion_rho")
    if any(t <= 0 or t > sc.horizon for t in sc.report_times):
        raise ConfigError("report_times must lie in (0, horizon]",
                          lines.get(("scenario", "report_times")), "report_times")
    if len({f.name for f in cfg.firms}) != len(cfg.firms):
        raise ConfigError("duplicate firm names")
    styles = {f.sigma_row is not None for f in cfg.firms}
    if len(styles) > 1:
        raise ConfigError("either every firm gives sigma_row or none does")
    for f in cfg.firms:
        sec = f"firm.{f.name}"
        if (f.sigma is None) == (f.sigma_row is None):
            raise ConfigError("give exactly one of sigma and sigma_row", lines.get((sec, None)))
    if cfg.analytic is not None:
        a = cfg.analytic
        if len(a.labels) != len(a.z):
            raise ConfigError("labels and z must have the same length", lines.get(("analytic", "z")),
                              "z")
        if any(z <= 0 for z in a.z):
            raise ConfigError("z values must be positive", lines.get(("analytic", "z")), "z")
        if not -1 < a.rho < 1:
            raise ConfigError("rho must lie in (-1, 1)", lines.get(("analytic", "rho")), "rho")
    if cfg.calibrate is not None:
        names = {f.name for f in cfg.firms}
        missing = [lab for lab in cfg.calibrate.labels if lab not in names]
        if missing:
            raise ConfigError(f"calibration labels without firm sections: {missing}",
                              lines.get(("calibrate", "labels")), "labels")


def load_config(path) -> Config:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


# ------------------------------------------------------------ serialization

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def _section(name: str, obj, skip=()) -> list[str]:
    out = [f"[{name}]"]
    for key, value in asdict(obj).items():
        if key in skip or value is None:
            continue
        if isinstance(value, list):
            value = tuple(value)
        out.append(f"{key} = {_fmt(value)}")
    return out + [""]


def dump_config(cfg: Config) -> str:
    parts = _section("scenario", cfg.scenario)
    for f in cfg.firms:
        parts += _section(f"firm.{f.name}", f, skip=("name",))
    if cfg.analytic is not None:
        parts += _section("analytic", cfg.analytic)
    if cfg.calibrate is not None:
        parts += _section("calibrate", cfg.calibrate)
    return "\n".join(parts)

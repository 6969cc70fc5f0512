"""Experiment configuration files.

Line-oriented ``key = value`` entries grouped under ``[section]`` headers::

    [domain]
    shape = disc
    radius = 1.0

    [problem]
    m = 2
    alpha = 0 0
    f = constant 1.0

    [grid]
    n_cells = 64

    [solve]
    picard_tol = 1e-10
    cg_tol = 1e-12
    omega = 1.0

    [verify]
    sweep = true
    tol = 1e-8
    barrier = 0.5 0.1 2.0
    singular = false
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import DomainSpec
from .solver import NonlinearitySpec, SolveConfig, parse_nonlinearity

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config"]

_KEYS = {
    "domain": {"shape", "radius", "a", "b", "half_length", "cap_radius", "offset", "center",
               "negative_control", "singular_point"},
    "problem": {"m", "alpha", "f"},
    "grid": {"n_cells"},
    "solve": {"picard_tol", "picard_max_iter", "omega", "cg_tol", "cg_max_iter"},
    "verify": {"sweep", "tol", "barrier", "singular"},
    "output": {"directory"},
}
_SHAPE_KEYS = {"radius", "a", "b", "half_length", "cap_radius", "offset", "center"}


class ConfigError(ValueError):
    def __init__(self, message, line=None, path=None):
        if path is not None:
            where = f"{path}:" + (f"{line}:" if line is not None else "")
        else:
            where = f"line {line}:" if line is not None else ""
        super().__init__(f"{where} {message}".strip())
        self.line = line


@dataclass
class ExperimentConfig:
    domain: DomainSpec
    m: int
    alpha: tuple[float, ...]
    f: NonlinearitySpec
    n_cells: int
    solve: SolveConfig = field(default_factory=SolveConfig)
    sweep: bool = True
    sweep_tol: float = 1e-8
    barrier: tuple[float, float, float] | None = None
    singular: bool = False
    output_dir: str | None = None

    @property
    def negative_control(self) -> bool:
        return self.domain.negative_control


def _line_index(text: str) -> dict[tuple[str, str], int]:
    index = {}
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"\[(.+)\]$", line)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"([^=:#;]+?)\s*[=:]", line)
        if m and section is not None:
            index[(section, m.group(1).strip().lower())] = n
    return index


def parse_config(text: str, path=None) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text, source=str(path or "<config>"))
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"cannot parse line {line.strip()!r}", lineno, path) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("entry before any [section] header", exc.lineno, path) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None), path) from None

    lines = _line_index(text)

    def fail(section, key, message):
        raise ConfigError(f"[{section}] {key}: {message}", lines.get((section, key)), path)

    for section in cp.sections():
        if section not in _KEYS:
            raise ConfigError(f"unknown section [{section}]", None, path)
        for key in cp[section]:
            if key not in _KEYS[section]:
                fail(section, key, "unknown key")

    def get(section, key, conv=str, default=None, required=False):
        if not cp.has_option(section, key):
            if required:
                raise ConfigError(f"missing required key {key!r} in section [{section}]", None, path)
            return default
        raw = cp.get(section, key)
        try:
            return conv(raw)
        except ValueError as exc:
            fail(section, key, f"invalid value {raw!r} ({exc})")

    def floats(raw):
        return tuple(float(x) for x in raw.replace(",", " ").split())

    def boolean(raw):
        v = raw.strip().lower()
        if v in ("true", "yes", "on", "1"):
            return True
        if v in ("false", "no", "off", "0"):
            return False
        raise ValueError("expected true/false")

    shape = get("domain", "shape", required=True)
    params = {k: get("domain", k, float) for k in _SHAPE_KEYS if cp.has_option("domain", k)}
    sp = get("domain", "singular_point", floats, default=(0.0, 0.0))
    if len(sp) != 2:
        fail("domain", "singular_point", "expected two coordinates")
    try:
        domain = DomainSpec(shape, params, sp, bool(get("domain", "negative_control", boolean, default=False)))
    except ValueError as exc:
        fail("domain", "shape", str(exc))

    m = get("problem", "m", int, required=True)
    if m < 1:
        fail("problem", "m", "must be >= 1")
    alpha = get("problem", "alpha", floats, default=(0.0,) * m)
    if len(alpha) != m:
        fail("problem", "alpha", f"expected {m} values, got {len(alpha)}")
    f = get("problem", "f", parse_nonlinearity, required=True)

    n_cells = get("grid", "n_cells", int, required=True)
    if n_cells < 8:
        fail("grid", "n_cells", "must be >= 8")

    defaults = SolveConfig()
    try:
        solve = SolveConfig(
            picard_tol=get("solve", "picard_tol", float, default=defaults.picard_tol),
            picard_max_iter=get("solve", "picard_max_iter", int, default=defaults.picard_max_iter),
            omega=get("solve", "omega", float, default=defaults.omega),
            cg_tol=get("solve", "cg_tol", float, default=defaults.cg_tol),
            cg_max_iter=get("solve", "cg_max_iter", int, default=defaults.cg_max_iter),
        )
    except ValueError as exc:
        raise ConfigError(f"[solve] {exc}", None, path) from None

    barrier = get("verify", "barrier", floats, default=None)
    if barrier is not None and len(barrier) != 3:
        fail("verify", "barrier", "expected three numbers: a r K")
    tol = get("verify", "tol", float, default=1e-8)
    if not tol > 0:
        fail("verify", "tol", "must be positive")

    return ExperimentConfig(
        domain=domain,
        m=m,
        alpha=alpha,
        f=f,
        n_cells=n_cells,
        solve=solve,
        sweep=get("verify", "sweep", boolean, default=True),
        sweep_tol=tol,
        barrier=barrier,
        singular=get("verify", "singular", boolean, default=False),
        output_dir=get("output", "directory", default=None),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, path) from None
    return parse_config(text, path)

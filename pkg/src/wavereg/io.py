"""File formats: run configs, CSV tables, JSON manifests and Euler reference profiles.

Run configs are flat ``key = value`` files (an optional ``[run]`` header and
``#``/``;`` comments are allowed).  Recognised keys::

    system              classical | regularized | hp            (required)
    x_left, x_right     domain bounds                            (default -60, 60)
    n_modes             even number of grid points               (default 1024)
    dt, t_end           step size and final time                 (default 0.05, 15)
    scheme              ifrk4 | strang                           (default ifrk4)
    dealias             true | false                             (default false)
    h0, g               depth and gravity                        (default 1, 1)
    ic                  gaussian | solitary | file               (default gaussian)
    amp, width          gaussian eta = amp exp(-x^2/width)       (default 0.3, 40)
    velocity            equal | sqrtK                            (default equal)
    c, tol, max_iter    solitary initial condition
    path                profile CSV (x, eta, u) for ic = file; relative to the config
    snapshot_times      comma-separated times within [0, t_end]  (default t_end)
    diagnostics_stride  steps between diagnostics rows           (default 1)
    breaking_threshold  spectral-tail level flagging near-breaking (default 1e-4)

CSV files carry a one-line header and floats printed with 17 significant
digits, so values survive a write/read round trip bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .diagnostics import DEFAULT_BREAKING_THRESHOLD
from .errors import ConfigError
from .spectral import Grid, inner_product, make_grid
from .systems import PhysParams, State, SystemKind
from .timestepper import SCHEMES


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value)) if not math.isfinite(value) else f"{float(value):.17g}"


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to a temp file in the target directory, then rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(path) -> dict[str, np.ndarray]:
    """Read a headed numeric CSV into a column dict; ``#`` lines are skipped."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(lines)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ConfigError(f"{path}: empty CSV file") from None
    data = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise ConfigError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
        try:
            data.append([float(v) for v in row])
        except ValueError as exc:
            raise ConfigError(f"{path}: row {lineno}: {exc}") from None
    arr = np.array(data, dtype=float).reshape(len(data), len(header))
    return {name: arr[:, i].copy() for i, name in enumerate(header)}


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_profile(path, grid: Grid, eta, u) -> None:
    write_csv(path, ["x", "eta", "u"], zip(grid.x, eta, u))


def read_profile(path):
    cols = read_csv(path)
    missing = {"x", "eta", "u"} - set(cols)
    if missing:
        raise ConfigError(f"{path}: profile CSV lacks columns {sorted(missing)}")
    return cols["x"], cols["eta"], cols["u"]


def state_from_profile(path, grid: Grid) -> State:
    """Load a profile CSV whose sample positions coincide with ``grid``."""
    x, eta, u = read_profile(path)
    if x.size != grid.n_modes or not np.allclose(x, grid.x, rtol=0, atol=1e-9 * grid.length):
        raise ConfigError(f"{path}: sample positions do not match the grid "
                          f"[{grid.x_left}, {grid.x_right}) with {grid.n_modes} modes")
    return State(grid, eta, u, 0.0)


# -- run configuration -------------------------------------------------------

_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*[=:]\s*(.*?)\s*$")


def _parse_pairs(text: str, source: str) -> dict[str, tuple[str, int]]:
    pairs: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = re.split(r"\s[#;]|^[#;]", raw, maxsplit=1)[0].strip()
        if not line or re.fullmatch(r"\[[^\]]*\]", line):
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = m.group(1).lower(), m.group(2)
        if key in pairs:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first on line {pairs[key][1]})")
        pairs[key] = (value, lineno)
    return pairs


_KNOWN_KEYS = {
    "system", "x_left", "x_right", "n_modes", "dt", "t_end", "scheme", "dealias", "h0", "g",
    "ic", "amp", "width", "velocity", "c", "tol", "max_iter", "path", "snapshot_times",
    "diagnostics_stride", "breaking_threshold",
}


@dataclass(frozen=True)
class RunConfig:
    system: SystemKind
    x_left: float = -60.0
    x_right: float = 60.0
    n_modes: int = 1024
    dt: float = 0.05
    t_end: float = 15.0
    scheme: str = "ifrk4"
    dealias: bool = False
    h0: float = 1.0
    g: float = 1.0
    ic: str = "gaussian"
    amp: float = 0.3
    width: float = 40.0
    velocity: str = "equal"
    c: Optional[float] = None
    tol: float = 1.8e-13
    max_iter: int = 10000
    path: Optional[str] = None
    snapshot_times: tuple = ()
    diagnostics_stride: int = 1
    breaking_threshold: float = DEFAULT_BREAKING_THRESHOLD
    source: str = field(default="<config>", compare=False)

    @property
    def grid(self) -> Grid:
        return make_grid(self.x_left, self.x_right, self.n_modes)

    @property
    def params(self) -> PhysParams:
        return PhysParams(self.h0, self.g)

    def with_system(self, system) -> "RunConfig":
        kw = self.as_dict()
        kw["system"] = SystemKind.parse(system)
        kw["snapshot_times"] = tuple(self.snapshot_times)
        return RunConfig(**kw, source=self.source)

    def as_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            if name == "source":
                continue
            out[name] = getattr(self, name)
        return out

    def to_text(self) -> str:
        """Canonical config text; parsing it yields an equal RunConfig."""
        lines = []
        for key, value in self.as_dict().items():
            if value is None:
                continue
            if key == "system":
                value = value.value
            elif key == "snapshot_times":
                value = ", ".join(fmt(t) for t in value)
            elif key == "dealias":
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = fmt(value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def _convert(pairs, key, conv, default, source, check=None, message=""):
    if key not in pairs:
        return default
    raw, lineno = pairs[key]
    try:
        value = conv(raw)
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {raw!r} ({exc})") from None
    if check is not None and not check(value):
        raise ConfigError(f"{source}:{lineno}: {key} {message}, got {raw!r}")
    return value


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true or false")


def _int(raw: str) -> int:
    value = float(raw)
    if value != int(value):
        raise ValueError("expected an integer")
    return int(value)


def _finite_float(raw: str) -> float:
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError("expected a finite number")
    return value


def _times(raw: str) -> tuple:
    return tuple(_finite_float(t) for t in raw.replace(";", ",").split(",") if t.strip())


def parse_config(text: str, source: str = "<config>", base_dir=None) -> RunConfig:
    """Parse and validate a run config; errors name the offending line."""
    pairs = _parse_pairs(text, source)
    for key, (_, lineno) in pairs.items():
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
    if "system" not in pairs:
        raise ConfigError(f"{source}: missing required key 'system'")
    f = lambda key, default, check=None, msg="": _convert(pairs, key, _finite_float, default, source, check, msg)  # noqa: E731
    kw = dict(
        system=_convert(pairs, "system", SystemKind.parse, None, source),
        x_left=f("x_left", -60.0),
        x_right=f("x_right", 60.0),
        n_modes=_convert(pairs, "n_modes", _int, 1024, source, lambda n: n >= 4 and n % 2 == 0,
                         "must be an even integer >= 4"),
        dt=f("dt", 0.05, lambda v: v > 0, "must be positive"),
        t_end=f("t_end", 15.0, lambda v: v >= 0, "must be non-negative"),
        scheme=_convert(pairs, "scheme", str.lower, "ifrk4", source, lambda s: s in SCHEMES,
                        f"must be one of {', '.join(SCHEMES)}"),
        dealias=_convert(pairs, "dealias", _bool, False, source),
        h0=f("h0", 1.0, lambda v: v > 0, "must be positive"),
        g=f("g", 1.0, lambda v: v > 0, "must be positive"),
        ic=_convert(pairs, "ic", str.lower, "gaussian", source,
                    lambda s: s in ("gaussian", "solitary", "file"), "must be gaussian, solitary or file"),
        amp=f("amp", 0.3),
        width=f("width", 40.0, lambda v: v > 0, "must be positive"),
        velocity=_convert(pairs, "velocity", str, "equal", source, lambda s: s in ("equal", "sqrtK"),
                          "must be 'equal' or 'sqrtK'"),
        c=f("c", None),
        tol=f("tol", 1.8e-13, lambda v: v > 0, "must be positive"),
        max_iter=_convert(pairs, "max_iter", _int, 10000, source, lambda n: n >= 1, "must be >= 1"),
        diagnostics_stride=_convert(pairs, "diagnostics_stride", _int, 1, source, lambda n: n >= 1,
                                    "must be an integer >= 1"),
        breaking_threshold=f("breaking_threshold", DEFAULT_BREAKING_THRESHOLD, lambda v: v > 0,
                             "must be positive"),
    )
    if kw["x_left"] >= kw["x_right"]:
        raise ConfigError(f"{source}:{pairs.get('x_right', ('', '?'))[1]}: need x_left < x_right")
    if kw["ic"] == "solitary" and kw["c"] is None:
        raise ConfigError(f"{source}:{pairs['ic'][1]}: ic = solitary requires key 'c'")
    if kw["ic"] == "file":
        if "path" not in pairs:
            raise ConfigError(f"{source}:{pairs['ic'][1]}: ic = file requires key 'path'")
        raw, lineno = pairs["path"]
        p = Path(raw)
        if not p.is_absolute() and base_dir is not None:
            p = Path(base_dir) / p
        if not p.exists():
            raise ConfigError(f"{source}:{lineno}: profile file {str(p)!r} does not exist")
        kw["path"] = str(p.resolve())
    times = _convert(pairs, "snapshot_times", _times, (kw["t_end"],), source)
    for t in times:
        if not 0 <= t <= kw["t_end"]:
            raise ConfigError(f"{source}:{pairs['snapshot_times'][1]}: snapshot time {t} outside [0, t_end]")
    kw["snapshot_times"] = tuple(sorted(set(times)))
    return RunConfig(**kw, source=source)


def load_config(path) -> RunConfig:
    """Load a config file, or the config echoed inside a run manifest (``.json``)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror}") from None
    if path.suffix == ".json":
        try:
            text = json.loads(text)["config_text"]
        except (ValueError, KeyError, TypeError):
            raise ConfigError(f"{path}: not a run manifest with a 'config_text' entry") from None
    return parse_config(text, source=str(path), base_dir=path.parent)


# -- Euler reference profiles -----------------------------------------------

@dataclass(frozen=True, eq=False)
class EulerReference:
    c: float
    x: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        if self.x.shape != self.eta.shape or self.x.ndim != 1 or self.x.size < 2:
            raise ConfigError("Euler reference needs matching 1-D x and eta arrays")
        if np.any(np.diff(self.x) <= 0):
            raise ConfigError("Euler reference x must be strictly increasing")

    def resample(self, grid: Grid) -> np.ndarray:
        """Linear interpolation onto the grid positions, zero outside the sampled range."""
        return np.interp(grid.x, self.x, self.eta, left=0.0, right=0.0)


_SPEED_COMMENT = re.compile(r"#\s*c\s*[=:]\s*([-+0-9.eE]+)")


def load_euler_reference(path, c: Optional[float] = None) -> EulerReference:
    """Read an ``x, eta`` CSV; the speed comes from a ``# c = ...`` line unless given."""
    if c is None:
        with open(path) as fh:
            for line in fh:
                m = _SPEED_COMMENT.match(line.strip())
                if m:
                    c = float(m.group(1))
                    break
    if c is None:
        raise ConfigError(f"{path}: no '# c = <speed>' line and no speed given")
    cols = read_csv(path)
    if "x" not in cols or "eta" not in cols:
        raise ConfigError(f"{path}: Euler reference needs 'x' and 'eta' columns")
    return EulerReference(float(c), cols["x"], cols["eta"])


def relative_difference(reference_eta, eta, grid: Grid) -> float:
    """``||eta_ref - eta||_L2 / ||eta_ref||_L2`` on the grid."""
    diff = np.asarray(reference_eta) - np.asarray(eta)
    return math.sqrt(inner_product(diff, diff, grid) / inner_product(reference_eta, reference_eta, grid))

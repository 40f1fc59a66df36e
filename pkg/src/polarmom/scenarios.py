"""TOML scenario files and the built-in scenario set.

A scenario file looks like::

    name = "disk"
    frequency = 1.2e9            # Hz
    length_unit = "wavelength"   # m | mm | wavelength (free space)

    [background]                 # optional, defaults to vacuum
    eps_r = 1.0
    sigma = 0.0                  # S/m

    [discretization]             # all optional
    cell_size = 0.05
    n_phi = 64
    radius = 0.3
    feature_size = 0.1
    subsamples = 1               # s > 1 averages chi over s x s points per cell

    [observation]
    radius_factor = 3.0          # or radius = ...
    samples = 360

    [solver]
    tol = 1e-4
    max_iter = 500

    [[object]]
    type = "circle"              # circle | rectangle | layered | raster
    center = [0.0, 0.0]
    radius = 0.2
    eps_r = 2.0
    sigma = 0.0

Raster objects read a whitespace-delimited permittivity matrix with
``file = "eps.txt"`` (relative to the scenario file), plus ``origin`` and
``cell``; conductivity comes from ``sigma_file`` or a scalar ``sigma``.
"""

from __future__ import annotations

import re
import sys
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .model import (Background, Circle, ConfigError, Layered, MaterialMap, Raster, Rectangle,
                    Scenario, SolverSettings, wavelength)

__all__ = ["load_scenario", "parse_scenario", "builtin_names", "resolve_scenario"]

UNITS = ("m", "mm", "wavelength")


def builtin_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("polarmom.data").iterdir()
                  if p.name.endswith(".toml"))


def resolve_scenario(spec: str) -> Scenario:
    """Load a scenario from a path, or by built-in name if no such file exists."""
    p = Path(spec)
    if p.exists():
        return load_scenario(p)
    if spec in builtin_names():
        text = resources.files("polarmom.data").joinpath(spec + ".toml").read_text()
        return parse_scenario(text, source=f"<builtin {spec}>")
    raise ConfigError(f"{spec}: no such scenario file or built-in scenario")


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    return parse_scenario(text, source=str(path), base=path.parent)


class _Ctx:
    """Field lookup that reports the source line on error."""

    def __init__(self, text, source):
        self.lines = text.splitlines()
        self.source = source

    def line_of(self, key, section=None, index=0):
        start = 0
        if section is not None:
            hits = [i for i, ln in enumerate(self.lines)
                    if re.match(rf"\s*\[+\s*{re.escape(section)}\s*\]+", ln)]
            if len(hits) > index:
                start = hits[index]
        for i in range(start, len(self.lines)):
            if i > start and section is not None and self.lines[i].lstrip().startswith("["):
                break
            if re.match(rf"\s*{re.escape(key)}\s*=", self.lines[i]):
                return i + 1
        return None

    def fail(self, field, msg, section=None, index=0):
        key = field.rsplit(".", 1)[-1].split("[")[0]
        line = self.line_of(key, section, index)
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: {field}: {msg}")


def _num(ctx, table, key, field, section=None, index=0, default=None, positive=False, allow_zero=True):
    if key not in table:
        if default is None:
            ctx.fail(field, "missing", section, index)
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        ctx.fail(field, f"expected a number, got {v!r}", section, index)
    v = float(v)
    if not np.isfinite(v):
        ctx.fail(field, "must be finite", section, index)
    if positive and (v < 0 or (v == 0 and not allow_zero)):
        ctx.fail(field, "must be positive", section, index)
    return v


def _pair(ctx, table, key, field, section, index, scale, default=(0.0, 0.0)):
    v = table.get(key, list(default))
    if not isinstance(v, list) or len(v) != 2 or not all(isinstance(c, (int, float)) for c in v):
        ctx.fail(field, "expected [x, y]", section, index)
    return (float(v[0]) * scale, float(v[1]) * scale)


def _list(ctx, table, key, field, section, index, n=None, default=None):
    if key not in table:
        if default is not None:
            return default
        ctx.fail(field, "missing", section, index)
    v = table[key]
    if not isinstance(v, list) or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v):
        ctx.fail(field, "expected a list of numbers", section, index)
    if n is not None and len(v) != n:
        ctx.fail(field, f"expected {n} entries, got {len(v)}", section, index)
    return [float(c) for c in v]


def _object(ctx, obj, i, scale, base):
    sec = "object"
    f = f"object[{i}]"
    kind = obj.get("type")
    if kind == "circle":
        r = _num(ctx, obj, "radius", f + ".radius", sec, i, positive=True, allow_zero=False)
        return Circle(_pair(ctx, obj, "center", f + ".center", sec, i, scale), r * scale,
                      _num(ctx, obj, "eps_r", f + ".eps_r", sec, i, positive=True),
                      _num(ctx, obj, "sigma", f + ".sigma", sec, i, default=0.0, positive=True))
    if kind == "rectangle":
        w = _num(ctx, obj, "width", f + ".width", sec, i, positive=True, allow_zero=False)
        h = _num(ctx, obj, "height", f + ".height", sec, i, positive=True, allow_zero=False)
        return Rectangle(_pair(ctx, obj, "center", f + ".center", sec, i, scale), w * scale, h * scale,
                         _num(ctx, obj, "eps_r", f + ".eps_r", sec, i, positive=True),
                         _num(ctx, obj, "sigma", f + ".sigma", sec, i, default=0.0, positive=True))
    if kind == "layered":
        radii = _list(ctx, obj, "radii", f + ".radii", sec, i)
        eps = _list(ctx, obj, "eps_r", f + ".eps_r", sec, i, n=len(radii))
        sig = _list(ctx, obj, "sigma", f + ".sigma", sec, i, n=len(radii), default=[0.0] * len(radii))
        if not radii or any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
            ctx.fail(f + ".radii", "must be positive and strictly increasing", sec, i)
        return Layered(_pair(ctx, obj, "center", f + ".center", sec, i, scale),
                       tuple(r * scale for r in radii), tuple(eps), tuple(sig))
    if kind == "raster":
        if "file" not in obj:
            ctx.fail(f + ".file", "missing", sec, i)
        try:
            eps = np.atleast_2d(np.loadtxt(base / obj["file"], dtype=float))
        except (OSError, ValueError) as exc:
            ctx.fail(f + ".file", f"cannot read matrix: {exc}", sec, i)
        if "sigma_file" in obj:
            try:
                sig = np.atleast_2d(np.loadtxt(base / obj["sigma_file"], dtype=float))
            except (OSError, ValueError) as exc:
                ctx.fail(f + ".sigma_file", f"cannot read matrix: {exc}", sec, i)
            if sig.shape != eps.shape:
                ctx.fail(f + ".sigma_file", "shape differs from the permittivity matrix", sec, i)
        else:
            sig = np.full(eps.shape, _num(ctx, obj, "sigma", f + ".sigma", sec, i, default=0.0, positive=True))
        cell = _num(ctx, obj, "cell", f + ".cell", sec, i, positive=True, allow_zero=False)
        return Raster(eps, sig, _pair(ctx, obj, "origin", f + ".origin", sec, i, scale), cell * scale)
    ctx.fail(f + ".type", f"unknown object type {kind!r}", sec, i)


def parse_scenario(text: str, source: str = "<string>", base: Path | None = None) -> Scenario:
    """Build a :class:`Scenario` from TOML text; lengths end up in metres."""
    base = Path(".") if base is None else base
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    ctx = _Ctx(text, source)
    freq = _num(ctx, doc, "frequency", "frequency", positive=True, allow_zero=False)
    unit = doc.get("length_unit", "m")
    if unit not in UNITS:
        ctx.fail("length_unit", f"must be one of {', '.join(UNITS)}")
    scale = {"m": 1.0, "mm": 1e-3, "wavelength": wavelength(freq)}[unit]

    bgt = doc.get("background", {})
    bg = Background(_num(ctx, bgt, "eps_r", "background.eps_r", "background", default=1.0, positive=True),
                    _num(ctx, bgt, "sigma", "background.sigma", "background", default=0.0, positive=True))

    objs = doc.get("object", [])
    if not isinstance(objs, list):
        ctx.fail("object", "use [[object]] array tables")
    shapes = tuple(_object(ctx, o, i, scale, base) for i, o in enumerate(objs))

    dt = doc.get("discretization", {})
    sec = "discretization"

    def opt(key, kind=float):
        if key not in dt:
            return None
        v = _num(ctx, dt, key, f"{sec}.{key}", sec, positive=True, allow_zero=False)
        return v * scale if kind is float else int(v)

    n_phi = opt("n_phi", int)
    if n_phi is not None and (n_phi < 2 or n_phi & (n_phi - 1)):
        ctx.fail(f"{sec}.n_phi", "must be a power of two", sec)

    subsamples = 1
    if "subsamples" in dt:
        subsamples = int(_num(ctx, dt, "subsamples", f"{sec}.subsamples", sec, positive=True, allow_zero=False))

    ot = doc.get("observation", {})
    obs_r = ot.get("radius")
    if obs_r is not None:
        obs_r = _num(ctx, ot, "radius", "observation.radius", "observation", positive=True, allow_zero=False) * scale
    factor = _num(ctx, ot, "radius_factor", "observation.radius_factor", "observation", default=3.0, positive=True)
    samples = int(_num(ctx, ot, "samples", "observation.samples", "observation", default=360, positive=True,
                       allow_zero=False))

    st = doc.get("solver", {})
    tol = _num(ctx, st, "tol", "solver.tol", "solver", default=1e-4, positive=True, allow_zero=False)
    max_iter = int(_num(ctx, st, "max_iter", "solver.max_iter", "solver", default=500, positive=True))

    return Scenario(
        name=str(doc.get("name", Path(source).stem)),
        frequency=freq,
        background=bg,
        material=MaterialMap(shapes),
        cell_size=opt("cell_size"),
        feature_size=opt("feature_size"),
        n_phi=n_phi,
        radius=opt("radius"),
        obs_radius=obs_r,
        obs_radius_factor=factor,
        obs_samples=samples,
        subsamples=subsamples,
        solver=SolverSettings(tol, max_iter),
    )

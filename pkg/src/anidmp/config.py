"""Run configuration files (TOML).

Example::

    [mesh]
    generator = "mesh45"     # or: file = "mesh.msh"
    n = 40

    [field]
    builtin = "example1"     # or: constant = [d11, d12, d22]
                             # or: rotated = {theta = "pi/4", k1 = "100", k2 = "1"}
    quadrature = "vertex"

    [time]
    theta = 1.0
    dt = 1.5e-4
    n_steps = 10
    lumped = false
    initial = "radial"

    [output]
    trace_csv = "trace.csv"
    vtk = "final.vtk"
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .problems import RAMP_KINDS
from .tensor import QUADRATURE_RULES, field_from_spec

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "parse_generator"]

GENERATORS = ("mesh45", "mesh135")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    mesh_generator: str | None
    mesh_n: int | None
    mesh_holed: bool
    mesh_file: str | None
    mesh_format: str | None
    field_spec: dict
    quadrature: str
    theta: float
    dt: float
    n_steps: int
    lumped: bool
    initial: str
    trace_csv: str | None
    vtk: str | None
    summary_json: str | None

    def build_field(self):
        return field_from_spec(self.field_spec)

    def build_mesh(self):
        from .mesh import generate_mesh45, generate_mesh135
        from .mesh_io import read_mesh

        if self.mesh_file is not None:
            return read_mesh(self.mesh_file, self.mesh_format)
        gen = {"mesh45": generate_mesh45, "mesh135": generate_mesh135}[self.mesh_generator]
        return gen(self.mesh_n, self.mesh_holed)


def parse_generator(text):
    """Parse ``"mesh45:40"`` into ``("mesh45", 40)``."""
    name, sep, n = str(text).partition(":")
    if name not in GENERATORS or not sep:
        raise ConfigError(f"generator must look like mesh45:N or mesh135:N, got {text!r}")
    try:
        return name, int(n)
    except ValueError:
        raise ConfigError(f"bad cell count in {text!r}") from None


def _section(data, name):
    sec = data.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _known(sec, name, keys):
    extra = set(sec) - set(keys)
    if extra:
        raise ConfigError(f"unknown keys in [{name}]: {', '.join(sorted(extra))}")


def parse_config(data, base_dir="."):
    """Validate a parsed TOML mapping and return a :class:`RunConfig`."""
    extra = set(data) - {"mesh", "field", "time", "output"}
    if extra:
        raise ConfigError(f"unknown sections: {', '.join(sorted(extra))}")
    base = Path(base_dir)

    mesh = _section(data, "mesh")
    _known(mesh, "mesh", ("generator", "n", "holed", "file", "format"))
    if ("file" in mesh) == ("generator" in mesh):
        raise ConfigError("[mesh] needs exactly one of generator or file")
    gen = n = mfile = None
    if "generator" in mesh:
        gen = mesh["generator"]
        if ":" in str(gen):
            gen, n = parse_generator(gen)
        if gen not in GENERATORS:
            raise ConfigError(f"unknown generator {gen!r}")
        n = int(mesh.get("n", n or 0))
        if n <= 0:
            raise ConfigError("[mesh] n must be a positive integer")
    else:
        mfile = str(base / mesh["file"])

    fld = dict(_section(data, "field"))
    quad = fld.pop("quadrature", "vertex")
    if quad not in QUADRATURE_RULES:
        raise ConfigError(f"unknown quadrature {quad!r}")
    if not fld:
        raise ConfigError("[field] needs builtin, constant or rotated")
    field_from_spec(fld)  # validate now

    tm = _section(data, "time")
    _known(tm, "time", ("theta", "dt", "n_steps", "lumped", "initial"))
    if "dt" not in tm:
        raise ConfigError("[time] dt is required")
    theta, dt = float(tm.get("theta", 1.0)), float(tm["dt"])
    n_steps = int(tm.get("n_steps", 10))
    if not 0 <= theta <= 1 or dt <= 0 or n_steps < 1:
        raise ConfigError("[time] needs 0 <= theta <= 1, dt > 0 and n_steps >= 1")
    initial = tm.get("initial", "radial")
    if initial not in RAMP_KINDS:
        raise ConfigError(f"[time] initial must be one of {RAMP_KINDS}")

    out = _section(data, "output")
    _known(out, "output", ("trace_csv", "vtk", "summary_json"))
    path = lambda k: str(base / out[k]) if k in out else None  # noqa: E731

    return RunConfig(gen, n, bool(mesh.get("holed", True)), mfile, mesh.get("format"), fld,
                     quad, theta, dt, n_steps, bool(tm.get("lumped", False)), initial,
                     path("trace_csv"), path("vtk"), path("summary_json"))


def load_config(path):
    p = Path(path)
    try:
        with open(p, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from None
    return parse_config(data, p.parent)

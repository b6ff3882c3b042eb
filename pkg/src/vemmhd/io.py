"""Run configuration, result tables and VTK field output."""

from __future__ import annotations

import csv
import io as _io
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .mesh import FAMILIES
from .problems import MAGNETIC_BCS, PROBLEMS

# ---------------------------------------------------------------------------
# configuration


class ConfigError(ValueError):
    def __init__(self, key, msg):
        super().__init__(f"{key}: {msg}")
        self.key = key


CAVITY_DEFAULTS = {"nu": 0.01, "sigma": 100.0, "mu": 1.0}


@dataclass
class RunConfig:
    family: str = "square"
    levels: list = field(default_factory=lambda: [1, 2, 3, 4])
    k: int = 1
    nu: float = 1.0
    mu: float = 1.0
    sigma: float = 1.0
    T: float = 1.0
    dt: object = "auto"  # "auto" (N + 1 = ceil(T / h)), a float, or a list of "<f>h" factors
    problem: str = "example1"
    out: str = "results"
    snapshot_times: list = field(default_factory=list)
    h: float | None = None
    dt_factors: list = field(default_factory=lambda: [1.0, 10.0, 100.0])
    steps: int = 50
    magnetic_bc: str = "tangential"
    residual_steps: int = 3
    explicit: set = field(default_factory=set, repr=False, compare=False)

    def with_problem_defaults(self) -> "RunConfig":
        """Apply cavity parameter defaults to keys that were not set explicitly."""
        if self.problem == "cavity":
            for key, val in CAVITY_DEFAULTS.items():
                if key not in self.explicit:
                    setattr(self, key, val)
        return self


def _float(key, v):
    try:
        return float(v)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {v!r}") from None


def _int(key, v):
    try:
        return int(v)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {v!r}") from None


def parse_levels(key, v) -> list[int]:
    out = []
    for part in str(v).replace(" ", "").split(","):
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(_int(key, a), _int(key, b) + 1))
        else:
            out.append(_int(key, part))
    if not out or any(l < 1 or l > 6 for l in out):
        raise ConfigError(key, f"levels must lie in 1..6, got {v!r}")
    return out


def parse_dt(key, v):
    """'auto', a positive float, or a list of mesh-size multiples like 'h,10h'."""
    s = str(v).strip()
    if s == "auto":
        return "auto"
    if "h" in s:
        facs = []
        for part in s.split(","):
            part = part.strip()
            if not part.endswith("h"):
                raise ConfigError(key, f"mixed dt list {v!r}")
            facs.append(1.0 if part == "h" else _float(key, part[:-1]))
        if any(f <= 0 for f in facs):
            raise ConfigError(key, "dt factors must be positive")
        return facs
    val = _float(key, s)
    if val <= 0:
        raise ConfigError(key, "dt must be positive")
    return val


def _floats(key, v):
    return [_float(key, x) for x in str(v).split(",") if x.strip()]


KNOWN_KEYS = ("family", "levels", "k", "nu", "mu", "sigma", "T", "dt", "problem", "out",
              "snapshot_times", "h", "dt_factors", "steps", "magnetic_bc", "residual_steps")

_PAIR = re.compile(r",\s*(?=[A-Za-z_]\w*\s*=)")


def parse_config(text: str) -> RunConfig:
    """Parse flat ``key = value`` text; several pairs may share a line, separated by commas."""
    cfg = RunConfig()
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for item in _PAIR.split(line):
            if "=" not in item:
                raise ConfigError(item.strip(), "expected key = value")
            key, val = (x.strip() for x in item.split("=", 1))
            set_option(cfg, key, val)
    validate(cfg)
    return cfg.with_problem_defaults()


def set_option(cfg: RunConfig, key: str, val) -> None:
    if key not in KNOWN_KEYS:
        raise ConfigError(key, "unknown key")
    if key == "levels":
        v = parse_levels(key, val)
    elif key in ("k", "steps", "residual_steps"):
        v = _int(key, val)
    elif key in ("nu", "mu", "sigma", "T", "h"):
        v = _float(key, val)
    elif key == "dt":
        v = parse_dt(key, val)
    elif key in ("snapshot_times", "dt_factors"):
        v = _floats(key, val)
    else:
        v = str(val)
    setattr(cfg, key, v)
    cfg.explicit.add(key)


def validate(cfg: RunConfig) -> None:
    if cfg.k not in (1, 2):
        raise ConfigError("k", f"must be 1 or 2, got {cfg.k}")
    for key in ("nu", "mu", "sigma", "T"):
        if not getattr(cfg, key) > 0:
            raise ConfigError(key, "must be positive")
    if cfg.family not in FAMILIES:
        raise ConfigError("family", f"unknown family {cfg.family!r}")
    if cfg.problem not in PROBLEMS:
        raise ConfigError("problem", f"unknown problem {cfg.problem!r}")
    if cfg.magnetic_bc not in MAGNETIC_BCS:
        raise ConfigError("magnetic_bc", f"unknown magnetic boundary condition {cfg.magnetic_bc!r}")
    if cfg.h is not None and not cfg.h > 0:
        raise ConfigError("h", "must be positive")
    if cfg.steps < 1:
        raise ConfigError("steps", "must be >= 1")
    if any(f <= 0 for f in cfg.dt_factors):
        raise ConfigError("dt_factors", "must be positive")
    if any(t < 0 or t > cfg.T for t in cfg.snapshot_times):
        raise ConfigError("snapshot_times", "times must lie in [0, T]")


# ---------------------------------------------------------------------------
# tables

TABLE_NORMS = ("u_L2", "u_H1", "p_L2", "b_L2", "b_H1", "q")


def format_error(e: float) -> str:
    return f"{e:.4e}"


def format_rate(r) -> str:
    """Two decimals with trailing zeros dropped, keeping one decimal ('2.0', '2.04')."""
    if r is None or (isinstance(r, float) and not math.isfinite(r)):
        return "nan"
    s = f"{r:.2f}"
    if s.endswith("0"):
        s = s[:-1]
    return s


def table_header() -> list[str]:
    head = ["mesh", "h"]
    for n in TABLE_NORMS:
        head += [f"err_{n}", "rate"]
    return head


def write_table(reports, rates=None, label: str | None = None) -> str:
    """CSV rows of error reports, with the rate of each level against the previous one."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table_header())
    for i, rep in enumerate(reports):
        row = [f"{label}-{rep.level}" if label else str(rep.level), f"{rep.h:.4f}"]
        for n in TABLE_NORMS:
            row.append(format_error(getattr(rep, n)))
            row.append("-" if i == 0 or rates is None else format_rate(rates[i - 1][n]))
        w.writerow(row)
    return buf.getvalue()


def read_table(text: str) -> list[dict]:
    """Parse a table back into dicts: {'mesh', 'h', norm: error, norm + '_rate': rate or None}."""
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or rows[0] != table_header():
        raise ValueError("not a convergence table")
    out = []
    for r in rows[1:]:
        d = {"mesh": r[0], "h": float(r[1])}
        for j, n in enumerate(TABLE_NORMS):
            d[n] = float(r[2 + 2 * j])
            rv = r[3 + 2 * j]
            d[n + "_rate"] = None if rv in ("-", "nan") else float(rv)
        out.append(d)
    return out


def write_div_table(rows) -> str:
    """Rows of (mesh label, h, max over steps of the L2 norm of div u_h)."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mesh", "h", "div_u_L2"])
    for label, h, val in rows:
        w.writerow([label, f"{h:.4f}", f"{val:.4e}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# VTK


def vertex_vectors(disc, dofs, space: str) -> np.ndarray:
    """Average over adjacent cells of the L2 projection evaluated at mesh vertices."""
    mesh = disc.mesh
    projs = disc.vel_proj if space == "velocity" else disc.mag_proj
    lay = disc.vel if space == "velocity" else disc.mag
    acc = np.zeros((mesh.n_vertices, 2))
    cnt = np.zeros(mesh.n_vertices)
    for c, proj in enumerate(projs):
        loop = mesh.cells[c]
        vals = proj.eval_pi_zero(dofs[lay.cell_dofs[c]], mesh.vertices[loop])
        np.add.at(acc, loop, vals)
        np.add.at(cnt, loop, 1.0)
    return acc / cnt[:, None]


def cell_pressure(disc, p) -> np.ndarray:
    """Pressure at cell centroids (the constant scaled-monomial coefficient)."""
    m = len(disc.pre.cell_dofs[0]) if disc.mesh.n_cells else 1
    return np.asarray(p).reshape(disc.mesh.n_cells, m)[:, 0]


def _fmt(x) -> str:
    return f"{x:.10e}"


def write_fields(disc, state, title: str = "vemmhd fields") -> str:
    """VTK legacy ASCII unstructured grid: polygons, vertex u/b, cell p and div u."""
    mesh = disc.mesh
    U = vertex_vectors(disc, state.u, "velocity")
    B = vertex_vectors(disc, state.b, "magnetic")
    P = cell_pressure(disc, state.p)
    D = disc.cell_divergence(state.u)
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_vertices} double"]
    lines += [f"{_fmt(x)} {_fmt(y)} {_fmt(0.0)}" for x, y in mesh.vertices]
    size = sum(len(c) + 1 for c in mesh.cells)
    lines.append(f"CELLS {mesh.n_cells} {size}")
    lines += [" ".join(str(v) for v in [len(c), *c]) for c in mesh.cells]
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines += ["7"] * mesh.n_cells
    lines.append(f"POINT_DATA {mesh.n_vertices}")
    for name, V in (("velocity", U), ("magnetic", B)):
        lines.append(f"VECTORS {name} double")
        lines += [f"{_fmt(a)} {_fmt(b)} {_fmt(0.0)}" for a, b in V]
    lines.append(f"CELL_DATA {mesh.n_cells}")
    for name, S in (("pressure", P), ("div_u", D)):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines += [_fmt(v) for v in S]
    return "\n".join(lines) + "\n"


@dataclass
class VtkData:
    points: np.ndarray
    cells: list
    point_vectors: dict
    cell_scalars: dict


def read_vtk(text: str) -> VtkData:
    """Reader for the files produced by :func:`write_fields`."""
    tok = text.split("\n")
    i = 0
    points, cells, pv, cs = None, [], {}, {}
    n_pts = n_cells = 0
    while i < len(tok):
        line = tok[i].strip()
        parts = line.split()
        if line.startswith("POINTS"):
            n_pts = int(parts[1])
            points = np.array([[float(v) for v in tok[i + 1 + j].split()[:2]] for j in range(n_pts)])
            i += n_pts
        elif line.startswith("CELLS"):
            n_cells = int(parts[1])
            for j in range(n_cells):
                vals = [int(v) for v in tok[i + 1 + j].split()]
                cells.append(np.array(vals[1:]))
            i += n_cells
        elif line.startswith("VECTORS"):
            pv[parts[1]] = np.array([[float(v) for v in tok[i + 1 + j].split()[:2]] for j in range(n_pts)])
            i += n_pts
        elif line.startswith("SCALARS"):
            cs[parts[1]] = np.array([float(tok[i + 2 + j]) for j in range(n_cells)])
            i += n_cells + 1
        i += 1
    return VtkData(points, cells, pv, cs)

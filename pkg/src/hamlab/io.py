"""File formats: TSV function tables, kernel-spec files, JSON run reports.

Table file (tab separated, (m+1) x (m+1)):

    <label>  u_1   u_2   ...  u_m
    t_1      v_11  v_12  ...  v_1m
    ...

Coordinates are strictly increasing and span [0, 1]; values off the grid are
bilinearly interpolated.

Kernel-spec file: one kernel line, optionally followed by quadrature lines::

    constructed <n> <p> <k>
    xi <path> <J> <beta>
    table <path>
    nodes <m>
    scheme gauss_legendre|composite_simpson

``#`` starts a comment.  Relative paths resolve against the spec file.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hamlab.errors import InvalidParameterError
from hamlab.kernel import build_kernel
from hamlab.operators import Kernel
from hamlab.quadrature import make_rule


class TableFunction:
    """Bilinear interpolant of a tabulated function on [0, 1]^2."""

    def __init__(self, t, u, values, name="table"):
        self.t = np.asarray(t, dtype=float)
        self.u = np.asarray(u, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.__name__ = name
        for label, axis in (("t", self.t), ("u", self.u)):
            if axis.size < 2 or np.any(np.diff(axis) <= 0):
                raise InvalidParameterError(f"{label} coordinates must be strictly increasing")
            if axis[0] > 0 or axis[-1] < 1:
                raise InvalidParameterError(f"{label} coordinates must span [0, 1]")
        if self.values.shape != (self.t.size, self.u.size):
            raise InvalidParameterError("table values do not match its coordinates")
        if not np.all(np.isfinite(self.values)):
            raise InvalidParameterError("table contains non-finite values")

    @staticmethod
    def _locate(axis, x):
        i = np.clip(np.searchsorted(axis, x, side="right") - 1, 0, axis.size - 2)
        frac = (x - axis[i]) / (axis[i + 1] - axis[i])
        return i, np.clip(frac, 0.0, 1.0)

    def __call__(self, t, u):
        t, u = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(u, dtype=float))
        i, a = self._locate(self.t, t)
        j, b = self._locate(self.u, u)
        v = self.values
        return (
            (1 - a) * (1 - b) * v[i, j]
            + a * (1 - b) * v[i + 1, j]
            + (1 - a) * b * v[i, j + 1]
            + a * b * v[i + 1, j + 1]
        )


def read_table(path):
    path = Path(path)
    try:
        rows = [line.rstrip("\n").split("\t") for line in path.read_text().splitlines() if line.strip()]
    except OSError as exc:
        raise InvalidParameterError(f"cannot read table {path}: {exc}") from exc
    if len(rows) < 3:
        raise InvalidParameterError(f"table {path} needs a header row and at least two data rows")
    try:
        u = [float(x) for x in rows[0][1:]]
        t = [float(r[0]) for r in rows[1:]]
        values = [[float(x) for x in r[1:]] for r in rows[1:]]
    except ValueError as exc:
        raise InvalidParameterError(f"malformed number in table {path}: {exc}") from exc
    if any(len(r) != len(u) for r in values):
        raise InvalidParameterError(f"ragged rows in table {path}")
    return TableFunction(t, u, values, name=path.name)


def write_table(path, fn, grid_m, label="t\\u"):
    x = np.linspace(0.0, 1.0, grid_m)
    vals = np.broadcast_to(np.asarray(fn(x[:, None], x[None, :]), dtype=float), (grid_m, grid_m))
    lines = ["\t".join([label] + [repr(float(v)) for v in x])]
    for ti, row in zip(x, vals):
        lines.append("\t".join([repr(float(ti))] + [repr(float(v)) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class KernelSpec:
    kind: str  # constructed | xi | table
    args: tuple
    nodes: int = None
    scheme: str = "gauss_legendre"
    base: Path = Path(".")

    def default_nodes(self):
        if self.nodes is not None:
            return self.nodes
        if self.kind == "constructed":
            n, p, _ = self.args
            return 2 * (n + p) + 4
        return 16

    def rule(self):
        return make_rule(self.scheme, self.default_nodes())

    def _path(self, raw):
        p = Path(raw)
        return p if p.is_absolute() else self.base / p

    def evaluator(self):
        """Point evaluator of the kernel on [0, 1]^2 (plus the constructed object, if any)."""
        if self.kind == "constructed":
            return build_kernel(*self.args)
        if self.kind == "table":
            return read_table(self._path(self.args[0]))
        path, J, beta = self.args
        xi = read_table(self._path(path))
        coupling = J * beta

        def q(t, u):
            return np.exp(coupling * xi(t, u))

        q.__name__ = f"exp({coupling:g}*{xi.__name__})"
        return q

    def kernel(self):
        ev = self.evaluator()
        if self.kind == "constructed":
            return Kernel.from_constructed(ev, self.rule())
        return Kernel(ev, self.rule(), name=ev.__name__)

    def describe(self):
        return {"kind": self.kind, "args": [str(a) for a in self.args], "nodes": self.default_nodes(), "scheme": self.scheme}


def _parse_int(s, what):
    try:
        return int(s)
    except ValueError:
        raise InvalidParameterError(f"{what} must be an integer, got {s!r}") from None


def _parse_float(s, what):
    try:
        return float(s)
    except ValueError:
        raise InvalidParameterError(f"{what} must be a number, got {s!r}") from None


def parse_kernel_spec(text, base=Path(".")):
    spec = None
    nodes, scheme = None, "gauss_legendre"
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "constructed":
            if len(rest) != 3:
                raise InvalidParameterError("expected: constructed <n> <p> <k>")
            spec = ("constructed", tuple(_parse_int(x, name) for x, name in zip(rest, "npk")))
        elif head == "xi":
            if len(rest) != 3:
                raise InvalidParameterError("expected: xi <path> <J> <beta>")
            spec = ("xi", (rest[0], _parse_float(rest[1], "J"), _parse_float(rest[2], "beta")))
        elif head == "table":
            if len(rest) != 1:
                raise InvalidParameterError("expected: table <path>")
            spec = ("table", (rest[0],))
        elif head == "nodes":
            if len(rest) != 1:
                raise InvalidParameterError("expected: nodes <m>")
            nodes = _parse_int(rest[0], "nodes")
        elif head == "scheme":
            if len(rest) != 1:
                raise InvalidParameterError("expected: scheme <name>")
            scheme = rest[0]
        else:
            raise InvalidParameterError(f"unknown kernel-spec directive {head!r}")
    if spec is None:
        raise InvalidParameterError("kernel spec names no kernel")
    return KernelSpec(spec[0], spec[1], nodes, scheme, Path(base))


def read_kernel_spec(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidParameterError(f"cannot read kernel spec {path}: {exc}") from exc
    return parse_kernel_spec(text, base=path.parent)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        # repr of a float64 round-trips exactly (at most 17 significant digits).
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps_report(report):
    return json.dumps(_clean(report), indent=2, sort_keys=True)


def loads_report(text):
    return json.loads(text)


def finite_or_none(x):
    return float(x) if x is not None and math.isfinite(x) else None

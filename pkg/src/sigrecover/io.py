"""File formats: paths as CSV, signatures and solver results as JSON.

Floats are written with ``repr``, the shortest decimal string that parses back
to the same double, so every format round-trips bit-exactly.

Path CSV::

    t,x1,x2
    0.0,0.0,0.0
    0.01,0.0312,-0.0071
    ...

Signature JSON::

    {"format_version": 1, "dim": 2, "depth": 2,
     "levels": [[1.0], [0.0, 0.0], [0.0, 0.0, 0.0, 0.0]]}

Level k holds d**k coefficients in lexicographic word order: the word
i_1...i_k (letters 1..d) sits at index sum_j (i_j - 1) d**(k - j).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .signature import ControlPath, PiecewisePath, flow, path_from_controls
from .tensor import TruncatedTensor

FORMAT_VERSION = 1
SUPPORTED_VERSIONS = (1,)


class FormatError(ValueError):
    """Malformed input file; the message names the file and the offending row or field."""


def _num(text: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise FormatError(f"{where}: {text!r} is not a number") from None
    if not math.isfinite(value):
        raise FormatError(f"{where}: non-finite value {text!r}")
    return value


# ---------------------------------------------------------------- paths


def write_path(path: PiecewisePath, file) -> None:
    file = Path(file)
    with file.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i + 1}" for i in range(path.dim)])
        for t, x in zip(path.times, path.points):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in x])


def read_path(file) -> PiecewisePath:
    file = Path(file)
    with file.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{file}: empty file")
    header = [h.strip() for h in rows[0]]
    dim = len(header) - 1
    expected = ["t"] + [f"x{i + 1}" for i in range(dim)]
    if dim < 1 or header != expected:
        raise FormatError(f"{file}, row 1: header {header} does not match 't,x1,...,xd'")
    data = [r for r in rows[1:] if r]
    if len(data) < 2:
        raise FormatError(f"{file}: need at least 2 data rows, found {len(data)}")
    times = np.empty(len(data))
    points = np.empty((len(data), dim))
    for k, row in enumerate(data):
        where = f"{file}, row {k + 2}"
        if len(row) != dim + 1:
            raise FormatError(f"{where}: expected {dim + 1} fields, found {len(row)}")
        times[k] = _num(row[0], where + ", field t")
        for i in range(dim):
            points[k, i] = _num(row[i + 1], where + f", field x{i + 1}")
        if k and times[k] <= times[k - 1]:
            raise FormatError(f"{where}: time {times[k]!r} does not exceed previous {times[k - 1]!r}")
    if times[0] != 0.0 or np.any(points[0] != 0.0):
        raise FormatError(f"{file}, row 2: first sample must be t=0, x=0")
    return PiecewisePath(times, points)


# ---------------------------------------------------------------- signatures


def signature_to_dict(g: TruncatedTensor) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "dim": g.dim,
        "depth": g.depth,
        "levels": [[float(c) for c in g.level(k)] for k in range(g.depth + 1)],
    }


def _check_version(obj: dict, where: str):
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected a JSON object")
    if "format_version" not in obj:
        raise FormatError(f"{where}: missing field 'format_version'")
    if obj["format_version"] not in SUPPORTED_VERSIONS:
        raise FormatError(f"{where}, field format_version: unsupported version {obj['format_version']!r}")


def signature_from_dict(obj: dict, where: str = "signature") -> TruncatedTensor:
    _check_version(obj, where)
    for key in ("dim", "depth", "levels"):
        if key not in obj:
            raise FormatError(f"{where}: missing field {key!r}")
    dim, depth, levels = obj["dim"], obj["depth"], obj["levels"]
    if not (isinstance(dim, int) and dim >= 1):
        raise FormatError(f"{where}, field dim: expected a positive integer, got {dim!r}")
    if not (isinstance(depth, int) and depth >= 1):
        raise FormatError(f"{where}, field depth: expected a positive integer, got {depth!r}")
    if not isinstance(levels, list) or len(levels) != depth + 1:
        raise FormatError(f"{where}, field levels: expected {depth + 1} levels")
    flat = []
    for k, lv in enumerate(levels):
        if not isinstance(lv, list) or len(lv) != dim**k:
            got = len(lv) if isinstance(lv, list) else type(lv).__name__
            raise FormatError(f"{where}, levels[{k}]: length mismatch, expected {dim**k} entries, got {got}")
        for j, c in enumerate(lv):
            if isinstance(c, bool) or not isinstance(c, (int, float)) or not math.isfinite(c):
                raise FormatError(f"{where}, levels[{k}][{j}]: invalid coefficient {c!r}")
            flat.append(float(c))
    return TruncatedTensor(dim, depth, np.array(flat))


def write_signature(g: TruncatedTensor, file) -> None:
    Path(file).write_text(json.dumps(signature_to_dict(g), allow_nan=False) + "\n")


def _load_json(file) -> dict:
    file = Path(file)
    try:
        return json.loads(file.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{file}, line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def read_signature(file) -> TruncatedTensor:
    return signature_from_dict(_load_json(file), str(file))


# ---------------------------------------------------------------- results


@dataclass
class ResultRecord:
    """Self-contained solver output: flowing ``controls`` reproduces ``final_signature``."""

    mode: str
    params: dict
    controls: ControlPath
    path: PiecewisePath
    final_signature: TruncatedTensor
    target: TruncatedTensor
    cost_trace: list
    endpoint_error: float
    length: float
    energy: float
    status: str = ""
    iterations_used: int = 0
    rejections: int = 0
    T_star: float | None = None
    wall_time: float = 0.0
    history: list = field(default_factory=list)

    @classmethod
    def from_solve(cls, res, target: TruncatedTensor, params: dict, mode: str,
                   T_star: float | None = None, wall_time: float = 0.0, history=()) -> "ResultRecord":
        return cls(
            mode=mode, params=dict(params), controls=res.controls, path=path_from_controls(res.controls),
            final_signature=res.final_signature, target=target, cost_trace=[float(c) for c in res.cost_trace],
            endpoint_error=float(res.endpoint_error), length=float(res.length), energy=float(res.energy),
            status=res.status, iterations_used=int(res.iterations_used), rejections=int(res.rejections),
            T_star=T_star, wall_time=float(wall_time),
            history=[[float(v) for v in h] for h in history],
        )

    def reflow_error(self) -> float:
        """Max-abs gap between the stored final signature and a fresh flow of the stored controls."""
        g = flow(self.controls, self.final_signature.depth).endpoint
        return float(np.max(np.abs(g.coeffs - self.final_signature.coeffs)))


def result_to_dict(rec: ResultRecord) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "mode": rec.mode,
        "params": rec.params,
        "controls": {"horizon": rec.controls.horizon, "values": rec.controls.values.tolist()},
        "path": {"times": rec.path.times.tolist(), "points": rec.path.points.tolist()},
        "final_signature": signature_to_dict(rec.final_signature),
        "target": signature_to_dict(rec.target),
        "cost_trace": list(rec.cost_trace),
        "endpoint_error": rec.endpoint_error,
        "length": rec.length,
        "energy": rec.energy,
        "status": rec.status,
        "iterations_used": rec.iterations_used,
        "rejections": rec.rejections,
        "T_star": rec.T_star,
        "wall_time": rec.wall_time,
        "history": rec.history,
    }


def _field(obj, key, where):
    if key not in obj:
        raise FormatError(f"{where}: missing field {key!r}")
    return obj[key]


def result_from_dict(obj: dict, where: str = "result") -> ResultRecord:
    _check_version(obj, where)
    try:
        ctrl = _field(obj, "controls", where)
        controls = ControlPath(np.array(_field(ctrl, "values", where + ", controls"), dtype=float),
                               _field(ctrl, "horizon", where + ", controls"))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}, field controls: {exc}") from None
    try:
        p = _field(obj, "path", where)
        path = PiecewisePath(np.array(_field(p, "times", where + ", path"), dtype=float),
                             np.array(_field(p, "points", where + ", path"), dtype=float))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}, field path: {exc}") from None
    final = signature_from_dict(_field(obj, "final_signature", where), where + ", final_signature")
    target = signature_from_dict(_field(obj, "target", where), where + ", target")
    if (final.dim, final.depth) != (target.dim, target.depth):
        raise FormatError(f"{where}, field final_signature: shape differs from target")
    if controls.dim != target.dim:
        raise FormatError(f"{where}, field controls: dimension {controls.dim}, target has {target.dim}")
    if path.dim != target.dim:
        raise FormatError(f"{where}, field path: dimension {path.dim}, target has {target.dim}")
    return ResultRecord(
        mode=_field(obj, "mode", where),
        params=_field(obj, "params", where),
        controls=controls,
        path=path,
        final_signature=final,
        target=target,
        cost_trace=[float(c) for c in _field(obj, "cost_trace", where)],
        endpoint_error=float(_field(obj, "endpoint_error", where)),
        length=float(_field(obj, "length", where)),
        energy=float(_field(obj, "energy", where)),
        status=obj.get("status", ""),
        iterations_used=int(obj.get("iterations_used", 0)),
        rejections=int(obj.get("rejections", 0)),
        T_star=obj.get("T_star"),
        wall_time=float(obj.get("wall_time", 0.0)),
        history=obj.get("history", []),
    )


def write_result(rec: ResultRecord, file) -> None:
    Path(file).write_text(json.dumps(result_to_dict(rec), allow_nan=False, indent=1) + "\n")


def read_result(file) -> ResultRecord:
    return result_from_dict(_load_json(file), str(file))

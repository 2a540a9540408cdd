"""Verifier reports and their JSON/CSV serialization."""

import csv
from dataclasses import dataclass, field
import io
import json
import math

SCHEMA_VERSION = "1.0"
FIELDS = ("theorem", "bodies", "epsilon", "lhs", "rhs", "constant", "margin", "pass",
          "hypothesis_met", "flags", "tolerance", "resolution", "lmax")
SIG_DIGITS = 12


@dataclass
class VerifierReport:
    theorem: str
    bodies: list
    epsilon: float
    lhs: float
    rhs: float
    constant: float
    margin: float
    passed: bool
    hypothesis_met: bool
    flags: list = field(default_factory=list)
    tolerance: float = 0.0
    resolution: int = 0
    lmax: int = 0
    details: dict = field(default_factory=dict)

    @property
    def verdict(self):
        if not self.hypothesis_met:
            return "hypothesis-unmet"
        return "pass" if self.passed else "fail"


def make_report(theorem, bodies, epsilon, lhs, rhs, constant, settings, n,
                hypothesis_met=True, flags=(), details=None, resolution=None):
    tol = settings.tol_verdict * max(1.0, abs(rhs))
    margin = rhs - lhs
    flags = list(flags)
    if not hypothesis_met and "hypothesis-unmet" not in flags:
        flags.append("hypothesis-unmet")
    return VerifierReport(
        theorem=theorem,
        bodies=[body_record(b) for b in bodies],
        epsilon=float(epsilon), lhs=float(lhs), rhs=float(rhs), constant=float(constant),
        margin=float(margin), passed=bool(margin >= -tol), hypothesis_met=bool(hypothesis_met),
        flags=flags, tolerance=tol,
        resolution=int(resolution if resolution is not None else settings.resolution_for(n)),
        lmax=settings.lmax_for(n), details=dict(details or {}))


def body_record(body):
    if isinstance(body, dict):
        return body
    params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in body.params.items()}
    if "p" in params and math.isinf(params["p"]):
        params["p"] = "inf"
    return {"label": str(body), "family": body.family, "dim": body.n,
            "params": params, "scale": body.scale}


def _num(x):
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, int):
        return x
    x = float(x)
    if not math.isfinite(x):
        return str(x)
    return float(f"{x:.{SIG_DIGITS}g}")


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (str, bool)) or obj is None:
        return obj
    if hasattr(obj, "item"):
        obj = obj.item()
    return _num(obj)


def report_row(r):
    """Single source of truth for both output formats (rounded numerics)."""
    return {
        "theorem": r.theorem,
        "bodies": _clean(r.bodies),
        "epsilon": _num(r.epsilon),
        "lhs": _num(r.lhs),
        "rhs": _num(r.rhs),
        "constant": _num(r.constant),
        "margin": _num(r.margin),
        "pass": bool(r.passed),
        "hypothesis_met": bool(r.hypothesis_met),
        "flags": list(r.flags),
        "tolerance": _num(r.tolerance),
        "resolution": int(r.resolution),
        "lmax": int(r.lmax),
        "details": _clean(r.details),
    }


def to_json(reports, meta=None):
    if not reports:
        raise ValueError("refusing to emit an empty report list")
    doc = {"schema_version": SCHEMA_VERSION}
    if meta:
        doc["run"] = _clean(meta)
    doc["reports"] = [report_row(r) for r in reports]
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def to_csv(reports):
    if not reports:
        raise ValueError("refusing to emit an empty report list")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("schema_version",) + FIELDS)
    for r in reports:
        row = report_row(r)
        cells = [SCHEMA_VERSION]
        for f in FIELDS:
            v = row[f]
            if f == "bodies":
                v = ";".join(b["label"] for b in v)
            elif f == "flags":
                v = ";".join(v)
            elif isinstance(v, float):
                v = repr(v)
            cells.append(v)
        w.writerow(cells)
    return buf.getvalue()


def emit_report(reports, path, fmt="json", meta=None):
    text = to_json(reports, meta) if fmt == "json" else to_csv(reports) if fmt == "csv" else None
    if text is None:
        raise ValueError(f"unknown format {fmt!r}")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path

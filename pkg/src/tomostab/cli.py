"""Command-line front end: body specs in, verifier reports out."""

import argparse
from dataclasses import dataclass
import json
import logging
import math
import sys

import numpy as np

from . import __version__
from .bodies import FAMILIES, BodyError, construct_body
from .config import Settings
from .reports import VerifierReport, body_record, emit_report, make_report
from . import sections, shadows, spectral

log = logging.getLogger("tomostab")

SUITES = ("bp-stability", "bp-separation", "corollary-n4", "frac-section", "frac-section-sep",
          "shephard", "shephard-sep", "frac-projection", "identities")
ALPHA_SUITES = ("frac-section", "frac-section-sep", "frac-projection")


@dataclass(frozen=True)
class BodySpec:
    family: str
    dim: int
    params: object = None
    label: str = ""
    scale: float = 1.0
    random: bool = False

    def as_dict(self):
        d = {"family": self.family, "dim": self.dim, "params": self.params,
             "random": self.random, "scale": self.scale}
        if self.label:
            d["label"] = self.label
        return d


@dataclass(frozen=True)
class SuiteConfig:
    suite: str
    dim: int = 3
    alpha: float = None
    lmax: int = None
    resolution: int = None
    tol: float = 1e-6
    seed: int = 0

    def settings(self):
        return Settings(lmax=self.lmax, resolution=self.resolution, tol_verdict=self.tol,
                        seed=self.seed)


def parse_body_spec(text):
    """Validate a JSON body spec (string or already-decoded dict)."""
    if isinstance(text, str):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed body spec: {exc}") from exc
    else:
        obj = text
    if not isinstance(obj, dict):
        raise ValueError("body spec must be a JSON object")
    fam = obj.get("family")
    if fam not in FAMILIES:
        raise ValueError(f"unknown family {fam!r}; supported: {', '.join(FAMILIES)}")
    try:
        dim = int(obj.get("dim"))
    except (TypeError, ValueError):
        raise ValueError("body spec needs an integer 'dim'") from None
    if not 2 <= dim <= 6:
        raise ValueError(f"dimension {dim} outside [2, 6]")
    params = obj.get("params")
    if fam == "ellipsoid" and params is not None and any(_num(a) <= 0 for a in params):
        raise ValueError("ellipsoid: non-positive semi-axis")
    if fam in ("ball", "cube", "cross_polytope") and params and _num(params[0]) <= 0:
        raise ValueError(f"{fam}: size must be positive")
    spec = BodySpec(fam, dim, params, str(obj.get("label") or ""),
                    float(obj.get("scale", 1.0)), bool(obj.get("random", False)))
    try:
        construct_body(spec.as_dict())  # full validation, incl. symmetry of vertex data
    except BodyError as exc:
        raise ValueError(str(exc)) from exc
    return spec


def _num(x):
    return math.inf if isinstance(x, str) and x.lower().startswith("inf") else float(x)


def check_alpha(config):
    n, a = config.dim, config.alpha
    if config.suite not in ALPHA_SUITES:
        if a is not None:
            raise ValueError(f"suite {config.suite} takes no alpha")
        return
    if a is None:
        raise ValueError(f"suite {config.suite} requires --alpha")
    if config.suite == "frac-projection":
        if not n <= a < n + 1:
            raise ValueError(f"alpha={a} outside [n, n+1) = [{n}, {n + 1}); "
                             "the comparison is no longer true for alpha < n")
    else:
        if n < 4:
            raise ValueError("fractional section suites need dim >= 4")
        if not n - 4 <= a < n - 1:
            raise ValueError(f"alpha={a} outside [n-4, n-1) = [{n - 4}, {n - 1})")


# ---------------------------------------------------------------------------
# default body pairs
# ---------------------------------------------------------------------------

def _ball(n, r=1.0, scale=None):
    d = {"family": "ball", "dim": n, "params": [r]}
    if scale is not None:
        d["scale"] = scale
    return d


def _ell(n, axes, scale=None):
    d = {"family": "ellipsoid", "dim": n, "params": list(axes[:n])}
    if scale is not None:
        d["scale"] = scale
    return d


def _axes(n):
    return [1.0, 1.2, 0.9, 1.1, 0.95, 1.05][:n]


def default_pairs(suite, n):
    rnd = {"family": "perturbed_ball", "dim": n, "random": True}
    cube = {"family": "cube", "dim": n}
    if suite == "bp-stability":
        return [(_ball(n, 1.1), _ball(n)), (_ell(n, _axes(n)), _ball(n, 1.05)),
                (cube, _ball(n, 1.2)), (rnd, _ball(n, 1.1))]
    if suite == "bp-separation":
        return [(_ball(n, 0.8), _ball(n)), (_ell(n, [1, 1, 1.1, 1, 1, 1], 0.9), _ball(n, 1.15)),
                (dict(rnd, scale=0.8), _ball(n))]
    if suite == "corollary-n4":
        return [(_ball(n), _ball(n, 1.1)), (cube, _ball(n, 1.2)), (_ell(n, _axes(n)), rnd)]
    if suite == "frac-section":
        return [(_ball(n, 1.05), _ball(n)), (_ell(n, _axes(n)), _ball(n, 1.05)),
                (rnd, _ell(n, _axes(n)))]
    if suite == "frac-section-sep":
        return [(_ball(n, 0.8), _ball(n)), (_ell(n, _axes(n), 0.8), _ball(n, 1.1))]
    if suite == "shephard":
        return [(_ball(n, 1.1), _ball(n)), (cube, _ball(n, 1.3)),
                (_ell(n, [1, 1, 1.2, 1, 1, 1]), _ball(n, 1.2))]
    if suite == "shephard-sep":
        return [(_ball(n, 0.8), _ball(n)), (_ell(n, [1, 1, 1.2, 1, 1, 1], 0.7), _ball(n, 1.1))]
    if suite == "frac-projection":
        return [(_ball(n), _ball(n, 1.1)), (_ell(n, _axes(n)), _ball(n, 1.2))]
    if suite == "identities":
        return [(_ball(n), _ell(n, _axes(n))), (_ell(n, _axes(n)), rnd)]
    raise ValueError(f"unknown suite {suite!r}")


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

VERIFIERS = {
    "bp-stability": sections.verify_bp_stability,
    "bp-separation": sections.verify_bp_separation,
    "corollary-n4": sections.verify_corollary_n4,
    "shephard": shadows.verify_shephard_stability,
    "shephard-sep": shadows.verify_shephard_separation,
    "frac-section": spectral.verify_frac_section_stability,
    "frac-section-sep": spectral.verify_frac_section_separation,
    "frac-projection": spectral.verify_frac_projection_stability,
}


def _identity(name, bodies, defect, tol, settings, n, details=None):
    return make_report(f"identity:{name}", bodies, 0.0, defect, tol, 0.0, settings, n,
                       details=details)


def global_identity_reports(n, settings):
    """Multiplier identities that involve no body."""
    out = []
    lmax = settings.lmax_for(n)
    lmax -= lmax % 2
    if n >= 3:
        d = max(abs(spectral.ft_multiplier(n, n - 1, k) / (math.pi * sections.radon_multiplier(n, k)) - 1)
                for k in range(0, lmax + 1, 2))
        out.append(_identity("bridge", [], d, 1e-8, settings, n))
    rng = np.random.default_rng(settings.seed)
    ps = rng.uniform(0.05, n - 0.05, size=10)
    d = max(abs(spectral.ft_multiplier(n, p, 0) * spectral.ft_multiplier(n, n - p, 0)
                / (2 * math.pi) ** n - 1) for p in ps)
    out.append(_identity("reciprocity", [], d, 1e-10, settings, n))
    return out


def identity_reports(K, L, settings):
    n = K.n
    out = []
    if K.smooth and L.smooth:
        p = n / 2.0
        out.append(_identity("parseval-section", [K, L], spectral.parseval_check(K, L, p, settings),
                             1e-3, settings, n, {"p": p}))
    for b in (K, L):
        if b.smooth and n >= 3:
            out.append(_identity("radon-routes", [b], sections.route_agreement(b, settings),
                                 settings.tol_route, settings, n))
    if K.has_curvature and L.has_curvature and not K.is_polytope and not L.is_polytope:
        out.append(_identity("parseval-projection", [K, L],
                             shadows.parseval_projection(K, L, settings), 1e-3, settings, n))
    for b in (K, L):
        if b.has_curvature and not b.is_polytope:
            out.append(_identity("projection-routes", [b],
                                 shadows.projection_route_agreement(b, settings),
                                 settings.tol_route, settings, n))
    if K.has_curvature and L.has_support:
        m = shadows.minkowski_check(K, L)
        out.append(make_report("identity:minkowski", [K, L], 0.0, -m, 1e-6, 0.0, settings, n))
    return out


def _error_report(suite, pair, exc, settings, n):
    bodies = [b if isinstance(b, dict) else body_record(b) for b in pair]
    nan = float("nan")
    return VerifierReport(theorem=suite, bodies=bodies, epsilon=nan, lhs=nan, rhs=nan,
                          constant=nan, margin=nan, passed=False, hypothesis_met=False,
                          flags=[f"error:{type(exc).__name__}:{exc}"], tolerance=settings.tol_verdict,
                          resolution=settings.resolution_for(n), lmax=settings.lmax_for(n))


def run_suite(config, pairs=None):
    """Run one suite over body-spec pairs; failures become reports, never exceptions."""
    if config.suite not in SUITES:
        raise ValueError(f"unknown suite {config.suite!r}; choose from {', '.join(SUITES)}")
    check_alpha(config)
    if config.suite == "corollary-n4" and config.dim > 4:
        raise ValueError("corollary-n4 is rejected for n >= 5")
    pairs = default_pairs(config.suite, config.dim) if pairs is None else list(pairs)
    if not pairs:
        raise ValueError("at least one body pair is required")
    settings = config.settings()
    rng = np.random.default_rng(config.seed)
    reports = []
    if config.suite == "identities":
        reports.extend(global_identity_reports(config.dim, settings))
    for pair in pairs:
        specs = [s.as_dict() if isinstance(s, BodySpec) else dict(s) for s in pair]
        try:
            K, L = (construct_body(s, rng) for s in specs)
            if config.suite == "identities":
                reports.extend(identity_reports(K, L, settings))
            elif config.suite in ALPHA_SUITES:
                reports.append(VERIFIERS[config.suite](K, L, config.alpha, settings))
            else:
                reports.append(VERIFIERS[config.suite](K, L, settings))
        except (ValueError, ArithmeticError, BodyError) as exc:
            log.warning("pair %s failed: %s", specs, exc)
            reports.append(_error_report(config.suite, specs, exc, settings, config.dim))
    return reports


def load_pairs(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    raw = doc["pairs"] if isinstance(doc, dict) else doc
    pairs = []
    for item in raw:
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise ValueError("each entry of the bodies file must be a [K, L] pair")
        pairs.append(tuple(parse_body_spec(b) for b in item))
    return pairs


def build_parser():
    p = argparse.ArgumentParser(prog="tomostab", description="Verify stability and "
                                "separation inequalities for sections and projections.")
    p.add_argument("--suite", required=True, choices=SUITES)
    p.add_argument("--dim", type=int, default=None, help="dimension for default body pairs")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--lmax", type=int, default=None, help="harmonic truncation (default 16)")
    p.add_argument("--resolution", type=int, default=None, help="Gauss nodes per polar angle")
    p.add_argument("--tol", type=float, default=1e-6, help="relative verdict tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bodies", default=None, help="JSON file of [K, L] body-spec pairs")
    p.add_argument("--out", default="-", help="output file ('-' for stdout)")
    p.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        pairs = load_pairs(args.bodies) if args.bodies else None
        dim = args.dim
        if dim is None:
            dim = pairs[0][0].dim if pairs else (4 if args.suite.startswith("frac-section") else 3)
        config = SuiteConfig(args.suite, dim, args.alpha, args.lmax, args.resolution, args.tol,
                             args.seed)
        reports = run_suite(config, pairs)
    except (ValueError, OSError) as exc:
        print(f"tomostab: error: {exc}", file=sys.stderr)
        return 2
    meta = {"suite": config.suite, "dim": config.dim, "alpha": config.alpha,
            "lmax": config.lmax, "resolution": config.resolution, "tol": config.tol,
            "seed": config.seed, "version": __version__}
    if args.out == "-":
        from .reports import to_csv, to_json
        sys.stdout.write(to_json(reports, meta) if args.fmt == "json" else to_csv(reports))
    else:
        try:
            emit_report(reports, args.out, args.fmt, meta)
        except OSError as exc:
            print(f"tomostab: error: {exc}", file=sys.stderr)
            return 2
    for r in reports:
        log.info("%s %s margin=%.6g %s", r.theorem, [b.get("label") for b in r.bodies],
                 r.margin, r.verdict)
    return 0 if all(r.passed or not r.hypothesis_met for r in reports) else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

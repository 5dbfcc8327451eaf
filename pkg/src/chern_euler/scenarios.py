"""Catalog of verification scenarios with known answers, and the runner that checks them.

A scenario is plain data (JSON-serializable): a chart family with
parameters, optionally a submanifold, a vector field with an extension and
a tube, and a list of checks.  Each check names a computed quantity, the
expected value, a tolerance, a comparison mode and the provenance of the
expected value:

* ``PAPER``: a value asserted by one of the identities being verified;
* ``TRIVIAL``: immediate from the construction (e.g. a flat metric);
* ``DERIVED``: a closed-form oracle worked out independently.
"""

from __future__ import annotations

import copy
import fnmatch
import json
import math
import time
from dataclasses import asdict, dataclass
from dataclasses import field as dc_field
from typing import Callable, Optional

import numpy as np

from . import charts
from .geometry import euler_density, validate_chart
from .index import (
    TubeRegion,
    blowup_integral,
    euclidean_distance,
    field_from_spec,
    index_via_extension,
    index_via_law,
    index_via_transgression,
    radial_blowup_matches_snm,
    shrinking_limit,
    sphere_distance,
)
from .quadrature import integrate_box, integrate_form_over_chart
from .submanifold import (
    coordinate_slice,
    gauss_equation_check,
    half_identity_check,
    integrate_induced_euler,
    mplus_cycle,
    snm_cycle,
)
from .transgression import (
    TransgressionConfig,
    check_transgression_identity,
    fiber_cycle,
    integrate_phi,
    unit_sphere_box,
)

PROVENANCES = ("PAPER", "TRIVIAL", "DERIVED")
MODES = ("equal", "at_most", "at_least")


@dataclass(frozen=True)
class CheckSpec:
    name: str
    kind: str
    expected: float
    tolerance: float
    provenance: str
    mode: str = "equal"
    params: dict = dc_field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    chart: dict
    checks: tuple
    submanifold: Optional[dict] = None
    field: Optional[dict] = None
    extension: Optional[dict] = None
    tube: Optional[dict] = None
    config: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["checks"] = [asdict(c) for c in self.checks]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        data = copy.deepcopy(data)
        checks = tuple(CheckSpec(**c) for c in data.pop("checks"))
        known = {"name", "description", "chart", "submanifold", "field", "extension", "tube", "config"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        data.setdefault("description", "")
        return cls(checks=checks, **data)

    def validate(self) -> None:
        """Check the declaration and the chart invariants."""
        if not self.checks:
            raise ValueError(f"scenario {self.name} declares no checks")
        for c in self.checks:
            if c.kind not in QUANTITIES and c.kind != "metric_change":
                raise ValueError(f"{self.name}/{c.name}: unknown check kind {c.kind!r}")
            if c.provenance not in PROVENANCES:
                raise ValueError(f"{self.name}/{c.name}: provenance must be one of {PROVENANCES}")
            if c.mode not in MODES:
                raise ValueError(f"{self.name}/{c.name}: mode must be one of {MODES}")
            if not c.tolerance >= 0:
                raise ValueError(f"{self.name}/{c.name}: tolerance must be non-negative")
        validate_chart(charts.from_spec(self.chart))


@dataclass
class RunConfig:
    """Overrides applied when running scenarios."""

    gauss: Optional[int] = None
    periodic: Optional[int] = None
    scheme: str = "auto"
    tolerance_scale: float = 1.0
    order_scale: float = 1.0


def finite_or_none(x: float):
    return x if math.isfinite(x) else None


@dataclass
class CheckResult:
    name: str
    kind: str
    computed: float
    expected: float
    tolerance: float
    provenance: str
    mode: str
    passed: bool
    error_estimate: float
    seconds: float
    message: str = ""

    def to_dict(self) -> dict:
        """JSON-ready record; non-finite numbers (failed computations) become ``None``."""
        return {
            "name": self.name,
            "computed": finite_or_none(self.computed),
            "expected": self.expected,
            "tolerance": self.tolerance,
            "provenance": self.provenance,
            "pass": self.passed,
            "error_estimate": finite_or_none(self.error_estimate),
            "seconds": self.seconds,
            "mode": self.mode,
            "message": self.message,
        }


@dataclass
class VerificationReport:
    scenario: str
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def seconds(self) -> float:
        return sum(c.seconds for c in self.checks)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "checks": [c.to_dict() for c in self.checks]}


# -- building objects from a scenario ----------------------------------------------------------


def _json_key(obj) -> str:
    return json.dumps(obj, sort_keys=True, default=float)


class Context:
    """Lazily built objects for one scenario, for the main or the unperturbed chart."""

    def __init__(self, scenario: Scenario, cfg: RunConfig, unperturbed: bool = False):
        self.scenario = scenario
        self.cfg = cfg
        spec = dict(scenario.chart)
        if unperturbed:
            spec.pop("perturbation", None)
        self.chart = charts.from_spec(spec)
        self._cache = {}
        self._sub = None
        self._tube = None
        self._field = None
        self._extension = None

    @property
    def tcfg(self) -> TransgressionConfig:
        conf = self.scenario.config
        gauss = self.cfg.gauss or int(conf.get("gauss", 16))
        periodic = self.cfg.periodic or int(conf.get("periodic", 32))
        scale = self.cfg.order_scale
        return TransgressionConfig(
            scheme=self.cfg.scheme,
            gauss=max(2, int(round(gauss * scale))),
            periodic=max(2, int(round(periodic * scale))),
        )

    def slice(self, spec: dict):
        if spec.get("kind", "slice") != "slice":
            raise ValueError(f"unknown submanifold kind {spec['kind']!r}")
        return coordinate_slice(self.chart, spec["fixed"], int(spec.get("orientation", 1)),
                                int(spec.get("euler_char", 0)), spec.get("label", ""))

    @property
    def sub(self):
        if self._sub is None:
            if self.scenario.submanifold is None:
                raise ValueError("scenario has no submanifold")
            self._sub = self.slice(self.scenario.submanifold)
        return self._sub

    def _distance(self) -> Optional[Callable]:
        spec = (self.scenario.tube or {}).get("distance")
        if spec is None:
            return None
        if spec["kind"] == "sphere":
            return sphere_distance(self.chart, spec["basis"])
        if spec["kind"] == "euclidean":
            return euclidean_distance(spec["center"])
        raise ValueError(f"unknown distance kind {spec['kind']!r}")

    @property
    def tube(self) -> TubeRegion:
        if self._tube is None:
            self._tube = TubeRegion(self.sub, float(self.scenario.tube["radius"]), distance=self._distance())
        return self._tube

    @property
    def field(self):
        if self._field is None:
            self._field = field_from_spec(self.chart, self.scenario.field, self._distance())
        return self._field

    @property
    def extension(self):
        if self._extension is None:
            spec = self.scenario.extension
            self._extension = self.field if spec is None else field_from_spec(self.chart, spec, self._distance())
        return self._extension

    def quantity(self, kind: str, params: dict):
        """``(value, error_estimate)`` of a named quantity, memoized per context."""
        key = (kind, _json_key(params))
        if key not in self._cache:
            self._cache[key] = QUANTITIES[kind](self, params)
        return self._cache[key]


def _random_points(box, samples: int, seed: int, margin: float = 0.2):
    rng = np.random.default_rng(seed)
    cols = []
    for lo, hi, kind in box:
        if kind == "periodic":
            cols.append(rng.uniform(lo, hi, samples))
        else:
            cols.append(rng.uniform(lo + margin, hi - margin, samples))
    return np.stack(cols, axis=-1)


# -- quantities ----------------------------------------------------------------------------------


def _q_gauss_bonnet(ctx: Context, params):
    chart, t = ctx.chart, ctx.tcfg
    res = integrate_form_over_chart(lambda X, B: euler_density(chart, X, B, scheme=t.scheme), chart,
                                    orders=t.orders(chart.box()))
    return res.value, res.error_estimate


def _q_fiber(ctx: Context, params):
    res = integrate_phi(fiber_cycle(ctx.chart, params["point"]), ctx.chart, ctx.tcfg)
    return res.value, res.error_estimate


def _q_dphi(ctx: Context, params):
    n = ctx.chart.dim
    x0 = _random_points(ctx.chart.box(), int(params.get("samples", 100)), int(params.get("seed", 0)))
    a0 = _random_points(unit_sphere_box(n), x0.shape[0], int(params.get("seed", 0)) + 1)
    resid, _, _ = check_transgression_identity(ctx.chart, x0, a0, rng=np.random.default_rng(params.get("seed", 0)))
    return float(np.max(resid)), 0.0


def _integral(cycle_fn):
    def q(ctx: Context, params):
        res = integrate_phi(cycle_fn(ctx), ctx.chart, ctx.tcfg)
        return res.value, res.error_estimate

    return q


def _q_sign_law(ctx: Context, params):
    plus, e1 = ctx.quantity("mplus", {})
    minus, e2 = ctx.quantity("mminus", {})
    return abs(minus - (-1) ** ctx.chart.dim * plus), e1 + e2


def _q_half_identity(ctx: Context, params):
    P = _random_points(ctx.sub.box, int(params.get("samples", 50)), int(params.get("seed", 0)))
    resid, _, _ = half_identity_check(ctx.sub, P)
    return float(np.max(resid)), 0.0


def _q_gauss_equation(ctx: Context, params):
    P = _random_points(ctx.sub.box, int(params.get("samples", 50)), int(params.get("seed", 0)))
    return float(np.max(gauss_equation_check(ctx.sub, P))), 0.0


def _q_induced_euler(ctx: Context, params):
    res = integrate_induced_euler(ctx.sub, ctx.tcfg)
    return res.value, res.error_estimate


def _q_relative_gb(ctx: Context, params):
    """``int_{M+} Phi + int_D Omega`` for the region ``D`` bounded by ``M`` (compare with chi(D))."""
    plus, e1 = ctx.quantity("mplus", {})
    chart, t = ctx.chart, ctx.tcfg
    box = [tuple(b) for b in params["region"]]
    res = integrate_form_over_chart(lambda X, B: euler_density(chart, X, B, scheme=t.scheme), chart, box=box,
                                    orders=t.orders(box))
    return plus + res.value, e1 + res.error_estimate


def _q_latitude_spread(ctx: Context, params):
    vals = []
    for theta in params["angles"]:
        sub = ctx.slice({"fixed": {"0": theta}})
        vals.append(integrate_phi(mplus_cycle(sub), ctx.chart, ctx.tcfg).value)
    return abs(vals[0] - vals[1]), 0.0


def _q_index_transgression(ctx: Context, params):
    res = index_via_transgression(ctx.tube, ctx.field, ctx.tcfg)
    return res.value, res.error_estimate


def _q_index_extension(ctx: Context, params):
    seeds = ctx.scenario.tube.get("extension_seeds", [])
    return float(index_via_extension(ctx.tube, ctx.field, ctx.extension, seeds, cfg=ctx.tcfg).index), 0.0


def _q_index_law(ctx: Context, params):
    seeds = ctx.scenario.tube.get("law_seeds")
    return float(index_via_law(ctx.tube, ctx.field, seeds, cfg=ctx.tcfg).index), 0.0


def _q_index_agreement(ctx: Context, params):
    ext, _ = ctx.quantity("index_extension", {})
    law, _ = ctx.quantity("index_law", {})
    return abs(ext - law), 0.0


def _q_blowup(ctx: Context, params):
    res = blowup_integral(ctx.tube, ctx.field, ctx.tcfg)
    return res.value, res.spread


def _q_stokes(ctx: Context, params):
    tr = index_via_transgression(ctx.tube, ctx.field, ctx.tcfg)
    bl, err = ctx.quantity("blowup", {})
    return abs(-tr.interior - (tr.boundary - bl)), err + tr.error_estimate


def _q_shrinking_limit(ctx: Context, params):
    res = shrinking_limit(ctx.tube, ctx.field, ctx.tcfg)
    return res.value, res.spread


def _q_radial_snm_gap(ctx: Context, params):
    return radial_blowup_matches_snm(ctx.tube, ctx.field), 0.0


QUANTITIES: dict[str, Callable] = {
    "gauss_bonnet": _q_gauss_bonnet,
    "fiber": _q_fiber,
    "dphi": _q_dphi,
    "mplus": _integral(lambda ctx: mplus_cycle(ctx.sub, 1)),
    "mminus": _integral(lambda ctx: mplus_cycle(ctx.sub, -1)),
    "snm": _integral(lambda ctx: snm_cycle(ctx.sub)),
    "sign_law": _q_sign_law,
    "half_identity": _q_half_identity,
    "gauss_equation": _q_gauss_equation,
    "induced_euler": _q_induced_euler,
    "relative_gb": _q_relative_gb,
    "latitude_spread": _q_latitude_spread,
    "index_transgression": _q_index_transgression,
    "index_extension": _q_index_extension,
    "index_law": _q_index_law,
    "index_agreement": _q_index_agreement,
    "blowup": _q_blowup,
    "stokes": _q_stokes,
    "shrinking_limit": _q_shrinking_limit,
    "radial_snm_gap": _q_radial_snm_gap,
}


def _compare(value: float, expected: float, tol: float, mode: str) -> bool:
    if not math.isfinite(value):
        return False
    if mode == "equal":
        return abs(value - expected) <= tol
    if mode == "at_most":
        return value <= expected + tol
    return value >= expected - tol


def run(scenario: Scenario, cfg: Optional[RunConfig] = None) -> VerificationReport:
    """Evaluate every check of ``scenario``; failures of lower layers become failed checks."""
    cfg = cfg or RunConfig()
    main = Context(scenario, cfg)
    base = None
    results = []
    for check in scenario.checks:
        t0 = time.perf_counter()
        tol = check.tolerance * cfg.tolerance_scale
        try:
            if check.kind == "metric_change":
                if base is None:
                    base = Context(scenario, cfg, unperturbed=True)
                inner = check.params["quantity"]
                inner_params = check.params.get("params", {})
                v1, e1 = main.quantity(inner, inner_params)
                v0, e0 = base.quantity(inner, inner_params)
                value, err = abs(v1 - v0), e1 + e0
            else:
                value, err = main.quantity(check.kind, check.params)
            value, err = float(value), float(err)
            passed = _compare(value, check.expected, tol, check.mode)
            message = ""
        except Exception as exc:  # any failure is reported, not raised
            value, err, passed = float("nan"), float("nan"), False
            message = f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(check.name, check.kind, value, check.expected, tol, check.provenance, check.mode,
                                   passed, err, time.perf_counter() - t0, message))
    return VerificationReport(scenario.name, results)


# -- the catalog ------------------------------------------------------------------------------------


def _check(name, kind, expected, tolerance, provenance, mode="equal", **params) -> CheckSpec:
    return CheckSpec(name, kind, float(expected), float(tolerance), provenance, mode, params)


def _sphere_point(angles):
    return [float(c) for c in charts.sphere_embedding([np.array(a) for a in angles])]


_HALF_PI = math.pi / 2
_S2_POINT = [1.0, 2.0]
_S2_BUMP = {"epsilon": 0.1, "axis": _sphere_point(_S2_POINT), "height": 1.0, "width": 0.5}
_S3_BUMP = {"epsilon": 0.1, "axis": [0.0, 0.0, 1.0, 0.0], "height": 0.5, "width": 0.5}
_CAP_BUMP = {"epsilon": 0.1, "axis": [1.0, 0.0, 0.0], "height": 0.68, "width": 0.25}
_DISK_BUMP = {"epsilon": 0.1, "center": [0.2, -0.1], "width": 0.5}


def _gauss_bonnet_scenarios():
    return [
        Scenario("gb-s2", "Gauss-Bonnet on the round 2-sphere", {"kind": "sphere", "dim": 2},
                 (_check("euler integral", "gauss_bonnet", 2, 1e-6, "PAPER"),), config={"gauss": 24, "periodic": 8}),
        Scenario("gb-t2", "Gauss-Bonnet on the flat 2-torus", {"kind": "flat_torus", "dim": 2},
                 (_check("euler integral", "gauss_bonnet", 0, 1e-8, "TRIVIAL"),), config={"gauss": 8, "periodic": 8}),
        Scenario("gb-s4", "Gauss-Bonnet on the round 4-sphere", {"kind": "sphere", "dim": 4},
                 (_check("euler integral", "gauss_bonnet", 2, 1e-3, "PAPER"),), config={"gauss": 10, "periodic": 4}),
    ]


def _fiber_scenarios():
    pts = {
        2: [[1.0, 2.0], [0.4, 5.0], [2.6, 0.3]],
        3: [[1.0, 2.0, 0.5], [0.4, 1.5, 4.0], [2.6, 0.7, 3.0]],
        4: [[1.0, 2.0, 0.5, 1.0], [0.4, 1.5, 2.0, 4.0], [2.6, 0.7, 1.2, 3.0]],
    }
    out = []
    for n, points in pts.items():
        checks = tuple(_check(f"fiber at {p}", "fiber", 1, 1e-6, "PAPER", point=p) for p in points)
        out.append(Scenario(f"fiber-s{n}", f"Fiber normalization on the round {n}-sphere",
                            {"kind": "sphere", "dim": n}, checks, config={"gauss": 12, "periodic": 16}))
    return out


def _dphi_scenarios():
    return [
        Scenario("dphi-s2", "dPhi = -Omega at random sphere-bundle points of S^2", {"kind": "sphere", "dim": 2},
                 (_check("max relative residual", "dphi", 0, 1e-4, "PAPER", "at_most", samples=100, seed=0),)),
        Scenario("dphi-s3", "dPhi = 0 at random sphere-bundle points of S^3", {"kind": "sphere", "dim": 3},
                 (_check("max relative residual", "dphi", 0, 1e-4, "PAPER", "at_most", samples=100, seed=0),)),
    ]


def _lemma_scenarios():
    out = []
    for name, theta in (("lemma-equator-s2-in-s3", _HALF_PI), ("lemma-latitude-s2-in-s3", 1.0)):
        checks = (
            _check("int M+ Phi = chi/2", "mplus", 1, 1e-4, "PAPER"),
            _check("int M- Phi = -chi/2", "mminus", -1, 1e-4, "PAPER"),
            _check("M- sign law", "sign_law", 0, 1e-6, "PAPER", "at_most"),
            _check("pointwise half identity", "half_identity", 0, 1e-5, "PAPER", "at_most", samples=50, seed=1),
            _check("Gauss equation", "gauss_equation", 0, 1e-5, "DERIVED", "at_most", samples=20, seed=2),
            _check("induced Gauss-Bonnet", "induced_euler", 2, 1e-3, "TRIVIAL"),
            _check("int SNM Phi = chi", "snm", 2, 1e-3, "PAPER"),
        )
        out.append(Scenario(name, f"Sphere at polar angle {theta:.4f} in the round 3-sphere",
                            {"kind": "sphere", "dim": 3}, checks,
                            submanifold={"kind": "slice", "fixed": {"0": theta}, "euler_char": 2},
                            config={"gauss": 16, "periodic": 32}))
    return out


def _cap_scenarios():
    out = []
    for label, theta in (("pi/6", math.pi / 6), ("pi/4", math.pi / 4), ("pi/3", math.pi / 3)):
        region = [[0.0, theta, "gauss"], [0.0, 2 * math.pi, "periodic"]]
        checks = [
            _check("int M+ Phi = cos(theta)", "mplus", math.cos(theta), 1e-5, "DERIVED"),
            _check("chi(D) - int_D Omega", "relative_gb", 1, 1e-5, "PAPER", region=region),
            _check("M- sign law", "sign_law", 0, 1e-6, "PAPER", "at_most"),
        ]
        if label == "pi/3":
            checks.append(_check("depends on the latitude", "latitude_spread", 0.1, 0, "DERIVED", "at_least",
                                 angles=[math.pi / 6, math.pi / 3]))
        out.append(Scenario(f"cap-{label}", f"Latitude circle bounding the north cap of angle {label} on S^2",
                            {"kind": "sphere", "dim": 2}, tuple(checks),
                            submanifold={"kind": "slice", "fixed": {"0": theta}, "euler_char": 0},
                            config={"gauss": 24, "periodic": 32}))
    out.append(Scenario("equator-s1-in-s2", "Totally geodesic equator of S^2", {"kind": "sphere", "dim": 2},
                        (_check("int M+ Phi = 0", "mplus", 0, 1e-8, "PAPER"),
                         _check("int SNM Phi = chi", "snm", 0, 1e-8, "PAPER")),
                        submanifold={"kind": "slice", "fixed": {"0": _HALF_PI}, "euler_char": 0},
                        config={"gauss": 16, "periodic": 32}))
    return out


def _chern_scenarios():
    return [
        Scenario("chern-pt-in-s2", "Normal sphere bundle of a point of S^2", {"kind": "sphere", "dim": 2},
                 (_check("int SNM Phi = chi", "snm", 1, 1e-6, "PAPER"),),
                 submanifold={"kind": "slice", "fixed": {"0": 1.0, "1": 2.0}, "euler_char": 1},
                 config={"gauss": 16, "periodic": 32}),
        Scenario("chern-s1-in-s3", "Normal sphere bundle of a great circle of S^3", {"kind": "sphere", "dim": 3},
                 (_check("int SNM Phi = chi", "snm", 0, 1e-4, "PAPER"),),
                 submanifold={"kind": "slice", "fixed": {"0": _HALF_PI, "1": _HALF_PI}, "euler_char": 0},
                 config={"gauss": 16, "periodic": 24}),
        Scenario("chern-s2-in-s4", "Normal sphere bundle of a great 2-sphere of S^4", {"kind": "sphere", "dim": 4},
                 (_check("int SNM Phi = chi", "snm", 2, 1e-3, "PAPER"),),
                 submanifold={"kind": "slice", "fixed": {"0": _HALF_PI, "1": _HALF_PI}, "euler_char": 2},
                 config={"gauss": 10, "periodic": 16}),
    ]


def _index_checks(expected: int, law: bool = True, radial: bool = False, provenance: str = "PAPER"):
    checks = [
        _check("index via transgression", "index_transgression", expected, 1e-2, provenance),
        _check("index via extension", "index_extension", expected, 0, provenance),
        _check("blow-up integral", "blowup", expected, 1e-2, provenance),
        _check("Stokes consistency", "stokes", 0, 1e-3, "PAPER", "at_most"),
        _check("shrinking-tube limit", "shrinking_limit", expected, 1e-2, "PAPER"),
    ]
    if law:
        checks.insert(2, _check("index via law of vector fields", "index_law", expected, 0, provenance))
        checks.insert(3, _check("extension = law", "index_agreement", 0, 0, "PAPER", "at_most"))
    if radial:
        checks.append(_check("blow-up map = SNM map", "radial_snm_gap", 0, 1e-4, "PAPER", "at_most"))
    return checks


def _index_scenarios():
    r_s = 0.3
    q0 = _sphere_point(_S2_POINT)
    circle = [[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]
    radial_s3 = {"kind": "radial_sphere", "basis": circle, "scale": r_s, "sign": 1}
    circle_tube = {"radius": r_s, "distance": {"kind": "sphere", "basis": circle},
                   "extension_seeds": [[_HALF_PI, _HALF_PI, 0.05], [_HALF_PI, _HALF_PI, 3.1]], "law_seeds": []}
    point_tube = {"radius": r_s, "distance": {"kind": "sphere", "basis": [q0]},
                  "extension_seeds": [_S2_POINT], "law_seeds": []}
    origin = {"kind": "slice", "fixed": {"0": 0.0, "1": 0.0}, "euler_char": 1}
    disk = {"kind": "euclidean", "center": [0.0, 0.0]}
    cfg = {"gauss": 12, "periodic": 24}
    rotational = {"kind": "linear", "matrix": [[0.0, -1.0], [1.0, 0.0]]}
    return [
        Scenario("index-radial-pt-s2", "Radial field around a point of S^2", {"kind": "sphere", "dim": 2},
                 tuple(_index_checks(1, radial=True)),
                 submanifold={"kind": "slice", "fixed": {"0": 1.0, "1": 2.0}, "euler_char": 1},
                 field={"kind": "radial_sphere", "basis": [q0], "scale": r_s, "sign": 1},
                 tube=point_tube, config=cfg),
        Scenario("index-radial-s1-s3", "Radial field around a great circle of S^3", {"kind": "sphere", "dim": 3},
                 tuple(_index_checks(0, radial=True)),
                 submanifold={"kind": "slice", "fixed": {"0": _HALF_PI, "1": _HALF_PI}, "euler_char": 0},
                 field=radial_s3,
                 extension={"kind": "swirl", "base": radial_s3, "cutoff": 0.8 * r_s, "axis": 2},
                 tube=circle_tube, config={"gauss": 12, "periodic": 16}),
        Scenario("law-constant-disk", "Constant field on a flat disk", {"kind": "euclidean", "dim": 2},
                 tuple(_index_checks(0, provenance="DERIVED")),
                 submanifold=origin, field={"kind": "linear", "matrix": [[0.0, 0.0], [0.0, 0.0]], "offset": [1.0, 0.3]},
                 tube={"radius": 1.0, "distance": disk, "extension_seeds": [], "law_seeds": [[3.4], [0.3]]},
                 config=cfg),
        Scenario("index-rotational-disk", "Rotational field around the center of a flat disk",
                 {"kind": "euclidean", "dim": 2}, tuple(_index_checks(1, provenance="DERIVED")),
                 submanifold=origin, field=rotational,
                 tube={"radius": 0.5, "distance": disk, "extension_seeds": [[0.05, 0.02]], "law_seeds": []},
                 config=cfg),
        Scenario("index-tilted-disk", "Radial field tilted by a constant on the boundary of a flat disk",
                 {"kind": "euclidean", "dim": 2}, tuple(_index_checks(1, provenance="DERIVED")),
                 submanifold=origin, field={"kind": "tilted_radial", "tilt": [0.3, 0.2], "radius": 1.0},
                 tube={"radius": 1.0, "distance": disk, "extension_seeds": [[0.02, 0.01]],
                       "law_seeds": [[0.588], [3.73]]},
                 config=cfg),
        Scenario("index-inward-pt-r3", "Inward radial field at a point of flat 3-space",
                 {"kind": "euclidean", "dim": 3}, tuple(_index_checks(-1, law=False, provenance="DERIVED")),
                 submanifold={"kind": "slice", "fixed": {"0": 0.0, "1": 0.0, "2": 0.0}, "euler_char": 1},
                 field={"kind": "linear", "matrix": [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]},
                 tube={"radius": 0.5, "distance": {"kind": "euclidean", "center": [0.0, 0.0, 0.0]},
                       "extension_seeds": [[0.01, 0.02, 0.03]]},
                 config={"gauss": 12, "periodic": 24}),
    ]


def _perturbed(base: Scenario, name: str, bump: dict, changes, extra=()) -> Scenario:
    chart = dict(base.chart, perturbation=bump)
    checks = tuple(c for c in base.checks if c.kind not in ("radial_snm_gap",))
    checks += tuple(changes) + tuple(extra)
    return Scenario(name, base.description + " (conformally perturbed metric)", chart, checks, base.submanifold,
                    base.field, base.extension, base.tube, base.config)


def _metric_change(name, quantity, tol, mode="at_most", expected=0.0, provenance="PAPER", **params):
    return CheckSpec(name, "metric_change", expected, tol, provenance, mode, {"quantity": quantity, "params": params})


def _perturbation_scenarios(by_name):
    fiber_s2 = Scenario("fiber-s2-perturbed", "Fiber normalization on a perturbed 2-sphere",
                        {"kind": "sphere", "dim": 2, "perturbation": _S2_BUMP},
                        (_check("fiber at bump", "fiber", 1, 1e-6, "PAPER", point=_S2_POINT),
                         _metric_change("fiber change", "fiber", 1e-2, point=_S2_POINT)),
                        config={"gauss": 12, "periodic": 16})
    fiber_s3 = Scenario("fiber-s3-perturbed", "Fiber normalization on a perturbed 3-sphere",
                        {"kind": "sphere", "dim": 3, "perturbation": _S3_BUMP},
                        (_check("fiber", "fiber", 1, 1e-6, "PAPER", point=[1.2, 1.4, 0.3]),
                         _metric_change("fiber change", "fiber", 1e-2, point=[1.2, 1.4, 0.3])),
                        config={"gauss": 12, "periodic": 16})
    index_change = [_metric_change("index change", "index_transgression", 1e-2)]
    snm_change = [_metric_change("SNM integral change", "snm", 1e-2)]
    return [
        fiber_s2,
        fiber_s3,
        _perturbed(by_name["chern-pt-in-s2"], "chern-pt-in-s2-perturbed", _S2_BUMP, snm_change),
        _perturbed(by_name["chern-s1-in-s3"], "chern-s1-in-s3-perturbed", _S3_BUMP, snm_change),
        _perturbed(by_name["index-radial-pt-s2"], "index-radial-pt-s2-perturbed", _S2_BUMP, index_change),
        _perturbed(by_name["index-radial-s1-s3"], "index-radial-s1-s3-perturbed", _S3_BUMP, index_change),
        _perturbed(by_name["index-rotational-disk"], "index-rotational-disk-perturbed", _DISK_BUMP, index_change),
        Scenario("cap-pi/3-perturbed", "Latitude circle on a perturbed 2-sphere: the integral moves",
                 {"kind": "sphere", "dim": 2, "perturbation": _CAP_BUMP},
                 (_check("chi(D) - int_D Omega", "relative_gb", 1, 1e-5, "PAPER",
                         region=[[0.0, math.pi / 3, "gauss"], [0.0, 2 * math.pi, "periodic"]]),
                  _metric_change("int M+ Phi change", "mplus", 0, mode="at_least", expected=0.05,
                                 provenance="PAPER")),
                 submanifold={"kind": "slice", "fixed": {"0": math.pi / 3}, "euler_char": 0},
                 config={"gauss": 24, "periodic": 32}),
    ]


def catalog() -> list:
    """All shipped scenarios, in a fixed order."""
    base = (
        _gauss_bonnet_scenarios()
        + _fiber_scenarios()
        + _dphi_scenarios()
        + _lemma_scenarios()
        + _cap_scenarios()
        + _chern_scenarios()
        + _index_scenarios()
    )
    return base + _perturbation_scenarios({s.name: s for s in base})


def get(name: str, scenarios=None) -> Scenario:
    for s in scenarios if scenarios is not None else catalog():
        if s.name == name:
            return s
    raise KeyError(f"unknown scenario {name!r}")


def select(patterns, scenarios=None) -> list:
    """Scenarios whose names match any of the glob ``patterns``; unmatched patterns raise ``KeyError``."""
    pool = scenarios if scenarios is not None else catalog()
    chosen = []
    for pat in patterns:
        hits = [s for s in pool if fnmatch.fnmatchcase(s.name, pat)]
        if not hits:
            raise KeyError(f"no scenario matches {pat!r}")
        chosen.extend(h for h in hits if h not in chosen)
    return [s for s in pool if s in chosen]


def load_scenarios(path) -> list:
    """Scenarios from a JSON file holding a list, or an object with a ``scenarios`` list."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("scenarios", [data])
    return [Scenario.from_dict(d) for d in data]


def dump_scenarios(scenarios, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([s.to_dict() for s in scenarios], fh, indent=2)

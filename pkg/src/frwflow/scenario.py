"""Scenario configuration: dataclasses, JSON round-trip, validation, dispatch.

A scenario file is a JSON object with ``"spec_version": 1``.  Example::

    {
      "spec_version": 1,
      "model": "flow",
      "kappa": 1.0,
      "span": [0.0, 0.5],
      "initial": {"a": 3.0},
      "formulation": {"kind": "intrinsic"},
      "output": {"n_points": 101}
    }

Model-specific keys: ``formulation`` (flow); ``fluids``, ``G``, ``Lambda``,
``density_law`` (friedmann); ``brans_dicke`` (bransdicke).  Optional for
every model: ``integrator`` (IntegratorSettings fields), ``guards``
(``eps_min``, ``a_max``), ``output`` (``n_points``).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ConfigError
from .flow import PRINTED_SIGMA, FlowFormulation
from .friedmann import FluidModel
from .odekit import IntegratorSettings

SPEC_VERSION = 1
MODELS = ("flow", "friedmann", "bransdicke")
DENSITY_LAWS = ("continuity", "closed_form")


@dataclass(frozen=True)
class InitialState:
    a: float = 1.0
    a_dot: float | None = None
    expansion: int = 1  # sign of a' when it is completed from a constraint
    H: float | None = None
    phi: float | None = None
    phi_dot: float = 0.0
    rho: float | None = None
    psi: float | None = None
    psi_dot: float | None = None


@dataclass(frozen=True)
class BDConfig:
    w_bd: float
    V: tuple[float, ...] = ()  # polynomial coefficients in phi, lowest degree first
    matter: str = "fluid"  # "fluid" | "inflaton"
    U: tuple[float, ...] = ()  # inflaton potential coefficients in psi
    solve_for: str = "rho"  # unknown completed from the first integral: "rho" | "H"


@dataclass(frozen=True)
class Scenario:
    model: str
    kappa: float = 0.0
    span: tuple[float, float] = (0.0, 1.0)
    initial: InitialState = field(default_factory=InitialState)
    formulation: FlowFormulation = field(default_factory=FlowFormulation)
    fluids: tuple[FluidModel, ...] = ()
    G: float = 1.0
    Lambda: float = 0.0
    density_law: str = "continuity"
    brans_dicke: BDConfig | None = None
    settings: IntegratorSettings = field(default_factory=IntegratorSettings)
    n_points: int = 201
    eps_min: float = 1e-8
    a_max: float = 1e8

    def output_grid(self):
        t0, t1 = self.span
        if t1 == t0:
            return np.array([t0])
        return np.linspace(t0, t1, self.n_points)

    def with_param(self, path: str, value) -> "Scenario":
        """Copy with a dotted config path (as in the JSON form) replaced."""
        data = to_dict(self)
        node = data
        keys = path.split(".")
        for key in keys[:-1]:
            if isinstance(node, list):
                key = int(key)
            node = node[key]
        last = keys[-1]
        if isinstance(node, list):
            node[int(last)] = value
        else:
            node[last] = value
        return from_dict(data)


def _num(d, key, default=None, field_name=None, required=False):
    name = field_name or key
    if key not in d:
        if required:
            raise ConfigError("missing required field", name)
        return default
    v = d[key]
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", name)
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError("must be finite", name)
    return v


def _check_keys(d, allowed, where):
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"unknown key(s) {sorted(extra)}", where)


def _poly(d, key, where):
    v = d.get(key, [])
    if not isinstance(v, list) or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v):
        raise ConfigError("expected a list of numbers", f"{where}.{key}")
    return tuple(float(c) for c in v)


def from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object")
    if data.get("spec_version") != SPEC_VERSION:
        raise ConfigError(f"expected {SPEC_VERSION}, got {data.get('spec_version')!r}", "spec_version")
    _check_keys(
        data,
        {"spec_version", "model", "kappa", "span", "initial", "formulation", "fluids", "G", "Lambda",
         "density_law", "brans_dicke", "integrator", "output", "guards"},
        "scenario",
    )
    model = data.get("model")
    if model not in MODELS:
        raise ConfigError(f"must be one of {MODELS}, got {model!r}", "model")
    kappa = _num(data, "kappa", 0.0)

    span = data.get("span", [0.0, 1.0])
    if not (isinstance(span, list) and len(span) == 2):
        raise ConfigError("expected [t0, t1]", "span")
    t0 = _num({"v": span[0]}, "v", field_name="span[0]")
    t1 = _num({"v": span[1]}, "v", field_name="span[1]")
    if t1 < t0:
        raise ConfigError("t1 must be >= t0", "span")

    ini = data.get("initial", {})
    if not isinstance(ini, dict):
        raise ConfigError("expected an object", "initial")
    _check_keys(ini, {f.name for f in fields(InitialState)}, "initial")
    expansion = ini.get("expansion", 1)
    if expansion not in (1, -1):
        raise ConfigError("must be +1 or -1", "initial.expansion")
    initial = InitialState(
        a=_num(ini, "a", 1.0, "initial.a"),
        a_dot=_num(ini, "a_dot", None, "initial.a_dot"),
        expansion=int(expansion),
        H=_num(ini, "H", None, "initial.H"),
        phi=_num(ini, "phi", None, "initial.phi"),
        phi_dot=_num(ini, "phi_dot", 0.0, "initial.phi_dot"),
        rho=_num(ini, "rho", None, "initial.rho"),
        psi=_num(ini, "psi", None, "initial.psi"),
        psi_dot=_num(ini, "psi_dot", None, "initial.psi_dot"),
    )
    if not initial.a > 0:
        raise ConfigError("scale factor must be positive", "initial.a")

    fd = data.get("formulation", {"kind": "direct"})
    if not isinstance(fd, dict):
        raise ConfigError("expected an object", "formulation")
    _check_keys(fd, {"kind", "sigma"}, "formulation")
    sigma = fd.get("sigma", "calibrated")
    if sigma == "calibrated":
        sigma = None
    elif sigma == "printed":
        sigma = PRINTED_SIGMA
    try:
        formulation = FlowFormulation(fd.get("kind", "direct"), sigma)
    except ValueError as exc:
        raise ConfigError(str(exc), "formulation") from None

    fluids = []
    for i, fl in enumerate(data.get("fluids", [])):
        if not isinstance(fl, dict):
            raise ConfigError("expected an object", f"fluids[{i}]")
        _check_keys(fl, {"w", "rho0"}, f"fluids[{i}]")
        rho0 = _num(fl, "rho0", required=True, field_name=f"fluids[{i}].rho0")
        if rho0 < 0:
            raise ConfigError("must be >= 0", f"fluids[{i}].rho0")
        fluids.append(FluidModel(_num(fl, "w", required=True, field_name=f"fluids[{i}].w"), rho0))

    G = _num(data, "G", 1.0)
    if not G > 0:
        raise ConfigError("must be positive", "G")
    density_law = data.get("density_law", "continuity")
    if density_law not in DENSITY_LAWS:
        raise ConfigError(f"must be one of {DENSITY_LAWS}", "density_law")

    bd = None
    if "brans_dicke" in data and data["brans_dicke"] is not None:
        b = data["brans_dicke"]
        if not isinstance(b, dict):
            raise ConfigError("expected an object", "brans_dicke")
        _check_keys(b, {f.name for f in fields(BDConfig)}, "brans_dicke")
        matter = b.get("matter", "fluid")
        if matter not in ("fluid", "inflaton"):
            raise ConfigError("must be 'fluid' or 'inflaton'", "brans_dicke.matter")
        solve_for = b.get("solve_for", "rho" if matter == "fluid" else "H")
        if solve_for not in ("rho", "H"):
            raise ConfigError("must be 'rho' or 'H'", "brans_dicke.solve_for")
        w_bd = _num(b, "w_bd", required=True, field_name="brans_dicke.w_bd")
        if 2 * w_bd + 3 == 0:
            raise ConfigError("2 w_bd + 3 must be nonzero", "brans_dicke.w_bd")
        bd = BDConfig(w_bd, _poly(b, "V", "brans_dicke"), matter, _poly(b, "U", "brans_dicke"), solve_for)

    integ = data.get("integrator", {})
    if not isinstance(integ, dict):
        raise ConfigError("expected an object", "integrator")
    _check_keys(integ, {f.name for f in fields(IntegratorSettings)}, "integrator")
    try:
        settings = IntegratorSettings(**integ)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "integrator") from None

    out = data.get("output", {})
    _check_keys(out, {"n_points"}, "output")
    n_points = out.get("n_points", 201)
    if not isinstance(n_points, int) or isinstance(n_points, bool) or n_points < 2:
        raise ConfigError("must be an integer >= 2", "output.n_points")

    guards = data.get("guards", {})
    _check_keys(guards, {"eps_min", "a_max"}, "guards")
    eps_min = _num(guards, "eps_min", 1e-8, "guards.eps_min")
    a_max = _num(guards, "a_max", 1e8, "guards.a_max")
    if not 0 < eps_min < a_max:
        raise ConfigError("need 0 < eps_min < a_max", "guards")

    sc = Scenario(
        model=model, kappa=kappa, span=(t0, t1), initial=initial, formulation=formulation,
        fluids=tuple(fluids), G=G, Lambda=_num(data, "Lambda", 0.0), density_law=density_law,
        brans_dicke=bd, settings=settings, n_points=n_points, eps_min=eps_min, a_max=a_max,
    )
    _validate_model_fields(sc)
    return sc


def _validate_model_fields(sc: Scenario):
    ini = sc.initial
    if sc.model == "flow":
        if sc.formulation.kind != "intrinsic" and ini.a_dot is None:
            raise ConfigError("required for this flow formulation", "initial.a_dot")
        if ini.a < sc.eps_min:
            raise ConfigError("below guards.eps_min", "initial.a")
    elif sc.model == "bransdicke":
        if sc.brans_dicke is None:
            raise ConfigError("missing required section", "brans_dicke")
        if ini.phi is None or not ini.phi > 0:
            raise ConfigError("required and must be positive", "initial.phi")
        if sc.brans_dicke.matter == "fluid" and len(sc.fluids) != 1:
            raise ConfigError("Brans-Dicke fluid matter needs exactly one fluid", "fluids")
        if sc.brans_dicke.matter == "inflaton" and (ini.psi is None or ini.psi_dot is None):
            raise ConfigError("inflaton matter needs initial.psi and initial.psi_dot", "initial")


def to_dict(sc: Scenario) -> dict:
    ini = {k: v for k, v in asdict(sc.initial).items() if v is not None}
    sigma = sc.formulation.sigma
    d = {
        "spec_version": SPEC_VERSION,
        "model": sc.model,
        "kappa": sc.kappa,
        "span": [sc.span[0], sc.span[1]],
        "initial": ini,
        "formulation": {"kind": sc.formulation.kind, "sigma": "calibrated" if sigma is None else sigma},
        "fluids": [{"w": f.w, "rho0": f.rho0} for f in sc.fluids],
        "G": sc.G,
        "Lambda": sc.Lambda,
        "density_law": sc.density_law,
        "integrator": asdict(sc.settings),
        "output": {"n_points": sc.n_points},
        "guards": {"eps_min": sc.eps_min, "a_max": sc.a_max},
    }
    if sc.brans_dicke is not None:
        b = asdict(sc.brans_dicke)
        b["V"] = list(b["V"])
        b["U"] = list(b["U"])
        d["brans_dicke"] = b
    return d


def dumps(sc: Scenario) -> str:
    return json.dumps(to_dict(sc), indent=2, sort_keys=True)


def loads(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return from_dict(data)


def load(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def run(sc: Scenario):
    """Dispatch a scenario to its model integrator."""
    if sc.model == "flow":
        from .flow import integrate_flow

        return integrate_flow(sc)
    if sc.model == "friedmann":
        from .friedmann import integrate_friedmann

        return integrate_friedmann(sc)
    from .bransdicke import integrate_bd

    return integrate_bd(sc)


__all__ = [
    "BDConfig", "InitialState", "Scenario", "from_dict", "to_dict", "dumps", "loads", "load", "run",
]

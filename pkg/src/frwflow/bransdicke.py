"""Brans-Dicke FRW cosmology with a scalar potential V(phi).

Matter is either a barotropic fluid or an inflaton psi with potential U,
for which rho = psi'^2/2 + U and P = psi'^2/2 - U.  The evolved state is
(a, H, phi, phi', rho) for a fluid and (a, H, phi, phi', psi, psi', rho)
for the inflaton, where rho is then carried separately by the continuity
equation so it can be compared against the inflaton value.

The Hubble equation is the trace/first-integral combination

    H' = -8 pi [(w+2) rho + w P] / ((2w+3) phi) - (w/2)(phi'/phi)^2
         + 2 H phi'/phi + kappa/a^2 + (phi V' - 2V) / (2 (2w+3) phi)

The printed version has 2(2+3) phi in the last denominator; that reading is
available as ``hubble_dot(..., literal=True)`` for diagnostics only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ConstraintViolation, DomainError, InadmissibleStateError, SingularityError
from .friedmann import FluidModel
from .odekit import EventSpec, integrate
from .trajectory import Trajectory

PI8 = 8 * math.pi


def _polynomial(coeffs) -> Polynomial:
    if isinstance(coeffs, Polynomial):
        return coeffs
    coeffs = tuple(coeffs) or (0.0,)
    return Polynomial(coeffs)


@dataclass(frozen=True)
class InflatonModel:
    U: Polynomial

    def __post_init__(self):
        object.__setattr__(self, "U", _polynomial(self.U))

    def density_pressure(self, psi, psi_dot):
        kin = 0.5 * psi_dot * psi_dot
        u = self.U(psi)
        return kin + u, kin - u


@dataclass(frozen=True)
class BDParams:
    w_bd: float
    V: Polynomial = None
    matter: FluidModel | InflatonModel = None

    def __post_init__(self):
        if 2 * self.w_bd + 3 == 0:
            raise DomainError("degenerate coupling: 2 w_bd + 3 = 0")
        object.__setattr__(self, "V", _polynomial(() if self.V is None else self.V))
        if self.matter is None:
            object.__setattr__(self, "matter", FluidModel(0.0, 0.0))

    @property
    def dV(self) -> Polynomial:
        return self.V.deriv()

    @property
    def inflaton(self) -> bool:
        return isinstance(self.matter, InflatonModel)


@dataclass(frozen=True)
class BDState:
    t: float
    a: float
    H: float
    phi: float
    phi_dot: float
    rho: float = 0.0
    psi: float | None = None
    psi_dot: float | None = None

    def __post_init__(self):
        if not self.a > 0:
            raise SingularityError(f"a must be positive, got {self.a!r}")
        if not self.phi > 0:
            raise DomainError(f"phi must be positive, got {self.phi!r}")


def matter_density_pressure(state: BDState, params: BDParams):
    if params.inflaton:
        return params.matter.density_pressure(state.psi, state.psi_dot)
    return state.rho, params.matter.w * state.rho


def box_phi_kinematic(phi_ddot, H, phi_dot):
    return -(phi_ddot + 3 * H * phi_dot)


def box_phi_dynamic(state: BDState, params: BDParams):
    rho, P = matter_density_pressure(state, params)
    phi = state.phi
    return (PI8 * (3 * P - rho) + phi * params.dV(phi) - 2 * params.V(phi)) / (2 * params.w_bd + 3)


def phi_ddot(state: BDState, params: BDParams):
    rho, P = matter_density_pressure(state, params)
    phi = state.phi
    src = PI8 * (rho - 3 * P) - phi * params.dV(phi) + 2 * params.V(phi)
    return src / (2 * params.w_bd + 3) - 3 * state.H * state.phi_dot


def hubble_dot(state: BDState, params: BDParams, kappa, literal=False):
    w = params.w_bd
    rho, P = matter_density_pressure(state, params)
    phi, x = state.phi, state.phi_dot / state.phi
    pot = phi * params.dV(phi) - 2 * params.V(phi)
    pot_den = 2 * (2 + 3) * phi if literal else 2 * (2 * w + 3) * phi
    return (
        -PI8 / ((2 * w + 3) * phi) * ((w + 2) * rho + w * P)
        - w / 2 * x * x
        + 2 * state.H * x
        + kappa / state.a**2
        + pot / pot_den
    )


@dataclass(frozen=True)
class BDRates:
    a_dot: float
    H_dot: float
    phi_dot: float
    phi_ddot: float
    rho_dot: float
    psi_dot: float | None = None
    psi_ddot: float | None = None


def bd_rhs(state: BDState, params: BDParams, kappa=0.0) -> BDRates:
    rho, P = matter_density_pressure(state, params)
    psi_dd = None
    if params.inflaton:
        psi_dd = -3 * state.H * state.psi_dot - params.matter.U.deriv()(state.psi)
        rho_dot = -3 * state.H * (state.rho + P)
    else:
        rho_dot = -3 * state.H * (rho + P)
    return BDRates(
        a_dot=state.a * state.H,
        H_dot=hubble_dot(state, params, kappa),
        phi_dot=state.phi_dot,
        phi_ddot=phi_ddot(state, params),
        rho_dot=rho_dot,
        psi_dot=state.psi_dot,
        psi_ddot=psi_dd,
    )


def bd_constraint_residual(state: BDState, params: BDParams, kappa=0.0):
    """H^2 minus the right side of the first integral."""
    rho, _ = matter_density_pressure(state, params)
    phi, x = state.phi, state.phi_dot / state.phi
    rhs = (
        PI8 / (3 * phi) * rho
        + params.w_bd / 6 * x * x
        - state.H * x
        - kappa / state.a**2
        + params.V(phi) / (6 * phi)
    )
    return state.H**2 - rhs


@dataclass(frozen=True)
class RicciTwoWay:
    from_trace: float  # field-equation trace: matter and scalar side
    from_geometry: float  # 6 [H' + 2H^2 + kappa/a^2]
    difference: float


def bd_ricci_scalar(state: BDState, params: BDParams, kappa=0.0) -> RicciTwoWay:
    rho, P = matter_density_pressure(state, params)
    phi, w = state.phi, params.w_bd
    trace = 3 * P - rho
    grad2 = -state.phi_dot**2
    r_trace = -PI8 * trace / phi + w / phi**2 * grad2 + 3 * box_phi_dynamic(state, params) / phi + 2 * params.V(phi) / phi
    hd = hubble_dot(state, params, kappa)
    r_geom = 6 * (hd + 2 * state.H**2 + kappa / state.a**2)
    return RicciTwoWay(r_trace, r_geom, r_trace - r_geom)


def inflaton_conservation_residual(state: BDState, params: BDParams):
    """d/dt rho_K + 3H(rho + P) with psi'' from the Klein-Gordon equation."""
    if not params.inflaton:
        raise DomainError("inflaton matter required")
    U = params.matter.U
    psi_dd = -3 * state.H * state.psi_dot - U.deriv()(state.psi)
    rho, P = params.matter.density_pressure(state.psi, state.psi_dot)
    drho = state.psi_dot * psi_dd + U.deriv()(state.psi) * state.psi_dot
    return drho + 3 * state.H * (rho + P)


def complete_initial_data(state: BDState, params: BDParams, kappa=0.0, solve_for="rho", expansion=1) -> BDState:
    """Return ``state`` with one unknown fixed by the first integral.

    ``solve_for="rho"`` (fluid matter) keeps H and solves for the density;
    ``solve_for="H"`` keeps the matter and picks the root of the quadratic in H
    whose sign matches ``expansion`` (the larger root for +1).
    """
    phi, x, w = state.phi, state.phi_dot / state.phi, params.w_bd
    V = params.V(phi)
    if solve_for == "rho":
        if params.inflaton:
            raise DomainError("cannot solve for rho with inflaton matter; use solve_for='H'")
        bracket = state.H**2 - w / 6 * x * x + state.H * x + kappa / state.a**2 - V / (6 * phi)
        rho = 3 * phi / PI8 * bracket
        if rho < 0:
            raise ConstraintViolation(f"first integral requires rho = {rho!r} < 0", residual=rho)
        out = replace(state, rho=rho)
    elif solve_for == "H":
        rho, _ = matter_density_pressure(state, params)
        c = PI8 / (3 * phi) * rho + w / 6 * x * x - kappa / state.a**2 + V / (6 * phi)
        disc = x * x + 4 * c
        if disc < 0:
            raise InadmissibleStateError(f"no real H satisfies the first integral (disc={disc!r})", residual=disc)
        H = (-x + math.copysign(math.sqrt(disc), expansion)) / 2
        out = replace(state, H=H)
    else:
        raise ValueError(f"unknown unknown {solve_for!r}")
    if params.inflaton and out.psi is not None:
        out = replace(out, rho=params.matter.density_pressure(out.psi, out.psi_dot)[0])
    return out


def params_from_scenario(scenario) -> BDParams:
    cfg = scenario.brans_dicke
    matter = InflatonModel(cfg.U) if cfg.matter == "inflaton" else scenario.fluids[0]
    return BDParams(cfg.w_bd, cfg.V, matter)


def initial_state_from_scenario(scenario, params: BDParams) -> BDState:
    ini, cfg, k = scenario.initial, scenario.brans_dicke, float(scenario.kappa)
    a0 = float(ini.a)
    H = ini.H if ini.H is not None else (ini.a_dot / a0 if ini.a_dot is not None else 0.0)
    if params.inflaton:
        st = BDState(scenario.span[0], a0, H, ini.phi, ini.phi_dot, 0.0, ini.psi, ini.psi_dot)
    else:
        rho = ini.rho if ini.rho is not None else params.matter.rho0 * a0 ** (-3 * (1 + params.matter.w))
        st = BDState(scenario.span[0], a0, H, ini.phi, ini.phi_dot, rho)
    return complete_initial_data(st, params, k, cfg.solve_for, ini.expansion)


def integrate_bd(scenario) -> Trajectory:
    """Evolve the Brans-Dicke system from constraint-completed initial data.

    ``constraint_residual`` is the first-integral residual divided by
    max(1, H^2).  ``identity_residual`` is the trace-vs-geometry Ricci scalar
    difference (relative to max(1, |R|)) for fluid matter, and the relative gap between the carried
    density and psi'^2/2 + U(psi) for the inflaton.
    """
    params = params_from_scenario(scenario)
    k = float(scenario.kappa)
    st0 = initial_state_from_scenario(scenario, params)
    res0 = bd_constraint_residual(st0, params, k)
    if abs(res0) > 1e-12 * max(1.0, st0.H**2):
        raise ConstraintViolation(f"initial first-integral residual {res0!r}", residual=res0)
    inflaton = params.inflaton

    def unpack(t, y):
        if inflaton:
            return BDState(t, y[0], y[1], y[2], y[3], y[6], y[4], y[5])
        return BDState(t, y[0], y[1], y[2], y[3], y[4])

    def rhs(t, y):
        if not (y[0] > 0 and y[2] > 0):
            return np.full_like(y, np.nan)
        r = bd_rhs(unpack(t, y), params, k)
        if inflaton:
            return np.array([r.a_dot, r.H_dot, r.phi_dot, r.phi_ddot, r.psi_dot, r.psi_ddot, r.rho_dot])
        return np.array([r.a_dot, r.H_dot, r.phi_dot, r.phi_ddot, r.rho_dot])

    if inflaton:
        y0 = [st0.a, st0.H, st0.phi, st0.phi_dot, st0.psi, st0.psi_dot, st0.rho]
    else:
        y0 = [st0.a, st0.H, st0.phi, st0.phi_dot, st0.rho]
    events = [
        EventSpec("singularity-floor", lambda t, y: y[0] - scenario.eps_min, True, -1),
        EventSpec("ceiling", lambda t, y: y[0] - scenario.a_max, True, +1),
        EventSpec("turning-point", lambda t, y: y[1], False, 0),
    ]
    sol = integrate(rhs, y0, scenario.span, scenario.settings, events, scenario.output_grid())
    rows = [unpack(t, y) for t, y in zip(sol.t, sol.y)]
    rp = [matter_density_pressure(s, params) for s in rows]
    Hd = np.array([hubble_dot(s, params, k) for s in rows])
    a, H = sol.y[:, 0], sol.y[:, 1]
    cols = {
        "a": a,
        "a_dot": a * H,
        "a_ddot": a * (Hd + H * H),
        "H": H,
        "rho": np.array([r for r, _ in rp]),
        "P": np.array([p for _, p in rp]),
        "phi": sol.y[:, 2],
        "phi_dot": sol.y[:, 3],
        "constraint_residual": np.array([bd_constraint_residual(s, params, k) for s in rows]) / np.maximum(1.0, H * H),
    }
    if inflaton:
        cols["psi"] = sol.y[:, 4]
        cols["psi_dot"] = sol.y[:, 5]
        carried = sol.y[:, 6]
        cols["identity_residual"] = (carried - cols["rho"]) / np.maximum(1.0, np.abs(cols["rho"]))
    else:
        two_way = [bd_ricci_scalar(s, params, k) for s in rows]
        cols["identity_residual"] = np.array([r.difference / max(1.0, abs(r.from_geometry)) for r in two_way])
    p = {"kappa": k, "w_bd": params.w_bd, "matter": "inflaton" if inflaton else "fluid"}
    return Trajectory("bransdicke", sol.t, cols, sol.events, p)

"""Friedmann cosmology with barotropic fluids and a cosmological constant.

Also hosts the coupling of the Ricci-flow stipulation with the Friedmann
equations, under which d(a^2)/dt = 8 pi G (P - rho) whatever kappa is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, InadmissibleStateError, SingularityError
from .odekit import EventSpec, integrate
from .trajectory import Trajectory

DUST, RADIATION, VACUUM = 0.0, 1.0 / 3.0, -1.0


@dataclass(frozen=True)
class FluidModel:
    """Barotropic fluid P = w rho with density rho0 at a = 1."""

    w: float
    rho0: float

    def __post_init__(self):
        if not self.rho0 >= 0:
            raise DomainError(f"rho0 must be >= 0, got {self.rho0!r}")


def fluid_density(a, fluid: FluidModel):
    """(rho, P) at scale factor ``a`` (scalar or array)."""
    if np.any(np.asarray(a) <= 0):
        raise SingularityError("fluid density needs a > 0")
    rho = fluid.rho0 * np.power(a, -3.0 * (1.0 + fluid.w))
    return rho, fluid.w * rho


def total_density(a, fluids: Sequence[FluidModel]):
    rho = P = 0.0
    for f in fluids:
        r, p = fluid_density(a, f)
        rho = rho + r
        P = P + p
    return rho, P


def friedmann_h_squared(a, rho, kappa, Lambda=0.0, G=1.0):
    """H^2 = Lambda/3 + (8 pi G/3) rho - kappa/a^2; may come out negative."""
    if np.any(np.asarray(a) <= 0):
        raise SingularityError("friedmann_h_squared needs a > 0")
    return Lambda / 3 + 8 * math.pi * G / 3 * rho - kappa / a**2


@dataclass(frozen=True)
class Acceleration:
    a_ddot_over_a: float
    repulsive: bool  # rho + 3P < 0


def acceleration(rho, P, Lambda=0.0, G=1.0) -> Acceleration:
    return Acceleration(Lambda / 3 - 4 * math.pi * G / 3 * (rho + 3 * P), rho + 3 * P < 0)


@dataclass(frozen=True)
class DeSitterPoint:
    a: float
    a_dot: float
    a_ddot: float


def desitter_solution(k: float, omega: float, t: float) -> DeSitterPoint:
    """Vacuum solution with Lambda = 3 omega^2 for each sign of k."""
    if not omega > 0:
        raise DomainError("omega must be positive")
    x = omega * t
    if k > 0:
        c = math.sqrt(k) / omega
        return DeSitterPoint(c * math.cosh(x), c * omega * math.sinh(x), c * omega * omega * math.cosh(x))
    if k == 0:
        e = math.exp(x)
        return DeSitterPoint(e, omega * e, omega * omega * e)
    c = math.sqrt(-k) / omega
    if t == 0:
        raise SingularityError("k < 0 de Sitter branch starts at a = 0 (singular start)")
    return DeSitterPoint(c * math.sinh(x), c * omega * math.cosh(x), c * omega * omega * math.sinh(x))


def desitter_residuals(k: float, omega: float, t: float) -> tuple[float, float]:
    """Residuals of the two vacuum Friedmann equations with Lambda = 3 omega^2."""
    p = desitter_solution(k, omega, t)
    Lam = 3 * omega * omega
    q = (p.a_dot**2 + k) / p.a**2
    return 3 * q - Lam, -2 * p.a_ddot / p.a - q + Lam


@dataclass(frozen=True)
class OmegaClassification:
    omega: float
    kappa_sign: int
    label: str
    identity_residual: float  # Omega - 1 - kappa/(H^2 a^2)


# |Omega - 1| below this counts as exactly critical
FLAT_BAND = 1e-12


def classify_omega(rho, H, a, kappa, G=1.0) -> OmegaClassification:
    if H == 0:
        raise DomainError("H = 0: density parameter undefined (static universe)")
    omega = 8 * math.pi * G * rho / (3 * H * H)
    d = omega - 1
    if abs(d) <= FLAT_BAND:
        sign, label = 0, "flat"
    elif d < 0:
        sign, label = -1, "open"
    else:
        sign, label = 1, "closed"
    return OmegaClassification(omega, sign, label, d - kappa / (H * H * a * a))


def coupled_flow_rate(rho, P, G=1.0):
    """d(a^2)/dt implied by the flow stipulation together with the Friedmann equations."""
    return 8 * math.pi * G * (P - rho)


@dataclass(frozen=True)
class ChainResiduals:
    friedmann_combination: float  # 3a''/a + 6H^2 - [12 pi G (rho - P) - 6 kappa/a^2]
    flow_rate: float  # flow-implied d(a^2)/dt minus coupled_flow_rate


def coupling_chain(a, rho, P, kappa, G=1.0, Lambda=0.0) -> ChainResiduals:
    """Residuals of each step from the Friedmann relations to d(a^2)/dt.

    H^2 and a''/a are taken from the Friedmann equations at (a, rho, P);
    the flow stipulation then fixes 2 a a' = -(2/3) [3a''/a + 6H^2 + 6 kappa/a^2].
    Lambda must be 0 for the chain to close; it is a parameter so callers
    can see the chain break when it is not.
    """
    H2 = friedmann_h_squared(a, rho, kappa, Lambda, G)
    acc = acceleration(rho, P, Lambda, G).a_ddot_over_a
    lhs = 3 * acc + 6 * H2
    comb = lhs - (12 * math.pi * G * (rho - P) - 6 * kappa / a**2)
    d_a2 = -2.0 / 3.0 * (lhs + 6 * kappa / a**2)
    return ChainResiduals(comb, d_a2 - coupled_flow_rate(rho, P, G))


@dataclass(frozen=True)
class RepulsiveBound:
    lhs: float  # 2 a''/a
    bound: float  # Lambda - kappa/a^2
    repulsive: bool  # bound > 0
    printed_direction_holds: bool  # lhs >= bound, which only happens on the H^2 = 0 boundary


def repulsive_bound(a, kappa, Lambda, rho, G=1.0) -> RepulsiveBound:
    """Compare the pressure-free 2a''/a with Lambda - kappa/a^2.

    With H^2 >= 0, (8 pi G/3) rho >= kappa/a^2 - Lambda/3, hence

        2a''/a = 2 Lambda/3 - (8 pi G/3) rho <= Lambda - kappa/a^2,

    the gap being exactly -H^2.  The bound is an upper
    bound: Lambda - kappa/a^2 > 0 (``repulsive``) is necessary for a'' > 0
    but not sufficient.  ``printed_direction_holds`` reports whether the
    reversed inequality lhs >= bound is satisfied at this state.
    """
    slack = 8 * math.pi * G / 3 * rho + Lambda / 3 - kappa / a**2
    scale = max(1.0, abs(kappa / a**2), abs(Lambda))
    if slack < -1e-12 * scale:
        raise InadmissibleStateError(f"H^2 would be negative ({slack!r})", residual=slack)
    lhs = 2 * Lambda / 3 - 8 * math.pi * G / 3 * rho
    bound = Lambda - kappa / a**2
    return RepulsiveBound(lhs, bound, bound > 0, lhs >= bound - 1e-12 * scale)


def initial_a_dot(a0, fluids, kappa, Lambda, G, expansion) -> float:
    """a'(0) from the H^2 constraint and the chosen expansion sign."""
    rho, _ = total_density(a0, fluids)
    H2 = friedmann_h_squared(a0, rho, kappa, Lambda, G)
    if H2 < 0:
        raise InadmissibleStateError(f"H^2 = {H2!r} < 0 at the initial state", residual=H2)
    return math.copysign(a0 * math.sqrt(H2), expansion)


def integrate_friedmann(scenario) -> Trajectory:
    """Evolve (a, a', rho_i) with the acceleration equation and continuity.

    The H^2 relation is not imposed during the run; it is monitored as a
    first integral in ``constraint_residual``, normalised by max(1, H^2).
    Sign changes of a' are recorded as non-terminal turning-point events.
    With ``density_law == "closed_form"`` densities follow rho0 a^-3(1+w)
    instead of being integrated.
    """
    fluids = tuple(scenario.fluids)
    k, Lam, G = float(scenario.kappa), float(scenario.Lambda), float(scenario.G)
    a0 = float(scenario.initial.a)
    if scenario.initial.a_dot is not None:
        ad0 = float(scenario.initial.a_dot)
    else:
        ad0 = initial_a_dot(a0, fluids, k, Lam, G, scenario.initial.expansion)
    ws = np.array([f.w for f in fluids])
    rho_init = np.array([fluid_density(a0, f)[0] for f in fluids])
    closed = scenario.density_law == "closed_form"
    c8 = 8 * math.pi * G

    def densities(y):
        if closed:
            return np.array([f.rho0 * y[0] ** (-3 * (1 + f.w)) for f in fluids])
        return y[2:]

    def rhs(t, y):
        a, ad = y[0], y[1]
        rho = densities(y)
        acc = Lam / 3 - c8 / 6 * np.sum(rho * (1 + 3 * ws))
        dy = [ad, a * acc]
        if not closed:
            dy.extend(-3 * (ad / a) * (1 + ws) * rho)
        return np.array(dy)

    y0 = [a0, ad0] if closed else [a0, ad0, *rho_init]
    events = [
        EventSpec("singularity-floor", lambda t, y: y[0] - scenario.eps_min, True, -1),
        EventSpec("ceiling", lambda t, y: y[0] - scenario.a_max, True, +1),
        EventSpec("turning-point", lambda t, y: y[1], False, 0),
    ]
    sol = integrate(rhs, y0, scenario.span, scenario.settings, events, scenario.output_grid())
    a, ad = sol.y[:, 0], sol.y[:, 1]
    if closed:
        rho_i = np.array([[f.rho0 * ai ** (-3 * (1 + f.w)) for f in fluids] for ai in a]).reshape(len(a), len(fluids))
    else:
        rho_i = sol.y[:, 2:]
    rho = rho_i.sum(axis=1)
    P = (rho_i * ws).sum(axis=1)
    H = ad / a
    add = a * (Lam / 3 - c8 / 6 * (rho + 3 * P))
    H2_model = Lam / 3 + c8 / 3 * rho - k / a**2
    constraint = (H * H - H2_model) / np.maximum(1.0, H * H)
    # conservation of rho_i a^{3(1+w_i)}, worst component, relative
    if fluids:
        inv = rho_i * a[:, None] ** (3 * (1 + ws))
        ref = np.where(inv[0] != 0, inv[0], 1.0)
        conservation = np.max(np.abs(inv / ref - 1.0), axis=1)
    else:
        conservation = np.zeros_like(a)
    cols = {
        "a": a, "a_dot": ad, "a_ddot": add, "H": H, "rho": rho, "P": P,
        "constraint_residual": constraint, "identity_residual": conservation,
    }
    exact = exact_scale_factor(scenario, sol.t, a0, ad0)
    if exact is not None:
        cols["a_exact"] = exact
    params = {"kappa": k, "Lambda": Lam, "G": G, "fluids": [(f.w, f.rho0) for f in fluids]}
    return Trajectory("friedmann", sol.t, cols, sol.events, params)


def exact_scale_factor(scenario, t, a0, ad0):
    """Closed-form a(t) for vacuum de Sitter (kappa = 0) and flat single-component fluids."""
    fluids = [f for f in scenario.fluids if f.rho0 > 0]
    k, Lam = float(scenario.kappa), float(scenario.Lambda)
    dt = np.asarray(t) - scenario.span[0]
    if k != 0:
        return None
    if not fluids and Lam > 0:
        return a0 * np.exp(math.copysign(math.sqrt(Lam / 3), ad0) * dt)
    if len(fluids) == 1 and Lam == 0 and fluids[0].w > -1:
        # a = a0 (1 + (3/2)(1+w) H0 t)^{2/(3(1+w))}
        p = 1.5 * (1 + fluids[0].w)
        with np.errstate(invalid="ignore"):
            return a0 * np.power(1 + p * (ad0 / a0) * dt, 1 / p)
    return None

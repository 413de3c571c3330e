"""Ricci flow of the FRW scale factor.

The flow stipulation for the slice metric a(t)^2 gamma_ij is

    6 a a' = -2 [3 a''/a + 6 (a'/a)^2 + 6 kappa/a^2]

which this module integrates in four equivalent forms: directly in
(a, a'), as a first-order equation for the Hubble rate H, as the linear
second-order equation for chi = a^3 in the clock tau = 3t, and (as a
separate model) the intrinsic flow a a' = -2 kappa driven by the slice
curvature 2 kappa gamma_ij alone.

The printed Hubble form carries the a^2 H term with a sign that does not
follow from the direct equation.  The sign is a parameter ``sigma`` in

    H' = -3 H^2 - 2 kappa/a^2 + sigma a^2 H

and :func:`calibrate_sigma` decides it numerically against the direct form.
``PRINTED_SIGMA`` is the printed sign; it is kept available so its residual
can be reported instead of being silently corrected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .errors import InconsistencyError, QuadratureResolutionError, SingularityError
from .geometry import ScaleState, _kappa
from .odekit import EventSpec, integrate
from .trajectory import Trajectory

PRINTED_SIGMA = +1
FORMULATIONS = ("direct", "hubble", "chi", "intrinsic")
MIN_QUADRATURE_POINTS = 100


@dataclass(frozen=True)
class FlowFormulation:
    kind: str = "direct"
    sigma: int | None = None  # hubble/chi only; None means the calibrated sign

    def __post_init__(self):
        if self.kind not in FORMULATIONS:
            raise ValueError(f"unknown flow formulation {self.kind!r}")
        if self.sigma is not None and self.sigma not in (-1, 1):
            raise ValueError("sigma must be +1 or -1")
        if self.sigma is not None and self.kind not in ("hubble", "chi"):
            raise ValueError(f"sigma does not apply to {self.kind!r} formulation")

    def resolved_sigma(self) -> int:
        return calibrate_sigma().sigma if self.sigma is None else self.sigma

    def label(self) -> str:
        if self.kind in ("hubble", "chi"):
            tag = "calibrated" if self.sigma is None else f"{self.sigma:+d}"
            return f"{self.kind}(sigma={tag})"
        return self.kind


def flow_rhs_direct(state: ScaleState, kappa) -> float:
    """a'' solved from the flow stipulation."""
    k = _kappa(kappa)
    a, ad = state.a, state.a_dot
    if not a > 0:
        raise SingularityError(f"a must be positive, got {a!r}")
    return -a * a * ad - 2 * ad * ad / a - 2 * k / a


def flow_rhs_hubble(H: float, a: float, kappa, sigma: int) -> float:
    if not a > 0:
        raise SingularityError(f"a must be positive, got {a!r}")
    k = _kappa(kappa)
    return -3 * H * H - 2 * k / (a * a) + sigma * a * a * H


def residual_stipulation(a, a_dot, a_ddot, kappa):
    """Literal residual 6 a a' + 2 [3 a''/a + 6 (a'/a)^2 + 6 kappa/a^2] (vectorised)."""
    k = _kappa(kappa)
    a = np.asarray(a, dtype=float)
    return 6 * a * a_dot + 2 * (3 * a_ddot / a + 6 * (a_dot / a) ** 2 + 6 * k / a**2)


def residual_scale_stipulation(a, a_dot, a_ddot, kappa):
    """Magnitude of the largest term in :func:`residual_stipulation`, floored at 1."""
    k = _kappa(kappa)
    a = np.asarray(a, dtype=float)
    terms = np.stack(np.broadcast_arrays(
        6 * a * a_dot, 6 * a_ddot / a, 12 * (a_dot / a) ** 2, 12 * k / a**2, np.ones_like(a)
    ))
    return np.max(np.abs(terms), axis=0)


@dataclass(frozen=True)
class SigmaCalibration:
    sigma: int
    printed_sigma: int
    residuals: dict  # sigma -> max relative residual over the sample
    n_samples: int

    @property
    def printed_consistent(self) -> bool:
        return self.sigma == self.printed_sigma

    def report(self) -> str:
        verdict = "consistent" if self.printed_consistent else "INCONSISTENT"
        return (
            f"calibrated sigma = {self.sigma:+d} (max residual {self.residuals[self.sigma]:.3e}); "
            f"printed sigma = {self.printed_sigma:+d} (max residual {self.residuals[self.printed_sigma]:.3e}); "
            f"printed Hubble form is {verdict} with the direct flow equation"
        )


def _hubble_mismatch(sigma, a, ad, k):
    """Relative mismatch of H' between the Hubble form and a''/a - H^2."""
    H = ad / a
    direct = flow_rhs_direct(ScaleState(0.0, a, ad), k) / a - H * H
    hub = flow_rhs_hubble(H, a, k, sigma)
    scale = max(1.0, abs(direct), 3 * H * H, abs(2 * k / a**2), abs(a * a * H))
    return abs(hub - direct) / scale


@lru_cache(maxsize=None)
def calibrate_sigma(n_samples: int = 100, seed: int = 0) -> SigmaCalibration:
    """Pick the sign of the a^2 H term that reproduces the direct flow equation.

    States are drawn with |a'| >= 0.1 because a' = 0 makes both signs agree.
    """
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.5, 5.0, n_samples)
    ad = rng.uniform(0.1, 2.0, n_samples) * rng.choice([-1.0, 1.0], n_samples)
    k = rng.choice([-1.0, 0.0, 1.0], n_samples)
    residuals = {
        s: max(_hubble_mismatch(s, a[i], ad[i], k[i]) for i in range(n_samples)) for s in (+1, -1)
    }
    good = [s for s in (+1, -1) if residuals[s] <= 1e-12]
    if len(good) != 1:
        raise InconsistencyError(f"sigma calibration failed: residuals {residuals}")
    return SigmaCalibration(good[0], PRINTED_SIGMA, residuals, n_samples)


def _guard_events(a_of, eps_min, a_max):
    return [
        EventSpec("singularity-floor", lambda t, y: a_of(y) - eps_min, True, -1),
        EventSpec("ceiling", lambda t, y: a_of(y) - a_max, True, +1),
    ]


def integrate_flow(scenario) -> Trajectory:
    """Integrate the flow scenario in its selected formulation.

    Leaving ``eps_min <= a <= a_max`` ends the run with a typed event.
    Each row carries the formulation's own defining residual in
    ``identity_residual``: the stipulation residual for direct/hubble/chi
    rows, and a a' + 2 kappa for intrinsic rows.
    """
    k = float(scenario.kappa)
    form: FlowFormulation = scenario.formulation
    t0, t1 = scenario.span
    a0 = float(scenario.initial.a)
    if not a0 >= scenario.eps_min:
        raise SingularityError(f"initial a={a0!r} below eps_min={scenario.eps_min!r}")
    grid = scenario.output_grid()
    settings = scenario.settings
    params = {"kappa": k, "formulation": form.label()}

    if form.kind == "intrinsic":
        rhs = lambda t, y: np.array([-2 * k / y[0]])  # noqa: E731
        sol = integrate(rhs, [a0], (t0, t1), settings, _guard_events(lambda y: y[0], scenario.eps_min, scenario.a_max), grid)
        t = sol.t
        a = sol.y[:, 0]
        ad = -2 * k / a
        add = -4 * k * k / a**3
        with np.errstate(invalid="ignore"):
            exact = np.sqrt(a0 * a0 - 4 * k * (t - t0))
        cols = {"a": a, "a_dot": ad, "a_ddot": add, "H": ad / a, "identity_residual": a * ad + 2 * k, "a_exact": exact}
        return Trajectory("flow", t, cols, sol.events, params)

    ad0 = float(scenario.initial.a_dot)
    if form.kind == "direct":
        def rhs(t, y):
            a, ad = y
            return np.array([ad, -a * a * ad - 2 * ad * ad / a - 2 * k / a])

        sol = integrate(rhs, [a0, ad0], (t0, t1), settings, _guard_events(lambda y: y[0], scenario.eps_min, scenario.a_max), grid)
        t = sol.t
        a, ad = sol.y[:, 0], sol.y[:, 1]
        add = -a * a * ad - 2 * ad * ad / a - 2 * k / a
        events = sol.events
    elif form.kind == "hubble":
        sigma = form.resolved_sigma()
        params["sigma"] = sigma

        def rhs(t, y):
            a, H = y
            return np.array([a * H, -3 * H * H - 2 * k / (a * a) + sigma * a * a * H])

        sol = integrate(rhs, [a0, ad0 / a0], (t0, t1), settings, _guard_events(lambda y: y[0], scenario.eps_min, scenario.a_max), grid)
        t = sol.t
        a, H = sol.y[:, 0], sol.y[:, 1]
        ad = a * H
        Hd = -3 * H * H - 2 * k / (a * a) + sigma * a * a * H
        add = a * (Hd + H * H)
        events = sol.events
    else:  # chi: state (chi, chi_tau) in tau = 3t
        sigma = form.resolved_sigma()
        params["sigma"] = sigma

        def rhs(tau, y):
            chi, chi_t = y
            a = np.cbrt(chi)
            return np.array([chi_t, sigma * a * a / 3 * chi_t - 2 * k / (3 * a * a) * chi])

        tau_grid = None if grid is None else 3 * np.asarray(grid)
        sol = integrate(
            rhs, [a0**3, a0 * a0 * ad0], (3 * t0, 3 * t1), settings,
            _guard_events(lambda y: np.cbrt(y[0]), scenario.eps_min, scenario.a_max), tau_grid,
        )
        t = sol.t / 3
        chi, chi_t = sol.y[:, 0], sol.y[:, 1]
        a = np.cbrt(chi)
        ad = chi_t / (a * a)
        chi_tt = sigma * a * a / 3 * chi_t - 2 * k / (3 * a * a) * chi
        # chi_tt = (2 a a'^2 + a^2 a'') / 3
        add = (3 * chi_tt - 2 * a * ad * ad) / (a * a)
        events = tuple(
            type(ev)(ev.kind, ev.t_event / 3, ev.state_at_event, (ev.bracket[0] / 3, ev.bracket[1] / 3), ev.terminal)
            for ev in sol.events
        )

    cols = {"a": a, "a_dot": ad, "a_ddot": add, "H": ad / a, "identity_residual": residual_stipulation(a, ad, add, k)}
    return Trajectory("flow", t, cols, events, params)


@dataclass(frozen=True)
class FlowDiagnostics:
    residual_stipulation: float
    residual_chi: float
    residual_integral: float
    c0: float
    sigma: int
    residual_chi_algebraic: float = 0.0
    literal: dict = field(default_factory=dict)


def _chi_parts(traj):
    t = np.asarray(traj.t)
    a = np.asarray(traj["a"])
    ad = np.asarray(traj["a_dot"])
    return 3 * t, a, a**3, a * a * ad


def chi_form_residual(traj: Trajectory, sigma: int, derivative="spline") -> float:
    """max |chi_tt - sigma (a^2/3) chi_t + (2 kappa / 3 a^2) chi| along ``traj``.

    ``derivative="spline"`` differentiates chi_tau numerically (cubic spline in
    tau), independent of the model's a''; ``"algebraic"`` uses the product rule
    with the trajectory's a'' column.
    """
    k = traj.params["kappa"]
    tau, a, chi, chi_t = _chi_parts(traj)
    if derivative == "spline" and tau.size >= 5:
        chi_tt = CubicSpline(tau, chi_t).derivative()(tau)
    else:
        add = np.asarray(traj["a_ddot"])
        chi_tt = (2 * a * traj["a_dot"] ** 2 + a * a * add) / 3
    res = chi_tt - sigma * a * a / 3 * chi_t + 2 * k / (3 * a * a) * chi
    return float(np.max(np.abs(res)))


def _cumulative(y, x):
    return cumulative_simpson(y, x=x, initial=0.0)


def integral_identity_residual(traj: Trajectory, kappa=None, sigma: int | None = None) -> tuple[float, dict]:
    """Integrating-factor identities for the chi equation, evaluated by quadrature.

    With A(tau) = int_0^tau a^2/3 ds and mu = exp(-sigma A), the chi equation
    integrates to

        mu chi_tau = c0 - (2 kappa/3) int_0^tau mu a ds
        a^3 = a0^3 + int_0^tau mu^-1 [c0 - (2 kappa/3) int_0^alpha mu a ds] d alpha

    Returns the larger of the two residuals, plus a dict with each residual
    and the residuals of the printed forms (unit exponent in the first
    identity, coefficient 2 on a^2 a_tau, plus sign on the kappa integral).
    """
    k = traj.params["kappa"] if kappa is None else _kappa(kappa)
    sigma = calibrate_sigma().sigma if sigma is None else sigma
    if len(traj) < MIN_QUADRATURE_POINTS:
        raise QuadratureResolutionError(
            f"integral identity needs >= {MIN_QUADRATURE_POINTS} trajectory points, got {len(traj)}"
        )
    tau, a, chi, chi_t = _chi_parts(traj)
    tau = tau - tau[0]
    c0 = chi_t[0]
    A = _cumulative(a * a / 3, tau)
    mu = np.exp(-sigma * A)
    I_mu_a = _cumulative(mu * a, tau)
    bracket = c0 - 2 * k / 3 * I_mu_a
    res_first = np.max(np.abs(mu * chi_t - bracket))
    res_cubed = np.max(np.abs(a**3 - a[0] ** 3 - _cumulative(bracket / mu, tau)))

    a_tau = np.asarray(traj["a_dot"]) / 3
    lit_first = chi_t - np.exp(-tau) * (c0 + 2 * k / 3 * _cumulative(chi / (a * a), tau))
    lit_bracket = c0 + 2 * k / 3 * _cumulative(a, tau)
    lit_rate = 2 * a * a * a_tau - np.exp(-A) * lit_bracket
    lit_cubed = a**3 - a[0] ** 3 - _cumulative(np.exp(-A) * lit_bracket, tau)
    detail = {
        "corrected_first_integral": float(res_first),
        "corrected_cubed": float(res_cubed),
        "literal_first_integral": float(np.max(np.abs(lit_first))),
        "literal_weighted_rate": float(np.max(np.abs(lit_rate))),
        "literal_cubed": float(np.max(np.abs(lit_cubed))),
    }
    return float(max(res_first, res_cubed)), detail


def chi_residual(traj: Trajectory) -> FlowDiagnostics:
    """Full diagnostic set for a direct/hubble/chi trajectory."""
    cal = calibrate_sigma()
    k = traj.params["kappa"]
    res_stip = residual_stipulation(traj["a"], traj["a_dot"], traj["a_ddot"], k)
    scale = residual_scale_stipulation(traj["a"], traj["a_dot"], traj["a_ddot"], k)
    literal = {"literal_chi_form": chi_form_residual(traj, PRINTED_SIGMA)}
    if len(traj) >= MIN_QUADRATURE_POINTS:
        res_int, detail = integral_identity_residual(traj)
        literal.update({key: v for key, v in detail.items() if key.startswith("literal")})
    else:
        res_int = math.nan
    c0 = float(traj["a"][0] ** 2 * traj["a_dot"][0])
    return FlowDiagnostics(
        residual_stipulation=float(np.max(np.abs(res_stip) / scale)),
        residual_chi=chi_form_residual(traj, cal.sigma),
        residual_integral=res_int,
        c0=c0,
        sigma=cal.sigma,
        residual_chi_algebraic=chi_form_residual(traj, cal.sigma, derivative="algebraic"),
        literal=literal,
    )

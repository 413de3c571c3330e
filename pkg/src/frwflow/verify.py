"""Identity suites: each check compares a measured residual with a tolerance.

The suites are what ``frwflow verify`` runs.  Every function here is
deterministic (fixed seeds) and the full ``all`` suite takes well under a
minute.  Informational lines carry residuals of the printed (uncorrected)
forms of a few relations; they never fail.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bransdicke as bd
from . import flow, friedmann, geometry, minisuperspace as wdw
from .errors import InadmissibleStateError
from .friedmann import FluidModel
from .odekit import IntegratorSettings, integrate
from .scenario import BDConfig, InitialState, Scenario, run

log = logging.getLogger(__name__)

SUITES = ("geometry", "flow", "friedmann", "bd", "wdw", "odekit")

TIGHT = IntegratorSettings(abs_tol=1e-14, rel_tol=1e-12, max_steps=2_000_000)


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tol: float | None  # None marks an informational line
    note: str = ""

    @property
    def info(self) -> bool:
        return self.tol is None

    @property
    def passed(self) -> bool:
        return self.info or (math.isfinite(self.residual) and self.residual <= self.tol)

    def line(self) -> str:
        if self.info:
            body = f"INFO {self.name}: {self.residual:.3e}"
        else:
            tag = "PASS" if self.passed else "FAIL"
            body = f"{tag} {self.name}: residual {self.residual:.3e} (tol {self.tol:.1e})"
        return f"{body}  {self.note}" if self.note else body


def unit_relative(x, ref) -> float:
    """max |x - ref| / max(|ref|, 1): relative for large values, absolute near zero."""
    x, ref = np.asarray(x, float), np.asarray(ref, float)
    return float(np.max(np.abs(x - ref) / np.maximum(np.abs(ref), 1.0)))


# ----------------------------------------------------------------- geometry

def random_geometry_points(n=200, seed=1):
    """Random admissible (state, kappa, point) triples."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        k = float(rng.choice([-1.0, 0.0, 1.0]))
        st = geometry.ScaleState(
            float(rng.uniform(-1, 1)), float(rng.uniform(0.5, 5.0)), float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2))
        )
        r_max = 0.9 if k > 0 else 2.0
        p = geometry.SpacePoint(float(rng.uniform(0.1, r_max)), float(rng.uniform(0.3, math.pi - 0.3)), float(rng.uniform(0, 2 * math.pi)))
        out.append((st, k, p))
    return out


def curvature_oracle_ratio(st, k, p) -> float:
    """Worst |closed - numeric| / max(1e-5, 1e-4 |closed|) over connection, Ricci and R."""
    x = np.array([st.t, p.r, p.theta, p.phi])
    num = geometry.numeric_curvature_oracle(geometry.frw_metric(st, k), x)
    pairs = [
        (geometry.christoffels(st, k, p).christoffel, num.christoffel),
        (geometry.ricci_components(st, k, p).ricci, num.ricci),
        (np.array(geometry.ricci_scalar_4(st, k).ricci_scalar_4), np.array(num.ricci_scalar_4)),
    ]
    worst = 0.0
    for closed, numeric in pairs:
        tol = np.maximum(1e-5, 1e-4 * np.abs(closed))
        worst = max(worst, float(np.max(np.abs(closed - numeric) / tol)))
    return worst


def suite_geometry(scale=1.0) -> list[Check]:
    pts = random_geometry_points()
    ratio = max(curvature_oracle_ratio(*q) for q in pts)
    decomp = 0.0
    intrinsic = 0.0
    for st, k, p in pts:
        s = geometry.ricci_scalar_4(st, k)
        decomp = max(decomp, abs(s.ricci_scalar_4 - (s.spatial_scalar_split + 3 * st.a_ddot / st.a)) / max(1.0, abs(s.ricci_scalar_4)))
    for st, k, p in pts[:40]:
        num = geometry.numeric_curvature_oracle(geometry.spatial_metric(k, st.a), np.array([p.r, p.theta, p.phi]))
        exact = geometry.ricci_scalar_4(st, k).spatial_scalar_intrinsic
        intrinsic = max(intrinsic, abs(num.ricci_scalar_4 - exact) / max(1e-5, 1e-4 * abs(exact)))
    return [
        Check("curvature closed form vs finite-difference oracle, worst error/tolerance over 200 points", ratio, 1.0 * scale),
        Check("4R = 3R + 3a''/a decomposition", decomp, 1e-12 * scale),
        Check("slice scalar curvature 6 kappa/a^2 vs oracle, worst error/tolerance", intrinsic, 1.0 * scale),
    ]


# ---------------------------------------------------------------------- flow

def flow_scenario(kappa, kind="direct", a0=1.0, a_dot0=0.2, T=1.0, settings=None, sigma=None, n_points=201) -> Scenario:
    return Scenario(
        "flow",
        kappa=float(kappa),
        span=(0.0, float(T)),
        initial=InitialState(a=a0, a_dot=a_dot0),
        formulation=flow.FlowFormulation(kind, sigma),
        settings=settings or IntegratorSettings(),
        n_points=n_points,
    )


def intrinsic_errors(a0=1.0, T=0.2, settings=TIGHT):
    """Relative error against sqrt(a0^2 - 4 kappa t) for each kappa, and the kappa=1 crunch time error."""
    errs = {}
    for k in (-1.0, 0.0, 1.0):
        tr = run(flow_scenario(k, "intrinsic", a0=a0, a_dot0=None, T=T, settings=settings))
        errs[k] = float(np.max(np.abs(tr["a"] / tr["a_exact"] - 1)))
    crunch = run(flow_scenario(1.0, "intrinsic", a0=a0, a_dot0=None, T=a0 * a0, settings=settings))
    ev = crunch.terminal_event
    t_err = abs(ev.t_event - a0 * a0 / 4) if ev is not None and ev.kind == "singularity-floor" else math.inf
    return errs, t_err, crunch


def formulation_gaps(kappa, settings=None, a0=2.0, a_dot0=0.2, T=1.0):
    """(direct-vs-hubble gap, direct-vs-chi gap, diagnostics of the direct run).

    The default start keeps the closed case away from its crunch over T, so
    all three runs cover the same grid.
    """
    settings = settings or IntegratorSettings(abs_tol=1e-12, rel_tol=1e-11)
    ref, hub, chi = (
        run(flow_scenario(kappa, kind, a0=a0, a_dot0=a_dot0, T=T, settings=settings)) for kind in ("direct", "hubble", "chi")
    )
    gap_h = max(unit_relative(hub["a"], ref["a"]), unit_relative(hub["a_dot"], ref["a_dot"]))
    gap_c = max(unit_relative(chi["a"], ref["a"]), unit_relative(chi["a_dot"], ref["a_dot"]))
    return gap_h, gap_c, flow.chi_residual(ref)


def suite_flow(scale=1.0) -> list[Check]:
    cal = flow.calibrate_sigma()
    checks = [
        Check("sigma calibration: calibrated-sign residual", cal.residuals[cal.sigma], 1e-12 * scale, cal.report()),
        Check("printed Hubble-form sign residual", cal.residuals[cal.printed_sigma], None,
              "consistent" if cal.printed_consistent else "printed sign does not reproduce the direct equation"),
    ]
    errs, t_err, _ = intrinsic_errors()
    checks.append(Check("intrinsic flow vs sqrt(a0^2 - 4 kappa t), relative", max(errs.values()), 1e-9 * scale))
    checks.append(Check("kappa=1 crunch time vs a0^2/4", t_err, 1e-8 * scale))
    literal = {}
    for k in (-1.0, 0.0, 1.0):
        gap_h, gap_c, diag = formulation_gaps(k)
        checks += [
            Check(f"direct vs Hubble form (kappa={k:+g})", gap_h, 1e-6 * scale),
            Check(f"direct vs chi form (kappa={k:+g})", gap_c, 1e-6 * scale),
            Check(f"chi-form equation residual (kappa={k:+g})", diag.residual_chi, 1e-6 * scale),
            Check(f"integrating-factor identities (kappa={k:+g})", diag.residual_integral, 1e-5 * scale),
        ]
        for key, v in diag.literal.items():
            literal[key] = max(literal.get(key, 0.0), v)
    for key, v in sorted(literal.items()):
        checks.append(Check(f"printed form {key.removeprefix('literal_').replace('_', ' ')} residual", v, None))
    return checks


# ----------------------------------------------------------------- friedmann

def friedmann_scenario(fluids, kappa=0.0, Lambda=0.0, T=100.0, a0=1.0, settings=None, density_law="continuity", H=None):
    return Scenario(
        "friedmann",
        kappa=float(kappa),
        span=(0.0, float(T)),
        fluids=tuple(fluids),
        Lambda=Lambda,
        initial=InitialState(a=a0, a_dot=None if H is None else H * a0),
        settings=settings or IntegratorSettings(),
        density_law=density_law,
    )


DRIFT_CASES = (
    ((FluidModel(0.0, 1.0),), 0.0, 0.0),
    ((FluidModel(1 / 3, 1.0),), 0.0, 0.0),
    ((FluidModel(0.0, 1.0),), 1.0, 0.0),
    ((FluidModel(0.0, 1.0), FluidModel(1 / 3, 0.5)), -1.0, 0.1),
)


def random_chain_states(n=200, seed=2, G=1.0):
    """Random (a, rho, P, kappa) with H^2 >= 0 under Lambda = 0."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        a = rng.uniform(0.2, 5.0)
        rho = rng.uniform(0.0, 5.0)
        P = rng.uniform(-1.0, 1.0) * rho
        k = float(rng.choice([-1.0, 0.0, 1.0]))
        if friedmann.friedmann_h_squared(a, rho, k, 0.0, G) >= 0:
            out.append((a, rho, P, k))
    return out


def suite_friedmann(scale=1.0) -> list[Check]:
    checks = []
    cons = 0.0
    for fluids, k, lam in DRIFT_CASES:
        tr = run(friedmann_scenario(fluids, k, lam, T=20.0, settings=IntegratorSettings(abs_tol=1e-14, rel_tol=1e-11)))
        cons = max(cons, tr.max_abs("identity_residual"))
    checks.append(Check("rho a^{3(1+w)} conservation, relative", cons, 1e-8 * scale))
    drift = 0.0
    for fluids, k, lam in DRIFT_CASES:
        tr = run(friedmann_scenario(fluids, k, lam))
        drift = max(drift, tr.max_abs("constraint_residual"))
    checks.append(Check("H^2 first-integral drift over T=100", drift, 1e-6 * scale))
    ds = 0.0
    for kk in (-1.0, 0.0, 1.0):
        for om in (0.5, 1.0, 2.0):
            for t in np.linspace(0.1, 3.0, 12):
                p = friedmann.desitter_solution(kk, om, float(t))
                r1, r2 = friedmann.desitter_residuals(kk, om, float(t))
                ds = max(ds, abs(r1) / max(1.0, 3 * om * om), abs(r2) / max(1.0, 3 * om * om))
    checks.append(Check("de Sitter branches satisfy the vacuum equations", ds, 1e-12 * scale))
    dust = run(friedmann_scenario((FluidModel(0.0, 1.0),), T=100.0))
    checks.append(Check("flat dust vs a ~ t^(2/3), relative", float(np.max(np.abs(dust["a"] / dust["a_exact"] - 1))), 1e-6 * scale))
    comb = rate = 0.0
    inv = 0.0
    sign_bad = 0
    for a, rho, P, k in random_chain_states():
        c = friedmann.coupling_chain(a, rho, P, k)
        comb = max(comb, abs(c.friedmann_combination) / max(1.0, rho, 1 / a**2))
        rate = max(rate, abs(c.flow_rate) / max(1.0, rho))
        # flow-implied d(a^2)/dt at the same (rho, P) for each curvature sign
        chain_vals = [
            friedmann.coupling_chain(a, rho, P, kk).flow_rate + friedmann.coupled_flow_rate(rho, P) for kk in (-1.0, 0.0, 1.0)
        ]
        inv = max(inv, (max(chain_vals) - min(chain_vals)) / max(1.0, rho))
        d = chain_vals[1]
        if P != rho and np.sign(d) != np.sign(P - rho):
            sign_bad += 1
    checks += [
        Check("Friedmann combination 3a''/a + 6H^2 residual", comb, 1e-8 * scale),
        Check("flow-implied d(a^2)/dt vs 8 pi G (P - rho)", rate, 1e-8 * scale),
        Check("d(a^2)/dt invariant under kappa in {-1,0,1}", inv, 1e-8 * scale),
        Check("states where sign d(a^2)/dt != sign(P - rho)", float(sign_bad), 0.0),
    ]
    return checks


# ----------------------------------------------------------------------- bd

def bd_scenario(kappa, matter="dust", w_bd=10.0, T=20.0, settings=None, a0=2.0) -> Scenario:
    common = dict(kappa=float(kappa), span=(0.0, float(T)), settings=settings or IntegratorSettings(max_steps=200_000))
    if matter == "inflaton":
        return Scenario(
            "bransdicke",
            initial=InitialState(a=a0, phi=1.0, phi_dot=0.0, psi=0.5, psi_dot=0.2),
            brans_dicke=BDConfig(w_bd, matter="inflaton", U=(0.3, 0.0, 0.5), solve_for="H"),
            **common,
        )
    w = {"dust": 0.0, "radiation": 1 / 3}[matter]
    return Scenario(
        "bransdicke",
        fluids=(FluidModel(w, 1.0),),
        initial=InitialState(a=a0, H=1.0, phi=1.0, phi_dot=0.1),
        brans_dicke=BDConfig(w_bd, solve_for="rho"),
        **common,
    )


def random_bd_states(n=200, seed=3, inflaton=False, on_constraint=False):
    """Random (state, params, kappa) triples.

    With ``on_constraint`` H is re-solved from the first integral (draws
    without a real root are skipped), which the two-way Ricci scalar needs.
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        V = tuple(rng.uniform(-1, 1, 3))
        matter = bd.InflatonModel(tuple(rng.uniform(0, 1, 3))) if inflaton else FluidModel(float(rng.uniform(-0.5, 1)), 1.0)
        w = float(rng.uniform(-1.4, 50))
        params = bd.BDParams(w, V, matter)
        st = bd.BDState(
            0.0, float(rng.uniform(0.3, 3)), float(rng.uniform(-2, 2)), float(rng.uniform(0.3, 3)), float(rng.uniform(-1, 1)),
            float(rng.uniform(0, 3)),
            float(rng.uniform(-1, 1)) if inflaton else None,
            float(rng.uniform(-1, 1)) if inflaton else None,
        )
        k = float(rng.choice([-1.0, 0.0, 1.0]))
        if on_constraint:
            try:
                st = bd.complete_initial_data(st, params, k, "H", int(rng.choice([-1, 1])))
            except InadmissibleStateError:
                continue
        out.append((st, params, k))
    return out


def gr_limit_gaps(ws=(1e3, 1e4, 1e6), T=5.0):
    """Max relative (a, H) gap between Brans-Dicke (phi0 = 1/G, phi'0 = 0) and Friedmann dust."""
    st = IntegratorSettings(abs_tol=1e-12, rel_tol=1e-10, max_steps=200_000)
    fr = run(friedmann_scenario((FluidModel(0.0, 1.0),), T=T, settings=st))
    gaps = []
    for w in ws:
        b = run(
            Scenario(
                "bransdicke", span=(0.0, T), fluids=(FluidModel(0.0, 1.0),), initial=InitialState(a=1.0, phi=1.0),
                brans_dicke=BDConfig(w, solve_for="H"), settings=st,
            )
        )
        gaps.append(max(float(np.max(np.abs(b["a"] / fr["a"] - 1))), float(np.max(np.abs(b["H"] / fr["H"] - 1)))))
    return gaps


def bd_triangle_residual(states) -> float:
    worst = 0.0
    for st, params, k in states:
        kin = bd.box_phi_kinematic(bd.phi_ddot(st, params), st.H, st.phi_dot)
        dyn = bd.box_phi_dynamic(st, params)
        worst = max(worst, abs(kin - dyn) / max(1.0, abs(dyn)))
    return worst


def suite_bd(scale=1.0) -> list[Check]:
    checks = []
    drift = 0.0
    ident = 0.0
    for k in (-1.0, 0.0, 1.0):
        for m in ("dust", "radiation", "inflaton"):
            tr = run(bd_scenario(k, m))
            drift = max(drift, tr.max_abs("constraint_residual"))
            if m == "inflaton":
                ident = max(ident, tr.max_abs("identity_residual"))
    checks.append(Check("first-integral drift over T=20 (dust, radiation, inflaton; kappa -1,0,1)", drift, 1e-6 * scale))
    checks.append(Check("box phi kinematic vs dynamic (random states)", bd_triangle_residual(random_bd_states()), 1e-12 * scale))
    checks.append(Check("inflaton: carried rho vs psi'^2/2 + U along trajectories", ident, 1e-8 * scale))
    kg = max(
        abs(bd.inflaton_conservation_residual(st, p)) / max(1.0, abs(st.H * st.psi_dot**2))
        for st, p, _ in random_bd_states(inflaton=True)
    )
    checks.append(Check("inflaton: continuity equivalent to Klein-Gordon (random states)", kg, 1e-12 * scale))
    ricci = 0.0
    for st, p, k in random_bd_states(on_constraint=True):
        r = bd.bd_ricci_scalar(st, p, k)
        ricci = max(ricci, abs(r.difference) / max(1.0, abs(r.from_geometry)))
    checks.append(Check("Ricci scalar: trace form vs 6[H' + 2H^2 + kappa/a^2]", ricci, 1e-10 * scale))
    # de Sitter: V = lam phi^2, rho = 0, phi constant => H^2 = lam phi / 6, R = 12 H^2
    ds = 0.0
    for lam, phi in ((0.6, 1.0), (1.5, 2.0), (0.1, 0.7)):
        params = bd.BDParams(5.0, (0.0, 0.0, lam))
        H = math.sqrt(lam * phi / 6)
        st = bd.BDState(0.0, 1.0, H, phi, 0.0, 0.0)
        r = bd.bd_ricci_scalar(st, params, 0.0)
        ds = max(ds, abs(r.from_geometry - 12 * H * H), abs(r.from_trace - 12 * H * H), abs(bd.bd_constraint_residual(st, params)))
    checks.append(Check("de Sitter with V = lam phi^2: R = 12 H^2 both ways", ds, 1e-12 * scale))
    ws = (1e3, 1e4, 1e6)
    gaps = gr_limit_gaps(ws)
    # reduction factor per decade of w between consecutive sample couplings
    ratios = [(gaps[i] / gaps[i + 1]) ** (1 / math.log10(ws[i + 1] / ws[i])) for i in range(len(gaps) - 1)]
    worst_ratio = min(ratios)
    checks.append(Check("GR limit: gap at w=1e6 vs Friedmann", gaps[-1], 1e-3 * scale, f"gaps {['%.2e' % g for g in gaps]}"))
    checks.append(Check("GR limit: 5 / (gap reduction per decade of w)", 5.0 / worst_ratio if worst_ratio > 0 else math.inf, 1.0 * scale))
    # printed Hubble-equation denominator, evaluated on a state with a nonzero potential term
    st, p, k = random_bd_states(1, seed=7)[0]
    literal = abs(bd.hubble_dot(st, p, k, literal=True) - bd.hubble_dot(st, p, k))
    checks.append(Check("printed Hubble-equation denominator: H' shift on a sample state", literal, None))
    return checks


# ----------------------------------------------------------------------- wdw

def random_waves(n=6, seed=4):
    rng = np.random.default_rng(seed)
    waves = []
    for _ in range(n):
        waves.append(("gaussian", wdw.gaussian_wave(*rng.uniform(0.3, 2.0, 2), *rng.uniform(-1, 1, 2))))
        nx, nphi = (int(v) for v in rng.integers(0, 5, 2))
        waves.append(("polynomial", wdw.monomial_wave(nx, nphi, float(rng.uniform(0.5, 2)))))
    return waves


def suite_wdw(scale=1.0) -> list[Check]:
    params = wdw.WDWParams(hbar=1.0, m=0.7, Lambda=0.4)
    analytic = {"gaussian": 0.0, "polynomial": 0.0}
    numeric = 0.0
    n_pts = 0
    for kind, w in random_waves():
        rep = wdw.change_of_variables_check(w, params)
        analytic[kind] = max(analytic[kind], rep.max_relative_deviation)
        numeric = max(numeric, wdw.change_of_variables_check(w.numeric(), params).max_relative_deviation)
        n_pts = rep.n_points
    checks = [
        Check(f"operator equivalence under alpha = log a, Gaussian waves ({n_pts} points each)", analytic["gaussian"], 1e-8 * scale),
        Check(f"operator equivalence under alpha = log a, polynomial waves ({n_pts} points each)", analytic["polynomial"], 1e-8 * scale),
        Check("operator equivalence with finite-difference derivatives", numeric, 1e-4 * scale),
    ]
    g1, g2 = wdw.gaussian_wave(1, 1), wdw.monomial_wave(2, 1)
    combo = g1.scaled_sum(1.7, g2, -0.4)
    lin = 0.0
    for a in (0.6, 1.0, 1.7):
        for phi in (-0.5, 0.3):
            lhs = wdw.apply_wdw_a(combo, a, phi, params)
            rhs = 1.7 * wdw.apply_wdw_a(g1, a, phi, params) - 0.4 * wdw.apply_wdw_a(g2, a, phi, params)
            lin = max(lin, abs(lhs - rhs) / max(1.0, abs(lhs)))
    checks.append(Check("linearity (superposition)", lin, 1e-12 * scale))
    p0 = wdw.WDWParams()
    even = wdw.gaussian_wave(1.0, 0.8, 0.2, 0.0)
    sym = max(
        abs(wdw.apply_wdw_alpha(even, al, ph, p0) - wdw.apply_wdw_alpha(even, al, -ph, p0))
        for al in (-0.5, 0.0, 0.4) for ph in (0.2, 0.9)
    )
    checks.append(Check("phi -> -phi symmetry for even waves (m = Lambda = 0)", sym, 1e-12 * scale))
    return checks


# -------------------------------------------------------------------- odekit

def rk4_errors(hs=(0.1, 0.05, 0.025, 0.0125)):
    errs = []
    for h in hs:
        st = IntegratorSettings(method="rk4", h_init=h, h_min=h, h_max=h)
        sol = integrate(lambda t, y: -y, [1.0], (0.0, 1.0), st)
        errs.append(abs(sol.y[-1, 0] - math.exp(-1.0)))
    return errs


def suite_odekit(scale=1.0) -> list[Check]:
    sol = integrate(lambda t, y: -y, [1.0], (0.0, 1.0), IntegratorSettings())
    errs = rk4_errors()
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    return [
        Check("adaptive y' = -y, |y(1) - e^-1|", abs(sol.y[-1, 0] - math.exp(-1)), 1e-9 * scale),
        Check("RK4 step halving: 16 / (worst error ratio)", 16.0 / min(ratios), 1.0 * scale, f"ratios {['%.2f' % r for r in ratios]}"),
    ]


SUITE_FUNCS: dict[str, Callable[..., list[Check]]] = {
    "geometry": suite_geometry,
    "flow": suite_flow,
    "friedmann": suite_friedmann,
    "bd": suite_bd,
    "wdw": suite_wdw,
    "odekit": suite_odekit,
}


def run_suite(name: str, tol_scale: float = 1.0) -> list[Check]:
    names = SUITES if name == "all" else (name,)
    out = []
    for n in names:
        if n not in SUITE_FUNCS:
            raise KeyError(n)
        log.info("running suite %s", n)
        out.extend(Check(f"[{n}] {c.name}", c.residual, c.tol, c.note) for c in SUITE_FUNCS[n](tol_scale))
    return out

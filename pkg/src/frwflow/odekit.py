"""Explicit Runge-Kutta integration with step control, dense output and events.

Two methods are provided:

* ``"dopri5"`` -- Dormand-Prince 5(4) embedded pair with a PI step-size
  controller and its native fourth-order continuous extension.
* ``"rk4"`` -- classical fixed-step fourth-order Runge-Kutta; the step is
  ``IntegratorSettings.h_init``.

Events are scalar functions ``g(t, y)``.  A sign change of ``g`` over an
accepted step is bracketed by bisection, re-stepping from the start of the
step with shortened single steps (no polynomial root finding), until the
bracket is narrower than ``event_tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import IntegrationBudgetError

EVENT_KINDS = ("singularity-floor", "ceiling", "turning-point", "divergence", "step-underflow")

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# fifth-order solution minus embedded fourth-order one, FSAL stage included
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# continuous extension: y(t + s*h) = y + h * K.T @ (_P @ [s, s^2, s^3, s^4])
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass(frozen=True)
class IntegratorSettings:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    h_init: float = 1e-4
    h_min: float = 1e-14
    h_max: float = 1.0
    max_steps: int = 1_000_000
    method: str = "dopri5"
    event_tol: float = 1e-10

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if not (0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError("need 0 < h_min <= h_init <= h_max")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.method not in ("dopri5", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.event_tol > 0:
            raise ValueError("event_tol must be positive")

    def scaled(self, factor):
        """Copy with both tolerances multiplied by ``factor``."""
        return IntegratorSettings(
            abs_tol=self.abs_tol * factor,
            rel_tol=self.rel_tol * factor,
            h_init=self.h_init,
            h_min=self.h_min,
            h_max=self.h_max,
            max_steps=self.max_steps,
            method=self.method,
            event_tol=self.event_tol,
        )


@dataclass(frozen=True)
class EventSpec:
    """Scalar event function; ``direction`` -1 fires only on falling zero crossings."""

    kind: str
    fn: Callable[[float, np.ndarray], float]
    terminal: bool = True
    direction: int = 0

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")


@dataclass(frozen=True)
class Event:
    kind: str
    t_event: float
    state_at_event: np.ndarray
    bracket: tuple[float, float]
    terminal: bool = True

    def to_dict(self):
        return {
            "kind": self.kind,
            "t_event": self.t_event,
            "bracket": list(self.bracket),
            "terminal": self.terminal,
            "state": [float(v) for v in self.state_at_event],
        }


@dataclass(frozen=True)
class OdeSolution:
    t: np.ndarray
    y: np.ndarray  # shape (len(t), dim)
    events: tuple[Event, ...] = ()
    n_accepted: int = 0
    n_rejected: int = 0
    mesh: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def terminated(self):
        return any(ev.terminal for ev in self.events)

    @property
    def t_final(self):
        return float(self.t[-1])


def _dopri_step(rhs, t, y, f0, h):
    """One Dormand-Prince step; returns (y_new, f_new, K, err)."""
    K = np.empty((7, y.size))
    K[0] = f0
    for i in range(1, 6):
        dy = h * (np.asarray(_A[i]) @ K[:i])
        K[i] = rhs(t + _C[i] * h, y + dy)
    y_new = y + h * (_B @ K[:6])
    K[6] = rhs(t + h, y_new)
    err = h * (_E @ K)
    return y_new, K[6], K, err


def _rk4_step(rhs, t, y, f0, h):
    k1 = f0
    k2 = rhs(t + h / 2, y + h / 2 * k1)
    k3 = rhs(t + h / 2, y + h / 2 * k2)
    k4 = rhs(t + h, y + h * k3)
    y_new = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y_new, rhs(t + h, y_new)


def _dense(y0, K, h, s):
    powers = np.array([s, s * s, s**3, s**4])
    return y0 + h * (K.T @ (_P @ powers))


def _error_norm(err, y0, y1, settings):
    scale = settings.abs_tol + settings.rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _finite(y):
    return bool(np.all(np.isfinite(y)))


def _crossed(spec, g0, g1):
    """True if the event fires between values g0 -> g1 (g1 may be nan)."""
    if not math.isfinite(g1):
        return True
    if g0 == 0.0:
        return False
    if (g0 > 0) == (g1 > 0) and g1 != 0.0:
        return False
    rising = g1 >= g0
    if spec.direction > 0 and not rising:
        return False
    if spec.direction < 0 and rising:
        return False
    return True


def _safe_eval(spec, t, y):
    if not _finite(y):
        return math.nan
    return float(spec.fn(t, y))


def _imminent_event(events, t, y, f, settings):
    """Terminal event whose linear extrapolation crosses within ``event_tol``.

    Used when the step size has collapsed: the remaining distance to the
    event is then below what time stepping can resolve.
    """
    eta = settings.h_min
    for ev in events:
        if not ev.terminal:
            continue
        g0 = _safe_eval(ev, t, y)
        g1 = _safe_eval(ev, t + eta, y + eta * f)
        if not (math.isfinite(g0) and math.isfinite(g1)) or g1 == g0:
            continue
        slope = (g1 - g0) / eta
        dt = -g0 / slope
        if 0 <= dt <= settings.event_tol and _crossed(ev, g0, -g0):
            return ev.kind, (t, t + dt)
    return None


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: Sequence[float],
    span: tuple[float, float],
    settings: IntegratorSettings | None = None,
    events: Sequence[EventSpec] = (),
    t_eval: Sequence[float] | None = None,
) -> OdeSolution:
    """Integrate ``y' = rhs(t, y)`` over ``span``.

    Output rows are the points of ``t_eval`` reached before termination (or
    every accepted step when ``t_eval`` is None), followed by the state at a
    terminal event if one occurred.  A zero-length span returns the initial
    state as a single row.
    """
    settings = settings or IntegratorSettings()
    t0, t1 = float(span[0]), float(span[1])
    if t1 < t0:
        raise ValueError("span must satisfy t0 <= t1")
    y = np.array(y0, dtype=float)
    f = np.asarray(rhs(t0, y), dtype=float)
    if not (_finite(y) and _finite(f)):
        raise ValueError("rhs or initial state not finite at t0")

    if t_eval is not None:
        grid = np.asarray(t_eval, dtype=float)
        if grid.size and (np.any(np.diff(grid) < 0) or grid[0] < t0 or grid[-1] > t1):
            raise ValueError("t_eval must be sorted and inside span")
    else:
        grid = None

    out_t: list[float] = []
    out_y: list[np.ndarray] = []
    gi = 0
    if grid is None:
        out_t.append(t0)
        out_y.append(y.copy())
    else:
        while gi < grid.size and grid[gi] == t0:
            out_t.append(t0)
            out_y.append(y.copy())
            gi += 1

    if t1 == t0:
        if not out_t:
            out_t.append(t0)
            out_y.append(y.copy())
        return OdeSolution(np.array(out_t), np.array(out_y), mesh=np.array([t0]))

    adaptive = settings.method == "dopri5"
    h = min(settings.h_init, settings.h_max, t1 - t0)
    t = t0
    g_prev = [_safe_eval(ev, t, y) for ev in events]
    found: list[Event] = []
    mesh = [t0]
    n_acc = n_rej = 0
    err_prev = 1.0
    pending = None  # event index a rejected trial step appeared to cross
    pending_nonfinite = False

    def single_step(tt, yy, ff, hh):
        if adaptive:
            return _dopri_step(rhs, tt, yy, ff, hh)[0]
        return _rk4_step(rhs, tt, yy, ff, hh)[0]

    while t < t1:
        if n_acc + n_rej >= settings.max_steps:
            raise IntegrationBudgetError(
                f"max_steps={settings.max_steps} exceeded at t={t!r}"
            )
        h = min(h, t1 - t)
        t_new = t + h if t + h < t1 else t1
        if t_new == t or h < settings.h_min and t_new != t1:
            kind = "step-underflow"
            bracket = (t, t + h)
            imminent = _imminent_event(events, t, y, f, settings)
            if pending is not None:
                kind = events[pending].kind
            elif imminent is not None:
                kind, bracket = imminent
            elif pending_nonfinite:
                kind = "divergence"
            ev = Event(kind, 0.5 * (bracket[0] + bracket[1]), y.copy(), bracket)
            found.append(ev)
            out_t.append(t)
            out_y.append(y.copy())
            break

        if adaptive:
            with np.errstate(all="ignore"):
                y_new, f_new, K, err = _dopri_step(rhs, t, y, f, t_new - t)
            ok = _finite(y_new) and _finite(f_new) and _finite(err)
            en = _error_norm(err, y, y_new, settings) if ok else math.inf
            if not ok or en > 1.0:
                n_rej += 1
                pending_nonfinite = not ok
                pending = None
                for k, ev in enumerate(events):
                    if ev.terminal and _crossed(ev, g_prev[k], _safe_eval(ev, t_new, y_new)):
                        pending = k
                        break
                fac = MIN_FACTOR if not ok else max(MIN_FACTOR, SAFETY * en ** (-1 / 5))
                h = (t_new - t) * fac
                continue
        else:
            with np.errstate(all="ignore"):
                y_new, f_new = _rk4_step(rhs, t, y, f, t_new - t)
            K = None
            if not (_finite(y_new) and _finite(f_new)):
                ev = Event("divergence", t_new, y.copy(), (t, t_new))
                found.append(ev)
                out_t.append(t)
                out_y.append(y.copy())
                break
            en = 1.0

        pending = None
        pending_nonfinite = False
        hstep = t_new - t

        # event detection on the accepted step
        hit = None
        for k, ev in enumerate(events):
            g1 = _safe_eval(ev, t_new, y_new)
            if _crossed(ev, g_prev[k], g1):
                lo, hi = 0.0, hstep
                while hi - lo > settings.event_tol:
                    mid = 0.5 * (lo + hi)
                    with np.errstate(all="ignore"):
                        ym = single_step(t, y, f, mid)
                    if _crossed(ev, g_prev[k], _safe_eval(ev, t + mid, ym)):
                        hi = mid
                    else:
                        lo = mid
                    if mid == lo and mid == hi:
                        break
                with np.errstate(all="ignore"):
                    y_lo = single_step(t, y, f, lo) if lo > 0 else y.copy()
                cand = Event(ev.kind, t + 0.5 * (lo + hi), y_lo, (t + lo, t + hi), ev.terminal)
                if hit is None or cand.t_event < hit[1].t_event:
                    hit = (k, cand)
        if hit is not None and hit[1].terminal:
            ev = hit[1]
            t_stop = ev.bracket[0]
            if grid is not None:
                while gi < grid.size and grid[gi] <= t_stop:
                    s = (grid[gi] - t) / hstep
                    yg = _dense(y, K, hstep, s) if adaptive else single_step(t, y, f, grid[gi] - t)
                    out_t.append(float(grid[gi]))
                    out_y.append(yg)
                    gi += 1
            found.append(ev)
            if not out_t or out_t[-1] < t_stop:
                out_t.append(t_stop)
                out_y.append(ev.state_at_event.copy())
            mesh.append(t_stop)
            n_acc += 1
            break
        if hit is not None:
            found.append(hit[1])
        for k, evs in enumerate(events):
            g_prev[k] = _safe_eval(evs, t_new, y_new)

        if grid is not None:
            while gi < grid.size and grid[gi] <= t_new:
                if grid[gi] == t_new:
                    yg = y_new.copy()
                elif adaptive:
                    yg = _dense(y, K, hstep, (grid[gi] - t) / hstep)
                else:
                    yg = single_step(t, y, f, grid[gi] - t)
                out_t.append(float(grid[gi]))
                out_y.append(yg)
                gi += 1
        else:
            out_t.append(t_new)
            out_y.append(y_new.copy())

        t, y, f = t_new, y_new, f_new
        mesh.append(t)
        n_acc += 1
        if adaptive:
            # PI controller (Gustafsson): exponents 0.7/5 and 0.4/5
            en_c = max(en, 1e-10)
            fac = SAFETY * en_c ** (-0.7 / 5) * err_prev ** (0.4 / 5)
            fac = min(MAX_FACTOR, max(MIN_FACTOR, fac))
            err_prev = en_c
            h = min(settings.h_max, hstep * fac)
        else:
            h = settings.h_init

    return OdeSolution(
        t=np.array(out_t),
        y=np.array(out_y).reshape(len(out_t), -1),
        events=tuple(found),
        n_accepted=n_acc,
        n_rejected=n_rej,
        mesh=np.array(mesh),
    )

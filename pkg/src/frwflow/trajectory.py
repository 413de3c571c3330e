"""Trajectory records produced by every model, and their CSV form."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .odekit import Event

# Fixed CSV column order; quantities a model does not produce are left empty.
COLUMNS = (
    "t",
    "a",
    "a_dot",
    "a_ddot",
    "H",
    "rho",
    "P",
    "phi",
    "phi_dot",
    "psi",
    "psi_dot",
    "constraint_residual",
    "identity_residual",
    "a_exact",
)

COLUMN_HELP = {
    "t": "time",
    "a": "scale factor",
    "a_dot": "da/dt",
    "a_ddot": "d2a/dt2 from the model equations",
    "H": "Hubble rate a_dot/a",
    "rho": "total energy density",
    "P": "total pressure",
    "phi": "Brans-Dicke scalar",
    "phi_dot": "d(phi)/dt",
    "psi": "inflaton field",
    "psi_dot": "d(psi)/dt",
    "constraint_residual": "first-integral residual (Friedmann H^2 or Brans-Dicke)",
    "identity_residual": "residual of the model's defining identity on the row",
    "a_exact": "closed-form scale factor where one exists",
}


@dataclass(frozen=True)
class Trajectory:
    model: str
    t: np.ndarray
    columns: dict[str, np.ndarray]
    events: tuple[Event, ...] = ()
    params: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t.setflags(write=False)
        for name, col in self.columns.items():
            if name not in COLUMNS:
                raise KeyError(f"unknown trajectory column {name!r}")
            if col.shape != self.t.shape:
                raise ValueError(f"column {name!r} has shape {col.shape}, expected {self.t.shape}")
            col.setflags(write=False)

    def __getitem__(self, name) -> np.ndarray:
        if name == "t":
            return self.t
        return self.columns[name]

    def __contains__(self, name):
        return name == "t" or name in self.columns

    def __len__(self):
        return self.t.size

    @property
    def terminal_event(self) -> Event | None:
        for ev in self.events:
            if ev.terminal:
                return ev
        return None

    def final_state(self) -> dict:
        return {name: float(self[name][-1]) for name in COLUMNS if name in self}

    def max_abs(self, name) -> float | None:
        if name not in self.columns:
            return None
        return float(np.max(np.abs(self.columns[name])))


def format_number(x) -> str:
    return f"{float(x):.17g}"


def to_csv(traj: Trajectory) -> str:
    buf = io.StringIO(newline="")
    buf.write(",".join(COLUMNS) + "\n")
    cols = [traj[name] if name in traj else None for name in COLUMNS]
    for i in range(len(traj)):
        cells = ["" if c is None else format_number(c[i]) for c in cols]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()

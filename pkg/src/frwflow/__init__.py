"""FRW cosmology toolkit: Ricci-flow scale-factor dynamics, Friedmann and
Brans-Dicke models, curvature oracles and Wheeler-DeWitt operator checks."""

from .errors import (
    ConfigError,
    ConstraintViolation,
    DegenerateMetricError,
    DomainError,
    FRWError,
    InadmissibleStateError,
    IntegrationBudgetError,
    SingularityError,
)
from .odekit import Event, IntegratorSettings, integrate
from .scenario import Scenario, load, loads, run
from .trajectory import COLUMNS, Trajectory, to_csv

__version__ = "0.1.0"

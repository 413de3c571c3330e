"""Minisuperspace Wheeler-DeWitt operators applied pointwise to test waves.

Two forms of the operator on psi(a, phi) are provided:

    (1/2) [ (hbar^2/a^2) d_a(a d_a) - (hbar^2/a^3) d_phi^2
            - a + Lambda a^3/3 + m^2 a^3 phi^2 ] psi

and, in alpha = log a,

    (e^{-3 alpha}/2) [ hbar^2 d_alpha^2 - hbar^2 d_phi^2
                       - e^{4 alpha} + e^{6 alpha} (m^2 phi^2 + Lambda/3) ] psi

Nothing is solved here; the module checks that the two forms agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

FD_STEP = 1e-4


@dataclass(frozen=True)
class WDWParams:
    hbar: float = 1.0
    m: float = 0.0
    Lambda: float = 0.0

    def __post_init__(self):
        if not self.hbar > 0:
            raise DomainError("hbar must be positive")
        if self.m < 0:
            raise DomainError("m must be >= 0")


@dataclass(frozen=True)
class TestWave:
    """psi(x, phi) with partial derivatives in its first argument x and in phi.

    ``x`` is a or alpha depending on the operator.  Missing derivative
    callables fall back to central differences of ``psi`` (``analytic`` is
    then False and results are only good to O(FD_STEP^2)).
    """

    psi: Callable[[float, float], float]
    d_x: Callable | None = None
    d_xx: Callable | None = None
    d_phiphi: Callable | None = None

    __test__ = False  # not a pytest class

    @property
    def analytic(self) -> bool:
        return None not in (self.d_x, self.d_xx, self.d_phiphi)

    def dx(self, x, phi):
        if self.d_x is not None:
            return self.d_x(x, phi)
        h = FD_STEP
        return (self.psi(x + h, phi) - self.psi(x - h, phi)) / (2 * h)

    def dxx(self, x, phi):
        if self.d_xx is not None:
            return self.d_xx(x, phi)
        h = FD_STEP
        return (self.psi(x + h, phi) - 2 * self.psi(x, phi) + self.psi(x - h, phi)) / (h * h)

    def dphiphi(self, x, phi):
        if self.d_phiphi is not None:
            return self.d_phiphi(x, phi)
        h = FD_STEP
        return (self.psi(x, phi + h) - 2 * self.psi(x, phi) + self.psi(x, phi - h)) / (h * h)

    def self_check(self, x, phi) -> float:
        """Largest gap between the stored derivatives and central differences at (x, phi).

        For an analytic wave this is O(FD_STEP^2) times the third/fourth
        derivatives; a large value means a derivative callable is wrong.
        """
        fd = self.numeric()
        return max(
            abs(self.dx(x, phi) - fd.dx(x, phi)),
            abs(self.dxx(x, phi) - fd.dxx(x, phi)),
            abs(self.dphiphi(x, phi) - fd.dphiphi(x, phi)),
        )

    def numeric(self) -> "TestWave":
        """Same wave with derivatives forced to finite differences."""
        return TestWave(self.psi)

    def to_alpha(self) -> "TestWave":
        """Re-express a wave in a as a wave in alpha = log a (chain rule)."""
        src = self

        def psi(al, phi):
            return src.psi(math.exp(al), phi)

        def d_x(al, phi):
            a = math.exp(al)
            return a * src.dx(a, phi)

        def d_xx(al, phi):
            a = math.exp(al)
            return a * src.dx(a, phi) + a * a * src.dxx(a, phi)

        def d_pp(al, phi):
            return src.dphiphi(math.exp(al), phi)

        if not src.analytic:
            return TestWave(psi)
        return TestWave(psi, d_x, d_xx, d_pp)

    def scaled_sum(self, c1, other: "TestWave", c2) -> "TestWave":
        """The wave c1*self + c2*other."""
        def lin(f, g):
            return lambda x, p: c1 * f(x, p) + c2 * g(x, p)

        return TestWave(
            lin(self.psi, other.psi), lin(self.dx, other.dx), lin(self.dxx, other.dxx), lin(self.dphiphi, other.dphiphi)
        )


def gaussian_wave(cx=1.0, cphi=1.0, x0=0.0, phi0=0.0) -> TestWave:
    """exp(-cx (x - x0)^2 - cphi (phi - phi0)^2) with analytic derivatives."""

    def psi(x, p):
        return math.exp(-cx * (x - x0) ** 2 - cphi * (p - phi0) ** 2)

    return TestWave(
        psi,
        lambda x, p: -2 * cx * (x - x0) * psi(x, p),
        lambda x, p: (4 * cx * cx * (x - x0) ** 2 - 2 * cx) * psi(x, p),
        lambda x, p: (4 * cphi * cphi * (p - phi0) ** 2 - 2 * cphi) * psi(x, p),
    )


def monomial_wave(nx: int, nphi: int, coeff=1.0) -> TestWave:
    """coeff * x^nx * phi^nphi."""

    def pw(v, n):
        return v**n if n >= 0 else 0.0

    return TestWave(
        lambda x, p: coeff * pw(x, nx) * pw(p, nphi),
        lambda x, p: coeff * nx * pw(x, nx - 1) * pw(p, nphi),
        lambda x, p: coeff * nx * (nx - 1) * pw(x, nx - 2) * pw(p, nphi),
        lambda x, p: coeff * nphi * (nphi - 1) * pw(x, nx) * pw(p, nphi - 2),
    )


def constant_wave(c=1.0) -> TestWave:
    return TestWave(lambda x, p: c, lambda x, p: 0.0, lambda x, p: 0.0, lambda x, p: 0.0)


def wdw_potential(alpha, phi, params: WDWParams) -> float:
    try:
        return -math.exp(4 * alpha) + math.exp(6 * alpha) * (params.m**2 * phi**2 + params.Lambda / 3)
    except OverflowError:
        raise DomainError(f"wdw_potential overflows at alpha={alpha!r}") from None


def zeroth_order_coefficient_a(a, phi, params: WDWParams) -> float:
    return 0.5 * (-a + params.Lambda * a**3 / 3 + params.m**2 * a**3 * phi**2)


def apply_wdw_a(psi: TestWave, a, phi, params: WDWParams) -> float:
    if not a > 0:
        raise DomainError(f"a must be positive, got {a!r}")
    h2 = params.hbar**2
    # d_a(a d_a psi) = psi_a + a psi_aa
    kinetic = h2 / a**2 * (psi.dx(a, phi) + a * psi.dxx(a, phi)) - h2 / a**3 * psi.dphiphi(a, phi)
    return 0.5 * kinetic + zeroth_order_coefficient_a(a, phi, params) * psi.psi(a, phi)


def apply_wdw_alpha(psi: TestWave, alpha, phi, params: WDWParams) -> float:
    h2 = params.hbar**2
    pref = 0.5 * math.exp(-3 * alpha)
    kinetic = h2 * psi.dxx(alpha, phi) - h2 * psi.dphiphi(alpha, phi)
    return pref * (kinetic + wdw_potential(alpha, phi, params) * psi.psi(alpha, phi))


@dataclass(frozen=True)
class EquivalenceReport:
    max_relative_deviation: float
    n_points: int
    worst_point: tuple[float, float]

    def passed(self, tol) -> bool:
        return self.max_relative_deviation <= tol


def change_of_variables_check(
    psi_a: TestWave,
    params: WDWParams,
    a_range=(0.5, 2.0),
    phi_range=(-1.0, 1.0),
    n=12,
) -> EquivalenceReport:
    """Compare both operator forms on an n x n grid (psi_alpha built by chain rule).

    Deviation is relative to max(|value|, |potential term|, 1e-300) so points
    where the operator output happens to vanish do not blow up the ratio.
    """
    if not a_range[0] > 0:
        raise DomainError("a-box must be bounded away from 0")
    psi_al = psi_a.to_alpha()
    worst, where = 0.0, (math.nan, math.nan)
    for a in np.linspace(*a_range, n):
        for phi in np.linspace(*phi_range, n):
            va = apply_wdw_a(psi_a, a, phi, params)
            vb = apply_wdw_alpha(psi_al, math.log(a), phi, params)
            scale = max(abs(va), abs(zeroth_order_coefficient_a(a, phi, params) * psi_a.psi(a, phi)), 1e-300)
            dev = abs(va - vb) / scale
            if dev > worst:
                worst, where = dev, (float(a), float(phi))
    return EquivalenceReport(float(worst), n * n, where)

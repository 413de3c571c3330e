"""FRW metric, closed-form connection and curvature, and a numerical oracle.

Coordinates are ordered (t, r, theta, phi) = (0, 1, 2, 3) with signature
(-, +, +, +):

    ds^2 = -dt^2 + a(t)^2 [dr^2 / (1 - kappa r^2) + r^2 dOmega^2]
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateMetricError, DomainError, SingularityError


@dataclass(frozen=True)
class SpatialCurvature:
    kappa: float

    def __post_init__(self):
        if not math.isfinite(self.kappa):
            raise DomainError(f"kappa must be finite, got {self.kappa!r}")

    @property
    def sign(self) -> int:
        return (self.kappa > 0) - (self.kappa < 0)


@dataclass(frozen=True)
class ScaleState:
    t: float
    a: float
    a_dot: float
    a_ddot: float | None = None

    def __post_init__(self):
        if not self.a > 0:
            raise SingularityError(f"scale factor must be positive, got a={self.a!r}")

    @property
    def H(self) -> float:
        return self.a_dot / self.a


@dataclass(frozen=True)
class SpacePoint:
    r: float
    theta: float
    phi: float = 0.0

    def check(self, kappa: float) -> None:
        """Reject coordinate singularities and points outside metric regularity."""
        if not self.r > 0:
            raise SingularityError(f"r must be > 0 (got {self.r!r})")
        if not 0 < self.theta < math.pi:
            raise SingularityError(f"theta must lie in (0, pi) (got {self.theta!r})")
        if not 1 - kappa * self.r**2 > 0:
            raise SingularityError(
                f"metric irregular: 1 - kappa r^2 = {1 - kappa * self.r**2!r} <= 0"
            )


@dataclass(frozen=True)
class CurvatureSample:
    christoffel: np.ndarray | None = None  # [lam, mu, nu]
    ricci: np.ndarray | None = None  # (n, n); closed forms are diagonal
    ricci_scalar_4: float | None = None
    spatial_scalar_split: float | None = None
    spatial_scalar_intrinsic: float | None = None

    def nonzero_christoffels(self, atol=0.0):
        """Sparse view ``{(lam, mu, nu): value}`` of the connection table."""
        g = self.christoffel
        return {
            tuple(int(i) for i in idx): float(g[idx])
            for idx in zip(*np.nonzero(np.abs(g) > atol))
        }


def _kappa(kappa) -> float:
    return kappa.kappa if isinstance(kappa, SpatialCurvature) else float(kappa)


def christoffels(state: ScaleState, kappa, p: SpacePoint) -> CurvatureSample:
    k = _kappa(kappa)
    p.check(k)
    a, ad, r, th = state.a, state.a_dot, p.r, p.theta
    q = 1 - k * r * r
    s, c = math.sin(th), math.cos(th)
    G = np.zeros((4, 4, 4))

    def put(lam, mu, nu, val):
        G[lam, mu, nu] = val
        G[lam, nu, mu] = val

    put(0, 1, 1, a * ad / q)
    put(1, 1, 1, k * r / q)
    put(0, 2, 2, a * ad * r * r)
    put(0, 3, 3, a * ad * r * r * s * s)
    put(1, 0, 1, ad / a)
    put(2, 0, 2, ad / a)
    put(3, 0, 3, ad / a)
    put(1, 2, 2, -r * q)
    put(1, 3, 3, -r * q * s * s)
    put(2, 1, 2, 1 / r)
    put(3, 1, 3, 1 / r)
    put(2, 3, 3, -s * c)
    put(3, 2, 3, c / s)
    return CurvatureSample(christoffel=G)


def _require_addot(state):
    if state.a_ddot is None:
        raise DomainError("a_ddot is required for curvature components")


def ricci_components(state: ScaleState, kappa, p: SpacePoint) -> CurvatureSample:
    _require_addot(state)
    k = _kappa(kappa)
    p.check(k)
    a, ad, add = state.a, state.a_dot, state.a_ddot
    r, s = p.r, math.sin(p.theta)
    spatial = a * add + 2 * ad * ad + 2 * k
    diag = [
        -3 * add / a,
        spatial / (1 - k * r * r),
        r * r * spatial,
        r * r * spatial * s * s,
    ]
    return CurvatureSample(ricci=np.diag(diag))


def ricci_scalar_4(state: ScaleState, kappa) -> CurvatureSample:
    """Four-dimensional Ricci scalar together with both three-scalars.

    ``spatial_scalar_split`` is the combination 4R - 3 a''/a (it still
    contains a''); ``spatial_scalar_intrinsic`` is 6 kappa / a^2, the scalar
    curvature of the slice metric gamma_ij scaled by a^2.
    """
    _require_addot(state)
    k = _kappa(kappa)
    a, ad, add = state.a, state.a_dot, state.a_ddot
    r4 = 6 * (add / a + (ad / a) ** 2 + k / a**2)
    return CurvatureSample(
        ricci_scalar_4=r4,
        spatial_scalar_split=3 * add / a + 6 * (ad / a) ** 2 + 6 * k / a**2,
        spatial_scalar_intrinsic=6 * k / a**2,
    )


def frw_metric(state: ScaleState, kappa) -> Callable[[np.ndarray], np.ndarray]:
    """Metric evaluator g(x) for x = (t, r, theta, phi).

    a(t) is the quadratic Taylor profile through ``state``; its first two
    derivatives at ``state.t`` are exact, which is all curvature needs.
    """
    k = _kappa(kappa)
    add = state.a_ddot if state.a_ddot is not None else 0.0

    def metric(x):
        dt = x[0] - state.t
        a = state.a + state.a_dot * dt + 0.5 * add * dt * dt
        r, th = x[1], x[2]
        return np.diag([-1.0, a * a / (1 - k * r * r), a * a * r * r, a * a * r * r * math.sin(th) ** 2])

    return metric


def spatial_metric(kappa, scale: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Slice metric scale^2 * gamma_ij over (r, theta, phi)."""
    k = _kappa(kappa)

    def metric(x):
        r, th = x[0], x[1]
        return scale * scale * np.diag([1 / (1 - k * r * r), r * r, r * r * math.sin(th) ** 2])

    return metric


def _central(f, x, s_, h, order):
    """Central difference of f along coordinate s_ (second or fourth order)."""
    e = np.zeros(x.size)
    e[s_] = h
    if order == 2:
        return (f(x + e) - f(x - e)) / (2 * h)
    return (8 * (f(x + e) - f(x - e)) - (f(x + 2 * e) - f(x - 2 * e))) / (12 * h)


def _metric_derivs(metric, x, h, order=4):
    return np.array([_central(metric, x, s_, h, order) for s_ in range(x.size)])  # [s] = d_s g


def _gamma_from(ginv, dg):
    # Gamma^l_{mn} = 1/2 g^{ls} (d_m g_{sn} + d_n g_{sm} - d_s g_{mn})
    t = np.einsum("msn->smn", dg) + np.einsum("nsm->smn", dg) - dg
    return 0.5 * np.einsum("ls,smn->lmn", ginv, t)


def _inverse(metric, x):
    g = metric(x)
    det = np.linalg.det(g)
    if not np.isfinite(det) or abs(det) < 1e-300:
        raise DegenerateMetricError(f"metric determinant {det!r} at {x!r}")
    return np.linalg.inv(g)


def _christoffel_field(metric, x, h, order=4):
    return _gamma_from(_inverse(metric, x), _metric_derivs(metric, x, h, order))


def numeric_curvature_oracle(
    metric: Callable[[np.ndarray], np.ndarray],
    point,
    step: float = 1e-4,
    ricci_step: float = 1e-3,
    richardson: bool = True,
    order: int = 4,
) -> CurvatureSample:
    """Christoffels and Ricci tensor of ``metric`` at ``point`` by central differences.

    Works in any dimension.  Christoffels use ``step``; the Ricci tensor
    differentiates the Christoffel field with the coarser ``ricci_step``
    (second derivatives lose digits to round-off as the step shrinks).
    Stencils are fourth order by default (``order=2`` gives the plain
    three-point form).  With ``richardson`` the Ricci derivative is also
    extrapolated from ``ricci_step`` and ``ricci_step / 2``.

    Fourth order plus extrapolation is needed near r ~ 0.1, theta ~ 0.3,
    where the inverse metric amplifies component errors in the scalar by
    1/(a r sin theta)^2.
    """
    if not 1e-6 <= step <= 1e-3:
        raise ValueError("step must lie in [1e-6, 1e-3]")
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    x = np.asarray(point, dtype=float)
    n = x.size
    gamma = _christoffel_field(metric, x, step, order)

    def field(xx):
        return _christoffel_field(metric, xx, step, order)

    def dgamma(hh):
        return np.array([_central(field, x, s_, hh, order) for s_ in range(n)])  # [s] = d_s Gamma

    dG = dgamma(ricci_step)
    if richardson:
        w = 2**order
        dG = (w * dgamma(ricci_step / 2) - dG) / (w - 1)

    # R_mn = d_l G^l_mn - d_n G^l_ml + G^l_ls G^s_mn - G^l_ns G^s_ml
    ricci = (
        np.einsum("llmn->mn", dG)
        - np.einsum("nlml->mn", dG)
        + np.einsum("lls,smn->mn", gamma, gamma)
        - np.einsum("lns,sml->mn", gamma, gamma)
    )
    ginv = _inverse(metric, x)
    return CurvatureSample(christoffel=gamma, ricci=ricci, ricci_scalar_4=float(np.einsum("mn,mn->", ginv, ricci)))

"""The perturbed hyperbolic torus map, its Jacobian, and the stable field.

The map scales the expanding eigendirection of the integer matrix
[[2, 1], [1, 1]] by L^2 + beta * k(2 r) near the origin (r the distance to
the origin of the centered representative, k a bump supported on [0, 1]) and
the contracting one by L^{-2} everywhere, with L the golden mean. The bump
argument 2 r puts the support exactly on the inscribed disk of the
fundamental domain, so the perturbation vanishes identically before the
wrap boundary and the induced torus map is C^1 (quartic bump) or C^2
(sextic bump).

The stable line field is reconstructed through the contraction series; the
origin's basin of attraction and its complement are classified by orbit
capture near the fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from ._kernels import BN, LAM, LAM2, LAMI2

BETA_MIN = -LAM2                       # map well-defined for beta above this
BETA_FIELD_MIN = -LAM2 + LAMI2 ** 2    # stable-field regularity window
BETA_ATTRACTIVE_MAX = -LAM2 + 1.0      # origin attractive strictly below this

E_U = np.array([LAM, 1.0]) / BN
E_S = np.array([-1.0, LAM]) / BN

_BUMP_TAGS = {"quartic": _k.BUMP_QUARTIC, "sextic": _k.BUMP_SEXTIC}


class SeriesDiverged(ArithmeticError):
    """The stable-field series failed to settle within series_max_terms."""


@dataclass(frozen=True)
class TorusPoint:
    """A point of the torus, stored as the canonical representative in [0,1)^2."""

    x: float
    y: float

    def __post_init__(self):
        # the % can round up to exactly 1.0 for tiny negative inputs
        object.__setattr__(self, "x", (float(self.x) % 1.0) % 1.0)
        object.__setattr__(self, "y", (float(self.y) % 1.0) % 1.0)

    @property
    def centered(self) -> tuple[float, float]:
        """Representative in [-1/2, 1/2)^2."""
        return _k.wrap_half(self.x), _k.wrap_half(self.y)

    @property
    def r(self) -> float:
        """Distance to the origin of the centered representative."""
        cx, cy = self.centered
        return math.hypot(cx, cy)

    def distance(self, other: "TorusPoint") -> float:
        """Torus distance (shortest representative of the difference)."""
        return math.hypot(_k.wrap_half(self.x - other.x),
                          _k.wrap_half(self.y - other.y))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector in the orthonormal eigenbasis (e_u, e_s)."""

    u: float
    s: float

    @property
    def xy(self) -> np.ndarray:
        return self.u * E_U + self.s * E_S

    @staticmethod
    def from_xy(vx: float, vy: float) -> "TangentVector":
        return TangentVector(u=(LAM * vx + vy) / BN, s=(-vx + LAM * vy) / BN)

    @property
    def norm(self) -> float:
        return math.hypot(self.u, self.s)


@dataclass(frozen=True)
class DfaParams:
    """Parameters of the perturbed map and its stable-field evaluation.

    lam is the fixed eigenvalue constant, stored for reference. sup_b is the
    analytic supremum over the torus of the Jacobian entry b, used for the
    series tail envelope; see its docstring for the closed form.
    """

    beta: float
    bump: str = "quartic"
    lam: float = LAM
    series_tol: float = 1e-8
    series_max_terms: int = 200

    def __post_init__(self):
        if not (BETA_MIN < self.beta <= 0.0):
            raise ValueError(
                f"beta must lie in ({BETA_MIN:.6f}, 0], got {self.beta}")
        if self.bump not in _BUMP_TAGS:
            raise ValueError(f"bump must be one of {sorted(_BUMP_TAGS)}")
        if not self.series_tol > 0.0:
            raise ValueError("series_tol must be positive")
        if self.series_max_terms < 1:
            raise ValueError("series_max_terms must be >= 1")

    @property
    def bump_tag(self) -> int:
        return _BUMP_TAGS[self.bump]

    @property
    def sup_b(self) -> float:
        """Closed-form sup over the torus of the Jacobian entry |b|.

        b = 2 beta k'(rho) u s / r with rho = 2 r and |2 u s| <= r^2, so
        |b| <= |beta| |k'(rho)| r = |beta| rho |k'(rho)| / 2. The quartic
        profile has max rho |k'| = max 4 rho^2 (1 - rho^2) = 1; the sextic
        has max 6 rho^2 (1 - rho^2)^2 = 8/9.
        """
        if self.bump == "sextic":
            return abs(self.beta) * 4.0 / 9.0
        return abs(self.beta) * 0.5

    @property
    def in_field_window(self) -> bool:
        return BETA_FIELD_MIN < self.beta <= 0.0

    @property
    def origin_attractive(self) -> bool:
        return self.beta < BETA_ATTRACTIVE_MAX

    def require_field_window(self):
        if not self.in_field_window:
            raise ValueError(
                f"stable field needs beta in ({BETA_FIELD_MIN:.6f}, 0], "
                f"got {self.beta}")


def bump_values(rho, bump: str = "quartic"):
    """Vectorized bump profile k and derivative k' (for checks and plots)."""
    rho = np.asarray(rho, dtype=np.float64)
    w = np.maximum(1.0 - rho * rho, 0.0)
    if bump == "sextic":
        return w ** 3, -6.0 * rho * w ** 2
    if bump == "quartic":
        return w ** 2, -4.0 * rho * w
    raise ValueError(f"unknown bump {bump!r}")


def apply_f(p: TorusPoint, params: DfaParams) -> TorusPoint:
    """One application of the map, wrapped to [0,1)^2."""
    xn, yn, _, _ = _k.map_uv(p.x, p.y, params.beta, params.bump_tag)
    return TorusPoint(xn, yn)


def iterate(p: TorusPoint, params: DfaParams, n: int) -> TorusPoint:
    """n forward applications."""
    x, y = _k.iterate_map(p.x, p.y, params.beta, params.bump_tag, int(n))
    return TorusPoint(x, y)


def jacobian(p: TorusPoint, params: DfaParams) -> np.ndarray:
    """Jacobian at p in the (e_u, e_s) basis: [[a, b], [0, L^{-2}]].

    Analytic differentiation of the map; agrees with central finite
    differences away from the bump's boundary circle, where the quartic
    profile is only C^1.
    """
    _, _, a, b = _k.map_uv(p.x, p.y, params.beta, params.bump_tag)
    return np.array([[a, b], [0.0, LAMI2]])


def stable_field(p: TorusPoint, params: DfaParams) -> TangentVector:
    """Stable direction v(p) = c e_u + e_s via the contraction series.

    The s-component is exactly 1 by construction. Raises SeriesDiverged when
    the truncation rule cannot certify the tail within series_max_terms.
    """
    params.require_field_window()
    c, st = _k.stable_ucomp(p.x, p.y, params.beta, params.bump_tag,
                            params.series_tol, params.series_max_terms,
                            params.sup_b)
    if st != _k.STATUS_OK:
        raise SeriesDiverged(
            f"series did not settle below {params.series_tol} within "
            f"{params.series_max_terms} terms at ({p.x:.6f}, {p.y:.6f}), "
            f"beta = {params.beta}")
    return TangentVector(u=c, s=1.0)


def contraction_residual(p: TorusPoint, params: DfaParams) -> float:
    """| Jac(p) v(p) - L^{-2} v(f p) | for the stable field (u-component).

    The s-components match identically, so the residual reduces to
    |a c(p) + b - L^{-2} c(f p)|.
    """
    v0 = stable_field(p, params)
    J = jacobian(p, params)
    v1 = stable_field(apply_f(p, params), params)
    return abs(J[0, 0] * v0.u + J[0, 1] * v0.s - LAMI2 * v1.u)


@dataclass(frozen=True)
class BasinResult:
    """Outcome of basin classification for one starting point."""

    attracted: bool
    iterations: int

    @property
    def label(self) -> str:
        return "attracted" if self.attracted else "undecided"


def basin_classify(p: TorusPoint, params: DfaParams, max_iter: int = 300,
                   capture_radius: float = 1e-3) -> BasinResult:
    """Attracted-to-origin vs undecided classification of one orbit.

    Attracted means the orbit enters the capture ball and 20 further
    iterations keep it inside and end strictly closer than the entry
    distance. When the origin is not attracting (beta >= 1 - L^2, which
    includes beta = 0) every point is undecided, the origin included.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if not (0.0 < capture_radius < 0.5):
        raise ValueError("capture_radius must lie in (0, 0.5)")
    code, its = _k.basin_point(p.x, p.y, params.beta, params.bump_tag,
                               int(max_iter), capture_radius)
    return BasinResult(attracted=(code == 1), iterations=int(its))


def basin_grid(params: DfaParams, width: int, height: int,
               max_iter: int = 300, capture_radius: float = 1e-3) -> np.ndarray:
    """Classify the grid {(col/width, row/height)}; 255 attracted, 0 undecided."""
    if width < 1 or height < 1:
        raise ValueError("grid dimensions must be positive")
    img = np.zeros((height, width), dtype=np.uint8)
    _k.basin_grid(width, height, params.beta, params.bump_tag,
                  int(max_iter), capture_radius, img)
    return img


def batch_contraction_residuals(points: np.ndarray, params: DfaParams) -> np.ndarray:
    """Contraction residuals at an (n, 2) array of points."""
    params.require_field_window()
    pts = np.ascontiguousarray(points, dtype=np.float64)
    out = np.empty(pts.shape[0])
    st = _k.contraction_residuals(pts[:, 0].copy(), pts[:, 1].copy(),
                                  params.beta, params.bump_tag,
                                  params.series_tol, params.series_max_terms,
                                  params.sup_b, out)
    if st != _k.STATUS_OK:
        raise SeriesDiverged("series did not settle at some batch point")
    return out

"""Circle dynamics: lifts, Birkhoff sums, rotation numbers, Denjoy-Koksma.

A circle map is carried around as a lift F: R -> R with F(x+1) = F(x) + 1.
Rigid rotations get vectorized fast paths; numerically defined return maps
(from the flow module) go through the generic lift loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cfrac import ConvergentTable, ostrowski_decompose


class NonMonotoneLift(RuntimeError):
    """The lift violated the circle-homeomorphism contract during iteration."""


@dataclass(frozen=True)
class CircleMap:
    """A circle homeomorphism given by a degree-one lift.

    kind is "rotation" (alpha set, lift x -> x + alpha), "return-map" for
    numerically built Poincare return maps, or "custom".
    """

    lift: Callable[[float], float]
    kind: str = "custom"
    alpha: Optional[float] = None

    @staticmethod
    def rotation(alpha: float) -> "CircleMap":
        a = float(alpha)
        return CircleMap(lift=lambda x: x + a, kind="rotation", alpha=a)

    def step(self, x: float) -> float:
        """One application on the circle, result in [0,1)."""
        return self.lift(x) % 1.0


@dataclass
class Observable1D:
    """An observable on the circle with its total variation and mean.

    variation/mean/sup may be supplied exactly; missing ones are estimated on
    a refined uniform grid (the grid total variation only underestimates, so
    the refinement stop is part of the reported value). fn must accept numpy
    arrays.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    name: str = ""
    variation: Optional[float] = None
    mean: Optional[float] = None
    sup: Optional[float] = None
    _var_cache: Optional[float] = field(default=None, repr=False)
    _sup_cache: Optional[float] = field(default=None, repr=False)

    def var(self) -> float:
        if self.variation is not None:
            return self.variation
        if self._var_cache is None:
            self._var_cache = estimate_variation(self.fn)
        return self._var_cache

    def sup_abs(self) -> float:
        if self.sup is not None:
            return self.sup
        if self._sup_cache is None:
            xs = np.arange(1 << 17) / float(1 << 17)
            self._sup_cache = float(np.max(np.abs(self.fn(xs))))
        return self._sup_cache


def estimate_variation(
    fn: Callable[[np.ndarray], np.ndarray],
    n0: int = 1 << 16,
    rel_tol: float = 1e-3,
    n_max: int = 1 << 22,
) -> float:
    """Total variation around the circle on a uniform grid, refined.

    Doubles the grid until the relative change drops below rel_tol. Grid TV
    never exceeds the true variation, so this is a safe lower estimate used as
    a Var(phi) stand-in for numerically defined observables.
    """
    n = n0
    prev = None
    while True:
        xs = np.arange(n + 1, dtype=np.float64) / n
        vals = fn(xs % 1.0)
        tv = float(np.sum(np.abs(np.diff(vals))))
        if prev is not None and abs(tv - prev) <= rel_tol * max(tv, 1e-300):
            return tv
        if n >= n_max:
            return tv
        prev = tv
        n *= 2


def _tri(x: np.ndarray) -> np.ndarray:
    # triangle wave, mean 0, sup 1, variation 4
    return 1.0 - 4.0 * np.abs(np.asarray(x) % 1.0 - 0.5)


OBSERVABLES = {
    "sin": Observable1D(
        fn=lambda x: np.sin(2 * np.pi * np.asarray(x)),
        name="sin", variation=4.0, mean=0.0, sup=1.0,
    ),
    "cos": Observable1D(
        fn=lambda x: np.cos(2 * np.pi * np.asarray(x)),
        name="cos", variation=4.0, mean=0.0, sup=1.0,
    ),
    "triangle": Observable1D(fn=_tri, name="triangle", variation=4.0, mean=0.0, sup=1.0),
}


def const_observable(c: float) -> Observable1D:
    cc = float(c)
    return Observable1D(
        fn=lambda x: np.full_like(np.asarray(x, dtype=np.float64), cc),
        name=f"const({cc})", variation=0.0, mean=cc, sup=abs(cc),
    )


def birkhoff_sum(cmap: CircleMap, phi: Observable1D, x: float, n: int) -> float:
    """S_n phi(x) = sum_{k<n} phi(map^k x); n = 0 gives 0."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return 0.0
    if cmap.kind == "rotation":
        pts = (x + cmap.alpha * np.arange(n, dtype=np.float64)) % 1.0
        return float(np.sum(phi.fn(pts)))
    total = 0.0
    cur = x % 1.0
    for _ in range(n):
        total += float(phi.fn(np.array([cur]))[0])
        cur = cmap.step(cur)
    return total


def birkhoff_cumulative(
    cmap: CircleMap, phi: Observable1D, x: float, n_max: int
) -> np.ndarray:
    """All partial sums S_1..S_{n_max} along one orbit (index i holds S_{i+1})."""
    if cmap.kind == "rotation":
        pts = (x + cmap.alpha * np.arange(n_max, dtype=np.float64)) % 1.0
        return np.cumsum(phi.fn(pts))
    vals = np.empty(n_max)
    cur = x % 1.0
    for k in range(n_max):
        vals[k] = float(phi.fn(np.array([cur]))[0])
        cur = cmap.step(cur)
    return np.cumsum(vals)


def rotation_number(cmap: CircleMap, n_iter: int) -> tuple[float, float]:
    """Average lift displacement from x = 0 over n_iter steps.

    Returns (estimate, 1/n_iter): for a circle homeomorphism the orbit
    displacement F^n(x) - x stays within 1 of n*rho, so 1/n_iter bounds the
    estimation error. Raises NonMonotoneLift when the observed per-step
    displacements spread by >= 1, which is impossible for a monotone
    degree-one lift.
    """
    if n_iter < 100:
        raise ValueError("n_iter must be >= 100")
    f0 = cmap.lift(0.37)
    f1 = cmap.lift(1.37)
    if abs(f1 - f0 - 1.0) > 1e-9:
        raise NonMonotoneLift(f"lift degree check failed: F(x+1)-F(x) = {f1 - f0}")
    cur = 0.0
    dmin = math.inf
    dmax = -math.inf
    for _ in range(n_iter):
        nxt = cmap.lift(cur)
        d = nxt - cur
        dmin = min(dmin, d)
        dmax = max(dmax, d)
        if dmax - dmin >= 1.0:
            raise NonMonotoneLift(
                f"displacement spread {dmax - dmin:.6f} >= 1 during iteration"
            )
        cur = nxt
    return cur / n_iter, 1.0 / n_iter


def dk_residual(
    cmap: CircleMap, phi: Observable1D, x: float, q: int, mean: float
) -> float:
    """|S_q phi(x) - q * mean|, the Denjoy-Koksma residual.

    For q a convergent denominator of the rotation number and mean the
    invariant-measure average, the residual is strictly below Var(phi).
    """
    return abs(birkhoff_sum(cmap, phi, x, q) - q * mean)


def decomposed_sum_bound(
    cmap: CircleMap,
    phi: Observable1D,
    x: float,
    n: int,
    table: ConvergentTable,
    B: int,
    mean: float = 0.0,
) -> tuple[float, float]:
    """Birkhoff sum S_n and its blockwise Denjoy-Koksma bound.

    Splits the first n-1 terms along the digits of n-1 over the convergent
    denominators; each of the sum(n_k) blocks is a DK block contributing less
    than Var(phi), and a single leftover term is bounded by sup|phi - mean|.
    Returns (S_n - n*mean, sum(n_k) * Var(phi)); raises if the sum exceeds
    bound + sup|phi - mean|, which the block argument rules out.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    s = birkhoff_sum(cmap, phi, x, n) - n * mean
    d = ostrowski_decompose(n - 1, table)
    blocks = sum(d.digits)
    bound = blocks * phi.var()
    leftover = phi.sup_abs() + abs(mean)
    if abs(s) > bound + leftover + 1e-9 * n:
        raise RuntimeError(
            f"blockwise bound violated: |S_n| = {abs(s):.6g} > "
            f"{bound:.6g} + {leftover:.6g} (n = {n}, B = {B})"
        )
    return s, bound


def log_bound_envelope(n, B: int, variation: float):
    """The closed-form envelope (4 B Var / log 2) * log n for the sum bound."""
    return (4.0 * B * variation / math.log(2.0)) * np.log(n)


# ---------------------------------------------------------------------------
# Circular-order tools for orbits of circle maps.
# ---------------------------------------------------------------------------

def circular_order(points: np.ndarray) -> np.ndarray:
    """Indices of the points read counterclockwise starting from index 0.

    The cyclic order of an orbit is what a semi-conjugacy to a rigid rotation
    preserves, so two orbits are compared by this index sequence.
    """
    pts = np.asarray(points, dtype=np.float64) % 1.0
    order = np.argsort(pts, kind="stable")
    pos0 = int(np.nonzero(order == 0)[0][0])
    return np.roll(order, -pos0)


def first_order_mismatch(a: np.ndarray, b: np.ndarray) -> Optional[int]:
    """Position of the first disagreement between two circular orders."""
    oa = circular_order(a)
    ob = circular_order(b)
    if len(oa) != len(ob):
        raise ValueError("orbits must have equal length")
    diff = np.nonzero(oa != ob)[0]
    return int(diff[0]) if diff.size else None


def closest_return_records(thetas: np.ndarray) -> list[tuple[int, int]]:
    """Indices where the orbit lands closer to theta_0 than ever before.

    Returns (k, side) pairs: side +1 when theta_k is a new nearest neighbor on
    the counterclockwise side of theta_0, side -1 on the clockwise side, and
    side 0 for k = 1 which starts as both. For an orbit ordered like a rigid
    rotation these records happen exactly at the intermediate-fraction
    denominators of the rotation number.
    """
    pts = np.asarray(thetas, dtype=np.float64) % 1.0
    d = (pts[1:] - pts[0]) % 1.0
    records: list[tuple[int, int]] = [(1, 0)]
    right = d[0]
    left = d[0]
    for j in range(1, d.size):
        k = j + 1
        if d[j] <= 0.0:
            break  # collision with theta_0: not an infinite orbit
        if d[j] < right:
            records.append((k, +1))
            right = d[j]
        elif d[j] > left:
            records.append((k, -1))
            left = d[j]
    return records


@dataclass(frozen=True)
class RotationCylinder:
    """A Stern-Brocot interval (p_lo/q_lo, p_hi/q_hi) certified to contain the
    rotation number, decoded from closest-return records."""

    p_lo: int
    q_lo: int
    p_hi: int
    q_hi: int
    consistent: bool
    bad_index: Optional[int]
    depth: int

    @property
    def lo(self) -> float:
        return self.p_lo / self.q_lo

    @property
    def hi(self) -> float:
        return self.p_hi / self.q_hi

    @property
    def width(self) -> float:
        # Farey neighbours: hi - lo = 1/(q_lo*q_hi) exactly.
        return 1.0 / (self.q_lo * self.q_hi)

    def interior_point(self) -> float:
        """An irrational-in-spirit point strictly inside the cylinder."""
        g = (math.sqrt(5.0) - 1.0) / 2.0
        return (self.p_lo + g * self.p_hi) / (self.q_lo + g * self.q_hi)


def rotation_cylinder(thetas: np.ndarray, max_width: float = 1e-7) -> RotationCylinder:
    """Decode the rotation number's continued fraction from orbit records.

    Every new closest-return record of a rotation-ordered orbit must occur at
    index q_lo + q_hi of the current Stern-Brocot interval, and its side says
    which endpoint the mediant replaces. The walk stops once the interval is
    narrower than max_width. A record at any other index proves the orbit is
    not ordered like a rigid rotation, reported via consistent = False.
    """
    records = closest_return_records(thetas)
    p_lo, q_lo, p_hi, q_hi = 0, 1, 1, 1
    depth = 0
    for k, side in records:
        if side == 0:
            continue
        if 1.0 / (q_lo * q_hi) < max_width:
            break
        if k != q_lo + q_hi:
            return RotationCylinder(p_lo, q_lo, p_hi, q_hi, False, k, depth)
        pm, qm = p_lo + p_hi, q_lo + q_hi
        if side > 0:
            p_lo, q_lo = pm, qm
        else:
            p_hi, q_hi = pm, qm
        depth += 1
    return RotationCylinder(p_lo, q_lo, p_hi, q_hi, True, None, depth)

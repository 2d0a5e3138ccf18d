"""The stable-field flow on the torus and its transversal-section analysis.

The flow integrates the raw stable field of the perturbed map with a fixed
step classical Runge-Kutta scheme; observable integrals ride along as an
augmented state on the same stage grid. A section is the closed line through
the origin with direction (q, p); its lifts in the plane are the integer
levels of eta(z) = q z_y - p z_x, which the integrator tracks through
unwrapped increments, so first returns are located by bisecting a single
step to 1e-10 in time.

Renormalizing the field by its component across the section makes the
return time exactly constant while leaving the return map unchanged, which
is what connects the return map to a rigid rotation at beta = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels as _k
from ._kernels import BN, LAM, LAM2, LAMI2
from .circle import CircleMap
from .dfa import DfaParams, SeriesDiverged, TorusPoint, stable_field


class NoCrossing(RuntimeError):
    """No section crossing occurred within the allotted time horizon."""


class TransversalityLost(RuntimeError):
    """The field's component across the section fell below margin_min."""


@dataclass(frozen=True)
class FlowConfig:
    """Integration settings for the stable-field flow.

    step is the fixed integrator step in flow-time units; 1e-2 or below keeps
    event location and quadrature at the accuracy the experiments assume
    (documented rather than enforced, so that deliberately coarse runs can
    demonstrate failure). The stable field must be defined on the whole
    torus, so params must sit in the field window.
    """

    params: DfaParams
    step: float = 1e-3
    integrator: str = "rk4"

    def __post_init__(self):
        if not self.step > 0.0:
            raise ValueError("step must be positive")
        if self.integrator != "rk4":
            raise ValueError("only the fixed-step rk4 integrator is provided")
        self.params.require_field_window()

    @property
    def beta(self) -> float:
        return self.params.beta


@dataclass(frozen=True)
class Section:
    """The closed transversal line through the origin with slope p/q.

    Parametrized by theta in [0,1) -> theta * (q, p) mod 1; its length is
    sqrt(p^2 + q^2). margin_min is the transversality threshold: a crossing
    where the unit-normalized field has a smaller component along the
    normal than this raises TransversalityLost.
    """

    p: int = 1
    q: int = 1
    margin_min: float = 0.1

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("p and q must be >= 1")
        if math.gcd(self.p, self.q) != 1:
            raise ValueError(f"(p, q) = ({self.p}, {self.q}) must be coprime")
        if not (0.0 < self.margin_min < 1.0):
            raise ValueError("margin_min must lie in (0, 1)")

    @property
    def length(self) -> float:
        return math.hypot(self.p, self.q)

    @property
    def w(self) -> np.ndarray:
        """Unit direction of the section."""
        return np.array([self.q, self.p]) / self.length

    @property
    def wperp(self) -> np.ndarray:
        """Unit normal: the direction rotated counterclockwise by pi/2."""
        return np.array([-self.p, self.q]) / self.length

    @property
    def c1(self) -> int:
        """Integer q m + p n for a Bezout pair with q n - p m = -1.

        Any valid pair gives the same theta_of modulo 1, since two choices
        differ by a multiple of p^2 + q^2.
        """
        m1 = pow(self.p, -1, self.q) if self.q > 1 else 0
        n1 = (self.p * m1 - 1) // self.q
        return self.q * m1 + self.p * n1

    def point(self, theta: float) -> TorusPoint:
        """The section point with parameter theta."""
        t = theta % 1.0
        return TorusPoint(t * self.q, t * self.p)

    def eta(self, pt: TorusPoint) -> float:
        """Signed level coordinate q y - p x of the canonical representative."""
        return self.q * pt.y - self.p * pt.x

    def theta_of(self, pt: TorusPoint, tol: float = 1e-6) -> float:
        """Section parameter of a point lying on (a lift of) the section.

        eta of any representative of a section point is an integer; the
        formula (q x + p y + eta c1) / (p^2 + q^2) mod 1 then inverts the
        parametrization regardless of which lattice translate pt is.
        """
        e = self.eta(pt)
        lvl = round(e)
        if abs(e - lvl) > tol:
            raise ValueError(
                f"point ({pt.x:.8f}, {pt.y:.8f}) is not on the section "
                f"(eta = {e:.8f})")
        l2 = self.p * self.p + self.q * self.q
        return ((self.q * pt.x + self.p * pt.y + lvl * self.c1) / l2) % 1.0

    def linear_rotation(self) -> float:
        """Return-map rotation number of the unperturbed flow on this section.

        Derived by straightening the section: a crossing of lift level n has
        parameter (q x + p y + n c1) / (p^2 + q^2) mod 1, and the constant
        stable-direction flow enters level n + 1 with a parameter shift
        independent of theta. For (1, 1) this is the golden mean minus 1.
        """
        l2 = self.p * self.p + self.q * self.q
        lam = _k.LAM
        return ((self.c1 + (self.p * lam - self.q) / (self.q * lam + self.p))
                / l2) % 1.0


@dataclass(frozen=True)
class TorusObservable:
    """A scalar observable on the torus known to the compiled integrator.

    tag selects the compiled evaluation; fn is the same function for python
    callers. sup_abs is the exact supremum of |f| and c1_norm a bound for
    sup|f| + sup|df| used in reporting.
    """

    name: str
    tag: int
    sup_abs: float
    c1_norm: float
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]


TWO_PI = 2.0 * math.pi

OBSERVABLES = {
    "one": TorusObservable("one", 0, 1.0, 1.0, lambda x, y: np.ones_like(np.asarray(x, dtype=float))),
    "zero": TorusObservable("zero", -1, 0.0, 0.0, lambda x, y: np.zeros_like(np.asarray(x, dtype=float))),
    "sin_x": TorusObservable("sin_x", 1, 1.0, 1.0 + TWO_PI, lambda x, y: np.sin(TWO_PI * np.asarray(x))),
    "cos_x": TorusObservable("cos_x", 2, 1.0, 1.0 + TWO_PI, lambda x, y: np.cos(TWO_PI * np.asarray(x))),
    "sin_y": TorusObservable("sin_y", 3, 1.0, 1.0 + TWO_PI, lambda x, y: np.sin(TWO_PI * np.asarray(y))),
    "cos_y": TorusObservable("cos_y", 4, 1.0, 1.0 + TWO_PI, lambda x, y: np.cos(TWO_PI * np.asarray(y))),
    "sin_sum": TorusObservable("sin_sum", 5, 1.0, 1.0 + 2 * TWO_PI, lambda x, y: np.sin(TWO_PI * (np.asarray(x) + np.asarray(y)))),
    "cos_sum": TorusObservable("cos_sum", 6, 1.0, 1.0 + 2 * TWO_PI, lambda x, y: np.cos(TWO_PI * (np.asarray(x) + np.asarray(y)))),
    "mix": TorusObservable("mix", 7, 1.0, 1.0 + 2 * TWO_PI, lambda x, y: np.sin(TWO_PI * np.asarray(x)) * np.cos(TWO_PI * np.asarray(y))),
}


@dataclass
class RunResult:
    x: float
    y: float
    H: float
    eta: float
    t: float
    n_cross: int
    cross_t: np.ndarray
    cross_H: np.ndarray
    cross_x: np.ndarray
    cross_y: np.ndarray
    cross_lvl: np.ndarray

    @property
    def position(self) -> TorusPoint:
        return TorusPoint(self.x, self.y)


def _run(cfg: FlowConfig, x: float, y: float, T: float, *,
         renorm: bool = False, sec: Optional[Section] = None,
         obs_tag: int = -1, eta0: float = 0.0, capture: bool = False,
         stop_after: int = 0, buf: int = 8,
         step: Optional[float] = None) -> RunResult:
    """Drive the compiled integrator and translate status codes to errors."""
    par = cfg.params
    if sec is not None:
        wpx, wpy = float(sec.wperp[0]), float(sec.wperp[1])
        p, q = sec.p, sec.q
        margin_min = sec.margin_min
    else:
        wpx = wpy = 0.0
        p = q = 1
        margin_min = 0.0
        if renorm:
            raise ValueError("renormalized integration needs a section")
    n = max(int(buf), 1)
    ct = np.empty(n)
    cH = np.empty(n)
    cx = np.empty(n)
    cy = np.empty(n)
    cl = np.empty(n)
    out = _k.rk4_run(float(x), float(y), float(T),
                     float(step if step is not None else cfg.step),
                     par.beta, par.bump_tag, par.series_tol,
                     par.series_max_terms, par.sup_b, renorm, wpx, wpy,
                     int(obs_tag), p, q, float(eta0), capture,
                     int(stop_after), margin_min, ct, cH, cx, cy, cl)
    xf, yf, H, eta, t_end, nc, st = out
    if st == _k.STATUS_SERIES:
        raise SeriesDiverged(
            f"stable-field series did not settle during integration near "
            f"({xf:.6f}, {yf:.6f}), beta = {par.beta}")
    if st == _k.STATUS_TRANSVERSALITY:
        raise TransversalityLost(
            f"normal component below margin_min = {margin_min} at "
            f"({xf:.6f}, {yf:.6f}), t = {t_end:.6f}")
    if st == _k.STATUS_BUFFER:
        raise RuntimeError("crossing buffer overflow (internal sizing bug)")
    return RunResult(xf, yf, H, eta, t_end, int(nc),
                     ct[:nc], cH[:nc], cx[:nc], cy[:nc], cl[:nc])


def integrate(cfg: FlowConfig, x0: TorusPoint, T: float) -> TorusPoint:
    """Flow the point for time T (negative T integrates backward)."""
    return _run(cfg, x0.x, x0.y, T).position


def ergodic_integral(cfg: FlowConfig, f: TorusObservable, x: TorusPoint,
                     T: float) -> float:
    """Integral of f along the trajectory from x over [0, T]."""
    if T < 0:
        raise ValueError("T must be >= 0")
    return _run(cfg, x.x, x.y, T, obs_tag=f.tag).H


def commutation_residual(cfg: FlowConfig, x: TorusPoint, t: float) -> float:
    """Torus distance between f(flow_t(x)) and flow_{t/L^2}(f(x)).

    The stable field is pushed to L^{-2} times itself by the map, so the two
    compositions solve the same initial value problem and the residual is
    pure numerical error.
    """
    from .dfa import apply_f

    lhs = apply_f(integrate(cfg, x, t), cfg.params)
    rhs = integrate(cfg, apply_f(x, cfg.params), t * LAMI2)
    return lhs.distance(rhs)


def transversality_margin(cfg: FlowConfig, sec: Section,
                          n_samples: int = 256) -> float:
    """Min over section samples of the unit field's normal component."""
    wx, wy = sec.wperp
    worst = math.inf
    for i in range(n_samples):
        v = stable_field(sec.point(i / n_samples), cfg.params)
        vxy = v.xy
        worst = min(worst, abs(vxy[0] * wx + vxy[1] * wy) / v.norm)
    return worst


def _normal_speed(cfg: FlowConfig, sec: Section, pt: TorusPoint) -> float:
    v = stable_field(pt, cfg.params).xy
    return float(v @ sec.wperp)


def _return_once(cfg: FlowConfig, sec: Section, theta: float,
                 renormalized: bool, obs_tag: int) -> tuple[float, float, float]:
    """One forward first return: (theta', elapsed time, observable integral)."""
    z0 = sec.point(theta)
    if renormalized:
        horizon = 10.0 / sec.length
    else:
        speed = abs(_normal_speed(cfg, sec, z0))
        horizon = 10.0 / (sec.length * max(speed, sec.margin_min))
    eta0 = float(round(sec.eta(z0)))
    res = _run(cfg, z0.x, z0.y, horizon, renorm=renormalized, sec=sec,
               obs_tag=obs_tag, eta0=eta0, capture=True, stop_after=1,
               buf=4)
    if res.n_cross < 1:
        raise NoCrossing(
            f"no section crossing within horizon {horizon:.3f} from "
            f"theta = {theta:.6f}")
    theta_next = sec.theta_of(res.position)
    return theta_next, res.t, res.H


def first_return(cfg: FlowConfig, sec: Section, theta: float,
                 renormalized: bool) -> tuple[float, float]:
    """First forward return of the section point theta: (theta', time)."""
    tp, u, _ = _return_once(cfg, sec, theta, renormalized, -1)
    return tp, u


def section_observable(cfg: FlowConfig, sec: Section, f: TorusObservable,
                       theta: float, renormalized: bool = False) -> float:
    """g(theta): the integral of f along one return cell from theta."""
    _, _, g = _return_once(cfg, sec, theta, renormalized, f.tag)
    return g


@dataclass
class ReturnMapData:
    """The numerically built return map, its return time, and the constant
    return time of the renormalized field (exactly 1/|section| by
    construction, None for the raw field)."""

    R: CircleMap
    u: Callable[[float], float]
    tau: Optional[float]


def build_return_map(cfg: FlowConfig, sec: Section,
                     renormalized: bool = True) -> ReturnMapData:
    """Package first returns as a CircleMap with a monotone-by-construction
    degree-one lift theta -> theta + displacement(theta mod 1)."""

    def lift(t: float) -> float:
        base = t % 1.0
        tp, _ = first_return(cfg, sec, base, renormalized)
        return t + ((tp - base) % 1.0)

    def u(t: float) -> float:
        return first_return(cfg, sec, t % 1.0, renormalized)[1]

    tau = 1.0 / sec.length if renormalized else None
    return ReturnMapData(R=CircleMap(lift=lift, kind="return-map"), u=u, tau=tau)


@dataclass
class LinkReport:
    """Comparison of a flow integral with the matched return-map Birkhoff sum.

    The start point is written as flow_tau_back(section point theta0); the
    sum-side quantities are taken from that section point over the
    effective time T + tau_back. Each of gap and decomposition_residual is
    bounded by sup(u) sup|f| up to integration slack.
    """

    n: int
    integral: float
    birkhoff: float
    gap: float
    bound: float
    sup_u: float
    inf_u: float
    theta0: float
    tau_back: float
    t_effective: float
    decomposition_residual: float
    n_window_ok: bool


def compare_integral_to_birkhoff(cfg: FlowConfig, sec: Section,
                                 f: TorusObservable, x: TorusPoint, T: float,
                                 renormalized: bool = True,
                                 slack: Optional[float] = None) -> LinkReport:
    """Check |H_{theta0, T+tau}(f) - sum_{k<n} g(R^k theta0)| <= sup(u) sup|f|.

    x is first carried backward to its most recent section crossing theta0
    (tau_back < sup u); n is the number of crossings of the forward
    trajectory of x within (0, T], equivalently of theta0's trajectory
    within (0, T + tau_back]. The Birkhoff side is recomputed by n
    independent first-return integrations, so the two quantities share no
    arithmetic beyond the field itself. Raises AssertionError-style
    RuntimeError when a bound fails beyond slack.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if slack is None:
        slack = 1e-4 * max(f.sup_abs, 1e-8)

    eta_x = sec.eta(x)
    if abs(eta_x - round(eta_x)) < 1e-9:
        theta0 = sec.theta_of(x)
        tau_back = 0.0
        H_back = 0.0
    else:
        horizon_back = 3.0 / sec.length if renormalized else 5.0 / sec.length
        back = _run(cfg, x.x, x.y, -horizon_back, renorm=renormalized,
                    sec=sec, obs_tag=f.tag, eta0=eta_x, capture=True,
                    stop_after=1, buf=4)
        if back.n_cross < 1:
            raise NoCrossing("no backward crossing within the decomposition cap")
        theta0 = sec.theta_of(back.position)
        tau_back = -back.t
        H_back = back.H  # integral over signed time [0, -tau_back]

    fwd = _run(cfg, x.x, x.y, T, renorm=renormalized, sec=sec, obs_tag=f.tag,
               eta0=eta_x, capture=True, stop_after=0,
               buf=int(T * sec.length * 3.0) + 16)
    n = fwd.n_cross
    integral = fwd.H - H_back  # H over [0, T + tau_back] from theta0

    birkhoff = 0.0
    us = []
    theta = theta0
    for k in range(n + 1):
        theta_next, u, g = _return_once(cfg, sec, theta, renormalized, f.tag)
        us.append(u)
        if k < n:
            birkhoff += g
        theta = theta_next
    sup_u = max(us)
    inf_u = min(us)

    t_eff = T + tau_back
    gap = abs(integral - birkhoff)
    bound = sup_u * f.sup_abs
    decomp = abs(H_back)
    window_ok = (t_eff / sup_u - 1.0 <= n + 1e-9) and (n <= t_eff / inf_u + 1e-9)
    if gap > bound + slack:
        raise RuntimeError(
            f"integral-Birkhoff gap {gap:.6g} exceeds bound {bound:.6g} "
            f"+ slack {slack:.2g}")
    if decomp > bound + slack:
        raise RuntimeError(
            f"decomposition residual {decomp:.6g} exceeds bound {bound:.6g}")
    return LinkReport(n=n, integral=integral, birkhoff=birkhoff, gap=gap,
                      bound=bound, sup_u=sup_u, inf_u=inf_u, theta0=theta0,
                      tau_back=tau_back, t_effective=t_eff,
                      decomposition_residual=decomp, n_window_ok=window_ok)


def return_orbit(cfg: FlowConfig, sec: Section, theta0: float, n: int,
                 renormalized: bool = True) -> np.ndarray:
    """The orbit theta0, R(theta0), ..., R^{n-1}(theta0) of first returns."""
    thetas = np.empty(n)
    theta = theta0 % 1.0
    for k in range(n):
        thetas[k] = theta
        theta, _ = first_return(cfg, sec, theta, renormalized)
    return thetas


@dataclass
class OrderReport:
    """Outcome of the finite orbit-order comparison against a rigid rotation."""

    isomorphic: bool
    first_mismatch: Optional[int]
    n_points: int
    alpha_used: float
    rho_lo: float
    rho_hi: float
    rho_width: float
    decoder_consistent: bool
    naive_estimate: float


def orbit_order_check(cfg: FlowConfig, sec: Section, n_points: int,
                      renormalized: bool = True,
                      n_returns: Optional[int] = None,
                      alpha_shift: float = 0.0) -> OrderReport:
    """Compare the circular order of the return orbit of 0 with the rigid
    rotation by the measured rotation number.

    The rotation number is pinned by decoding the orbit's closest-return
    records into a chain of mediant intervals; the walk is continued until
    the certified interval is narrower than 1/(4 n_points^2), which makes
    the rigid orbit's circular order independent of the choice of alpha
    inside the interval. alpha_shift perturbs the rotation used for the
    rigid orbit (negative-control hook).
    """
    from .circle import circular_order, first_order_mismatch, rotation_cylinder

    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    target = 1.0 / (4.0 * n_points * n_points)
    if n_returns is None:
        n_returns = max(4500, 2 * n_points)
    thetas = return_orbit(cfg, sec, 0.0, n_returns, renormalized)
    cyl = rotation_cylinder(thetas, max_width=target)
    alpha = cyl.interior_point() + alpha_shift

    d = (thetas[1:] - thetas[:-1]) % 1.0
    naive = float(np.mean(d))

    orbit = thetas[:n_points]
    rigid = (alpha * np.arange(n_points)) % 1.0
    mismatch = first_order_mismatch(orbit, rigid)
    return OrderReport(
        isomorphic=(mismatch is None),
        first_mismatch=mismatch,
        n_points=n_points,
        alpha_used=alpha,
        rho_lo=cyl.lo,
        rho_hi=cyl.hi,
        rho_width=cyl.width,
        decoder_consistent=cyl.consistent and cyl.width <= target,
        naive_estimate=naive,
    )


@dataclass
class ErgodicSeries:
    """Samples (T_i, H_i) of the (mean-adjusted) ergodic integral."""

    T: np.ndarray
    H: np.ndarray
    observable: str
    sup_abs: float
    c1_norm: float
    mean_used: float
    mean_error_est: float


@dataclass
class LogFit:
    """Least-squares fit of |H_i| against log(1 + T_i)."""

    k1: float
    k2: float
    max_ratio: float
    mean_flagged: bool

    @staticmethod
    def window_ratio(series: "ErgodicSeries", lo: float, hi: float) -> float:
        m = (series.T >= lo) & (series.T <= hi)
        if not np.any(m):
            raise ValueError(f"no samples in [{lo}, {hi}]")
        return float(np.max(np.abs(series.H[m]) / np.log1p(series.T[m])))


def log_growth_experiment(cfg: FlowConfig, f: TorusObservable, x: TorusPoint,
                          T_max: float, samples: int,
                          mean_step: float = 5e-3) -> tuple[ErgodicSeries, LogFit]:
    """Sample H_{x,T}(f) at geometric times and fit the logarithmic envelope.

    For beta = 0 the trigonometric observables have exact zero mean for the
    flow's invariant measure (Lebesgue), so no subtraction happens. For
    beta < 0 the mean is estimated from one long run of length 10 T_max
    (at the coarser mean_step) and subtracted; the difference between the
    half-run and full-run estimates gives mean_error_est, and the fit flags
    the experiment when T_max * mean_error_est exceeds the log scale.
    """
    if T_max <= 1.0 or samples < 2:
        raise ValueError("need T_max > 1 and samples >= 2")
    if f.tag < 0:
        Ts = np.array([T_max ** (i / samples) for i in range(1, samples + 1)])
        series = ErgodicSeries(Ts, np.zeros_like(Ts), f.name, f.sup_abs,
                               f.c1_norm, 0.0, 0.0)
        return series, LogFit(0.0, 0.0, 0.0, False)

    if cfg.beta == 0.0:
        mu = 0.0
        mu_err = 0.0
    else:
        T_star = 10.0 * T_max
        half = _run(cfg, x.x, x.y, T_star / 2.0, obs_tag=f.tag, step=mean_step)
        rest = _run(cfg, half.x, half.y, T_star / 2.0, obs_tag=f.tag,
                    step=mean_step)
        mu_half = half.H / (T_star / 2.0)
        mu = (half.H + rest.H) / T_star
        mu_err = abs(mu - mu_half)

    Ts = np.array([T_max ** (i / samples) for i in range(1, samples + 1)])
    Hs = np.empty_like(Ts)
    cx, cy = x.x, x.y
    H_cum = 0.0
    t_prev = 0.0
    for i, Ti in enumerate(Ts):
        seg = _run(cfg, cx, cy, Ti - t_prev, obs_tag=f.tag)
        cx, cy = seg.x, seg.y
        H_cum += seg.H
        t_prev = Ti
        Hs[i] = H_cum - mu * Ti

    series = ErgodicSeries(Ts, Hs, f.name, f.sup_abs, f.c1_norm, mu, mu_err)
    logs = np.log1p(Ts)
    k1, k2 = np.polyfit(logs, np.abs(Hs), 1)
    max_ratio = float(np.max(np.abs(Hs) / logs))
    flagged = T_max * mu_err > math.log1p(T_max)
    return series, LogFit(float(k1), float(k2), max_ratio, flagged)

"""The eleven quantitative acceptance checks, shared by tests and the CLI.

Every check is self-contained: parameters, seeds, and tolerances are frozen
here, and each returns a CriterionResult with a one-line detail string. A
check that raises is reported as failed with the exception text; nothing is
retried or loosened at run time.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import cfrac, circle
from ._kernels import BN, LAM
from .dfa import DfaParams, TorusPoint, apply_f, basin_grid, batch_contraction_residuals
from .flow import (
    OBSERVABLES,
    FlowConfig,
    LogFit,
    Section,
    build_return_map,
    commutation_residual,
    compare_integral_to_birkhoff,
    first_return,
    log_growth_experiment,
    orbit_order_check,
)

SEED = 20260819
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_STEP = 1e-3


@dataclass
class CriterionResult:
    index: int
    title: str
    passed: bool
    detail: str
    elapsed: float
    budget: float

    @property
    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] criterion {self.index:2d}: {self.title} "
                f"({self.elapsed:.1f}s / budget {self.budget:.0f}s) - {self.detail}")


def _rng(index: int) -> np.random.Generator:
    return np.random.default_rng([SEED, index])


def check_1() -> CriterionResult:
    """Ostrowski digits of every m <= 1e5 over the golden convergents."""
    t0 = time.time()
    cf = cfrac.expand(cfrac.named_real("golden"), 30, precision_bits=256)
    table = cfrac.convergents(cf)
    B = cfrac.constant_type_bound(cf)
    worst_margin = math.inf
    max_digit = 0
    ok = True
    for m in range(1, 100_001):
        d = cfrac.ostrowski_decompose(m, table)
        rep = cfrac.verify_decomposition(d, table, B)
        ok = ok and rep.reconstruction_exact and rep.n_bound_ok and rep.digit_bound_ok
        max_digit = max(max_digit, rep.max_digit)
        worst_margin = min(worst_margin, rep.n_bound_value - d.N)
        if not ok:
            break
    ok = ok and max_digit <= 2
    detail = (f"1e5 values reconstructed, max digit {max_digit}, "
              f"min length-bound margin {worst_margin:.2f}")
    return CriterionResult(1, "Ostrowski digits over golden convergents",
                           ok, detail, time.time() - t0, 5.0)


def check_2() -> CriterionResult:
    """Birkhoff sums at convergent denominators stay below the variation."""
    t0 = time.time()
    rng = _rng(2)
    worst = 0.0
    n_checked = 0
    for name in ("golden", "silver"):
        cf = cfrac.expand(cfrac.named_real(name), 25, precision_bits=256)
        table = cfrac.convergents(cf)
        alpha = float(cfrac.named_real(name))
        qs = sorted({q for q in table.q if 1 <= q <= 10_000})
        qmax = max(qs)
        starts = rng.random(100)
        for x in starts:
            orbit = (x + alpha * np.arange(qmax, dtype=np.float64)) % 1.0
            for obs in ("sin", "cos", "triangle"):
                phi = circle.OBSERVABLES[obs]
                cs = np.cumsum(phi.fn(orbit))
                for q in qs:
                    resid = abs(cs[q - 1] - q * phi.mean)
                    worst = max(worst, resid / phi.var())
                    n_checked += 1
    ok = worst < 1.0
    detail = f"{n_checked} sums, worst residual/Var = {worst:.4f}"
    return CriterionResult(2, "Denjoy-Koksma residual below variation",
                           ok, detail, time.time() - t0, 30.0)


def check_3() -> CriterionResult:
    """|S_n| under the golden rotation obeys the explicit log envelope."""
    t0 = time.time()
    rng = _rng(3)
    alpha = float(cfrac.named_real("golden"))
    phi = circle.OBSERVABLES["sin"]
    n_max = 100_000
    ns = np.arange(1, n_max + 1, dtype=np.float64)
    env = circle.log_bound_envelope(ns, B=1, variation=phi.var()) + phi.sup_abs()
    worst = 0.0
    for x in rng.random(16):
        orbit = (x + alpha * np.arange(n_max, dtype=np.float64)) % 1.0
        cs = np.abs(np.cumsum(phi.fn(orbit)))
        worst = max(worst, float(np.max(cs / env)))
    ok = worst <= 1.0
    detail = f"16 starts, all n <= 1e5, worst |S_n|/envelope = {worst:.4f}"
    return CriterionResult(3, "Log envelope for rotation sums",
                           ok, detail, time.time() - t0, 10.0)


def check_4() -> CriterionResult:
    """Stable-field contraction identity at three perturbation strengths."""
    t0 = time.time()
    rng = _rng(4)
    worst = 0.0
    for beta in (-1.7, -2.0, -2.3):
        pts = rng.random((1000, 2))
        res = batch_contraction_residuals(
            pts, DfaParams(beta=beta, series_tol=1e-8))
        worst = max(worst, float(res.max()))
    ok = worst < 1e-6
    detail = f"3000 points, worst residual = {worst:.2e}"
    return CriterionResult(4, "Stable-field contraction identity",
                           ok, detail, time.time() - t0, 60.0)


def check_5(step: float = DEFAULT_STEP) -> CriterionResult:
    """Map-flow commutation f o h_t = h_{t/L^2} o f at beta = -2."""
    t0 = time.time()
    rng = _rng(5)
    cfg = FlowConfig(params=DfaParams(beta=-2.0), step=step)
    worst = 0.0
    for _ in range(100):
        x = TorusPoint(*rng.random(2))
        t = float(rng.uniform(0.0, 2.0))
        worst = max(worst, commutation_residual(cfg, x, t))
    ok = worst < 1e-5
    detail = f"100 pairs, worst distance = {worst:.2e}"
    return CriterionResult(5, "Commutation of map and flow",
                           ok, detail, time.time() - t0, 60.0)


def check_6(step: float = DEFAULT_STEP) -> CriterionResult:
    """Rotation number of the diagonal-section return map."""
    t0 = time.time()
    sec = Section(1, 1)
    details = []
    ok = True
    for beta, n_iter, tol in ((0.0, 10_000, 1e-4), (-2.0, 4_000, 1e-3)):
        cfg = FlowConfig(params=DfaParams(beta=beta), step=step)
        data = build_return_map(cfg, sec, renormalized=True)
        est, err = circle.rotation_number(data.R, n_iter)
        dev = abs(est - GOLDEN)
        ok = ok and dev < tol and err <= tol
        details.append(f"beta={beta}: rho={est:.7f} (dev {dev:.1e}, tol {tol:.0e})")
    return CriterionResult(6, "Return-map rotation number",
                           ok, "; ".join(details), time.time() - t0, 120.0)


def check_7(step: float = DEFAULT_STEP) -> CriterionResult:
    """Constancy of the renormalized return time."""
    t0 = time.time()
    sec = Section(1, 1)
    tau = 1.0 / math.sqrt(2.0)
    grid = np.linspace(0.0, 1.0, 100, endpoint=False)
    ok = True
    details = []
    for beta in (0.0, -2.0):
        cfg = FlowConfig(params=DfaParams(beta=beta), step=step)
        us = np.array([first_return(cfg, sec, float(t), True)[1] for t in grid])
        rel = float(us.std() / us.mean())
        ok = ok and rel < 1e-5
        if beta == 0.0:
            dev = float(np.max(np.abs(us - tau)))
            ok = ok and dev < 1e-6
            details.append(f"beta=0: relstd {rel:.1e}, |u - 1/sqrt2| <= {dev:.1e}")
        else:
            details.append(f"beta={beta}: relstd {rel:.1e}")
    return CriterionResult(7, "Constant renormalized return time",
                           ok, "; ".join(details), time.time() - t0, 60.0)


def check_8(step: float = DEFAULT_STEP) -> CriterionResult:
    """Integral vs Birkhoff-sum gap bounded by sup(u) sup|f|."""
    t0 = time.time()
    rng = _rng(8)
    sec = Section(1, 1)
    names = ["sin_x", "cos_x", "sin_y", "cos_y", "sin_sum", "cos_sum", "mix"]
    worst = 0.0
    n_done = 0
    ok = True
    detail = ""
    for i in range(20):
        beta = 0.0 if i % 2 == 0 else -2.0
        cfg = FlowConfig(params=DfaParams(beta=beta), step=step)
        f = OBSERVABLES[names[int(rng.integers(len(names)))]]
        x = TorusPoint(*rng.random(2))
        T = float(rng.uniform(5.0, 100.0))
        try:
            rep = compare_integral_to_birkhoff(cfg, sec, f, x, T,
                                               renormalized=True)
        except RuntimeError as exc:
            ok = False
            detail = f"triple {i} (beta={beta}, f={f.name}, T={T:.1f}): {exc}"
            break
        slack_ratio = rep.gap / (rep.bound + 1e-4)
        worst = max(worst, slack_ratio)
        ok = ok and rep.gap <= rep.bound + 1e-4 and rep.n_window_ok
        n_done += 1
    if not detail:
        detail = f"{n_done} triples, worst gap/(bound+slack) = {worst:.3f}"
    return CriterionResult(8, "Section-sum link inequality",
                           ok, detail, time.time() - t0, 120.0)


def check_9(step: float = DEFAULT_STEP) -> CriterionResult:
    """Logarithmic growth of flow ergodic integrals."""
    t0 = time.time()
    x0 = TorusPoint(0.25, 0.5)
    f = OBSERVABLES["sin_x"]

    cfg0 = FlowConfig(params=DfaParams(beta=0.0), step=step)
    series0, _ = log_growth_experiment(cfg0, f, x0, T_max=1e4, samples=48)
    vx = -1.0 / BN
    exact = (np.cos(2 * np.pi * 0.25)
             - np.cos(2 * np.pi * (0.25 + vx * series0.T))) / (2 * np.pi * vx)
    model_err = float(np.max(np.abs(series0.H - exact)))
    max_h = float(np.max(np.abs(series0.H)))
    ok = max_h <= 0.31 and model_err < 1e-5

    cfg2 = FlowConfig(params=DfaParams(beta=-2.0), step=step)
    series2, fit2 = log_growth_experiment(cfg2, f, x0, T_max=1e4, samples=48)
    early = LogFit.window_ratio(series2, 1e2, 1e3)
    late = LogFit.window_ratio(series2, 1e3, 1e4)
    ok = ok and late <= 2.0 * early and not fit2.mean_flagged
    detail = (f"beta=0: max|H| = {max_h:.4f} (<= 0.31, closed-form err "
              f"{model_err:.1e}); beta=-2: ratio[1e3,1e4] = {late:.3f} vs "
              f"2x ratio[1e2,1e3] = {2 * early:.3f}, mean err "
              f"{series2.mean_error_est:.1e}")
    return CriterionResult(9, "Log growth of ergodic integrals",
                           ok, detail, time.time() - t0, 600.0)


def check_10(step: float = DEFAULT_STEP) -> CriterionResult:
    """Circular order of 500 returns matches the rigid rotation."""
    t0 = time.time()
    cfg = FlowConfig(params=DfaParams(beta=-2.0), step=step)
    rep = orbit_order_check(cfg, Section(1, 1), n_points=500,
                            n_returns=3000, renormalized=True)
    ok = rep.isomorphic and rep.decoder_consistent
    ok = ok and rep.rho_width < 1.0 / (2 * 500 * 500)
    detail = (f"rho in [{rep.rho_lo:.8f}, {rep.rho_hi:.8f}] "
              f"(width {rep.rho_width:.1e}), order match: {rep.isomorphic}")
    return CriterionResult(10, "Orbit order matches rigid rotation",
                           ok, detail, time.time() - t0, 120.0)


def check_11() -> CriterionResult:
    """Basin render: both classes, reproducible, sample-invariant."""
    t0 = time.time()
    params = DfaParams(beta=-2.0)
    # the undecided set thins out exponentially with iteration depth (the
    # invariant complement of the basin has zero area), so the render depth
    # is the largest one whose undecided class is still sample-invariant
    max_iter, radius, width = 4, 1e-3, 512
    img = basin_grid(params, width, width, max_iter=max_iter,
                     capture_radius=radius)
    img2 = basin_grid(params, width, width, max_iter=max_iter,
                      capture_radius=radius)
    identical = img.tobytes() == img2.tobytes()
    n_att = int((img == 255).sum())
    n_und = int((img == 0).sum())
    rng = _rng(11)
    und = np.argwhere(img == 0)
    sel = und[rng.choice(len(und), size=1000, replace=False)] if len(und) >= 1000 else und
    stay = 0
    for row, col in sel:
        z = apply_f(TorusPoint(col / width, row / width), params)
        rr = int(z.y * width) % width
        cc = int(z.x * width) % width
        stay += int(img[rr, cc] == 0)
    frac = stay / max(len(sel), 1)
    ok = identical and n_att > 0 and n_und > 0 and len(sel) >= 1000 and frac >= 0.99
    detail = (f"attracted {n_att}, undecided {n_und}, byte-identical: "
              f"{identical}, invariance {100 * frac:.1f}% of {len(sel)}")
    return CriterionResult(11, "Basin render classes and invariance",
                           ok, detail, time.time() - t0, 120.0)


CHECKS: dict[int, Callable[[], CriterionResult]] = {
    1: check_1, 2: check_2, 3: check_3, 4: check_4, 5: check_5, 6: check_6,
    7: check_7, 8: check_8, 9: check_9, 10: check_10, 11: check_11,
}


_STEP_AWARE = {5, 6, 7, 8, 9, 10}


def run_criteria(indices: Optional[list[int]] = None,
                 report: Optional[Callable[[str], None]] = None,
                 step: float = DEFAULT_STEP) -> list[CriterionResult]:
    """Run the selected acceptance criteria (all by default), in order.

    step is the flow integrator step used by the flow-based checks; the
    default is the pinned experimental value, and a deliberately coarse
    value makes those checks fail (negative control for the driver).
    """
    results = []
    for idx in sorted(indices or CHECKS):
        if idx not in CHECKS:
            raise ValueError(f"unknown criterion index {idx}")
        t0 = time.time()
        try:
            res = CHECKS[idx](step) if idx in _STEP_AWARE else CHECKS[idx]()
        except Exception as exc:  # honest failure, never silent
            res = CriterionResult(idx, CHECKS[idx].__doc__.splitlines()[0],
                                  False, f"raised {type(exc).__name__}: {exc}",
                                  time.time() - t0, 0.0)
        if res.budget and res.elapsed >= res.budget:
            res.passed = False
            res.detail += " [over budget]"
        if report is not None:
            report(res.line)
        results.append(res)
    return results

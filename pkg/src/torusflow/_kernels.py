"""Compiled numerical core shared by the map, field, and flow layers.

Everything here is nopython numba. Geometry conventions:

* Torus points live in [0,1)^2; map and field evaluations first move the
  point to the centered fundamental domain [-1/2,1/2)^2.
* (u, s) are coordinates in the orthonormal eigenbasis e_u = (L, 1)/BN,
  e_s = (-1, L)/BN of the linear part, L the larger eigenvalue and
  BN = sqrt(1 + L^2).
* The perturbed map scales u by d = L^2 + beta * k(2 r) and s by L^{-2},
  where r is the distance to the origin in the centered domain and k is a
  C^1 (quartic) or C^2 (sextic) bump supported on [0, 1].
* The stable direction field is v(x) = e_s + c(x) e_u with c given by a
  geometric-type series driven by the Jacobian entries a, b; it satisfies
  a c(x) + b = L^{-2} c(f x).

Status codes returned instead of exceptions (numba cannot raise rich errors):
0 ok, 1 stable-field series did not settle, 2 unused slot kept for crossing
wrappers, 3 transversality margin violated, 4 crossing buffer overflow.
"""

import math

import numpy as np
from numba import njit

LAM = (1.0 + math.sqrt(5.0)) / 2.0
LAM2 = LAM + 1.0            # larger eigenvalue of the linear part
LAMI2 = 2.0 - LAM           # its reciprocal, the stable multiplier
BN = math.sqrt(1.0 + LAM * LAM)

STATUS_OK = 0
STATUS_SERIES = 1
STATUS_NO_CROSSING = 2
STATUS_TRANSVERSALITY = 3
STATUS_BUFFER = 4

BUMP_QUARTIC = 0
BUMP_SEXTIC = 1


@njit(cache=True)
def wrap_half(v):
    """Representative in [-1/2, 1/2)."""
    return v - math.floor(v + 0.5)


@njit(cache=True)
def wrap_unit(v):
    """Representative in [0, 1)."""
    return v - math.floor(v)


@njit(cache=True)
def bump_kkp(rho, tag):
    """Bump profile k and its derivative k' at radius rho.

    Quartic (1 - rho^2)^2 is C^1 across rho = 1; sextic (1 - rho^2)^3 is C^2.
    Both equal 1 at rho = 0 and vanish outside [0, 1].
    """
    if rho >= 1.0:
        return 0.0, 0.0
    w = 1.0 - rho * rho
    if tag == BUMP_SEXTIC:
        return w * w * w, -6.0 * rho * w * w
    return w * w, -4.0 * rho * w


@njit(cache=True)
def map_uv(x, y, beta, tag):
    """One application of the perturbed map plus Jacobian entries.

    Returns (xn, yn, a, b): the unwrapped image of the centered
    representative of (x, y), and the Jacobian in the (e_u, e_s) basis,
    which is upper triangular [[a, b], [0, L^{-2}]].
    """
    xh = wrap_half(x)
    yh = wrap_half(y)
    u = (LAM * xh + yh) / BN
    s = (-xh + LAM * yh) / BN
    r = math.sqrt(xh * xh + yh * yh)
    if r > 1e-300:
        k, kp = bump_kkp(2.0 * r, tag)
        d = LAM2 + beta * k
        a = d + 2.0 * beta * kp * u * u / r
        b = 2.0 * beta * kp * u * s / r
    else:
        d = LAM2 + beta
        a = d
        b = 0.0
    un = d * u
    sn = LAMI2 * s
    xn = (LAM * un - sn) / BN
    yn = (un + LAM * sn) / BN
    return xn, yn, a, b


@njit(cache=True)
def iterate_map(x, y, beta, tag, n):
    """n forward applications, wrapped to [0,1)^2."""
    cx = x
    cy = y
    for _ in range(n):
        cx, cy, _, _ = map_uv(cx, cy, beta, tag)
        cx = wrap_unit(cx)
        cy = wrap_unit(cy)
    return cx, cy


@njit(cache=True)
def stable_ucomp(x, y, beta, tag, tol, max_terms, sup_b):
    """u-component c(x) of the stable field v = e_s + c e_u.

    c(x) = -sum_{i>=0} L^{-2i} b(f^i x) / prod_{j<=i} a(f^j x). Truncation
    stops when either the rigorous tail envelope |pref| L^{-2} sup_b /
    (1 - L^{-2}) falls below tol (valid whenever the upcoming a stay >= 1),
    or six consecutive computed terms fall below tol / 4 (the working rule
    near the attracting fixed point where a < 1 but b -> 0 quadratically).
    Returns (c, status).
    """
    c = 0.0
    pref = 1.0
    cx = x
    cy = y
    consec = 0
    for _ in range(max_terms):
        xn, yn, a, b = map_uv(cx, cy, beta, tag)
        pref /= a
        term = b * pref
        c -= term
        env = abs(pref) * LAMI2 * sup_b / (1.0 - LAMI2)
        if env < tol:
            return c, STATUS_OK
        if abs(term) < 0.25 * tol:
            consec += 1
            if consec >= 6:
                return c, STATUS_OK
        else:
            consec = 0
        pref *= LAMI2
        cx = wrap_unit(xn)
        cy = wrap_unit(yn)
    return c, STATUS_SERIES


@njit(cache=True)
def field_eval(x, y, beta, tag, tol, max_terms, sup_b, renorm, wpx, wpy):
    """Stable field in torus coordinates, optionally renormalized.

    Raw: v = c e_u + e_s. Renormalized: v / <v, wperp> with wperp = (wpx,
    wpy), making the normal speed across the section's parallels exactly
    |(q,p)|. Returns (vx, vy, status).
    """
    c, st = stable_ucomp(x, y, beta, tag, tol, max_terms, sup_b)
    vx = (c * LAM - 1.0) / BN
    vy = (c + LAM) / BN
    if st != STATUS_OK:
        return vx, vy, st
    if renorm:
        dp = vx * wpx + vy * wpy
        if abs(dp) < 1e-12:
            return vx, vy, STATUS_TRANSVERSALITY
        vx /= dp
        vy /= dp
    return vx, vy, STATUS_OK


@njit(cache=True)
def obs_eval(x, y, tag):
    """Scalar observables on the torus selected by integer tag."""
    if tag == 0:
        return 1.0
    if tag == 1:
        return math.sin(2.0 * math.pi * x)
    if tag == 2:
        return math.cos(2.0 * math.pi * x)
    if tag == 3:
        return math.sin(2.0 * math.pi * y)
    if tag == 4:
        return math.cos(2.0 * math.pi * y)
    if tag == 5:
        return math.sin(2.0 * math.pi * (x + y))
    if tag == 6:
        return math.cos(2.0 * math.pi * (x + y))
    if tag == 7:
        return math.sin(2.0 * math.pi * x) * math.cos(2.0 * math.pi * y)
    return 0.0


@njit(cache=True)
def rk4_increment(x, y, h, beta, tag, tol, max_terms, sup_b, renorm,
                  wpx, wpy, obs_tag):
    """One classical RK4 step of size h (signed).

    Returns (dx, dy, dH, status) where dH is the same-stage quadrature of the
    observable along the step, i.e. the RK4 update of the augmented integral
    variable H' = f(z).
    """
    k1x, k1y, st = field_eval(x, y, beta, tag, tol, max_terms, sup_b,
                              renorm, wpx, wpy)
    if st != STATUS_OK:
        return 0.0, 0.0, 0.0, st
    f1 = obs_eval(x, y, obs_tag)
    x2 = x + 0.5 * h * k1x
    y2 = y + 0.5 * h * k1y
    k2x, k2y, st = field_eval(x2, y2, beta, tag, tol, max_terms, sup_b,
                              renorm, wpx, wpy)
    if st != STATUS_OK:
        return 0.0, 0.0, 0.0, st
    f2 = obs_eval(x2, y2, obs_tag)
    x3 = x + 0.5 * h * k2x
    y3 = y + 0.5 * h * k2y
    k3x, k3y, st = field_eval(x3, y3, beta, tag, tol, max_terms, sup_b,
                              renorm, wpx, wpy)
    if st != STATUS_OK:
        return 0.0, 0.0, 0.0, st
    f3 = obs_eval(x3, y3, obs_tag)
    x4 = x + h * k3x
    y4 = y + h * k3y
    k4x, k4y, st = field_eval(x4, y4, beta, tag, tol, max_terms, sup_b,
                              renorm, wpx, wpy)
    if st != STATUS_OK:
        return 0.0, 0.0, 0.0, st
    f4 = obs_eval(x4, y4, obs_tag)
    dx = h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0
    dy = h * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0
    dH = h * (f1 + 2.0 * f2 + 2.0 * f3 + f4) / 6.0
    return dx, dy, dH, STATUS_OK


@njit(cache=True)
def rk4_run(x0, y0, T, h, beta, tag, tol, max_terms, sup_b, renorm,
            wpx, wpy, obs_tag, p, q, eta0, capture, stop_after, margin_min,
            cross_t, cross_H, cross_x, cross_y, cross_lvl):
    """Integrate the stable-field flow for signed time T with fixed step h.

    State: wrapped position (x, y), observable integral H, and the lift
    coordinate eta = q Y - p X accumulated through unwrapped increments, so
    integer levels of eta are exactly the lifts of the section through the
    origin with direction (q, p).

    When capture is true, each step is checked for a level crossing (steps
    are far shorter than the level spacing, so at most one per step); the
    crossing is located by bisecting the substep length to 1e-10 in time and
    recorded into the cross_* buffers. stop_after > 0 ends the run at that
    many crossings with the state placed exactly at the last crossing.

    Returns (x, y, H, eta, t_end, ncross, status).
    """
    x = wrap_unit(x0)
    y = wrap_unit(y0)
    H = 0.0
    eta = eta0
    t = 0.0
    ncross = 0
    cap = cross_t.shape[0]

    n_full = int(math.floor(abs(T) / h))
    sgn = 1.0 if T >= 0.0 else -1.0
    rem = abs(T) - n_full * h
    if rem < 1e-15 * max(1.0, abs(T)):
        rem = 0.0

    total_steps = n_full + (1 if rem > 0.0 else 0)
    for istep in range(total_steps):
        hs = sgn * (h if istep < n_full else rem)
        dx, dy, dH, st = rk4_increment(x, y, hs, beta, tag, tol, max_terms,
                                       sup_b, renorm, wpx, wpy, obs_tag)
        if st != STATUS_OK:
            return x, y, H, eta, t, ncross, st
        deta = q * dy - p * dx
        if capture and deta != 0.0:
            if deta > 0.0:
                lvl = math.floor(eta) + 1.0
                hit = eta + deta >= lvl
            else:
                lvl = math.ceil(eta) - 1.0
                hit = eta + deta <= lvl
            if hit:
                # Bisect the substep length from the pre-step state.
                lo = 0.0
                hi = hs
                fx = x
                fy = y
                fH = 0.0
                feta = eta
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    mdx, mdy, mdH, st = rk4_increment(
                        x, y, mid, beta, tag, tol, max_terms, sup_b,
                        renorm, wpx, wpy, obs_tag)
                    if st != STATUS_OK:
                        return x, y, H, eta, t, ncross, st
                    meta = eta + q * mdy - p * mdx
                    if (deta > 0.0 and meta >= lvl) or (deta < 0.0 and meta <= lvl):
                        hi = mid
                    else:
                        lo = mid
                        fx = x + mdx
                        fy = y + mdy
                        fH = mdH
                        feta = meta
                    if abs(hi - lo) < 1e-10:
                        break
                tc = t + 0.5 * (lo + hi)
                # Transversality margin: normal-direction component of the
                # raw field at the event, per unit field length.
                cze, _ = stable_ucomp(fx, fy, beta, tag, tol, max_terms, sup_b)
                rvx = (cze * LAM - 1.0) / BN
                rvy = (cze + LAM) / BN
                margin = abs(rvx * wpx + rvy * wpy) / math.hypot(rvx, rvy)
                if margin < margin_min:
                    return fx, fy, H + fH, feta, tc, ncross, STATUS_TRANSVERSALITY
                if ncross >= cap:
                    return x, y, H, eta, t, ncross, STATUS_BUFFER
                cross_t[ncross] = tc
                cross_H[ncross] = H + fH
                cross_x[ncross] = wrap_unit(fx)
                cross_y[ncross] = wrap_unit(fy)
                cross_lvl[ncross] = lvl
                ncross += 1
                if stop_after > 0 and ncross >= stop_after:
                    return (wrap_unit(fx), wrap_unit(fy), H + fH, lvl, tc,
                            ncross, STATUS_OK)
        x = wrap_unit(x + dx)
        y = wrap_unit(y + dy)
        H += dH
        eta += deta
        t += hs
    return x, y, H, eta, t, ncross, STATUS_OK


@njit(cache=True)
def contraction_residuals(xs, ys, beta, tag, tol, max_terms, sup_b, out):
    """|a c + b - L^{-2} c(f x)| at each sample point; returns worst status."""
    worst = STATUS_OK
    for i in range(xs.shape[0]):
        c0, st0 = stable_ucomp(xs[i], ys[i], beta, tag, tol, max_terms, sup_b)
        xn, yn, a, b = map_uv(xs[i], ys[i], beta, tag)
        c1, st1 = stable_ucomp(wrap_unit(xn), wrap_unit(yn), beta, tag, tol,
                               max_terms, sup_b)
        out[i] = abs(a * c0 + b - LAMI2 * c1)
        if st0 != STATUS_OK:
            worst = st0
        if st1 != STATUS_OK:
            worst = st1
    return worst


@njit(cache=True)
def basin_point(x0, y0, beta, tag, max_iter, capture_radius):
    """Classify one point: (1, entry_iter) attracted, (0, iters) undecided.

    A point is attracted when its orbit enters the capture ball around the
    origin and stays there for 20 further iterations, ending strictly closer
    than it entered. When the local expansion rate L^2 + beta is >= 1 the
    origin is not attracting and everything is undecided by definition.
    """
    if LAM2 + beta >= 1.0:
        return 0, 0
    x = wrap_unit(x0)
    y = wrap_unit(y0)
    it = 0
    while it < max_iter:
        xh = wrap_half(x)
        yh = wrap_half(y)
        r = math.sqrt(xh * xh + yh * yh)
        if r == 0.0:
            return 1, it
        if r <= capture_radius:
            sx = x
            sy = y
            ok = True
            rr = r
            for _ in range(20):
                xn, yn, _, _ = map_uv(sx, sy, beta, tag)
                sx = wrap_unit(xn)
                sy = wrap_unit(yn)
                xh = wrap_half(sx)
                yh = wrap_half(sy)
                rr = math.sqrt(xh * xh + yh * yh)
                if rr > capture_radius:
                    ok = False
                    break
            if ok and rr < r:
                return 1, it
        xn, yn, _, _ = map_uv(x, y, beta, tag)
        x = wrap_unit(xn)
        y = wrap_unit(yn)
        it += 1
    return 0, max_iter


@njit(cache=True)
def basin_grid(width, height, beta, tag, max_iter, capture_radius, img):
    """Fill img (height x width, uint8) with 255 attracted / 0 undecided.

    Pixel (row, col) samples the point (col / width, row / height).
    """
    for row in range(height):
        for col in range(width):
            code, _ = basin_point(col / width, row / height, beta, tag,
                                  max_iter, capture_radius)
            img[row, col] = 255 if code == 1 else 0


@njit(cache=True)
def orbit_points(x0, y0, beta, tag, n, out_x, out_y):
    """First n points of the forward orbit, wrapped, including the start."""
    x = wrap_unit(x0)
    y = wrap_unit(y0)
    for i in range(n):
        out_x[i] = x
        out_y[i] = y
        x, y, _, _ = map_uv(x, y, beta, tag)
        x = wrap_unit(x)
        y = wrap_unit(y)

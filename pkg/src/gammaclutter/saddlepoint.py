"""Survival functions from the MGF by saddle-point Laplace inversion.

The survival function of the summed power is the Bromwich integral of
M(s) e^{sv} / (-s).  With the phase

    Phi(s; v) = ln M(s) - ln(-s) + s v            (right tail, s0 < 0)

the integration contour is deformed onto the steepest-descent path through
the real saddle s0 (the unique stationary point of Phi on the pole-free
interval).  Reparametrizing by tau(z) = Phi(s0) - Phi(s0 - z/v) turns the
path integral into an e^{-tau}-weighted average of Im z(tau):

    F(v) = e^{Phi(s0)} / (pi v) * integral_0^inf e^{-tau} Im z(tau) dtau.

Im z(tau) = sqrt(tau) * (analytic in tau), so the integral is evaluated with
generalized Gauss-Laguerre nodes (weight sqrt(tau) e^{-tau}) and z(tau) is
recovered by damped complex Newton on the upper branch.  For power levels
below the mean the same machinery runs on the positive saddle of the CDF
phase (ln(-s) -> ln(s)) and the complement is returned.

Large pulse counts are kept cheap by collapsing the many small-coefficient
log terms of tau into machine-exact power-sum series (TauEvaluator), so an
exact-phase Newton costs O(few logs + series) per node instead of O(M).
A Pade-compressed tau phase (explicit extreme poles, diagonal approximant
of the residual series, exact-phase validation) is also provided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.special import roots_genlaguerre

from .errors import DegenerateV, NoConvergence, PadePoleOnPath
from .mgf_core import RationalMgf, SteadyMgf

DEFAULT_TAU_ORDER = 48
SADDLE_MAX_ITER = 200
NEWTON_MAX_ITER = 60


class Side(Enum):
    RIGHT_TAIL = "right"   # s0 < 0, direct survival integral
    LEFT_TAIL = "left"     # s0 > 0, CDF integral, survival = 1 - value


def _as_mgf(obj):
    if isinstance(obj, (RationalMgf, SteadyMgf)):
        return obj
    return obj.as_mgf()


def support_shift(mgf) -> float:
    """Deterministic offset of the distribution's lower support bound.

    Zero-eigenvalue poles of the steady-target MGF contribute pure
    exp(-S b s) factors, i.e. an additive constant; survival is exactly 1
    at or below the total shift.
    """
    if isinstance(mgf, SteadyMgf):
        return float(mgf.S * mgf.b[mgf.a == 0.0].sum())
    return 0.0


@lru_cache(maxsize=16)
def _gl_half_nodes(order: int):
    # Weight sqrt(tau) e^{-tau} on [0, inf); alpha = 1/2 generalized Laguerre.
    t, w = roots_genlaguerre(order, 0.5)
    return t, w


@dataclass
class SaddleState:
    """Saddle point and derived path data for one (v, texture-node) pair."""

    side: Side
    v: float
    s0: float
    r2: float
    phase0: float
    mean: float
    mgf: object
    c: np.ndarray | None = None     # rational: pole coefficients, index 0 first
    wc: np.ndarray | None = None
    cq: np.ndarray | None = None
    wq: np.ndarray | None = None
    kappa: int = 0
    # steady-target pieces: tau(z) = lam z + ln(1 - c0 z)
    #                              + sum [ln(1 - cs z) - gs z / (1 - cs z)]
    c0: float = 0.0
    cs: np.ndarray | None = None
    gs: np.ndarray | None = None
    lam: float = 1.0

    @property
    def r1(self) -> float:
        if self.c is not None:
            k = self.kappa
            return float(k * np.dot(self.wc, self.c)
                         - (k - 1) * np.dot(self.wq, self.cq))
        return float((1.0 - self.lam) + self.c0 + np.sum(self.cs + self.gs))


def phase(s, v: float, mgf, side: Side = Side.RIGHT_TAIL):
    """Helstrom phase ln M(s) - ln(-+s) + s v on the chosen branch."""
    mgf = _as_mgf(mgf)
    sgn = -1.0 if side is Side.RIGHT_TAIL else 1.0
    return mgf.log_mgf(s) - np.log(sgn * s) + s * v


def solve_saddle(v: float, mgf) -> SaddleState:
    """Locate the real saddle of the survival/CDF phase and bundle path data.

    The phase derivative f(s) = d ln M/ds - 1/s + v is strictly increasing on
    each branch (the MGF is log-convex), so a bracketed Newton iteration with
    bisection safeguard always converges.
    """
    if v <= 0.0:
        raise DegenerateV(f"power level v {v} must be positive")
    mgf = _as_mgf(mgf)
    mean = mgf.mean
    side = Side.RIGHT_TAIL if v >= mean else Side.LEFT_TAIL

    def f(s):
        return mgf.dlog(s) - 1.0 / s + v

    if side is Side.RIGHT_TAIL:
        lo = -(1.0 - 1e-12) / mgf.a_max
        hi = 0.5 * lo
        for _ in range(2000):
            if f(hi) > 0.0:
                break
            lo = hi
            hi *= 0.5
        else:
            raise NoConvergence("right-tail saddle bracket not found")
    else:
        lo = 1e-12
        hi = 1.0
        with np.errstate(over="ignore"):
            for _ in range(60):
                if f(hi) > 0.0:
                    break
                lo = hi
                hi *= 2.0
                if hi > 1e15:
                    raise NoConvergence(
                        "left-tail saddle beyond search range; v is at the "
                        "lower support bound")
            else:
                raise NoConvergence("left-tail saddle bracket not found")

    x = 0.5 * (lo + hi)
    tol = 1e-11 * max(1.0, abs(v))
    for _ in range(SADDLE_MAX_ITER):
        fx = f(x)
        if fx < 0.0:
            lo = x
        else:
            hi = x
        if abs(fx) < tol:
            break
        fp = mgf.d2log(x) + 1.0 / (x * x)
        step = fx / fp
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if x_new == x:
            break
        x = x_new
    else:
        raise NoConvergence(f"saddle iteration stalled at v={v}")

    s0 = x
    r2 = (mgf.d2log(s0) + 1.0 / (s0 * s0)) / (v * v)
    phase0 = float(mgf.log_mgf(s0)) - math.log(abs(s0)) + s0 * v
    state = SaddleState(side, v, s0, r2, phase0, mean, mgf)

    if isinstance(mgf, RationalMgf):
        c = np.where(mgf.a > 0.0, mgf.a / (v * (1.0 + mgf.a * s0)), 0.0)
        cq = np.where(mgf.aq > 0.0, mgf.aq / (v * (1.0 + mgf.aq * s0)), 0.0)
        c0 = 1.0 / (s0 * v)
        state.c = np.concatenate(([c0], c))
        state.wc = np.concatenate(([1.0], mgf.wa))
        state.cq = np.concatenate(([c0], cq))
        state.wq = np.concatenate(([1.0], mgf.wq))
        state.kappa = mgf.kappa
    else:
        # Zero-eigenvalue poles carry exactly linear tau terms; fold them
        # into the linear coefficient to avoid catastrophic cancellation.
        g = mgf.S * mgf.b / (v * (1.0 + mgf.a * s0) ** 2)
        nz = mgf.a > 0.0
        state.c0 = 1.0 / (s0 * v)
        state.cs = mgf.a[nz] / (v * (1.0 + mgf.a[nz] * s0))
        state.gs = g[nz]
        state.lam = 1.0 - float(g[~nz].sum())
    return state


def tau_phase(z, state: SaddleState):
    """tau(z) = Phi(s0) - Phi(s0 - z/v), exact log form, upper branch."""
    z = np.asarray(z, dtype=complex)
    if state.c is not None:
        k = state.kappa
        val = z + k * (np.log(1.0 - np.multiply.outer(z, state.c)) @ state.wc)
        if k != 1:
            val -= (k - 1) * (np.log(1.0 - np.multiply.outer(z, state.cq))
                              @ state.wq)
        return val
    one_m = 1.0 - np.multiply.outer(z, state.cs)
    val = state.lam * z + np.log(1.0 - state.c0 * z) + np.log(one_m).sum(axis=-1)
    val -= (np.multiply.outer(z, state.gs) / one_m).sum(axis=-1)
    return val


def _tau_prime(z, state: SaddleState):
    z = np.asarray(z, dtype=complex)
    if state.c is not None:
        k = state.kappa
        val = 1.0 - k * ((state.c / (1.0 - np.multiply.outer(z, state.c)))
                         @ state.wc)
        if k != 1:
            val += (k - 1) * ((state.cq / (1.0 - np.multiply.outer(z, state.cq)))
                              @ state.wq)
        return val
    one_m = 1.0 - np.multiply.outer(z, state.cs)
    val = state.lam - state.c0 / (1.0 - state.c0 * z)
    val = val - (state.cs / one_m).sum(axis=-1) - (state.gs / one_m ** 2).sum(axis=-1)
    return val


class TauEvaluator:
    """Exact tau/tau' with the small-coefficient bulk collapsed to power sums.

    ln(1 - c z) terms with |c| below ratio/z_top are exactly representable by
    their combined power-sum series over the inversion range |z| <= z_top,
    leaving only the few large coefficients as true complex logs.  This keeps
    large-M evaluations at O(#big + terms) instead of O(M) logarithms.
    """

    __slots__ = ("state", "z_top", "big_c", "big_wc", "big_cq", "big_wq",
                 "poly", "dpoly")

    def __init__(self, state: SaddleState, z_top: float, ratio: float = 0.5,
                 terms: int = 60):
        self.state = state
        self.z_top = z_top
        c_split = ratio / z_top
        k = np.arange(1, terms + 1)

        def split(vals, wts):
            bulk = np.abs(vals) < c_split
            p = (wts[bulk, None] * vals[bulk, None] ** k).sum(axis=0)
            return vals[~bulk], wts[~bulk], p

        kap = state.kappa
        self.big_c, self.big_wc, p_c = split(state.c, state.wc)
        self.big_cq, self.big_wq, p_q = split(state.cq, state.wq)
        q_k = kap * p_c - (kap - 1) * p_q
        # tau_bulk(z) = -sum_k q_k z^k / k ; derivative -sum_k q_k z^(k-1)
        self.poly = -q_k / k
        self.dpoly = -q_k

    def _horner(self, coef, z):
        out = np.zeros_like(z)
        for a in coef[::-1]:
            out = out * z + a
        return out

    def value(self, z, _state=None):
        z = np.asarray(z, dtype=complex)
        if np.max(np.abs(z)) > self.z_top:
            return tau_phase(z, self.state)
        kap = self.state.kappa
        val = z + z * self._horner(self.poly, z)
        val += kap * (np.log(1.0 - np.multiply.outer(z, self.big_c))
                      @ self.big_wc)
        if kap != 1:
            val -= (kap - 1) * (np.log(1.0 - np.multiply.outer(z, self.big_cq))
                                @ self.big_wq)
        return val

    def derivative(self, z, _state=None):
        z = np.asarray(z, dtype=complex)
        if np.max(np.abs(z)) > self.z_top:
            return _tau_prime(z, self.state)
        kap = self.state.kappa
        val = 1.0 + self._horner(self.dpoly, z)
        val -= kap * ((self.big_c / (1.0 - np.multiply.outer(z, self.big_c)))
                      @ self.big_wc)
        if kap != 1:
            val += (kap - 1) * ((self.big_cq /
                                 (1.0 - np.multiply.outer(z, self.big_cq)))
                                @ self.big_wq)
        return val


def _exact_tau_fns(state: SaddleState, t_top: float):
    """Pick the exact-phase evaluator pair for the node range [0, t_top]."""
    if state.c is None or state.c.size < 24:
        return tau_phase, _tau_prime
    z_top = 1.5 * t_top + 8.0 / math.sqrt(state.r2) + 8.0
    te = TauEvaluator(state, z_top)
    return te.value, te.derivative


def _kept_nodes(order: int):
    t, w = _gl_half_nodes(order)
    keep = w > 1e-24 * w.max()
    return t[keep], w[keep]


def _newton_tols(taus, z):
    # Absolute floor plus roundoff allowance for large |z| evaluations.
    return 1e-13 * np.maximum(1.0, taus) + 2e-14 * np.abs(z)


def _newton_batch(taus, state, tau_fn, tau_prime_fn, z0):
    """Damped Newton for tau(z) = tau on the Im z > 0 branch; only still-
    active nodes are evaluated each sweep."""
    z = np.array(z0, dtype=complex)
    resid = tau_fn(z, state) - taus
    for _ in range(NEWTON_MAX_ITER):
        act = np.flatnonzero(np.abs(resid) > _newton_tols(taus, z))
        if act.size == 0:
            break
        za, ra, ta = z[act], resid[act], taus[act]
        d = tau_prime_fn(za, state)
        d = np.where(np.abs(d) < 1e-300, 1e-300, d)
        step = -ra / d
        scale = np.ones(act.size)
        for _ in range(30):
            z_try = za + scale * step
            r_try = tau_fn(z_try, state) - ta
            bad = (z_try.imag <= 0.0) | (np.abs(r_try) > np.abs(ra))
            if not bad.any():
                break
            scale = np.where(bad, 0.5 * scale, scale)
        ok = (z_try.imag > 0.0) & (np.abs(r_try) <= np.abs(ra))
        z[act[ok]] = z_try[ok]
        resid[act[ok]] = r_try[ok]
    return z, np.abs(resid) <= _newton_tols(taus, z)


def _march_to(state, t_target, tau_fn, tau_prime_fn, z_from=0j, t_from=0.0,
              budget=400):
    """Adaptive continuation in tau with bisected steps on Newton failure."""
    t, z = t_from, z_from
    pending = [float(t_target)]
    steps = 0
    while pending:
        tt = pending[-1]
        guesses = []
        if t > 0.0:
            guesses += [z * (tt / t), z * math.sqrt(tt / t)]
        guesses.append(1j * math.sqrt(2.0 * tt / state.r2))
        solved = False
        for gz in guesses:
            zz, ok = _newton_batch(np.array([tt]), state, tau_fn,
                                   tau_prime_fn, np.array([gz]))
            if ok[0]:
                z, t = complex(zz[0]), tt
                pending.pop()
                solved = True
                break
        if not solved:
            steps += 1
            if steps > budget or tt - t < 1e-12 * max(1.0, tt):
                raise NoConvergence(f"tau continuation stalled near tau={tt}")
            pending.append(0.5 * (t + tt))
    return z


def invert_tau(tau, state: SaddleState):
    """Root z of tau(z) = tau on the steepest-descent branch (Im z > 0)."""
    if tau == 0.0:
        return 0.0 + 0.0j
    taus = np.array([float(tau)])
    z0 = 1j * np.sqrt(2.0 * taus / state.r2)
    z, ok = _newton_batch(taus, state, tau_phase, _tau_prime, z0)
    if ok[0]:
        return complex(z[0])
    return _march_to(state, float(tau), tau_phase, _tau_prime)


def _invert_nodes(state, taus, tau_fn=tau_phase, tau_prime_fn=_tau_prime,
                  z_init=None):
    """Invert tau at all quadrature nodes; continuation fallback on failure."""
    if z_init is None:
        z_init = 1j * np.sqrt(2.0 * taus / state.r2)
    z, ok = _newton_batch(taus, state, tau_fn, tau_prime_fn, z_init)
    if ok.all():
        return z
    z_prev = 0.0 + 0.0j
    t_prev = 0.0
    for i, t in enumerate(taus):
        if ok[i]:
            z_prev, t_prev = complex(z[i]), float(t)
            continue
        z_prev = _march_to(state, float(t), tau_fn, tau_prime_fn,
                           z_from=z_prev, t_from=t_prev)
        t_prev = float(t)
        z[i] = z_prev
    return z


def _assemble(state: SaddleState, correction: float) -> float:
    with np.errstate(under="ignore"):
        val = math.exp(state.phase0) / (math.pi * state.v) * correction
    if state.side is Side.LEFT_TAIL:
        val = 1.0 - val
    return min(max(val, 0.0), 1.0)


def survival_sdp(v: float, coeffs, order: int = DEFAULT_TAU_ORDER) -> float:
    """Steepest-descent-path survival: numerically exact for the given MGF."""
    mgf = _as_mgf(coeffs)
    if v <= support_shift(mgf) * (1.0 + 1e-12):
        return 1.0
    state = solve_saddle(v, mgf)
    t, w = _kept_nodes(order)
    tau_fn, tau_pr = _exact_tau_fns(state, float(t[-1]))
    z = _invert_nodes(state, t, tau_fn, tau_pr)
    corr = float(np.dot(w, z.imag / np.sqrt(t)))
    return _assemble(state, corr)


def survival_sp(v: float, coeffs) -> float:
    """Basic saddle-point approximation e^{Phi(s0)} / (v sqrt(2 pi r2))."""
    mgf = _as_mgf(coeffs)
    if v <= support_shift(mgf) * (1.0 + 1e-12):
        return 1.0
    state = solve_saddle(v, mgf)
    with np.errstate(under="ignore"):
        val = math.exp(state.phase0) / (state.v * math.sqrt(2.0 * math.pi
                                                            * state.r2))
    if state.side is Side.LEFT_TAIL:
        val = 1.0 - val
    return min(max(val, 0.0), 1.0)


@dataclass
class PadePhase:
    """Compressed tau phase: explicit logs plus a diagonal Pade residual."""

    state: SaddleState
    c0: float
    cbar: float
    cqbar: float
    c_top: float
    cq_top: float
    w_pool: float
    num: np.ndarray      # residual numerator coefficients (z^2, z^3)
    den: np.ndarray      # residual denominator [1, d1, d2, d3]
    num2: np.ndarray = None   # lower-order (2,2) variant for error estimates
    den2: np.ndarray = None

    def residual(self, z, order=3):
        z = np.asarray(z, dtype=complex)
        if order == 3:
            num = z * z * (self.num[0] + self.num[1] * z)
            den = 1.0 + z * (self.den[1] + z * (self.den[2]
                                                + z * self.den[3]))
        else:
            num = z * z * self.num2[0]
            den = 1.0 + z * (self.den2[1] + z * self.den2[2])
        return num / den

    def value(self, z, _state=None):
        z = np.asarray(z, dtype=complex)
        k = self.state.kappa
        w = self.w_pool
        val = z + np.log(1.0 - self.c0 * z)
        val += k * (w * np.log(1.0 - self.cbar * z)
                    + np.log(1.0 - self.c_top * z))
        val -= (k - 1) * (w * np.log(1.0 - self.cqbar * z)
                          + np.log(1.0 - self.cq_top * z))
        z2 = z * z
        num = z2 * (self.num[0] + self.num[1] * z)
        den = 1.0 + z * (self.den[1] + z * (self.den[2] + z * self.den[3]))
        return val + num / den

    def derivative(self, z, _state=None):
        z = np.asarray(z, dtype=complex)
        k = self.state.kappa
        w = self.w_pool
        val = 1.0 - self.c0 / (1.0 - self.c0 * z)
        val -= k * (w * self.cbar / (1.0 - self.cbar * z)
                    + self.c_top / (1.0 - self.c_top * z))
        val += (k - 1) * (w * self.cqbar / (1.0 - self.cqbar * z)
                          + self.cq_top / (1.0 - self.cq_top * z))
        num = z * z * (self.num[0] + self.num[1] * z)
        dnum = z * (2.0 * self.num[0] + 3.0 * self.num[1] * z)
        den = 1.0 + z * (self.den[1] + z * (self.den[2] + z * self.den[3]))
        dden = self.den[1] + z * (2.0 * self.den[2] + 3.0 * self.den[3] * z)
        return val + (dnum * den - num * dden) / (den * den)


def _split_top(values, weights):
    """Remove one multiplicity unit of the largest coefficient from the pool."""
    top = values[-1]
    w = weights.copy()
    w[-1] -= 1.0
    pool_w = w.sum()
    pool_mean = float(np.dot(w, values) / pool_w) if pool_w > 0 else 0.0
    return top, pool_mean, pool_w, w


def _pade_22(rho):
    if abs(rho[0]) < 1e-290:
        return np.zeros(1), np.array([1.0, 0.0, 0.0])
    d1 = -rho[1] / rho[0]
    d2 = -(rho[2] + d1 * rho[1]) / rho[0]
    return np.array([rho[0]]), np.array([1.0, d1, d2])


def _pade_residual(rbar):
    """Diagonal (3,3) and (2,2) Pade of -sum rbar_n z^n / n from n = 2..6."""
    rho = np.array([-rbar[n] / n for n in range(2, 7)])
    scale = np.max(np.abs(rho))
    if scale < 1e-290:
        zero = (np.zeros(2), np.array([1.0, 0.0, 0.0, 0.0]),
                np.zeros(1), np.array([1.0, 0.0, 0.0]))
        return zero
    num2, den2 = _pade_22(rho)
    A = np.array([[rho[1], rho[0], 0.0],
                  [rho[2], rho[1], rho[0]],
                  [rho[3], rho[2], rho[1]]])
    rhs = -rho[2:5]
    try:
        d = np.linalg.solve(A, rhs)
        if not np.all(np.isfinite(d)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        # degenerate system: the (2,2) form is already exact (geometric tail)
        return (np.array([num2[0], 0.0]),
                np.array([1.0, den2[1], den2[2], 0.0]), num2, den2)
    num = np.array([rho[0], rho[1] + d[0] * rho[0]])
    return num, np.array([1.0, d[0], d[1], d[2]]), num2, den2


def build_pade_phase(state: SaddleState) -> PadePhase:
    """Assemble the accelerated tau phase; raises PadePoleOnPath when the
    approximant's poles intrude on the inversion range."""
    if state.c is None:
        raise PadePoleOnPath("Pade compression requires the rational MGF")
    k = state.kappa
    c_top, cbar, w_pool, wc_pool = _split_top(state.c[1:], state.wc[1:])
    cq_top, cqbar, wq_pool, wq_pool_w = _split_top(state.cq[1:], state.wq[1:])
    rbar = {}
    for n in range(2, 7):
        rbar[n] = (k * (np.dot(wc_pool, state.c[1:] ** n)
                        - w_pool * cbar ** n)
                   - (k - 1) * (np.dot(wq_pool_w, state.cq[1:] ** n)
                                - wq_pool * cqbar ** n))
    num, den, num2, den2 = _pade_residual(rbar)
    if np.any(den[1:] != 0.0):
        poly = np.trim_zeros(den[::-1], "f")    # descending powers
        roots = np.roots(poly) if poly.size > 1 else np.array([])
        if roots.size:
            # Real-axis poles mirror the true log branch points and never
            # meet the upper-half descent path; reject only poles near the
            # path (well off the real axis within the node range) or inside
            # its initial vertical segment.
            t_max = _gl_half_nodes(DEFAULT_TAU_ORDER)[0][-1]
            reach = 1.5 * t_max + 10.0 / math.sqrt(state.r2)
            absr = np.abs(roots)
            on_path = (np.abs(roots.imag) > 0.1 * absr) & (absr < reach)
            too_central = absr < 2.0 / math.sqrt(state.r2)
            if np.any(on_path | too_central):
                raise PadePoleOnPath("Pade residual pole inside inversion range")
    return PadePhase(state, state.c[0], cbar, cqbar, c_top, cq_top, w_pool,
                     num, den, num2, den2)


def pade_survival(v: float, coeffs, quad_order: int = DEFAULT_TAU_ORDER) -> float:
    """SDP survival with Pade-accelerated inversion and guarded accuracy.

    The inversion runs on the compressed phase; its truncation error is
    estimated per node from the (3,3) vs (2,2) approximant difference, and
    only flagged nodes are validated and re-polished on the exact phase.
    Falls back to the full-series inversion when the approximant misbehaves,
    so the result tracks survival_sdp to well below 1e-6.
    """
    mgf = _as_mgf(coeffs)
    if not isinstance(mgf, RationalMgf):
        return survival_sdp(v, mgf, quad_order)
    state = solve_saddle(v, mgf)
    try:
        pp = build_pade_phase(state)
    except PadePoleOnPath:
        return survival_sdp(v, mgf, quad_order)
    t, w = _kept_nodes(quad_order)
    z = _invert_nodes(state, t, tau_fn=pp.value, tau_prime_fn=pp.derivative)
    tol = 1e-8 * np.maximum(1.0, t)
    est = np.abs(pp.residual(z, 3) - pp.residual(z, 2))
    bad = est > 0.2 * tol
    if bad.any():
        tau_fn, tau_pr = _exact_tau_fns(state, float(t[-1]))
        resid = np.abs(tau_fn(z[bad], state) - t[bad])
        really_bad = resid > tol[bad]
        if really_bad.any():
            idx = np.flatnonzero(bad)[really_bad]
            z_fix = _invert_nodes(state, t[idx], tau_fn, tau_pr,
                                  z_init=z[idx])
            z[idx] = z_fix
    corr = float(np.dot(w, z.imag / np.sqrt(t)))
    return _assemble(state, corr)

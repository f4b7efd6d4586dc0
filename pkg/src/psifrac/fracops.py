"""Fractional integral and derivative operators by product integration.

All operators are computed in the transformed variable s = Psi(sigma), which
removes Psi' from the integrand and reduces every weight choice to the Abel
kernel (S - s)^(mu-1).  Data is interpolated piecewise linearly in s and the
kernel moments are integrated exactly per subinterval, which makes the rule
exact for piecewise-linear data and keeps all quadrature weights nonnegative.

Two refinements handle endpoint singularities:

* weighted rule: data of the form (s - s0)^p * w(s) with w piecewise linear
  is integrated with exact doubly singular moments (via the regularized
  incomplete beta function) on every subinterval, so pure power data is
  reproduced to rounding.
* leading-interval model: when a sampled grid excludes the base point, the
  unsampled gap [s0, s_1] is modeled by the power law fitted through the
  first two samples, the natural local model for this operator family.

The two-sided derivative composes an inner integral, a three-point
derivative in s, and an outer integral; each stage peels off the detected
leading power so that endpoint-singular profiles are differentiated through
their smooth cofactor.  Sums are accumulated in a fixed order, so results
are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, GridError, SingularityError
from .psi import PsiFunction
from .special import beta_fn, gamma_fn, reg_inc_beta

__all__ = [
    "OrderPair", "SampledFunction", "gamma_fn", "beta_fn", "omega_weight",
    "frac_integral", "frac_integral_at_nodes", "frac_integral_weighted_start",
    "frac_integral_weighted_at_nodes", "hilfer_derivative_numeric",
    "plain_interval_weights", "weighted_lead_moment",
]

_EXPONENT_CLAMP = (-0.95, 8.0)


@dataclass(frozen=True)
class OrderPair:
    """Fractional order mu in (0,1) and interpolation type nu in [0,1].

    The derived exponent rho = mu + nu - mu*nu governs the endpoint weight
    (Psi(t)-Psi(a))^(rho-1) of solutions; rho equals 1 exactly when nu = 1.
    """

    mu: float
    nu: float

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise DomainError(f"mu must lie in (0,1), got {self.mu}")
        if not 0.0 <= self.nu <= 1.0:
            raise DomainError(f"nu must lie in [0,1], got {self.nu}")

    @property
    def rho(self) -> float:
        # nu = 1 must give exactly 1.0 (the unweighted branch keys off it);
        # the float expression mu + nu - mu*nu can round away from 1 there
        if self.nu == 1.0:
            return 1.0
        return self.mu + self.nu - self.mu * self.nu

    @property
    def inner_order(self) -> float:
        """(1-nu)(1-mu), order of the inner integral of the derivative."""
        return (1.0 - self.nu) * (1.0 - self.mu)

    @property
    def outer_order(self) -> float:
        """nu(1-mu), order of the outer integral of the derivative."""
        return self.nu * (1.0 - self.mu)


class SampledFunction:
    """Function values on a strictly increasing grid, with weight images."""

    __slots__ = ("nodes", "values", "s_nodes", "psi")

    def __init__(self, nodes, values, psi: PsiFunction):
        nodes = np.asarray(nodes, float)
        values = np.asarray(values, float)
        if nodes.ndim != 1 or nodes.shape != values.shape:
            raise GridError("nodes and values must be 1-d arrays of equal length")
        if len(nodes) < 2:
            raise GridError("need at least two sample nodes")
        if not np.all(np.diff(nodes) > 0.0):
            raise GridError("nodes must be strictly increasing")
        slack = 1e-12 * max(1.0, abs(psi.a), abs(psi.T))
        if nodes[0] < psi.a - slack or nodes[-1] > psi.T + slack:
            raise GridError(f"nodes outside weight domain [{psi.a}, {psi.T}]")
        if not np.all(np.isfinite(values)):
            raise GridError("sample values must be finite")
        self.nodes = nodes
        self.values = values
        self.psi = psi
        self.s_nodes = np.asarray(psi.eval(np.clip(nodes, psi.a, psi.T)), float)

    def __len__(self) -> int:
        return len(self.nodes)

    @staticmethod
    def from_callable(fn, psi: PsiFunction, n: int,
                      include_left: bool = True) -> "SampledFunction":
        """Sample fn on a grid of n points uniform in Psi over [a, T].

        include_left=False omits the base point, for data singular at a.
        """
        sa, sT = float(psi.eval(psi.a)), float(psi.eval(psi.T))
        if include_left:
            s = np.linspace(sa, sT, n)
        else:
            s = sa + (sT - sa) * np.arange(1, n + 1) / n
        t = np.atleast_1d(np.asarray(psi.inverse(s), float))
        t[-1] = psi.T
        if include_left:
            t[0] = psi.a
        return SampledFunction(t, np.asarray([fn(tv) for tv in t], float), psi)


def omega_weight(order: OrderPair, psi: PsiFunction, t: float,
                 a: Optional[float] = None) -> float:
    """Homogeneous profile (Psi(t)-Psi(a))^(rho-1) / Gamma(rho).

    For rho = 1 this is exactly 1 for every t >= a.  For rho < 1 the value
    diverges as t -> a+, so t = a is rejected.
    """
    base = psi.a if a is None else float(a)
    rho = order.rho
    if t < base:
        raise DomainError(f"t={t} precedes the base point {base}")
    if rho == 1.0:
        return 1.0
    if t == base:
        raise SingularityError(f"weight diverges at t = a = {base} for rho < 1")
    x = float(psi.eval(t)) - float(psi.eval(base))
    return x ** (rho - 1.0) / gamma_fn(rho)


# ------------------------------------------------------------------ kernels

def plain_interval_weights(S, s_left, s_right, mu: float):
    """Weights (wL, wR) of the two endpoint values for one subinterval.

    Exact integrals of (S-s)^(mu-1) against the linear hat functions on
    [s_left, s_right]; both weights are nonnegative.  Vectorized over
    subintervals for a fixed evaluation point S.
    """
    dL = S - s_left
    dR = np.maximum(S - s_right, 0.0)
    h = s_right - s_left
    A = (dL ** mu - dR ** mu) / mu
    B = (dL ** (mu + 1.0) - dR ** (mu + 1.0)) / (mu + 1.0)
    wR = (dL * A - B) / h
    wL = (B - dR * A) / h
    return wL, wR


def weighted_lead_moment(S, s0, s_first, mu: float, rho: float):
    """Integral of (S-s)^(mu-1) (s-s0)^(rho-1) over [s0, min(s_first, S)].

    Vectorized over evaluation points S; zero where S <= s0.
    """
    D = np.asarray(S, float) - s0
    theta = np.where(D > 0.0, np.minimum((s_first - s0) / np.where(D > 0, D, 1.0), 1.0), 0.0)
    out = np.where(D > 0.0, D, 0.0) ** (rho + mu - 1.0) \
        * beta_fn(rho, mu) * reg_inc_beta(rho, mu, theta)
    return np.where(D > 0.0, out, 0.0)


def _fit_leading_power(x1, x2, v1, v2):
    """(A, p) with v ~ A x^p through two samples; (v1, 0) when degenerate."""
    if v1 == 0.0 or v2 == 0.0 or (v1 > 0.0) != (v2 > 0.0) or x1 <= 0.0:
        return v1, 0.0
    p = math.log(abs(v2) / abs(v1)) / math.log(x2 / x1)
    if not math.isfinite(p):
        return v1, 0.0
    p = min(max(p, _EXPONENT_CLAMP[0]), _EXPONENT_CLAMP[1])
    return v1 / x1 ** p, p


def _clip_at(s, v, S):
    """Restrict samples to [s[0], S]; appends an interpolated node at S."""
    j = int(np.searchsorted(s, S, side="right"))  # s[j-1] <= S < s[j]
    if j == 0:
        return None
    eps = 1e-15 * max(1.0, abs(S))
    if j == len(s) or S <= s[j - 1] + eps:
        return s[:j], v[:j]
    frac = (S - s[j - 1]) / (s[j] - s[j - 1])
    return (np.append(s[:j], S), np.append(v[:j], v[j - 1] + frac * (v[j] - v[j - 1])))


def _plain_single(s, v, mu, s0, lead):
    """Product-trapezoid integral from s0 to s[-1]; data sampled on s."""
    S = s[-1]
    if S <= s0:
        return 0.0
    acc = 0.0
    if lead is not None and s[0] > s0:
        A, p = lead
        acc += A * float(weighted_lead_moment(S, s0, s[0], mu, p + 1.0))
    if len(s) >= 2:
        wL, wR = plain_interval_weights(S, s[:-1], s[1:], mu)
        acc += float(np.add.reduce(wL * v[:-1] + wR * v[1:]))
    return acc / gamma_fn(mu)


def _plain_at_nodes(s, v, mu, s0, lead):
    n = len(s)
    out = np.zeros(n)
    gam = gamma_fn(mu)
    lead_vals = None
    if lead is not None and s[0] > s0:
        A, p = lead
        lead_vals = A * weighted_lead_moment(s, s0, s[0], mu, p + 1.0)
    for i in range(n):
        S = s[i]
        if S <= s0:
            continue
        acc = 0.0 if lead_vals is None else float(lead_vals[i])
        if i >= 1:
            wL, wR = plain_interval_weights(S, s[:i], s[1:i + 1], mu)
            acc += float(np.add.reduce(wL * v[:i] + wR * v[1:i + 1]))
        out[i] = acc / gam
    return out


def _lead_model(h: SampledFunction, s0: float):
    s = h.s_nodes
    if s[0] > s0 + 1e-14 * max(1.0, abs(s0)):
        return _fit_leading_power(s[0] - s0, s[1] - s0, h.values[0], h.values[1])
    return None


def frac_integral(h: SampledFunction, mu_eff: float, psi: PsiFunction,
                  t: float) -> float:
    """Order mu_eff integral of h with respect to psi, from a to t.

    The grid must start at a or, if it excludes a, the gap is modeled by the
    power law through the first two samples.  t may be any point between a
    and the last node (values between nodes use the linear interpolant).
    """
    if not 0.0 < mu_eff <= 1.0:
        raise DomainError(f"integral order must lie in (0,1], got {mu_eff}")
    base = psi.a
    if t == base:
        return 0.0
    if t < h.nodes[0]:
        raise GridError(f"t={t} precedes the first sample node {h.nodes[0]}")
    slack = 1e-12 * max(1.0, abs(h.nodes[-1]))
    if t > h.nodes[-1] + slack:
        raise GridError(f"t={t} beyond the last sample node {h.nodes[-1]}")
    s0 = float(psi.eval(base))
    S = float(psi.eval(min(t, psi.T)))
    clipped = _clip_at(h.s_nodes, h.values, S)
    if clipped is None:
        return 0.0
    return _plain_single(clipped[0], clipped[1], mu_eff, s0, _lead_model(h, s0))


def frac_integral_at_nodes(h: SampledFunction, mu_eff: float,
                           psi: PsiFunction) -> np.ndarray:
    """Order mu_eff integral evaluated at every sample node of h."""
    if not 0.0 < mu_eff <= 1.0:
        raise DomainError(f"integral order must lie in (0,1], got {mu_eff}")
    s0 = float(psi.eval(psi.a))
    return _plain_at_nodes(h.s_nodes, h.values, mu_eff, s0, _lead_model(h, s0))


# ------------------------------------------------------ weighted variants

def _weighted_single(s, w, mu, rho, s0, lead_mode):
    """Integral of (s-s0)^(rho-1) w(s) from s0 to s[-1], exact moments."""
    S = s[-1]
    x = s - s0
    D = x[-1]
    if D <= 0.0:
        return 0.0
    B0 = beta_fn(rho, mu)
    B1 = beta_fn(rho + 1.0, mu)
    th = np.clip(x / D, 0.0, 1.0)
    I0 = reg_inc_beta(rho, mu, th)
    I1 = reg_inc_beta(rho + 1.0, mu, th)
    c0 = D ** (mu + rho - 1.0) * B0
    c1 = D ** (mu + rho) * B1
    acc = w[0] * c0 * I0[0] if lead_mode == "const" else 0.0
    if len(s) >= 2:
        M0 = c0 * (I0[1:] - I0[:-1])
        M1 = c1 * (I1[1:] - I1[:-1])
        hh = s[1:] - s[:-1]
        wl, wr = w[:-1], w[1:]
        acc += float(np.add.reduce(wl * M0 + (wr - wl) / hh * (M1 - x[:-1] * M0)))
    return acc / gamma_fn(mu)


def _weighted_at_nodes(s, w, mu, rho, s0, lead_mode):
    """Integral of (s-s0)^(rho-1) w(s) at every node, w linear, exact moments.

    lead_mode: 'sampled' when s[0] == s0 (no gap), 'const' to extend w by
    w[0] over the gap [s0, s[0]].
    """
    x = s - s0
    n = len(s)
    out = np.zeros(n)
    B0 = beta_fn(rho, mu)
    B1 = beta_fn(rho + 1.0, mu)
    gam = gamma_fn(mu)
    for i in range(n):
        if x[i] <= 0.0:
            continue
        th = x[:i + 1] / x[i]
        I0 = reg_inc_beta(rho, mu, th)
        I1 = reg_inc_beta(rho + 1.0, mu, th)
        c0 = x[i] ** (mu + rho - 1.0) * B0
        c1 = x[i] ** (mu + rho) * B1
        acc = w[0] * c0 * I0[0] if lead_mode == "const" else 0.0
        if i >= 1:
            M0 = c0 * (I0[1:] - I0[:-1])
            M1 = c1 * (I1[1:] - I1[:-1])
            hh = s[1:i + 1] - s[:i]
            wl, wr = w[:i], w[1:i + 1]
            acc += float(np.add.reduce(wl * M0 + (wr - wl) / hh * (M1 - x[:i] * M0)))
        out[i] = acc / gam
    return out


def frac_integral_weighted_start(w: SampledFunction, mu_eff: float, rho: float,
                                 psi: PsiFunction, t: float) -> float:
    """Integral of order mu_eff applied to (Psi - Psi(a))^(rho-1) * w.

    w is the continuous cofactor of an endpoint-singular function; it is
    interpolated linearly and the doubly singular moments are integrated
    exactly on every subinterval, so the rule reproduces power data to
    rounding.  For rho = 1 this coincides with frac_integral on w.
    """
    if not 0.0 < mu_eff <= 1.0:
        raise DomainError(f"integral order must lie in (0,1], got {mu_eff}")
    if not 0.0 < rho <= 1.0:
        raise DomainError(f"rho must lie in (0,1], got {rho}")
    if rho == 1.0:
        return frac_integral(w, mu_eff, psi, t)
    base = psi.a
    if t == base:
        return 0.0
    s0 = float(psi.eval(base))
    near_base = abs(w.s_nodes[0] - s0) <= 1e-14 * max(1.0, abs(s0))
    if t < w.nodes[0] and not near_base:
        raise GridError(f"t={t} precedes the first sample node {w.nodes[0]}")
    slack = 1e-12 * max(1.0, abs(w.nodes[-1]))
    if t > w.nodes[-1] + slack:
        raise GridError(f"t={t} beyond the last sample node {w.nodes[-1]}")
    S = float(psi.eval(min(t, psi.T)))
    clipped = _clip_at(w.s_nodes, w.values, S)
    if clipped is None or clipped[0][-1] <= s0:
        return 0.0
    lead_mode = "sampled" if near_base else "const"
    return _weighted_single(clipped[0], clipped[1], mu_eff, rho, s0, lead_mode)


def frac_integral_weighted_at_nodes(w: SampledFunction, mu_eff: float, rho: float,
                                    psi: PsiFunction) -> np.ndarray:
    """Weighted-start integral evaluated at every sample node of w."""
    if not 0.0 < mu_eff <= 1.0:
        raise DomainError(f"integral order must lie in (0,1], got {mu_eff}")
    if not 0.0 < rho <= 1.0:
        raise DomainError(f"rho must lie in (0,1], got {rho}")
    if rho == 1.0:
        return frac_integral_at_nodes(w, mu_eff, psi)
    s0 = float(psi.eval(psi.a))
    near_base = abs(w.s_nodes[0] - s0) <= 1e-14 * max(1.0, abs(s0))
    lead_mode = "sampled" if near_base else "const"
    return _weighted_at_nodes(w.s_nodes, w.values, mu_eff, rho, s0, lead_mode)


# ------------------------------------------------------ numeric derivative

def _deriv3(s, g):
    """First derivative on a (possibly nonuniform) grid, 3-point stencils."""
    n = len(s)
    d = np.empty(n)
    hl = s[1:-1] - s[:-2]
    hr = s[2:] - s[1:-1]
    d[1:-1] = ((g[2:] - g[1:-1]) * hl / hr + (g[1:-1] - g[:-2]) * hr / hl) / (hl + hr)
    for i, (i0, i1, i2) in ((0, (0, 1, 2)), (n - 1, (n - 3, n - 2, n - 1))):
        x0, x1, x2 = s[i0], s[i1], s[i2]
        y0, y1, y2 = g[i0], g[i1], g[i2]
        xx = s[i]
        d[i] = (y0 * (2 * xx - x1 - x2) / ((x0 - x1) * (x0 - x2))
                + y1 * (2 * xx - x0 - x2) / ((x1 - x0) * (x1 - x2))
                + y2 * (2 * xx - x0 - x1) / ((x2 - x0) * (x2 - x1)))
    return d


def _detect_exponent(s, vals, s0) -> Optional[float]:
    x1, x2 = s[0] - s0, s[1] - s0
    v1, v2 = vals[0], vals[1]
    if x1 <= 0.0 or v1 == 0.0 or v2 == 0.0 or (v1 > 0.0) != (v2 > 0.0):
        return None
    p = math.log(abs(v2) / abs(v1)) / math.log(x2 / x1)
    if not math.isfinite(p) or abs(p) < 1e-12:
        return None
    return min(max(p, _EXPONENT_CLAMP[0]), _EXPONENT_CLAMP[1])


def _integral_auto(s, vals, mu, s0):
    """Integral on an open grid; leading exponent detected and peeled."""
    p = _detect_exponent(s, vals, s0)
    if p is None:
        lead = (vals[0], 0.0) if s[0] > s0 else None
        return _plain_at_nodes(s, vals, mu, s0, lead)
    x = s - s0
    w = vals / x ** p
    return _weighted_at_nodes(s, w, mu, p + 1.0, s0, "const")


def _peel_derivative(s, G, s0):
    """d/ds of G ~ x^g W(s): differentiate the smooth cofactor W."""
    g = _detect_exponent(s, G, s0)
    if g is None:
        return _deriv3(s, G)
    x = s - s0
    W = G / x ** g
    dW = _deriv3(s, W)
    return g * x ** (g - 1.0) * W + x ** g * dW


def hilfer_derivative_numeric(h: SampledFunction, order: OrderPair,
                              psi: PsiFunction) -> SampledFunction:
    """Two-sided derivative of order (mu, nu) of sampled data.

    Composition: inner integral of order (1-nu)(1-mu), then d/dPsi by
    three-point differences, then outer integral of order nu(1-mu).  Each
    stage peels the detected leading power of its data, so endpoint-singular
    profiles (x^(rho-1) and integrals of smooth data alike) are handled
    through their smooth cofactors.  A base-point sample, where the
    composition is not reliably computable, is dropped; the result is
    returned on the interior nodes (first and last node excluded).
    """
    if len(h) < 4:
        raise GridError("need at least 4 sample nodes for the derivative")
    s0 = float(psi.eval(psi.a))
    s = h.s_nodes
    vals = h.values
    nodes = h.nodes
    if s[0] <= s0 + 1e-14 * max(1.0, abs(s0)):
        s, vals, nodes = s[1:], vals[1:], nodes[1:]
    inner = order.inner_order
    outer = order.outer_order
    G = _integral_auto(s, vals, inner, s0) if inner > 0.0 else np.asarray(vals, float)
    dG = _peel_derivative(s, G, s0)
    out = _integral_auto(s, dG, outer, s0) if outer > 0.0 else dG
    return SampledFunction(nodes[1:-1], out[1:-1], psi)

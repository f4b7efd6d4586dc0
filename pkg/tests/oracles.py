"""Independent reference computations used by the tests.

Nothing here goes through the package's iteration or evaluation loops:
integrals are recomputed with mpmath's adaptive quadrature, and the discrete
fixed-point system is solved node by node with bracketing bisection (forward
substitution) rather than by global iteration.
"""

from __future__ import annotations

import mpmath
import numpy as np

from psifrac import expr as expr_mod
from psifrac.fracops import plain_interval_weights, weighted_lead_moment
from psifrac.solver import ProblemSpec, homogeneous_coefficient

mpmath.mp.dps = 30


def mp_frac_integral(fn, mu: float, s0: float, S: float) -> float:
    """High-precision (1/Gamma(mu)) int_{s0}^{S} (S-s)^(mu-1) fn(s) ds.

    fn is the integrand data expressed in the transformed variable s.
    """
    if S <= s0:
        return 0.0
    val = mpmath.quad(lambda s: (S - s) ** (mu - 1.0) * fn(float(s)), [s0, S])
    return float(val / mpmath.gamma(mu))


def mp_weighted_integral(w_fn, mu: float, rho: float, s0: float, S: float) -> float:
    """Same, for data (s-s0)^(rho-1) * w_fn(s) with both end singularities."""
    if S <= s0:
        return 0.0
    mid = 0.5 * (s0 + S)
    def integrand(s):
        return (S - s) ** (mu - 1.0) * (s - s0) ** (rho - 1.0) * w_fn(float(s))
    val = mpmath.quad(integrand, [s0, mid, S])
    return float(val / mpmath.gamma(mu))


def mp_gamma(x: float) -> float:
    return float(mpmath.gamma(x))


def mp_reg_inc_beta(a: float, b: float, x: float) -> float:
    return float(mpmath.betainc(a, b, 0, x, regularized=True))


def dense_fixed_point_solve(spec: ProblemSpec, nodes_per_segment: int,
                            bisect_tol: float = 1e-14) -> np.ndarray:
    """Solve the discrete integral-equation system by forward substitution.

    The same product-integration discretization the package assembles is
    written out row by row here, and each node's scalar equation
    w_i = c_i + x_i^(1-rho) * (history + self-weight * f(t_i, u_i(w_i)))
    is solved by expanding-bracket bisection.  No global fixed-point sweep
    is involved, so agreement with the iterative solver validates both the
    assembly and the iteration.
    """
    psi = spec.psi
    mu = spec.order.mu
    rho = spec.order.rho
    gamma_rho = float(mpmath.gamma(rho))
    gamma_mu = float(mpmath.gamma(mu))
    N = nodes_per_segment
    t_edges = [spec.a, *spec.impulses.times, spec.T]
    s_edges = [float(psi.eval(t)) for t in t_edges]
    nseg = len(t_edges) - 1
    s_all = np.concatenate([
        s_edges[k] + (s_edges[k + 1] - s_edges[k]) * np.arange(1, N + 1) / N
        for k in range(nseg)])
    t_all = np.atleast_1d(np.asarray(psi.inverse(s_all), float))
    for k in range(nseg):
        t_all[(k + 1) * N - 1] = t_edges[k + 1]
    n_tot = nseg * N
    s0 = s_edges[0]
    x = s_all - s0
    coeff = np.array([homogeneous_coefficient(spec, k) for k in range(nseg)])
    weighted_first = rho < 1.0 and "u" in expr_mod.free_variables(spec.f)

    def f(t, u):
        return float(expr_mod.evaluate(spec.f, {"t": float(t), "u": float(u)}))

    # interval endpoints and which data value (edge or node) they carry
    lefts = np.empty(n_tot)
    rights = np.empty(n_tot)
    for k in range(nseg):
        lefts[k * N] = s_edges[k]
        lefts[k * N + 1:(k + 1) * N] = s_all[k * N:(k + 1) * N - 1]
        rights[k * N:(k + 1) * N] = s_all[k * N:(k + 1) * N]

    w = np.zeros(n_tot)
    F = np.zeros(n_tot)
    F_edge = np.zeros(nseg)
    if not weighted_first:
        u_a = coeff[0] if rho == 1.0 else 0.0
        F_edge[0] = f(spec.a, u_a)

    for i in range(n_tot):
        k_i = i // N
        S = s_all[i]
        if k_i >= 1 and i % N == 0:
            w_left = w[k_i * N - 1]
            w_plus = w_left + spec.impulses.jumps[k_i - 1] / gamma_rho
            x_edge = s_edges[k_i] - s0
            u_plus = w_plus if rho == 1.0 else x_edge ** (rho - 1.0) * w_plus
            F_edge[k_i] = f(t_edges[k_i], u_plus)

        # history: intervals j < i, plus the self-weight on node i
        hist = 0.0
        self_weight = 0.0
        start = 1 if weighted_first else 0
        for j in range(start, i + 1):
            wL, wR = plain_interval_weights(S, lefts[j], rights[j], mu)
            k_j, off = divmod(j, N)
            left_val = F_edge[k_j] if off == 0 else F[j - 1]
            if j < i:
                hist += float(wL) * left_val + float(wR) * F[j]
            else:
                hist += float(wL) * left_val
                self_weight += float(wR)
        if weighted_first:
            m0 = float(weighted_lead_moment(S, s0, s_all[0], mu, rho))
            fold = x[0] ** (1.0 - rho) * m0
            if i == 0:
                self_weight += fold
            else:
                hist += fold * F[0]
        hist /= gamma_mu
        self_weight /= gamma_mu
        kappa = 1.0 if rho == 1.0 else x[i] ** (1.0 - rho)
        c_term = coeff[k_i] / gamma_rho

        def shifted(wi):
            ui = wi if rho == 1.0 else x[i] ** (rho - 1.0) * wi
            return c_term + kappa * (hist + self_weight * f(t_all[i], ui)) - wi

        guess = c_term + kappa * hist
        radius = 1.0 + abs(guess)
        lo, hi = guess - radius, guess + radius
        flo, fhi = shifted(lo), shifted(hi)
        grow = 0
        while flo * fhi > 0.0 and grow < 60:
            radius *= 2.0
            lo, hi = guess - radius, guess + radius
            flo, fhi = shifted(lo), shifted(hi)
            grow += 1
        if flo * fhi > 0.0:
            raise RuntimeError("oracle could not bracket the nodal equation")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = shifted(mid)
            if fm == 0.0 or (hi - lo) < bisect_tol * max(1.0, abs(mid)):
                lo = hi = mid
                break
            if flo * fm <= 0.0:
                hi, fhi = mid, fm
            else:
                lo, flo = mid, fm
        w[i] = 0.5 * (lo + hi)
        ui = w[i] if rho == 1.0 else x[i] ** (rho - 1.0) * w[i]
        F[i] = f(t_all[i], ui)
    return w

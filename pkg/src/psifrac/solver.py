"""Fixed-point solver for impulsive fractional problems in weighted form.

The problem is solved through its equivalent Volterra integral equation: on
the segment following the k-th impulse,

    u(t) = Omega(t, a) * (delta + zeta_1 + ... + zeta_k) + I^mu f(., u)(t),

where Omega is the homogeneous endpoint profile and the integral runs from a
across all earlier segments.  Iteration happens on the weighted unknown
w = (Psi(t)-Psi(a))^(1-rho) u, whose sup norm is the convergence metric; the
homogeneous term contributes the constant coefficient / Gamma(rho) exactly.

Grids are uniform in Psi within each segment and exclude the left endpoint
of the segment (where u itself may diverge); the quadrature carries explicit
right-limit values at segment edges, and, when rho < 1 and the right-hand
side depends on u, the first subinterval is integrated against the exact
endpoint-weight moments using the continuous cofactor of f(., u).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import expr as expr_mod
from .errors import DomainError, NoConvergence, NonFiniteIterate
from .fracops import (OrderPair, SampledFunction, gamma_fn,
                      hilfer_derivative_numeric, plain_interval_weights,
                      weighted_lead_moment)
from .psi import PsiFunction

__all__ = [
    "ImpulseSchedule", "NonlocalSpec", "ProblemSpec", "GridSolution",
    "SolutionSegment", "ConditionReport", "ResidualReport", "ConvergenceRow",
    "homogeneous_coefficient", "picard_step", "solve_impulsive",
    "solve_nonlocal", "estimate_lipschitz", "check_conditions",
    "residual_report", "convergence_study",
]

MIN_NODES_PER_SEGMENT = 16
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 200


# ------------------------------------------------------------------ types

@dataclass(frozen=True)
class ImpulseSchedule:
    """Impulse instants in (a, T) with jumps applied to I^(1-rho) u."""

    times: tuple[float, ...] = ()
    jumps: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.times) != len(self.jumps):
            raise DomainError("impulse times and jumps must have equal length")
        if any(t2 <= t1 for t1, t2 in zip(self.times, self.times[1:])):
            raise DomainError("impulse times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class NonlocalSpec:
    """Nonlocal initial functional g(u) = G(w(tau_1), ..., w(tau_p)).

    The combiner G is an expression over x1..xp evaluated on the weighted
    traces w(tau) = (Psi(tau)-Psi(a))^(1-rho) u(tau), which makes g Lipschitz
    in the weighted norm whenever G is Lipschitz in each argument.
    """

    taus: tuple[float, ...]
    combiner: expr_mod.Expr
    lipschitz_Lg: float

    def __post_init__(self):
        if not self.taus:
            raise DomainError("nonlocal term needs at least one trace point")
        if self.lipschitz_Lg <= 0.0:
            raise DomainError("nonlocal Lipschitz constant must be positive")
        names = {f"x{j + 1}" for j in range(len(self.taus))}
        extra = expr_mod.free_variables(self.combiner) - names
        if extra:
            raise DomainError(f"combiner references unknown traces: {sorted(extra)}")


@dataclass(frozen=True)
class ProblemSpec:
    """Full problem description consumed by the solvers."""

    a: float
    T: float
    order: OrderPair
    psi: PsiFunction
    delta: float
    f: expr_mod.Expr
    impulses: ImpulseSchedule = ImpulseSchedule()
    nonlocal_spec: Optional[NonlocalSpec] = None
    lipschitz_L: Optional[float] = None
    f_src: Optional[str] = None

    def __post_init__(self):
        if not self.a < self.T:
            raise DomainError(f"need a < T, got [{self.a}, {self.T}]")
        slack = 1e-12 * max(1.0, abs(self.a), abs(self.T))
        if abs(self.psi.a - self.a) > slack or abs(self.psi.T - self.T) > slack:
            raise DomainError("weight function domain must match [a, T]")
        for t in self.impulses.times:
            if not self.a < t < self.T:
                raise DomainError(f"impulse time {t} outside (a, T)")
        if self.nonlocal_spec is not None:
            for tau in self.nonlocal_spec.taus:
                if not self.a < tau <= self.T:
                    raise DomainError(f"trace point {tau} outside (a, T]")
        extra = expr_mod.free_variables(self.f) - {"t", "u"}
        if extra:
            raise DomainError(f"right-hand side references unknowns: {sorted(extra)}")
        if self.lipschitz_L is not None and self.lipschitz_L <= 0.0:
            raise DomainError("declared Lipschitz constant must be positive")

    @property
    def rho(self) -> float:
        return self.order.rho

    def f_depends_on_u(self) -> bool:
        return "u" in expr_mod.free_variables(self.f)


@dataclass
class SolutionSegment:
    nodes: np.ndarray      # t values, left-open: (t_k, t_{k+1}]
    s_nodes: np.ndarray    # Psi images
    u: np.ndarray          # raw values
    w: np.ndarray          # weighted values (Psi(t)-Psi(a))^(1-rho) u


@dataclass
class GridSolution:
    """Converged (or staged) iterate on the segmented grid."""

    segments: list[SolutionSegment]
    rho: float
    iteration_count: int
    final_update_norm: float
    contraction_ratios: list[float]
    update_norms: list[float] = field(default_factory=list)

    def t_nodes(self) -> np.ndarray:
        return np.concatenate([s.nodes for s in self.segments])

    def s_nodes(self) -> np.ndarray:
        return np.concatenate([s.s_nodes for s in self.segments])

    def u_values(self) -> np.ndarray:
        return np.concatenate([s.u for s in self.segments])

    def w_values(self) -> np.ndarray:
        return np.concatenate([s.w for s in self.segments])

    def nodes_per_segment(self) -> int:
        return len(self.segments[0].nodes)

    def weighted_norm(self) -> float:
        return float(np.max(np.abs(self.w_values())))


@dataclass
class ConditionReport:
    """Closed-form existence/uniqueness bounds and the values used."""

    L_bound: float
    L_used: float
    L_is_estimate: bool
    uniqueness_ok: bool
    contraction_constant: float
    M: float
    r: float
    Lg_bound: Optional[float] = None
    Lg_used: Optional[float] = None
    nonlocal_ok: Optional[bool] = None
    G0: Optional[float] = None
    r_star: Optional[float] = None

    def all_ok(self) -> bool:
        if not self.uniqueness_ok:
            return False
        if self.nonlocal_ok is not None and not self.nonlocal_ok:
            return False
        return True

    def to_dict(self) -> dict:
        out = {
            "L_bound": self.L_bound,
            "L_used": self.L_used,
            "L_is_estimate": self.L_is_estimate,
            "uniqueness_ok": self.uniqueness_ok,
            "contraction_constant": self.contraction_constant,
            "M": self.M,
            "r": self.r,
        }
        if self.Lg_bound is not None:
            out.update({
                "Lg_bound": self.Lg_bound,
                "Lg_used": self.Lg_used,
                "nonlocal_ok": self.nonlocal_ok,
                "G0": self.G0,
                "r_star": self.r_star,
            })
        return out


@dataclass
class ResidualReport:
    integral_defect: float
    differential_defect: float
    jump_defects: list[float]

    def max_jump_defect(self) -> float:
        return max(self.jump_defects, default=0.0)

    def to_dict(self) -> dict:
        return {
            "integral_defect": self.integral_defect,
            "differential_defect": self.differential_defect,
            "jump_defects": self.jump_defects,
        }


@dataclass
class ConvergenceRow:
    nodes_per_segment: int
    error: float
    order: Optional[float]   # None when the error sits at rounding level


# ------------------------------------------------------------- operations

def homogeneous_coefficient(spec: ProblemSpec, k: int) -> float:
    """delta plus the accumulated jumps through segment k (k = 0 gives delta)."""
    if not 0 <= k <= len(spec.impulses):
        raise DomainError(f"segment index {k} out of range")
    return spec.delta + math.fsum(spec.impulses.jumps[:k])


def _eval_f(spec: ProblemSpec, t, u):
    out = expr_mod.evaluate(spec.f, {"t": t, "u": u}, spec.f_src)
    if np.ndim(out) == 0:
        return np.full(np.shape(t), float(out))
    return np.asarray(out, float)


class _Discretization:
    """Grid plus assembled quadrature for one problem at one resolution."""

    def __init__(self, spec: ProblemSpec, nodes_per_segment: int,
                 first_interval: str = "auto", general_weights: bool = False):
        if nodes_per_segment < MIN_NODES_PER_SEGMENT:
            raise DomainError(
                f"nodes_per_segment must be >= {MIN_NODES_PER_SEGMENT}")
        if first_interval not in ("auto", "plain", "weighted"):
            raise DomainError(f"unknown first-interval mode {first_interval!r}")
        self.spec = spec
        self.N = nodes_per_segment
        psi = spec.psi
        self.t_edges = [spec.a, *spec.impulses.times, spec.T]
        self.s_edges = [float(psi.eval(t)) for t in self.t_edges]
        self.nseg = len(self.t_edges) - 1
        N = self.N
        s_parts, t_parts = [], []
        for k in range(self.nseg):
            sl, sr = self.s_edges[k], self.s_edges[k + 1]
            s_seg = sl + (sr - sl) * np.arange(1, N + 1) / N
            t_seg = np.atleast_1d(np.asarray(psi.inverse(s_seg), float))
            t_seg[-1] = self.t_edges[k + 1]
            s_parts.append(s_seg)
            t_parts.append(t_seg)
        self.s_all = np.concatenate(s_parts)
        self.t_all = np.concatenate(t_parts)
        self.n_tot = self.nseg * N
        self.s0 = self.s_edges[0]
        self.x = self.s_all - self.s0
        rho = spec.rho
        self.rho = rho
        self.rho_is_one = (rho == 1.0) and not general_weights
        if first_interval == "auto":
            self.weighted_first = rho < 1.0 and spec.f_depends_on_u()
        else:
            self.weighted_first = first_interval == "weighted"
        self.coeff_base = np.array(
            [homogeneous_coefficient(spec, k) for k in range(self.nseg)])
        self.gamma_rho = gamma_fn(rho)
        self._assemble(spec.order.mu)

    def _assemble(self, mu: float):
        N, nseg = self.N, self.nseg
        n_ext = nseg * (N + 1)
        W = np.zeros((self.n_tot, n_ext))
        lefts = np.empty(self.n_tot)
        rights = np.empty(self.n_tot)
        for k in range(nseg):
            seg = self.s_all[k * N:(k + 1) * N]
            lefts[k * N] = self.s_edges[k]
            lefts[k * N + 1:(k + 1) * N] = seg[:-1]
            rights[k * N:(k + 1) * N] = seg
        gam = gamma_fn(mu)
        skip_first = 1 if self.weighted_first else 0
        for i in range(self.n_tot):
            S = self.s_all[i]
            ks = i // N
            for k in range(ks + 1):
                j0 = k * N + (skip_first if k == 0 else 0)
                j1 = (k + 1) * N if k < ks else i + 1
                if j1 <= j0:
                    continue
                wL, wR = plain_interval_weights(S, lefts[j0:j1], rights[j0:j1], mu)
                c0 = k * (N + 1) + (j0 - k * N)
                m = j1 - j0
                W[i, c0:c0 + m] += wL / gam
                W[i, c0 + 1:c0 + 1 + m] += wR / gam
        if self.weighted_first:
            # first subinterval of segment 0: exact endpoint-weight moment
            # applied to the continuous cofactor of F, extended by its value
            # at the first node; folds into that node's column
            x1 = self.x[0]
            m0 = weighted_lead_moment(self.s_all, self.s0, self.s_all[0],
                                      mu, self.rho)
            W[:, 1] += x1 ** (1.0 - self.rho) * m0 / gam
        self.W = W
        self.n_ext = n_ext

    # ------------------------------------------------------------ helpers

    def u_from_w(self, w: np.ndarray) -> np.ndarray:
        if self.rho_is_one:
            return w.copy()
        return self.x ** (self.rho - 1.0) * w

    def w_homogeneous(self, coeff: np.ndarray) -> np.ndarray:
        return np.repeat(coeff, self.N) / self.gamma_rho

    def edge_w_plus(self, w: np.ndarray, k: int) -> float:
        """Right-limit of the weighted unknown at segment k's left edge, k >= 1.

        The weighted value jumps by exactly zeta_k / Gamma(rho) across an
        impulse, since only the homogeneous coefficient changes.
        """
        i_left = k * self.N - 1
        return float(w[i_left]) + self.spec.impulses.jumps[k - 1] / self.gamma_rho

    def trace(self, w: np.ndarray, tau: float) -> float:
        """Weighted trace w(tau); impulse instants belong to the left segment."""
        k = bisect.bisect_left(self.t_edges, tau) - 1
        k = min(max(k, 0), self.nseg - 1)
        s_tau = float(self.spec.psi.eval(tau))
        seg = slice(k * self.N, (k + 1) * self.N)
        s_seg = self.s_all[seg]
        w_seg = w[seg]
        if s_tau <= s_seg[0]:
            if k == 0:
                # inside the unsampled gap (a, first node): extrapolate
                lam = (s_tau - s_seg[0]) / (s_seg[1] - s_seg[0])
                return float(w_seg[0] + lam * (w_seg[1] - w_seg[0]))
            e = self.s_edges[k]
            w_edge = self.edge_w_plus(w, k)
            lam = (s_tau - e) / (s_seg[0] - e)
            return float(w_edge + lam * (w_seg[0] - w_edge))
        return float(np.interp(s_tau, s_seg, w_seg))

    def eval_g(self, w: np.ndarray) -> float:
        nl = self.spec.nonlocal_spec
        if nl is None:
            return 0.0
        env = {f"x{j + 1}": self.trace(w, tau) for j, tau in enumerate(nl.taus)}
        return float(expr_mod.evaluate(nl.combiner, env))

    def picard_map(self, w: np.ndarray, gval: float = 0.0,
                   gval_edge: Optional[float] = None) -> np.ndarray:
        """One application of the integral-equation map to the iterate w.

        gval shifts the homogeneous coefficient; gval_edge is the shift that
        built w itself (needed to reconstruct the right-limit of u at a) and
        defaults to gval, which is exact at a fixed point.
        """
        spec = self.spec
        coeff = self.coeff_base - gval
        if gval_edge is None:
            gval_edge = gval
        u = self.u_from_w(w)
        F = _eval_f(spec, self.t_all, u)
        ext = np.zeros(self.n_ext)
        N = self.N
        for k in range(self.nseg):
            base = k * (N + 1)
            ext[base + 1:base + N + 1] = F[k * N:(k + 1) * N]
            if k == 0:
                if not self.weighted_first:
                    # right-limit of f at a; u(a+) is finite only for rho = 1,
                    # and for rho < 1 this path is taken only when f ignores u
                    u_a = self.coeff_base[0] - gval_edge if self.rho == 1.0 else 0.0
                    ext[base] = float(_eval_f(spec, np.array([spec.a]),
                                              np.array([u_a]))[0])
            else:
                w_plus = self.edge_w_plus(w, k)
                x_edge = self.s_edges[k] - self.s0
                u_plus = w_plus if self.rho == 1.0 \
                    else x_edge ** (self.rho - 1.0) * w_plus
                ext[base] = float(_eval_f(spec, np.array([self.t_edges[k]]),
                                          np.array([u_plus]))[0])
        integral = self.W @ ext
        if self.rho_is_one:
            return np.repeat(coeff, N) + integral
        return self.w_homogeneous(coeff) + self.x ** (1.0 - self.rho) * integral

    def to_solution(self, w: np.ndarray, iterations: int, final_norm: float,
                    ratios: list[float], norms: list[float]) -> GridSolution:
        u = self.u_from_w(w)
        segments = []
        N = self.N
        for k in range(self.nseg):
            seg = slice(k * N, (k + 1) * N)
            segments.append(SolutionSegment(self.t_all[seg].copy(),
                                            self.s_all[seg].copy(),
                                            u[seg].copy(), w[seg].copy()))
        return GridSolution(segments, self.rho, iterations, final_norm,
                            ratios, norms)


def _iterate(disc: _Discretization, tol: float, max_iter: int,
             use_nonlocal: bool) -> GridSolution:
    w = disc.w_homogeneous(disc.coeff_base)
    gval_prev = 0.0
    norms: list[float] = []
    ratios: list[float] = []
    for it in range(1, max_iter + 1):
        gval = disc.eval_g(w) if use_nonlocal else 0.0
        w_next = disc.picard_map(w, gval, gval_edge=gval_prev)
        if not np.all(np.isfinite(w_next)):
            raise NonFiniteIterate(f"iterate {it} left the finite range")
        upd = float(np.max(np.abs(w_next - w)))
        if norms and norms[-1] > 0.0:
            ratios.append(upd / norms[-1])
        norms.append(upd)
        w = w_next
        gval_prev = gval
        if upd <= tol * max(1.0, float(np.max(np.abs(w)))):
            return disc.to_solution(w, it, upd, ratios, norms)
    raise NoConvergence(
        f"no convergence within {max_iter} iterations (last update {norms[-1]:.3e})",
        max_iter, norms, ratios)


def picard_step(spec: ProblemSpec, w_current: GridSolution,
                first_interval: str = "auto") -> GridSolution:
    """One application of the integral-equation map to an existing iterate."""
    disc = _Discretization(spec, w_current.nodes_per_segment(), first_interval)
    w = w_current.w_values()
    gval = disc.eval_g(w) if spec.nonlocal_spec else 0.0
    w_next = disc.picard_map(w, gval)
    if not np.all(np.isfinite(w_next)):
        raise NonFiniteIterate("iterate left the finite range")
    upd = float(np.max(np.abs(w_next - w)))
    return disc.to_solution(w_next, w_current.iteration_count + 1, upd,
                            list(w_current.contraction_ratios),
                            list(w_current.update_norms) + [upd])


def solve_impulsive(spec: ProblemSpec, nodes_per_segment: int = 256,
                    tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                    first_interval: str = "auto",
                    general_weights: bool = False) -> GridSolution:
    """Fixed-point solve of the impulsive problem (no nonlocal term).

    Starts from the homogeneous part and iterates the integral-equation map
    until the relative weighted sup norm of the update drops below tol.
    Raises NoConvergence (with the ratio history) when max_iter is exhausted,
    which is the expected outcome when the contraction condition fails badly.
    """
    if spec.nonlocal_spec is not None:
        raise DomainError("problem has a nonlocal term; use solve_nonlocal")
    if tol <= 0.0:
        raise DomainError("tol must be positive")
    disc = _Discretization(spec, nodes_per_segment, first_interval,
                           general_weights)
    return _iterate(disc, tol, max_iter, use_nonlocal=False)


def solve_nonlocal(spec: ProblemSpec, nodes_per_segment: int = 256,
                   tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                   first_interval: str = "auto") -> GridSolution:
    """Fixed-point solve with the nonlocal initial functional.

    Each step recomputes g from the current weighted traces and shifts the
    homogeneous coefficient by -g; everything else matches solve_impulsive,
    and a vanishing combiner reproduces its output exactly.
    """
    if spec.nonlocal_spec is None:
        raise DomainError("problem has no nonlocal term; use solve_impulsive")
    if tol <= 0.0:
        raise DomainError("tol must be positive")
    disc = _Discretization(spec, nodes_per_segment, first_interval)
    return _iterate(disc, tol, max_iter, use_nonlocal=True)


# ----------------------------------------------------- condition checking

def estimate_lipschitz(f: expr_mod.Expr, a: float, T: float, psi: PsiFunction,
                       u_range: tuple[float, float]) -> float:
    """Sampled bound on |df/du| over [a,T] x u_range, inflated by 10 percent.

    Central differences with step 1e-6 max(1,|u|) on a 64 x 64 lattice that
    is uniform in Psi in the t direction.  This is an estimate for reporting,
    not a certificate.
    """
    lo, hi = float(u_range[0]), float(u_range[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise DomainError("u_range must be a finite nondegenerate interval")
    if "u" not in expr_mod.free_variables(f):
        return 0.0
    s_grid = np.linspace(float(psi.eval(a)), float(psi.eval(T)), 64)
    t_grid = np.atleast_1d(np.asarray(psi.inverse(s_grid), float))
    u_grid = np.linspace(lo, hi, 64)
    tt, uu = np.meshgrid(t_grid, u_grid, indexing="ij")
    h = 1e-6 * np.maximum(1.0, np.abs(uu))
    f_hi = expr_mod.evaluate(f, {"t": tt, "u": uu + h})
    f_lo = expr_mod.evaluate(f, {"t": tt, "u": uu - h})
    slope = np.abs(f_hi - f_lo) / (2.0 * h)
    return float(np.max(slope)) * 1.1


def check_conditions(spec: ProblemSpec, L: Optional[float] = None,
                     Lg: Optional[float] = None) -> ConditionReport:
    """Evaluate the existence/uniqueness bounds for the given problem.

    The Lipschitz bound on f reads L <= Gamma(mu+rho) / (2 Gamma(rho) span^mu)
    with span = Psi(T) - Psi(a); under it the integral-equation map contracts
    with constant L Gamma(rho) / Gamma(mu+rho) span^mu <= 1/2.  The nonlocal
    functional needs Lg <= Gamma(rho) / 6.  The admissible-ball radii r and
    r* are set to twice and three times their bracket terms.
    """
    mu = spec.order.mu
    rho = spec.rho
    span = spec.psi.span()
    g_rho = gamma_fn(rho)
    g_mu_rho = gamma_fn(mu + rho)
    L_bound = g_mu_rho / (2.0 * g_rho * span ** mu)

    s_grid = np.linspace(float(spec.psi.eval(spec.a)),
                         float(spec.psi.eval(spec.T)), 1024)
    t_grid = np.atleast_1d(np.asarray(spec.psi.inverse(s_grid), float))
    M = float(np.max(np.abs(_eval_f(spec, t_grid, np.zeros_like(t_grid)))))

    zeta_abs = math.fsum(abs(z) for z in spec.impulses.jumps)
    bracket = (abs(spec.delta) + zeta_abs) / g_rho \
        + M * span ** (1.0 - rho + mu) / gamma_fn(mu + 1.0)
    r = 2.0 * bracket

    L_is_estimate = False
    if L is None:
        if spec.lipschitz_L is not None:
            L_used = spec.lipschitz_L
        else:
            L_used = estimate_lipschitz(spec.f, spec.a, spec.T, spec.psi,
                                        (-max(r, 1.0), max(r, 1.0)))
            L_is_estimate = True
    else:
        L_used = float(L)
    contraction = L_used * g_rho / g_mu_rho * span ** mu
    report = ConditionReport(
        L_bound=L_bound,
        L_used=L_used,
        L_is_estimate=L_is_estimate,
        uniqueness_ok=L_used <= L_bound,
        contraction_constant=contraction,
        M=M,
        r=r,
    )
    nl = spec.nonlocal_spec
    if nl is not None:
        Lg_used = float(Lg) if Lg is not None else nl.lipschitz_Lg
        zeros = {f"x{j + 1}": 0.0 for j in range(len(nl.taus))}
        G0 = abs(float(expr_mod.evaluate(nl.combiner, zeros)))
        report.Lg_bound = g_rho / 6.0
        report.Lg_used = Lg_used
        report.nonlocal_ok = Lg_used <= report.Lg_bound
        report.G0 = G0
        report.r_star = 3.0 * ((abs(spec.delta) + G0 + zeta_abs) / g_rho
                               + M * span ** (1.0 - rho + mu) / gamma_fn(mu + 1.0))
    return report


# ------------------------------------------------------------- diagnostics

def residual_report(spec: ProblemSpec, sol: GridSolution) -> ResidualReport:
    """Three independent defects of a computed solution.

    integral: weighted sup distance between the iterate and one more
    application of the integral-equation map (<= 10 tol for a converged run).

    differential: the two-sided derivative of the regular part u - Omega
    coefficient (continuous across impulses) is compared against f(t, u) on
    interior nodes; nodes whose stencils straddle an impulse are skipped.

    jump: through the split representation I^(1-rho) u = coefficient +
    I^(1-rho+mu) f, the integral part is continuous at each impulse, so the
    jump equals the coefficient increment exactly and the defect reduces to
    the accumulation rounding |coeff_k - coeff_{k-1} - zeta_k|.
    """
    disc = _Discretization(spec, sol.nodes_per_segment())
    w = sol.w_values()
    gval = disc.eval_g(w) if spec.nonlocal_spec else 0.0
    w_next = disc.picard_map(w, gval)
    integral_defect = float(np.max(np.abs(w_next - w)))

    coeff = disc.coeff_base - gval
    rho = disc.rho
    if rho == 1.0:
        regular = w - np.repeat(coeff, disc.N)
    else:
        regular = disc.x ** (rho - 1.0) * (w - np.repeat(coeff, disc.N)
                                           / disc.gamma_rho)
    data = SampledFunction(disc.t_all, regular, spec.psi)
    hd = hilfer_derivative_numeric(data, spec.order, spec.psi)
    u = sol.u_values()
    F = _eval_f(spec, disc.t_all, u)
    target = F[1:-1]
    diff = np.abs(hd.values - target)
    keep = np.ones(len(diff), bool)
    N = disc.N
    for k in range(1, disc.nseg):
        for j in range(k * N - 2, k * N + 2):
            jj = j - 1   # interior arrays drop the first node
            if 0 <= jj < len(keep):
                keep[jj] = False
    differential_defect = float(np.max(diff[keep])) if np.any(keep) else 0.0

    jumps = []
    for k in range(1, disc.nseg):
        dk = homogeneous_coefficient(spec, k) - homogeneous_coefficient(spec, k - 1)
        jumps.append(abs(dk - spec.impulses.jumps[k - 1]))
    return ResidualReport(integral_defect, differential_defect, jumps)


def convergence_study(spec: ProblemSpec, exact: Optional[expr_mod.Expr] = None,
                      levels: int = 3, base_nodes: int = 64,
                      tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER) -> list[ConvergenceRow]:
    """Solve at doubling resolutions and report errors and empirical orders.

    With an exact solution expression (in t) errors are weighted sup errors
    against it; otherwise each level is compared to the finest level on the
    shared nodes.  A row's order is the log2 ratio of the previous level's
    error to its own; rows at rounding level (< 1e-14) report order None
    ('exact'), as does the coarsest row.
    """
    if levels < 3:
        raise DomainError("need at least 3 levels")
    solver = solve_nonlocal if spec.nonlocal_spec is not None else solve_impulsive
    sizes = [base_nodes * 2 ** l for l in range(levels)]
    sols = [solver(spec, nodes_per_segment=n, tol=tol, max_iter=max_iter)
            for n in sizes]
    rho = spec.rho
    errors: list[float] = []
    if exact is not None:
        for sol in sols:
            t = sol.t_nodes()
            u_ex = np.asarray(expr_mod.evaluate(exact, {"t": t}), float)
            if np.ndim(u_ex) == 0:
                u_ex = np.full_like(t, float(u_ex))
            x = sol.s_nodes() - float(spec.psi.eval(spec.a))
            w_ex = u_ex if rho == 1.0 else x ** (1.0 - rho) * u_ex
            errors.append(float(np.max(np.abs(sol.w_values() - w_ex))))
        n_rows = levels
    else:
        finest = sols[-1]
        w_fin = finest.w_values()
        Nf = finest.nodes_per_segment()
        for sol in sols[:-1]:
            Nl = sol.nodes_per_segment()
            ratio = Nf // Nl
            idx = []
            for k in range(len(sol.segments)):
                base = k * Nf
                idx.extend(base + ratio * (j + 1) - 1 for j in range(Nl))
            errors.append(float(np.max(np.abs(sol.w_values() - w_fin[idx]))))
        n_rows = levels - 1
    rows = []
    for l in range(n_rows):
        order = None
        if l >= 1 and errors[l - 1] > 1e-14 and errors[l] > 1e-14:
            order = math.log2(errors[l - 1] / errors[l])
        rows.append(ConvergenceRow(sizes[l], errors[l], order))
    return rows

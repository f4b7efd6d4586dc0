"""Monotone weight functions and their derivatives and inverses.

Every operator in the package is taken with respect to an increasing C^1
function on the problem domain [a, T].  Three closed-form families cover the
classical specializations (identity, power, logarithm); arbitrary formulas go
through the expression DSL with a finite-difference derivative fallback and a
bisection/Newton inverse.

Construction audits monotonicity numerically: values must strictly increase
over a 256-point probe grid and the derivative must be positive at every
probe in (a, T].  A derivative that vanishes exactly at the left endpoint
(e.g. t^2 on [0, T]) is tolerated because no operator evaluates it there.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import expr as expr_mod
from .errors import DomainError, NonMonotoneError

_N_PROBES = 256
_INV_TOL = 1e-12
_ROUNDTRIP_TOL = 1e-10


@dataclass(frozen=True)
class PsiFunction:
    """Increasing weight function on a closed interval [a, T].

    kind is one of "identity", "power", "log", "expr".  Instances are
    immutable and all methods are pure, so they are safe to share across
    threads.
    """

    kind: str
    a: float
    T: float
    rho: Optional[float] = None
    formula: Optional[expr_mod.Expr] = None
    formula_deriv: Optional[expr_mod.Expr] = None
    formula_src: Optional[str] = None

    # ---------------------------------------------------------- constructors

    @staticmethod
    def identity(a: float, T: float) -> "PsiFunction":
        return PsiFunction("identity", float(a), float(T))

    @staticmethod
    def power(rho: float, a: float, T: float) -> "PsiFunction":
        if rho <= 0.0:
            raise DomainError(f"power exponent must be positive, got {rho}")
        return PsiFunction("power", float(a), float(T), rho=float(rho))

    @staticmethod
    def log(a: float, T: float) -> "PsiFunction":
        return PsiFunction("log", float(a), float(T))

    @staticmethod
    def from_expression(src: str, a: float, T: float,
                        deriv_src: Optional[str] = None) -> "PsiFunction":
        ast = expr_mod.parse(src, {"t"})
        dast = expr_mod.parse(deriv_src, {"t"}) if deriv_src else None
        return PsiFunction("expr", float(a), float(T), formula=ast,
                           formula_deriv=dast, formula_src=src)

    def __post_init__(self):
        if self.kind not in ("identity", "power", "log", "expr"):
            raise DomainError(f"unknown weight kind {self.kind!r}")
        if not self.a < self.T:
            raise DomainError(f"domain requires a < T, got [{self.a}, {self.T}]")
        if self.kind == "power" and self.rho is None:
            raise DomainError("power kind requires an exponent")
        if self.kind == "expr" and self.formula is None:
            raise DomainError("expr kind requires a formula")
        self._audit()

    # ---------------------------------------------------------- evaluation

    def eval(self, t):
        """Psi(t); accepts scalars or arrays, rejects points outside [a, T]."""
        self._check_domain(t)
        return self._eval_raw(t)

    def deriv(self, t):
        """Psi'(t) > 0; NonMonotoneError if the computed value is <= 0."""
        self._check_domain(t)
        d = self._deriv_raw(t)
        if np.any(np.asarray(d) <= 0.0):
            raise NonMonotoneError(f"derivative non-positive at t={t}")
        return d

    def inverse(self, s):
        """t with Psi(t) = s, for s in [Psi(a), Psi(T)]."""
        lo, hi = self._eval_raw(self.a), self._eval_raw(self.T)
        sa = np.asarray(s, float)
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(sa < lo - slack) or np.any(sa > hi + slack):
            raise DomainError(f"inverse argument outside [{lo}, {hi}]")
        sa = np.clip(sa, lo, hi)
        out = self._inverse_raw(sa)
        return float(out) if np.ndim(s) == 0 else out

    def span(self) -> float:
        """Psi(T) - Psi(a), the weight range of the domain."""
        return float(self._eval_raw(self.T) - self._eval_raw(self.a))

    # ---------------------------------------------------------- internals

    def _check_domain(self, t):
        ta = np.asarray(t, float)
        slack = 1e-12 * max(1.0, abs(self.a), abs(self.T))
        if np.any(ta < self.a - slack) or np.any(ta > self.T + slack):
            raise DomainError(f"t={t} outside domain [{self.a}, {self.T}]")

    def _eval_raw(self, t):
        t = np.asarray(t, float) if np.ndim(t) else float(t)
        if self.kind == "identity":
            return t
        if self.kind == "power":
            return t ** self.rho
        if self.kind == "log":
            return np.log(t)
        return expr_mod.evaluate(self.formula, {"t": t}, self.formula_src)

    def _deriv_raw(self, t):
        t = np.asarray(t, float) if np.ndim(t) else float(t)
        if self.kind == "identity":
            return np.ones_like(t) if np.ndim(t) else 1.0
        if self.kind == "power":
            return self.rho * t ** (self.rho - 1.0)
        if self.kind == "log":
            return 1.0 / t
        if self.formula_deriv is not None:
            return expr_mod.evaluate(self.formula_deriv, {"t": t}, None)
        h = 1e-6 * np.maximum(1.0, np.abs(t))
        lo = np.maximum(np.asarray(t) - h, self.a)
        hi = np.minimum(np.asarray(t) + h, self.T)
        fl = expr_mod.evaluate(self.formula, {"t": lo}, self.formula_src)
        fh = expr_mod.evaluate(self.formula, {"t": hi}, self.formula_src)
        return (fh - fl) / (hi - lo)

    def _inverse_raw(self, s):
        if self.kind == "identity":
            return s
        if self.kind == "power":
            return s ** (1.0 / self.rho)
        if self.kind == "log":
            return np.exp(s)
        return self._inverse_numeric(s)

    def _inverse_numeric(self, s):
        scalar = np.ndim(s) == 0
        svals = np.atleast_1d(np.asarray(s, float))
        out = np.empty_like(svals)
        for i, sv in enumerate(svals):
            lo, hi = self.a, self.T
            for _ in range(80):  # bisection to ~1e-24 interval shrink
                mid = 0.5 * (lo + hi)
                if self._eval_raw(mid) < sv:
                    lo = mid
                else:
                    hi = mid
            t = 0.5 * (lo + hi)
            for _ in range(3):  # Newton polish
                d = self._deriv_raw(t)
                if d <= 0:
                    break
                t_new = t - (self._eval_raw(t) - sv) / d
                if not (self.a <= t_new <= self.T):
                    break
                t = t_new
            out[i] = t
        return out[0] if scalar else out

    def _audit(self):
        probes = np.linspace(self.a, self.T, _N_PROBES + 1)
        try:
            with np.errstate(all="ignore"):
                vals = np.asarray(self._eval_raw(probes), float)
        except Exception as exc:
            raise DomainError(f"weight function undefined on domain: {exc}") from exc
        if not np.all(np.isfinite(vals)):
            raise DomainError("weight function non-finite on domain")
        if not np.all(np.diff(vals) > 0.0):
            raise NonMonotoneError("weight function is not strictly increasing "
                                   "on the probe grid")
        try:
            derivs = np.asarray(self._deriv_raw(probes[1:]), float)
        except Exception as exc:
            raise DomainError(f"weight derivative undefined on domain: {exc}") from exc
        if not np.all(np.isfinite(derivs)) or np.any(derivs <= 0.0):
            raise NonMonotoneError("weight derivative must be positive on (a, T]")
        back = np.asarray(self._inverse_raw(vals), float)
        tol = _ROUNDTRIP_TOL * np.maximum(1.0, np.abs(probes))
        if np.any(np.abs(back - probes) > tol):
            raise NonMonotoneError("inverse round-trip exceeds tolerance")

"""Problem-file loading and validation (TOML).

One file describes one problem:

    [domain]            a, T
    [order]             mu, nu
    [psi]               kind = "identity" | "power" | "log" | "expr"
                        rho (power), formula / formula_deriv (expr)
    [initial]           delta
    [[impulses]]        t, zeta            (zero or more)
    [rhs]               f = "expression in t, u"
    [nonlocal]          taus = [...], combiner = "expression in x1..xp", Lg
    [lipschitz]         L                  (optional declared constant)
    [solver]            nodes_per_segment, tol, max_iter   (optional)
    [exact]             u = "expression in t"              (optional)

Violations raise ConfigError carrying the offending field path.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import tomli

from . import expr as expr_mod
from .errors import ConfigError, PsifracError
from .fracops import OrderPair
from .psi import PsiFunction
from .solver import ImpulseSchedule, NonlocalSpec, ProblemSpec

DEFAULT_NODES = 256


@dataclass(frozen=True)
class SolverParams:
    nodes_per_segment: int = DEFAULT_NODES
    tol: float = 1e-12
    max_iter: int = 200


@dataclass(frozen=True)
class LoadedProblem:
    spec: ProblemSpec
    params: SolverParams
    exact: Optional[expr_mod.Expr]
    exact_src: Optional[str]
    sha256: str


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _get(table: dict, section: str, key: str, kind, required: bool = True,
         default=None):
    field = f"{section}.{key}"
    if key not in table:
        if required:
            raise ConfigError(field, "missing required key")
        return default
    value = table[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(field, f"expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(field, f"expected an integer, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(field, f"expected a string, got {value!r}")
        return value
    raise TypeError(kind)


def _section(doc: dict, name: str, required: bool = True) -> Optional[dict]:
    if name not in doc:
        if required:
            raise ConfigError(name, "missing required section")
        return None
    value = doc[name]
    if not isinstance(value, dict):
        raise ConfigError(name, "expected a table")
    return value


def load_problem(path: str | Path) -> LoadedProblem:
    """Parse and validate a problem file into a ProblemSpec plus settings."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read file: {exc}") from exc
    try:
        doc = tomli.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomli.TOMLDecodeError) as exc:
        raise ConfigError(str(path), f"not valid TOML: {exc}") from exc

    dom = _section(doc, "domain")
    a = _get(dom, "domain", "a", float)
    T = _get(dom, "domain", "T", float)
    if not a < T:
        raise ConfigError("domain", f"need a < T, got [{a}, {T}]")

    order_tab = _section(doc, "order")
    mu = _get(order_tab, "order", "mu", float)
    nu = _get(order_tab, "order", "nu", float)
    try:
        order = OrderPair(mu, nu)
    except PsifracError as exc:
        raise ConfigError("order", str(exc)) from exc

    psi_tab = _section(doc, "psi")
    kind = _get(psi_tab, "psi", "kind", str)
    try:
        if kind == "identity":
            psi = PsiFunction.identity(a, T)
        elif kind == "power":
            rho = _get(psi_tab, "psi", "rho", float)
            psi = PsiFunction.power(rho, a, T)
        elif kind == "log":
            psi = PsiFunction.log(a, T)
        elif kind == "expr":
            formula = _get(psi_tab, "psi", "formula", str)
            deriv = _get(psi_tab, "psi", "formula_deriv", str, required=False)
            psi = PsiFunction.from_expression(formula, a, T, deriv)
        else:
            raise ConfigError("psi.kind", f"unknown kind {kind!r}")
    except ConfigError:
        raise
    except PsifracError as exc:
        raise ConfigError("psi", str(exc)) from exc

    init = _section(doc, "initial")
    delta = _get(init, "initial", "delta", float)

    impulses = ImpulseSchedule()
    if "impulses" in doc:
        entries = doc["impulses"]
        if not isinstance(entries, list):
            raise ConfigError("impulses", "expected an array of tables")
        times, jumps = [], []
        for i, entry in enumerate(entries):
            if not isinstance(entry, dict):
                raise ConfigError(f"impulses[{i}]", "expected a table")
            times.append(_get(entry, f"impulses[{i}]", "t", float))
            jumps.append(_get(entry, f"impulses[{i}]", "zeta", float))
        try:
            impulses = ImpulseSchedule(tuple(times), tuple(jumps))
        except PsifracError as exc:
            raise ConfigError("impulses", str(exc)) from exc

    rhs = _section(doc, "rhs")
    f_src = _get(rhs, "rhs", "f", str)
    try:
        f_ast = expr_mod.parse(f_src, {"t", "u"})
    except PsifracError as exc:
        raise ConfigError("rhs.f", str(exc)) from exc

    nonlocal_spec = None
    nl_tab = _section(doc, "nonlocal", required=False)
    if nl_tab is not None:
        taus = nl_tab.get("taus")
        if (not isinstance(taus, list) or not taus
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                           for x in taus)):
            raise ConfigError("nonlocal.taus", "expected a nonempty number array")
        combiner_src = _get(nl_tab, "nonlocal", "combiner", str)
        Lg = _get(nl_tab, "nonlocal", "Lg", float)
        names = {f"x{j + 1}" for j in range(len(taus))}
        try:
            combiner = expr_mod.parse(combiner_src, names)
            nonlocal_spec = NonlocalSpec(tuple(float(x) for x in taus),
                                         combiner, Lg)
        except PsifracError as exc:
            raise ConfigError("nonlocal", str(exc)) from exc

    lipschitz_L = None
    lip_tab = _section(doc, "lipschitz", required=False)
    if lip_tab is not None:
        lipschitz_L = _get(lip_tab, "lipschitz", "L", float)

    sol_tab = _section(doc, "solver", required=False) or {}
    params = SolverParams(
        nodes_per_segment=_get(sol_tab, "solver", "nodes_per_segment", int,
                               required=False, default=DEFAULT_NODES),
        tol=_get(sol_tab, "solver", "tol", float, required=False, default=1e-12),
        max_iter=_get(sol_tab, "solver", "max_iter", int, required=False,
                      default=200),
    )
    if params.nodes_per_segment < 16:
        raise ConfigError("solver.nodes_per_segment", "must be at least 16")
    if params.tol <= 0:
        raise ConfigError("solver.tol", "must be positive")
    if params.max_iter < 1:
        raise ConfigError("solver.max_iter", "must be at least 1")

    exact_ast = None
    exact_src = None
    exact_tab = _section(doc, "exact", required=False)
    if exact_tab is not None:
        exact_src = _get(exact_tab, "exact", "u", str)
        try:
            exact_ast = expr_mod.parse(exact_src, {"t"})
        except PsifracError as exc:
            raise ConfigError("exact.u", str(exc)) from exc

    try:
        spec = ProblemSpec(a=a, T=T, order=order, psi=psi, delta=delta,
                           f=f_ast, impulses=impulses,
                           nonlocal_spec=nonlocal_spec,
                           lipschitz_L=lipschitz_L, f_src=f_src)
    except PsifracError as exc:
        raise ConfigError("problem", str(exc)) from exc

    return LoadedProblem(spec, params, exact_ast, exact_src,
                         hashlib.sha256(raw).hexdigest())

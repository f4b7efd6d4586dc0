from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from psifrac import (ImpulseSchedule, OrderPair, ProblemSpec, PsiFunction,
                     parse_expr)

REPO_ROOT = Path(__file__).parent.parent
PROBLEMS_DIR = REPO_ROOT / "problems"


def make_spec(a=0.0, T=1.0, mu=0.5, nu=0.5, psi_kind="identity", delta=1.0,
              f_src="0", impulses=(), nonlocal_spec=None, lipschitz_L=None,
              psi_rho=2.0):
    if psi_kind == "identity":
        psi = PsiFunction.identity(a, T)
    elif psi_kind == "power":
        psi = PsiFunction.power(psi_rho, a, T)
    elif psi_kind == "log":
        psi = PsiFunction.log(a, T)
    else:
        raise ValueError(psi_kind)
    times = tuple(t for t, _ in impulses)
    jumps = tuple(z for _, z in impulses)
    return ProblemSpec(
        a=a, T=T, order=OrderPair(mu, nu), psi=psi, delta=delta,
        f=parse_expr(f_src, {"t", "u"}), impulses=ImpulseSchedule(times, jumps),
        nonlocal_spec=nonlocal_spec, lipschitz_L=lipschitz_L, f_src=f_src)


EXAMPLE1_F = "9/(5*gamma(2/3)) * t^(5/3) - t^4/16 + u^2/16"
EXAMPLE2_F = "sin(t)^4 / (t+3)^3 * abs(u) / (1 + abs(u))"


@pytest.fixture(scope="session")
def example1_spec():
    return make_spec(mu=1.0 / 3.0, nu=1.0, delta=0.0, f_src=EXAMPLE1_F,
                     impulses=((0.5, 0.0),), lipschitz_L=0.125)


@pytest.fixture(scope="session")
def example2_spec():
    return make_spec(mu=0.5, nu=0.5, delta=1.0, f_src=EXAMPLE2_F,
                     impulses=((1.0 / 3.0, 0.1),), lipschitz_L=1.0 / 64.0)

import pytest

from conftest import PROBLEMS_DIR
from psifrac import ConfigError
from psifrac.problemfile import load_problem


def test_load_first_shipped_problem():
    loaded = load_problem(PROBLEMS_DIR / "example1_caputo.toml")
    spec = loaded.spec
    assert (spec.a, spec.T) == (0.0, 1.0)
    assert spec.order.mu == pytest.approx(1.0 / 3.0)
    assert spec.order.nu == 1.0
    assert spec.rho == 1.0
    assert spec.delta == 0.0
    assert spec.impulses.times == (0.5,)
    assert spec.impulses.jumps == (0.0,)
    assert spec.lipschitz_L == 0.125
    assert loaded.params.nodes_per_segment == 2048
    assert loaded.exact is not None
    assert len(loaded.sha256) == 64


def test_load_second_shipped_problem():
    loaded = load_problem(PROBLEMS_DIR / "example2.toml")
    spec = loaded.spec
    assert spec.order.mu == 0.5 and spec.order.nu == 0.5
    assert spec.rho == 0.75
    assert spec.delta == 1.0
    assert spec.impulses.jumps == (0.1,)
    assert spec.lipschitz_L == pytest.approx(1.0 / 64.0)
    assert loaded.exact is None


def write(tmp_path, text):
    p = tmp_path / "problem.toml"
    p.write_text(text)
    return p


MINIMAL = """
[domain]
a = 0.0
T = 1.0
[order]
mu = 0.5
nu = 0.5
[psi]
kind = "identity"
[initial]
delta = 1.0
[rhs]
f = "0*t"
"""


def test_minimal_problem_defaults(tmp_path):
    loaded = load_problem(write(tmp_path, MINIMAL))
    assert len(loaded.spec.impulses) == 0
    assert loaded.spec.nonlocal_spec is None
    assert loaded.params.nodes_per_segment == 256
    assert loaded.params.tol == 1e-12


def test_psi_expression_kind(tmp_path):
    text = MINIMAL.replace('kind = "identity"',
                           'kind = "expr"\nformula = "t^3 + t"\n'
                           'formula_deriv = "3*t^2 + 1"')
    loaded = load_problem(write(tmp_path, text))
    assert loaded.spec.psi.kind == "expr"
    assert loaded.spec.psi.eval(0.5) == pytest.approx(0.625)


def test_psi_expression_kind_rejects_non_monotone(tmp_path):
    text = MINIMAL.replace('kind = "identity"',
                           'kind = "expr"\nformula = "0 - t"')
    with pytest.raises(ConfigError) as err:
        load_problem(write(tmp_path, text))
    assert err.value.field == "psi"


def test_nonlocal_section(tmp_path):
    text = MINIMAL + """
[nonlocal]
taus = [0.5, 1.0]
combiner = "(x1 + x2)/8"
Lg = 0.05
"""
    loaded = load_problem(write(tmp_path, text))
    nl = loaded.spec.nonlocal_spec
    assert nl is not None
    assert nl.taus == (0.5, 1.0)
    assert nl.lipschitz_Lg == 0.05


@pytest.mark.parametrize("mangle, field", [
    (lambda s: s.replace('[domain]\na = 0.0', '[domain]'), "domain.a"),
    (lambda s: s.replace('mu = 0.5', 'mu = 1.5'), "order"),
    (lambda s: s.replace('kind = "identity"', 'kind = "parabola"'), "psi.kind"),
    (lambda s: s.replace('f = "0*t"', 'f = "0*t +"'), "rhs.f"),
    (lambda s: s.replace('f = "0*t"', 'f = "q + t"'), "rhs.f"),
    (lambda s: s.replace('a = 0.0', 'a = 2.0'), "domain"),
    (lambda s: s + '\n[solver]\nnodes_per_segment = 4\n',
     "solver.nodes_per_segment"),
    (lambda s: s + '\n[[impulses]]\nt = 1.5\nzeta = 0.1\n', "problem"),
    (lambda s: s + '\n[[impulses]]\nt = 0.5\nzeta = 0.1\n'
     '[[impulses]]\nt = 0.25\nzeta = 0.1\n', "impulses"),
    (lambda s: s + '\n[nonlocal]\ntaus = []\ncombiner = "x1"\nLg = 0.1\n',
     "nonlocal.taus"),
    (lambda s: s.replace('delta = 1.0', 'delta = "one"'), "initial.delta"),
])
def test_config_errors_name_the_field(tmp_path, mangle, field):
    with pytest.raises(ConfigError) as err:
        load_problem(write(tmp_path, mangle(MINIMAL)))
    assert err.value.field == field


def test_not_toml(tmp_path):
    with pytest.raises(ConfigError):
        load_problem(write(tmp_path, "{not toml]["))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_problem(tmp_path / "nope.toml")

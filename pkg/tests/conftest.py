import sympy as sp
from hypothesis import strategies as st

from frwcosmo.expr import function, symbol

X, Y = symbol("x"), symbol("y")
F = function("f")

_leaves = st.sampled_from([X, Y, sp.Integer(1), sp.Integer(2), sp.Rational(1, 2), sp.Integer(-3)])


def _extend(children):
    return st.one_of(
        st.tuples(children, children).map(lambda p: p[0] + p[1]),
        st.tuples(children, children).map(lambda p: p[0] * p[1]),
        st.tuples(children, children).map(lambda p: p[0] - p[1]),
        st.tuples(children, st.sampled_from([2, 3, -1])).map(lambda p: p[0] ** p[1]),
        children.map(sp.exp),
        children.map(sp.sin),
        children.map(sp.cos),
        children.map(lambda c: F(c)),
    )


# small random expression trees over x, y and an opaque f
expressions = st.recursive(_leaves, _extend, max_leaves=6).filter(
    lambda e: e.is_finite is not False and not e.has(sp.zoo, sp.nan)
)


# acceptance criteria register their outcome here; printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} [{n}] {title}: {detail}")

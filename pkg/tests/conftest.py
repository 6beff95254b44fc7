from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from hurwitz.algebra import Partition, PermTuple
from hurwitz.ffsearch import INF
from hurwitz.padic import CoherentSystem, ResidueVector, Role

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

CUI_CYCLES = [
    "(1,7,11,2)(3,8)(4,5)(6,10)(9,12,13)",
    "(1,3,12,4)(5,9)(6,7)(10,13,11)(2,8)",
    "(1,5,13,6)(7,10)(2,3)(8,11,12)(4,9)",
]
CUI_SHAPE = Partition((4, 3, 2, 2, 2))

# W_1 = (x-5)^3 (x^3+3x^2+2x+3)^2, W_2 = x^4 (x+3)^3 (x^3-3x-5)^2,
# W_3 = (x-1)^4 (x-3)^3 (x^3-2x-3)^2, lambda = -4, in coordinate order
A0 = [-5, 3, 2, 3, 3, 0, -3, -5, -3, 0, -2, -3, -4]
A0_PRINTED = [-5, 3, 2, 3, 3, -3, 0, -5, -3, -2, 0, -3, -4]
A1_PRINTED = [50, -41, 13, 25, -19, -33, 19, -60, -47, 11, -46, -58, 51]
W121_64 = 1400834756308742009361916361765119584358776523123371526525883115012
P121 = [16, 63, 141, 195, 195, 117, 39]


def cui_roles():
    return [
        [Role(4, 1, INF), Role(3, 1), Role(2, 3)],
        [Role(4, 1, 0), Role(3, 1), Role(2, 3)],
        [Role(4, 1, 1), Role(3, 1), Role(2, 3)],
    ]


def cui_system(a=A0) -> CoherentSystem:
    return CoherentSystem(
        11, 1, 13, (CUI_SHAPE,) * 3, cui_roles(), [INF, 0, Fraction(1)], ResidueVector([x % 11 for x in a], 11, 1)
    )


@pytest.fixture
def cui_tuple():
    return PermTuple.from_cycles(13, CUI_CYCLES)


@pytest.fixture
def cui_sys():
    return cui_system()


# acceptance bookkeeping: one line per criterion in the terminal summary
_ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is None or (rep.when != "call" and not (rep.failed or rep.skipped)):
        return
    n, title = m.args
    status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
    prev = _ACCEPTANCE.get(n)
    if prev is None or prev[0] == "PASS":
        _ACCEPTANCE[n] = (status, title)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        status, title = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {title}")

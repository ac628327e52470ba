import pytest

from artifact import coupling, geometry, modes


@pytest.fixture(scope="session")
def default_decs():
    """Default-truncation decompositions, keyed by (regime, F)."""
    cache = {}

    def get(regime, F, l_max=40, n_z=41, m_max=5):
        key = (regime, F, l_max, n_z, m_max)
        if key not in cache:
            red = geometry.reduced(regime, F)
            cache[key] = [modes.decompose(coupling.build_block(red, m, l_max, n_z)) for m in range(m_max + 1)]
        return cache[key]

    return get


ACCEPTANCE = {}


def record(criterion, passed, detail):
    """Store the outcome of one acceptance clause for the terminal summary."""
    ACCEPTANCE.setdefault(criterion, []).append((bool(passed), detail))
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[c]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d + ("" if p else " [not met]") for p, d in parts)
        terminalreporter.write_line(f"C{c} {'PASS' if ok else 'FAIL'}: {detail}")

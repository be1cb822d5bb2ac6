import functools

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", deadline=None, max_examples=20,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("repo")

# acceptance criterion -> list of (ok, detail); printed in the terminal summary
ACCEPTANCE = {}


def record(criterion, ok, detail):
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        rows = ACCEPTANCE[crit]
        ok = all(r[0] for r in rows)
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}")
        for good, detail in rows:
            tr.write_line(f"    [{'pass' if good else 'FAIL'}] {detail}")


@pytest.fixture(scope="session")
def k3():
    from tpigame.generators import generate
    return generate("21K3")


@pytest.fixture(scope="session")
def k3_tpi(k3):
    from tpigame.conversion import convert_basic, convert_folded, convert_pruned
    return {"basic": convert_basic(k3), "pruned": convert_pruned(k3),
            "folded": convert_folded(k3)}


@functools.lru_cache(maxsize=None)
def _cached(name):
    from tpigame.generators import generate
    return generate(name)

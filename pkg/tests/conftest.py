import pytest
from hypothesis import settings

# exact-arithmetic examples vary a lot in cost; timing is not under test
settings.register_profile("regsum", deadline=None)
settings.load_profile("regsum")

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def store():
    from regsum.constants import build_store

    return build_store()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

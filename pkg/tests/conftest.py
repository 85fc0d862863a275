import pytest


def pytest_addoption(parser):
    parser.addoption("--seed", type=int, default=20231, help="seed for the synthetic noise oracles")


@pytest.fixture
def seed(request) -> int:
    return request.config.getoption("--seed")


# acceptance verdicts, printed once at the end of the session
ACCEPTANCE: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE, key=lambda r: int(r[0].split()[1])):
        terminalreporter.write_line(f"{name}: {'PASS' if ok else 'FAIL'}  {detail}")

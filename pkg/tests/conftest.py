import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance_log(request):
    """Callable ``log(criterion, check, ok, detail)`` collected into the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def log(criterion: int, check: str, ok: bool, detail: str = ""):
        lines.append((criterion, check, bool(ok), detail))

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if not lines:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit, check, ok, detail in lines:
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {crit}: {check}  {detail}".rstrip())
    tr.write_line("")
    for crit in sorted({c for c, *_ in lines}):
        checks = [ok for c, _, ok, _ in lines if c == crit]
        status = "PASS" if all(checks) else "FAIL"
        tr.write_line(f"criterion {crit}: {status} ({sum(checks)}/{len(checks)} checks)")

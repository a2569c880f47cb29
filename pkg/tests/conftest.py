import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def record_criterion(request):
    """Record one PASS/FAIL line for the acceptance summary printed at the end of the run."""
    lines = request.config.stash[_LINES]

    def record(number, title, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {number:>2}: {title}" + (f" -- {detail}" if detail else "")
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines, key=lambda x: x[0]):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def flight_cache():
    """Memoized closed-loop flights keyed by their override list, shared across test modules."""
    from pitchtrack.config import load_config
    from pitchtrack.harness import run_flight

    cache = {}

    def get(*overrides):
        key = tuple(overrides)
        if key not in cache:
            cache[key] = run_flight(load_config(None, list(key)))
        return cache[key]

    return get

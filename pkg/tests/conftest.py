import time

import pytest

from faisac.cli import run_scheme
from faisac.scenario import builtin_scenario


class RunCache:
    """Final states of desk-scale runs, shared by every test module of a session."""

    def __init__(self):
        self._runs = {}

    def get(self, scheme="proposed", seed=0, swarm=20, pso_iters=30, **changes):
        base = builtin_scenario("desk")
        changes = {k: v for k, v in changes.items() if getattr(base, k) != v}
        if scheme != "pso":
            swarm = pso_iters = None
        if scheme not in ("rpa", "pso"):
            seed = None
        key = (scheme, seed, swarm, pso_iters, tuple(sorted(changes.items())))
        if key not in self._runs:
            sc = base.with_changes(**changes) if changes else base
            t0 = time.perf_counter()
            kw = {k: v for k, v in dict(seed=seed, swarm=swarm, pso_iters=pso_iters).items()
                  if v is not None}
            state = run_scheme(sc, scheme, **kw)
            self._runs[key] = (state, time.perf_counter() - t0)
        return self._runs[key]


_LINES = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line; returns ``ok`` so tests can assert on it."""
    lines = request.config.stash.setdefault(_LINES, [])

    def record(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2} {title}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def runs():
    return RunCache()


@pytest.fixture(scope="session")
def desk():
    return builtin_scenario("desk")

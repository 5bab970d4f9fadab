import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# jit compilation makes the first example slow
settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_path(rng, N, C):
    steps = rng.integers(-C, C + 1, size=N - 1)
    return np.concatenate([[0], np.cumsum(steps)])


def smooth_grid(rng, M, N, width=None):
    """Random grid whose columns are smooth periodic signals."""
    width = width or max(2, M // 8)
    k = np.fft.rfftfreq(M) * M
    coef = (rng.standard_normal((len(k), N)) + 1j * rng.standard_normal((len(k), N)))
    coef *= np.exp(-((k / width) ** 2))[:, None]
    return np.fft.irfft(coef, n=M, axis=0)


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one acceptance line, print it and fail the test if it did not hold."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(number, title, ok, detail=""):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        lines.append(line)
        print(line, flush=True)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

import collections
import sys

import numpy as np
import pytest


class ScriptedRNG:
    """Stand-in for ``numpy.random.Generator`` that replays fixed draws.

    Each method pops from its own queue so a test can spell out exactly
    which numbers the code under test sees.
    """

    def __init__(self, random=(), integers=(), normal=(), choice=()):
        self._random = collections.deque(random)
        self._integers = collections.deque(integers)
        self._normal = collections.deque(normal)
        self._choice = collections.deque(choice)

    def random(self, size=None):
        if size is None:
            return self._random.popleft()
        return np.array([self._random.popleft() for _ in range(size)])

    def integers(self, n):
        v = self._integers.popleft()
        assert 0 <= v < n
        return v

    def standard_normal(self):
        return self._normal.popleft()

    def choice(self, options, size, replace=False):
        picked = self._choice.popleft()
        assert len(picked) == size
        assert all(p in list(options) for p in picked)
        return np.array(picked)

    def exhausted(self):
        return not (self._random or self._integers or self._normal or self._choice)


@pytest.fixture
def scripted():
    return ScriptedRNG


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

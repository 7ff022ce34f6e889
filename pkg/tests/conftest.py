import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from smallci.space import build_space  # noqa: E402


@pytest.fixture
def space41():
    return build_space(4, 1)


# first calls pay numba compile time, so wall-clock deadlines are meaningless
from hypothesis import settings  # noqa: E402

settings.register_profile("smallci", deadline=None, max_examples=60)
settings.load_profile("smallci")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)

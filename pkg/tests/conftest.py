import sys
import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from bandgrowth.field import FieldConfig

settings.register_profile("ci", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


@pytest.fixture(scope="session")
def frozen():
    return json.loads((Path(__file__).parent / "data" / "frozen.json").read_text())


@pytest.fixture(params=["gfp:7", "q", "gfp:2305843009213693951"], ids=["gf7", "q", "gf-mersenne61"])
def field(request):
    return FieldConfig.parse(request.param)


@pytest.fixture
def gf7():
    return FieldConfig.gfp(7)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)

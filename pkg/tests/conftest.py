import pytest

import helpers
from robolight.oracle import OracleScene, PointLight


def pytest_terminal_summary(terminalreporter):
    if helpers.ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in helpers.ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def two_light_scene():
    lights = (
        PointLight(position_mm=(40.0, 40.0, 120.0), rgb_intensity=(3e4, 2e4, 1e4)),
        PointLight(position_mm=(120.0, 80.0, 200.0), rgb_intensity=(1e4, 3e4, 5e4)),
    )
    return OracleScene(albedo=helpers.gradient_albedo(), lights=lights, spacing_mm=10.0)

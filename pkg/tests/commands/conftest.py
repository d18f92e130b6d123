"""Shared fixtures for command tests."""

import pytest
from click.testing import CliRunner

LINE = """
[topology]
kind = "line"
k_links = 2
rho = 0.4

[links]
eps = 0.0

[run]
n_pkt = 1000
"""


@pytest.fixture
def runner(tmp_path):
    """CliRunner whose execution logs land in the test's tmp directory."""
    return CliRunner(env={"LEOAGE_LOG_DIR": str(tmp_path / "runs")})


@pytest.fixture
def write_scenario(tmp_path):
    """Write scenario text to a file and return its path."""

    def _write(text: str = LINE, name: str = "scenario.toml") -> str:
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return _write

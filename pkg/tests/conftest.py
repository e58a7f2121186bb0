import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


@pytest.fixture
def run_osr(tmp_path):
    """Invoke the CLI in a subprocess, returning the CompletedProcess."""
    import subprocess

    def _run(*args, env=None):
        full_env = dict(os.environ, **(env or {}))
        return subprocess.run(
            [sys.executable, "-m", "osr.cli", *map(str, args)],
            capture_output=True, text=True, cwd=tmp_path, env=full_env,
        )

    return _run

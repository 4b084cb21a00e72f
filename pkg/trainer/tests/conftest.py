import shutil
import subprocess

import pytest

TRIGRASP = shutil.which("trigrasp")

requires_toolkit = pytest.mark.skipif(
    TRIGRASP is None, reason="trigrasp CLI not installed")


def run_toolkit(*args) -> subprocess.CompletedProcess:
    result = subprocess.run([TRIGRASP, *args], capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
    return result


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """8-image synthetic corpus with k=36 labels, built via the toolkit CLI."""
    root = tmp_path_factory.mktemp("corpus")
    run_toolkit("synth", "--count", "8", "--seed", "7",
                "--image-size", "96", "--out", str(root / "data"))
    run_toolkit("rasterize", "--ann", str(root / "data" / "annotations.json"),
                "--out", str(root / "labels"), "--k", "36")
    return root

import subprocess
import sys
from pathlib import Path

import pytest

FRONTEND_SRC = Path(__file__).resolve().parent.parent / "src"
PRIMARY_SRC = Path(__file__).resolve().parent.parent.parent / "src"

sys.path.insert(0, str(FRONTEND_SRC))


def run_bandsplit(args, out_path):
    """Invoke the primary CLI (the producer of our input CSVs)."""
    cmd = [sys.executable, "-m", "bandsplit", *args, "--out", str(out_path)]
    env = {"PYTHONPATH": str(PRIMARY_SRC), "PATH": "/usr/bin:/bin"}
    subprocess.run(cmd, check=True, env=env, capture_output=True)
    return out_path


@pytest.fixture(scope="session")
def throughput_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("csv") / "sweep.csv"
    return run_bandsplit(
        ["sweep", "--rate", "0.5,1.0,1.5,2.0,2.5,3.0", "--lambda-p", "0.5,0.8"],
        out)


@pytest.fixture(scope="session")
def delay_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("csv") / "delay.csv"
    return run_bandsplit(
        ["optimize-delay", "--rate", "0.5,1.0,1.5", "--lambda-p", "0.5",
         "--lambda-s", "0.4", "--delay-cap", "2.0", "--grid-step", "0.01",
         "--slots", "20000", "--reps", "2", "--warmup", "2000"],
        out)

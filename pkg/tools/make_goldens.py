"""Regenerate the committed golden pipeline outputs in tests/golden/synthcity.

Runs every stage on the synthetic-city fixtures in a scratch directory and
copies the byte-stable outputs over. manifest.json and llm_report.json are
left out on purpose: both contain wall-clock timings.
"""

from __future__ import annotations

import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from hoodclaims import cli  # noqa: E402

CONFIG = REPO / "tests" / "data" / "synthcity" / "config.cfg"
GOLDEN = REPO / "tests" / "golden" / "synthcity"
SKIP = {"manifest.json", "llm_report.json"}
STAGES = [
    "ingest", "label-string", "label-llm", "evaluate",
    "geo", "topics", "regress", "report",
]


def main():
    with tempfile.TemporaryDirectory() as scratch:
        for stage in STAGES:
            code = cli.main([stage, "--config", str(CONFIG), "--out", scratch])
            if code != 0:
                raise SystemExit(f"stage {stage} exited {code}")
        if GOLDEN.exists():
            shutil.rmtree(GOLDEN)
        GOLDEN.mkdir(parents=True)
        copied = 0
        for path in sorted(Path(scratch).rglob("*")):
            if path.is_dir() or path.name in SKIP:
                continue
            target = GOLDEN / path.relative_to(scratch)
            target.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(path, target)
            copied += 1
    print(f"{copied} golden files written to {GOLDEN}")


if __name__ == "__main__":
    main()

"""Run the whole pipeline on the bundled mini corpus.

Equivalent to `stormlens run-all --config configs/mini.yaml` with the
output redirected into a scratch directory. Every stage writes its
artifacts under that directory and records a checksum in manifest.json,
so a rerun with the same config is a fast no-op per stage and the report
at the end is byte-for-byte reproducible.
"""

import tempfile
from pathlib import Path

from stormlens.cli import main

config = Path(__file__).resolve().parent.parent / "configs" / "mini.yaml"
out = Path(tempfile.mkdtemp(prefix="stormlens_demo_")) / "mini"

rc = main(["run-all", "--config", str(config), "--out", str(out)])
print(f"\nexit code: {rc}")

# What landed on disk, one line per artifact.
print(f"\nartifacts under {out}:")
for path in sorted(out.rglob("*")):
    if path.is_file():
        rel = path.relative_to(out)
        print(f"  {rel}  ({path.stat().st_size} bytes)")

# The report is the human-facing summary; show its headline sections.
report = out / "report.md"
print("\nreport headlines:")
for line in report.read_text().splitlines():
    if line.startswith("#") or line.startswith("- event"):
        print(f"  {line}")

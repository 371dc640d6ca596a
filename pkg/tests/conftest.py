"""Shared fixtures and the acceptance-criteria summary hook."""

from __future__ import annotations

import re

import numpy as np
import pytest

_CRITERION = re.compile(r"test_criterion_(\d+)_([a-z0-9_]+)")


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile the jit sampler once so timed tests measure steady state."""
    from stormlens.topics import lda_fit

    docs = [np.array([0, 1, 2], dtype=np.int64), np.array([1, 2], dtype=np.int64)]
    lda_fit(docs, vocab_size=3, n_topics=2, iterations=2, seed=0)
    return True


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion after the run."""
    outcomes: dict[tuple[int, str], list[str]] = {}
    for status in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            match = _CRITERION.search(nodeid)
            if match is None:
                continue
            key = (int(match.group(1)), match.group(2))
            outcomes.setdefault(key, []).append(status)
    if not outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for (number, label), seen in sorted(outcomes.items()):
        if "failed" in seen or "error" in seen:
            verdict = "FAIL"
        elif "passed" in seen:
            verdict = "PASS"
        else:
            verdict = "SKIP"
        terminalreporter.write_line(f"criterion {number:02d} {label}: {verdict}")

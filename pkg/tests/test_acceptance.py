"""End-to-end acceptance: ``run all`` twice on the default config, one verdict line per criterion."""
from __future__ import annotations

import json
import subprocess
import sys

import pytest

from hyperlab.harness.claims import CLAIMS, claims_for_criterion

CRITERIA = range(1, 12)


def _run_all(out):
    return subprocess.run([sys.executable, "-m", "hyperlab.harness.cli", "run", "all", "--out", str(out)],
                          capture_output=True, text=True, timeout=1800)


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    dirs = [tmp_path_factory.mktemp(f"run{i}") for i in (1, 2)]
    procs = [_run_all(d) for d in dirs]
    verdicts = json.loads((dirs[0] / "verdicts.json").read_text())
    return {"dirs": dirs, "codes": [p.returncode for p in procs], "stderr": [p.stderr for p in procs],
            "by_claim": {r["claim"]: r for r in verdicts["verdicts"]}}


def _csv_bytes(d):
    return {p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))}


def _criterion_status(runs, n):
    ids = claims_for_criterion(n)
    recs = [runs["by_claim"].get(c) for c in ids]
    ok = all(r is not None and r["passed"] for r in recs)
    if n == 11:
        a, b = (_csv_bytes(d) for d in runs["dirs"])
        ok = ok and bool(a) and a == b
    return ok, ids, recs


def test_run_all_exit_code(runs):
    assert runs["codes"] == [0, 0], runs["stderr"]
    assert set(runs["by_claim"]) == set(CLAIMS)


@pytest.mark.parametrize("n", CRITERIA)
def test_criterion(runs, n, capsys):
    ok, ids, recs = _criterion_status(runs, n)
    detail = "; ".join(f"{c}={'PASS' if r and r['passed'] else 'FAIL'}" for c, r in zip(ids, recs))
    with capsys.disabled():
        print(f"\ncriterion {n:2d}: {'PASS' if ok else 'FAIL'}  ({detail})")
    assert ok, [r for r in recs if not (r and r["passed"])]

"""Acceptance suite: one test per criterion, parameters from the packaged manifest.

Each test prints a single line ``criterion N: PASS|FAIL`` followed by the
individual check lines (check_id,status,statistic,threshold).
"""

import pytest

from gibbs_shapes.acceptance import CRITERIA, load_manifest, run_criterion

MANIFEST = load_manifest()


@pytest.mark.parametrize("cid", list(CRITERIA), ids=[f"criterion_{c}" for c in CRITERIA])
def test_criterion(cid):
    results = run_criterion(cid, MANIFEST)
    ok = bool(results) and all(r.passed for r in results)
    detail = "; ".join(r.line() for r in results)
    print(f"criterion {cid}: {'PASS' if ok else 'FAIL'} [{detail}]")
    assert ok, detail

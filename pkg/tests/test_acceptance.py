"""Acceptance gate: every numbered criterion of the verification suite must
pass at its stated tolerance. One pass/fail line is printed per criterion
(also available via `cliquepgd verify`)."""

import pytest

from cliquepgd.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("cid,name", [(cid, name) for cid, name, _ in CRITERIA],
                         ids=[f"criterion-{cid}" for cid, _, _ in CRITERIA])
def test_criterion(cid, name, capsys):
    result = run_criterion(cid)
    with capsys.disabled():
        print(result.line(), flush=True)
    assert result.passed, f"criterion {cid} ({name}): {result.detail}"

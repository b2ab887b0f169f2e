from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from sce_indel.formats import encode
from sce_indel.seqgen import EditScript, build_homologous_path, correspondence

WORKED_PATH = [(0, 0), (1, 1), (2, 2), (3, 3), (3, 4), (4, 5), (5, 5), (6, 6), (7, 7), (8, 8)]

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def worked_script() -> EditScript:
    """Insert T left of 4, delete 5, substitute 6->T and 7->A over all of TACTTCGC."""
    return EditScript.from_events(
        0, 8,
        insertions={4: encode("T")},
        deletions=[5],
        substitutions={6: int(encode("T")[0]), 7: int(encode("A")[0])},
    )


@dataclass
class Worked:
    S: np.ndarray
    S_prime: np.ndarray
    script: EditScript

    @property
    def path(self):
        return build_homologous_path(self.script)

    @property
    def f(self):
        return correspondence(self.path, self.script, self.S.size)


@pytest.fixture
def worked() -> Worked:
    S = encode("TACTTCGC")
    script = worked_script()
    return Worked(S, script.apply(S), script)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"CRITERION {n} {'PASS' if ok else 'FAIL'}: {detail}")

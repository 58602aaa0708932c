import itertools

import numpy as np
import pytest

from cardhtr.alphabet import build_alphabet, polish_alphabet
from cardhtr.decode import collapse
from cardhtr.emissions import EmissionMatrix


@pytest.fixture(scope="session")
def pl():
    return polish_alphabet()


@pytest.fixture(scope="session")
def ab():
    """Blank plus {a, b}: C = 3, small enough for path enumeration."""
    return build_alphabet(["a", "b"])


def emat(rows, alphabet):
    return EmissionMatrix(np.asarray(rows, dtype=float), alphabet.symbols)


def brute_label_probs(m, alphabet):
    """Label -> probability by summing over all C**T paths."""
    out = {}
    for path in itertools.product(range(m.C), repeat=m.T):
        p = float(np.prod([m.probs[t, c] for t, c in enumerate(path)])) if m.T else 1.0
        label = collapse(path, alphabet)
        out[label] = out.get(label, 0.0) + p
    return out


# One "PASS/FAIL criterion N: ..." line per acceptance criterion, printed at the end of the run.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])

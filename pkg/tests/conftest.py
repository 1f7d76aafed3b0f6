import numpy as np
import pytest

from advhate.corpus import write_corpus
from advhate.corrector import FrequencyDictionary, load_frequency_list
from advhate.synthetic import make_corpus


@pytest.fixture(scope="session")
def english():
    return FrequencyDictionary(load_frequency_list())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def fixture_rows():
    return make_corpus(300, seed=7)


@pytest.fixture
def fixture_csv(tmp_path, fixture_rows):
    path = tmp_path / "labeled.csv"
    write_corpus(fixture_rows, path)
    return path


def write_csv(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one acceptance line; the test still asserts on its own."""
    def record(number, name, ok, detail=""):
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {name}" + (f" ({detail})" if detail else "")
        _VERDICTS.append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(_VERDICTS):
            terminalreporter.write_line(line)

import os
import shutil

import pytest

from reconfigsim.designs import corpus_configuration, corpus_dir
from reconfigsim.model import elaborate


@pytest.fixture(scope="session")
def corpus():
    return corpus_dir()


@pytest.fixture
def corpus_copy(tmp_path, corpus):
    dest = tmp_path / "corpus"
    shutil.copytree(corpus, dest)
    return dest


@pytest.fixture(scope="session")
def design():
    """Elaborated corpus design by name."""
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = elaborate(corpus_configuration(name))
        return cache[name]
    return get


def corpus_path(*parts):
    return os.path.join(corpus_dir(), *parts)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        passed, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")

"""Shared fixtures and a tiny in-process CLI runner."""

import contextlib
import io
import os

import pytest

from intwalk import named_spec
from intwalk.cli import main


@pytest.fixture(scope="session")
def simple():
    return named_spec("simple")


@pytest.fixture(scope="session")
def lazy():
    return named_spec("lazy(1/2)")


@pytest.fixture(scope="session")
def geom():
    return named_spec("geom-rc(1/2)")


@pytest.fixture(scope="session")
def lap():
    return named_spec("laplace(1)")


@pytest.fixture(scope="session")
def heavy():
    return named_spec("heavy(3/2)")


class CliResult:
    def __init__(self, code, out, err):
        self.code = code
        self.out = out
        self.err = err

    @property
    def rows(self):
        """Parsed CSV rows from stdout (header + data), as lists of strings."""
        lines = [ln for ln in self.out.splitlines() if ln]
        return [ln.split(",") for ln in lines]

    def column(self, name):
        rows = self.rows
        i = rows[0].index(name)
        return [r[i] for r in rows[1:]]


def run_cli(*argv, env=None):
    """Invoke the CLI in-process, capturing exit code, stdout and stderr."""
    saved = {}
    env = env or {}
    for k, v in env.items():
        saved[k] = os.environ.get(k)
        os.environ[k] = v
    out, err = io.StringIO(), io.StringIO()
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = main(list(argv))
    finally:
        for k, old in saved.items():
            if old is None:
                os.environ.pop(k, None)
            else:
                os.environ[k] = old
    return CliResult(code, out.getvalue(), err.getvalue())


@pytest.fixture
def cli():
    return run_cli

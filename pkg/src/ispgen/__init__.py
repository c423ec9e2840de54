"""Generate unit-test drivers for library APIs with a language model.

Each method is split into input-space partitions, each partition gets a
constructor plan and concrete values, and the resulting drivers are run
against an instrumented copy of the library to measure branch coverage and
collect exceptions.
"""

from __future__ import annotations

from pathlib import Path

__version__ = "0.1.0"

_FIXTURES = Path(__file__).resolve().parent / "fixtures"


def fixture_corpus() -> Path:
    """The small bundled library used by the demos and tests."""
    return _FIXTURES / "corpus"


def fixture_stubs() -> Path:
    """Scripted model responses for :func:`fixture_corpus`."""
    return _FIXTURES / "stubs" / "corpus.json"

"""Shared fixtures: models from the zoo and an on-disk CLI workspace."""

from __future__ import annotations

from pathlib import Path

import pytest

from sidutxt import save_bundle

import acceptance_log
import modelzoo

DATA_DIR = Path(__file__).parent / "data"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo acceptance verdicts so they stay visible under capture."""
    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict in acceptance_log.RESULTS:
        terminalreporter.write_line(f"ACCEPTANCE {name}: {verdict}")


@pytest.fixture
def tiny_model():
    return modelzoo.random_tiny_bundle(1234)


@pytest.fixture
def lexicon_model():
    return modelzoo.lexicon_bundle()


@pytest.fixture
def presence_model():
    return modelzoo.presence_bundle()


@pytest.fixture(scope="session")
def cli_workspace(tmp_path_factory):
    """Bundle file plus corpus and annotation paths for subprocess tests."""
    root = tmp_path_factory.mktemp("cli")
    bundle_path = root / "lexicon.sidu"
    save_bundle(modelzoo.lexicon_bundle(), bundle_path)
    return {
        "bundle": bundle_path,
        "corpus": DATA_DIR / "corpus",
        "annotations": DATA_DIR / "annotations.json",
        "root": root,
    }

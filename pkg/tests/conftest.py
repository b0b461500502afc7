from importlib import resources

import pytest

from medalcast import ingest, pipeline


@pytest.fixture(scope="session")
def fixture_dir():
    with resources.as_file(resources.files("medalcast") / "data" / "fixture") as path:
        yield path


@pytest.fixture(scope="session")
def fixture_panel(fixture_dir):
    panel, _ = ingest.load_all(fixture_dir / "athletes.csv", fixture_dir / "tallies.csv", fixture_dir / "hosts.csv")
    return panel


@pytest.fixture(scope="session")
def quick_run(fixture_panel):
    """A short training run on the fixture, shared by tests that only need a trained model."""
    return pipeline.train_and_evaluate(fixture_panel, pipeline.RunConfig(epochs=40))


_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance(capsys):
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)

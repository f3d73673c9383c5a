import json
import pathlib
import random

import pytest

from gnnseplab.gnn import RecurrentGNN, random_relu_gnn

DATA = pathlib.Path(__file__).parent / "data"


def load_model(name: str) -> RecurrentGNN:
    return RecurrentGNN.from_json(json.loads((DATA / name).read_text()))


@pytest.fixture
def identity_gnn() -> RecurrentGNN:
    return load_model("identity.json")


@pytest.fixture
def relu_gnn() -> RecurrentGNN:
    return load_model("relu_fixed.json")


def relu_nets(count: int, seed: int, d: int = 1):
    rng = random.Random(seed)
    return [random_relu_gnn(rng, d) for _ in range(count)]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

from __future__ import annotations

import json
from pathlib import Path

import pytest

from csmc import OracleDenoiser

from helpers import bracket_fixture, make_model, two_state_data


@pytest.fixture
def masked_model():
    return make_model("masked", vocab_size=2, num_steps=4)


@pytest.fixture
def uniform_model():
    return make_model("uniform", vocab_size=2, num_steps=4)


@pytest.fixture
def toy_data():
    return two_state_data()


@pytest.fixture
def toy_oracle(masked_model, toy_data):
    return OracleDenoiser(toy_data, masked_model)


@pytest.fixture(scope="session")
def bracket():
    return bracket_fixture()


@pytest.fixture
def write_config(tmp_path):
    def _write(cfg: dict, name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(cfg, indent=2))
        return path

    return _write

import pathlib

import pytest

from mactor import initial_config, parse_program

PROGRAMS = pathlib.Path(__file__).parent / "programs"


def load_source(name: str) -> str:
    return (PROGRAMS / f"{name}.mac").read_text()


def load_program(name: str):
    return parse_program(load_source(name), filename=f"{name}.mac")


def load_config(name: str):
    return initial_config(load_program(name))


@pytest.fixture(scope="session")
def employee_bank():
    return load_program("employee_bank")


@pytest.fixture(scope="session")
def bank_small():
    return load_program("bank_small")


@pytest.fixture(scope="session")
def worked_queue():
    return load_program("worked_queue")

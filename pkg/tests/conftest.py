from pathlib import Path

import pytest

from hknet import (bind_structure, compose_all, instantiate, parse,
                   parse_script, scripted_policy, simulate)

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def load(name: str):
    path = CORPUS / name
    return parse(path.read_text(encoding="utf-8"), str(path))


@pytest.fixture(scope="session")
def sigma0():
    return load("sigma0.hksig").body


@pytest.fixture(scope="session")
def s0(sigma0):
    return bind_structure(load("s0.hks").body, sigma0)


@pytest.fixture(scope="session")
def s0_small(sigma0):
    return bind_structure(load("s0_small.hks").body, sigma0)


@pytest.fixture(scope="session")
def s0_tiny(sigma0):
    return bind_structure(load("s0_tiny.hks").body, sigma0)


@pytest.fixture(scope="session")
def entry():
    return load("entry.hk").body


@pytest.fixture(scope="session")
def guest_area():
    return load("guest_area.hk").body


@pytest.fixture(scope="session")
def kitchen():
    return load("kitchen.hk").body


@pytest.fixture(scope="session")
def branch(entry, guest_area, kitchen):
    return compose_all([entry, guest_area, kitchen])


@pytest.fixture(scope="session")
def sys0(branch, s0):
    return instantiate(branch, s0, name="branch_s0")


@pytest.fixture(scope="session")
def sys_small(branch, s0_small):
    return instantiate(branch, s0_small, name="branch_small")


@pytest.fixture(scope="session")
def sys_tiny(branch, s0_tiny):
    return instantiate(branch, s0_tiny, name="branch_tiny")


@pytest.fixture(scope="session")
def a0():
    return load("a0.hkrun").body


@pytest.fixture(scope="session")
def a0_segments():
    return tuple(load(f"a0_{part}.hkrun").body for part in ("begin", "middle", "end"))


@pytest.fixture(scope="session")
def a0_script():
    return parse_script((CORPUS / "a0.steps").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def a0_simulated(sys0, a0_script):
    return simulate(sys0, scripted_policy(a0_script))

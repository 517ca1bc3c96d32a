"""Shared fixtures for the conic-forms test suite."""

import os
import random
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import nullforms  # noqa: E402

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SYSTEMS_DIR = os.path.join(REPO_ROOT, 'systems')


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def sigma_e():
    return nullforms.sigma_e()


@pytest.fixture
def sigma_h():
    return nullforms.sigma_h((1.0, 2.0, 0.3))


@pytest.fixture
def sigma_p():
    return nullforms.sigma_p()


@pytest.fixture
def sigma_p0():
    return nullforms.sigma_p0()


@pytest.fixture
def systems_dir():
    return SYSTEMS_DIR

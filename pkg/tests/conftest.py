"""Shared fixtures: the bundled data pair and expensive session fits."""

from __future__ import annotations

import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from mvreserve.copula_reg import fit
from mvreserve.triangles import parse_triangle_csv

DATA_DIR = os.path.join(os.path.dirname(__file__), "..", "data")
LOSSES_CSV = os.path.join(DATA_DIR, "real_pair_losses.csv")
PREMIUMS_CSV = os.path.join(DATA_DIR, "real_pair_premiums.csv")


@pytest.fixture(scope="session")
def real_data():
    """The bundled personal/commercial auto pair (one company)."""
    return parse_triangle_csv(LOSSES_CSV, PREMIUMS_CSV)


@pytest.fixture(scope="session")
def real_pair(real_data):
    return real_data.companies[0]


@pytest.fixture(scope="session")
def product_fit(real_data):
    return fit(real_data, copula_family="product")


@pytest.fixture(scope="session")
def gaussian_fit(real_data):
    return fit(real_data, copula_family="gaussian")


@pytest.fixture(scope="session")
def frank_fit(real_data):
    return fit(real_data, copula_family="frank")


@pytest.fixture(scope="session")
def student_t_fit(real_data):
    return fit(real_data, copula_family="student_t")

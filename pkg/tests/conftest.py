import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from formulas import G, H, H_AT, H_ATU, Signature, parse  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run acceptance-scale tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale test, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


# (f1, f2, sigma, logic, separator exists)
CURATED = [
    ("p", "~p", "p", H, True),
    ("p", "p", "p", H, False),
    ("p & q", "~p & r", "p", H, True),
    ("<R> p", "[R] ~p", "R,p", H, True),
    ("'a & <R> 'a", "'b & [R] ~'b", "R", H, False),
]


@pytest.fixture
def curated():
    return [(parse(a), parse(b), Signature.of(*_split(s)), logic, exists) for a, b, s, logic, exists in CURATED]


def _split(text):
    rels = [x for x in text.split(",") if x and x[0].isupper()]
    props = [x for x in text.split(",") if x and x[0].islower()]
    return rels, props


@pytest.fixture(params=[H, H_AT, H_ATU], ids=["H", "H@", "H@U"])
def ungraded_logic(request):
    return request.param


@pytest.fixture
def graded_logic():
    return G

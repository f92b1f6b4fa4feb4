import logging

import pytest

import ahflow
from ahflow.options import worker_count


def pytest_addoption(parser):
    parser.addoption("--slow", action="store_true", default=False, help="also run full-resolution flow tests")


def pytest_report_header(config):
    return f"ahflow {ahflow.__version__}, {worker_count()} worker threads"


def pytest_collection_modifyitems(config, items):
    skip_slow = pytest.mark.skip(reason="needs --slow")
    for item in items:
        if "slow" in item.keywords:
            if not config.getoption("--slow"):
                item.add_marker(skip_slow)
        elif "integration" not in item.keywords and "unit" not in item.keywords:
            item.add_marker(pytest.mark.unit)


@pytest.fixture(autouse=True)
def quiet_numerics(caplog):
    caplog.set_level(logging.WARNING, logger="ahflow")

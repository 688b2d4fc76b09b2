import math

import pytest

from wellscatter.dispersion import EMWaveguide, energy_mapping, get_geometry, get_material

XBAND = get_geometry("xband")


@pytest.fixture
def teflon():
    return EMWaveguide(XBAND, get_material("teflon"))


@pytest.fixture
def perspex():
    return EMWaveguide(XBAND, get_material("perspex"))


@pytest.fixture
def empty_guide():
    return EMWaveguide(XBAND, get_material("vacuum"))


@pytest.fixture
def teflon_well_spec():
    return energy_mapping(XBAND, get_material("teflon"))


def omega(f):
    return 2 * math.pi * f


#: (criterion, passed, detail) tuples filled by the acceptance suite
ACCEPTANCE_RESULTS = []


def record_criterion(number, title, passed, detail):
    ACCEPTANCE_RESULTS.append((number, title, passed, detail))
    line = f"{'PASS' if passed else 'FAIL'}  criterion {number} ({title}): {detail}"
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {number} ({title}): {detail}")

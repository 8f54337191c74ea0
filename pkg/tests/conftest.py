import pytest

from fractalforms.configs import sierpinski, vicsek
from fractalforms.family import OneParamFamily


@pytest.fixture(scope="session")
def sg():
    return sierpinski()


@pytest.fixture(scope="session")
def sg_family(sg):
    fam = OneParamFamily(sg)
    fam.fit()
    return fam


@pytest.fixture(scope="session")
def vicsek_half():
    return vicsek("1/2")


@pytest.fixture(scope="session")
def vicsek_family(vicsek_half):
    fam = OneParamFamily(vicsek_half)
    fam.fit()
    return fam


@pytest.fixture(scope="session")
def vicsek_quarter_family():
    fam = OneParamFamily(vicsek("1/4"))
    fam.fit()
    return fam

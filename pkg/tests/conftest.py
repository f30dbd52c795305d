import pytest
from hypothesis import HealthCheck, settings

from antoine.necklace import build_necklace, validate_necklace

# smallest even multiplicity whose construction passes every validation
# check at the default certificate grids; rederived by the acceptance suite
M_STAR = 40

settings.register_profile(
    "suite", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def necklace16():
    return build_necklace(16)


@pytest.fixture(scope="session")
def necklace40():
    return build_necklace(M_STAR)


@pytest.fixture(scope="session")
def geometry_report40(necklace40):
    # geometric checks only; the full run including linking happens once, in
    # the acceptance suite
    return validate_necklace(necklace40, check_linking=False)

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from energy_catalog import EnergyKind, EnergySpec  # noqa: E402
from sphere_curves import closure_search  # noqa: E402


@pytest.fixture(scope='session')
def blaschke_spec():
    return EnergySpec(EnergyKind.EXTENDED_BLASCHKE, lam=0.0)


@pytest.fixture(scope='session')
def gamma_32(blaschke_spec):
    """Closed Blaschke curve with three lobes and two windings on S^2(4)."""
    return closure_search(blaschke_spec, 4.0, 3, 2, n_samples=1024)

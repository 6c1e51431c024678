import numpy as np
import pytest

from bfdwaves.params import reduced_parameters
from bfdwaves.solitary import ProfileSolveConfig, solve_profile
from bfdwaves.spectral import PeriodicGrid


@pytest.fixture(scope="session")
def hamiltonian():
    """Reduced parameters with d = b, gamma = 0.8, eps = mu = 1, mu2 = 10."""
    return reduced_parameters(0.0, 0.8)[1]


@pytest.fixture(scope="session")
def grid_small():
    return PeriodicGrid(64.0, 512)


@pytest.fixture(scope="session")
def wave_small(hamiltonian, grid_small):
    """Fast c_s = 0.3 profile on a short grid, for integrator tests."""
    return solve_profile(ProfileSolveConfig(grid=grid_small, c_s=0.3), hamiltonian)


@pytest.fixture(scope="session")
def ref_grid():
    return PeriodicGrid(256.0, 4096)


_cache = {}


@pytest.fixture(scope="session")
def ref_wave(hamiltonian, ref_grid):
    """Profiles on L = 256, N = 4096, solved once per speed."""
    def get(c_s, sys=None):
        sys = sys or hamiltonian
        key = (c_s, sys)
        if key not in _cache:
            _cache[key] = solve_profile(ProfileSolveConfig(grid=ref_grid, c_s=c_s), sys)
        return _cache[key]
    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

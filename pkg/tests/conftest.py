"""
Shared fixtures and path setup for the hubsync test suite.
"""
import json
import os
import sys
from pathlib import Path

import numpy as np
import pytest

# --- Add the repository root to sys.path ---
_HERE = os.path.dirname(os.path.abspath(__file__))
_REPO_ROOT = os.path.dirname(_HERE)

if _REPO_ROOT not in sys.path:
    sys.path.insert(0, _REPO_ROOT)

from hubsync.grid_model import GridSpec, grid_to_dict  # noqa: E402


# ---------------------------------------------------------------------------
# Shared test data
# ---------------------------------------------------------------------------

# Two equal, overdamped generators: mu_1 = 0.2, dw_sync = 0
TWO_GENERATOR = dict(n=2, omega_ref=10.0, inertia=(0.25, 0.25), damping=(1.0, 1.0),
                     injection=(0.2, -0.2), coupling=(1.0,))

THREE_GENERATOR = dict(n=3, omega_ref=100.0 * np.pi, inertia=(5.0, 3.0, 3.0), damping=(1.0, 0.8, 0.6),
                       injection=(1.5, -0.5, -0.6), coupling=(2.0, 2.0))

# Generators 1..9 carry injection sum 24.56 and damping sum 0.048; generator 10 is the one varied.
TEN_GENERATOR_COUPLING = 12.7
TEN_GENERATOR = dict(
    n=10,
    omega_ref=2000.0 * np.pi,
    inertia=(10.0,) + (1.0,) * 9,
    damping=(0.04,) + (0.001,) * 8 + (0.01,),
    injection=(21.104,) + (0.432,) * 8 + (0.5,),
    coupling=(TEN_GENERATOR_COUPLING,) * 9,
)


# ---------------------------------------------------------------------------
# Shared fixtures
# ---------------------------------------------------------------------------

@pytest.fixture
def two_generator():
    return GridSpec(**TWO_GENERATOR)


@pytest.fixture
def three_generator():
    return GridSpec(**THREE_GENERATOR)


@pytest.fixture
def ten_generator():
    return GridSpec(**TEN_GENERATOR)


@pytest.fixture
def random_grid():
    """
    Factory for random grids with a prescribed range of |mu|.

    Spoke loads P_i = -mu_i K_i are drawn first and the hub balances them, so
    dw_sync is exactly the drawn value and every |mu_i| lies in [mu_lo, mu_hi].
    """
    def make(rng, n, mu_lo=0.0, mu_hi=0.5, overdamped=True):
        omega_ref = 10.0 if overdamped else float(rng.uniform(50.0, 400.0))
        damping = rng.uniform(0.5, 1.5, size=n)
        coupling = rng.uniform(0.5, 1.5, size=n - 1)
        inertia = rng.uniform(0.05, 0.25, size=n) if overdamped else rng.uniform(1.0, 10.0, size=n)
        mu = rng.uniform(mu_lo, mu_hi, size=n - 1) * rng.choice([-1.0, 1.0], size=n - 1)
        dw_sync = float(rng.uniform(-0.5, 0.5))
        loads = -mu * coupling
        injection = np.concatenate([[-loads.sum()], loads]) + damping * dw_sync
        return GridSpec(n=n, omega_ref=omega_ref, inertia=tuple(inertia), damping=tuple(damping),
                        injection=tuple(injection), coupling=tuple(coupling))

    return make


@pytest.fixture
def config_file(tmp_path):
    """Write a grid spec (or raw dict) as a config file in a temp directory and return the path."""
    def write(spec_or_dict, name="grid.json"):
        data = grid_to_dict(spec_or_dict) if isinstance(spec_or_dict, GridSpec) else spec_or_dict
        path = tmp_path / name
        path.write_text(json.dumps(data, indent=2) + "\n")
        return path

    return write


@pytest.fixture
def configs_dir():
    """The shipped example configurations."""
    return Path(_REPO_ROOT) / "configs"


@pytest.fixture
def tmp_working_dir(tmp_path, monkeypatch):
    """Run tests from an isolated temp directory."""
    monkeypatch.chdir(tmp_path)
    return tmp_path

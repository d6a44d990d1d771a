import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wienerlab.geometry import build_domain, domain_from_complement
from wienerlab.phase import DoublePhaseParams, phase_constant, phase_zero
from wienerlab.pde import datum_from_function, solve


@pytest.fixture(scope="session")
def params34():
    return DoublePhaseParams(p=3.0, q=4.0)


@pytest.fixture(scope="session")
def halfspace2d():
    return build_domain("flat-halfspace", h=0.05, dim=2)


@pytest.fixture(scope="session")
def interval1d():
    """Omega = (0, 1) inside a slightly larger box."""

    def comp(pts):
        return (pts[:, 0] <= 0.0) | (pts[:, 0] >= 1.0)

    return domain_from_complement(comp, ((-0.25, 1.25),), h=1 / 64)


@pytest.fixture(scope="session")
def plateau_run(interval1d, params34):
    """1-D double-phase run with a smoothed plateau datum, all steps stored."""

    def f0(pts, t):
        x = pts[:, 0]
        return 0.8 * np.clip(np.minimum(x, 1 - x) * 8.0, 0.0, 1.0)

    datum = datum_from_function(f0, name="plateau")
    return solve(interval1d, phase_constant(0.5, a0=0.1, r0=2.0), params34,
                 datum, t_final=0.02, max_snapshots=None)


@pytest.fixture(scope="session")
def plateau_run_zero_phase(interval1d, params34):
    def f0(pts, t):
        x = pts[:, 0]
        return 0.8 * np.clip(np.minimum(x, 1 - x) * 8.0, 0.0, 1.0)

    datum = datum_from_function(f0, name="plateau")
    return solve(interval1d, phase_zero(), params34, datum, t_final=0.02,
                 max_snapshots=None)

import numpy as np
import pytest

from swingcct import faultstudy as fs
from swingcct.netmodel import ReducedNetwork
from swingcct.scenario import make_wscc9_tmib
from swingcct.swing import GeneratorParams


@pytest.fixture(scope="session")
def wscc():
    """Bundled two-machine-infinite-bus scenario (60 Hz, static charging)."""
    return make_wscc9_tmib(frequency=60.0, charging="static")


@pytest.fixture(scope="session")
def nominal_ctx(wscc):
    """Prepared pipeline for the nominal fault (bus 7, clear line 5-7)."""
    return fs.build_context(wscc)


def smib(Pm: float = 0.5, Pbar: float = 1.0, M: float = 0.1):
    """Single machine against an infinite bus, zero conductance."""
    B = np.array([[-Pbar, Pbar], [Pbar, -Pbar]])
    red = ReducedNetwork(
        n=2, G=np.zeros((2, 2)), B=B, Pbar=np.array([[0.0, Pbar], [Pbar, 0.0]]),
        E=np.ones(2),
    )
    gp = GeneratorParams(
        M=np.array([M, np.inf]), Pm=np.array([Pm, 0.0]), E=np.ones(2), infinite_index=1
    )
    return red, gp


@pytest.fixture()
def pendulum():
    """Unloaded single-machine system: SEP at 0, saddle at pi."""
    return smib(Pm=0.0)

import numpy as np
import pytest

from bosonic_ds.fock import FockSpace
from bosonic_ds.states import fock_state, thermal_state, vacuum


@pytest.fixture(scope="session")
def space14():
    return FockSpace(1, 14)


@pytest.fixture(scope="session")
def pair14():
    return FockSpace(2, 14)


@pytest.fixture(scope="session")
def fixture_states(space14):
    """The five reference states used by the grid-level consistency checks."""
    from bosonic_ds.states import squeezed_surrogate

    return {
        "vacuum": vacuum(space14),
        "fock1": fock_state(space14, 1),
        "fock2": fock_state(space14, 2),
        "thermal05": thermal_state(space14, 0.5),
        "squeezed025": squeezed_surrogate(space14, 0.25),
    }


def random_low_energy_density(rng, space, top=4):
    """Random density supported on the lowest ``top + 1`` levels."""
    from bosonic_ds.fock import density

    block = top + 1
    a = rng.normal(size=(block, block)) + 1j * rng.normal(size=(block, block))
    m = a @ a.conj().T
    m /= np.trace(m).real
    full = np.zeros((space.dim, space.dim), dtype=complex)
    full[:block, :block] = m
    return density(space, full)

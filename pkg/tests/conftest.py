import numpy as np
import pytest

from cerdec.codes import StabilizerCode, steane
from cerdec.pauli import PauliOp


@pytest.fixture(scope="session")
def code():
    return steane()


@pytest.fixture(scope="session")
def toy_code():
    """[[3,1,1]] bit-flip-detecting code used for exhaustive concatenation checks."""
    return StabilizerCode(
        [PauliOp.from_string("ZZI"), PauliOp.from_string("IZZ")],
        PauliOp.from_string("XXX"),
        PauliOp.from_string("ZII"),
        name="rep3",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_kraus_channel(n, m, rng):
    """Random CPTP map with m Kraus operators via a Haar-ish isometry."""
    from cerdec.channels import KrausChannel

    dim = 2**n
    big = rng.normal(size=(m * dim, dim)) + 1j * rng.normal(size=(m * dim, dim))
    q, _ = np.linalg.qr(big)
    return KrausChannel(q.reshape(m, dim, dim))

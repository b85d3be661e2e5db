import numpy as np
import pytest

from signosc.forcing import PeriodicForcing, square_wave, sawtooth, sinusoid


def corpus() -> list[PeriodicForcing]:
    """The five reference forcings used throughout the suite."""
    return [
        PeriodicForcing.zero(),
        square_wave(),
        sawtooth(),
        sinusoid(),
        PeriodicForcing.trig("two-harmonic", 1.0, [(1, 1.0, 0.0), (2, 0.0, 0.5)]),
    ]


@pytest.fixture(scope="session")
def corpus_forcings():
    return corpus()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

import numpy as np
import pytest

from reskit.ks_data import Dataset, KSConfig, save_dataset, simulate_ks


@pytest.fixture(scope="session")
def ks_small():
    """A short but genuinely chaotic trajectory, shared across tests."""
    cfg = KSConfig(domain=22.0, grid=64, dt=0.25, transient=400, seed=3)
    return cfg, simulate_ks(cfg, steps=2000)


@pytest.fixture(scope="session")
def smooth_dataset(tmp_path_factory):
    """Cheap learnable stand-in series saved in the dataset container.

    Filtered noise with `lyapunov` pinned to 1.0, so experiment runners have
    something fast to chew on without a full simulation.
    """
    rng = np.random.default_rng(7)
    raw = rng.standard_normal((2600, 8))
    kernel = np.hanning(9)
    kernel /= kernel.sum()
    series = np.apply_along_axis(lambda c: np.convolve(c, kernel, mode="same"), 0, raw)
    ds = Dataset(series=series, dt_effective=0.25, lyapunov=1.0,
                 provenance={"kind": "smooth-noise", "seed": 7})
    path = tmp_path_factory.mktemp("data") / "smooth.rskd"
    save_dataset(ds, path)
    return str(path)

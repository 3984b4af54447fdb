"""Packaged synthetic CSV fixture shaped like a two-region climate study.

The real studies this library targets (sea-surface temperature grids and
the like) cannot be redistributed, so the CSV pipeline is exercised on a
generated stand-in with the same shape: two disjoint coordinate regions
of 123 and 46 nodes, a 12-phase cyclic process, 168 training and 48 test
instants, and raw values in physical-looking units so the per-node
standardization path does real work.

The per-phase statistics use one low-pass kernel ``s_p / (1 + lambda)``
whose scale profile ``s_p`` (and a matching mean profile) is aperiodic
under every proper divisor of 12, so the period detector has an actual
period-12 signature to find.
"""

from pathlib import Path

import numpy as np

from .graphs import eigendecompose, laplacian, random_sensor_graph
from .harness import generate_stream
from .signals import CyclicPsd, save_signals

__all__ = ["SST_LIKE", "make_sst_fixture"]

# shape parameters of the fixture (node counts, cycle, split, smoothing
# weight follow the two-region climate-study layout)
SST_LIKE = {
    "n_a": 123,
    "n_b": 46,
    "k": 5,
    "period": 12,
    "t_train": 168,
    "t_test": 48,
    "zeta": 0.01,
    "d_a": 6,
    "d_b": 2,
    "sigma_w": [0.05],
    "seeds": [0, 1, 2, 3, 4],
}

# phase profiles: distinct at every shift under divisors 2, 3, 4, 6
_SCALE12 = [1.0, 1.35, 0.8, 1.6, 1.1, 0.7, 1.45, 0.95, 1.25, 0.65, 1.5, 0.85]
_MEAN12 = [0.0, 0.4, -0.3, 0.7, 0.1, -0.5, 0.55, -0.1, 0.3, -0.6, 0.65, -0.2]


def _region_process(n, k, rng, x_shift):
    g = random_sensor_graph(n, k, rng)
    coords = g.coords + np.array([x_shift, 0.0])
    es = eigendecompose(laplacian(g))
    lam = es.eigenvalues
    psds = np.array([s / (1.0 + lam) for s in _SCALE12])
    means = np.array([m * np.ones(n) for m in _MEAN12])
    cp = CyclicPsd(period=12, psds=psds, means=means)
    X = generate_stream(es, cp, SST_LIKE["t_train"], SST_LIKE["t_test"], rng)
    return coords, X


def make_sst_fixture(out_dir, seed=7):
    """Write ``signals.csv``, ``coords.csv``, ``config.toml`` to ``out_dir``.

    Fully determined by ``seed``. Region A keeps its unit-square
    coordinates; region B is shifted to a disjoint strip. Raw values are
    an affine map of the generated process into a temperature-like range
    (per-node offset and scale), which the ingestion pipeline
    standardizes away.

    Returns
    -------
    dict
        Paths keyed ``signals``, ``coords``, ``config``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    coords_a, xa = _region_process(SST_LIKE["n_a"], SST_LIKE["k"], rng, 0.0)
    coords_b, xb = _region_process(SST_LIKE["n_b"], SST_LIKE["k"], rng, 2.5)
    coords = np.vstack([coords_a, coords_b])
    X = np.vstack([xa, xb])

    n = X.shape[0]
    offset = 16.0 + 5.0 * coords[:, 1] + 1.5 * rng.standard_normal(n)
    scale = 2.0 + 0.4 * rng.random(n)
    raw = offset[:, None] + scale[:, None] * X

    signals_path = out / "signals.csv"
    save_signals(signals_path, raw)

    coords_path = out / "coords.csv"
    lines = ["node,x,y"]
    for i in range(n):
        lines.append(f"{i},{float(coords[i, 0])!r},{float(coords[i, 1])!r}")
    coords_path.write_text("\n".join(lines) + "\n")

    config_path = out / "config.toml"
    cfg = SST_LIKE
    config_path.write_text(
        "\n".join(
            [
                'dataset = "csv"',
                f"n_a = {cfg['n_a']}",
                f"n_b = {cfg['n_b']}",
                f"k = {cfg['k']}",
                f"period = {cfg['period']}",
                f"t_train = {cfg['t_train']}",
                f"t_test = {cfg['t_test']}",
                f"zeta = {cfg['zeta']}",
                f"d_a = {cfg['d_a']}",
                f"d_b = {cfg['d_b']}",
                f"sigma_w = {cfg['sigma_w']}",
                f"seeds = {cfg['seeds']}",
                "resample_masks = true",
            ]
        )
        + "\n"
    )
    return {"signals": signals_path, "coords": coords_path, "config": config_path}

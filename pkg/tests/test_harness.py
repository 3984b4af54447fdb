"""Tests for the experiment harness: observation, metrics, schedules, runs."""

from dataclasses import replace

import numpy as np
import pytest

from coopkal.baselines import tikhonov_estimate
from coopkal.config import ExperimentConfig
from coopkal.errors import ConfigError, ContractError, DataError
from coopkal.graphs import eigendecompose, laplacian, random_sensor_graph
from coopkal.harness import (
    RunReport,
    experiment_bank,
    generate_stream,
    load_coords,
    make_observation,
    mse,
    run_realdata_experiment,
    run_synthetic_experiment,
)
from coopkal.kalman import (
    CoopSettings,
    ObservationModel,
    SubgraphState,
    coop_step,
    init_track,
)
from coopkal.signals import save_signals, synth_psd_bank
from coopkal.slots import DataSlot, update_data_slot


@pytest.fixture(scope="module")
def small_cfg():
    return ExperimentConfig(
        n_a=24, n_b=12, k=3, period=8, t_train=48, t_test=8,
        sigma_w=[0.05, 0.1], d_a=2, d_b=1, seeds=[0, 1],
    )


@pytest.fixture(scope="module")
def small_report(small_cfg):
    return run_synthetic_experiment(small_cfg)


# ------------------------------------------------------- make_observation

def test_observation_noiseless_full_is_identity():
    x = np.arange(6.0)
    obs = ObservationModel(observed_nodes=np.arange(6), sigma_w=0.0)
    y = make_observation(x, obs, np.random.default_rng(0))
    np.testing.assert_array_equal(y, x)


def test_observation_has_observed_count_entries():
    # five missing nodes on the 90-node graph leave an 85-entry observation
    rng = np.random.default_rng(1)
    observed = np.sort(rng.choice(90, size=85, replace=False))
    obs = ObservationModel(observed_nodes=observed, sigma_w=0.1)
    y = make_observation(np.zeros(90), obs, rng)
    assert y.shape == (85,)


def test_observation_is_seed_reproducible():
    x = np.linspace(0, 1, 12)
    obs = ObservationModel(observed_nodes=np.arange(0, 12, 2), sigma_w=0.3)
    y1 = make_observation(x, obs, np.random.default_rng(7))
    y2 = make_observation(x, obs, np.random.default_rng(7))
    np.testing.assert_array_equal(y1, y2)


# -------------------------------------------------------------------- mse

def test_mse_identical_is_zero():
    X = np.random.default_rng(0).standard_normal((5, 9))
    per_t, avg = mse(X, X)
    np.testing.assert_array_equal(per_t, np.zeros(9))
    assert avg == 0.0


def test_mse_unit_offset():
    truth = np.zeros((4, 3))
    per_t, avg = mse(truth, np.ones((4, 3)))
    np.testing.assert_allclose(per_t, [1.0, 1.0, 1.0])
    assert avg == pytest.approx(1.0)


def test_mse_matches_recomputation():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((7, 11))
    B = rng.standard_normal((7, 11))
    per_t, avg = mse(A, B)
    ref = np.array([np.linalg.norm(A[:, j] - B[:, j]) ** 2 / 7 for j in range(11)])
    np.testing.assert_allclose(per_t, ref, atol=1e-12)
    assert avg == pytest.approx(ref.mean(), abs=1e-12)


def test_mse_rejects_shape_mismatch():
    with pytest.raises(ContractError):
        mse(np.zeros((3, 4)), np.zeros((4, 3)))


# -------------------------------------------------------------- generation

def test_experiment_bank_is_the_synthetic_bank():
    es = eigendecompose(laplacian(random_sensor_graph(10, 3, np.random.default_rng(0))))
    got = experiment_bank(es, 8)
    ref = synth_psd_bank(es, 8)
    np.testing.assert_array_equal(got.psds, ref.psds)
    np.testing.assert_array_equal(got.means, ref.means)


def test_stream_shapes_and_test_window_coherence():
    es = eigendecompose(laplacian(random_sensor_graph(10, 3, np.random.default_rng(1))))
    cp = experiment_bank(es, 8)
    X = generate_stream(es, cp, t_train=16, t_test=12, rng=np.random.default_rng(2))
    assert X.shape == (10, 28)
    # the bank repeats statistics every 4 phases and the test window reuses
    # one innovation, so test columns 4 instants apart coincide exactly
    np.testing.assert_allclose(X[:, 16:24], X[:, 20:28], atol=1e-12)
    # training draws are independent: equal-phase columns differ
    assert np.abs(X[:, 0] - X[:, 4]).max() > 1e-6


# -------------------------------------------------------------- RunReport

def test_report_rejects_negative_mse():
    with pytest.raises(ContractError):
        RunReport(series=[(0.05, 0, 1, "coop", -1e-3)], averages=[])


def test_report_average_accessor(small_report):
    for method, sw, mean, _ in small_report.averages:
        assert small_report.average(method, sw) == mean
    with pytest.raises(KeyError):
        small_report.average("coop", 99.0)


# ------------------------------------------------------ synthetic pipeline

def test_synthetic_requires_synthetic_dataset():
    cfg = ExperimentConfig(dataset="csv", t_train=40, period=4)
    with pytest.raises(ConfigError):
        run_synthetic_experiment(cfg)


def test_series_is_complete_and_sorted(small_cfg, small_report):
    rows = small_report.series
    expect = len(small_cfg.sigma_w) * len(small_cfg.seeds) * 3 * small_cfg.t_test
    assert len(rows) == expect
    keys = [(sw, seed, method, t) for sw, seed, t, method, _ in rows]
    assert keys == sorted(keys)
    assert all(v >= 0 for *_, v in rows)


def test_schedule_alternates_and_counts_split(small_cfg, small_report):
    trace = small_report.meta["schedule"]
    assert len(trace) == small_cfg.t_test
    assert set(trace) == {"a", "b"}
    assert all(x != y for x, y in zip(trace, trace[1:]))
    # t = t_train + 1 is odd here, so the b subgraph opens the schedule
    assert trace[0] == "b"
    counts = small_report.meta["observed_counts"]
    assert counts == {"a": small_cfg.t_test // 2, "b": small_cfg.t_test // 2}


def test_synthetic_run_is_deterministic(small_cfg, small_report):
    again = run_synthetic_experiment(small_cfg)
    assert again.series == small_report.series
    assert again.averages == small_report.averages


def test_different_seed_changes_the_numbers(small_cfg, small_report):
    other = run_synthetic_experiment(small_cfg.replace(seeds=[2, 3]))
    a = [v for *_, v in other.series]
    b = [v for *_, v in small_report.series]
    assert a != b


def test_degenerate_noiseless_full_observation_is_exact():
    # no noise and no missing nodes leave nothing for the filter to get
    # wrong: the gain absorbs the full observation at every instant
    cfg = ExperimentConfig(
        n_a=30, n_b=16, k=4, period=8, t_train=80, t_test=12,
        sigma_w=[0.0], d_a=0, d_b=0, seeds=[0],
    )
    rep = run_synthetic_experiment(cfg)
    coop = [v for (_, _, _, m, v) in rep.series if m == "coop"]
    assert max(coop) <= 1e-10


def test_baselines_are_stateless_pure_functions():
    rng = np.random.default_rng(4)
    g = random_sensor_graph(12, 3, rng)
    L = laplacian(g)
    L_copy = L.copy()
    obs = ObservationModel(observed_nodes=np.arange(0, 12, 2), sigma_w=0.1)
    y1 = rng.standard_normal(6)
    y2 = rng.standard_normal(6)
    first = tikhonov_estimate(L, obs, y1, 0.05)
    tikhonov_estimate(L, obs, y2, 0.05)  # interleaved unrelated call
    again = tikhonov_estimate(L, obs, y1, 0.05)
    np.testing.assert_array_equal(first, again)
    np.testing.assert_array_equal(L, L_copy)


# --------------------------------------------- cooperative vs static oracle

def test_coop_beats_tikhonov_with_exact_statistics():
    # zero observation noise, the true bank PSDs in place of slot
    # estimates, slot means for the transport: the cooperative step's
    # average MSE stays below the static baseline's on every seed
    n_a, n_b, k, period = 40, 20, 4, 8
    t_train, t_test = 80, 16
    d_a, d_b = 3, 2
    for seed in range(20):
        ss = np.random.SeedSequence(seed).spawn(3)
        grng = np.random.default_rng(ss[0])
        srng = np.random.default_rng(ss[1])
        mrng = np.random.default_rng(ss[2])
        es = {}
        Ls = {}
        cps = {}
        for name, n in (("a", n_a), ("b", n_b)):
            g = random_sensor_graph(n, k, grng)
            Ls[name] = laplacian(g)
            es[name] = eigendecompose(Ls[name])
            cps[name] = experiment_bank(es[name], period)
        X = {
            name: generate_stream(es[name], cps[name], t_train, t_test, srng)
            for name in es
        }
        slots = {
            name: DataSlot.from_training(X[name][:, :t_train], period, phase_offset=1)
            for name in es
        }
        t0 = t_train + 1
        tracks = {}
        for name in es:
            t_first = t0 if (t0 % 2 == 1) == (name == "b") else t0 + 1
            x0 = slots[name].matrix((t_first - 2) % period).mean(axis=1)
            tracks[name] = init_track(es[name].n, x0, 1.0)
        settings = CoopSettings(period=period, sigma_v=0.0, eta=0.05, psd_floor=0.1)
        k_depth = slots["a"].k
        err_c, err_t = [], []
        for t in range(t0, t0 + t_test):
            trg = "b" if t % 2 == 1 else "a"
            src = "a" if trg == "b" else "b"
            p_src = cps[src].psd(t)
            p_prev = cps[trg].psd(t - 2)
            src_state = SubgraphState(es=es[src], psd=p_src,
                                      track=tracks[src], slot=slots[src])
            trg_state = SubgraphState(es=es[trg], psd=p_prev,
                                      track=tracks[trg], slot=slots[trg])
            d = d_a if trg == "a" else d_b
            observed = np.sort(mrng.choice(es[trg].n, size=es[trg].n - d,
                                           replace=False))
            obs = ObservationModel(observed_nodes=observed, sigma_w=0.0)
            y = make_observation(X[trg][:, t - 1], obs, mrng)
            U = es[trg].eigenvectors
            p1f = np.maximum(p_prev, 0.1 * p_prev.max())
            cov0 = (2.0 / k_depth) * (U * p1f) @ U.T
            trg_state = replace(trg_state,
                                track=replace(trg_state.track, err_cov=cov0))
            new_state, _ = coop_step(src_state, trg_state, obs, y,
                                     t % period, settings)
            tracks[trg] = new_state.track
            slots[trg] = update_data_slot(slots[trg], t % period,
                                          new_state.track.estimate)
            x_true = X[trg][:, t - 1]
            err_c.append(float(((x_true - new_state.track.estimate) ** 2).mean()))
            x_tik = tikhonov_estimate(Ls[trg], obs, y, 0.05)
            err_t.append(float(((x_true - x_tik) ** 2).mean()))
        assert np.mean(err_c) <= np.mean(err_t), f"seed {seed}"


# ------------------------------------------------------------ CSV pipeline

def _write_tiny_dataset(tmp_path, n_a=8, n_b=8, T=10):
    # clearly period-2 stream on two well-separated point clouds
    rng = np.random.default_rng(3)
    pts = np.vstack([
        rng.uniform(0, 1, size=(n_a, 2)),
        rng.uniform(0, 1, size=(n_b, 2)) + [2.0, 0.0],
    ])
    base = rng.standard_normal(n_a + n_b)
    X = np.empty((n_a + n_b, T))
    for t in range(T):
        amp = 2.0 if t % 2 == 0 else 0.5
        X[:, t] = amp * base + 0.05 * rng.standard_normal(n_a + n_b)
    sig = tmp_path / "signals.csv"
    crd = tmp_path / "coords.csv"
    save_signals(sig, X)
    lines = ["node,x,y"]
    lines += [f"{i},{float(pts[i, 0])!r},{float(pts[i, 1])!r}"
              for i in range(n_a + n_b)]
    crd.write_text("\n".join(lines) + "\n")
    return sig, crd


def _tiny_csv_cfg(**kw):
    base = dict(
        n_a=8, n_b=8, k=3, period=2, t_train=7, t_test=3,
        sigma_w=[0.05], d_a=1, d_b=1, seeds=[0], dataset="csv",
        kernel_orders=(1, 1),
    )
    base.update(kw)
    return ExperimentConfig(**base)


def test_realdata_truncates_to_detected_period(tmp_path):
    sig, crd = _write_tiny_dataset(tmp_path)
    with pytest.warns(UserWarning, match="dropping the oldest 1"):
        rep = run_realdata_experiment(_tiny_csv_cfg(), sig, crd)
    assert rep.meta["period"] == 2
    assert rep.meta["standardized"] is True
    assert len(rep.series) == 9  # 3 instants x 3 methods


def test_realdata_is_deterministic(tmp_path):
    sig, crd = _write_tiny_dataset(tmp_path)
    with pytest.warns(UserWarning):
        r1 = run_realdata_experiment(_tiny_csv_cfg(), sig, crd)
    with pytest.warns(UserWarning):
        r2 = run_realdata_experiment(_tiny_csv_cfg(), sig, crd)
    assert r1.series == r2.series


def test_realdata_requires_csv_dataset(tmp_path):
    sig, crd = _write_tiny_dataset(tmp_path)
    cfg = _tiny_csv_cfg().replace(dataset="synthetic", period=4, t_train=8)
    with pytest.raises(ConfigError):
        run_realdata_experiment(cfg, sig, crd)


def test_realdata_node_count_mismatch(tmp_path):
    sig, crd = _write_tiny_dataset(tmp_path)
    with pytest.raises(DataError, match="nodes"):
        run_realdata_experiment(_tiny_csv_cfg(n_a=9), sig, crd)


def test_realdata_too_few_instants(tmp_path):
    sig, crd = _write_tiny_dataset(tmp_path)
    with pytest.raises(DataError, match="instants"):
        run_realdata_experiment(_tiny_csv_cfg(t_test=5), sig, crd)


def test_realdata_node_set_mismatch(tmp_path):
    sig, crd = _write_tiny_dataset(tmp_path)
    bad = tmp_path / "bad_coords.csv"
    rows = crd.read_text().splitlines()
    rows[1] = "999" + rows[1][rows[1].index(","):]
    bad.write_text("\n".join(rows) + "\n")
    with pytest.raises(DataError, match="node sets differ"):
        run_realdata_experiment(_tiny_csv_cfg(), sig, bad)


# -------------------------------------------------------------- load_coords

def test_load_coords_accepts_both_headers(tmp_path):
    for header in ("node,x,y", "node,lat,lon"):
        p = tmp_path / "c.csv"
        p.write_text(f"{header}\n0,0.5,1.5\n1,2.0,3.0\n")
        ids, pts = load_coords(p)
        assert ids == ["0", "1"]
        np.testing.assert_allclose(pts, [[0.5, 1.5], [2.0, 3.0]])


@pytest.mark.parametrize(
    "body",
    [
        "node,xx,y\n0,1,2\n",
        "node,x,y\n0,1\n",
        "node,x,y\n0,one,2\n",
        "node,x,y\n",
    ],
)
def test_load_coords_rejects_malformed(tmp_path, body):
    p = tmp_path / "c.csv"
    p.write_text(body)
    with pytest.raises(DataError):
        load_coords(p)


def test_load_coords_missing_file():
    with pytest.raises(DataError, match="cannot read"):
        load_coords("/nonexistent/coords.csv")

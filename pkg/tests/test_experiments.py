"""Experiment harness: config loading, records, runners, and the CLI."""

import dataclasses
import json
import warnings
from pathlib import Path

import numpy as np
import pytest

from reskit.errors import ConfigError
from reskit.experiments.cli import main
from reskit.experiments.config import (CONFIG_TYPES, ConvergenceConfig, PredictConfig,
                                       RecDirectConfig, SimulateKsConfig, StabilityConfig,
                                       TimingConfig, config_hash, load_config, semantic_dict)
from reskit.experiments.convergence import run_convergence
from reskit.experiments.prediction import (_nanmean_rows, decorrelated_normalizer,
                                           normalize_series, run_prediction)
from reskit.experiments.recdirect import run_recdirect, stacked_targets
from reskit.experiments.records import stamp_rows, write_outputs
from reskit.experiments.registry import EXPERIMENTS
from reskit.experiments.stability import gram_init_gap, reservoir_divergence, run_stability
from reskit.experiments.timing import run_timing
from reskit.ks_data import load_dataset
from reskit.recurrent_kernel import RKParams
from reskit.reservoir import ReservoirParams, ReservoirState, init_weights, random_state, step


# ---------------------------------------------------------------- config

def test_defaults_without_file():
    assert load_config("predict") == PredictConfig()
    assert load_config("timing", None, []) == TimingConfig()


def test_unknown_experiment():
    with pytest.raises(ConfigError):
        load_config("frobnicate")


def test_file_then_overrides_precedence(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text(
        "[DEFAULT]\ntrain_len = 777\n\n"
        "[predict]\nsize = 128\nalpha = 0.5\nseeds = 3, 4\n"
    )
    cfg = load_config("predict", str(ini), ["size=64"])
    assert cfg.size == 64            # --set beats the file
    assert cfg.alpha == 0.5          # file beats the dataclass default
    assert cfg.seeds == (3, 4)
    assert cfg.train_len == 777      # [DEFAULT] applies to the section
    assert cfg.warmup == PredictConfig().warmup


def test_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config("predict", str(tmp_path / "missing.ini"))

    bad_section = tmp_path / "a.ini"
    bad_section.write_text("[bogus]\nx = 1\n")
    with pytest.raises(ConfigError):
        load_config("predict", str(bad_section))

    bad_key = tmp_path / "b.ini"
    bad_key.write_text("[predict]\nnot_a_field = 1\n")
    with pytest.raises(ConfigError):
        load_config("predict", str(bad_key))

    not_ini = tmp_path / "c.ini"
    not_ini.write_text("just some text without a section header\n")
    with pytest.raises(ConfigError):
        load_config("predict", str(not_ini))


def test_override_errors():
    with pytest.raises(ConfigError):
        load_config("predict", None, ["nope=1"])
    with pytest.raises(ConfigError):
        load_config("predict", None, ["size=abc"])
    with pytest.raises(ConfigError):
        load_config("predict", None, ["seeds=1,x"])
    with pytest.raises(ConfigError):
        load_config("predict", None, ["size"])  # no '=' at all


def test_tuple_parsing():
    assert load_config("predict", None, ["seeds="]).seeds == ()
    cfg = load_config("stability", None, ["sigma_r2_grid=0.1, 0.2"])
    assert cfg.sigma_r2_grid == (0.1, 0.2)
    assert load_config("convergence", None, ["sizes=8"]).sizes == (8,)


def test_config_hash_tracks_semantics_only():
    base = PredictConfig()
    assert config_hash("predict", base) == config_hash("predict", PredictConfig())
    changed = dataclasses.replace(base, size=777)
    assert config_hash("predict", changed) != config_hash("predict", base)
    workers = dataclasses.replace(base, workers=9)
    assert config_hash("predict", workers) == config_hash("predict", base)
    # the experiment name is part of the digest
    assert config_hash("predict", base) != config_hash("other", base)


def test_semantic_dict_contents():
    d = semantic_dict("predict", PredictConfig())
    assert d["experiment"] == "predict"
    assert "workers" not in d
    assert d["size"] == 3996


# ---------------------------------------------------------------- records

def test_stamp_rows_injects_hash_and_seed():
    cfg = TimingConfig()
    rows = [{"a": 1}, {"seed": "none", "b": 2}]
    stamped = stamp_rows(rows, "timing", cfg)
    digest = config_hash("timing", cfg)
    assert all(r["config_hash"] == digest for r in stamped)
    assert list(stamped[0])[0] == "config_hash"
    assert stamped[0]["seed"] == cfg.seed      # inherited from the config
    assert stamped[1]["seed"] == "none"        # explicit label kept

    # configs without a seed field fall back to an empty label
    stamped = stamp_rows([{"a": 1}], "predict", PredictConfig())
    assert stamped[0]["seed"] == ""


def test_write_outputs_layout(tmp_path):
    cfg = SimulateKsConfig()
    rows = [{"value": 0.5, "n": 3}]
    curves = {"c": (["x", "y"], [np.arange(3), np.array([0.5, 1.0, 2.0])])}
    write_outputs(tmp_path, "simulate-ks", cfg, rows, curves, elapsed=1.0)

    lines = (tmp_path / "results.csv").read_text().splitlines()
    assert lines[0] == "config_hash,seed,value,n"
    assert lines[1].endswith(",0,0.5,3")

    curve = (tmp_path / "curves" / "c.csv").read_text().splitlines()
    assert curve[0] == "x,y"
    assert curve[1:] == ["0,0.5", "1,1.0", "2,2.0"]

    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["experiment"] == "simulate-ks"
    assert meta["config_hash"] == config_hash("simulate-ks", cfg)
    assert meta["config"]["grid"] == cfg.grid
    assert {"python", "numpy", "scipy"} <= set(meta["environment"])
    assert meta["elapsed_seconds"] == 1.0


# ---------------------------------------------------------------- prediction helpers

def test_nanmean_rows():
    rows = [np.array([1.0, np.nan, np.nan]), np.array([3.0, 2.0, np.nan])]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        out = _nanmean_rows(rows)
    assert out[0] == 2.0
    assert out[1] == 2.0
    assert np.isnan(out[2])


def test_decorrelated_normalizer_value():
    series = np.zeros((204, 1))
    series[-2:, 0] = [1.0, 2.0]
    series[-204:-202, 0] = [5.0, 7.0]
    assert decorrelated_normalizer(series, 2) == pytest.approx((16 + 25) / 2)
    with pytest.raises(ConfigError):
        decorrelated_normalizer(np.zeros((100, 1)), 100)


def test_normalize_series():
    rng = np.random.default_rng(0)
    series = 3.0 * rng.standard_normal((120, 5))
    out = normalize_series(series, 60, 2.0)
    rms = np.sqrt(np.mean(np.sum(out[:60] ** 2, axis=1)))
    assert rms == pytest.approx(2.0, rel=1e-12)
    assert normalize_series(series, 60, 0.0) is series
    with pytest.raises(ConfigError):
        normalize_series(np.zeros((50, 3)), 20, 1.0)


def _small_predict(dataset_path, **over):
    base = dict(dataset=dataset_path, seeds=(0, 1), algorithms=("rc", "src", "rk"),
                size=48, train_len=400, warmup=20, tau=6, rk_train_windows=60,
                horizon=20, warm_len=30, test_blocks=2, normalizer_len=100)
    base.update(over)
    return PredictConfig(**base)


def test_predict_smoke(smooth_dataset):
    cfg = _small_predict(smooth_dataset)
    rows, curves = run_prediction(cfg)

    assert len(rows) == 6
    assert {(r["algorithm"], r["seed"]) for r in rows} == {
        (a, s) for a in cfg.algorithms for s in cfg.seeds}
    for row in rows:
        assert row["diverged_blocks"] == 0
        assert np.isfinite(row["nmse_1lt"]) and row["nmse_1lt"] >= 0
        assert np.isfinite(row["nmse_3lt"])
        assert row["jitter_alpha"] == pytest.approx(cfg.alpha)
        assert row["lyapunov"] == pytest.approx(1.0)

    assert set(curves) == {"nmse_rc", "nmse_src", "nmse_rk"}
    header, columns = curves["nmse_rc"]
    assert header == ["step", "t_lyap", "seed0", "seed1", "mean"]
    assert all(len(c) == cfg.horizon for c in columns)
    # dataset fixture has lyapunov=1.0 and dt=0.25, so 4 steps per unit time
    assert columns[1][4] == pytest.approx(1.0)
    np.testing.assert_allclose(columns[4], (columns[2] + columns[3]) / 2, rtol=1e-12)


def test_predict_zero_horizon(smooth_dataset):
    rows, curves = run_prediction(_small_predict(smooth_dataset, horizon=0))
    assert rows == [] and curves == {}


def test_predict_validation(smooth_dataset):
    with pytest.raises(ConfigError):
        run_prediction(_small_predict(""))
    with pytest.raises(ConfigError):
        run_prediction(_small_predict(smooth_dataset, seeds=()))
    with pytest.raises(ConfigError):
        run_prediction(_small_predict(smooth_dataset, algorithms=()))
    with pytest.raises(ConfigError):
        run_prediction(_small_predict(smooth_dataset, algorithms=("foo",)))
    with pytest.raises(ConfigError):  # horizon shorter than three divergence times
        run_prediction(_small_predict(smooth_dataset, horizon=10))
    with pytest.raises(ConfigError):  # more windows requested than exist
        run_prediction(_small_predict(smooth_dataset, rk_train_windows=100000))


def test_predict_outputs_reproduce_byte_for_byte(smooth_dataset, tmp_path):
    cfg = _small_predict(smooth_dataset, seeds=(0,), algorithms=("rc", "rk"),
                         size=32, train_len=300, test_blocks=1)
    dirs = []
    for tag, elapsed in (("a", 1.0), ("b", 99.0)):
        out = tmp_path / tag
        rows, curves = run_prediction(cfg)
        write_outputs(out, "predict", cfg, rows, curves, elapsed)
        dirs.append(out)
    a, b = dirs
    assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()
    for curve in sorted(p.name for p in (a / "curves").iterdir()):
        assert (a / "curves" / curve).read_bytes() == (b / "curves" / curve).read_bytes()


# ---------------------------------------------------------------- stability

def test_identical_initial_states_never_separate():
    params = ReservoirParams(size=16, input_dim=3, sigma_r=0.9, sigma_i=0.5,
                             sigma_b=0.2, activation="erf", backend="dense", seed=0)
    w = init_weights(params)
    x0 = random_state(params, seed=5, batch=1).x
    state = ReservoirState(x=np.concatenate([x0, x0], axis=1), t=0)
    rng = np.random.default_rng(1)
    for _ in range(20):
        frame = rng.standard_normal(3)
        state = step(state, np.repeat(frame[:, None], 2, axis=1), w, params)
        assert np.array_equal(state.x[:, 0], state.x[:, 1])


def test_reservoir_divergence_contracts_and_expands():
    drive = 0.5 * np.random.default_rng(2).standard_normal((80, 6))

    def curve(sr2):
        params = ReservoirParams(size=64, input_dim=6, sigma_r=np.sqrt(sr2),
                                 sigma_i=0.1, activation="erf", backend="dense", seed=0)
        return reservoir_divergence(params, drive, init_seed=3)

    low, high = curve(0.25), curve(4.0)
    assert low.shape == (81,)
    assert low[0] == 1.0 and high[0] == 1.0
    assert low[-1] < 1e-6           # weak recurrence forgets the initial state
    assert high[-1] > 1e3 * low[-1]  # strong recurrence keeps trajectories apart


def test_gram_init_gap_contracts():
    windows = 0.3 * np.random.default_rng(3).standard_normal((8, 24, 4))
    params = RKParams(kind="arcsine_erf", sigma_r2=0.49, sigma_i2=0.01)
    gaps = gram_init_gap(params, windows)
    assert gaps.shape == (24,)
    assert gaps[-1] < 1e-5 < gaps[0]
    assert gaps[-1] < gaps[0]


def test_run_stability_smoke(smooth_dataset):
    cfg = StabilityConfig(dataset=smooth_dataset, sigma_r2_grid=(0.25, 2.25),
                          sigma_i2=0.01, size=32, input_dim=8, horizon=25, n_seeds=3,
                          rk_sigma_r2_grid=(0.49,), rk_tau=20, rk_windows=10)
    rows, curves = run_stability(cfg)
    parts = [(r["part"], r["sigma_r2"]) for r in rows]
    assert parts == [("reservoir", 0.25), ("reservoir", 2.25), ("kernel", 0.49)]
    assert rows[0]["final_mean_norm_dist"] < rows[1]["final_mean_norm_dist"]
    assert rows[2]["final_max_gram_gap"] < 1e-4
    assert set(curves) == {"reservoir_sr0.25", "reservoir_sr2.25", "kernel_sr0.49"}
    header, columns = curves["reservoir_sr0.25"]
    assert header[0] == "t" and len(columns[0]) == cfg.horizon + 1
    assert len(curves["kernel_sr0.49"][1][0]) == cfg.rk_tau

    with pytest.raises(ConfigError):
        run_stability(dataclasses.replace(cfg, input_dim=99))


# ---------------------------------------------------------------- timing

def test_timing_empty_sizes():
    assert run_timing(TimingConfig(sizes=())) == ([], {})


def test_timing_smoke(smooth_dataset):
    cfg = TimingConfig(dataset=smooth_dataset, sizes=(32,),
                       phases=("forward", "train", "predict"), forward_steps=100,
                       train_len=150, warmup=10, tau=5, rk_train_windows=20,
                       repeats=1, horizon=5)
    rows, curves = run_timing(cfg)
    assert curves == {}
    cells = {(r["algorithm"], r["phase"]) for r in rows}
    assert cells == {(a, p) for a in ("rc", "src", "rk") for p in cfg.phases}
    for row in rows:
        assert row["status"] == "ok"
        assert row["seconds"] > 0 and np.isfinite(row["seconds"])
        assert row["size"] == (cfg.rk_train_windows if row["algorithm"] == "rk" else 32)


# ---------------------------------------------------------------- recdirect

def test_stacked_targets_alignment():
    series = np.arange(10.0)[:, None]
    out = stacked_targets(series, first=2, count=3, horizon=2)
    np.testing.assert_array_equal(out, [[2, 3], [3, 4], [4, 5]])


def test_recdirect_horizon_one_matches_closed_loop(smooth_dataset):
    cfg = RecDirectConfig(dataset=smooth_dataset, seeds=(0,), size=24, train_len=200,
                          warmup=15, horizon=1, warm_len=10, normalizer_len=100)
    rows, curves = run_recdirect(cfg)
    row = rows[0]
    # a one-step direct readout and the closed-loop readout solve the same
    # ridge problem, so the single-step forecasts must coincide
    assert row["nmse_loop_end"] == pytest.approx(row["nmse_direct_end"], rel=1e-9)
    assert row["diverged_at"] == -1
    assert np.isfinite(row["var_ratio_loop"]) and np.isfinite(row["var_ratio_direct"])
    header, columns = curves["nmse_seed0"]
    assert header == ["step", "nmse_loop", "nmse_direct"]
    np.testing.assert_allclose(columns[1], columns[2], rtol=1e-9)


def test_recdirect_validation(smooth_dataset):
    with pytest.raises(ConfigError):
        run_recdirect(RecDirectConfig(dataset=""))
    with pytest.raises(ConfigError):
        run_recdirect(RecDirectConfig(dataset=smooth_dataset, seeds=()))
    with pytest.raises(ConfigError):  # horizon leaves < 2 rows for the stacked solve
        run_recdirect(RecDirectConfig(dataset=smooth_dataset, seeds=(0,), size=16,
                                      train_len=50, warmup=15, horizon=50,
                                      warm_len=5, normalizer_len=100))


# ---------------------------------------------------------------- convergence

def test_convergence_zero_variance_is_exact():
    cfg = ConvergenceConfig(seeds=(0,), algorithms=("rc", "src"), activations=("erf",),
                            sigma_r2_grid=(0.0,), sigma_i2=0.0, sigma_b2=0.0,
                            sizes=(16, 32), n_series=4, series_len=5, series_dim=3,
                            record_at=(2, 5))
    rows, _ = run_convergence(cfg)
    assert len(rows) == 8
    assert all(row["mse"] == 0.0 for row in rows)


def test_convergence_smoke_rows_and_curves():
    cfg = ConvergenceConfig(seeds=(0, 1), algorithms=("rc", "src"),
                            activations=("erf", "rff"), sigma_r2_grid=(0.25,),
                            sigma_i2=0.02, sigma_b2=0.0, sizes=(32, 64), n_series=6,
                            series_len=6, series_dim=8, record_at=(2, 6),
                            redraw_modes=(0, 1))
    rows, curves = run_convergence(cfg)
    assert len(rows) == 2 * 2 * 2 * 2 * 2 * 2
    assert all(np.isfinite(r["mse"]) and r["mse"] > 0 for r in rows)
    assert {r["redraw"] for r in rows} == {0, 1}
    assert set(curves) == {"convergence_erf_sr0.25", "convergence_erf_sr0.25_redraw",
                           "convergence_rff_sr0.25", "convergence_rff_sr0.25_redraw"}
    header, columns = curves["convergence_erf_sr0.25"]
    assert header == ["size", "mse_rc_t2", "mse_rc_t6", "mse_src_t2", "mse_src_t6"]
    assert columns[0] == [32, 64]
    assert all(len(c) == 2 for c in columns)


def test_convergence_validation():
    with pytest.raises(ConfigError):
        run_convergence(ConvergenceConfig(seeds=()))
    with pytest.raises(ConfigError):  # tanh has no kernel recursion
        run_convergence(ConvergenceConfig(activations=("tanh",)))


# ---------------------------------------------------------------- CLI

def test_registry_covers_all_experiments():
    assert set(EXPERIMENTS) == set(CONFIG_TYPES)


def test_cli_simulate_roundtrip(tmp_path):
    out = tmp_path / "nested" / "run"
    rc = main(["simulate-ks", "--out", str(out),
               "--set", "domain=22.0", "--set", "grid=32", "--set", "transient=10",
               "--set", "steps=60", "--set", "lyapunov_probes=0",
               "--set", "csv_rows=5", "--set", "filename=ks.rskd"])
    assert rc == 0
    assert (out / "results.csv").is_file()
    assert (out / "dataset.csv").read_text().count("\n") == 6  # header + 5 rows
    ds = load_dataset(out / "ks.rskd")
    assert ds.series.shape == (60, 32)
    meta = json.loads((out / "meta.json").read_text())
    assert meta["experiment"] == "simulate-ks"
    assert meta["config"]["grid"] == 32


def test_cli_config_errors(tmp_path, capsys):
    assert main(["predict", "--out", str(tmp_path), "--set", "bogus=1"]) == 2
    assert "reskit: config error:" in capsys.readouterr().err
    assert main(["predict", "--out", str(tmp_path),
                 "--config", str(tmp_path / "nope.ini")]) == 2
    # config errors raised inside a runner map to the same exit code
    assert main(["convergence", "--out", str(tmp_path), "--set", "seeds="]) == 2
    with pytest.raises(SystemExit):  # unknown experiment is rejected by the parser
        main(["frobnicate", "--out", str(tmp_path)])


def test_cli_numeric_error(tmp_path, capsys):
    rc = main(["simulate-ks", "--out", str(tmp_path / "blow"),
               "--set", "dt=100.0", "--set", "domain=100.0", "--set", "grid=64",
               "--set", "transient=0", "--set", "steps=400",
               "--set", "lyapunov_probes=0"])
    assert rc == 3
    assert "reskit: numeric error:" in capsys.readouterr().err

"""Generate and save a Kuramoto-Sivashinsky dataset for the other runners."""

from __future__ import annotations

from pathlib import Path

from ..ks_data import KSConfig, export_csv, save_dataset, simulate_ks


def run_simulate(cfg, out_dir=None):
    ks = KSConfig(domain=cfg.domain, grid=cfg.grid, dt=cfg.dt,
                  subsample=cfg.subsample, transient=cfg.transient, seed=cfg.seed)
    ds = simulate_ks(ks, cfg.steps, lyapunov_probes=cfg.lyapunov_probes,
                     lyapunov_horizon=cfg.lyapunov_horizon)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_dataset(ds, out / cfg.filename)
        if cfg.csv_rows > 0:
            export_csv(ds.series[:cfg.csv_rows], out / "dataset.csv")
    rows = [{
        "frames": ds.series.shape[0], "coordinates": ds.series.shape[1],
        "dt_effective": ds.dt_effective,
        "lyapunov": ds.lyapunov if ds.lyapunov is not None else "",
        "file": cfg.filename,
    }]
    return rows, {}

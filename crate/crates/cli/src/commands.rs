//! The three subcommands. Each returns a value the binary maps to an exit status.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bubble_core::acceptance::{run_all, table, Outcome};
use bubble_core::diagnostics::decay_comparison;
use bubble_core::grid::make_initial_data;
use bubble_core::waves::linear_response;
use bubble_core::{run, PowerFit, Trajectory};

use crate::config::RunConfig;
use crate::output::{self, Manifest};
use crate::{io_err, CliError, Result};

/// Keys a sweep may vary.
pub const SWEEP_PARAMS: [&str; 3] = ["init.amplitude", "cells", "cfl"];

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(io_err(path))
}

fn manifest_for(cfg: &RunConfig) -> Result<Manifest> {
    let p = &cfg.params;
    let grid = cfg.grid()?;
    let eig = p.eigenvalues()?;
    Ok(Manifest {
        config: cfg.echo().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        c0: p.c0(),
        r_bar: p.r_bar(),
        lambda1_re: eig.lambda1.re,
        lambda1_im: eig.lambda1.im,
        lambda2_re: eig.lambda2.re,
        lambda2_im: eig.lambda2.im,
        grid_nodes: grid.len(),
        grid_dxi: grid.dxi(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: 0.0,
        outputs: Vec::new(),
        status: "running".into(),
        warnings: Vec::new(),
    })
}

fn write_manifest(out: &Path, m: &Manifest) -> Result<()> {
    output::write(&out.join("manifest.json"), &serde_json::to_string_pretty(m)?)
}

fn execute(cfg: &RunConfig, manifest: &mut Manifest) -> Result<Trajectory> {
    let grid = cfg.grid()?;
    let init = make_initial_data(&cfg.init_spec()?, &grid, &cfg.params, cfg.solver.mode)?;
    let mut traj = run(&init, &grid, &cfg.params, &cfg.solver)?;
    match linear_response(&traj, cfg.calr_xi0) {
        Ok(resp) => traj.series.attach_response(resp.samples),
        Err(e) => manifest.warnings.push(format!("linear response unavailable: {e}")),
    }
    Ok(traj)
}

/// Run one configuration and write its series, snapshots and manifest into `out`.
///
/// A failed run still leaves a manifest whose status carries the error.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<(Trajectory, Manifest)> {
    let start = Instant::now();
    create_dir(&out.join("snapshots"))?;
    let mut manifest = manifest_for(cfg)?;
    let traj = match execute(cfg, &mut manifest) {
        Ok(t) => t,
        Err(e) => {
            manifest.status = format!("failed: {e}");
            manifest.wall_time_s = start.elapsed().as_secs_f64();
            write_manifest(out, &manifest)?;
            return Err(e);
        }
    };
    output::write(&out.join("series.csv"), &output::series_csv(&traj.series))?;
    manifest.outputs.push("series.csv".into());
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let name = output::snapshot_name(k);
        let text = output::snapshot_csv(snap, &traj.grid, &traj.params, traj.config.mode)?;
        output::write(&out.join(&name), &text)?;
        manifest.outputs.push(name);
    }
    manifest.outputs.push("manifest.json".into());
    manifest.status = "ok".into();
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    write_manifest(out, &manifest)?;
    Ok((traj, manifest))
}

/// One sweep row. `error` is set when the run failed.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: String,
    pub dir: PathBuf,
    pub fit: Option<PowerFit>,
    pub max_err: f64,
    pub max_weighted_err: f64,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(value: &str, dir: PathBuf, e: &CliError) -> Self {
        Self {
            value: value.to_string(),
            dir,
            fit: None,
            max_err: f64::NAN,
            max_weighted_err: f64::NAN,
            error: Some(e.to_string()),
        }
    }
}

pub const SUMMARY_HEADER: &str = "index,value,status,dir,exponent,fit_samples,max_err,max_weighted_err";

fn sweep_one(cfg: &RunConfig, value: &str, dir: PathBuf) -> SweepRow {
    let outcome = simulate(cfg, &dir).and_then(|(traj, _)| {
        let s = &traj.series;
        let cmp = decay_comparison(s)?;
        let weighted = (0..s.len())
            .map(|i| (1.0 + s.cmin * s.t[i]) * cmp.err[i])
            .fold(0.0, f64::max);
        Ok((cmp.fit, cmp.err.iter().copied().fold(0.0, f64::max), weighted))
    });
    match outcome {
        Ok((fit, max_err, max_weighted_err)) => SweepRow {
            value: value.to_string(),
            dir,
            fit: Some(fit),
            max_err,
            max_weighted_err,
            error: None,
        },
        Err(e) => SweepRow::failed(value, dir, &e),
    }
}

/// Run `cfg` once per value of `param`, concurrently, each in `out/run_NNN`.
///
/// Values are all checked before anything runs. A run that fails is recorded in its
/// row and does not stop the others.
pub fn sweep(cfg: &RunConfig, param: &str, values: &[String], out: &Path) -> Result<Vec<SweepRow>> {
    if !SWEEP_PARAMS.contains(&param) {
        return Err(CliError::Args(format!(
            "cannot sweep `{param}`; choose one of {}",
            SWEEP_PARAMS.join(", ")
        )));
    }
    if values.is_empty() {
        return Err(CliError::Args("sweep needs at least one value".into()));
    }
    let mut configs = Vec::with_capacity(values.len());
    for v in values {
        let mut c = cfg.clone();
        c.set(param, v)
            .map_err(|e| CliError::Args(format!("value `{v}` for {param}: {e}")))?;
        configs.push(c);
    }
    create_dir(out)?;

    let rows: Vec<SweepRow> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .zip(values)
            .enumerate()
            .map(|(k, (c, v))| {
                let dir = out.join(format!("run_{k:03}"));
                scope.spawn(move || sweep_one(c, v, dir))
            })
            .collect();
        handles
            .into_iter()
            .zip(values)
            .enumerate()
            .map(|(k, (h, v))| {
                h.join().unwrap_or_else(|_| {
                    let e = CliError::Args("worker panicked".into());
                    SweepRow::failed(v, out.join(format!("run_{k:03}")), &e)
                })
            })
            .collect()
    });

    output::write(&out.join("summary.csv"), &summary_csv(&rows))?;
    Ok(rows)
}

pub fn summary_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for (k, r) in rows.iter().enumerate() {
        let dir = r
            .dir
            .file_name()
            .map(|d| d.to_string_lossy().into_owned())
            .unwrap_or_default();
        let (exponent, samples) = match r.fit {
            Some(PowerFit::Exponent { p, samples }) => (format!("{p:.16e}"), samples.to_string()),
            Some(PowerFit::BelowFloor) => ("below_floor".into(), String::new()),
            None => (String::new(), String::new()),
        };
        let status = match &r.error {
            None => "ok".to_string(),
            // commas and quotes would break the row
            Some(e) => format!("\"failed: {}\"", e.replace('"', "'")),
        };
        let _ = writeln!(
            s,
            "{k},{},{status},{dir},{exponent},{samples},{:.16e},{:.16e}",
            r.value, r.max_err, r.max_weighted_err
        );
    }
    s
}

/// Run the acceptance suite and write its table to `out/verify.txt`.
pub fn verify(out: &Path) -> Result<Vec<Outcome>> {
    create_dir(out)?;
    let outcomes = run_all();
    output::write(&out.join("verify.txt"), &table(&outcomes))?;
    Ok(outcomes)
}

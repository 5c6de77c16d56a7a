//! CSV and manifest formats.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use bubble_core::waves::reconstruct_waves;
use bubble_core::{FluidParams, Grid, Mode, RunSeries, SimState};

use crate::{io_err, Result};

pub const SERIES_HEADER: &str = "t,R,u0,q0,psi0,dtpsi0,wB0,wF0,e0,e1,e_total,F_R,calR,err,kss0";
pub const SNAPSHOT_HEADER: &str = "xi,x,u,q,r,c,phi,psi,wB,wF";

fn row(out: &mut String, values: &[f64]) {
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

/// Surface series, one row per accepted step. Missing response columns are `NaN`.
pub fn series_csv(s: &RunSeries) -> String {
    let mut out = String::with_capacity(s.len() * 15 * 24);
    out.push_str(SERIES_HEADER);
    out.push('\n');
    let pick = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(f64::NAN);
    for i in 0..s.len() {
        row(
            &mut out,
            &[
                s.t[i],
                s.r[i],
                s.u0[i],
                s.q0[i],
                s.psi0[i],
                s.dtpsi0[i],
                s.w_b0[i],
                s.w_f0[i],
                s.e0[i],
                s.e1[i],
                s.e_total[i],
                s.f_r[i],
                pick(&s.cal_r, i),
                pick(&s.err, i),
                s.kss0[i],
            ],
        );
    }
    out
}

pub fn snapshot_csv(state: &SimState, grid: &Grid, params: &FluidParams, mode: Mode) -> Result<String> {
    let w = reconstruct_waves(state, grid, params, mode)?;
    let mut out = format!("# t={:.16e}\n{SNAPSHOT_HEADER}\n", state.t);
    for i in 0..grid.len() {
        let xi = grid.xi[i];
        row(
            &mut out,
            &[
                xi,
                (xi * xi * xi - 1.0) / 3.0,
                state.u[i],
                state.q[i],
                w.r[i],
                w.c[i],
                w.phi[i],
                w.psi[i],
                w.w_b[i],
                w.w_f[i],
            ],
        );
    }
    Ok(out)
}

pub fn snapshot_name(index: usize) -> String {
    format!("snapshots/{index:06}.csv")
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(io_err(path))
}

/// Record of one run. Serialized as a single flat JSON object; the resolved
/// configuration keys appear verbatim at the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(flatten)]
    pub config: BTreeMap<String, String>,
    pub c0: f64,
    pub r_bar: f64,
    pub lambda1_re: f64,
    pub lambda1_im: f64,
    pub lambda2_re: f64,
    pub lambda2_im: f64,
    pub grid_nodes: usize,
    pub grid_dxi: f64,
    pub version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub status: String,
    pub warnings: Vec<String>,
}

//! Acceptance suite: ten property checks with pinned setups and tolerances.
//!
//! Each check returns what it measured next to the tolerance it was held to. A check
//! that cannot be carried out (solver error, empty fit window) counts as a failure.

use std::collections::hash_map::DefaultHasher;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::time::Instant;

use crate::diagnostics::{fit_damped_oscillation, fit_power_law, moving_average, PowerFit, RunSeries};
use crate::error::{Error, Result};
use crate::grid::{make_initial_data, Grid, InitSpec};
use crate::model::{Eigenpair, FluidParams, Mode};
use crate::solver::{run, SolverConfig, Trajectory};
use crate::waves::{linear_response, reconstruct_waves, transmission_defect, xi0_at, y_from_boundary, Xi0Mode};

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "equilibrium preservation"),
    (2, "conserved energy"),
    (3, "self-convergence"),
    (4, "eigenvalue radiative decay"),
    (5, "quadratic linear-response error"),
    (6, "exact linear transport"),
    (7, "absorbing boundary"),
    (8, "xi0 geometry"),
    (9, "transmission scaling"),
    (10, "harness self-tests"),
];

/// Measured value against its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub measured: String,
    pub tolerance: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub check: Check,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<32} {}  measured: {}  tolerance: {}  ({:.1} s)",
            self.id,
            self.name,
            if self.check.pass { "PASS" } else { "FAIL" },
            self.check.measured,
            self.check.tolerance,
            self.seconds
        )
    }
}

pub fn table(outcomes: &[Outcome]) -> String {
    let mut s = String::new();
    for o in outcomes {
        let _ = writeln!(s, "{}", o.line());
    }
    let passed = outcomes.iter().filter(|o| o.check.pass).count();
    let _ = writeln!(s, "{passed}/{} criteria passed", outcomes.len());
    s
}

/// Run one criterion by number.
pub fn run_criterion(id: u8) -> Outcome {
    let name = CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("unknown");
    let start = Instant::now();
    let res = match id {
        1 => equilibrium_preservation(),
        2 => conserved_energy(),
        3 => self_convergence(),
        4 => FluidParams::default().eigenvalues().and_then(|e| radiative_decay(&e)),
        5 => linear_response_error(),
        6 => linear_transport(),
        7 => absorbing_boundary(),
        8 => xi0_geometry(),
        9 => transmission_scaling(),
        10 => self_tests(),
        _ => Err(Error::Config(format!("no criterion {id}"))),
    };
    let check = res.unwrap_or_else(|e| Check {
        measured: format!("error: {e}"),
        tolerance: "-".into(),
        pass: false,
    });
    Outcome {
        id,
        name,
        check,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all() -> Vec<Outcome> {
    CRITERIA.iter().map(|c| run_criterion(c.0)).collect()
}

fn simulate(
    spec: &InitSpec,
    xi_max: f64,
    cells: usize,
    mode: Mode,
    t_end: f64,
    snapshot_dt: f64,
) -> Result<Trajectory> {
    let p = FluidParams::default();
    let g = Grid::with_cells(xi_max, cells)?;
    let cfg = SolverConfig {
        mode,
        t_end,
        snapshot_dt,
        ..SolverConfig::default()
    };
    let s = make_initial_data(spec, &g, &p, mode)?;
    run(&s, &g, &p, &cfg)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn c0() -> f64 {
    FluidParams::default().c0()
}

pub fn equilibrium_preservation() -> Result<Check> {
    let t_end = 100.0 / c0();
    let start = Instant::now();
    let traj = simulate(&InitSpec::Equilibrium, 64.0, 512, Mode::Nonlinear, t_end, 1.0)?;
    let secs = start.elapsed().as_secs_f64();
    let s = &traj.series;
    let mut worst = sup(&s.u0).max(s.r.iter().fold(0.0f64, |m, r| m.max((r - 1.0).abs())));
    for snap in &traj.snapshots {
        worst = worst.max(sup(&snap.u)).max(sup(&snap.q));
    }
    Ok(Check {
        measured: format!("max deviation {worst:.3e}, run {secs:.2} s"),
        tolerance: "<= 1e-12, <= 10 s".into(),
        pass: worst <= 1e-12 && secs <= 10.0,
    })
}

/// Bump shared by the energy and convergence criteria.
pub const BUMP: InitSpec = InitSpec::QBump {
    amplitude: 1e-2,
    center: 8.0,
    width: 1.5,
};

pub fn conserved_energy() -> Result<Check> {
    let t_end = 50.0 / c0();
    let coarse = simulate(&BUMP, 64.0, 1024, Mode::Nonlinear, t_end, t_end)?
        .series
        .energy_drift();
    let fine = simulate(&BUMP, 64.0, 2048, Mode::Nonlinear, t_end, t_end)?
        .series
        .energy_drift();
    let ratio = coarse / fine;
    Ok(Check {
        measured: format!("drift {fine:.3e} at N=2048, {coarse:.3e} at N=1024, ratio {ratio:.2}"),
        tolerance: "drift <= 1e-6, ratio >= 3".into(),
        pass: fine <= 1e-6 && ratio >= 3.0,
    })
}

/// `L2(dx)` norm of the difference between a field and one on a grid twice as fine.
fn restricted_difference(coarse: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = (0..coarse.len()).map(|i| (a[i] - b[2 * i]).powi(2)).collect();
    coarse.integrate_dx(&d).sqrt()
}

pub fn self_convergence() -> Result<Check> {
    let t_end = 20.0 / c0();
    let mut q = Vec::new();
    let mut grids = Vec::new();
    for cells in [1024, 2048, 4096] {
        let traj = simulate(&BUMP, 64.0, cells, Mode::Nonlinear, t_end, t_end)?;
        q.push(traj.snapshots.last().unwrap().q.clone());
        grids.push(traj.grid);
    }
    let d1 = restricted_difference(&grids[0], &q[0], &q[1]);
    let d2 = restricted_difference(&grids[1], &q[1], &q[2]);
    let order = (d1 / d2).log2();
    Ok(Check {
        measured: format!("order {order:.3} (differences {d1:.3e}, {d2:.3e})"),
        tolerance: "2.0 +- 0.25".into(),
        pass: (order - 2.0).abs() <= 0.25,
    })
}

/// Pulse attached to the bubble, so the surface starts displaced and then rings down.
pub const ATTACHED_PULSE: InitSpec = InitSpec::OutgoingPulse {
    amplitude: 1e-3,
    center: 1.0,
    width: 1.0,
};

/// Half width of the mean applied to `Re Y_1` before peak picking; removes the
/// grid-scale ringing of the surface closure.
pub const DECAY_SMOOTHING: f64 = 0.1;

/// Decay rate and period of `Re Y_1` against `eig`.
pub fn radiative_decay(eig: &Eigenpair) -> Result<Check> {
    let eps = 1e-3;
    let traj = simulate(&ATTACHED_PULSE, 24.0, 2048, Mode::Linear, 8.0, 8.0)?;
    let w = reconstruct_waves(traj.initial(), &traj.grid, &traj.params, Mode::Linear)?;
    let incoming = sup(&w.w_b);
    let s = &traj.series;
    let y: Vec<f64> = (0..s.len())
        .map(|i| y_from_boundary(eig, s.dtpsi0[i], s.psi0[i])[0].re)
        .collect();
    let fit = fit_damped_oscillation(&s.t, &moving_average(&s.t, &y, DECAY_SMOOTHING), (2.0, 8.0))?;
    let rate_ref = eig.lambda1.re;
    let period_ref = 2.0 * std::f64::consts::PI / eig.lambda1.im.abs();
    let rate_err = (fit.rate - rate_ref).abs() / rate_ref.abs();
    let period_err = (fit.period - period_ref).abs() / period_ref;
    Ok(Check {
        measured: format!(
            "rate {:.4} (ref {rate_ref:.4}), period {:.4} (ref {period_ref:.4}), max|w_B(0)| {incoming:.2e}",
            fit.rate, fit.period
        ),
        tolerance: format!("5% each, max|w_B(0)| <= {:.0e}", 1e-3 * eps),
        pass: rate_err <= 0.05 && period_err <= 0.05 && incoming <= 1e-3 * eps,
    })
}

fn response_error_peak(series: &RunSeries, window: (f64, f64)) -> f64 {
    (0..series.len())
        .filter(|&i| series.t[i] >= window.0 && series.t[i] <= window.1)
        .map(|i| (1.0 + series.cmin * series.t[i]) * series.err[i])
        .fold(0.0, f64::max)
}

fn response_metric(amplitude: f64, cells: usize) -> Result<f64> {
    let spec = InitSpec::OutgoingPulse {
        amplitude,
        center: 1.0,
        width: 1.0,
    };
    let mut traj = simulate(&spec, 32.0, cells, Mode::Nonlinear, 20.0, 20.0)?;
    let resp = linear_response(&traj, Xi0Mode::Traced)?;
    traj.series.attach_response(resp.samples);
    Ok(response_error_peak(&traj.series, (5.0, 20.0)))
}

pub fn linear_response_error() -> Result<Check> {
    // at N=2048 the linear discretization floor is still comparable to the quadratic term
    let big = response_metric(2e-3, 4096)?;
    let small = response_metric(1e-3, 4096)?;
    let coarse = response_metric(1e-3, 2048)?;
    let ratio = big / small;
    Ok(Check {
        measured: format!("M ratio {ratio:.3} at N=4096; M(1e-3) {coarse:.3e} at N=2048, {small:.3e} at N=4096"),
        tolerance: "ratio in [2.5, 6], M decreasing under refinement".into(),
        pass: (2.5..=6.0).contains(&ratio) && small < coarse,
    })
}

fn transport_defect(cells: usize) -> Result<(f64, f64)> {
    let t_end = 20.0;
    let traj = simulate(&BUMP, 64.0, cells, Mode::Linear, t_end, t_end)?;
    let init = reconstruct_waves(traj.initial(), &traj.grid, &traj.params, Mode::Linear)?;
    let s = &traj.series;
    let c0 = traj.params.c0();
    let worst = (0..s.len())
        .map(|i| (s.w_b0[i] - traj.grid.interpolate(&init.w_b, 1.0 + c0 * s.t[i])).abs())
        .fold(0.0, f64::max);
    Ok((worst, traj.grid.dxi()))
}

pub fn linear_transport() -> Result<Check> {
    let (d1, h1) = transport_defect(1024)?;
    let (d2, h2) = transport_defect(2048)?;
    let k = d1 / (h1 * h1);
    let k_fine = d2 / (h2 * h2);
    let ratio = k_fine / k;
    Ok(Check {
        measured: format!("K {k:.3e} at N=1024, {k_fine:.3e} at N=2048 (ratio {ratio:.3})"),
        tolerance: "fine K within 25% of coarse K".into(),
        pass: (ratio - 1.0).abs() <= 0.25,
    })
}

pub fn absorbing_boundary() -> Result<Check> {
    let (xi_max, center, width) = (32.0, 8.0, 1.0);
    let spec = InitSpec::OutgoingPulse {
        amplitude: 1e-3,
        center,
        width,
    };
    let c0 = c0();
    // leading edge reaches the boundary at t_hit, trailing edge has left by t_gone
    let t_gone = (xi_max - center + 4.0 * width) / c0 + 1.0;
    let t_end = t_gone + (xi_max - 1.0) / (2.0 * c0);
    let traj = simulate(&spec, xi_max, 2048, Mode::Nonlinear, t_end, 0.05)?;
    let g = &traj.grid;
    let near = g.xi.iter().position(|&x| x >= xi_max - 8.0 * width).unwrap();
    let mut incident = 0.0f64;
    let mut returning = 0.0f64;
    for snap in &traj.snapshots {
        if snap.t < t_gone {
            incident = incident.max(sup(&snap.q[near..]));
        } else {
            returning = returning.max(sup(&snap.q));
        }
    }
    let rel = returning / incident;
    Ok(Check {
        measured: format!("returning/incident {rel:.3e} ({returning:.3e} / {incident:.3e})"),
        tolerance: "<= 1e-2".into(),
        pass: rel <= 1e-2,
    })
}

pub fn xi0_geometry() -> Result<Check> {
    let t_end = 25.0;
    let traj = simulate(&BUMP, 64.0, 2048, Mode::Nonlinear, t_end, t_end)?;
    let (cmin, cmax) = (traj.series.cmin, traj.series.cmax);
    let samples = 500;
    let mut pts = vec![(0.0, traj.grid.xi[0])];
    for k in 1..=samples {
        let t = t_end * k as f64 / samples as f64;
        match xi0_at(&traj, t)? {
            Some(x) => pts.push((t, x)),
            None => break,
        }
    }
    let slopes: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let lo = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let increasing = pts.windows(2).all(|w| w[1].1 > w[0].1);
    Ok(Check {
        measured: format!(
            "{} samples, slope in [{lo:.5}, {hi:.5}], speeds [{cmin:.5}, {cmax:.5}]",
            pts.len()
        ),
        tolerance: "strictly increasing, slope in [0.98 cmin, 1.02 cmax]".into(),
        pass: pts.len() > samples / 2 && increasing && lo >= 0.98 * cmin && hi <= 1.02 * cmax,
    })
}

fn transmission_metric(amplitude: f64) -> Result<f64> {
    let spec = InitSpec::QBump {
        amplitude,
        center: 8.0,
        width: 1.5,
    };
    let t_end = 12.0;
    let traj = simulate(&spec, 32.0, 2048, Mode::Nonlinear, t_end, t_end)?;
    let times: Vec<f64> = (1..=480).map(|k| t_end * k as f64 / 480.0).collect();
    transmission_defect(&traj, &times)
}

pub fn transmission_scaling() -> Result<Check> {
    let big = transmission_metric(2e-3)?;
    let small = transmission_metric(1e-3)?;
    let ratio = big / small;
    Ok(Check {
        measured: format!("ratio {ratio:.3} ({big:.3e} / {small:.3e})"),
        tolerance: "[2.5, 6]".into(),
        pass: (2.5..=6.0).contains(&ratio),
    })
}

fn series_hash(s: &RunSeries) -> u64 {
    let mut h = DefaultHasher::new();
    for v in [
        &s.t, &s.r, &s.u0, &s.q0, &s.psi0, &s.dtpsi0, &s.w_b0, &s.e_total, &s.kss0,
    ] {
        for x in v.iter() {
            x.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

pub fn self_tests() -> Result<Check> {
    // planted power law
    let t: Vec<f64> = (0..400).map(|k| 0.05 * k as f64).collect();
    let cmin = 1.9;
    let err: Vec<f64> = t.iter().map(|&s| 1e-4 * (1.0 + cmin * s).powf(-1.5)).collect();
    let p = match fit_power_law(&t, &err, cmin, (2.0, 18.0))? {
        PowerFit::Exponent { p, .. } => p,
        PowerFit::BelowFloor => f64::NAN,
    };
    // planted damped oscillation
    let omega = 1.984313483298443;
    let t2: Vec<f64> = (0..4000).map(|k| 0.0025 * k as f64).collect();
    let y: Vec<f64> = t2.iter().map(|&s| (-1.75 * s).exp() * (omega * s).cos()).collect();
    let osc = fit_damped_oscillation(&t2, &y, (0.0, 10.0))?;
    let period = 2.0 * std::f64::consts::PI / omega;
    // complex rate through the diagonal variables
    let eig = FluidParams::default().eigenvalues()?;
    let mode = |s: f64| (eig.lambda1 * s).exp();
    let yv: Vec<f64> = t2
        .iter()
        .map(|&s| {
            let z = mode(s) + mode(s).conj();
            let dz = eig.lambda1 * mode(s) + (eig.lambda1 * mode(s)).conj();
            y_from_boundary(&eig, dz.re, z.re)[0].re
        })
        .collect();
    let diag = fit_damped_oscillation(&t2, &yv, (0.0, 10.0))?;
    let near = |a: f64, b: f64| ((a - b) / b).abs() <= 0.02;

    let run_once = || simulate(&BUMP, 24.0, 256, Mode::Nonlinear, 2.0, 1.0).map(|t| series_hash(&t.series));
    let (h1, h2) = (run_once()?, run_once()?);

    let pass = near(p, -1.5) && near(osc.rate, -1.75) && near(osc.period, period) && near(diag.rate, -1.75) && h1 == h2;
    Ok(Check {
        measured: format!(
            "power {p:.4}, rate {:.4}, period {:.4}, diagonal rate {:.4}, hashes {}",
            osc.rate,
            osc.period,
            diag.rate,
            if h1 == h2 { "equal" } else { "differ" }
        ),
        tolerance: "2% of -1.5, -1.75, 3.1664; identical hashes".into(),
        pass,
    })
}

//! Method-of-lines integration of the Lagrangian system.
//!
//! Interior derivatives are second-order central differences in `xi`, boundaries use
//! second-order one-sided stencils, and time stepping is classical RK4. The boundary
//! value `q[0]` is never evolved: after every stage it is reset to `f(R)`.

use crate::diagnostics::{RunSeries, SeriesRecorder};
use crate::error::{Error, Result};
use crate::grid::{radius_field, Grid, SimState};
use crate::model::{check_compatibility, FluidParams, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OuterBc {
    #[default]
    Absorbing,
    Reflecting,
}

impl std::str::FromStr for OuterBc {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absorbing" => Ok(OuterBc::Absorbing),
            "reflecting" => Ok(OuterBc::Reflecting),
            other => Err(Error::Config(format!("unknown outer_bc `{other}`"))),
        }
    }
}

impl std::fmt::Display for OuterBc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OuterBc::Absorbing => "absorbing",
            OuterBc::Reflecting => "reflecting",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub mode: Mode,
    pub cfl: f64,
    pub t_end: f64,
    pub snapshot_dt: f64,
    pub dissipation: f64,
    pub outer_bc: OuterBc,
    /// Keep the characteristic-speed field of every step (needed by the tracer).
    pub record_speed: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: Mode::Nonlinear,
            cfl: 0.4,
            t_end: 10.0,
            snapshot_dt: 1.0,
            dissipation: 0.0,
            outer_bc: OuterBc::Absorbing,
            record_speed: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(Error::Parameter {
                name: "cfl",
                value: self.cfl,
                reason: "must lie in (0, 0.9]",
            });
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Parameter {
                name: "t_end",
                value: self.t_end,
                reason: "must be > 0",
            });
        }
        if !(self.snapshot_dt > 0.0) || !self.snapshot_dt.is_finite() {
            return Err(Error::Parameter {
                name: "snapshot_dt",
                value: self.snapshot_dt,
                reason: "must be > 0",
            });
        }
        if !(self.dissipation >= 0.0) || !self.dissipation.is_finite() {
            return Err(Error::Parameter {
                name: "dissipation",
                value: self.dissipation,
                reason: "must be >= 0",
            });
        }
        Ok(())
    }
}

/// Time derivative of `(u, q, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub du: Vec<f64>,
    pub dq: Vec<f64>,
    pub dr: f64,
    pub dphi_outer: f64,
}

/// Semi-discrete right-hand side.
///
/// The momentum equation is used in the form `u_t = -r^2 d_x (p - p_inf)`, which equals
/// `c^2 r^2 d_x q` in the continuum; with central differences it makes the interior
/// contribution to the conserved energy telescope.
pub fn rhs(state: &SimState, grid: &Grid, params: &FluidParams, cfg: &SolverConfig) -> Result<Derivative> {
    let n = grid.len();
    let xi = &grid.xi;
    let (r, pressure): (Vec<f64>, Vec<f64>) = match cfg.mode {
        Mode::Nonlinear => {
            let field = radius_field(state, grid, params)?;
            let p = state.q.iter().map(|&q| params.pressure_excess(q)).collect();
            (field.r, p)
        }
        Mode::Linear => {
            let c2 = params.c0() * params.c0();
            (xi.clone(), state.q.iter().map(|&q| -c2 * q).collect())
        }
    };
    let flux: Vec<f64> = (0..n).map(|i| r[i] * r[i] * state.u[i]).collect();

    let h2 = 2.0 * grid.dxi();
    let mut du = vec![0.0; n];
    let mut dq = vec![0.0; n];
    for i in 1..n - 1 {
        let inv = 1.0 / (xi[i] * xi[i] * h2);
        dq[i] = (flux[i + 1] - flux[i - 1]) * inv;
        du[i] = -r[i] * r[i] * (pressure[i + 1] - pressure[i - 1]) * inv;
    }
    // bubble surface: u from the one-sided momentum equation, q follows f(R)
    du[0] = -r[0] * r[0] * grid.one_sided_left([pressure[0], pressure[1], pressure[2]]);
    dq[0] = match cfg.mode {
        Mode::Nonlinear => params.f_prime(state.radius)? * state.u[0],
        Mode::Linear => params.f_prime_at_one() * state.u[0],
    };
    let m = n - 1;
    let inv = 1.0 / (xi[m] * xi[m] * h2);
    dq[m] = (3.0 * flux[m] - 4.0 * flux[m - 1] + flux[m - 2]) * inv;
    du[m] = match cfg.outer_bc {
        OuterBc::Reflecting => 0.0,
        OuterBc::Absorbing => -r[m] * r[m] * (3.0 * pressure[m] - 4.0 * pressure[m - 1] + pressure[m - 2]) * inv,
    };

    if cfg.dissipation > 0.0 && n >= 5 {
        let coef = cfg.dissipation / grid.dxi();
        for (field, deriv) in [(&state.u, &mut du), (&state.q, &mut dq)] {
            for i in 2..n - 2 {
                let d4 = field[i + 2] - 4.0 * field[i + 1] + 6.0 * field[i] - 4.0 * field[i - 1] + field[i - 2];
                deriv[i] -= coef * d4;
            }
        }
    }

    let (um, qm) = (state.u[m], state.q[m]);
    let dphi_outer = match cfg.mode {
        Mode::Nonlinear => params.g_unchecked(qm) + 0.5 * um * um,
        Mode::Linear => params.c0() * params.c0() * qm,
    };
    Ok(Derivative {
        du,
        dq,
        dr: state.u[0],
        dphi_outer,
    })
}

/// Overwrite the outermost node.
///
/// Absorbing: `d_t psi + c0 d_xi psi = 0` for `psi = xi phi`, which for linear waves reads
/// `u + c0 q = -phi / xi`; the outgoing invariant `u - c0 q` is extrapolated linearly
/// from the two interior neighbours. Reflecting: `u = 0`.
pub fn apply_outer_bc(state: &mut SimState, grid: &Grid, params: &FluidParams, cfg: &SolverConfig) {
    let n = state.u.len();
    let m = n - 1;
    match cfg.outer_bc {
        OuterBc::Reflecting => state.u[m] = 0.0,
        OuterBc::Absorbing => {
            let c0 = params.c0();
            let w1 = state.u[m - 1] - c0 * state.q[m - 1];
            let w2 = state.u[m - 2] - c0 * state.q[m - 2];
            let outgoing = 2.0 * w1 - w2;
            // subtracting from 0.0 keeps the equilibrium free of negative zeros
            let incoming = 0.0 - state.phi_outer / grid.xi_max();
            state.u[m] = 0.5 * (incoming + outgoing);
            state.q[m] = (incoming - outgoing) / (2.0 * c0);
        }
    }
}

/// Reset `q[0]` to the boundary law.
pub fn pin_boundary(state: &mut SimState, params: &FluidParams, mode: Mode) -> Result<()> {
    state.q[0] = match mode {
        Mode::Nonlinear => params.f(state.radius)?,
        Mode::Linear => params.f_prime_at_one() * (state.radius - 1.0),
    };
    Ok(())
}

/// `max_i c_i r_i^2 / xi_i^2`.
pub fn max_char_speed(state: &SimState, grid: &Grid, params: &FluidParams, mode: Mode) -> Result<f64> {
    Ok(char_speed_field(state, grid, params, mode)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Characteristic speed `c r^2 / xi^2` in the `xi` coordinate at every node.
pub fn char_speed_field(state: &SimState, grid: &Grid, params: &FluidParams, mode: Mode) -> Result<Vec<f64>> {
    match mode {
        Mode::Linear => Ok(vec![params.c0(); grid.len()]),
        Mode::Nonlinear => {
            let f = radius_field(state, grid, params)?;
            Ok((0..grid.len())
                .map(|i| f.c[i] * f.r[i] * f.r[i] / (grid.xi[i] * grid.xi[i]))
                .collect())
        }
    }
}

fn axpy(base: &SimState, k: &Derivative, dt: f64) -> SimState {
    SimState {
        u: base.u.iter().zip(&k.du).map(|(a, b)| a + dt * b).collect(),
        q: base.q.iter().zip(&k.dq).map(|(a, b)| a + dt * b).collect(),
        radius: base.radius + dt * k.dr,
        phi_outer: base.phi_outer + dt * k.dphi_outer,
        t: base.t + dt,
    }
}

fn restore(state: &mut SimState, grid: &Grid, params: &FluidParams, cfg: &SolverConfig) -> Result<()> {
    pin_boundary(state, params, cfg.mode)?;
    apply_outer_bc(state, grid, params, cfg);
    Ok(())
}

/// One classical RK4 step.
pub fn step(state: &SimState, dt: f64, grid: &Grid, params: &FluidParams, cfg: &SolverConfig) -> Result<SimState> {
    if grid.len() < 16 {
        return Err(Error::Grid(format!(
            "solver needs at least 16 nodes, got {}",
            grid.len()
        )));
    }
    let limit = cfg.cfl * grid.dxi() / max_char_speed(state, grid, params, cfg.mode)?;
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }

    let k1 = rhs(state, grid, params, cfg)?;
    let mut s2 = axpy(state, &k1, 0.5 * dt);
    restore(&mut s2, grid, params, cfg)?;
    let k2 = rhs(&s2, grid, params, cfg)?;
    let mut s3 = axpy(state, &k2, 0.5 * dt);
    restore(&mut s3, grid, params, cfg)?;
    let k3 = rhs(&s3, grid, params, cfg)?;
    let mut s4 = axpy(state, &k3, dt);
    restore(&mut s4, grid, params, cfg)?;
    let k4 = rhs(&s4, grid, params, cfg)?;

    let n = grid.len();
    let w = dt / 6.0;
    let mut next = SimState {
        u: (0..n)
            .map(|i| state.u[i] + w * (k1.du[i] + 2.0 * k2.du[i] + 2.0 * k3.du[i] + k4.du[i]))
            .collect(),
        q: (0..n)
            .map(|i| state.q[i] + w * (k1.dq[i] + 2.0 * k2.dq[i] + 2.0 * k3.dq[i] + k4.dq[i]))
            .collect(),
        radius: state.radius + w * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr),
        phi_outer: state.phi_outer + w * (k1.dphi_outer + 2.0 * k2.dphi_outer + 2.0 * k3.dphi_outer + k4.dphi_outer),
        t: state.t + dt,
    };
    restore(&mut next, grid, params, cfg)?;
    if let Some(i) = next.q.iter().position(|&q| !(q > -1.0)) {
        return Err(Error::Positivity {
            node: i,
            reason: "q <= -1 after step",
        });
    }
    Ok(next)
}

/// Characteristic-speed field `c r^2 / xi^2` stored at the end of every step, on every
/// `stride`-th node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpeedHistory {
    pub xi_start: f64,
    pub dxi: f64,
    pub stride: usize,
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
}

/// Upper bound on stored intervals per field; the speed is smooth, so bilinear
/// interpolation on the coarser mesh stays well below the solver error.
const SPEED_INTERVALS: usize = 1024;

impl SpeedHistory {
    pub fn for_grid(grid: &Grid) -> Self {
        let cells = grid.len() - 1;
        let mut stride = cells.div_ceil(SPEED_INTERVALS).max(1);
        while !cells.is_multiple_of(stride) {
            stride += 1;
        }
        SpeedHistory {
            xi_start: grid.xi[0],
            dxi: grid.dxi() * stride as f64,
            stride,
            times: Vec::new(),
            fields: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, field: &[f64]) {
        self.times.push(t);
        self.fields.push(field.iter().step_by(self.stride).copied().collect());
    }

    pub fn xi_end(&self) -> f64 {
        match self.fields.first() {
            Some(f) => self.xi_start + (f.len() - 1) as f64 * self.dxi,
            None => self.xi_start,
        }
    }

    fn sample(&self, k: usize, xi: f64) -> f64 {
        let f = &self.fields[k];
        let s = ((xi - self.xi_start) / self.dxi).max(0.0);
        let i = (s.floor() as usize).min(f.len() - 2);
        let theta = (s - i as f64).clamp(0.0, 1.0);
        f[i] * (1.0 - theta) + f[i + 1] * theta
    }

    /// Bilinear interpolation in `(xi, t)`; `xi` is clamped to the stored range.
    pub fn speed_at(&self, xi: f64, t: f64) -> Result<f64> {
        let (t0, t1) = match (self.times.first(), self.times.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::Window { xi, t }),
        };
        let tol = 1e-12 * (1.0 + t1.abs());
        if !(t >= t0 - tol && t <= t1 + tol) {
            return Err(Error::Window { xi, t });
        }
        if self.times.len() == 1 {
            return Ok(self.sample(0, xi));
        }
        let k = self.times.partition_point(|&s| s <= t).clamp(1, self.times.len() - 1) - 1;
        let (ta, tb) = (self.times[k], self.times[k + 1]);
        let theta = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        Ok(self.sample(k, xi) * (1.0 - theta) + self.sample(k + 1, xi) * theta)
    }
}

/// Output of [`run`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub params: FluidParams,
    pub config: SolverConfig,
    /// States at `k * snapshot_dt`, starting at `t = 0`.
    pub snapshots: Vec<SimState>,
    pub series: RunSeries,
    pub speed: SpeedHistory,
}

impl Trajectory {
    pub fn initial(&self) -> &SimState {
        &self.snapshots[0]
    }
}

const COMPAT_TOLERANCE: f64 = 1e-8;

/// Integrate from `initial` (at `t = 0`) to `cfg.t_end`.
pub fn run(initial: &SimState, grid: &Grid, params: &FluidParams, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if grid.len() < 16 {
        return Err(Error::Grid(format!(
            "solver needs at least 16 nodes, got {}",
            grid.len()
        )));
    }
    let rep = check_compatibility(&initial.u, &initial.q, initial.radius, grid, params, cfg.mode)?;
    if rep.max() > COMPAT_TOLERANCE {
        return Err(Error::Compatibility {
            cc0: rep.cc0_residual,
            cc1: rep.cc1_residual,
            tol: COMPAT_TOLERANCE,
        });
    }

    let mut state = initial.clone();
    state.t = 0.0;
    let mut recorder = SeriesRecorder::new(grid, params, cfg);
    let mut speed = SpeedHistory::for_grid(grid);
    let record = |state: &SimState, recorder: &mut SeriesRecorder, speed: &mut SpeedHistory| -> Result<()> {
        let field = recorder.record(state)?;
        if cfg.record_speed {
            speed.push(state.t, &field);
        }
        Ok(())
    };
    record(&state, &mut recorder, &mut speed)?;

    let n_snap = (cfg.t_end / cfg.snapshot_dt * (1.0 + 1e-12)).floor() as usize;
    let mut snapshots = Vec::with_capacity(n_snap + 1);
    snapshots.push(state.clone());
    let mut next_snap = 1usize;

    let wrap = |t: f64| move |e: Error| Error::AtTime { t, source: Box::new(e) };

    while state.t < cfg.t_end {
        let target = if next_snap <= n_snap {
            (next_snap as f64 * cfg.snapshot_dt).min(cfg.t_end)
        } else {
            cfg.t_end
        };
        let speed_max = max_char_speed(&state, grid, params, cfg.mode).map_err(wrap(state.t))?;
        let dt_cfl = cfg.cfl * grid.dxi() / speed_max;
        let remaining = target - state.t;
        let (dt, lands) = if remaining <= dt_cfl * (1.0 + 1e-12) {
            (remaining.min(dt_cfl), true)
        } else if remaining < 2.0 * dt_cfl {
            (0.5 * remaining, false)
        } else {
            (dt_cfl, false)
        };
        let mut next = step(&state, dt, grid, params, cfg).map_err(wrap(state.t))?;
        next.t = if lands { target } else { state.t + dt };
        state = next;
        record(&state, &mut recorder, &mut speed).map_err(wrap(state.t))?;
        if lands && next_snap <= n_snap && target == (next_snap as f64 * cfg.snapshot_dt).min(cfg.t_end) {
            snapshots.push(state.clone());
            next_snap += 1;
        }
    }

    Ok(Trajectory {
        grid: grid.clone(),
        params: *params,
        config: cfg.clone(),
        snapshots,
        series: recorder.finish(),
        speed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_initial_data, InitSpec};

    fn linear_cfg() -> SolverConfig {
        SolverConfig {
            mode: Mode::Linear,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn equilibrium_has_zero_rhs() {
        let g = Grid::new(16.0, 257).unwrap();
        let p = FluidParams::default();
        let s = SimState::equilibrium(&g);
        for cfg in [SolverConfig::default(), linear_cfg()] {
            let d = rhs(&s, &g, &p, &cfg).unwrap();
            assert!(d.du.iter().chain(&d.dq).all(|&v| v == 0.0));
            assert_eq!(d.dr, 0.0);
        }
    }

    #[test]
    fn equilibrium_step_is_bit_identical() {
        let g = Grid::new(16.0, 257).unwrap();
        let p = FluidParams::default();
        let s = SimState::equilibrium(&g);
        let cfg = SolverConfig::default();
        let dt = 0.9 * cfg.cfl * g.dxi() / p.c0();
        let next = step(&s, dt, &g, &p, &cfg).unwrap();
        assert_eq!(next.u, s.u);
        assert_eq!(next.q, s.q);
        assert_eq!(next.radius, 1.0);
        assert!(next.u.iter().chain(&next.q).all(|v| v.to_bits() == 0));
    }

    #[test]
    fn linear_rhs_matches_analytic_derivative() {
        let p = FluidParams::default();
        let c2 = p.c0() * p.c0();
        let mut errs = Vec::new();
        for n in [401, 801] {
            let g = Grid::new(11.0, n).unwrap();
            let k = 2.0;
            let q: Vec<f64> = g.xi.iter().map(|&x| 1e-3 * (k * x).sin()).collect();
            let s = SimState {
                u: vec![0.0; n],
                q,
                radius: 1.0,
                phi_outer: 0.0,
                t: 0.0,
            };
            let d = rhs(&s, &g, &p, &linear_cfg()).unwrap();
            let worst = (1..n - 1)
                .map(|i| (d.du[i] - c2 * 1e-3 * k * (k * g.xi[i]).cos()).abs())
                .fold(0.0, f64::max);
            errs.push(worst);
        }
        let ratio = errs[0] / errs[1];
        assert!((ratio - 4.0).abs() < 0.4, "{errs:?}");
    }

    #[test]
    fn radius_rate_is_boundary_velocity() {
        let g = Grid::new(8.0, 129).unwrap();
        let p = FluidParams::default();
        let mut s = SimState::equilibrium(&g);
        s.u[0] = 3.25e-3;
        s.u[1] = 1e-3;
        let d = rhs(&s, &g, &p, &SolverConfig::default()).unwrap();
        assert_eq!(d.dr, 3.25e-3);
    }

    #[test]
    fn cfl_violation_is_an_error() {
        let g = Grid::new(8.0, 129).unwrap();
        let p = FluidParams::default();
        let s = SimState::equilibrium(&g);
        let cfg = SolverConfig::default();
        let dt = 2.0 * cfg.cfl * g.dxi() / p.c0();
        assert!(matches!(step(&s, dt, &g, &p, &cfg), Err(Error::Cfl { .. })));
    }

    #[test]
    fn outer_bc_variants() {
        let g = Grid::new(8.0, 129).unwrap();
        let p = FluidParams::default();
        let mut s = SimState::equilibrium(&g);
        apply_outer_bc(&mut s, &g, &p, &SolverConfig::default());
        assert_eq!(s, SimState::equilibrium(&g));

        let mut s = SimState::equilibrium(&g);
        s.u.iter_mut().for_each(|v| *v = 0.5);
        let cfg = SolverConfig {
            outer_bc: OuterBc::Reflecting,
            ..SolverConfig::default()
        };
        apply_outer_bc(&mut s, &g, &p, &cfg);
        assert_eq!(*s.u.last().unwrap(), 0.0);

        let mut s = SimState::equilibrium(&g);
        for i in 0..g.len() {
            s.q[i] = 1e-3 * g.xi[i];
            s.u[i] = -2e-3 * g.xi[i];
        }
        apply_outer_bc(&mut s, &g, &p, &SolverConfig::default());
        let m = g.len() - 1;
        assert!((s.u[m] + p.c0() * s.q[m]).abs() < 1e-18);

        s.phi_outer = 4e-3;
        apply_outer_bc(&mut s, &g, &p, &SolverConfig::default());
        assert!((s.u[m] + p.c0() * s.q[m] + 4e-3 / 8.0).abs() < 1e-18);
    }

    #[test]
    fn rk4_local_error_scales_with_fifth_power() {
        let g = Grid::new(9.0, 257).unwrap();
        let p = FluidParams::default();
        let spec = InitSpec::QBump {
            amplitude: 1e-3,
            center: 5.0,
            width: 0.8,
        };
        let cfg = linear_cfg();
        let s = make_initial_data(&spec, &g, &p, Mode::Linear).unwrap();
        let defect = |dt: f64| {
            let one = step(&s, dt, &g, &p, &cfg).unwrap();
            let half = step(&step(&s, 0.5 * dt, &g, &p, &cfg).unwrap(), 0.5 * dt, &g, &p, &cfg).unwrap();
            // starting from u = 0 the odd powers of the operator only reach u
            one.u
                .iter()
                .zip(&half.u)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let dt = 0.4 * g.dxi() / p.c0();
        let ratio = defect(dt) / defect(0.5 * dt);
        assert!((ratio / 32.0 - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn radius_moves_with_boundary_velocity() {
        let g = Grid::new(8.0, 257).unwrap();
        let p = FluidParams::default();
        let spec = InitSpec::OutgoingPulse {
            amplitude: 1e-3,
            center: 1.0,
            width: 1.0,
        };
        let cfg = SolverConfig::default();
        let s = make_initial_data(&spec, &g, &p, Mode::Nonlinear).unwrap();
        let dt = 1e-4;
        let next = step(&s, dt, &g, &p, &cfg).unwrap();
        let predicted = s.radius + dt * s.u[0];
        assert!((next.radius - predicted).abs() <= 10.0 * dt * dt * s.u[0].abs().max(1e-3));
        assert_eq!(next.q[0], p.f(next.radius).unwrap());
    }

    #[test]
    fn snapshot_count_and_equilibrium_run() {
        let g = Grid::with_cells(64.0, 512).unwrap();
        let p = FluidParams::default();
        let cfg = SolverConfig {
            t_end: 100.0 / p.c0(),
            snapshot_dt: 7.0,
            record_speed: false,
            ..SolverConfig::default()
        };
        let traj = run(&SimState::equilibrium(&g), &g, &p, &cfg).unwrap();
        assert_eq!(traj.snapshots.len(), (cfg.t_end / cfg.snapshot_dt).floor() as usize + 1);
        let last = traj.snapshots.last().unwrap();
        assert!((last.radius - 1.0).abs() <= 1e-12);
        assert!(traj.series.r.iter().all(|&r| r == 1.0));
        let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(times[0], 0.0);
    }

    #[test]
    fn incompatible_initial_data_is_rejected() {
        let g = Grid::new(8.0, 65).unwrap();
        let p = FluidParams::default();
        let mut s = SimState::equilibrium(&g);
        s.q[0] = 1e-3;
        assert!(matches!(
            run(&s, &g, &p, &SolverConfig::default()),
            Err(Error::Compatibility { .. })
        ));
    }

    #[test]
    fn boundary_stays_pinned() {
        let g = Grid::new(16.0, 513).unwrap();
        let p = FluidParams::default();
        let spec = InitSpec::QBump {
            amplitude: 1e-2,
            center: 3.0,
            width: 0.4,
        };
        let s = make_initial_data(&spec, &g, &p, Mode::Nonlinear).unwrap();
        let cfg = SolverConfig {
            t_end: 3.0,
            snapshot_dt: 0.5,
            ..SolverConfig::default()
        };
        let traj = run(&s, &g, &p, &cfg).unwrap();
        for (r, q0) in traj.series.r.iter().zip(&traj.series.q0) {
            assert_eq!(*q0, p.f(*r).unwrap());
        }
        // run is deterministic
        let again = run(&s, &g, &p, &cfg).unwrap();
        assert_eq!(traj.series.e_total, again.series.e_total);
        // no blow-up
        let max_q = traj
            .snapshots
            .iter()
            .flat_map(|s| s.q.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max_q <= 2e-2);
    }

    #[test]
    fn linear_time_reversal_recovers_initial_data() {
        let p = FluidParams::default();
        let cfg = SolverConfig {
            mode: Mode::Linear,
            outer_bc: OuterBc::Reflecting,
            ..SolverConfig::default()
        };
        let mut defects = Vec::new();
        for n in [401, 801] {
            let g = Grid::new(12.0, n).unwrap();
            let spec = InitSpec::QBump {
                amplitude: 1e-3,
                center: 6.0,
                width: 1.0,
            };
            let s = make_initial_data(&spec, &g, &p, Mode::Linear).unwrap();
            let steps = n - 1;
            let dt = 1.0 / steps as f64;
            let mut cur = s.clone();
            for _ in 0..steps {
                cur = step(&cur, dt, &g, &p, &cfg).unwrap();
            }
            // reversing u flips the sign of dR/dt; R itself is kept
            cur.u.iter_mut().for_each(|v| *v = -*v);
            for _ in 0..steps {
                cur = step(&cur, dt, &g, &p, &cfg).unwrap();
            }
            let worst = cur.q.iter().zip(&s.q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            defects.push(worst);
        }
        // the central scheme is reversible up to the RK4 truncation error
        assert!(defects.iter().all(|&d| d < 1e-10), "{defects:?}");
    }
}

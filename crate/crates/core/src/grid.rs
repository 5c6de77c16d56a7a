//! Lagrangian mass-coordinate grid, state containers and initial data.
//!
//! Nodes are uniform in `xi = (1 + 3x)^(1/3)`, the equilibrium Eulerian radius of
//! the mass shell `x`; node 0 sits on the bubble surface.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{check_compatibility, FluidParams, Mode};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub xi: Vec<f64>,
    pub x: Vec<f64>,
    dxi: f64,
}

impl Grid {
    pub fn new(xi_max: f64, n: usize) -> Result<Self> {
        if !xi_max.is_finite() || xi_max <= 1.0 {
            return Err(Error::Grid(format!("xi_max = {xi_max} must exceed 1")));
        }
        if n < 2 {
            return Err(Error::Grid(format!("node count {n} must be at least 2")));
        }
        let dxi = (xi_max - 1.0) / (n - 1) as f64;
        let xi: Vec<f64> = (0..n)
            .map(|i| if i == n - 1 { xi_max } else { 1.0 + i as f64 * dxi })
            .collect();
        let x = xi.iter().map(|&s| (s * s * s - 1.0) / 3.0).collect();
        Ok(Grid { xi, x, dxi })
    }

    /// Grid with `cells` uniform cells (`cells + 1` nodes).
    pub fn with_cells(xi_max: f64, cells: usize) -> Result<Self> {
        Self::new(xi_max, cells + 1)
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn dxi(&self) -> f64 {
        self.dxi
    }

    pub fn xi_max(&self) -> f64 {
        *self.xi.last().unwrap()
    }

    /// `d_x v` at the bubble surface from the second-order one-sided stencil.
    pub fn one_sided_left(&self, v: [f64; 3]) -> f64 {
        let xi0 = self.xi[0];
        (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * self.dxi * xi0 * xi0)
    }

    /// `d_xi` of `f` at every node: central inside, second-order one-sided at both ends.
    pub fn d_xi(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let h2 = 2.0 * self.dxi;
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            d[i] = (f[i + 1] - f[i - 1]) / h2;
        }
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / h2;
        d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / h2;
        d
    }

    /// Second `xi` derivative, with second-order one-sided four-point stencils at the ends.
    pub fn d2_xi(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let h2 = self.dxi * self.dxi;
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
        }
        d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
        d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
        d
    }

    /// `int f dx` as the trapezoid rule in `xi` with weight `xi^2` (`dx = xi^2 dxi`).
    pub fn integrate_dx(&self, f: &[f64]) -> f64 {
        let n = self.len();
        let mut sum: f64 = f[1..n - 1].iter().zip(&self.xi[1..n - 1]).map(|(v, x)| v * x * x).sum();
        sum += 0.5 * (f[0] * self.xi[0] * self.xi[0] + f[n - 1] * self.xi[n - 1] * self.xi[n - 1]);
        sum * self.dxi
    }

    /// Quadrature weights of [`Grid::integrate_dx`].
    pub fn dx_weights(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let w = self.xi[i] * self.xi[i] * self.dxi;
                if i == 0 || i == n - 1 {
                    0.5 * w
                } else {
                    w
                }
            })
            .collect()
    }

    /// Running integral `int_0^{x_i} f dx` by the trapezoid rule on the `x` nodes.
    pub fn cumulative_x(&self, f: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(f.len());
        let mut acc = 0.0;
        out.push(0.0);
        for i in 1..f.len() {
            acc += 0.5 * (f[i] + f[i - 1]) * (self.x[i] - self.x[i - 1]);
            out.push(acc);
        }
        out
    }

    /// Running integral `int_{x_i}^{x_max} f dx` by the trapezoid rule on the `x` nodes.
    pub fn cumulative_x_from_right(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let mut out = vec![0.0; n];
        let mut acc = 0.0;
        for i in (0..n - 1).rev() {
            acc += 0.5 * (f[i] + f[i + 1]) * (self.x[i + 1] - self.x[i]);
            out[i] = acc;
        }
        out
    }

    /// Linear interpolation of a nodal field at `xi`; zero outside `[1, xi_max]`.
    pub fn interpolate(&self, f: &[f64], xi: f64) -> f64 {
        let n = self.len();
        if !(xi >= self.xi[0] && xi <= self.xi[n - 1]) {
            return 0.0;
        }
        let s = (xi - self.xi[0]) / self.dxi;
        let i = (s.floor() as usize).min(n - 2);
        let theta = s - i as f64;
        f[i] * (1.0 - theta) + f[i + 1] * theta
    }
}

/// The complete dynamical state.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub u: Vec<f64>,
    pub q: Vec<f64>,
    pub radius: f64,
    /// Velocity potential at the outer node, advanced with `d_t phi` there; zero until a
    /// disturbance reaches it.
    pub phi_outer: f64,
    pub t: f64,
}

impl SimState {
    pub fn equilibrium(grid: &Grid) -> Self {
        SimState {
            u: vec![0.0; grid.len()],
            q: vec![0.0; grid.len()],
            radius: 1.0,
            phi_outer: 0.0,
            t: 0.0,
        }
    }
}

/// Eulerian radius and sound speed at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusField {
    pub r: Vec<f64>,
    pub c: Vec<f64>,
}

/// `r = (R^3 + 3x + 3 int_0^x q dy)^(1/3)` with the trapezoid rule in `x`.
pub fn radius_field(state: &SimState, grid: &Grid, params: &FluidParams) -> Result<RadiusField> {
    let n = grid.len();
    let mut r = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    // written as xi * cbrt(1 + (R^3 - 1 + 3Q)/xi^3) so that q = 0, R = 1 gives r = xi exactly
    let r3m1 = (3.0 * state.radius.ln()).exp_m1();
    let mut acc = 0.0;
    for i in 0..n {
        let qi = state.q[i];
        if !(qi > -1.0) {
            return Err(Error::Positivity {
                node: i,
                reason: "q <= -1 (vacuum)",
            });
        }
        if i > 0 {
            acc += 0.5 * (qi + state.q[i - 1]) * (grid.x[i] - grid.x[i - 1]);
        }
        let xi = grid.xi[i];
        let arg = 1.0 + (r3m1 + 3.0 * acc) / (xi * xi * xi);
        if !(arg > 0.0) {
            return Err(Error::Positivity {
                node: i,
                reason: "cube-root argument of the radius is not positive",
            });
        }
        r.push(xi * arg.cbrt());
        c.push(params.sound_speed_unchecked(qi));
    }
    Ok(RadiusField { r, c })
}

/// Descriptor of the initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Equilibrium,
    /// `u = 0`, `q = amplitude * exp(-(xi - center)^2 / width^2)` cut off at `|xi - center| > 4 width`.
    QBump {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// Outgoing wave whose backward pressure wave vanishes in the linear approximation.
    OutgoingPulse {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    File(std::path::PathBuf),
}

const CUTOFF_WIDTHS: f64 = 4.0;
const FILE_CC_TOLERANCE: f64 = 1e-8;

fn gaussian(xi: f64, center: f64, width: f64) -> f64 {
    let s = (xi - center) / width;
    if s.abs() > CUTOFF_WIDTHS {
        0.0
    } else {
        (-s * s).exp()
    }
}

pub fn make_initial_data(spec: &InitSpec, grid: &Grid, params: &FluidParams, mode: Mode) -> Result<SimState> {
    match spec {
        InitSpec::Equilibrium => Ok(SimState::equilibrium(grid)),
        InitSpec::QBump {
            amplitude,
            center,
            width,
        } => {
            check_shape(*amplitude, *center, *width)?;
            let edge = center - CUTOFF_WIDTHS * width;
            if edge <= 1.0 {
                return Err(Error::Support(edge));
            }
            let q = grid
                .xi
                .iter()
                .map(|&s| amplitude * gaussian(s, *center, *width))
                .collect();
            Ok(SimState {
                u: vec![0.0; grid.len()],
                q,
                radius: 1.0,
                phi_outer: 0.0,
                t: 0.0,
            })
        }
        InitSpec::OutgoingPulse {
            amplitude,
            center,
            width,
        } => {
            check_shape(*amplitude, *center, *width)?;
            outgoing_pulse(*amplitude, *center, *width, grid, params, mode)
        }
        InitSpec::File(path) => {
            let state = read_init_csv(path, grid)?;
            let rep = check_compatibility(&state.u, &state.q, state.radius, grid, params, mode)?;
            if rep.max() > FILE_CC_TOLERANCE {
                return Err(Error::Compatibility {
                    cc0: rep.cc0_residual,
                    cc1: rep.cc1_residual,
                    tol: FILE_CC_TOLERANCE,
                });
            }
            Ok(state)
        }
    }
}

fn check_shape(amplitude: f64, center: f64, width: f64) -> Result<()> {
    if !amplitude.is_finite() {
        return Err(Error::Parameter {
            name: "init.amplitude",
            value: amplitude,
            reason: "must be finite",
        });
    }
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::Parameter {
            name: "init.width",
            value: width,
            reason: "must be > 0",
        });
    }
    if !(center >= 1.0) || !center.is_finite() {
        return Err(Error::Parameter {
            name: "init.center",
            value: center,
            reason: "must be >= 1",
        });
    }
    Ok(())
}

/// Build data from the potential profile `psi = G(xi)` of a purely outgoing linear
/// wave: `psi_t = -c0 psi_xi`, so `w_B = psi_t + c0 psi_xi = 0`.
///
/// `G = A (1 + beta (xi - 1)) exp(-(xi - center)^2 / width^2)`; when the profile reaches
/// the bubble, `beta` makes the first-order compatibility condition hold. Then
/// `phi = G / xi`, `u = phi_xi`, `q = -G' / (c0 xi)`, and `A` scales `max |q|` to `amplitude`.
fn outgoing_pulse(
    amplitude: f64,
    center: f64,
    width: f64,
    grid: &Grid,
    params: &FluidParams,
    mode: Mode,
) -> Result<SimState> {
    let c0 = params.c0();
    let fp1 = params.f_prime_at_one();
    let d = center - 1.0;
    let attached = center - CUTOFF_WIDTHS * width <= 1.0;
    let w2 = width * width;
    let beta = if attached {
        let s = 2.0 * d / w2;
        let m = 4.0 * d * d / (w2 * w2) - 2.0 / w2;
        let denom = fp1 - 2.0 * s;
        if denom.abs() < 1e-8 {
            return Err(Error::Parameter {
                name: "init.center",
                value: center,
                reason: "pulse shape cannot satisfy the first-order compatibility condition",
            });
        }
        (m - fp1 * (s - 1.0)) / denom
    } else {
        0.0
    };

    // G, G' for unit A
    let profile = |xi: f64| -> (f64, f64) {
        let y = xi - 1.0;
        let e = gaussian(xi, center, width);
        let poly = 1.0 + beta * y;
        let de = -2.0 * (xi - center) / w2 * e;
        (poly * e, beta * e + poly * de)
    };

    let n = grid.len();
    let mut q = vec![0.0; n];
    let mut u = vec![0.0; n];
    for i in 0..n {
        let xi = grid.xi[i];
        let (g, dg) = profile(xi);
        q[i] = -dg / (c0 * xi);
        u[i] = dg / xi - g / (xi * xi);
    }
    let peak = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::Parameter {
            name: "init.width",
            value: width,
            reason: "pulse is not resolved by the grid",
        });
    }
    let scale = amplitude / peak;
    q.iter_mut().for_each(|v| *v *= scale);
    u.iter_mut().for_each(|v| *v *= scale);

    let mut state = SimState {
        u,
        q,
        radius: 1.0,
        phi_outer: 0.0,
        t: 0.0,
    };
    match mode {
        Mode::Nonlinear => {
            state.radius = params.f_inverse(state.q[0])?;
            state.q[0] = params.f(state.radius)?;
        }
        Mode::Linear => {
            state.radius = 1.0 + state.q[0] / fp1;
            state.q[0] = fp1 * (state.radius - 1.0);
        }
    }
    enforce_discrete_cc1(&mut state, grid, params, mode)?;
    Ok(state)
}

/// Decay rate of the boundary layer that carries the discrete compatibility correction.
const CC1_LAYER_RATE: f64 = 4.0;

/// Add `delta * exp(-k (xi - 1))` to `u` so the discrete first-order compatibility
/// condition holds. A correction at the single node `u[0]` would leave a grid-scale kink
/// that excites a non-propagating sawtooth mode at the surface. The condition is affine
/// in `delta` because `r` depends only on `q` and `R`.
fn enforce_discrete_cc1(state: &mut SimState, grid: &Grid, params: &FluidParams, mode: Mode) -> Result<()> {
    let (r, slope) = match mode {
        Mode::Nonlinear => (radius_field(state, grid, params)?.r, params.f_prime(state.radius)?),
        Mode::Linear => (grid.xi.clone(), params.f_prime_at_one()),
    };
    let scale = 1.0 / (2.0 * grid.dxi() * grid.xi[0] * grid.xi[0]);
    // residual of slope*u0 = scale*(-3 r0^2 u0 + 4 r1^2 u1 - r2^2 u2)
    let residual = |v: [f64; 3]| {
        slope * v[0] - scale * (-3.0 * r[0] * r[0] * v[0] + 4.0 * r[1] * r[1] * v[1] - r[2] * r[2] * v[2])
    };
    let layer: Vec<f64> = grid
        .xi
        .iter()
        .map(|&x| (-CC1_LAYER_RATE * (x - grid.xi[0])).exp())
        .collect();
    let delta = -residual([state.u[0], state.u[1], state.u[2]]) / residual([layer[0], layer[1], layer[2]]);
    for (u, l) in state.u.iter_mut().zip(&layer) {
        *u += delta * l;
    }
    Ok(())
}

/// Strict reader for `# R=<value>` followed by a `xi,u,q` table on the given grid.
pub fn read_init_csv(path: &Path, grid: &Grid) -> Result<SimState> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InitFile(format!("{}: {e}", path.display())))?;
    parse_init_csv(&text, grid)
}

pub fn parse_init_csv(text: &str, grid: &Grid) -> Result<SimState> {
    let mut lines = text.lines().enumerate();
    let bad = |line: usize, msg: &str| Error::InitFile(format!("line {}: {msg}", line + 1));

    let (ln, meta) = lines.next().ok_or_else(|| Error::InitFile("empty file".into()))?;
    let radius: f64 = meta
        .trim()
        .strip_prefix("# R=")
        .ok_or_else(|| bad(ln, "expected `# R=<value>`"))?
        .trim()
        .parse()
        .map_err(|_| bad(ln, "unparsable radius"))?;
    if !radius.is_finite() {
        return Err(bad(ln, "radius must be finite"));
    }
    let (ln, header) = lines.next().ok_or_else(|| Error::InitFile("missing header".into()))?;
    if header.trim() != "xi,u,q" {
        return Err(bad(ln, "header must be `xi,u,q`"));
    }

    let mut u = Vec::with_capacity(grid.len());
    let mut q = Vec::with_capacity(grid.len());
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(bad(ln, "expected three columns"));
        }
        let mut vals = [0.0f64; 3];
        for (v, s) in vals.iter_mut().zip(&fields) {
            *v = s.parse().map_err(|_| bad(ln, "unparsable number"))?;
            if !v.is_finite() {
                return Err(bad(ln, "NaN or infinite value"));
            }
        }
        let i = u.len();
        if i >= grid.len() {
            return Err(bad(ln, "more rows than grid nodes"));
        }
        if (vals[0] - grid.xi[i]).abs() > 1e-9 * grid.xi[i] {
            return Err(bad(ln, "xi does not match the grid node"));
        }
        if !(vals[2] > -1.0) {
            return Err(bad(ln, "q must exceed -1"));
        }
        u.push(vals[1]);
        q.push(vals[2]);
    }
    if u.len() != grid.len() {
        return Err(Error::InitFile(format!(
            "{} rows for a grid of {} nodes",
            u.len(),
            grid.len()
        )));
    }
    Ok(SimState {
        u,
        q,
        radius,
        phi_outer: 0.0,
        t: 0.0,
    })
}

/// Smallness measures of the data: `epsilon` and `epsilon_tilde`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smallness {
    pub epsilon: f64,
    pub epsilon_tilde: f64,
}

pub fn smallness_norms(state: &SimState, grid: &Grid, params: &FluidParams) -> Result<Smallness> {
    let c2 = params.c0() * params.c0();
    let xi = &grid.xi;
    let l2sq = |f: &[f64]| grid.integrate_dx(&f.iter().map(|v| v * v).collect::<Vec<_>>());

    let dq = grid.d_xi(&state.q);
    let d2q = grid.d2_xi(&state.q);
    let du = grid.d_xi(&state.u);
    let d2u = grid.d2_xi(&state.u);
    let n = grid.len();

    let l1q: Vec<f64> = dq.iter().map(|d| c2 * d).collect();
    let l2q: Vec<f64> = (0..n).map(|i| c2 * (d2q[i] + 2.0 / xi[i] * dq[i])).collect();
    let l1u: Vec<f64> = (0..n).map(|i| du[i] + 2.0 / xi[i] * state.u[i]).collect();
    let l2u: Vec<f64> = (0..n)
        .map(|i| c2 * (d2u[i] + 2.0 / xi[i] * du[i] - 2.0 / (xi[i] * xi[i]) * state.u[i]))
        .collect();

    let fr = params.f(state.radius)?;
    let eps2 = l2sq(&state.q) + l2sq(&l1q) + l2sq(&l2q) + l2sq(&state.u) + l2sq(&l1u) + l2sq(&l2u) + fr * fr;

    let xi2u: Vec<f64> = (0..n).map(|i| xi[i] * xi[i] * state.u[i]).collect();
    let xi2q: Vec<f64> = (0..n).map(|i| xi[i] * xi[i] * state.q[i]).collect();
    Ok(Smallness {
        epsilon: eps2.sqrt(),
        epsilon_tilde: l2sq(&xi2u).sqrt() + l2sq(&xi2q).sqrt(),
    })
}

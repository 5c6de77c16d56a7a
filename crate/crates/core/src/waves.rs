//! Velocity potential, pressure waves, characteristics and the linear response.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{radius_field, Grid, SimState};
use crate::model::{Eigenpair, FluidParams, Mode};
use crate::solver::Trajectory;

/// Potential fields and pressure waves at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub phi: Vec<f64>,
    pub dtphi: Vec<f64>,
    pub psi: Vec<f64>,
    pub dtpsi: Vec<f64>,
    /// Incoming wave `d_t psi + c r^2 d_x psi`.
    pub w_b: Vec<f64>,
    /// Outgoing wave `d_t psi - c r^2 d_x psi`.
    pub w_f: Vec<f64>,
    pub r: Vec<f64>,
    pub c: Vec<f64>,
    /// `r^2 d_x psi`, in closed form.
    pub flux: Vec<f64>,
}

/// Reconstruct `phi`, `psi = r phi` and the pressure waves. `phi` is integrated inward
/// from its tracked value at `xi_max`, which stays zero until a disturbance gets there.
pub fn reconstruct_waves(state: &SimState, grid: &Grid, params: &FluidParams, mode: Mode) -> Result<WaveField> {
    let n = grid.len();
    let (r, c) = match mode {
        Mode::Nonlinear => {
            let f = radius_field(state, grid, params)?;
            (f.r, f.c)
        }
        Mode::Linear => (grid.xi.clone(), vec![params.c0(); n]),
    };
    let c2 = params.c0() * params.c0();
    let integrand: Vec<f64> = match mode {
        Mode::Nonlinear => (0..n)
            .map(|i| state.u[i] * (1.0 + state.q[i]) / (r[i] * r[i]))
            .collect(),
        Mode::Linear => (0..n).map(|i| state.u[i] / (r[i] * r[i])).collect(),
    };
    let phi: Vec<f64> = grid
        .cumulative_x_from_right(&integrand)
        .into_iter()
        .map(|v| state.phi_outer - v)
        .collect();

    let mut dtphi = Vec::with_capacity(n);
    let mut psi = Vec::with_capacity(n);
    let mut dtpsi = Vec::with_capacity(n);
    let mut flux = Vec::with_capacity(n);
    let mut w_b = Vec::with_capacity(n);
    let mut w_f = Vec::with_capacity(n);
    for i in 0..n {
        let (u, q) = (state.u[i], state.q[i]);
        let (dp, dps, fl) = match mode {
            Mode::Nonlinear => {
                let dp = params.g_unchecked(q) + 0.5 * u * u;
                (dp, r[i] * dp + u * phi[i], (1.0 + q) * (r[i] * u + phi[i]))
            }
            Mode::Linear => {
                let dp = c2 * q;
                (dp, r[i] * dp, r[i] * u + phi[i])
            }
        };
        dtphi.push(dp);
        psi.push(r[i] * phi[i]);
        dtpsi.push(dps);
        flux.push(fl);
        w_b.push(dps + c[i] * fl);
        w_f.push(dps - c[i] * fl);
        debug_assert!(
            ((w_b[i] + w_f[i]) - 2.0 * dps).abs() <= 1e-14 * (dps.abs() + c[i] * fl.abs()) + f64::MIN_POSITIVE
        );
    }
    Ok(WaveField {
        phi,
        dtphi,
        psi,
        dtpsi,
        w_b,
        w_f,
        r,
        c,
        flux,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Speed `-c r^2 / xi^2`: carries `w_B` toward the bubble.
    Backward,
    /// Speed `+c r^2 / xi^2`.
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Toward {
    Past,
    Future,
}

/// Why a traced path stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    InitialTime,
    FinalTime,
    Surface,
    Outer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharPath {
    /// `(xi, t)` with `t` increasing.
    pub points: Vec<(f64, f64)>,
    pub family: Family,
    pub exit: Exit,
}

impl CharPath {
    /// Point with the smallest `t`.
    pub fn earliest(&self) -> (f64, f64) {
        self.points[0]
    }
}

/// Integrate a characteristic through the stored speed field with Heun's method.
pub fn trace_characteristic(traj: &Trajectory, start: (f64, f64), family: Family, toward: Toward) -> Result<CharPath> {
    let hist = &traj.speed;
    let (xi_lo, xi_hi) = (traj.grid.xi[0], traj.grid.xi_max());
    let t_end = *hist.times.last().ok_or(Error::Window {
        xi: start.0,
        t: start.1,
    })?;
    let (mut xi, mut t) = start;
    let slack = 1e-12 * (1.0 + t_end);
    if !(xi >= xi_lo - slack && xi <= xi_hi + slack && t >= -slack && t <= t_end + slack) {
        return Err(Error::Window { xi, t });
    }
    let sign_x = match family {
        Family::Backward => -1.0,
        Family::Forward => 1.0,
    };
    let (sign_t, t_stop) = match toward {
        Toward::Past => (-1.0, 0.0),
        Toward::Future => (1.0, t_end),
    };
    let vmax = traj.series.cmax.max(f64::MIN_POSITIVE);
    let ds = 0.5 * hist.dxi.min(traj.grid.dxi() * 4.0) / vmax;

    let mut points = vec![(xi, t)];
    let exit = loop {
        let remaining = (t_stop - t) * sign_t;
        if remaining <= slack {
            break if sign_t < 0.0 {
                Exit::InitialTime
            } else {
                Exit::FinalTime
            };
        }
        let h = ds.min(remaining) * sign_t;
        let k1 = sign_x * hist.speed_at(xi, t)?;
        let t_next = if remaining <= ds { t_stop } else { t + h };
        let k2 = sign_x * hist.speed_at(xi + h * k1, t_next)?;
        let xi_next = xi + 0.5 * h * (k1 + k2);
        let crossed = if xi_next < xi_lo {
            Some((xi_lo, Exit::Surface))
        } else if xi_next > xi_hi {
            Some((xi_hi, Exit::Outer))
        } else {
            None
        };
        if let Some((edge, exit)) = crossed {
            let theta = (edge - xi) / (xi_next - xi);
            if theta > 0.0 {
                points.push((edge, t + theta * (t_next - t)));
            }
            break exit;
        }
        xi = xi_next;
        t = t_next;
        points.push((xi, t));
    };
    if sign_t < 0.0 {
        points.reverse();
    }
    Ok(CharPath { points, family, exit })
}

/// Foot at `t = 0` of the backward characteristic through `(1, t)`, or `None` when it
/// leaves through the outer boundary first.
pub fn xi0_at(traj: &Trajectory, t: f64) -> Result<Option<f64>> {
    if t <= 0.0 {
        return Ok(Some(traj.grid.xi[0]));
    }
    let path = trace_characteristic(traj, (traj.grid.xi[0], t), Family::Backward, Toward::Past)?;
    Ok(match path.exit {
        Exit::InitialTime => Some(path.earliest().0),
        _ => None,
    })
}

/// [`xi0_at`] for every requested time; a foot outside the stored domain is an error.
pub fn xi0_map(traj: &Trajectory, t_values: &[f64]) -> Result<Vec<f64>> {
    t_values
        .iter()
        .map(|&t| {
            xi0_at(traj, t)?.ok_or(Error::Window {
                xi: traj.grid.xi_max(),
                t: 0.0,
            })
        })
        .collect()
}

/// How `xi0(s)` enters the convolution of the linear response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Xi0Mode {
    #[default]
    Traced,
    /// `1 + c0 s`.
    Linear,
}

impl std::str::FromStr for Xi0Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "traced" => Ok(Xi0Mode::Traced),
            "linear" => Ok(Xi0Mode::Linear),
            other => Err(Error::Config(format!("unknown calr.xi0 `{other}`"))),
        }
    }
}

impl std::fmt::Display for Xi0Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Xi0Mode::Traced => "traced",
            Xi0Mode::Linear => "linear",
        })
    }
}

/// Number of traced characteristics; intermediate times are interpolated.
const XI0_SAMPLES: usize = 1024;

/// `xi0` at every series time. Feet beyond the domain are `+inf`.
pub fn xi0_on_series(traj: &Trajectory, how: Xi0Mode) -> Result<Vec<f64>> {
    let ts = &traj.series.t;
    match how {
        Xi0Mode::Linear => {
            let c0 = traj.params.c0();
            Ok(ts.iter().map(|&t| traj.grid.xi[0] + c0 * t).collect())
        }
        Xi0Mode::Traced => {
            let n = ts.len();
            let picks: Vec<usize> = if n <= XI0_SAMPLES {
                (0..n).collect()
            } else {
                let mut v: Vec<usize> = (0..XI0_SAMPLES)
                    .map(|k| ((k as f64) * (n - 1) as f64 / (XI0_SAMPLES - 1) as f64).round() as usize)
                    .collect();
                v.dedup();
                v
            };
            let mut knots_t = Vec::with_capacity(picks.len());
            let mut knots_x = Vec::with_capacity(picks.len());
            for &i in &picks {
                knots_t.push(ts[i]);
                knots_x.push(xi0_at(traj, ts[i])?.unwrap_or(f64::INFINITY));
            }
            let mut out = Vec::with_capacity(n);
            let mut k = 0;
            for &t in ts {
                while k + 2 < knots_t.len() && knots_t[k + 1] < t {
                    k += 1;
                }
                if knots_t.len() == 1 {
                    out.push(knots_x[0]);
                    continue;
                }
                let (ta, tb) = (knots_t[k], knots_t[k + 1]);
                let (xa, xb) = (knots_x[k], knots_x[k + 1]);
                if !xb.is_finite() || !xa.is_finite() {
                    out.push(if t <= ta && xa.is_finite() { xa } else { f64::INFINITY });
                    continue;
                }
                let theta = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
                out.push(xa * (1.0 - theta) + xb * theta);
            }
            Ok(out)
        }
    }
}

/// Linear response of the bubble to its initial state and the incoming wave.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearResponse {
    pub eig: Eigenpair,
    pub y0: [Complex64; 2],
    /// Response at the series times.
    pub samples: Vec<f64>,
}

/// `Y = (d_t psi - L2 psi, d_t psi - L1 psi)` at the surface.
pub fn y_from_boundary(eig: &Eigenpair, dtpsi: f64, psi: f64) -> [Complex64; 2] {
    [dtpsi - eig.lambda2 * psi, dtpsi - eig.lambda1 * psi]
}

/// Inverse of [`y_from_boundary`]: `(d_t psi, psi)`.
pub fn boundary_from_y(eig: &Eigenpair, y: [Complex64; 2]) -> (Complex64, Complex64) {
    let (l1, l2) = (eig.lambda1, eig.lambda2);
    let d = l1 - l2;
    ((l1 * y[0] - l2 * y[1]) / d, (y[0] - y[1]) / d)
}

/// Evaluate the response on the series times given the initial surface values, the
/// incoming-wave samples `w(s) = w_B(xi0(s), 0)` and the eigenpair.
pub fn response_series(eig: &Eigenpair, y0: [Complex64; 2], gain: f64, t: &[f64], w: &[f64]) -> Vec<f64> {
    let (l1, l2) = (eig.lambda1, eig.lambda2);
    let a1 = l1 / (l1 - l2);
    let a2 = l2 / (l1 - l2);
    let mut j1 = Complex64::new(0.0, 0.0);
    let mut j2 = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(t.len());
    for i in 0..t.len() {
        if i > 0 {
            let h = t[i] - t[i - 1];
            let (e1, e2) = ((l1 * h).exp(), (l2 * h).exp());
            j1 = e1 * (j1 + 0.5 * h * w[i - 1]) + 0.5 * h * w[i];
            j2 = e2 * (j2 + 0.5 * h * w[i - 1]) + 0.5 * h * w[i];
        }
        let free = a1 * (l1 * t[i]).exp() * y0[0] - a2 * (l2 * t[i]).exp() * y0[1];
        out.push((free + gain * (a1 * j1 - a2 * j2)).re);
    }
    out
}

/// Linear response on the series times of `traj`.
pub fn linear_response(traj: &Trajectory, how: Xi0Mode) -> Result<LinearResponse> {
    let p = &traj.params;
    let eig = p.eigenvalues()?;
    let init = reconstruct_waves(traj.initial(), &traj.grid, p, traj.config.mode)?;
    let y0 = y_from_boundary(&eig, init.dtpsi[0], init.psi[0]);
    let xi0 = xi0_on_series(traj, how)?;
    let w: Vec<f64> = xi0.iter().map(|&x| traj.grid.interpolate(&init.w_b, x)).collect();
    let gain = p.c0() * p.f_prime_at_one();
    let samples = response_series(&eig, y0, gain, &traj.series.t, &w);
    Ok(LinearResponse { eig, y0, samples })
}

/// Linear interpolation of a series at `t`.
fn series_at(ts: &[f64], v: &[f64], t: f64) -> Result<f64> {
    let n = ts.len();
    if n == 0 || !(t >= ts[0] && t <= ts[n - 1]) {
        return Err(Error::Window { xi: 1.0, t });
    }
    if n == 1 {
        return Ok(v[0]);
    }
    let k = ts.partition_point(|&s| s <= t).clamp(1, n - 1) - 1;
    let theta = (t - ts[k]) / (ts[k + 1] - ts[k]);
    Ok(v[k] * (1.0 - theta) + v[k + 1] * theta)
}

/// `Y(t)` from the stored surface series.
pub fn y_vector(traj: &Trajectory, t: f64) -> Result<[Complex64; 2]> {
    let eig = traj.params.eigenvalues()?;
    let s = &traj.series;
    Ok(y_from_boundary(
        &eig,
        series_at(&s.t, &s.dtpsi0, t)?,
        series_at(&s.t, &s.psi0, t)?,
    ))
}

/// Coefficients `(b1, b0, a)` of the surface equation for `psi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeCoefficients {
    pub b1: f64,
    pub b0: f64,
    pub a: f64,
}

pub fn ode_coefficients(
    params: &FluidParams,
    mode: Mode,
    radius: f64,
    u0: f64,
    q0: f64,
    dtu0: f64,
) -> Result<OdeCoefficients> {
    match mode {
        Mode::Linear => {
            let (fp, c0) = (params.ftilde_prime_at_one(), params.c0());
            Ok(OdeCoefficients {
                b1: -fp / c0,
                b0: -fp,
                a: fp / c0,
            })
        }
        Mode::Nonlinear => {
            let fp = params.ftilde_prime(radius)?;
            let c = params.sound_speed(q0)?;
            let rho = 1.0 / (1.0 + q0);
            Ok(OdeCoefficients {
                b1: -(fp / c + 2.0 * u0 / radius - rho * dtu0 / c),
                // no d_t u term: with it the identity leaves d_t u * phi at the surface
                b0: -(fp / (rho * radius) - 2.0 * u0 * u0 / (radius * radius)),
                a: fp / c - rho * dtu0 / c,
            })
        }
    }
}

/// Residual of the surface equation at the series sample nearest to `t`.
pub fn boundary_ode_residual(traj: &Trajectory, t: f64) -> Result<f64> {
    let s = &traj.series;
    let n = s.t.len();
    if n < 3 {
        return Err(Error::Cadence { t });
    }
    let k = s.t.partition_point(|&v| v < t);
    let i = if k == 0 {
        0
    } else if k >= n || (t - s.t[k - 1]) < (s.t[k] - t) {
        k.min(n) - 1
    } else {
        k
    };
    if i == 0 || i == n - 1 {
        return Err(Error::Cadence { t });
    }
    let mut steps: Vec<f64> = s.t.windows(2).map(|w| w[1] - w[0]).collect();
    let mid = steps.len() / 2;
    let median = *steps.select_nth_unstable_by(mid, f64::total_cmp).1;
    let (h1, h2) = (s.t[i] - s.t[i - 1], s.t[i + 1] - s.t[i]);
    if h1.max(h2) > 4.0 * median {
        return Err(Error::Cadence { t });
    }
    // three-point derivative, second order on uneven spacing
    let d = &s.dtpsi0;
    let dtt = -h2 / (h1 * (h1 + h2)) * d[i - 1] + (h2 - h1) / (h1 * h2) * d[i] + h1 / (h2 * (h1 + h2)) * d[i + 1];
    let co = ode_coefficients(&traj.params, traj.config.mode, s.r[i], s.u0[i], s.q0[i], s.dtu0[i])?;
    Ok(dtt + co.b1 * s.dtpsi0[i] + co.b0 * s.psi0[i] + co.a * s.w_b0[i])
}

/// `max_t xi0(t) |w_B(1, t)/sqrt(c) - w_B(xi0(t), 0)/sqrt(c)|` over the given times; feet
/// outside the domain are skipped.
pub fn transmission_defect(traj: &Trajectory, t_values: &[f64]) -> Result<f64> {
    let init = reconstruct_waves(traj.initial(), &traj.grid, &traj.params, traj.config.mode)?;
    let s = &traj.series;
    let mut worst = 0.0f64;
    for &t in t_values {
        let xi0 = match xi0_at(traj, t)? {
            Some(x) => x,
            None => continue,
        };
        let here = series_at(&s.t, &s.w_b0, t)? / series_at(&s.t, &s.c_b, t)?.sqrt();
        let c_foot = traj.grid.interpolate(&init.c, xi0);
        let there = traj.grid.interpolate(&init.w_b, xi0) / c_foot.sqrt();
        worst = worst.max(xi0 * (here - there).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_initial_data, InitSpec};
    use crate::solver::{run, SolverConfig};

    #[test]
    fn equilibrium_fields_vanish() {
        let g = Grid::new(8.0, 65).unwrap();
        let p = FluidParams::default();
        for mode in [Mode::Nonlinear, Mode::Linear] {
            let w = reconstruct_waves(&SimState::equilibrium(&g), &g, &p, mode).unwrap();
            for f in [&w.phi, &w.dtphi, &w.psi, &w.dtpsi, &w.w_b, &w.w_f] {
                assert!(f.iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn still_bump_has_equal_waves() {
        let g = Grid::new(12.0, 221).unwrap();
        let p = FluidParams::default();
        let spec = InitSpec::QBump {
            amplitude: 1e-2,
            center: 6.0,
            width: 1.0,
        };
        let s = make_initial_data(&spec, &g, &p, Mode::Nonlinear).unwrap();
        let w = reconstruct_waves(&s, &g, &p, Mode::Nonlinear).unwrap();
        for i in 0..g.len() {
            let expect = w.r[i] * p.g(s.q[i]).unwrap();
            assert_eq!(w.phi[i], 0.0);
            assert!((w.w_b[i] - expect).abs() <= 1e-15 * (1.0 + expect.abs()));
            assert!((w.w_f[i] - expect).abs() <= 1e-15 * (1.0 + expect.abs()));
            assert_eq!(w.w_b[i] + w.w_f[i], 2.0 * w.dtpsi[i]);
        }
    }

    #[test]
    fn closed_form_flux_matches_differenced_psi() {
        let p = FluidParams::default();
        let mut errs = Vec::new();
        for n in [401, 801] {
            let g = Grid::new(9.0, n).unwrap();
            let mut s = SimState::equilibrium(&g);
            for i in 0..n {
                let z = g.xi[i] - 5.0;
                s.u[i] = 1e-2 * (-z * z).exp();
                s.q[i] = 5e-3 * (-(z - 0.3) * (z - 0.3)).exp();
            }
            let w = reconstruct_waves(&s, &g, &p, Mode::Nonlinear).unwrap();
            let dpsi = g.d_xi(&w.psi);
            let worst = (1..n - 1)
                .map(|i| {
                    // r^2 d_x = r^2 xi^-2 d_xi
                    let fd = w.r[i] * w.r[i] / (g.xi[i] * g.xi[i]) * dpsi[i];
                    (fd - w.flux[i]).abs()
                })
                .fold(0.0, f64::max);
            errs.push(worst);
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.5 && ratio < 4.5, "{errs:?}");
    }

    #[test]
    fn y_round_trip_and_closed_form() {
        let p = FluidParams::default();
        let eig = p.eigenvalues().unwrap();
        for (a, b) in [(0.3, -1.2), (1e-4, 7.0), (-2.5, 0.0)] {
            let y = y_from_boundary(&eig, a, b);
            let (dt, ps) = boundary_from_y(&eig, y);
            assert!((dt.re - a).abs() <= 1e-12 && dt.im.abs() <= 1e-12);
            assert!((ps.re - b).abs() <= 1e-12 && ps.im.abs() <= 1e-12);
            let closed = (eig.lambda1 * y[0] - eig.lambda2 * y[1]) / (eig.lambda1 - eig.lambda2);
            assert!((closed.re - a).abs() <= 1e-12);
        }
        let z = y_from_boundary(&eig, 0.0, 0.0);
        assert_eq!(z[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn response_starts_at_dtpsi_and_decays() {
        let p = FluidParams::default();
        let eig = p.eigenvalues().unwrap();
        let y0 = y_from_boundary(&eig, 0.4, -0.1);
        let t: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.005).collect();
        let zero = vec![0.0; t.len()];
        let r = response_series(&eig, y0, 3.5, &t, &zero);
        assert!((r[0] - 0.4).abs() <= 1e-15);
        let rate = eig.slowest_rate();
        for (ti, ri) in t.iter().zip(&r) {
            assert!(ri.abs() <= 2.0 * (rate * ti).exp());
        }
        let r0 = response_series(&eig, [Complex64::new(0.0, 0.0); 2], 3.5, &t, &zero);
        assert!(r0.iter().all(|&v| v == 0.0));
    }

    /// Independent fine RK4 solve of `psi'' + c0 f'(1) psi' + c0^2 f'(1) psi = c0 f'(1) w(t)`.
    fn ode_oracle(p: &FluidParams, w: impl Fn(f64) -> f64, t_end: f64, steps: usize) -> Vec<(f64, f64)> {
        let k = p.c0() * p.f_prime_at_one();
        let k2 = p.c0() * p.c0() * p.f_prime_at_one();
        let rhs = |t: f64, y: [f64; 2]| [y[1], -k * y[1] - k2 * y[0] + k * w(t)];
        let h = t_end / steps as f64;
        let mut y = [0.0, 0.0];
        let mut out = vec![(0.0, 0.0)];
        for i in 0..steps {
            let t = i as f64 * h;
            let a = rhs(t, y);
            let b = rhs(t + 0.5 * h, [y[0] + 0.5 * h * a[0], y[1] + 0.5 * h * a[1]]);
            let c = rhs(t + 0.5 * h, [y[0] + 0.5 * h * b[0], y[1] + 0.5 * h * b[1]]);
            let d = rhs(t + h, [y[0] + h * c[0], y[1] + h * c[1]]);
            for j in 0..2 {
                y[j] += h / 6.0 * (a[j] + 2.0 * b[j] + 2.0 * c[j] + d[j]);
            }
            out.push(((i + 1) as f64 * h, y[1]));
        }
        out
    }

    #[test]
    fn convolution_matches_ode_oracle() {
        let p = FluidParams::default();
        let eig = p.eigenvalues().unwrap();
        let w = |t: f64| (-(t - 2.0) * (t - 2.0)).exp() * (3.0 * t).sin();
        let steps = 40_000;
        let oracle = ode_oracle(&p, w, 8.0, steps * 4);
        let t: Vec<f64> = (0..=steps).map(|k| k as f64 * 8.0 / steps as f64).collect();
        let ws: Vec<f64> = t.iter().map(|&s| w(s)).collect();
        let r = response_series(
            &eig,
            [Complex64::new(0.0, 0.0); 2],
            p.c0() * p.f_prime_at_one(),
            &t,
            &ws,
        );
        let scale = oracle.iter().map(|v| v.1.abs()).fold(0.0, f64::max);
        let worst = t
            .iter()
            .enumerate()
            .map(|(i, _)| (r[i] - oracle[4 * i].1).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-6 * scale, "{worst} vs {scale}");
    }

    fn linear_traj(t_end: f64) -> Trajectory {
        let g = Grid::with_cells(16.0, 512).unwrap();
        let p = FluidParams::default();
        let cfg = SolverConfig {
            mode: Mode::Linear,
            t_end,
            snapshot_dt: t_end,
            ..SolverConfig::default()
        };
        let spec = InitSpec::QBump {
            amplitude: 1e-3,
            center: 8.0,
            width: 1.0,
        };
        let s = make_initial_data(&spec, &g, &p, Mode::Linear).unwrap();
        run(&s, &g, &p, &cfg).unwrap()
    }

    #[test]
    fn linear_characteristic_is_straight() {
        let traj = linear_traj(5.0);
        let c0 = traj.params.c0();
        for t in [0.5, 2.0, 5.0] {
            let path = trace_characteristic(&traj, (1.0, t), Family::Backward, Toward::Past).unwrap();
            assert_eq!(path.exit, Exit::InitialTime);
            let (xi, t0) = path.earliest();
            assert_eq!(t0, 0.0);
            assert!((xi - (1.0 + c0 * t)).abs() <= 1e-10);
            assert!(path.points.windows(2).all(|w| w[1].1 > w[0].1));
        }
        let xs = xi0_map(&traj, &[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(xs[0], 1.0);
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
        let fwd = trace_characteristic(&traj, (1.0, 0.0), Family::Forward, Toward::Future).unwrap();
        let (xi, t) = *fwd.points.last().unwrap();
        assert!((xi - (1.0 + c0 * t)).abs() <= 1e-10);
    }

    #[test]
    fn tracer_rejects_points_outside_window() {
        let traj = linear_traj(1.0);
        assert!(matches!(
            trace_characteristic(&traj, (1.0, 2.0), Family::Backward, Toward::Past),
            Err(Error::Window { .. })
        ));
        assert!(matches!(
            trace_characteristic(&traj, (0.5, 0.5), Family::Backward, Toward::Past),
            Err(Error::Window { .. })
        ));
    }

    #[test]
    fn equilibrium_response_and_residual_vanish() {
        let g = Grid::with_cells(16.0, 256).unwrap();
        let p = FluidParams::default();
        let cfg = SolverConfig {
            t_end: 2.0,
            snapshot_dt: 1.0,
            ..SolverConfig::default()
        };
        let traj = run(&SimState::equilibrium(&g), &g, &p, &cfg).unwrap();
        let lr = linear_response(&traj, Xi0Mode::Traced).unwrap();
        assert!(lr.samples.iter().all(|&v| v == 0.0));
        assert_eq!(boundary_ode_residual(&traj, 1.0).unwrap(), 0.0);
        let y = y_vector(&traj, 1.0).unwrap();
        assert_eq!(y[0].norm(), 0.0);
        assert!(matches!(boundary_ode_residual(&traj, 0.0), Err(Error::Cadence { .. })));
    }

    #[test]
    fn coefficients_at_equilibrium() {
        let p = FluidParams::default();
        let co = ode_coefficients(&p, Mode::Nonlinear, 1.0, 0.0, 0.0, 0.0).unwrap();
        let (fp, c0) = (p.ftilde_prime_at_one(), p.c0());
        assert!((co.b1 + fp / c0).abs() <= 1e-15);
        assert!((co.b0 + fp).abs() <= 1e-15);
        assert!((co.a - fp / c0).abs() <= 1e-15);
    }

    #[test]
    fn boundary_residual_converges_with_cadence() {
        let p = FluidParams::default();
        let spec = InitSpec::OutgoingPulse {
            amplitude: 1e-3,
            center: 1.0,
            width: 1.0,
        };
        let mut res = Vec::new();
        for cells in [256, 1024] {
            let g = Grid::with_cells(12.0, cells).unwrap();
            let cfg = SolverConfig {
                t_end: 3.0,
                snapshot_dt: 1.0,
                record_speed: false,
                ..SolverConfig::default()
            };
            let s = make_initial_data(&spec, &g, &p, Mode::Nonlinear).unwrap();
            let traj = run(&s, &g, &p, &cfg).unwrap();
            let worst = [1.0, 1.5, 2.0, 2.5]
                .iter()
                .map(|&t| boundary_ode_residual(&traj, t).unwrap().abs())
                .fold(0.0, f64::max);
            res.push(worst);
        }
        // fourfold refinement, second order up to noise
        assert!(res[1] < res[0] / 6.0, "{res:?}");
    }
}

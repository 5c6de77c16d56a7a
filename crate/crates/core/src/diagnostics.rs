//! Energies, the weighted space-time monitor, surface series and decay fits.

use crate::error::{Error, Result};
use crate::grid::{Grid, SimState};
use crate::model::{FluidParams, Mode};
use crate::solver::{rhs, Derivative, SolverConfig, Trajectory};
use crate::waves::{reconstruct_waves, WaveField};

/// Per-step record of surface values and monitored functionals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSeries {
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub u0: Vec<f64>,
    pub q0: Vec<f64>,
    pub psi0: Vec<f64>,
    pub dtpsi0: Vec<f64>,
    pub w_b0: Vec<f64>,
    pub w_f0: Vec<f64>,
    pub e0: Vec<f64>,
    pub e1: Vec<f64>,
    pub e_total: Vec<f64>,
    pub f_r: Vec<f64>,
    /// Filled by [`RunSeries::attach_response`]; empty until then.
    pub cal_r: Vec<f64>,
    pub err: Vec<f64>,
    pub kss0: Vec<f64>,
    /// Instantaneous weighted density whose running integral is `kss0`.
    pub kss: Vec<f64>,
    /// `d_t u` at the surface.
    pub dtu0: Vec<f64>,
    /// Sound speed at the surface.
    pub c_b: Vec<f64>,
    pub cmin: f64,
    pub cmax: f64,
}

impl RunSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Store a linear response and the pointwise error `|F_R - calR|`.
    pub fn attach_response(&mut self, cal_r: Vec<f64>) {
        self.err = self.f_r.iter().zip(&cal_r).map(|(a, b)| (a - b).abs()).collect();
        self.cal_r = cal_r;
    }

    /// Relative drift `max |E(t) - E(0)| / |E(0)|` of the conserved energy.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.e_total[0];
        let worst = self.e_total.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
        if e0 == 0.0 {
            worst
        } else {
            worst / e0.abs()
        }
    }
}

/// Builds a [`RunSeries`] one accepted step at a time.
pub struct SeriesRecorder<'a> {
    grid: &'a Grid,
    params: &'a FluidParams,
    cfg: &'a SolverConfig,
    series: RunSeries,
}

impl<'a> SeriesRecorder<'a> {
    pub fn new(grid: &'a Grid, params: &'a FluidParams, cfg: &'a SolverConfig) -> Self {
        SeriesRecorder {
            grid,
            params,
            cfg,
            series: RunSeries {
                cmin: f64::INFINITY,
                cmax: 0.0,
                ..RunSeries::default()
            },
        }
    }

    /// Append the sample for `state` and return its characteristic-speed field.
    pub fn record(&mut self, state: &SimState) -> Result<Vec<f64>> {
        let (g, p, mode) = (self.grid, self.params, self.cfg.mode);
        let waves = reconstruct_waves(state, g, p, mode)?;
        let d = rhs(state, g, p, self.cfg)?;
        let speed: Vec<f64> = (0..g.len())
            .map(|i| waves.c[i] * waves.r[i] * waves.r[i] / (g.xi[i] * g.xi[i]))
            .collect();
        let s = &mut self.series;
        for &v in &speed {
            s.cmin = s.cmin.min(v);
            s.cmax = s.cmax.max(v);
        }
        let kss = kss_density(state, &waves, g, p, mode);
        let kss0 = match (s.t.last(), s.kss.last(), s.kss0.last()) {
            (Some(&t_prev), Some(&k_prev), Some(&acc)) => acc + 0.5 * (state.t - t_prev) * (kss + k_prev),
            _ => 0.0,
        };
        s.t.push(state.t);
        s.r.push(state.radius);
        s.u0.push(state.u[0]);
        s.q0.push(state.q[0]);
        s.psi0.push(waves.psi[0]);
        s.dtpsi0.push(waves.dtpsi[0]);
        s.w_b0.push(waves.w_b[0]);
        s.w_f0.push(waves.w_f[0]);
        s.e0.push(energy_from(state, &waves.c, g, p, mode, None)?);
        s.e1.push(energy_from(state, &waves.c, g, p, mode, Some(&d))?);
        s.e_total.push(match mode {
            Mode::Nonlinear => conserved_energy(state, g, p),
            Mode::Linear => *s.e0.last().unwrap(),
        });
        s.f_r.push(match mode {
            Mode::Nonlinear => p.F(state.radius)?,
            Mode::Linear => -p.ftilde_prime_at_one() * (state.radius - 1.0),
        });
        s.kss.push(kss);
        s.kss0.push(kss0);
        s.dtu0.push(d.du[0]);
        s.c_b.push(waves.c[0]);
        Ok(speed)
    }

    pub fn finish(self) -> RunSeries {
        self.series
    }
}

fn energy_from(
    state: &SimState,
    c: &[f64],
    grid: &Grid,
    params: &FluidParams,
    mode: Mode,
    deriv: Option<&Derivative>,
) -> Result<f64> {
    let (u, q, boundary) = match deriv {
        None => (&state.u, &state.q, state.q[0]),
        Some(d) => (&d.du, &d.dq, d.dq[0]),
    };
    let density: Vec<f64> = (0..grid.len())
        .map(|i| u[i] * u[i] + c[i] * c[i] * q[i] * q[i])
        .collect();
    let fp = match mode {
        Mode::Nonlinear => params.f_prime(state.radius)?,
        Mode::Linear => params.f_prime_at_one(),
    };
    Ok(0.5 * grid.integrate_dx(&density) + 0.5 * c[0] * c[0] * boundary * boundary / fp)
}

/// `e^j` for `j` in `{0, 1}`; first time derivatives come from the semi-discrete equations.
pub fn energy_e(state: &SimState, grid: &Grid, params: &FluidParams, mode: Mode, order: u8) -> Result<f64> {
    if order > 1 {
        return Err(Error::Parameter {
            name: "order",
            value: order as f64,
            reason: "only orders 0 and 1 are available",
        });
    }
    let c: Vec<f64> = match mode {
        Mode::Nonlinear => state.q.iter().map(|&q| params.sound_speed(q)).collect::<Result<_>>()?,
        Mode::Linear => vec![params.c0(); grid.len()],
    };
    if order == 0 {
        energy_from(state, &c, grid, params, mode, None)
    } else {
        let cfg = SolverConfig {
            mode,
            ..SolverConfig::default()
        };
        let d = rhs(state, grid, params, &cfg)?;
        energy_from(state, &c, grid, params, mode, Some(&d))
    }
}

/// `int (u^2/2 + H(rho)) dx + W(R)`.
pub fn conserved_energy(state: &SimState, grid: &Grid, params: &FluidParams) -> f64 {
    let density: Vec<f64> = state
        .u
        .iter()
        .zip(&state.q)
        .map(|(&u, &q)| 0.5 * u * u + params.entropy(q))
        .collect();
    grid.integrate_dx(&density) + params.boundary_work(state.radius)
}

/// Weighted density at derivative order 0, with `c r^2 d_x phi = c u / rho`.
pub fn kss_density(state: &SimState, waves: &WaveField, grid: &Grid, _params: &FluidParams, mode: Mode) -> f64 {
    let n = grid.len();
    let grad = |i: usize| match mode {
        Mode::Nonlinear => waves.c[i] * (1.0 + state.q[i]) * state.u[i],
        Mode::Linear => waves.c[i] * state.u[i],
    };
    let interior: Vec<f64> = (0..n)
        .map(|i| {
            let xi = grid.xi[i];
            let g = grad(i);
            (waves.dtphi[i] * waves.dtphi[i] + g * g) / xi + waves.phi[i] * waves.phi[i] / (xi * xi * xi)
        })
        .collect();
    let rho_inv = match mode {
        Mode::Nonlinear => 1.0 + state.q[0],
        Mode::Linear => 1.0,
    };
    let edge = grad(0) + waves.c[0] * rho_inv * waves.phi[0] / waves.r[0];
    grid.integrate_dx(&interior) + waves.dtphi[0] * waves.dtphi[0] + edge * edge
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Values below this are treated as rounding noise by the power-law fit.
pub const ERROR_FLOOR: f64 = 1e-14;
pub const MIN_FIT_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerFit {
    Exponent { p: f64, samples: usize },
    BelowFloor,
}

/// Least-squares exponent of `err ~ (1 + cmin t)^p` over `t` in `window`.
pub fn fit_power_law(t: &[f64], err: &[f64], cmin: f64, window: (f64, f64)) -> Result<PowerFit> {
    let inside: Vec<usize> = (0..t.len()).filter(|&i| t[i] >= window.0 && t[i] <= window.1).collect();
    if inside.len() < MIN_FIT_SAMPLES {
        return Err(Error::FitWindow {
            got: inside.len(),
            need: MIN_FIT_SAMPLES,
        });
    }
    let usable: Vec<usize> = inside.into_iter().filter(|&i| err[i] >= ERROR_FLOOR).collect();
    if usable.len() < MIN_FIT_SAMPLES {
        return Ok(PowerFit::BelowFloor);
    }
    let x: Vec<f64> = usable.iter().map(|&i| (1.0 + cmin * t[i]).ln()).collect();
    let y: Vec<f64> = usable.iter().map(|&i| err[i].ln()).collect();
    Ok(PowerFit::Exponent {
        p: least_squares(&x, &y).0,
        samples: usable.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayComparison {
    pub err: Vec<f64>,
    pub fit: PowerFit,
}

/// `|F_R - calR|` and its exponent over `[t_end/4, 3 t_end/4]`.
pub fn decay_comparison(series: &RunSeries) -> Result<DecayComparison> {
    if series.cal_r.len() != series.len() {
        return Err(Error::Config("linear response not attached to the series".into()));
    }
    let err: Vec<f64> = series
        .f_r
        .iter()
        .zip(&series.cal_r)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let t_end = *series.t.last().unwrap();
    let fit = fit_power_law(&series.t, &err, series.cmin, (0.25 * t_end, 0.75 * t_end))?;
    Ok(DecayComparison { err, fit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationFit {
    /// Exponential rate of the peak envelope (negative for decay).
    pub rate: f64,
    pub period: f64,
    /// `(t, |peak|)` between consecutive zero crossings.
    pub peaks: Vec<(f64, f64)>,
}

/// Rate and period of a damped oscillation sampled on `t`, restricted to `window`.
///
/// Zero crossings are located by linear interpolation; each `|y|` peak between two
/// crossings is refined by a parabola through the largest sample and its neighbours.
pub fn fit_damped_oscillation(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<OscillationFit> {
    let idx: Vec<usize> = (0..t.len()).filter(|&i| t[i] >= window.0 && t[i] <= window.1).collect();
    if idx.len() < 8 {
        return Err(Error::FitWindow {
            got: idx.len(),
            need: 8,
        });
    }
    let mut crossings = Vec::new();
    let mut cross_idx = Vec::new();
    for w in idx.windows(2) {
        let (i, j) = (w[0], w[1]);
        if y[i] == 0.0 || (y[i] > 0.0) != (y[j] > 0.0) && y[j] != 0.0 {
            let tc = if y[i] == 0.0 {
                t[i]
            } else {
                t[i] - y[i] * (t[j] - t[i]) / (y[j] - y[i])
            };
            crossings.push(tc);
            cross_idx.push(j);
        }
    }
    // lobes between crossings, plus the partial lobes at the window edges when their
    // maximum is interior
    let (first, last) = (idx[0], *idx.last().unwrap());
    let mut bounds = vec![first];
    bounds.extend(&cross_idx);
    bounds.push(last + 1);
    let mut peaks = Vec::new();
    for (m, w) in bounds.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let k = (a..b).max_by(|&p, &q| y[p].abs().total_cmp(&y[q].abs())).unwrap();
        let edge = m == 0 || m + 2 == bounds.len();
        if k == 0 || k + 1 >= t.len() || (edge && (k == first || k == last)) {
            continue;
        }
        if y[k - 1].abs() > y[k].abs() || y[k + 1].abs() > y[k].abs() {
            continue;
        }
        let (y0, y1, y2) = (y[k - 1].abs(), y[k].abs(), y[k + 1].abs());
        let (h1, h2) = (t[k] - t[k - 1], t[k + 1] - t[k]);
        // vertex of the parabola through the three samples
        let d1 = (y1 - y0) / h1;
        let d2 = (y2 - y1) / h2;
        let curv = (d2 - d1) / (0.5 * (h1 + h2));
        let (tp, yp) = if curv < 0.0 {
            let slope_mid = d1 + curv * 0.5 * h1;
            let shift = -slope_mid / curv;
            let tp = t[k] + shift;
            (tp, y1 + slope_mid * shift + 0.5 * curv * shift * shift)
        } else {
            (t[k], y1)
        };
        if yp > 0.0 {
            peaks.push((tp, yp));
        }
    }
    if peaks.len() < 3 || crossings.len() < 3 {
        return Err(Error::FitWindow {
            got: peaks.len(),
            need: 3,
        });
    }
    let px: Vec<f64> = peaks.iter().map(|p| p.0).collect();
    let py: Vec<f64> = peaks.iter().map(|p| p.1.ln()).collect();
    let rate = least_squares(&px, &py).0;
    let spacing = (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64;
    Ok(OscillationFit {
        rate,
        period: 2.0 * spacing,
        peaks,
    })
}

/// Centered trapezoid mean of `y` over `[t - half, t + half]`, clipped at the ends.
///
/// Multiplies a damped sinusoid by a constant away from the ends, so its rate and
/// period survive while oscillations much faster than `1 / half` are suppressed.
pub fn moving_average(t: &[f64], y: &[f64], half: f64) -> Vec<f64> {
    let n = t.len();
    let mut out = Vec::with_capacity(n);
    let (mut lo, mut hi) = (0, 0);
    for i in 0..n {
        while t[lo] < t[i] - half {
            lo += 1;
        }
        while hi + 1 < n && t[hi + 1] <= t[i] + half {
            hi += 1;
        }
        let (mut area, mut span) = (0.0, 0.0);
        for m in lo..hi {
            let h = t[m + 1] - t[m];
            area += 0.5 * h * (y[m] + y[m + 1]);
            span += h;
        }
        out.push(if span > 0.0 { area / span } else { y[i] });
    }
    out
}

/// `|u| + |q|` at a fixed `xi`, sampled on the snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSeries {
    pub xi: f64,
    pub t: Vec<f64>,
    pub value: Vec<f64>,
    /// Whether `(xi, t)` lies in the decay region.
    pub admissible: Vec<bool>,
    pub t_b: f64,
}

/// Probe at `xi_probe`; the decay region is `xi - 1 <= cmin min(t - T_b, t_end - t)` with
/// `T_b = (xi_b - 1)/cmin` and `xi_b` the outer edge of the initial support.
pub fn pointwise_decay_probe(traj: &Trajectory, xi_probe: f64) -> Result<ProbeSeries> {
    let g = &traj.grid;
    let init = traj.initial();
    let size: Vec<f64> = init.u.iter().zip(&init.q).map(|(u, q)| u.abs() + q.abs()).collect();
    let peak = size.iter().copied().fold(0.0, f64::max);
    let xi_b = (0..g.len())
        .rev()
        .find(|&i| size[i] > 1e-12 * peak)
        .map(|i| g.xi[i])
        .unwrap_or(g.xi[0]);
    let cmin = traj.series.cmin;
    let t_b = (xi_b - 1.0) / cmin;
    let t_end = traj.config.t_end;
    let mut out = ProbeSeries {
        xi: xi_probe,
        t: Vec::new(),
        value: Vec::new(),
        admissible: Vec::new(),
        t_b,
    };
    for s in &traj.snapshots {
        out.t.push(s.t);
        out.value
            .push(g.interpolate(&s.u, xi_probe).abs() + g.interpolate(&s.q, xi_probe).abs());
        out.admissible
            .push(xi_probe - 1.0 <= cmin * (s.t - t_b).min(t_end - s.t));
    }
    if !out.admissible.iter().any(|&a| a) {
        return Err(Error::Window { xi: xi_probe, t: t_end });
    }
    Ok(out)
}

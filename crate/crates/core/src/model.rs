//! Closed-form functions of the nondimensional bubble-liquid model.
//!
//! The liquid obeys `p = (Ca/2) rho^gamma`, the bubble `p_b = (Ca/2 + 2/We) R^(-3 gamma0)`
//! and the surface tension is `1/We`. Everything is written in terms of the
//! specific-volume perturbation `q = 1/rho - 1`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::SimState;
use crate::grid::{radius_field, Grid};

/// Which system is integrated: the full Lagrangian equations or their linearization
/// about the equilibrium `(u, q, R) = (0, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Nonlinear,
    Linear,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonlinear" => Ok(Mode::Nonlinear),
            "linear" => Ok(Mode::Linear),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Nonlinear => "nonlinear",
            Mode::Linear => "linear",
        })
    }
}

/// Dimensionless constants of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidParams {
    pub ca: f64,
    pub we: f64,
    pub gamma: f64,
    pub gamma0: f64,
}

impl Default for FluidParams {
    fn default() -> Self {
        FluidParams {
            ca: 2.0,
            we: 2.0,
            gamma: 4.0,
            gamma0: 4.0 / 3.0,
        }
    }
}

/// The two roots of `lambda^2 - (f~'(1)/c0) lambda - f~'(1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenpair {
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub discriminant: f64,
    pub degenerate: bool,
}

impl Eigenpair {
    /// Slowest decay rate, `max Re(lambda_i)`.
    pub fn slowest_rate(&self) -> f64 {
        self.lambda1.re.max(self.lambda2.re)
    }
}

fn positive_finite(name: &'static str, value: f64, lower: f64) -> Result<()> {
    if !value.is_finite() || value <= lower {
        return Err(Error::Parameter {
            name,
            value,
            reason: if lower == 0.0 { "must be > 0" } else { "must be > 1" },
        });
    }
    Ok(())
}

impl FluidParams {
    pub fn new(ca: f64, we: f64, gamma: f64, gamma0: f64) -> Result<Self> {
        positive_finite("ca", ca, 0.0)?;
        positive_finite("we", we, 0.0)?;
        positive_finite("gamma", gamma, 1.0)?;
        positive_finite("gamma0", gamma0, 1.0)?;
        Ok(FluidParams { ca, we, gamma, gamma0 })
    }

    /// Equilibrium sound speed `sqrt(Ca gamma / 2)`.
    pub fn c0(&self) -> f64 {
        (0.5 * self.ca * self.gamma).sqrt()
    }

    /// Upper end of the interval on which `f` is defined.
    pub fn r_bar(&self) -> f64 {
        (1.0 + 0.25 * self.ca * self.we).powf(1.0 / (3.0 * self.gamma0 - 1.0))
    }

    fn k(&self) -> f64 {
        4.0 / (self.ca * self.we)
    }

    fn check_radius(&self, function: &'static str, r: f64) -> Result<()> {
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::Domain {
                function,
                value: r,
                reason: "radius must be positive",
            });
        }
        Ok(())
    }

    /// Bracket of `f` minus one, evaluated without cancellation near `R = 1`.
    fn bracket_minus_one(&self, r: f64) -> f64 {
        let ln_r = r.ln();
        let a = (-3.0 * self.gamma0 * ln_r).exp_m1();
        let b = (-ln_r).exp_m1();
        a + self.k() * (a - b)
    }

    /// Boundary value of `q` forced by a bubble of radius `r`.
    pub fn f(&self, r: f64) -> Result<f64> {
        self.check_radius("f", r)?;
        let delta = self.bracket_minus_one(r);
        if r >= self.r_bar() || delta <= -1.0 {
            return Err(Error::Domain {
                function: "f",
                value: r,
                reason: "radius must lie below R_bar",
            });
        }
        // `+ 0.0` turns the -0.0 of R = 1 into +0.0
        Ok((-delta.ln_1p() / self.gamma).exp_m1() + 0.0)
    }

    /// Closed-form derivative of [`FluidParams::f`].
    pub fn f_prime(&self, r: f64) -> Result<f64> {
        let q = self.f(r)?;
        let k = self.k();
        let g0 = self.gamma0;
        let bracket = 1.0 + self.bracket_minus_one(r);
        let d_bracket = -3.0 * g0 * (1.0 + k) * r.powf(-3.0 * g0 - 1.0) + k / (r * r);
        Ok(-(1.0 + q) / (self.gamma * bracket) * d_bracket)
    }

    /// `f'(1) = -f~'(1) / c0^2`.
    pub fn f_prime_at_one(&self) -> f64 {
        -self.ftilde_prime_at_one() / (self.c0() * self.c0())
    }

    /// Inverse of `f` by safeguarded Newton iteration on `(0, R_bar)`.
    pub fn f_inverse(&self, qb: f64) -> Result<f64> {
        if !qb.is_finite() || qb <= -1.0 {
            return Err(Error::OutOfRange(qb));
        }
        const CAP: usize = 200;
        let tol = 1e-12 * (1.0 + qb.abs());
        let r_bar = self.r_bar();

        // Bracket: f -> -1 as R -> 0 and f -> +inf as R -> R_bar.
        let mut lo = r_bar.min(1.0) * 0.5;
        let mut expansions = 0;
        while self.f(lo)? >= qb {
            lo *= 0.5;
            expansions += 1;
            if expansions > 1000 || lo == 0.0 {
                return Err(Error::OutOfRange(qb));
            }
        }
        let mut gap = 0.5 * (r_bar - 1.0).max(r_bar * 1e-3);
        let mut hi = r_bar - gap;
        expansions = 0;
        while self.f(hi)? <= qb {
            gap *= 0.5;
            hi = r_bar - gap;
            expansions += 1;
            if expansions > 1000 || hi >= r_bar {
                return Err(Error::OutOfRange(qb));
            }
        }

        let mut r = if (lo..hi).contains(&1.0) { 1.0 } else { 0.5 * (lo + hi) };
        for _ in 0..CAP {
            let residual = self.f(r)? - qb;
            // near R_bar the residual is limited by cancellation in the bracket, so a
            // collapsed interval also counts as converged
            if residual.abs() <= tol || hi - lo <= 4.0 * f64::EPSILON * r {
                return Ok(r);
            }
            if residual < 0.0 {
                lo = r;
            } else {
                hi = r;
            }
            let slope = self.f_prime(r)?;
            let newton = r - residual / slope;
            r = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Err(Error::NonConvergence {
            what: "f_inverse",
            iterations: CAP,
        })
    }

    /// Liquid pressure demanded at the bubble wall by the bubble of radius `r`.
    pub fn ftilde(&self, r: f64) -> Result<f64> {
        self.check_radius("ftilde", r)?;
        let s = 2.0 / self.we;
        Ok((0.5 * self.ca + s) * r.powf(-3.0 * self.gamma0) - s / r)
    }

    pub fn ftilde_prime(&self, r: f64) -> Result<f64> {
        self.check_radius("ftilde_prime", r)?;
        let s = 2.0 / self.we;
        Ok(-3.0 * self.gamma0 * (0.5 * self.ca + s) * r.powf(-3.0 * self.gamma0 - 1.0) + s / (r * r))
    }

    /// `f~'(1) = -3 gamma0 (Ca/2 + 2/We) + 2/We`, always negative.
    pub fn ftilde_prime_at_one(&self) -> f64 {
        let s = 2.0 / self.we;
        -3.0 * self.gamma0 * (0.5 * self.ca + s) + s
    }

    fn check_q(function: &'static str, q: f64) -> Result<()> {
        if !(q > -1.0) || !q.is_finite() {
            return Err(Error::Domain {
                function,
                value: q,
                reason: "q must exceed -1 (positive density)",
            });
        }
        Ok(())
    }

    /// Specific sound speed `c0 (1+q)^(-(gamma+1)/2)`.
    pub fn sound_speed(&self, q: f64) -> Result<f64> {
        Self::check_q("sound_speed", q)?;
        Ok(self.sound_speed_unchecked(q))
    }

    #[inline]
    pub(crate) fn sound_speed_unchecked(&self, q: f64) -> f64 {
        self.c0() * (-0.5 * (self.gamma + 1.0) * q.ln_1p()).exp()
    }

    /// Pressure minus its equilibrium value, `(Ca/2)((1+q)^(-gamma) - 1)`.
    #[inline]
    pub fn pressure_excess(&self, q: f64) -> f64 {
        0.5 * self.ca * (-self.gamma * q.ln_1p()).exp_m1()
    }

    /// Bernoulli head `g(q) = dphi/dt - u^2/2`.
    pub fn g(&self, q: f64) -> Result<f64> {
        Self::check_q("g", q)?;
        Ok(self.g_unchecked(q))
    }

    #[inline]
    pub(crate) fn g_unchecked(&self, q: f64) -> f64 {
        let gm1 = self.gamma - 1.0;
        -(0.5 * self.ca * self.gamma / gm1) * (-gm1 * q.ln_1p()).exp_m1()
    }

    /// Radius observable `F(R) = R g(f(R))`.
    #[allow(non_snake_case)]
    pub fn F(&self, r: f64) -> Result<f64> {
        let q = self.f(r)?;
        Ok(r * self.g_unchecked(q))
    }

    /// Entropy density `H(rho)` written in terms of `q`.
    pub fn entropy(&self, q: f64) -> f64 {
        let gm1 = self.gamma - 1.0;
        (0.5 * self.ca / gm1) * ((-gm1 * q.ln_1p()).exp_m1() + gm1 * q)
    }

    /// Boundary work `W(R)`; `W(1) = 0` and `W'(1) = 0`.
    pub fn boundary_work(&self, r: f64) -> f64 {
        let g0 = self.gamma0;
        let ln_r = r.ln();
        (0.5 * self.ca + 2.0 / self.we) / (3.0 * g0 - 3.0) * ((3.0 - 3.0 * g0) * ln_r).exp_m1()
            + (2.0 * ln_r).exp_m1() / self.we
            + self.ca / 6.0 * (3.0 * ln_r).exp_m1()
    }

    pub fn eigenvalues(&self) -> Result<Eigenpair> {
        let fp1 = self.f_prime_at_one();
        if (fp1 - 4.0).abs() <= 1e-10 {
            return Err(Error::DegenerateSpectrum { fp1 });
        }
        let ft1 = self.ftilde_prime_at_one();
        // lambda^2 + b lambda + c = 0
        let b = -ft1 / self.c0();
        let c = -ft1;
        let disc = b * b - 4.0 * c;
        let (lambda1, lambda2) = if disc < 0.0 {
            let im = 0.5 * (-disc).sqrt();
            (Complex64::new(-0.5 * b, im), Complex64::new(-0.5 * b, -im))
        } else {
            // b > 0 here, so the stable form subtracts nothing.
            let big = -0.5 * (b + disc.sqrt());
            (Complex64::new(big, 0.0), Complex64::new(c / big, 0.0))
        };
        Ok(Eigenpair {
            lambda1,
            lambda2,
            discriminant: disc,
            degenerate: false,
        })
    }
}

/// Residuals of the zeroth and first order compatibility conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatReport {
    pub cc0_residual: f64,
    pub cc1_residual: f64,
}

impl CompatReport {
    pub fn max(&self) -> f64 {
        self.cc0_residual.max(self.cc1_residual)
    }
}

/// Compare the boundary data of `(u, q, R)` against `q(0) = f(R)` and
/// `f'(R) u(0) = d_x(r^2 u)(0)`; the derivative is the solver's one-sided stencil.
pub fn check_compatibility(
    u: &[f64],
    q: &[f64],
    r_in: f64,
    grid: &Grid,
    params: &FluidParams,
    mode: Mode,
) -> Result<CompatReport> {
    let (target_q0, slope, v): (f64, f64, [f64; 3]) = match mode {
        Mode::Nonlinear => {
            let state = SimState {
                u: u.to_vec(),
                q: q.to_vec(),
                radius: r_in,
                phi_outer: 0.0,
                t: 0.0,
            };
            let field = radius_field(&state, grid, params)?;
            let v = [0, 1, 2].map(|i| field.r[i] * field.r[i] * u[i]);
            (params.f(r_in)?, params.f_prime(r_in)?, v)
        }
        Mode::Linear => {
            let fp1 = params.f_prime_at_one();
            let v = [0, 1, 2].map(|i| grid.xi[i] * grid.xi[i] * u[i]);
            (fp1 * (r_in - 1.0), fp1, v)
        }
    };
    let dv = grid.one_sided_left(v);
    Ok(CompatReport {
        cc0_residual: (q[0] - target_q0).abs(),
        cc1_residual: (slope * u[0] - dv).abs(),
    })
}

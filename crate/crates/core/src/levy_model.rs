//! Driving Lévy process, the moving-average kernel `K_α` and the operator pair
//! `L_α` / `L_α⁻¹` that maps the driver's characteristic exponent onto the
//! exponent of the limiting increment process.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_complex4, integrate_real, Tolerance};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Jump integrals are truncated where the mark density drops below this.
pub const DENSITY_CUTOFF: f64 = 1e-14;

const PSI_TOL: Tolerance = Tolerance::new(1e-11, 1e-13);
const LIMIT_TOL: Tolerance = Tolerance::new(1e-10, 1e-12);
const OPERATOR_TOL: Tolerance = Tolerance::new(1e-13, 1e-14);

/// Law of the (positive) jump marks of the driving compound Poisson part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum JumpDensity {
    Exponential { rate: f64 },
}

impl Default for JumpDensity {
    fn default() -> Self {
        JumpDensity::Exponential { rate: 1.0 }
    }
}

impl JumpDensity {
    pub fn validate(&self) -> Result<()> {
        match *self {
            JumpDensity::Exponential { rate } if rate > 0.0 && rate.is_finite() => Ok(()),
            JumpDensity::Exponential { rate } => Err(Error::domain(format!(
                "exponential jump rate must be positive, got {rate}"
            ))),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            JumpDensity::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
        }
    }

    /// Point beyond which the density is below [`DENSITY_CUTOFF`].
    pub fn truncation(&self) -> f64 {
        match *self {
            JumpDensity::Exponential { rate } => (rate / DENSITY_CUTOFF).ln().max(1.0) / rate,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpDensity::Exponential { rate } => {
                Exp::new(rate).expect("validated rate").sample(rng)
            }
        }
    }

    /// `∫ x^p f(x) dx` over `(0, ∞)`, cut where the integrand is negligible.
    pub fn moment(&self, p: f64) -> Result<f64> {
        let integrand = |x: f64| if x == 0.0 { 0.0 } else { x.powf(p) * self.density(x) };
        let mut upper = self.truncation();
        while upper * integrand(upper) > DENSITY_CUTOFF {
            upper *= 1.5;
        }
        integrate_real(integrand, 0.0, upper, Tolerance::new(1e-12, 1e-12))
    }

    /// `∫_0^1 x f(x) dx`, the part of the first moment that the
    /// Lévy–Khintchine compensator removes.
    pub fn truncated_mean(&self) -> Result<f64> {
        integrate_real(
            |x| x * self.density(x),
            0.0,
            1.0_f64.min(self.truncation()),
            Tolerance::new(1e-14, 1e-14),
        )
    }
}

/// Lévy triplet `(γ, σ, ν)` with `ν(dx) = λ f(x) dx` on `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyTriplet {
    pub gamma: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub jumps: JumpDensity,
}

impl LevyTriplet {
    pub fn new(gamma: f64, sigma: f64, lambda: f64, jumps: JumpDensity) -> Result<Self> {
        let t = Self {
            gamma,
            sigma,
            lambda,
            jumps,
        };
        t.validate()?;
        Ok(t)
    }

    /// `γ = 5, σ = 0, λ = 1` with standard exponential marks.
    pub fn simulation_default() -> Self {
        Self {
            gamma: 5.0,
            sigma: 0.0,
            lambda: 1.0,
            jumps: JumpDensity::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() {
            return Err(Error::domain("gamma must be finite"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::domain(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        self.jumps.validate()
    }

    pub fn levy_density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.lambda * self.jumps.density(x)
        }
    }

    /// `ψ(u), ψ'(u), ψ''(u), ψ'''(u)`, the jump parts differentiated under the
    /// integral sign.
    pub fn psi_derivatives(&self, u: f64) -> Result<[Complex64; 4]> {
        let s2 = self.sigma * self.sigma;
        let mut out = [
            Complex64::new(-0.5 * s2 * u * u, self.gamma * u),
            Complex64::new(-s2 * u, self.gamma),
            Complex64::new(-s2, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        if self.lambda == 0.0 {
            return Ok(out);
        }
        let upper = self.jumps.truncation();
        let integrand = |x: f64, compensate: bool| {
            let w = self.levy_density(x);
            let e = Complex64::new(0.0, u * x).exp() * w;
            let ind = if compensate { w } else { 0.0 };
            [
                e - w - I * (u * x * ind),
                I * x * (e - ind),
                -(e * (x * x)),
                -(I * e * (x * x * x)),
            ]
        };
        let split = 1.0_f64.min(upper);
        let near = integrate_complex4(|x| integrand(x, true), 0.0, split, PSI_TOL)?;
        let far = integrate_complex4(|x| integrand(x, false), split, upper, PSI_TOL)?;
        for k in 0..4 {
            out[k] += near[k] + far[k];
        }
        Ok(out)
    }

    pub fn psi(&self, u: f64) -> Result<Complex64> {
        self.psi_derivatives(u).map(|d| d[0])
    }

    /// `σ² + ∫ x² ν(dx)`, i.e. `-ψ''(0)`.
    pub fn second_moment(&self) -> Result<f64> {
        Ok(self.sigma * self.sigma + self.lambda * self.jumps.moment(2.0)?)
    }
}

/// Characteristic exponent of the driver.
pub fn char_exponent_psi(u: f64, triplet: &LevyTriplet) -> Result<Complex64> {
    triplet.psi(u)
}

/// Symmetric kernel `K_α(x) = (1 - α|x|)^{1/α}` on `|x| ≤ 1/α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MAKernel {
    alpha: f64,
}

impl MAKernel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn support(&self) -> f64 {
        1.0 / self.alpha
    }

    pub fn eval(&self, x: f64) -> f64 {
        let r = 1.0 - self.alpha * x.abs();
        if r < 0.0 {
            0.0
        } else {
            r.powf(1.0 / self.alpha)
        }
    }

    /// `∫ K_α = 2 / (1 + α)`.
    pub fn integral(&self) -> f64 {
        2.0 / (1.0 + self.alpha)
    }

    /// Exponent `(2α - 1)/(1 - α)` of the weight inside `L_α`.
    pub fn weight_exponent(&self) -> f64 {
        (2.0 * self.alpha - 1.0) / (1.0 - self.alpha)
    }
}

pub fn kernel_k_alpha(x: f64, k: &MAKernel) -> f64 {
    k.eval(x)
}

/// `∫_0^1 g(y) y^p dy` for `p > -1`. Negative powers are removed by the
/// substitution `y = w^s`, `s = 1/(p + 1)`, which turns the weight into a
/// constant.
fn weighted_unit_integral<const N: usize, G>(g: G, p: f64, tol: Tolerance) -> Result<[f64; N]>
where
    G: Fn(f64) -> [f64; N],
{
    if p <= -1.0 {
        return Err(Error::domain(format!("weight exponent {p} is not integrable")));
    }
    if p >= 0.0 {
        integrate(
            |y| {
                let w = y.powf(p);
                let mut v = g(y);
                v.iter_mut().for_each(|c| *c *= w);
                v
            },
            0.0,
            1.0,
            tol,
        )
        .map(|e| e.value)
    } else {
        let s = 1.0 / (p + 1.0);
        integrate(|w| g(w.powf(s)), 0.0, 1.0, tol).map(|e| {
            let mut v = e.value;
            v.iter_mut().for_each(|c| *c *= s);
            v
        })
    }
}

fn check_alpha(alpha: f64) -> Result<MAKernel> {
    MAKernel::new(alpha)
}

/// `(L_α f)(x) = 2/(1-α) · x^{-α/(1-α)} ∫_0^x f(z) z^{(2α-1)/(1-α)} dz`,
/// evaluated after rescaling `z = x y` onto the unit interval.
pub fn op_l_alpha<F>(f: F, x: f64, alpha: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let k = check_alpha(alpha)?;
    if !(x > 0.0) {
        return Err(Error::domain(format!("L_alpha needs x > 0, got {x}")));
    }
    let v = weighted_unit_integral(|y| [f(x * y)], k.weight_exponent(), OPERATOR_TOL)?;
    Ok(2.0 / (1.0 - alpha) * v[0])
}

/// Derivative of `L_α f` at `x`, differentiating under the integral sign.
pub fn op_l_alpha_derivative<F>(f_prime: F, x: f64, alpha: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let k = check_alpha(alpha)?;
    if !(x > 0.0) {
        return Err(Error::domain(format!("L_alpha needs x > 0, got {x}")));
    }
    let v = weighted_unit_integral(|y| [f_prime(x * y)], k.weight_exponent() + 1.0, OPERATOR_TOL)?;
    Ok(2.0 / (1.0 - alpha) * v[0])
}

/// How `op_l_alpha_inv` obtains `f'(x)`.
pub enum Derivative<'a> {
    Analytic(&'a dyn Fn(f64) -> f64),
    FiniteDifference,
}

/// `(L_α⁻¹ f)(x) = (α/2) f(x) + ((1-α)/2) x f'(x)`.
pub fn op_l_alpha_inv<F>(f: F, derivative: Derivative<'_>, x: f64, alpha: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    check_alpha(alpha)?;
    let value = f(x);
    let slope = match derivative {
        Derivative::Analytic(df) => df(x),
        Derivative::FiniteDifference => {
            if x == 0.0 {
                0.0
            } else {
                let step = 1e-4 * x.abs();
                (f(x + step) - f(x - step)) / (2.0 * step)
            }
        }
    };
    Ok(0.5 * alpha * value + 0.5 * (1.0 - alpha) * x * slope)
}

/// Ground truth `ν` and `ρ(x) = x² ν(x)` of a triplet.
#[derive(Debug, Clone, Copy)]
pub struct GroundTruth {
    pub triplet: LevyTriplet,
}

impl GroundTruth {
    pub fn new(triplet: LevyTriplet) -> Self {
        Self { triplet }
    }

    pub fn nu(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Err(Error::domain("the Levy density is not evaluated at 0"));
        }
        Ok(self.triplet.levy_density(x))
    }

    pub fn rho(&self, x: f64) -> Result<f64> {
        Ok(x * x * self.nu(x)?)
    }
}

pub fn rho_truth(x: f64, g: &GroundTruth) -> Result<f64> {
    g.rho(x)
}

/// `Ψ^{(k)}(u) = 2/(1-α) ∫_0^1 y^{k+(2α-1)/(1-α)} ψ^{(k)}(uy) dy`, `k = 0..3`.
pub fn limit_exponent_derivatives(
    u: f64,
    triplet: &LevyTriplet,
    kernel: &MAKernel,
) -> Result<[Complex64; 4]> {
    let alpha = kernel.alpha();
    let inner_error = std::cell::Cell::new(None);
    let v = weighted_unit_integral(
        |y| match triplet.psi_derivatives(u * y) {
            Ok(d) => {
                let (y2, y3) = (y * y, y * y * y);
                [
                    d[0].re,
                    d[0].im,
                    y * d[1].re,
                    y * d[1].im,
                    y2 * d[2].re,
                    y2 * d[2].im,
                    y3 * d[3].re,
                    y3 * d[3].im,
                ]
            }
            Err(e) => {
                inner_error.set(Some(e.to_string()));
                [f64::NAN; 8]
            }
        },
        kernel.weight_exponent(),
        LIMIT_TOL,
    );
    if let Some(msg) = inner_error.take() {
        return Err(Error::domain(format!("inner quadrature failed: {msg}")));
    }
    let v = v?;
    let scale = 2.0 / (1.0 - alpha);
    Ok([
        Complex64::new(v[0], v[1]) * scale,
        Complex64::new(v[2], v[3]) * scale,
        Complex64::new(v[4], v[5]) * scale,
        Complex64::new(v[6], v[7]) * scale,
    ])
}

/// Exponent `Ψ = L_α ψ` of the limiting process at time one.
pub fn theoretical_psi(u: f64, triplet: &LevyTriplet, kernel: &MAKernel) -> Result<Complex64> {
    limit_exponent_derivatives(u, triplet, kernel).map(|d| d[0])
}

/// Characteristic function `exp(Δ Ψ(u))` of one increment of the limit process.
pub fn limit_cf(u: f64, delta: f64, triplet: &LevyTriplet, kernel: &MAKernel) -> Result<Complex64> {
    Ok((theoretical_psi(u, triplet, kernel)? * delta).exp())
}

//! Fourier-side machinery: the flat-top smoothing kernel, the uniform
//! frequency grid, empirical characteristic functions with derivatives,
//! the weight functions `Q_0..Q_3` and the kernels `K_{m,n}`.
//!
//! All frequency integrals are trapezoid sums over a symmetric grid on
//! `[-1/h, 1/h]`. Tables are filled for `u ≥ 0` and mirrored through
//! `f(-u) = (-1)^m conj f(u)`, so conjugate symmetry holds bit-for-bit.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_model::{limit_exponent_derivatives, LevyTriplet, MAKernel};
use crate::simulate::ObservationSeries;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Smallest admissible `|Φ|` inside the spectral window.
pub const PHI_FLOOR: f64 = 0.05;

/// Default number of trapezoid nodes on `[-1/h, 1/h]`.
pub const DEFAULT_NODES: usize = 4097;

/// Nodes per block of the phase recurrence; each block restarts from an
/// exact `sin_cos`.
const BLOCK: usize = 64;

/// `1` on `|t| ≤ c`, `0` on `|t| ≥ 1`, quintic smoothstep in between.
pub fn flat_top_phi(t: f64, c: f64) -> f64 {
    let a = t.abs();
    if a <= c {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        let s = (a - c) / (1.0 - c);
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// Smoothing kernel `W` given through its Fourier transform `φ_W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingKernel {
    flat_top: f64,
}

impl Default for SmoothingKernel {
    fn default() -> Self {
        Self { flat_top: 0.5 }
    }
}

impl SmoothingKernel {
    pub fn flat_top(c: f64) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::domain(format!("flat-top fraction must lie in (0, 1), got {c}")));
        }
        Ok(Self { flat_top: c })
    }

    pub fn fraction(&self) -> f64 {
        self.flat_top
    }

    pub fn phi(&self, t: f64) -> f64 {
        flat_top_phi(t, self.flat_top)
    }
}

/// Odd number of equispaced nodes on `[-1/h, 1/h]`, with `u = 0` the middle.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    h: f64,
    nodes: Vec<f64>,
    spacing: f64,
}

impl SpectralGrid {
    pub fn new(h: f64, m: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::domain(format!("bandwidth must be positive, got {h}")));
        }
        if m < 3 || m.is_multiple_of(2) {
            return Err(Error::domain(format!("node count must be odd and >= 3, got {m}")));
        }
        let mid = (m - 1) / 2;
        let spacing = 2.0 / (h * (m - 1) as f64);
        let nodes = (0..m)
            .map(|k| (k as f64 - mid as f64) * spacing)
            .collect();
        Ok(Self { h, nodes, spacing })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn mid(&self) -> usize {
        (self.nodes.len() - 1) / 2
    }

    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.nodes.len() {
            0.5 * self.spacing
        } else {
            self.spacing
        }
    }

    /// Same window, twice as fine.
    pub fn refined(&self) -> Self {
        Self::new(self.h, 2 * self.nodes.len() - 1).expect("refinement of a valid grid")
    }
}

/// `Σ_k c_k exp(-i u_k z)` over the grid nodes.
pub fn fourier_sum(coeffs: &[Complex64], grid: &SpectralGrid, z: f64) -> Complex64 {
    debug_assert_eq!(coeffs.len(), grid.len());
    let (s, c) = (-grid.spacing * z).sin_cos();
    let step = Complex64::new(c, s);
    let mut total = Complex64::new(0.0, 0.0);
    for (b, block) in coeffs.chunks(BLOCK).enumerate() {
        let u0 = grid.nodes[b * BLOCK];
        let (s, c) = (-u0 * z).sin_cos();
        let mut e = Complex64::new(c, s);
        let mut acc = Complex64::new(0.0, 0.0);
        for &ck in block {
            acc += ck * e;
            e *= step;
        }
        total += acc;
    }
    total
}

/// `(1/n) Σ_j (i x_j)^m exp(i u x_j)`.
pub fn ecf(data: &[f64], u: f64, m: usize) -> Complex64 {
    let n = data.len() as f64;
    let sum: Complex64 = data
        .iter()
        .map(|&x| I.powu(m as u32) * x.powi(m as i32) * Complex64::new(0.0, u * x).exp())
        .sum();
    sum / n
}

/// Mirror a table filled for `u ≥ 0` onto `u < 0` with parity `(-1)^m`.
fn mirror(half: &[Complex64], m: usize) -> Vec<Complex64> {
    let mid = half.len() - 1;
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut full = Vec::with_capacity(2 * mid + 1);
    full.extend(half[1..].iter().rev().map(|z| z.conj() * sign));
    full.extend_from_slice(half);
    full
}

/// `Φ̂^{(m)}` on the grid for `m = 0..3` from a table of distinct values.
fn empirical_cf(groups: &[(f64, usize)], n: usize, grid: &SpectralGrid) -> [Vec<Complex64>; 4] {
    let mid = grid.mid();
    let du = grid.spacing();
    let half_len = mid + 1;
    let blocks: Vec<usize> = (0..half_len).step_by(BLOCK).collect();
    let partial: Vec<[Vec<Complex64>; 4]> = blocks
        .par_iter()
        .map(|&start| {
            let len = BLOCK.min(half_len - start);
            let mut acc: [Vec<Complex64>; 4] =
                std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); len]);
            for &(x, count) in groups {
                let c = count as f64;
                let w = [c, c * x, c * x * x, c * x * x * x];
                let (s0, c0) = (start as f64 * du * x).sin_cos();
                let (s1, c1) = (du * x).sin_cos();
                let mut e = Complex64::new(c0, s0);
                let step = Complex64::new(c1, s1);
                for k in 0..len {
                    for m in 0..4 {
                        acc[m][k] += e * w[m];
                    }
                    e *= step;
                }
            }
            acc
        })
        .collect();
    let scale = 1.0 / n as f64;
    let factors = [
        Complex64::new(scale, 0.0),
        Complex64::new(0.0, scale),
        Complex64::new(-scale, 0.0),
        Complex64::new(0.0, -scale),
    ];
    std::array::from_fn(|m| {
        let mut half: Vec<Complex64> = partial
            .iter()
            .flat_map(|p| p[m].iter().map(|z| z * factors[m]))
            .collect();
        if m == 0 {
            half[0] = Complex64::new(1.0, 0.0);
        }
        mirror(&half, m)
    })
}

/// `Ψ̂ = Δ⁻¹ log Φ̂` on the grid together with `Ψ̂', Ψ̂'', Ψ̂'''`.
///
/// The logarithm is the continuous branch unwound outwards from `u = 0`; the
/// derivatives come from the quotient-rule identities in `a = Φ'/Φ`,
/// `b = Φ''/Φ`, `c = Φ'''/Φ`:
/// `Ψ' = a/Δ`, `Ψ'' = (b - a²)/Δ`, `Ψ''' = (c - 3ab + 2a³)/Δ`.
pub fn log_ecf_derivatives(
    cf: &[Vec<Complex64>; 4],
    delta: f64,
    grid: &SpectralGrid,
) -> Result<[Vec<Complex64>; 4]> {
    let mid = grid.mid();
    let nodes = grid.nodes();
    // Scan outwards so the reported node is the one closest to u = 0.
    for j in 0..=mid {
        for k in [mid + j, mid - j] {
            let z = cf[0][k];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite { index: k, u: nodes[k] });
            }
            let modulus = z.norm();
            if modulus <= PHI_FLOOR {
                return Err(Error::BandwidthTooSmall {
                    u: nodes[k],
                    modulus,
                    floor: PHI_FLOOR,
                });
            }
        }
    }
    let inv = 1.0 / delta;
    let len = mid + 1;
    let mut half: [Vec<Complex64>; 4] = std::array::from_fn(|_| Vec::with_capacity(len));
    let mut phase = 0.0_f64;
    for j in 0..len {
        let k = mid + j;
        let phi = cf[0][k];
        let mut arg = phi.arg();
        if j == 0 {
            arg = 0.0;
        } else {
            let turns = ((phase - arg) / (2.0 * PI)).round();
            arg += turns * 2.0 * PI;
        }
        phase = arg;
        let log = Complex64::new(if j == 0 { 0.0 } else { phi.norm().ln() }, arg);
        let a = cf[1][k] / phi;
        let b = cf[2][k] / phi;
        let c = cf[3][k] / phi;
        half[0].push(log * inv);
        half[1].push(a * inv);
        half[2].push((b - a * a) * inv);
        half[3].push((c - a * b * 3.0 + a * a * a * 2.0) * inv);
    }
    Ok(std::array::from_fn(|m| mirror(&half[m], m)))
}

/// Where the characteristic-function table came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfSource {
    Empirical,
    Exact,
}

/// `Φ^{(m)}` and `Ψ^{(m)}`, `m = 0..3`, on the nodes of a grid.
#[derive(Debug, Clone)]
pub struct EcfBundle {
    pub delta: f64,
    pub grid: SpectralGrid,
    pub cf: [Vec<Complex64>; 4],
    pub exponent: [Vec<Complex64>; 4],
    pub source: CfSource,
}

impl EcfBundle {
    pub fn empirical(data: &ObservationSeries, grid: &SpectralGrid) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::domain("no observations"));
        }
        let cf = empirical_cf(&data.distinct(), data.len(), grid);
        Self::from_cf(cf, data.delta, grid, CfSource::Empirical)
    }

    /// Exact `Φ_{ΔX} = exp(Δ Ψ)` with `Ψ = L_α ψ` by quadrature.
    pub fn exact(
        triplet: &LevyTriplet,
        kernel: &MAKernel,
        delta: f64,
        grid: &SpectralGrid,
    ) -> Result<Self> {
        let mid = grid.mid();
        let nodes = &grid.nodes()[mid..];
        let exps: Vec<[Complex64; 4]> = nodes
            .par_iter()
            .map(|&u| limit_exponent_derivatives(u, triplet, kernel))
            .collect::<Result<_>>()?;
        let mut half: [Vec<Complex64>; 4] = std::array::from_fn(|_| Vec::with_capacity(mid + 1));
        for (j, d) in exps.iter().enumerate() {
            let phi = if j == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                (d[0] * delta).exp()
            };
            let a = d[1] * delta;
            let b = d[2] * delta + a * a;
            let c = d[3] * delta + a * d[2] * delta * 3.0 + a * a * a;
            half[0].push(phi);
            half[1].push(a * phi);
            half[2].push(b * phi);
            half[3].push(c * phi);
        }
        let cf = std::array::from_fn(|m| mirror(&half[m], m));
        Self::from_cf(cf, delta, grid, CfSource::Exact)
    }

    pub fn from_cf(
        cf: [Vec<Complex64>; 4],
        delta: f64,
        grid: &SpectralGrid,
        source: CfSource,
    ) -> Result<Self> {
        if cf.iter().any(|v| v.len() != grid.len()) {
            return Err(Error::domain("characteristic-function table does not match the grid"));
        }
        let exponent = log_ecf_derivatives(&cf, delta, grid)?;
        Ok(Self {
            delta,
            grid: grid.clone(),
            cf,
            exponent,
            source,
        })
    }

    pub fn min_modulus(&self) -> f64 {
        self.cf[0].iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    /// `Q_0..Q_3` on every node.
    pub fn q_table(&self, alpha: f64) -> Result<[Vec<Complex64>; 4]> {
        let mut table: [Vec<Complex64>; 4] =
            std::array::from_fn(|_| Vec::with_capacity(self.grid.len()));
        for (k, &u) in self.grid.nodes().iter().enumerate() {
            let q = q_weights(
                u,
                [self.cf[0][k], self.cf[1][k], self.cf[2][k], self.cf[3][k]],
                alpha,
            )?;
            for m in 0..4 {
                table[m].push(q[m]);
            }
        }
        Ok(table)
    }
}

fn check_floor(u: f64, phi: Complex64) -> Result<()> {
    let modulus = phi.norm();
    if !(modulus > PHI_FLOOR) {
        return Err(Error::BandwidthTooSmall {
            u,
            modulus,
            floor: PHI_FLOOR,
        });
    }
    Ok(())
}

/// Weights `Q_0..Q_3` at `u` from `Φ, Φ', Φ'', Φ'''`.
///
/// These are the coefficients of `D, D', D'', D'''` in the linearisation of
/// `(L_α⁻¹ Ψ̂)''` around `Ψ` with `D = Φ̂ - Φ`, up to the factor `1/Δ`.
pub fn q_weights(u: f64, cf: [Complex64; 4], alpha: f64) -> Result<[Complex64; 4]> {
    let phi = cf[0];
    check_floor(u, phi)?;
    let a = cf[1] / phi;
    let b = cf[2] / phi;
    let c = cf[3] / phi;
    let p = 0.5 * (2.0 - alpha);
    let r = 0.5 * (1.0 - alpha);
    let q0 = (p * (a * a * 2.0 - b) + r * u * (-c + a * b * 6.0 - a * a * a * 6.0)) / phi;
    let q1 = (a * a * (3.0 * u * (1.0 - alpha)) - b * (3.0 * u * r) - a * (2.0 - alpha)) / phi;
    let q2 = (Complex64::new(p, 0.0) - a * (3.0 * u * r)) / phi;
    let q3 = Complex64::new(u * r, 0.0) / phi;
    Ok([q0, q1, q2, q3])
}

/// Same weights written through the exponent: `Φ = exp(ΔΨ)`, `d = [Ψ', Ψ'', Ψ''']`.
pub fn q_weights_from_exponent(
    u: f64,
    phi: Complex64,
    d: [Complex64; 3],
    delta: f64,
    alpha: f64,
) -> Result<[Complex64; 4]> {
    check_floor(u, phi)?;
    let (d1, d2, d3) = (d[0], d[1], d[2]);
    let p = 0.5 * (2.0 - alpha);
    let r = 0.5 * (1.0 - alpha);
    let curvature = d1 * d1 * delta - d2;
    let q0 = (curvature * p
        - (d3 - d2 * d1 * (3.0 * delta) + d1 * d1 * d1 * (delta * delta)) * (u * r))
        * delta
        / phi;
    let q1 = (curvature * (3.0 * u * r) - d1 * (2.0 - alpha)) * delta / phi;
    let q2 = (Complex64::new(p, 0.0) - d1 * (3.0 * u * delta * r)) / phi;
    let q3 = Complex64::new(u * r, 0.0) / phi;
    Ok([q0, q1, q2, q3])
}

/// Kernels of the form `z ↦ Σ_m (i x)^m K_m(z)` used by the variance
/// estimate and the multiplier bootstrap.
pub trait InfluenceKernels: Sync {
    fn kernel(&self, m: usize, z: f64) -> Complex64;

    /// `Σ_m (i d)^m K_m(x - d)` for one datum `d`.
    fn influence(&self, x: f64, datum: f64) -> Complex64 {
        let mut power = Complex64::new(1.0, 0.0);
        let mut total = Complex64::new(0.0, 0.0);
        for m in 0..4 {
            total += power * self.kernel(m, x - datum);
            power *= I * datum;
        }
        total
    }

    fn influence_row(&self, datum: f64, xs: &[f64]) -> Vec<Complex64> {
        xs.iter().map(|&x| self.influence(x, datum)).collect()
    }
}

/// `K_{m,n}(z) = -(1/2π) ∫ e^{-iuz} Q_m(u) φ_W(uh) du` by the trapezoid rule.
#[derive(Debug, Clone)]
pub struct SpectralKernels {
    grid: SpectralGrid,
    // -(1/2π) · w_k · φ_W(u_k h) · Q_m(u_k)
    coeffs: [Vec<Complex64>; 4],
}

impl SpectralKernels {
    pub fn new(q: [Vec<Complex64>; 4], grid: &SpectralGrid, smoothing: &SmoothingKernel) -> Result<Self> {
        if q.iter().any(|v| v.len() != grid.len()) {
            return Err(Error::domain("weight table does not match the grid"));
        }
        let h = grid.h();
        let scale: Vec<f64> = grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(k, &u)| -grid.weight(k) * smoothing.phi(u * h) / (2.0 * PI))
            .collect();
        let coeffs = q.map(|v| v.iter().zip(&scale).map(|(z, s)| z * s).collect());
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Plug-in kernels `K̂_{m,n}` built from a bundle.
    pub fn from_bundle(bundle: &EcfBundle, alpha: f64, smoothing: &SmoothingKernel) -> Result<Self> {
        Self::new(bundle.q_table(alpha)?, &bundle.grid, smoothing)
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    /// One pass over the grid per point.
    pub fn eval_many(&self, m: usize, zs: &[f64]) -> Vec<Complex64> {
        zs.iter().map(|&z| fourier_sum(&self.coeffs[m], &self.grid, z)).collect()
    }
}

impl InfluenceKernels for SpectralKernels {
    fn kernel(&self, m: usize, z: f64) -> Complex64 {
        fourier_sum(&self.coeffs[m], &self.grid, z)
    }

    fn influence(&self, x: f64, datum: f64) -> Complex64 {
        self.influence_row(datum, &[x])[0]
    }

    fn influence_row(&self, datum: f64, xs: &[f64]) -> Vec<Complex64> {
        let id = I * datum;
        let powers = [Complex64::new(1.0, 0.0), id, id * id, id * id * id];
        let fused: Vec<Complex64> = (0..self.grid.len())
            .map(|k| (0..4).map(|m| self.coeffs[m][k] * powers[m]).sum())
            .collect();
        xs.iter()
            .map(|&x| fourier_sum(&fused, &self.grid, x - datum))
            .collect()
    }
}

/// `K_{m,n}(z)` for a single point and a given weight table.
pub fn spectral_kernel_k(
    m: usize,
    z: f64,
    grid: &SpectralGrid,
    q: &[Vec<Complex64>; 4],
    smoothing: &SmoothingKernel,
) -> Result<Complex64> {
    if m > 3 {
        return Err(Error::domain(format!("kernel order must be 0..=3, got {m}")));
    }
    Ok(SpectralKernels::new(q.clone(), grid, smoothing)?.kernel(m, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flat_top_values() {
        assert_eq!(flat_top_phi(0.0, 0.5), 1.0);
        assert_eq!(flat_top_phi(1.0, 0.5), 0.0);
        assert_eq!(flat_top_phi(-1.2, 0.5), 0.0);
        assert_abs_diff_eq!(flat_top_phi(0.75, 0.5), 0.5, epsilon = 1e-15);
        assert_eq!(flat_top_phi(-0.3, 0.5), flat_top_phi(0.3, 0.5));
        // Flat to first order at both ends of the bridge.
        let eps = 1e-5;
        assert!((flat_top_phi(1.0 - eps, 0.5) / eps).abs() < 1e-6);
        assert!(((1.0 - flat_top_phi(0.5 + eps, 0.5)) / eps).abs() < 1e-6);
        assert!(SmoothingKernel::flat_top(1.0).is_err());
    }

    #[test]
    fn grid_is_symmetric_with_zero_node() {
        let g = SpectralGrid::new(0.2, 101).unwrap();
        assert_eq!(g.nodes()[g.mid()], 0.0);
        for j in 0..=g.mid() {
            assert_eq!(g.nodes()[g.mid() + j], -g.nodes()[g.mid() - j]);
        }
        assert_abs_diff_eq!(g.nodes()[100], 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.spacing(), 2.0 / (0.2 * 100.0), epsilon = 1e-15);
        assert!(SpectralGrid::new(0.2, 100).is_err());
        assert!(SpectralGrid::new(0.0, 101).is_err());
    }

    #[test]
    fn ecf_examples() {
        assert_eq!(ecf(&[0.3, -2.0], 0.0, 0), Complex64::new(1.0, 0.0));
        let u = 0.8;
        assert!((ecf(&[2.0], u, 0) - Complex64::new(0.0, 2.0 * u).exp()).norm() < 1e-15);
        let data = [-1.0, 0.0, 1.0];
        let u = PI / 2.0;
        let manual = (I * -1.0 * Complex64::new(0.0, -u).exp() + I * 1.0 * Complex64::new(0.0, u).exp()) / 3.0;
        assert!((ecf(&data, u, 1) - manual).norm() < 1e-15);
        // i(-e^{-iπ/2} + e^{iπ/2})/3 = i(2i)/3 = -2/3.
        assert!((ecf(&data, u, 1) - Complex64::new(-2.0 / 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn grouped_ecf_matches_direct_sums() {
        let data = ObservationSeries::new(vec![0.05, 0.05, 1.7, -0.4, 0.05, 3.2, 1.7], 0.01).unwrap();
        let grid = SpectralGrid::new(0.5, 257).unwrap();
        let cf = empirical_cf(&data.distinct(), data.len(), &grid);
        for (k, &u) in grid.nodes().iter().enumerate().step_by(17) {
            for m in 0..4 {
                let direct = ecf(&data.increments, u, m);
                assert!((cf[m][k] - direct).norm() < 1e-13, "m={m} u={u}");
            }
        }
    }

    #[test]
    fn degenerate_data_have_linear_exponent() {
        let cval = 0.37;
        let delta = 0.05;
        let data = ObservationSeries::new(vec![cval; 20], delta).unwrap();
        let grid = SpectralGrid::new(0.3, 129).unwrap();
        let b = EcfBundle::empirical(&data, &grid).unwrap();
        for (k, &u) in grid.nodes().iter().enumerate() {
            assert!((b.exponent[0][k] - I * (cval * u / delta)).norm() < 1e-10);
            assert!(b.exponent[2][k].norm() < 1e-9);
            assert!(b.exponent[3][k].norm() < 1e-9);
        }
        assert_eq!(b.exponent[0][grid.mid()], Complex64::new(0.0, 0.0));
        assert_eq!(b.cf[0][grid.mid()], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn second_log_derivative_at_zero_is_minus_sample_variance() {
        let xs: Vec<f64> = (0..200).map(|j| ((j * 37 % 101) as f64 / 50.0 - 1.0).powi(3)).collect();
        let delta = 0.02;
        let data = ObservationSeries::new(xs.clone(), delta).unwrap();
        let grid = SpectralGrid::new(0.4, 65).unwrap();
        let b = EcfBundle::empirical(&data, &grid).unwrap();
        let n = xs.len() as f64;
        let m1 = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n;
        let d2 = b.exponent[2][grid.mid()];
        assert!((d2.re + (m2 - m1 * m1) / delta).abs() < 1e-10);
        assert!(d2.im.abs() < 1e-10);
    }

    #[test]
    fn floor_violation_names_the_frequency() {
        // Symmetric ±1 data: Φ̂(u) = cos(u) vanishes at π/2.
        let data = ObservationSeries::new(vec![-1.0, 1.0], 0.1).unwrap();
        let grid = SpectralGrid::new(0.5, 101).unwrap();
        match EcfBundle::empirical(&data, &grid) {
            Err(Error::BandwidthTooSmall { u, .. }) => assert!((u.abs() - PI / 2.0).abs() < 0.1),
            other => panic!("expected BandwidthTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn q_weight_examples() {
        let alpha = 0.6;
        let q = q_weights(0.0, [Complex64::new(1.0, 0.0), I * 0.3, Complex64::new(-0.2, 0.0), I * -0.1], alpha).unwrap();
        assert_eq!(q[3], Complex64::new(0.0, 0.0));
        assert_abs_diff_eq!(q[2].re, (2.0 - alpha) / 2.0, epsilon = 1e-15);
        let phi = Complex64::from_polar(0.9, 0.4);
        let q = q_weights_from_exponent(1.3, phi, [Complex64::new(0.0, 0.0); 3], 0.01, alpha).unwrap();
        assert_eq!(q[0], Complex64::new(0.0, 0.0));
        assert!(q_weights(1.0, [Complex64::new(0.01, 0.0), I, I, I], alpha).is_err());
    }

    #[test]
    fn both_forms_of_the_weights_agree() {
        let delta = 0.03;
        let alpha = 0.7;
        // Exponent derivatives at some u; build Φ-derivatives from them.
        let psi = Complex64::new(-0.8, 2.3);
        let d1 = Complex64::new(0.4, 1.9);
        let d2 = Complex64::new(-1.2, 0.35);
        let d3 = Complex64::new(0.6, -0.9);
        let phi = (psi * delta).exp();
        let a = d1 * delta;
        let cf = [
            phi,
            a * phi,
            (d2 * delta + a * a) * phi,
            (d3 * delta + a * d2 * delta * 3.0 + a * a * a) * phi,
        ];
        for &u in &[-4.0, 0.5, 7.5] {
            let p = q_weights(u, cf, alpha).unwrap();
            let e = q_weights_from_exponent(u, phi, [d1, d2, d3], delta, alpha).unwrap();
            for m in 0..4 {
                assert!((p[m] - e[m]).norm() < 1e-12 * (1.0 + e[m].norm()), "m={m}");
            }
        }
    }

    #[test]
    fn weights_annihilate_the_cf_itself() {
        // Σ_m Q_m Φ^{(m)} = 0: the linearisation is homogeneous of degree 0.
        let cf = [
            Complex64::from_polar(0.8, 0.3),
            Complex64::new(0.1, 0.5),
            Complex64::new(-0.7, 0.2),
            Complex64::new(0.05, -0.4),
        ];
        let q = q_weights(2.2, cf, 0.45).unwrap();
        let s: Complex64 = (0..4).map(|m| q[m] * cf[m]).sum();
        assert!(s.norm() < 1e-14);
    }

    #[test]
    fn fourier_sum_matches_direct_evaluation() {
        let grid = SpectralGrid::new(0.1, 1025).unwrap();
        let coeffs: Vec<Complex64> = grid
            .nodes()
            .iter()
            .map(|&u| Complex64::new((0.1 * u).cos(), 0.2 * u.sin()))
            .collect();
        for &z in &[0.0, 1.3, -7.7, 42.0] {
            let direct: Complex64 = coeffs
                .iter()
                .zip(grid.nodes())
                .map(|(c, &u)| c * Complex64::new(0.0, -u * z).exp())
                .sum();
            assert!((fourier_sum(&coeffs, &grid, z) - direct).norm() < 1e-10);
        }
    }

    #[test]
    fn constant_weights_give_the_smoothing_kernel() {
        // Q ≡ -1 turns K_0 into the inverse transform of φ_W(uh), i.e. W_h.
        let grid = SpectralGrid::new(0.5, 2049).unwrap();
        let q: [Vec<Complex64>; 4] = std::array::from_fn(|_| vec![Complex64::new(-1.0, 0.0); 2049]);
        let k = SpectralKernels::new(q, &grid, &SmoothingKernel::default()).unwrap();
        // ∫φ_W(t)dt over [-1, 1] is 2(c + (1-c)/2) = 1.5 for c = 1/2.
        let at_zero = k.kernel(0, 0.0);
        assert!((at_zero.re - 1.5 / (2.0 * PI * 0.5)).abs() < 1e-6);
        assert!(at_zero.im.abs() < 1e-14);
    }
}

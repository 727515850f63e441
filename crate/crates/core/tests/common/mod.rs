#![allow(dead_code)]

use std::f64::consts::PI;

use levyband::simulate::{simulate_oracle_increments, ObservationSeries, SamplingScheme};
use levyband::{LevyTriplet, MAKernel};

/// Composite Simpson rule with `intervals` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(intervals.is_multiple_of(2));
    let step = (b - a) / intervals as f64;
    let mut sum = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * step);
    }
    sum * step / 3.0
}

/// Same bridge as the library's flat top, written out independently.
pub fn phi_flat_top(t: f64, c: f64) -> f64 {
    let a = t.abs();
    if a <= c {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        let s = (a - c) / (1.0 - c);
        1.0 - (10.0 * s.powi(3) - 15.0 * s.powi(4) + 6.0 * s.powi(5))
    }
}

/// `W(v) = (1/π) ∫_0^1 cos(tv) φ(t) dt`, flat part in closed form.
pub fn smoothing_kernel(v: f64, c: f64) -> f64 {
    let flat = if v == 0.0 { c } else { (c * v).sin() / v };
    let bridge = simpson(|t| (t * v).cos() * phi_flat_top(t, c), c, 1.0, 4000);
    (flat + bridge) / PI
}

/// `(ρ ∗ W_h)(x)` for `ρ(y) = λ y² e^{-y}` on `y > 0`, by direct convolution
/// on a lattice of step `step` that contains every `x`.
pub struct ConvolutionOracle {
    h: f64,
    step: f64,
    lambda: f64,
    /// `W_h(v_k)` for `v_k = v_min + k·step`.
    table: Vec<f64>,
    v_min: f64,
}

impl ConvolutionOracle {
    pub fn new(h: f64, lambda: f64, x_max: f64) -> Self {
        let step = 0.0025;
        let y_max = 40.0;
        let v_min = -y_max;
        let count = ((x_max - v_min) / step).round() as usize + 1;
        let table = (0..count)
            .map(|k| smoothing_kernel((v_min + k as f64 * step) / h, 0.5) / h)
            .collect();
        Self {
            h,
            step,
            lambda,
            table,
            v_min,
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn eval(&self, x: f64) -> f64 {
        // y = x - v runs over [0, 40]; Simpson over that lattice.
        let k_hi = ((x - self.v_min) / self.step).round() as usize;
        let panels = (40.0 / self.step).round() as usize;
        let mut sum = 0.0;
        for i in 0..=panels {
            let y = i as f64 * self.step;
            let w = if i == 0 || i == panels {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            sum += w * self.lambda * y * y * (-y).exp() * self.table[k_hi - i];
        }
        sum * self.step / 3.0
    }
}

pub fn default_model() -> LevyTriplet {
    LevyTriplet::simulation_default()
}

pub fn limit_data(alpha: f64, n: usize, delta: f64, seed: u64) -> ObservationSeries {
    let kernel = MAKernel::new(alpha).unwrap();
    let scheme = SamplingScheme::new(delta, n, seed).unwrap();
    simulate_oracle_increments(&default_model(), &kernel, &scheme).unwrap()
}

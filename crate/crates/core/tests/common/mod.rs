#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whitham_core::{GevreyParams, Grid1D, SpectralField};

/// Random real field with modes `|j| <= band` decaying like `e^{-0.3 |j|}`.
pub fn random_field(grid: Grid1D, band: usize, rng: &mut ChaCha8Rng) -> SpectralField {
    let mean: f64 = rng.gen_range(-1.0..1.0);
    let terms: Vec<(f64, f64)> = (1..=band)
        .map(|j| {
            let w = (-0.3 * j as f64).exp();
            (w * rng.gen_range(-1.0..1.0), w * rng.gen_range(-1.0..1.0))
        })
        .collect();
    SpectralField::from_fn(grid, move |x| {
        mean + terms
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let j = (i + 1) as f64;
                a * (j * x).cos() + b * (j * x).sin()
            })
            .sum::<f64>()
    })
}

pub fn algebra_ratio(u: &SpectralField, v: &SpectralField, g: GevreyParams) -> f64 {
    u.mul(v).gevrey_norm(g).unwrap() / (u.gevrey_norm(g).unwrap() * v.gevrey_norm(g).unwrap())
}

/// Largest product ratio over `trials` random pairs at each sigma.
pub fn algebra_constants(m: f64, sigmas: &[f64], trials: usize, seed: u64) -> Vec<f64> {
    let grid = Grid1D::new(64, 2.0 * PI).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(SpectralField, SpectralField)> = (0..trials)
        .map(|_| (random_field(grid, 12, &mut rng), random_field(grid, 12, &mut rng)))
        .collect();
    sigmas
        .iter()
        .map(|&sigma| {
            let g = GevreyParams::new(sigma, m).unwrap();
            pairs.iter().map(|(u, v)| algebra_ratio(u, v, g)).fold(0.0, f64::max)
        })
        .collect()
}

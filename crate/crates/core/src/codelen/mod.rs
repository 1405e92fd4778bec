//! Code-length primitives shared by the generators and estimators.
//!
//! Values live on a lattice `λ·ℤ`. Discrete Gaussian surrogates are symmetric
//! Skellam distributions whose Poisson rates are `σ²/(2λ²)`, which gives a
//! lattice variable with mean 0 and standard deviation `σ` in real units.

pub mod skellam;

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Quantization lattice with spacing `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    spacing: f64,
}

impl Lattice {
    pub fn new(spacing: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::param(format!("lattice spacing must be positive, got {spacing}")));
        }
        Ok(Self { spacing })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn value(&self, index: i64) -> f64 {
        index as f64 * self.spacing
    }

    /// Nearest lattice index to `value`.
    pub fn nearest_index(&self, value: f64) -> Result<i64> {
        let scaled = (value / self.spacing).round();
        // Indices must stay exactly representable in an f64.
        if !scaled.is_finite() || scaled.abs() > 9.0e15 {
            return Err(Error::NumericalRange(format!(
                "value {value} does not fit the lattice of spacing {}",
                self.spacing
            )));
        }
        Ok(scaled as i64)
    }

    /// Lattice index of a value that must already lie on the lattice.
    pub fn exact_index(&self, value: f64) -> Result<i64> {
        let k = self.nearest_index(value)?;
        let tol = 1e-6 * self.spacing.max(value.abs() * 1e-9);
        if (self.value(k) - value).abs() > tol.max(1e-9 * self.spacing) {
            return Err(Error::contract(format!(
                "value {value} is off the lattice of spacing {}",
                self.spacing
            )));
        }
        Ok(k)
    }
}

/// Zero-mean Skellam surrogate of `N(0, σ²)` on a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkellamParams {
    std: f64,
    lattice: Lattice,
}

impl SkellamParams {
    pub fn new(std: f64, lattice: Lattice) -> Result<Self> {
        if !(std.is_finite() && std > 0.0) {
            return Err(Error::param(format!("Skellam std must be positive, got {std}")));
        }
        Ok(Self { std, lattice })
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    /// Rate of each of the two Poisson components, `σ²/(2λ²)`.
    pub fn rate(&self) -> f64 {
        let ratio = self.std / self.lattice.spacing;
        0.5 * ratio * ratio
    }
}

/// Row-major matrix of lattice indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
    lattice: Lattice,
}

impl QuantizedMatrix {
    pub fn zeros(rows: usize, cols: usize, lattice: Lattice) -> Self {
        Self { rows, cols, data: vec![0; rows * cols], lattice }
    }

    pub fn from_indices(rows: usize, cols: usize, data: Vec<i64>, lattice: Lattice) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::contract(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data, lattice })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn indices(&self) -> &[i64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[i64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [i64] {
        &mut self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Real values `index·λ`, row-major.
    pub fn to_real(&self) -> Vec<f64> {
        self.data.iter().map(|&k| self.lattice.value(k)).collect()
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_slice(&self, start: usize, end: usize) -> QuantizedMatrix {
        QuantizedMatrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
            lattice: self.lattice,
        }
    }

    fn check_compatible(&self, other: &QuantizedMatrix) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::contract("matrices live on different lattices"));
        }
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::contract(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// Elementwise `self + other`.
    pub fn add(&self, other: &QuantizedMatrix) -> Result<QuantizedMatrix> {
        self.check_compatible(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(QuantizedMatrix { data, ..self.clone() })
    }

    /// Elementwise `self - other`.
    pub fn sub(&self, other: &QuantizedMatrix) -> Result<QuantizedMatrix> {
        self.check_compatible(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(QuantizedMatrix { data, ..self.clone() })
    }

    /// Copy with rows reordered so that row `i` is `self.row(order[i])`.
    pub fn permute_rows(&self, order: &[usize]) -> QuantizedMatrix {
        let mut data = Vec::with_capacity(order.len() * self.cols);
        for &r in order {
            data.extend_from_slice(self.row(r));
        }
        QuantizedMatrix { rows: order.len(), cols: self.cols, data, lattice: self.lattice }
    }
}

/// Bits to code lattice index `k` under Skellam(0, σ, λ).
pub fn skellam_bits(k: i64, params: &SkellamParams) -> Result<f64> {
    let ln_p = skellam::ln_pmf(k.unsigned_abs(), params.rate());
    if !ln_p.is_finite() || ln_p > 1e-12 {
        return Err(Error::NumericalRange(format!(
            "Skellam log-probability {ln_p} at k={k} with rate {} (lattice too fine for this evaluation)",
            params.rate()
        )));
    }
    Ok(-ln_p / LN_2)
}

/// Skellam code with a per-index cache, for coding many values.
#[derive(Debug, Clone)]
pub struct SkellamCoder {
    params: SkellamParams,
    cache: HashMap<u64, f64>,
}

impl SkellamCoder {
    pub fn new(params: SkellamParams) -> Self {
        Self { params, cache: HashMap::new() }
    }

    pub fn params(&self) -> &SkellamParams {
        &self.params
    }

    pub fn bits(&mut self, k: i64) -> Result<f64> {
        let key = k.unsigned_abs();
        if let Some(&b) = self.cache.get(&key) {
            return Ok(b);
        }
        let b = skellam_bits(k, &self.params)?;
        self.cache.insert(key, b);
        Ok(b)
    }

    /// Sum of code lengths over `indices`.
    pub fn total(&mut self, indices: &[i64]) -> Result<f64> {
        let mut sum = 0.0;
        for &k in indices {
            sum += self.bits(k)?;
        }
        Ok(sum)
    }
}

/// Draws `count` i.i.d. Skellam lattice indices from `rng`.
pub fn sample_indices<R: Rng + ?Sized>(rng: &mut R, params: &SkellamParams, count: usize) -> Vec<i64> {
    let poisson = Poisson::new(params.rate()).expect("rate validated positive");
    (0..count)
        .map(|_| {
            let a: f64 = poisson.sample(rng);
            let b: f64 = poisson.sample(rng);
            a as i64 - b as i64
        })
        .collect()
}

/// A `rows × cols` matrix of i.i.d. Skellam(0, σ, λ) draws.
pub fn skellam_sample(params: &SkellamParams, rows: usize, cols: usize, seed: u64) -> Result<QuantizedMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::param(format!("sample shape must be nonempty, got {rows}x{cols}")));
    }
    let mut rng = rng::stream(seed, &[rng::tag::SAMPLE]);
    let data = sample_indices(&mut rng, params, rows * cols);
    QuantizedMatrix::from_indices(rows, cols, data, params.lattice())
}

/// Total Skellam code length of every entry of `data`.
pub fn total_code_length(data: &QuantizedMatrix, params: &SkellamParams) -> Result<f64> {
    if data.lattice() != params.lattice() {
        return Err(Error::contract(format!(
            "data lattice {} differs from code lattice {}",
            data.lattice().spacing(),
            params.lattice().spacing()
        )));
    }
    SkellamCoder::new(*params).total(data.indices())
}

/// Expected code length per value (entropy in bits) of Skellam(0, σ, λ).
pub fn skellam_entropy_bits(params: &SkellamParams) -> Result<f64> {
    let width = (14.0 * params.std() / params.lattice().spacing()).ceil() as i64 + 12;
    let mut coder = SkellamCoder::new(*params);
    let mut h = coder.bits(0)? * (-coder.bits(0)? * LN_2).exp();
    for k in 1..=width {
        let b = coder.bits(k)?;
        h += 2.0 * b * (-b * LN_2).exp();
    }
    Ok(h)
}

/// Bits for one real value under a Gaussian density times the bin width.
pub fn gaussian_bin_bits(value: f64, mean: f64, std: f64, spacing: f64) -> f64 {
    let u = (value - mean) / std;
    (0.5 * u * u + std.ln() + 0.5 * (2.0 * PI).ln() - spacing.ln()) / LN_2
}

/// `Σ_d -log₂[N(z_d·λ; mean_d, std_d)·λ]`.
pub fn discretized_gaussian_nll_bits(z: &[i64], mean: &[f64], std: &[f64], lattice: Lattice) -> Result<f64> {
    if z.len() != mean.len() || z.len() != std.len() {
        return Err(Error::contract(format!(
            "length mismatch: z={}, mean={}, std={}",
            z.len(),
            mean.len(),
            std.len()
        )));
    }
    let mut bits = 0.0;
    for ((&k, &m), &s) in z.iter().zip(mean).zip(std) {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::contract(format!("std must be positive, got {s}")));
        }
        bits += gaussian_bin_bits(lattice.value(k), m, s, lattice.spacing());
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(std: f64, spacing: f64) -> SkellamParams {
        SkellamParams::new(std, Lattice::new(spacing).unwrap()).unwrap()
    }

    /// P(k) = Σ_j Pois(j) Pois(j+|k|) summed naively in probability space.
    fn poisson_convolution(k: i64, rate: f64) -> f64 {
        let pois = |n: u64| -> f64 {
            let mut p = (-rate).exp();
            for i in 1..=n {
                p *= rate / i as f64;
            }
            p
        };
        let n = k.unsigned_abs();
        (0..200u64).map(|j| pois(j) * pois(j + n)).sum()
    }

    #[test]
    fn symmetric_bit_for_bit() {
        for (s, l) in [(1.0, 0.01), (0.01, 0.01), (0.3, 0.1), (2.0, 0.05)] {
            let p = params(s, l);
            for k in 0..60 {
                assert_eq!(skellam_bits(k, &p).unwrap().to_bits(), skellam_bits(-k, &p).unwrap().to_bits());
            }
        }
    }

    #[test]
    fn unit_rate_matches_double_sum_oracle() {
        let p = params(0.01, 0.01);
        assert!((p.rate() - 0.5).abs() < 1e-15);
        for k in -20..=20 {
            let expected = poisson_convolution(k, 0.5);
            let got = (-skellam_bits(k, &p).unwrap() * LN_2).exp();
            assert!((got - expected).abs() < 1e-9, "k={k}: {got} vs {expected}");
        }
    }

    #[test]
    fn normalization() {
        for ratio in [1.0, 10.0, 100.0] {
            let p = params(ratio * 0.01, 0.01);
            let w = (10.0 * ratio) as i64;
            let mass: f64 = (-w..=w).map(|k| (-skellam_bits(k, &p).unwrap() * LN_2).exp()).sum();
            assert!((mass - 1.0).abs() < 1e-6, "σ/λ={ratio}: mass {mass}");
        }
    }

    #[test]
    fn sample_is_deterministic_and_validated() {
        let p = params(1.0, 0.1);
        assert_eq!(skellam_sample(&p, 3, 4, 9).unwrap(), skellam_sample(&p, 3, 4, 9).unwrap());
        assert_ne!(skellam_sample(&p, 3, 4, 9).unwrap(), skellam_sample(&p, 3, 4, 10).unwrap());
        assert!(SkellamParams::new(0.0, Lattice::new(0.01).unwrap()).is_err());
        assert!(skellam_sample(&p, 0, 4, 0).is_err());
    }

    #[test]
    fn sample_variance_matches_std() {
        let p = params(1.0, 0.01);
        let m = skellam_sample(&p, 1000, 1000, 3).unwrap();
        let vals = m.to_real();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((0.99..=1.01).contains(&var), "variance {var}");
    }

    #[test]
    fn total_code_length_cases() {
        let lat = Lattice::new(0.01).unwrap();
        let p = SkellamParams::new(0.01, lat).unwrap();
        let empty = QuantizedMatrix::zeros(0, 5, lat);
        assert_eq!(total_code_length(&empty, &p).unwrap(), 0.0);

        let single = QuantizedMatrix::zeros(1, 1, lat);
        let oracle = -poisson_convolution(0, 0.5).log2();
        assert!((total_code_length(&single, &p).unwrap() - oracle).abs() < 1e-9);

        let zeros = QuantizedMatrix::zeros(7, 3, lat);
        let b0 = skellam_bits(0, &p).unwrap();
        assert!((total_code_length(&zeros, &p).unwrap() - 21.0 * b0).abs() < 1e-12);

        let other = SkellamParams::new(0.01, Lattice::new(0.02).unwrap()).unwrap();
        assert!(matches!(total_code_length(&zeros, &other), Err(Error::Contract(_))));
    }

    #[test]
    fn sampled_data_has_positive_length() {
        let p = params(1.0, 0.01);
        let m = skellam_sample(&p, 20, 20, 1).unwrap();
        assert!(total_code_length(&m, &p).unwrap() > 0.0);
    }

    #[test]
    fn gaussian_mode_cost() {
        let lat = Lattice::new(0.01).unwrap();
        let b = discretized_gaussian_nll_bits(&[5], &[0.05], &[0.01], lat).unwrap();
        assert!((b - (2.0 * PI).sqrt().log2()).abs() < 1e-12);
        assert!((b - 1.3257).abs() < 1e-4);
    }

    #[test]
    fn gaussian_cost_grows_with_distance() {
        let lat = Lattice::new(0.01).unwrap();
        let at = |k| discretized_gaussian_nll_bits(&[k], &[0.0], &[0.1], lat).unwrap();
        assert!(at(0) < at(10));
        assert!(at(10) < at(20));
        assert!(matches!(
            discretized_gaussian_nll_bits(&[0], &[0.0], &[0.0], lat),
            Err(Error::Contract(_))
        ));
        assert!(discretized_gaussian_nll_bits(&[0, 1], &[0.0], &[1.0], lat).is_err());
    }

    #[test]
    fn density_times_width_tracks_bin_mass() {
        // Exact bin mass by Simpson integration of the density over the bin.
        let lat = Lattice::new(0.01).unwrap();
        for std in [0.1, 0.5, 2.0] {
            for k in [-300i64, -40, -3, 0, 7, 55, 180] {
                let z = lat.value(k);
                if ((z - 0.2) / std).abs() > 6.0 {
                    continue;
                }
                let density = |x: f64| (-(x - 0.2).powi(2) / (2.0 * std * std)).exp() / (std * (2.0 * PI).sqrt());
                let (a, b) = (z - 0.005, z + 0.005);
                let n = 64;
                let h = (b - a) / n as f64;
                let mut mass = density(a) + density(b);
                for i in 1..n {
                    let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                    mass += w * density(a + i as f64 * h);
                }
                mass *= h / 3.0;
                let exact = -mass.log2();
                let approx = discretized_gaussian_nll_bits(&[k], &[0.2], &[std], lat).unwrap();
                // midpoint-rule error of the density approximation
                let u = (z - 0.2) / std;
                let tol = 1e-6 + 1.5 * (0.01f64.powi(2) / 24.0) * ((u * u - 1.0) / (std * std)).abs() / 2f64.ln();
                assert!((exact - approx).abs() < tol, "std={std} k={k}: {exact} vs {approx}");
            }
        }
    }

    #[test]
    fn entropy_of_unit_lattice_noise() {
        let p = params(0.01, 0.01);
        let h = skellam_entropy_bits(&p).unwrap();
        // discretized N(0, λ²) has entropy ≈ ½log₂(2πe) ≈ 2.047
        assert!((h - 2.0).abs() < 0.1, "{h}");
    }
}

//! Compositionality ratios and the topological-similarity baseline.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::tokens::TokenMatrix;

/// The four code lengths (bits) of a two-part program for `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityBreakdown {
    /// Language `p_w`.
    pub k_pw: f64,
    /// Sentences coded under the language.
    pub k_w_given_pw: f64,
    /// Semantics `f`.
    pub k_f: f64,
    /// Corrections of `f(W)` towards `Z`.
    pub k_z_given_wf: f64,
}

impl ComplexityBreakdown {
    pub fn new(k_pw: f64, k_w_given_pw: f64, k_f: f64, k_z_given_wf: f64) -> Result<Self> {
        let b = Self { k_pw, k_w_given_pw, k_f, k_z_given_wf };
        for (name, v) in b.terms() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::contract(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(b)
    }

    pub fn terms(&self) -> [(&'static str, f64); 4] {
        [
            ("k_pw", self.k_pw),
            ("k_w_given_pw", self.k_w_given_pw),
            ("k_f", self.k_f),
            ("k_z_given_wf", self.k_z_given_wf),
        ]
    }

    /// `K(Z)`: all four terms.
    pub fn total(&self) -> f64 {
        self.k_pw + self.k_w_given_pw + self.k_f + self.k_z_given_wf
    }

    /// `K(Z|W)`: semantics plus corrections.
    pub fn conditional(&self) -> f64 {
        self.k_f + self.k_z_given_wf
    }
}

/// `C(Z) = K(Z) / K(Z|W)`.
pub fn compositionality(b: &ComplexityBreakdown) -> Result<f64> {
    let den = b.conditional();
    if den <= 0.0 {
        return Err(Error::Degenerate("K(f) + K(Z|W,f) is zero (noiseless, ruleless program)".into()));
    }
    Ok(b.total() / den)
}

/// `C^L(Z) = K(Z) / K(Z|W^L)`.
pub fn language_compositionality(k_z: f64, k_z_given_w: f64) -> Result<f64> {
    if !(k_z_given_w > 0.0 && k_z_given_w.is_finite()) {
        return Err(Error::Degenerate(format!("K(Z|W) must be positive, got {k_z_given_w}")));
    }
    Ok(k_z / k_z_given_w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SentenceMetric {
    #[default]
    Hamming,
    /// Levenshtein distance divided by the longer length.
    NormalizedEdit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RepresentationMetric {
    #[default]
    Euclidean,
    SquaredEuclidean,
    CosineDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct DistanceConfig {
    pub sentence: SentenceMetric,
    pub representation: RepresentationMetric,
}

/// Pairs above which topological similarity subsamples.
pub const DEFAULT_MAX_PAIRS: usize = 2_000_000;

impl SentenceMetric {
    pub fn distance(&self, a: &[u32], b: &[u32]) -> f64 {
        match self {
            SentenceMetric::Hamming => {
                let diff = a.iter().zip(b).filter(|(x, y)| x != y).count();
                (diff + a.len().abs_diff(b.len())) as f64
            }
            SentenceMetric::NormalizedEdit => {
                let longest = a.len().max(b.len());
                if longest == 0 {
                    return 0.0;
                }
                levenshtein(a, b) as f64 / longest as f64
            }
        }
    }
}

fn levenshtein(a: &[u32], b: &[u32]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

impl RepresentationMetric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            RepresentationMetric::Euclidean => sq_dist(a, b).sqrt(),
            RepresentationMetric::SquaredEuclidean => sq_dist(a, b),
            RepresentationMetric::CosineDistance => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if na == 0.0 || nb == 0.0 {
                    return if na == nb { 0.0 } else { 1.0 };
                }
                (1.0 - dot / (na * nb)).max(0.0)
            }
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Pearson correlation of two equally long samples.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::contract(format!("need two samples of equal length >= 2, got {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::UndefinedCorrelation("a distance list has zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Row pairs `(i, j)` with `i < j`: all of them, or `max_pairs` uniform draws.
fn pair_list(n: usize, max_pairs: usize, seed: u64) -> Vec<(usize, usize)> {
    let total = n * (n - 1) / 2;
    if total <= max_pairs {
        let mut pairs = Vec::with_capacity(total);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i, j));
            }
        }
        return pairs;
    }
    let mut rng = rng::stream(seed, &[rng::tag::PAIRS]);
    (0..max_pairs)
        .map(|_| loop {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j {
                break (i.min(j), i.max(j));
            }
        })
        .collect()
}

/// Pearson correlation between pairwise sentence distances and pairwise
/// representation distances. `z` is row-major with one row per sentence.
pub fn topological_similarity(
    w: &TokenMatrix,
    z: &[f64],
    cfg: &DistanceConfig,
    max_pairs: usize,
    seed: u64,
) -> Result<f64> {
    let n = w.rows();
    if n < 2 {
        return Err(Error::contract("topological similarity needs at least two rows"));
    }
    if z.len() % n != 0 {
        return Err(Error::contract(format!("{} representation values do not split into {n} rows", z.len())));
    }
    let dim = z.len() / n;
    let pairs = pair_list(n, max_pairs.max(1), seed);
    let (ds, dz): (Vec<f64>, Vec<f64>) = pairs
        .par_iter()
        .map(|&(i, j)| {
            (
                cfg.sentence.distance(w.row(i), w.row(j)),
                cfg.representation.distance(&z[i * dim..(i + 1) * dim], &z[j * dim..(j + 1) * dim]),
            )
        })
        .unzip();
    pearson(&ds, &dz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn compositionality_arithmetic() {
        let b = ComplexityBreakdown::new(0.0, 0.0, 10.0, 5.0).unwrap();
        assert_eq!(compositionality(&b).unwrap(), 1.0);
        let b = ComplexityBreakdown::new(1.0, 99.0, 10.0, 90.0).unwrap();
        assert_eq!(compositionality(&b).unwrap(), 2.0);
        let b = ComplexityBreakdown::new(3.0, 4.0, 0.0, 0.0).unwrap();
        assert!(matches!(compositionality(&b), Err(Error::Degenerate(_))));
        assert!(ComplexityBreakdown::new(-1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn language_compositionality_cases() {
        assert_eq!(language_compositionality(384.0, 384.0).unwrap(), 1.0);
        assert_eq!(language_compositionality(384.0, 192.0).unwrap(), 2.0);
        assert!(language_compositionality(1.0, 0.0).is_err());
    }

    #[test]
    fn metric_axioms() {
        let a = [1u32, 2, 3, 4];
        let b = [1u32, 3, 3, 0];
        for m in [SentenceMetric::Hamming, SentenceMetric::NormalizedEdit] {
            assert_eq!(m.distance(&a, &a), 0.0);
            assert_eq!(m.distance(&a, &b), m.distance(&b, &a));
            assert!(m.distance(&a, &b) > 0.0);
        }
        assert_eq!(SentenceMetric::Hamming.distance(&a, &b), 2.0);
        assert_eq!(levenshtein(&[1, 2, 3], &[2, 3]), 1);
        let x = [0.5, -1.0, 2.0];
        let y = [1.5, 1.0, 0.0];
        for m in [
            RepresentationMetric::Euclidean,
            RepresentationMetric::SquaredEuclidean,
            RepresentationMetric::CosineDistance,
        ] {
            assert!(m.distance(&x, &x).abs() < 1e-15);
            assert_eq!(m.distance(&x, &y), m.distance(&y, &x));
            assert!(m.distance(&x, &y) > 0.0);
        }
    }

    #[test]
    fn one_hot_concatenation_is_perfectly_topographic() {
        // Each token gets an orthogonal unit code; squared Euclidean distance is
        // then exactly twice the Hamming distance.
        let (n, m, k) = (40, 4, 5);
        let mut rng = rng::stream(1, &[0]);
        let data: Vec<u32> = (0..n * m).map(|_| rng.random_range(0..k as u32)).collect();
        let w = TokenMatrix::new(n, m, k, data).unwrap();
        let mut z = vec![0.0; n * m * k];
        for i in 0..n {
            for (p, &t) in w.row(i).iter().enumerate() {
                z[i * m * k + p * k + t as usize] = 1.0;
            }
        }
        let cfg = DistanceConfig { sentence: SentenceMetric::Hamming, representation: RepresentationMetric::SquaredEuclidean };
        let rho = topological_similarity(&w, &z, &cfg, DEFAULT_MAX_PAIRS, 0).unwrap();
        assert!((rho - 1.0).abs() < 1e-12, "{rho}");
    }

    #[test]
    fn constant_distances_are_undefined() {
        let w = TokenMatrix::new(3, 1, 2, vec![0, 0, 0]).unwrap();
        let z = vec![0.0, 1.0, 2.0];
        assert!(matches!(
            topological_similarity(&w, &z, &DistanceConfig::default(), 10, 0),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn subsampling_is_seeded() {
        let pairs_a = pair_list(100, 50, 3);
        let pairs_b = pair_list(100, 50, 3);
        assert_eq!(pairs_a, pairs_b);
        assert_eq!(pairs_a.len(), 50);
        assert!(pairs_a.iter().all(|&(i, j)| i < j && j < 100));
        assert_eq!(pair_list(10, 100, 0).len(), 45);
    }
}

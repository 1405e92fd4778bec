use proptest::prelude::*;
use repcomp::codelen::{self, skellam, Lattice, QuantizedMatrix, SkellamParams};
use repcomp::Error;

fn params(std: f64, spacing: f64) -> SkellamParams {
    SkellamParams::new(std, Lattice::new(spacing).unwrap()).unwrap()
}

#[test]
fn branches_agree_on_overlap() {
    let mut worst = 0.0f64;
    for ratio in [5.0, 7.5, 10.0, 20.0, 35.0, 50.0] {
        let p = params(ratio, 1.0);
        let rate = p.rate();
        let top = (6.0 * ratio) as u64;
        for n in 0..=top {
            let a = -skellam::ln_pmf_convolution(n, rate) / std::f64::consts::LN_2;
            let b = -skellam::ln_pmf_asymptotic(n, rate) / std::f64::consts::LN_2;
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst < 1e-6, "worst disagreement {worst} bits");
}

#[test]
fn large_rate_normalizes() {
    for ratio in [1.0, 10.0, 100.0] {
        let p = params(ratio * 0.01, 0.01);
        let span = (10.0 * ratio) as i64;
        let total: f64 = (-span..=span).map(|k| (-codelen::skellam_bits(k, &p).unwrap() * std::f64::consts::LN_2).exp()).sum();
        assert!((total - 1.0).abs() < 1e-6, "ratio {ratio}: {total}");
    }
}

#[test]
fn default_rate_is_finite_far_into_the_tail() {
    let p = params(1.0, 0.01);
    for k in [0, 1, 100, 500, 1000, 5000, 20000] {
        let b = codelen::skellam_bits(k, &p).unwrap();
        assert!(b.is_finite() && b > 0.0, "k={k}: {b}");
    }
}

#[test]
fn sample_shape_and_validation() {
    let p = params(1.0, 0.01);
    assert_eq!(codelen::skellam_sample(&p, 3, 4, 1).unwrap(), codelen::skellam_sample(&p, 3, 4, 1).unwrap());
    assert!(codelen::skellam_sample(&p, 0, 4, 1).is_err());
    assert!(matches!(SkellamParams::new(0.0, Lattice::new(0.01).unwrap()), Err(Error::InvalidParameter(_))));
}

proptest! {
    #[test]
    fn symmetric_bit_for_bit(k in 0i64..3000, ratio in 0.05f64..200.0) {
        let p = params(ratio * 0.01, 0.01);
        prop_assert_eq!(codelen::skellam_bits(k, &p).unwrap().to_bits(), codelen::skellam_bits(-k, &p).unwrap().to_bits());
    }

    #[test]
    fn additive_over_row_partitions(rows in 2usize..12, cols in 1usize..6, split in 1usize..11, seed in 0u64..1000) {
        let split = split.min(rows - 1);
        let p = params(0.3, 0.01);
        let z = codelen::skellam_sample(&p, rows, cols, seed).unwrap();
        let whole = codelen::total_code_length(&z, &p).unwrap();
        let a = codelen::total_code_length(&z.row_slice(0, split), &p).unwrap();
        let b = codelen::total_code_length(&z.row_slice(split, rows), &p).unwrap();
        prop_assert!((whole - a - b).abs() <= 1e-9 * whole.abs().max(1.0));
    }

    #[test]
    fn gaussian_cost_grows_away_from_mean(std in 0.05f64..5.0, a in 0.0f64..3.0, b in 0.0f64..3.0) {
        prop_assume!((a - b).abs() > 1e-3);
        let lat = Lattice::new(0.001).unwrap();
        let at = |u: f64| codelen::gaussian_bin_bits(lat.value(lat.nearest_index(u * std).unwrap()), 0.0, std, 0.001);
        let (near, far) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(at(near) <= at(far));
    }
}

#[test]
fn lattice_mismatch_is_a_contract_error() {
    let z = QuantizedMatrix::zeros(2, 2, Lattice::new(0.1).unwrap());
    assert!(matches!(codelen::total_code_length(&z, &params(1.0, 0.01)), Err(Error::Contract(_))));
}

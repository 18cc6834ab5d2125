//! Special functions and built-in laws checked against `statrs`.

#![allow(clippy::excessive_precision)]

use qstrat::special::{
    beta_inc, erfc, gamma_p, gamma_q, ln_gamma, std_normal_cdf, std_normal_quantile,
};
use qstrat::Distribution;
use statrs::distribution::{Beta, ContinuousCDF, Gamma, Normal};

#[test]
fn ln_gamma_matches() {
    for i in 1..400 {
        let x = i as f64 * 0.137;
        let ours = ln_gamma(x);
        let theirs = statrs::function::gamma::ln_gamma(x);
        assert!(
            (ours - theirs).abs() <= 1e-12 * theirs.abs().max(1.0),
            "x={x}"
        );
    }
}

#[test]
fn incomplete_beta_matches() {
    for &(a, b) in &[
        (2.0, 2.0),
        (3.0, 2.0),
        (0.5, 0.7),
        (1.0, 8.0),
        (5.0, 6.0),
        (30.0, 2.5),
    ] {
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            let ours = beta_inc(a, b, x);
            let theirs = statrs::function::beta::beta_reg(a, b, x);
            assert!(
                (ours - theirs).abs() < 1e-13,
                "a={a} b={b} x={x}: {ours} vs {theirs}"
            );
        }
    }
}

#[test]
fn incomplete_gamma_matches() {
    for &a in &[0.5, 1.0, 2.0, 3.7, 10.0, 45.0] {
        assert_eq!(gamma_p(a, 0.0), 0.0);
        for i in 1..=300 {
            let x = i as f64 * 0.25;
            let theirs = statrs::function::gamma::gamma_lr(a, x);
            assert!((gamma_p(a, x) - theirs).abs() < 1e-13, "a={a} x={x}");
            assert!(
                (gamma_q(a, x) - (1.0 - theirs)).abs() < 1e-13,
                "a={a} x={x}"
            );
        }
    }
}

// Upper tails from 40-digit mpmath.
#[test]
fn upper_incomplete_gamma_tail() {
    let cases = [
        (0.5, 40.0, 3.744_097_384_202_898_8e-19),
        (2.0, 30.0, 2.900_863_120_340_454_1e-12),
        (10.0, 60.0, 2.851_507_755_552_020_2e-16),
        (45.0, 90.0, 5.738_048_606_893_975e-8),
    ];
    for (a, x, q) in cases {
        assert!(
            ((gamma_q(a, x) - q) / q).abs() < 1e-12,
            "a={a} x={x}: {}",
            gamma_q(a, x)
        );
    }
}

#[test]
fn normal_functions_match() {
    let n = Normal::new(0.0, 1.0).unwrap();
    for i in -300..=300 {
        let z = i as f64 / 100.0;
        assert!(
            (std_normal_cdf(z) - n.cdf(z)).abs() <= 1e-9 * n.cdf(z),
            "z={z}"
        );
        assert!(
            (erfc(z) - statrs::function::erf::erfc(z)).abs() < 1e-10,
            "z={z}"
        );
    }
    for i in 1..1000 {
        let p = i as f64 / 1000.0;
        assert!(
            (std_normal_quantile(p) - n.inverse_cdf(p)).abs() < 1e-12,
            "p={p}"
        );
    }
}

// Tail values from 40-digit mpmath.
#[test]
fn normal_tails() {
    let cdf = [
        (-3.0, 1.349_898_031_630_094_5e-3),
        (0.5, 0.691_462_461_274_013_1),
        (-8.0, 6.220_960_574_271_784e-16),
        (-6.0, 9.865_876_450_376_981e-10),
        (-4.21, 1.276_853_441_373_495_4e-5),
        (-2.0, 0.022_750_131_948_179_207),
        (3.0, 0.998_650_101_968_369_9),
        (5.0, 0.999_999_713_348_428_1),
    ];
    for (z, c) in cdf {
        assert!(
            ((std_normal_cdf(z) - c) / c).abs() < 1e-13,
            "z={z}: {}",
            std_normal_cdf(z)
        );
    }
    let upper = [
        (-1.5, 1.966_105_146_475_310_7),
        (0.3, 0.671_373_240_540_872_6),
        (2.0, 0.004_677_734_981_047_266),
        (4.0, 1.541_725_790_028_002e-8),
        (6.0, 2.151_973_671_249_891_3e-17),
        (10.0, 2.088_487_583_762_544_8e-45),
    ];
    for (t, e) in upper {
        assert!(((erfc(t) - e) / e).abs() < 1e-13, "t={t}: {}", erfc(t));
    }
    for &p in &[1e-15, 1e-10, 1e-6] {
        let z = std_normal_quantile(p);
        assert!(((std_normal_cdf(z) - p) / p).abs() < 1e-12, "p={p}");
    }
}

#[test]
fn beta_and_gamma_quantiles_match() {
    for &(a, b) in &[(2.0, 2.0), (3.0, 2.0), (0.6, 1.4)] {
        let ours = Distribution::beta(a, b).unwrap();
        let theirs = Beta::new(a, b).unwrap();
        for i in 1..200 {
            let p = i as f64 / 200.0;
            let q = ours.quantile(p).unwrap();
            assert!((theirs.cdf(q) - p).abs() < 1e-11, "a={a} b={b} p={p}");
        }
    }
    for &(shape, rate) in &[(2.0, 5.0), (2.0, 6.0), (0.7, 1.0), (12.0, 0.3)] {
        let ours = Distribution::gamma(shape, rate).unwrap();
        let theirs = Gamma::new(shape, rate).unwrap();
        for i in 1..200 {
            let p = i as f64 / 200.0;
            let q = ours.quantile(p).unwrap();
            assert!(
                (theirs.cdf(q) - p).abs() < 1e-11,
                "shape={shape} rate={rate} p={p}"
            );
        }
    }
}

#[test]
fn densities_match() {
    use statrs::distribution::Continuous;
    type Density = Box<dyn Fn(f64) -> f64>;
    let pairs: Vec<(Distribution, Density)> = vec![
        (Distribution::beta(3.0, 2.0).unwrap(), {
            let d = Beta::new(3.0, 2.0).unwrap();
            Box::new(move |x| d.pdf(x))
        }),
        (Distribution::gamma(2.0, 6.0).unwrap(), {
            let d = Gamma::new(2.0, 6.0).unwrap();
            Box::new(move |x| d.pdf(x))
        }),
        (Distribution::normal(1.0, 2.0).unwrap(), {
            let d = Normal::new(1.0, 2.0).unwrap();
            Box::new(move |x| d.pdf(x))
        }),
    ];
    for (ours, theirs) in &pairs {
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let (a, b) = (ours.pdf(x), theirs(x));
            assert!((a - b).abs() <= 1e-12 * b.max(1.0), "{ours:?} x={x}");
        }
    }
}

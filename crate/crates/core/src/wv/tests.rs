use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn white(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect()
}

fn spiked(n: usize, seed: u64) -> Vec<f64> {
    let mut x = white(n, 1.0, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    let k = n / 100;
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
        x[idx[i]] = if rng.random::<bool>() { 100.0 } else { -100.0 };
    }
    x
}

#[test]
fn constant_signal_is_degenerate() {
    let w = wvar(&vec![2.5f64; 512], 6).unwrap();
    assert!(w.degenerate);
    assert!(w.estimates.iter().all(|&v| v == 0.0));
    assert!(w.ci_lo.iter().chain(&w.ci_hi).all(|&v| v == 0.0));
}

#[test]
fn divisor_is_the_boundary_free_count() {
    let x = white(1000, 1.0, 1);
    let w = wvar(&x, 5).unwrap();
    assert_eq!(w.counts[4], 969);
    // direct evaluation of the level-5 filter
    let direct: f64 = (31..1000)
        .map(|t| {
            let a: f64 = (0..16).map(|i| x[t - i]).sum();
            let b: f64 = (16..32).map(|i| x[t - i]).sum();
            ((a - b) / 32.0).powi(2)
        })
        .sum::<f64>()
        / 969.0;
    assert!((w.estimates[4] - direct).abs() < 1e-14);
    assert_eq!(w.edf[4], 969.0 / 32.0);
}

#[test]
fn interval_brackets_estimate_and_uses_chi_square_quantiles() {
    let x = white(4096, 1.0, 2);
    let w = wvar(&x, 10).unwrap();
    for j in 0..10 {
        assert!(w.ci_lo[j] <= w.estimates[j] && w.estimates[j] <= w.ci_hi[j]);
    }
    // eta = 1 at the coarsest level: chi2_1 quantiles 0.000982069 and 5.023886
    let (lo, hi) = chi2_interval(1.0, 1.0, 0.05);
    assert!((lo - 1.0 / 5.023886187314888).abs() < 1e-9);
    assert!((hi - 1.0 / 0.000982069117175).abs() < 1e-3);
}

#[test]
fn white_noise_slope_is_minus_one() {
    let x = white(1 << 17, 1.0, 3);
    let w = wvar(&x, 8).unwrap();
    for j in 0..7 {
        let slope = (w.estimates[j + 1] / w.estimates[j]).log2();
        assert!((slope + 1.0).abs() < 0.15, "j={} slope={slope}", j + 1);
    }
}

#[test]
fn chi_square_coverage_at_the_finest_scale() {
    // At j = 1 the Haar coefficients of white noise have lag-one correlation
    // -1/2, so eta = M/2 sits close to the true equivalent degrees of
    // freedom (2M/3) and the interval is only mildly conservative.
    let reps = 500;
    let mut hits = 0;
    for r in 0..reps {
        let x = white(1 << 14, 1.0, 1000 + r);
        let w = wvar(&x, 1).unwrap();
        if w.ci_lo[0] <= 0.5 && 0.5 <= w.ci_hi[0] {
            hits += 1;
        }
    }
    let cov = hits as f64 / reps as f64;
    assert!((0.92..=0.98).contains(&cov), "coverage {cov}");
}

#[test]
fn dwt_wavelet_variance_follows_white_noise_law() {
    let x = white(1 << 14, 1.0, 4);
    let cfg = WvConfig {
        levels: Some(6),
        transform: Transform::Dwt,
        ..WvConfig::default()
    };
    let w = wvar_with(&x, &cfg).unwrap();
    assert_eq!(w.counts, vec![8192, 4096, 2048, 1024, 512, 256]);
    for j in 0..6 {
        // decimated coefficients of white noise are iid: chi-square with N_j dof
        let truth = 1.0 / (2u64 << j) as f64;
        let se = (2.0 / w.counts[j] as f64).sqrt();
        assert!((w.estimates[j] / truth - 1.0).abs() < 4.0 * se, "j={}", j + 1);
    }
}

#[test]
fn robust_agrees_with_classical_on_clean_data() {
    let x = white(1 << 16, 1.0, 5);
    let c = wvar(&x, 10).unwrap();
    let r = wvar_robust(&x, 10, 0.6).unwrap();
    assert!(r.robust);
    for j in 0..10 {
        assert!((r.estimates[j] / c.estimates[j] - 1.0).abs() < 0.10, "j={}", j + 1);
        // wider intervals: edf deflated by the efficiency
        assert!((r.edf[j] - 0.6 * c.edf[j]).abs() < 1e-12);
    }
}

#[test]
fn robust_resists_spikes() {
    let x = spiked(1 << 16, 6);
    let c = wvar(&x, 3).unwrap();
    let r = wvar_robust(&x, 3, 0.6).unwrap();
    assert!(c.estimates[0] > 2.0 * 0.5);
    assert!((r.estimates[0] / 0.5 - 1.0).abs() < 0.25);
    let report = compare_wvar(&c, &r).unwrap();
    assert_eq!(report.verdict, Verdict::RobustPreferable);
}

#[test]
fn comparison_of_identical_series() {
    let x = white(2048, 1.0, 7);
    let a = wvar(&x, 8).unwrap();
    let rep = compare_wvar(&a, &a).unwrap();
    assert!(rep.ratios.iter().all(|&r| r == 1.0));
    assert_eq!(rep.verdict, Verdict::Agree);
    assert_eq!(rep.verdict.to_string(), "agree");
    let b = wvar(&x, 7).unwrap();
    assert!(matches!(compare_wvar(&a, &b), Err(Error::MismatchedScales)));
}

#[test]
fn efficiency_range_enforced() {
    let x = white(256, 1.0, 8);
    assert!(wvar_robust(&x, 4, 0.5).is_err());
    assert!(wvar_robust(&x, 4, 1.01).is_err());
}

#[test]
fn default_levels_and_seconds_scale() {
    let x = white(1000, 1.0, 9);
    let cfg = WvConfig {
        freq: 100.0,
        ..WvConfig::default()
    };
    let w = wvar_with(&x, &cfg).unwrap();
    assert_eq!(w.len(), 8);
    assert!((w.scales[0] - 0.02).abs() < 1e-15);
}

#[test]
fn streaming_estimates_match_full_series() {
    let x = white(5000, 2.0, 10);
    let full = wvar(&x, 9).unwrap();
    assert_eq!(wv_estimates(&x, 9, None).unwrap(), full.estimates);
    let rob = wvar_robust(&x, 9, 0.8).unwrap();
    assert_eq!(wv_estimates(&x, 9, Some(0.8)).unwrap(), rob.estimates);
}

#[test]
fn csv_layout() {
    let x = white(64, 1.0, 11);
    let w = wvar(&x, 2).unwrap();
    let mut buf = Vec::new();
    w.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "scale,estimate,ci_lo,ci_hi,n");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2.0,"));
    assert!(lines[2].ends_with(",61"));
}

/// Naive cluster statistics written straight from the definitions.
fn naive(x: &[f64], m: usize, stat: ClusterStat, overlapping: bool) -> f64 {
    let ybar = |i: usize| x[i..i + m].iter().sum::<f64>() / m as f64;
    let t = x.len();
    match (stat, overlapping) {
        (ClusterStat::Allan, false) => {
            let k = t / m;
            (0..k - 1).map(|c| (ybar((c + 1) * m) - ybar(c * m)).powi(2)).sum::<f64>() / (2.0 * (k - 1) as f64)
        }
        (ClusterStat::Allan, true) => {
            let n = t - 2 * m + 1;
            (0..n).map(|i| (ybar(i + m) - ybar(i)).powi(2)).sum::<f64>() / (2.0 * n as f64)
        }
        (ClusterStat::ModifiedAllan, _) => {
            let n = t + 2 - 3 * m;
            (0..n)
                .map(|j| ((j..j + m).map(|i| ybar(i + m) - ybar(i)).sum::<f64>() / m as f64).powi(2))
                .sum::<f64>()
                / (2.0 * n as f64)
        }
        (ClusterStat::Hadamard, false) => {
            let k = t / m;
            (0..k - 2)
                .map(|c| (ybar((c + 2) * m) - 2.0 * ybar((c + 1) * m) + ybar(c * m)).powi(2))
                .sum::<f64>()
                / (6.0 * (k - 2) as f64)
        }
        (ClusterStat::Hadamard, true) => {
            let n = t - 3 * m + 1;
            (0..n)
                .map(|i| (ybar(i + 2 * m) - 2.0 * ybar(i + m) + ybar(i)).powi(2))
                .sum::<f64>()
                / (6.0 * n as f64)
        }
    }
}

#[test]
fn cluster_statistics_match_naive_definitions() {
    let x = white(301, 1.0, 12);
    for stat in [ClusterStat::Allan, ClusterStat::ModifiedAllan, ClusterStat::Hadamard] {
        for overlapping in [false, true] {
            let mut cfg = ClusterConfig::new(stat);
            cfg.overlapping = overlapping;
            cfg.lengths = Some(vec![1, 2, 3, 4, 7, 8, 16, 33]);
            let s = if stat == ClusterStat::Hadamard { hvar(&x, &cfg) } else { avar(&x, &cfg) }.unwrap();
            for (i, &m) in s.m.iter().enumerate() {
                let exact = naive(&x, m, stat, overlapping);
                assert!(
                    ((s.estimates[i] - exact) / exact).abs() < 1e-10,
                    "{stat:?} overlap={overlapping} m={m}"
                );
            }
        }
    }
}

#[test]
fn allan_variance_of_white_noise() {
    let x = white(1 << 17, 1.0, 13);
    for overlapping in [false, true] {
        let mut cfg = ClusterConfig::new(ClusterStat::Allan);
        cfg.overlapping = overlapping;
        let av = avar(&x, &cfg).unwrap();
        for (i, &m) in av.m.iter().enumerate().take(10) {
            let truth = 1.0 / m as f64;
            assert!(av.ci_lo[i] <= truth && truth <= av.ci_hi[i], "m={m}");
        }
    }
    let hv = hvar(&x, &ClusterConfig::new(ClusterStat::Hadamard)).unwrap();
    for (i, &m) in hv.m.iter().enumerate().take(10) {
        assert!(((hv.estimates[i] * m as f64) - 1.0).abs() < 0.1, "m={m}");
    }
}

#[test]
fn allan_is_twice_matched_haar_wv() {
    let x = white(1000, 3.0, 14);
    let matched = haar_matched_wv(&x, 8).unwrap();
    let cfg = ClusterConfig {
        lengths: Some((0..8).map(|k| 1usize << k).collect()),
        ..ClusterConfig::new(ClusterStat::Allan)
    };
    let av = avar(&x, &cfg).unwrap();
    for j in 0..8 {
        assert_eq!(av.estimates[j], 2.0 * matched[j]);
    }
    // overlapping Allan pairs with the full MODWT estimator
    let mut cfg = cfg;
    cfg.overlapping = true;
    let av = avar(&x, &cfg).unwrap();
    let w = wvar(&x, 8).unwrap();
    for j in 0..8 {
        assert_eq!(av.estimates[j], 2.0 * w.estimates[j]);
    }
}

#[test]
fn constant_cluster_variances_vanish() {
    let x = vec![7.0f64; 300];
    let av = avar(&x, &ClusterConfig::new(ClusterStat::Allan)).unwrap();
    let hv = hvar(&x, &ClusterConfig::new(ClusterStat::Hadamard)).unwrap();
    assert!(av.estimates.iter().chain(&hv.estimates).all(|&v| v == 0.0));
}

#[test]
fn too_short_for_requested_length() {
    let x = white(10, 1.0, 15);
    let mut cfg = ClusterConfig::new(ClusterStat::Hadamard);
    cfg.lengths = Some(vec![4]);
    assert!(matches!(hvar(&x, &cfg), Err(Error::SignalTooShort { .. })));
}

#[test]
fn f32_pipeline() {
    let x: Vec<f32> = white(4096, 1.0, 16).into_iter().map(|v| v as f32).collect();
    let w = wvar(&x, 8).unwrap();
    let w64 = wvar(&x.iter().map(|&v| v as f64).collect::<Vec<_>>(), 8).unwrap();
    for j in 0..8 {
        assert!(((w.estimates[j] as f64) / w64.estimates[j] - 1.0).abs() < 1e-5);
    }
    let av = avar(&x, &ClusterConfig::new(ClusterStat::Allan)).unwrap();
    assert_eq!(av.m[0], 1);
}

proptest! {
    #[test]
    fn scale_equivariance(seed in any::<u64>(), k in -8i32..8, c in 0.01f64..100.0) {
        let x = white(512, 1.0, seed);
        let base = wvar(&x, 7).unwrap();
        // powers of two commute with rounding: exact
        let p = 2f64.powi(k);
        let xp: Vec<f64> = x.iter().map(|v| v * p).collect();
        let wp = wvar(&xp, 7).unwrap();
        for j in 0..7 {
            prop_assert_eq!(wp.estimates[j], p * p * base.estimates[j]);
        }
        let xc: Vec<f64> = x.iter().map(|v| v * c).collect();
        let wc = wvar(&xc, 7).unwrap();
        for j in 0..7 {
            prop_assert!((wc.estimates[j] / (c * c * base.estimates[j]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_efficiency_is_classical(seed in any::<u64>()) {
        let x = spiked(2048, seed);
        let a = wvar(&x, 9).unwrap();
        let b = wvar_robust(&x, 9, 1.0).unwrap();
        prop_assert_eq!(a.estimates, b.estimates);
    }
}

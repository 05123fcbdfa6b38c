use std::collections::HashMap;

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use segnoise::geometry::SignMode;
use segnoise::noise::{apply_noise, preset, Gaussian, NoiseConfig, NoiseKind, NoiseMode, Outcome, Tier};
use segnoise::synth::{generate, CorpusSpec};
use segnoise::{parse_dataset, serialize_dataset, Dataset};

fn corpus(n_images: usize, seed: u64) -> Dataset {
    generate(&CorpusSpec {
        n_images,
        seed,
        ..CorpusSpec::default()
    })
    .unwrap()
}

/// Chi-square statistic of observed kernel sizes against
/// `max(0, floor(N(mu, sigma)))`, with sparse tail bins merged.
fn kernel_chi_square(ks: &[usize], g: Gaussian) -> (f64, usize) {
    let n = Normal::new(g.mu, g.sigma).unwrap();
    let max_k = *ks.iter().max().unwrap();
    let pmf = |k: usize| {
        if k == 0 {
            n.cdf(1.0)
        } else {
            n.cdf(k as f64 + 1.0) - n.cdf(k as f64)
        }
    };
    let mut observed = vec![0usize; max_k + 1];
    for &k in ks {
        observed[k] += 1;
    }
    // Bins: each k with expected count >= 5; leftovers join the nearest bin.
    let total = ks.len() as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut e, mut o) = (0.0, 0.0);
    for (k, &obs) in observed.iter().enumerate() {
        e += pmf(k) * total;
        o += obs as f64;
        if e >= 5.0 {
            bins.push((o, e));
            e = 0.0;
            o = 0.0;
        }
    }
    // Upper tail beyond max_k.
    e += (1.0 - n.cdf(max_k as f64 + 1.0)) * total;
    let last = bins.last_mut().unwrap();
    last.0 += o;
    last.1 += e;
    let stat = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    (stat, bins.len() - 1)
}

#[test]
fn deletion_and_confusion_rates() {
    let d = corpus(1300, 21);
    assert!(d.annotations.len() >= 10_000);
    let config = NoiseConfig {
        seed: 99,
        // Spatial noise off: only the Bernoulli draws matter here.
        enabled: [NoiseKind::Deletion, NoiseKind::ClassConfusion].into_iter().collect(),
        ..preset(Tier::Low)
    };
    let (_, log) = apply_noise(&d, &config).unwrap();
    let s = log.summary();
    let n = s.instances_in as f64;
    let deleted = s.deleted as f64 / n;
    let swapped = s.class_swaps as f64 / (n - s.deleted as f64);
    let tol = 3.0 * (0.05f64 * 0.95 / n).sqrt();
    assert!((deleted - 0.05).abs() <= tol, "deleted {deleted}");
    assert!((swapped - 0.05).abs() <= tol, "swapped {swapped}");

    let sup: HashMap<i64, &str> = d.categories.iter().map(|c| (c.id, c.supercategory.as_str())).collect();
    for r in &log.records {
        if let Some(sw) = r.class_swap {
            assert_ne!(sw.from, sw.to);
            assert_eq!(sup[&sw.from], sup[&sw.to]);
        }
    }
}

#[test]
fn kernel_sizes_follow_floored_normal() {
    let d = corpus(1300, 22);
    for g in [Gaussian::new(3.0, 1.0), Gaussian::new(7.0, 4.0)] {
        let config = NoiseConfig {
            seed: 5,
            scale: g,
            mode: NoiseMode::RandomScale,
            ..NoiseConfig::default()
        };
        let (_, log) = apply_noise(&d, &config).unwrap();
        let ks: Vec<usize> = log.records.iter().map(|r| r.scale.unwrap().k).collect();
        let (stat, dof) = kernel_chi_square(&ks, g);
        let p = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat);
        assert!(p > 0.01, "{g:?}: chi2 {stat} dof {dof} p {p}");
    }
}

#[test]
fn localization_displacement_statistics() {
    let d = corpus(60, 23);
    let config = NoiseConfig {
        seed: 1,
        loc: Gaussian::new(3.0, 0.5),
        mode: NoiseMode::Localization,
        ..NoiseConfig::default()
    };
    let (_, log) = apply_noise(&d, &config).unwrap();
    let (mut sx, mut n) = (0.0, 0usize);
    for r in &log.records {
        let l = r.localization.unwrap();
        sx += l.mean_abs_dx * l.vertices as f64;
        n += l.vertices;
    }
    assert!(n >= 5000);
    let mean = sx / n as f64;
    // |Δ| = B·|N(3, 0.5)|; the rectification is negligible at mu = 6 sigma.
    assert!((mean - 3.0).abs() < 0.05, "{mean}");
}

#[test]
fn zero_config_is_identity() {
    let d = parse_dataset(&serialize_dataset(&corpus(30, 24))).unwrap();
    let bytes = serialize_dataset(&d);
    for signs in [SignMode::PerCoordinate, SignMode::Shared] {
        let config = NoiseConfig {
            seed: 1234,
            signs,
            ..NoiseConfig::default()
        };
        let (out, log) = apply_noise(&d, &config).unwrap();
        assert_eq!(serialize_dataset(&out), bytes);
        assert!(log.records.iter().all(|r| r.is_identity()));
    }
    for mode in NoiseMode::SINGLE_OPERATORS {
        let config = NoiseConfig {
            mode,
            seed: 8,
            ..NoiseConfig::default()
        };
        let (out, _) = apply_noise(&d, &config).unwrap();
        assert_eq!(serialize_dataset(&out), bytes, "{mode}");
    }
}

#[test]
fn output_is_valid_and_deterministic() {
    let d = corpus(40, 25);
    for tier in Tier::ALL {
        let config = NoiseConfig { seed: 42, ..preset(tier) };
        let (a, la) = apply_noise(&d, &config).unwrap();
        a.validate().unwrap();
        for ann in &a.annotations {
            assert!(ann.area > 0.0);
        }
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let (b, lb) = pool.install(|| apply_noise(&d, &config).unwrap());
        assert_eq!(serialize_dataset(&a), serialize_dataset(&b));
        assert_eq!(la.to_jsonl(), lb.to_jsonl());
        // Output re-parses to the same canonical bytes.
        assert_eq!(serialize_dataset(&parse_dataset(&serialize_dataset(&a)).unwrap()), serialize_dataset(&a));
        let kept = la.records.iter().filter(|r| r.outcome == Outcome::Kept).count();
        assert_eq!(kept, a.annotations.len());
    }
}

#[test]
fn single_operator_logs_only_their_operator() {
    let d = corpus(10, 26);
    let config = NoiseConfig {
        seed: 3,
        mode: NoiseMode::Erosion,
        ..preset(Tier::Medium)
    };
    let (_, log) = apply_noise(&d, &config).unwrap();
    for r in &log.records {
        assert!(r.scale.is_some());
        assert!(r.class_swap.is_none() && r.epsilon.is_none() && r.localization.is_none() && r.shift.is_none());
        assert_ne!(r.outcome, Outcome::Deleted);
        assert_eq!(r.scale.unwrap().op, segnoise::noise::MorphOp::Erode);
    }
}

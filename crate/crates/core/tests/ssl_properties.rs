use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sgk_core::dsp::FeatureMatrix;
use sgk_core::ssl::{
    cca_corrs, cca_similarity, contrastive_loss, diversity_loss, mutual_information, quantize_concat,
    Codebooks, CodebookUsage, ContrastiveBatch,
};

fn gaussian(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..p).map(|_| StandardNormal.sample(rng)).collect())
        .collect()
}

fn times(x: &[Vec<f64>], a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|r| {
            (0..a[0].len())
                .map(|j| r.iter().zip(a).map(|(v, ar)| v * ar[j]).sum())
                .collect()
        })
        .collect()
}

fn entropy(labels: &[i64]) -> f64 {
    let mut counts = std::collections::BTreeMap::new();
    for l in labels {
        *counts.entry(*l).or_insert(0usize) += 1;
    }
    let n = labels.len() as f64;
    -counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

#[test]
fn quantized_dimension_matches_codebooks() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let g = rng.gen_range(1..5);
        let v = rng.gen_range(1..6);
        let e = rng.gen_range(1..4);
        let vals: Vec<f64> = (0..g * v * e).map(|_| rng.gen()).collect();
        let cb = Codebooks::new(g, v, e, vals).unwrap();
        let sel: Vec<usize> = (0..g).map(|_| rng.gen_range(0..v)).collect();
        let q = quantize_concat(&sel, &cb).unwrap();
        assert_eq!(q.len(), g * e);
        for (gi, &s) in sel.iter().enumerate() {
            assert_eq!(&q[gi * e..(gi + 1) * e], cb.entry(gi, s));
        }
    }
}

#[test]
fn contrastive_matches_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let d = rng.gen_range(2..6);
        let mut v = || -> Vec<f64> { (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let c = v();
        let t = v();
        let negs: Vec<Vec<f64>> = (0..3).map(|_| v()).collect();
        let kappa = 0.3;
        let cos = |a: &[f64], b: &[f64]| {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            dot / (a.iter().map(|x| x * x).sum::<f64>() * b.iter().map(|x| x * x).sum::<f64>()).sqrt()
        };
        let num = (cos(&c, &t) / kappa).exp();
        let den = num + negs.iter().map(|n| (cos(&c, n) / kappa).exp()).sum::<f64>();
        let want = -(num / den).ln();
        let got = contrastive_loss(&ContrastiveBatch {
            context: c.clone(),
            target: t.clone(),
            negatives: negs.clone(),
            temperature: kappa,
        })
        .unwrap();
        assert!((got - want).abs() < 1e-9);
        let scaled = contrastive_loss(&ContrastiveBatch {
            context: c.iter().map(|x| x * 3.0).collect(),
            target: t.iter().map(|x| x * 0.2).collect(),
            negatives: negs.iter().map(|n| n.iter().map(|x| x * 7.0).collect()).collect(),
            temperature: kappa,
        })
        .unwrap();
        assert!((got - scaled).abs() < 1e-9);
    }
}

#[test]
fn contrastive_decreases_with_target_similarity() {
    let mut prev = f64::INFINITY;
    for i in 0..=50 {
        let angle = std::f64::consts::PI * (1.0 - i as f64 / 50.0);
        let loss = contrastive_loss(&ContrastiveBatch {
            context: vec![1.0, 0.0],
            target: vec![angle.cos(), angle.sin()],
            negatives: vec![vec![0.3, 1.0], vec![-1.0, 0.2]],
            temperature: 0.5,
        })
        .unwrap();
        assert!(loss >= 0.0);
        assert!(loss < prev);
        prev = loss;
    }
}

#[test]
fn uniform_usage_minimizes_diversity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (g, v) in [(1, 2), (1, 3), (2, 2), (2, 4), (3, 3)] {
        let uniform = CodebookUsage::new(vec![vec![1.0 / v as f64; v]; g]).unwrap();
        let floor = diversity_loss(&uniform);
        assert!((floor + g as f64 * (v as f64).ln() * g as f64 / v as f64).abs() < 1e-12);
        for _ in 0..2000 {
            let rows: Vec<Vec<f64>> = (0..g)
                .map(|_| {
                    let raw: Vec<f64> = (0..v).map(|_| -rng.gen::<f64>().ln()).collect();
                    let s: f64 = raw.iter().sum();
                    raw.iter().map(|x| x / s).collect()
                })
                .collect();
            let u = CodebookUsage::new(rows).unwrap();
            let d = diversity_loss(&u);
            assert!(d <= 0.0);
            assert!(d >= floor - 1e-12);
        }
    }
}

#[test]
fn cca_invariant_under_invertible_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let p = rng.gen_range(1..5);
        let n = rng.gen_range(p + 2..60);
        let x = gaussian(&mut rng, n, p);
        // diagonally dominant, hence invertible
        let mut a = gaussian(&mut rng, p, p);
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += 5.0 * row.iter().map(|v: &f64| v.abs()).sum::<f64>().max(1.0);
        }
        let y = times(&x, &a);
        let c = cca_corrs(
            &FeatureMatrix::from_rows(&x).unwrap(),
            &FeatureMatrix::from_rows(&y).unwrap(),
            1e-9,
        )
        .unwrap();
        assert_eq!(c.len(), p);
        for v in c {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
    }
}

#[test]
fn cca_of_independent_data_is_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = FeatureMatrix::from_rows(&gaussian(&mut rng, 10_000, 3)).unwrap();
    let y = FeatureMatrix::from_rows(&gaussian(&mut rng, 10_000, 3)).unwrap();
    let c = cca_corrs(&x, &y, 1e-6).unwrap();
    assert!(cca_similarity(&c) < 0.05);
}

#[test]
fn cca_ignores_column_order_and_stays_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let n = 40;
        let x = gaussian(&mut rng, n, 4);
        let noise = gaussian(&mut rng, n, 2);
        let y: Vec<Vec<f64>> = x
            .iter()
            .zip(&noise)
            .map(|(r, e)| vec![r[0] + 0.5 * e[0], r[1] - r[2] + e[1]])
            .collect();
        let perm: Vec<Vec<f64>> = x.iter().map(|r| vec![r[2], r[0], r[3], r[1]]).collect();
        let ym = FeatureMatrix::from_rows(&y).unwrap();
        let a = cca_corrs(&FeatureMatrix::from_rows(&x).unwrap(), &ym, 1e-6).unwrap();
        let b = cca_corrs(&FeatureMatrix::from_rows(&perm).unwrap(), &ym, 1e-6).unwrap();
        assert_eq!(a.len(), 2);
        assert!(a.windows(2).all(|w| w[0] >= w[1]));
        for (u, v) in a.iter().zip(&b) {
            assert!((0.0..=1.0).contains(u));
            assert!((u - v).abs() < 1e-9);
        }
    }
}

#[test]
fn one_hot_features_recover_label_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for classes in 2..6 {
        let labels: Vec<i64> = (0..300).map(|_| rng.gen_range(0..classes) * 10 - 7).collect();
        let rows: Vec<Vec<f64>> = labels
            .iter()
            .map(|l| {
                let mut r = vec![0.0; classes as usize];
                r[((l + 7) / 10) as usize] = 1.0;
                r
            })
            .collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let mi = mutual_information(&x, &labels, classes as usize, 11).unwrap();
        assert!((mi - entropy(&labels)).abs() < 1e-9);
    }
}

#[test]
fn independent_labels_carry_little_information() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = FeatureMatrix::from_rows(&gaussian(&mut rng, 10_000, 3)).unwrap();
    let labels: Vec<i64> = (0..10_000).map(|_| rng.gen_range(0..5)).collect();
    let mi = mutual_information(&x, &labels, 8, 0).unwrap();
    assert!((0.0..=0.05).contains(&mi), "{mi}");
}

#[test]
fn mi_bounded_and_relabel_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let n = 200;
        let labels: Vec<i64> = (0..n).map(|_| rng.gen_range(0..4)).collect();
        let rows: Vec<Vec<f64>> = labels
            .iter()
            .map(|&l| vec![l as f64 + rng.gen_range(-0.8..0.8), rng.gen_range(-1.0..1.0)])
            .collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let k = rng.gen_range(1..7);
        let mi = mutual_information(&x, &labels, k, 3).unwrap();
        assert!(mi >= 0.0 && mi <= entropy(&labels) + 1e-12 && mi <= (k as f64).ln() + 1e-12);
        let renamed: Vec<i64> = labels.iter().map(|l| [42, -1, 7, 1000][*l as usize]).collect();
        assert_eq!(mi, mutual_information(&x, &renamed, k, 3).unwrap());
    }
}

//! GP posteriors against hand-derived one- and two-point formulas.

use iwfqi_core::gp::{GpModel, KernelParams};
use iwfqi_core::rng::rng_from_seed;
use proptest::prelude::*;
use rand::Rng;

fn se(sf: f64, ls: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).zip(ls).map(|((x, y), l)| ((x - y) / l).powi(2)).sum();
    sf * (-0.5 * d2).exp()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * (1.0 + b.abs())
}

#[test]
fn one_point_posterior() {
    let mut rng = rng_from_seed(1);
    for _ in 0..50 {
        let (sf, sn) = (rng.random_range(0.1..3.0), rng.random_range(0.01..1.0));
        let ls = vec![rng.random_range(0.3..2.0), rng.random_range(0.3..2.0)];
        let x1 = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let y1 = rng.random_range(-2.0..2.0);
        let kernel = KernelParams::new(sf, ls.clone(), sn).unwrap();
        let gp = GpModel::fit(std::slice::from_ref(&x1), &[y1], &kernel, false).unwrap();
        let q = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let k = se(sf, &ls, &q, &x1);
        let p = gp.predict(&q);
        assert!(close(p.mean, k * y1 / (sf + sn)));
        assert!(close(p.var, sf - k * k / (sf + sn)));
    }
}

#[test]
fn two_point_posterior() {
    let mut rng = rng_from_seed(2);
    for _ in 0..50 {
        let (sf, sn) = (rng.random_range(0.1..3.0), rng.random_range(0.01..1.0));
        let ls = vec![rng.random_range(0.3..2.0)];
        let (x1, x2) = (vec![rng.random_range(-1.0..1.0)], vec![rng.random_range(-1.0..1.0)]);
        let (y1, y2) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let gp = GpModel::fit(&[x1.clone(), x2.clone()], &[y1, y2], &KernelParams::new(sf, ls.clone(), sn).unwrap(), false).unwrap();
        let q = vec![rng.random_range(-2.0..2.0)];
        let (a, c, b) = (sf + sn, sf + sn, se(sf, &ls, &x1, &x2));
        let det = a * c - b * b;
        let (i11, i12, i22) = (c / det, -b / det, a / det);
        let (k1, k2) = (se(sf, &ls, &q, &x1), se(sf, &ls, &q, &x2));
        let mean = k1 * (i11 * y1 + i12 * y2) + k2 * (i12 * y1 + i22 * y2);
        let var = sf - (k1 * k1 * i11 + 2.0 * k1 * k2 * i12 + k2 * k2 * i22);
        let p = gp.predict(&q);
        assert!(close(p.mean, mean), "{} vs {mean}", p.mean);
        assert!(close(p.var, var), "{} vs {var}", p.var);
    }
}

proptest! {
    #[test]
    fn far_field_reverts_to_prior(sf in 0.1f64..5.0, l in 0.2f64..3.0, sn in 0.01f64..1.0, ys in prop::collection::vec(-3.0f64..3.0, 1..10)) {
        let xs: Vec<Vec<f64>> = (0..ys.len()).map(|i| vec![i as f64 * 0.1 * l, -(i as f64) * 0.05 * l]).collect();
        let gp = GpModel::fit(&xs, &ys, &KernelParams::isotropic(sf, l, 2, sn).unwrap(), false).unwrap();
        let far = gp.predict(&[20.0 * l + xs.last().unwrap()[0], 0.0]);
        prop_assert!(far.mean.abs() <= 1e-6);
        prop_assert!((far.var - sf).abs() <= 1e-6);
    }

    #[test]
    fn variance_never_exceeds_prior(sf in 0.1f64..5.0, l in 0.2f64..3.0, q in -5.0f64..5.0) {
        let xs = vec![vec![0.0], vec![0.5], vec![1.0]];
        let gp = GpModel::fit(&xs, &[1.0, -1.0, 0.5], &KernelParams::isotropic(sf, l, 1, 0.1).unwrap(), false).unwrap();
        let p = gp.predict(&[q]);
        prop_assert!(p.var >= 0.0 && p.var <= sf);
    }
}

use std::f64::consts::{PI, TAU};

use rand::Rng;

use super::SetValuedField;
use crate::error::{ensure, Error, Result};
use crate::sets::{dist2, hausdorff};

/// Explicit averaging constant
/// `c = (e^{λML/m} - 1)(4π M_X / m + 2π λ_ω M_X² / λ) + 8 M_X π / m`.
pub fn theorem1_constant(
    m: f64,
    big_m: f64,
    m_x: f64,
    lambda: f64,
    lambda_omega: f64,
    l: f64,
) -> Result<f64> {
    for (name, v) in [
        ("m", m),
        ("M", big_m),
        ("M_X", m_x),
        ("lambda", lambda),
        ("lambda_omega", lambda_omega),
        ("L", l),
    ] {
        ensure(v > 0.0 && v.is_finite(), || {
            format!("{name} must be positive, got {v}")
        })?;
    }
    let growth = (lambda * big_m * l / m).exp_m1();
    let c = growth * (4.0 * PI * m_x / m + 2.0 * PI * lambda_omega * m_x * m_x / lambda)
        + 8.0 * m_x * PI / m;
    if c.is_finite() {
        Ok(c)
    } else {
        Err(Error::Unbounded)
    }
}

fn sample_in(rng: &mut impl Rng, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(a, b)| if a < b { rng.gen_range(*a..*b) } else { *a })
        .collect()
}

/// Largest observed `d_H(X(φ, x1), X(φ, x2)) / |x1 - x2|` over seeded random
/// pairs in the box `[lo, hi]`.
pub fn estimate_lipschitz(
    field: &SetValuedField,
    lo: &[f64],
    hi: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    ensure(n_samples >= 2, || "need at least two samples".into())?;
    ensure(lo.len() == field.dim() && hi.len() == field.dim(), || {
        "domain box does not match field dimension".into()
    })?;
    ensure(lo.iter().zip(hi).all(|(a, b)| b > a), || {
        "domain box has zero volume".into()
    })?;
    let mut rng = crate::rng::rng(seed);
    let mut best: f64 = 0.0;
    for _ in 0..n_samples {
        let phi = rng.gen_range(0.0..TAU);
        let x1 = sample_in(&mut rng, lo, hi);
        let x2 = sample_in(&mut rng, lo, hi);
        let d = dist2(&x1, &x2).sqrt();
        if d < 1e-12 {
            continue;
        }
        let a = field.eval(phi, &x1).to_set();
        let b = field.eval(phi, &x2).to_set();
        best = best.max(hausdorff(&a, &b)? / d);
    }
    Ok(best)
}

/// Largest vertex norm seen on seeded samples; compare against `M_X`.
pub fn check_bound(
    field: &SetValuedField,
    lo: &[f64],
    hi: &[f64],
    n_samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = crate::rng::rng(seed);
    (0..n_samples)
        .map(|_| {
            let phi = rng.gen_range(0.0..TAU);
            let x = sample_in(&mut rng, lo, hi);
            field.eval(phi, &x).max_norm()
        })
        .fold(0.0, f64::max)
}

/// Largest `d_H(X(φ, x), X(φ + 2π, x))` on seeded samples.
pub fn check_periodicity(
    field: &SetValuedField,
    lo: &[f64],
    hi: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = crate::rng::rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_samples {
        let phi = rng.gen_range(-10.0 * TAU..10.0 * TAU);
        let x = sample_in(&mut rng, lo, hi);
        let a = field.eval(phi, &x).to_set();
        let b = field.eval(phi + TAU, &x).to_set();
        worst = worst.max(hausdorff(&a, &b)?);
    }
    Ok(worst)
}

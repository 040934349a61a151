use std::f64::consts::TAU;

use rayon::prelude::*;

use super::{SetValuedField, VertexSample};
use crate::error::{ensure, Error, Result};
use crate::sets::DirectionGrid;

/// Smallest phase grid accepted by [`average`].
pub const MIN_N_PHI: usize = 8;

/// Below this many (direction, phase) pairs averaging stays on one thread.
const PAR_WORK: usize = 4096;

/// Phase average `X̄(x) = (1/2π) ∮ X(φ, x) dφ` of a convex-valued field.
///
/// The support function of the average is the average of the support
/// functions, so for every grid direction `d` the averaged vertex is the
/// mean (midpoint rule in φ) of the per-phase support points. Vertex `i` of
/// the result belongs to grid direction `i`.
pub fn average(
    field: &SetValuedField,
    x: &[f64],
    n_phi: usize,
    grid: &DirectionGrid,
) -> Result<VertexSample> {
    ensure(n_phi >= MIN_N_PHI, || {
        format!("n_phi must be at least {MIN_N_PHI}, got {n_phi}")
    })?;
    if x.len() != field.dim() || grid.dim() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            found: if x.len() != field.dim() {
                x.len()
            } else {
                grid.dim()
            },
        });
    }
    let values = sample_phases(field, x, n_phi);
    if values.iter().any(|v| !v.is_convex()) {
        return Err(Error::NonConvexField);
    }
    Ok(average_values(&values, grid))
}

fn sample_phases(field: &SetValuedField, x: &[f64], n_phi: usize) -> Vec<VertexSample> {
    (0..n_phi)
        .map(|k| field.eval(TAU * (k as f64 + 0.5) / n_phi as f64, x))
        .collect()
}

fn average_values(values: &[VertexSample], grid: &DirectionGrid) -> VertexSample {
    let dim = grid.dim();
    let n = values.len() as f64;
    let row = |j: usize| -> Vec<f64> {
        let d = grid.dir(j);
        let picks: Vec<&[f64]> = values
            .iter()
            .map(|v| v.vertex(v.support_index(d)))
            .collect();
        pairwise_sum(&picks, dim)
            .into_iter()
            .map(|s| s / n)
            .collect()
    };
    let rows: Vec<Vec<f64>> = if grid.count() * values.len() >= PAR_WORK {
        (0..grid.count()).into_par_iter().map(row).collect()
    } else {
        (0..grid.count()).map(row).collect()
    };
    VertexSample::new(dim, rows.concat(), true).expect("averages of finite vertices are finite")
}

/// Pairwise (tree) summation so the rounding pattern does not depend on
/// thread scheduling.
pub(crate) fn pairwise_sum(items: &[&[f64]], dim: usize) -> Vec<f64> {
    match items.len() {
        0 => vec![0.0; dim],
        1 => items[0].to_vec(),
        n => {
            let (a, b) = items.split_at(n / 2);
            let mut s = pairwise_sum(a, dim);
            for (si, bi) in s.iter_mut().zip(pairwise_sum(b, dim)) {
                *si += bi;
            }
            s
        }
    }
}

/// The averaged system as a φ-independent field with the source's bound,
/// Lipschitz constant and `ε`. Convexity is checked at `probe`; values are
/// read as their convex hulls everywhere else.
pub fn averaged_field(
    field: &SetValuedField,
    n_phi: usize,
    grid: &DirectionGrid,
    probe: &[f64],
) -> Result<SetValuedField> {
    average(field, probe, n_phi, grid)?;
    let f = field.clone();
    let g = grid.clone();
    SetValuedField::new(
        field.dim(),
        field.bound(),
        field.lipschitz(),
        move |_, x| average_values(&sample_phases(&f, x, n_phi), &g),
    )?
    .with_epsilon(field.epsilon())
}

use std::f64::consts::PI;

use rand::Rng;

use super::{norm, UNIT_TOL};
use crate::error::{ensure, Result};

/// Directions used to sample support functions.
///
/// Always symmetric: the second half of `dirs` is the negation of the first.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionGrid {
    dim: usize,
    dirs: Vec<f64>,
}

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;
const HIGH_DIM_PAIRS: usize = 32;

impl DirectionGrid {
    /// Default grid: {±1} in R^1, 32 angles in R^2, 128 directions in R^3
    /// (axes plus a Fibonacci hemisphere and its mirror), axes plus seeded
    /// random pairs above that.
    pub fn new(dim: usize) -> Result<Self> {
        match dim {
            0 => Err(crate::Error::InvalidInput(
                "grid dimension must be positive".into(),
            )),
            1 => Ok(Self::from_half(1, vec![vec![1.0]])),
            2 => Self::planar(32),
            3 => {
                let mut half = axes(3);
                let n = 61;
                for i in 0..n {
                    let z = (i as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = GOLDEN_ANGLE * i as f64;
                    half.push(vec![r * a.cos(), r * a.sin(), z]);
                }
                Ok(Self::from_half(3, half))
            }
            _ => {
                let mut half = axes(dim);
                let mut rng = crate::rng::rng(0x5eed_0000 + dim as u64);
                for _ in 0..HIGH_DIM_PAIRS {
                    let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let n = norm(&v);
                    if n > 1e-3 {
                        half.push(v.iter().map(|x| x / n).collect());
                    }
                }
                Ok(Self::from_half(dim, half))
            }
        }
    }

    /// `n` equally spaced angles in the plane; `n` must be even and at least 4.
    pub fn planar(n: usize) -> Result<Self> {
        ensure(n >= 4 && n % 2 == 0, || {
            format!("planar grid needs an even count >= 4, got {n}")
        })?;
        let half = (0..n / 2)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
        Ok(Self::from_half(2, half))
    }

    /// Builds a grid from caller-supplied unit vectors; negations are added
    /// where missing.
    pub fn custom(dim: usize, dirs: &[Vec<f64>]) -> Result<Self> {
        ensure(dim > 0 && !dirs.is_empty(), || {
            "grid needs at least one direction".into()
        })?;
        let mut half: Vec<Vec<f64>> = Vec::new();
        for d in dirs {
            ensure(d.len() == dim, || {
                format!("direction of length {} in a {dim}-d grid", d.len())
            })?;
            ensure((norm(d) - 1.0).abs() <= UNIT_TOL, || {
                format!("direction {d:?} is not a unit vector")
            })?;
            let neg: Vec<f64> = d.iter().map(|x| -x).collect();
            if !half.iter().any(|h| *h == *d || *h == neg) {
                half.push(d.clone());
            }
        }
        Ok(Self::from_half(dim, half))
    }

    fn from_half(dim: usize, half: Vec<Vec<f64>>) -> Self {
        let mut dirs: Vec<f64> = half.iter().flatten().copied().collect();
        dirs.extend(half.iter().flatten().map(|x| -x));
        Self { dim, dirs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.dirs.len() / self.dim
    }

    pub fn dir(&self, i: usize) -> &[f64] {
        &self.dirs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn dirs(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.dirs.chunks_exact(self.dim)
    }

    /// Sampled estimate of `max_u (1 - max_d <u, d>)` over unit vectors `u`.
    /// Controls how far a support-sampled polytope can overshoot the set.
    pub fn cover_error(&self) -> f64 {
        if self.dim == 1 {
            return 0.0;
        }
        let mut rng = crate::rng::rng(17);
        let mut worst: f64 = 0.0;
        for _ in 0..2000 {
            let v: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = norm(&v);
            if n < 1e-6 {
                continue;
            }
            let best = self
                .dirs()
                .map(|d| super::dot(d, &v) / n)
                .fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(1.0 - best);
        }
        worst
    }
}

fn axes(dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|k| {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            e
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(g: &DirectionGrid) {
        for d in g.dirs() {
            assert!((norm(d) - 1.0).abs() <= 1e-12);
            let neg: Vec<f64> = d.iter().map(|x| -x).collect();
            assert!(g.dirs().any(|e| e == neg.as_slice()));
        }
    }

    #[test]
    fn default_counts_and_symmetry() {
        for (dim, count) in [(1, 2), (2, 32), (3, 128)] {
            let g = DirectionGrid::new(dim).unwrap();
            assert_eq!(g.count(), count);
            check(&g);
        }
        let g5 = DirectionGrid::new(5).unwrap();
        check(&g5);
        assert!(g5.count() >= 10);
        assert!(DirectionGrid::new(0).is_err());
    }

    #[test]
    fn planar_grid_contains_axes() {
        let g = DirectionGrid::new(2).unwrap();
        for e in [[1.0, 0.0], [-1.0, 0.0]] {
            assert!(g.dirs().any(|d| d == e));
        }
        assert!(g.dirs().any(|d| (d[0]).abs() < 1e-15 && d[1] == 1.0));
    }

    #[test]
    fn custom_adds_negations() {
        let g =
            DirectionGrid::custom(2, &[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(g.count(), 4);
        check(&g);
        assert!(DirectionGrid::custom(2, &[vec![1.0, 1.0]]).is_err());
    }

    #[test]
    fn cover_error_shrinks_with_density() {
        let coarse = DirectionGrid::planar(8).unwrap().cover_error();
        let fine = DirectionGrid::planar(64).unwrap().cover_error();
        assert!(fine < coarse);
        assert!(fine <= 1.0 - (PI / 64.0).cos() + 1e-12);
    }
}

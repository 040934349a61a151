use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::sets::{dist2, norm, CompactSet};

type Metric = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// A Finsler structure `F(x, δx)` on `Rⁿ`. `flat` marks structures that do
/// not depend on `x`, for which straight chords are geodesics.
#[derive(Clone)]
pub struct FinslerStructure {
    dim: usize,
    flat: bool,
    f: Arc<Metric>,
}

impl fmt::Debug for FinslerStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FinslerStructure")
            .field("dim", &self.dim)
            .field("flat", &self.flat)
            .finish_non_exhaustive()
    }
}

impl FinslerStructure {
    pub fn new(
        dim: usize,
        f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        ensure(dim > 0, || "dimension must be positive".into())?;
        Ok(Self {
            dim,
            flat: false,
            f: Arc::new(f),
        })
    }

    /// A structure that ignores the base point.
    pub fn flat(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let mut s = Self::new(dim, move |_, dx| f(dx))?;
        s.flat = true;
        Ok(s)
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::flat(dim, norm).expect("positive dimension")
    }

    /// `F(δx) = ‖δx‖ + ⟨b, δx⟩`, a norm when `‖b‖ < 1`.
    pub fn randers(b: Vec<f64>) -> Result<Self> {
        ensure(norm(&b) < 1.0, || {
            "Randers drift must have norm below 1".into()
        })?;
        Self::flat(b.len(), move |dx| norm(dx) + crate::sets::dot(&b, dx))
    }

    /// `F(x, δx) = sqrt(δxᵀ M(x) δx)` with `M(x)` row-major and positive
    /// definite.
    pub fn riemannian(
        dim: usize,
        metric: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::new(dim, move |x, dx| {
            let m = metric(x);
            let mut q = 0.0;
            for i in 0..dx.len() {
                for j in 0..dx.len() {
                    q += dx[i] * m[i * dx.len() + j] * dx[j];
                }
            }
            q.max(0.0).sqrt()
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_flat(&self) -> bool {
        self.flat
    }

    pub fn eval(&self, x: &[f64], dx: &[f64]) -> f64 {
        (self.f)(x, dx)
    }

    /// Largest `|F(x, λδx) - λF(x, δx)|` over `λ ∈ {0.5, 2, 10}` and seeded
    /// samples in `[-1, 1]ⁿ × [-1, 1]ⁿ`.
    pub fn homogeneity_defect(&self, n: usize, seed: u64) -> f64 {
        let mut rng = crate::rng::rng(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let x: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dx: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = self.eval(&x, &dx);
            for l in [0.5, 2.0, 10.0] {
                let scaled: Vec<f64> = dx.iter().map(|v| l * v).collect();
                worst = worst.max((self.eval(&x, &scaled) - l * f).abs());
            }
        }
        worst
    }

    /// Fraction of sampled non-parallel pairs with
    /// `F(x, a + b) < F(x, a) + F(x, b)`.
    pub fn strict_triangle_fraction(&self, n: usize, seed: u64) -> f64 {
        let mut rng = crate::rng::rng(seed);
        let mut ok = 0usize;
        for _ in 0..n {
            let x: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
            if self.eval(&x, &s) < self.eval(&x, &a) + self.eval(&x, &b) {
                ok += 1;
            }
        }
        ok as f64 / n as f64
    }
}

/// Length of the polygon `pts` under `F`, each segment evaluated at its
/// midpoint.
fn path_length(f: &FinslerStructure, pts: &[Vec<f64>]) -> f64 {
    pts.windows(2).map(|w| segment(f, &w[0], &w[1])).sum()
}

fn segment(f: &FinslerStructure, a: &[f64], b: &[f64]) -> f64 {
    let mid: Vec<f64> = a.iter().zip(b).map(|(p, q)| 0.5 * (p + q)).collect();
    let d: Vec<f64> = a.iter().zip(b).map(|(p, q)| q - p).collect();
    f.eval(&mid, &d)
}

/// Length of the best `n_seg`-segment polygon from `x0` to `x1` found by
/// coordinate descent starting at the straight chord. The result bounds the
/// Finsler distance from above. Flat structures return the chord length.
pub fn finsler_distance(
    f: &FinslerStructure,
    x0: &[f64],
    x1: &[f64],
    n_seg: usize,
    n_opt_iters: usize,
    seed: u64,
) -> Result<f64> {
    ensure(n_seg >= 1, || "n_seg must be at least 1".into())?;
    if x0.len() != f.dim() || x1.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: if x0.len() != f.dim() {
                x0.len()
            } else {
                x1.len()
            },
        });
    }
    let n = f.dim();
    let mut pts: Vec<Vec<f64>> = (0..=n_seg)
        .map(|k| {
            let s = k as f64 / n_seg as f64;
            x0.iter().zip(x1).map(|(a, b)| a + s * (b - a)).collect()
        })
        .collect();
    let chord = path_length(f, &pts);
    ensure(chord.is_finite(), || {
        "Finsler structure is not finite along the chord".into()
    })?;
    if f.is_flat() || n_seg == 1 || chord == 0.0 {
        return Ok(chord);
    }
    let mut rng = crate::rng::rng(seed);
    let mut order: Vec<usize> = (1..n_seg).collect();
    let mut step = 0.5 * dist2(x0, x1).sqrt() / n_seg as f64;
    let floor = 1e-9 * (1.0 + step);
    for _ in 0..n_opt_iters {
        if step < floor {
            break;
        }
        order.shuffle(&mut rng);
        let mut improved = false;
        for &k in &order {
            for j in 0..n {
                let local =
                    |p: &[Vec<f64>]| segment(f, &p[k - 1], &p[k]) + segment(f, &p[k], &p[k + 1]);
                let base = local(&pts);
                let orig = pts[k][j];
                let mut best = (base, orig);
                for s in [step, -step] {
                    pts[k][j] = orig + s;
                    let c = local(&pts);
                    if c < best.0 {
                        best = (c, orig + s);
                    }
                }
                pts[k][j] = best.1;
                improved |= best.1 != orig;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(path_length(f, &pts).min(chord))
}

/// Settings for pairwise Finsler distances between point clouds.
#[derive(Clone, Copy, Debug)]
pub struct PathOptions {
    pub n_seg: usize,
    pub n_opt_iters: usize,
    pub seed: u64,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            n_seg: 16,
            n_opt_iters: 200,
            seed: 0,
        }
    }
}

/// `sup_{a ∈ A} inf_{b ∈ B} d_F(a, b)`.
pub fn directed_finsler_hausdorff(
    f: &FinslerStructure,
    a: &CompactSet,
    b: &CompactSet,
    opts: &PathOptions,
) -> Result<f64> {
    ensure(a.dim() == b.dim() && a.dim() == f.dim(), || {
        "sets and structure differ in dimension".into()
    })?;
    let rows: Vec<f64> = (0..a.len())
        .into_par_iter()
        .map(|i| {
            let mut best = f64::INFINITY;
            for q in b.points() {
                let d =
                    finsler_distance(f, a.point(i), q, opts.n_seg, opts.n_opt_iters, opts.seed)?;
                best = best.min(d);
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().fold(0.0, f64::max))
}

/// `max(d_F(A → B), d_F(B → A))` where the second term measures paths from
/// points of `B` to points of `A`.
pub fn finsler_hausdorff(
    f: &FinslerStructure,
    a: &CompactSet,
    b: &CompactSet,
    opts: &PathOptions,
) -> Result<f64> {
    Ok(directed_finsler_hausdorff(f, a, b, opts)?.max(directed_finsler_hausdorff(f, b, a, opts)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::hausdorff;
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    fn bumpy() -> FinslerStructure {
        FinslerStructure::riemannian(2, |x| {
            let a = 1.0 + 0.8 * (x[0] * x[1]).sin().powi(2) + 0.5 * x[0] * x[0];
            let b = 1.0 + 0.3 * x[1] * x[1];
            vec![a, 0.2, 0.2, b]
        })
        .unwrap()
    }

    /// Dijkstra on a grid over `[lo, hi]²` with moves `(a, b)`, `|a|, |b| ≤ 3`
    /// coprime, each edge priced at its midpoint.
    fn grid_oracle(
        f: &FinslerStructure,
        x0: [f64; 2],
        x1: [f64; 2],
        lo: f64,
        hi: f64,
        n: usize,
    ) -> f64 {
        let step = (hi - lo) / n as f64;
        let idx = |p: [f64; 2]| {
            (
                ((p[0] - lo) / step).round() as i64,
                ((p[1] - lo) / step).round() as i64,
            )
        };
        let (s, t) = (idx(x0), idx(x1));
        let mut moves = Vec::new();
        for a in -3i64..=3 {
            for b in -3i64..=3 {
                let g = gcd(a.abs(), b.abs());
                if g == 1 {
                    moves.push((a, b));
                }
            }
        }
        let side = n as i64 + 1;
        let mut dist = vec![f64::INFINITY; (side * side) as usize];
        let key = |i: i64, j: i64| (i * side + j) as usize;
        dist[key(s.0, s.1)] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push((Reverse(0u64), s.0, s.1));
        while let Some((Reverse(dbits), i, j)) = heap.pop() {
            let d = f64::from_bits(dbits);
            if d > dist[key(i, j)] {
                continue;
            }
            if (i, j) == t {
                return d;
            }
            let p = [lo + i as f64 * step, lo + j as f64 * step];
            for &(a, b) in &moves {
                let (ni, nj) = (i + a, j + b);
                if ni < 0 || nj < 0 || ni >= side || nj >= side {
                    continue;
                }
                let q = [lo + ni as f64 * step, lo + nj as f64 * step];
                let nd = d + segment(f, &p, &q);
                if nd < dist[key(ni, nj)] {
                    dist[key(ni, nj)] = nd;
                    heap.push((Reverse(nd.to_bits()), ni, nj));
                }
            }
        }
        f64::INFINITY
    }

    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }

    #[test]
    fn euclidean_chord() {
        let d = finsler_distance(
            &FinslerStructure::euclidean(2),
            &[0.0, 0.0],
            &[3.0, 4.0],
            8,
            100,
            0,
        )
        .unwrap();
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn randers_is_asymmetric() {
        let f = FinslerStructure::randers(vec![0.5]).unwrap();
        assert!((finsler_distance(&f, &[0.0], &[1.0], 4, 10, 0).unwrap() - 1.5).abs() < 1e-12);
        assert!((finsler_distance(&f, &[1.0], &[0.0], 4, 10, 0).unwrap() - 0.5).abs() < 1e-12);
        assert!(FinslerStructure::randers(vec![1.0]).is_err());
    }

    #[test]
    fn matches_grid_oracle() {
        let f = bumpy();
        for (x0, x1) in [
            ([-1.5, -1.0], [1.5, 1.0]),
            ([-1.5, 1.5], [1.5, -0.5]),
            ([0.0, -1.5], [0.5, 1.5]),
        ] {
            let d = finsler_distance(&f, &x0, &x1, 32, 400, 3).unwrap();
            let oracle = grid_oracle(&f, x0, x1, -2.0, 2.0, 80);
            assert!((d - oracle).abs() <= 0.02 * oracle, "{d} vs {oracle}");
            let chord = finsler_distance(&f, &x0, &x1, 32, 0, 0).unwrap();
            assert!(d <= chord + 1e-12);
        }
    }

    #[test]
    fn structure_checks() {
        for f in [
            FinslerStructure::euclidean(2),
            FinslerStructure::randers(vec![0.3, -0.2]).unwrap(),
            bumpy(),
        ] {
            assert!(f.homogeneity_defect(200, 1) < 1e-9);
            assert!(f.strict_triangle_fraction(200, 2) > 0.95);
        }
    }

    #[test]
    fn set_distances() {
        let a = CompactSet::circle([0.0, 0.0], 1.0, 12).unwrap();
        let b = CompactSet::circle([0.5, 0.0], 0.5, 9).unwrap();
        let opts = PathOptions::default();
        let e = FinslerStructure::euclidean(2);
        assert_eq!(finsler_hausdorff(&e, &a, &a, &opts).unwrap(), 0.0);
        assert!(
            (finsler_hausdorff(&e, &a, &b, &opts).unwrap() - hausdorff(&a, &b).unwrap()).abs()
                < 1e-12
        );

        let r = FinslerStructure::randers(vec![0.5, 0.0]).unwrap();
        let ab = directed_finsler_hausdorff(&r, &a, &b, &opts).unwrap();
        let ba = directed_finsler_hausdorff(&r, &b, &a, &opts).unwrap();
        assert!((ab - ba).abs() > 1e-3);
        let brute = |p: &CompactSet, q: &CompactSet| {
            p.points()
                .map(|x| {
                    q.points()
                        .map(|y| {
                            let d: Vec<f64> = x.iter().zip(y).map(|(s, t)| t - s).collect();
                            r.eval(x, &d)
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        assert!((ab - brute(&a, &b)).abs() < 1e-12);
        assert!((ba - brute(&b, &a)).abs() < 1e-12);
    }
}

//! Point-cloud compact sets and the metric operations on them.

mod grid;
mod hull;
pub mod io;

pub use grid::DirectionGrid;
pub use hull::{convex_hull, minkowski_combination, ConvexHull};

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{ensure, Error, Result};

/// Above this many point pairs distance scans run on the rayon pool.
const PAR_PAIRS: usize = 1 << 16;

/// Unit-norm tolerance for directions handed to [`CompactSet::support`].
pub const UNIT_TOL: f64 = 1e-9;

/// A nonempty finite point cloud standing in for a compact subset of R^n.
///
/// Points are stored row-major in one flat buffer. `resolution` is the
/// net spacing that produced the cloud (0 for exact finite sets).
#[derive(Clone, Debug, PartialEq)]
pub struct CompactSet {
    dim: usize,
    resolution: f64,
    data: Vec<f64>,
}

impl CompactSet {
    pub fn new(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            data.extend_from_slice(p);
        }
        Self::from_flat(dim, data, 0.0)
    }

    pub fn from_flat(dim: usize, data: Vec<f64>, resolution: f64) -> Result<Self> {
        ensure(dim > 0, || "set dimension must be positive".into())?;
        ensure(!data.is_empty(), || "compact set must be nonempty".into())?;
        ensure(data.len() % dim == 0, || {
            format!(
                "flat buffer of {} values is not a multiple of dim {dim}",
                data.len()
            )
        })?;
        ensure(data.iter().all(|v| v.is_finite()), || {
            "compact set contains a non-finite coordinate".into()
        })?;
        ensure(resolution >= 0.0 && resolution.is_finite(), || {
            format!("resolution must be a nonnegative number, got {resolution}")
        })?;
        Ok(Self {
            dim,
            resolution,
            data,
        })
    }

    pub fn singleton(x: &[f64]) -> Result<Self> {
        Self::from_flat(x.len(), x.to_vec(), 0.0)
    }

    /// Samples the interval `[lo, hi]` at spacing at most `spacing`, endpoints included.
    pub fn interval(lo: f64, hi: f64, spacing: f64) -> Result<Self> {
        ensure(lo <= hi, || format!("interval [{lo}, {hi}] is empty"))?;
        ensure(spacing > 0.0, || "spacing must be positive".into())?;
        let n = ((hi - lo) / spacing).ceil().max(0.0) as usize;
        let data = if n == 0 {
            vec![lo]
        } else {
            (0..=n)
                .map(|i| lo + (hi - lo) * i as f64 / n as f64)
                .collect()
        };
        Self::from_flat(1, data, 0.0)
    }

    /// Samples the axis-aligned box `[lo, hi]` on a grid of spacing at most `spacing`.
    pub fn sample_box(lo: &[f64], hi: &[f64], spacing: f64) -> Result<Self> {
        ensure(lo.len() == hi.len() && !lo.is_empty(), || {
            "box bounds disagree".into()
        })?;
        ensure(spacing > 0.0, || "spacing must be positive".into())?;
        let counts: Vec<usize> = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| ((b - a) / spacing).ceil().max(0.0) as usize)
            .collect();
        let total: usize = counts.iter().map(|c| c + 1).product();
        let mut data = Vec::with_capacity(total * lo.len());
        let mut idx = vec![0usize; lo.len()];
        loop {
            for (k, &i) in idx.iter().enumerate() {
                let t = if counts[k] == 0 {
                    0.0
                } else {
                    i as f64 / counts[k] as f64
                };
                data.push(lo[k] + (hi[k] - lo[k]) * t);
            }
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] <= counts[k] {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
        Self::from_flat(lo.len(), data, 0.0)
    }

    /// `n` equally spaced points on the circle of given center and radius.
    pub fn circle(center: [f64; 2], radius: f64, n: usize) -> Result<Self> {
        ensure(n > 0, || "circle needs at least one sample".into())?;
        let data = (0..n)
            .flat_map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            })
            .collect();
        Self::from_flat(2, data, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn with_resolution(mut self, h: f64) -> Self {
        self.resolution = h.max(0.0);
        self
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    /// Componentwise bounds `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.points() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for p in self.points() {
            for k in 0..self.dim {
                c[k] += p[k];
            }
        }
        let n = self.len() as f64;
        c.iter_mut().for_each(|v| *v /= n);
        c
    }

    /// Largest distance from the origin to a stored point.
    pub fn radius(&self) -> f64 {
        self.points().map(norm).fold(0.0, f64::max)
    }

    /// Projection onto the given coordinates (no pruning).
    pub fn project(&self, coords: &[usize]) -> Result<Self> {
        ensure(coords.iter().all(|&c| c < self.dim), || {
            format!("projection coordinate out of range for dim {}", self.dim)
        })?;
        let data = self
            .points()
            .flat_map(|p| coords.iter().map(move |&c| p[c]))
            .collect();
        Self::from_flat(coords.len(), data, self.resolution)
    }

    /// Set union; resolution is the coarser of the two.
    pub fn union(&self, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::from_flat(self.dim, data, self.resolution.max(other.resolution))
    }

    pub fn map_points(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let rows: Vec<Vec<f64>> = self.points().map(f).collect();
        let dim = rows[0].len();
        let data = rows.into_iter().flatten().collect();
        Self::from_flat(dim, data, self.resolution)
    }

    /// `max_{a in A} <a, d>`. `d` must be a unit vector.
    pub fn support(&self, d: &[f64]) -> Result<f64> {
        if d.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: d.len(),
            });
        }
        ensure((norm(d) - 1.0).abs() <= UNIT_TOL, || {
            format!("support direction has norm {}, expected 1", norm(d))
        })?;
        Ok(self.support_point(d).1)
    }

    /// Index and value of the first point maximizing `<a, d>`.
    pub(crate) fn support_point(&self, d: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, p) in self.points().enumerate() {
            let v = dot(p, d);
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }

    /// Euclidean distance from `x` to the nearest stored point.
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        self.points()
            .map(|p| dist2(p, x))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// Sorts points lexicographically and drops exact duplicates.
    pub fn canonical(&self) -> Self {
        let mut idx = lex_order(&self.data, self.dim);
        idx.dedup_by(|a, b| {
            self.point(*a)
                .iter()
                .zip(self.point(*b))
                .all(|(x, y)| x == y)
        });
        Self {
            dim: self.dim,
            resolution: self.resolution,
            data: gather(&self.data, self.dim, &idx),
        }
    }
}

fn check_dims(a: &CompactSet, b: &CompactSet) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn lex_order(data: &[f64], dim: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..data.len() / dim).collect();
    idx.sort_by(|&i, &j| lex_cmp(&data[i * dim..(i + 1) * dim], &data[j * dim..(j + 1) * dim]));
    idx
}

fn gather(data: &[f64], dim: usize, idx: &[usize]) -> Vec<f64> {
    idx.iter()
        .flat_map(|&i| data[i * dim..(i + 1) * dim].iter().copied())
        .collect()
}

/// `sup_{a in A} inf_{b in B} |a - b|`.
pub fn directed_hausdorff(a: &CompactSet, b: &CompactSet) -> Result<f64> {
    check_dims(a, b)?;
    Ok(directed_sq(a, b).sqrt())
}

// Early-break scan: once some b is closer to a than the running max, a
// cannot raise the max. The result is still the exact max.
fn directed_sq(a: &CompactSet, b: &CompactSet) -> f64 {
    let scan = |cmax: f64, p: &[f64]| -> f64 {
        let mut best = f64::INFINITY;
        for q in b.points() {
            let d = dist2(p, q);
            if d < best {
                best = d;
                if best <= cmax {
                    return cmax;
                }
            }
        }
        cmax.max(best)
    };
    if a.len() * b.len() < PAR_PAIRS {
        a.points().fold(0.0, scan)
    } else {
        a.data
            .par_chunks_exact(a.dim)
            .fold(|| 0.0, scan)
            .reduce(|| 0.0, f64::max)
    }
}

/// Hausdorff distance between the stored clouds (exact, brute force).
pub fn hausdorff(a: &CompactSet, b: &CompactSet) -> Result<f64> {
    check_dims(a, b)?;
    Ok(directed_sq(a, b).max(directed_sq(b, a)).sqrt())
}

/// Greedy h-net of `a`: points are visited in lexicographic order and kept
/// unless a kept point lies within distance `h`.
pub fn prune(a: &CompactSet, h: f64) -> Result<CompactSet> {
    prune_retaining(a, h, &[])
}

/// Like [`prune`], but the points flagged in `keep` survive unconditionally
/// and are inserted first. Retained points may sit closer than `h` apart.
pub fn prune_retaining(a: &CompactSet, h: f64, keep: &[usize]) -> Result<CompactSet> {
    ensure(h > 0.0 && h.is_finite(), || {
        format!("prune spacing must be positive, got {h}")
    })?;
    let dim = a.dim;
    let order = lex_order(&a.data, dim);
    let mut forced = vec![false; a.len()];
    for &k in keep {
        ensure(k < a.len(), || format!("retained index {k} out of range"))?;
        forced[k] = true;
    }
    let mut net = NetIndex::new(dim, h);
    let mut kept = Vec::new();
    for &i in order.iter().filter(|&&i| forced[i]) {
        let p = a.point(i);
        if !net.has_exact(p, &a.data) {
            net.insert(p, i);
            kept.push(i);
        }
    }
    for &i in order.iter().filter(|&&i| !forced[i]) {
        let p = a.point(i);
        if !net.any_within(p, &a.data) {
            net.insert(p, i);
            kept.push(i);
        }
    }
    kept.sort_by(|&i, &j| lex_cmp(a.point(i), a.point(j)));
    Ok(CompactSet {
        dim,
        resolution: a.resolution.max(h),
        data: gather(&a.data, dim, &kept),
    })
}

/// Uniform-grid bucket index used by the greedy net. Cells have side `h`,
/// so any point within `h` lives in one of the 3^dim neighbor cells.
struct NetIndex {
    dim: usize,
    h: f64,
    h2: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
    all: Vec<usize>,
    offsets: Vec<Vec<i64>>,
}

impl NetIndex {
    fn new(dim: usize, h: f64) -> Self {
        // Past a handful of dimensions the 3^dim neighbor sweep is slower
        // than scanning the kept list.
        let offsets = if dim <= 4 {
            (0..3usize.pow(dim as u32))
                .map(|mut code| {
                    (0..dim)
                        .map(|_| {
                            let o = (code % 3) as i64 - 1;
                            code /= 3;
                            o
                        })
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };
        Self {
            dim,
            h,
            h2: h * h,
            cells: HashMap::new(),
            all: Vec::new(),
            offsets,
        }
    }

    fn key(&self, p: &[f64]) -> Vec<i64> {
        p.iter().map(|v| (v / self.h).floor() as i64).collect()
    }

    fn insert(&mut self, p: &[f64], i: usize) {
        if self.offsets.is_empty() {
            self.all.push(i);
        } else {
            let key = self.key(p);
            self.cells.entry(key).or_default().push(i);
        }
    }

    fn candidates<'a>(&'a self, p: &[f64]) -> Box<dyn Iterator<Item = usize> + 'a> {
        if self.offsets.is_empty() {
            return Box::new(self.all.iter().copied());
        }
        let key = self.key(p);
        Box::new(self.offsets.iter().flat_map(move |off| {
            let k: Vec<i64> = key.iter().zip(off).map(|(a, b)| a + b).collect();
            self.cells.get(&k).into_iter().flatten().copied()
        }))
    }

    fn any_within(&self, p: &[f64], data: &[f64]) -> bool {
        let d = self.dim;
        self.candidates(p)
            .any(|j| dist2(p, &data[j * d..(j + 1) * d]) <= self.h2)
    }

    fn has_exact(&self, p: &[f64], data: &[f64]) -> bool {
        let d = self.dim;
        self.candidates(p)
            .any(|j| dist2(p, &data[j * d..(j + 1) * d]) == 0.0)
    }
}

/// Outer approximation of `A + rB`: every point shifted by `r` along every
/// grid direction, together with `A`, pruned to `A`'s resolution.
pub fn minkowski_ball(a: &CompactSet, r: f64, grid: &DirectionGrid) -> Result<CompactSet> {
    ensure(r >= 0.0 && r.is_finite(), || {
        format!("radius must be nonnegative, got {r}")
    })?;
    ensure(grid.dim() == a.dim, || {
        format!(
            "grid dimension {} does not match set dimension {}",
            grid.dim(),
            a.dim
        )
    })?;
    if r == 0.0 {
        return Ok(a.clone());
    }
    let mut data = a.data.clone();
    for p in a.points() {
        for d in grid.dirs() {
            data.extend(p.iter().zip(d).map(|(x, u)| x + r * u));
        }
    }
    let out = CompactSet::from_flat(a.dim, data, a.resolution)?;
    if a.resolution > 0.0 {
        prune(&out, a.resolution)
    } else {
        Ok(out.canonical())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set1(v: &[f64]) -> CompactSet {
        CompactSet::from_flat(1, v.to_vec(), 0.0).unwrap()
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CompactSet::from_flat(1, vec![], 0.0).is_err());
        assert!(CompactSet::from_flat(2, vec![1.0, f64::NAN], 0.0).is_err());
        assert!(CompactSet::new(2, &[vec![1.0]]).is_err());
        let a = set1(&[0.0]);
        let b = CompactSet::singleton(&[0.0, 0.0]).unwrap();
        assert!(matches!(
            hausdorff(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hausdorff_hand_cases() {
        let a = set1(&[0.0]);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff(&a, &set1(&[3.0, 5.0])).unwrap(), 5.0);
        let i = CompactSet::interval(0.0, 1.0, 0.01).unwrap();
        let j = CompactSet::interval(2.0, 4.0, 0.01).unwrap();
        assert!((hausdorff(&i, &j).unwrap() - 3.0).abs() <= 0.01);
    }

    #[test]
    fn hausdorff_parallel_path_matches_serial() {
        let a = CompactSet::sample_box(&[0.0, 0.0], &[1.0, 1.0], 0.01).unwrap();
        let b = CompactSet::circle([0.3, 0.2], 0.7, 500).unwrap();
        assert!(a.len() * b.len() >= PAR_PAIRS);
        let brute = a
            .points()
            .map(|p| b.distance_to(p))
            .fold(0.0, f64::max)
            .max(b.points().map(|q| a.distance_to(q)).fold(0.0, f64::max));
        assert_eq!(hausdorff(&a, &b).unwrap(), brute);
    }

    #[test]
    fn prune_hand_cases() {
        let a = set1(&[1.0, 0.001, 0.0]);
        let p = prune(&a, 0.01).unwrap();
        assert_eq!(p.as_flat(), &[0.0, 1.0]);
        assert_eq!(p.resolution(), 0.01);
        let b = set1(&[0.0, 0.5, 1.0]);
        assert_eq!(prune(&b, 0.1).unwrap().as_flat(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn prune_retaining_keeps_flagged() {
        let a = set1(&[0.0, 0.001, 0.002, 1.0]);
        let p = prune_retaining(&a, 0.01, &[2]).unwrap();
        assert_eq!(p.as_flat(), &[0.002, 1.0]);
    }

    #[test]
    fn prune_high_dim_uses_list_scan() {
        let a = CompactSet::from_flat(
            5,
            vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.001, 0.0, 0.0, 0.0, 0.0],
            0.0,
        )
        .unwrap();
        assert_eq!(prune(&a, 0.01).unwrap().len(), 1);
    }

    #[test]
    fn minkowski_hand_cases() {
        let g = DirectionGrid::new(1).unwrap();
        let a = set1(&[0.0]);
        assert_eq!(minkowski_ball(&a, 0.0, &g).unwrap(), a);
        let m = minkowski_ball(&a, 1.0, &g).unwrap();
        assert_eq!(m.as_flat(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn support_hand_cases() {
        let sq = CompactSet::new(
            2,
            &[
                vec![1.0, 1.0],
                vec![-1.0, 1.0],
                vec![-1.0, -1.0],
                vec![1.0, -1.0],
            ],
        )
        .unwrap();
        assert_eq!(sq.support(&[1.0, 0.0]).unwrap(), 1.0);
        assert!(sq.support(&[2.0, 0.0]).is_err());
        let z = CompactSet::singleton(&[0.0, 0.0]).unwrap();
        let g = DirectionGrid::new(2).unwrap();
        assert!(g.dirs().all(|d| z.support(d).unwrap() == 0.0));
    }

    #[test]
    fn sample_box_corners() {
        let b = CompactSet::sample_box(&[0.0, -1.0], &[1.0, 1.0], 0.5).unwrap();
        assert_eq!(b.len(), 3 * 5);
        let (lo, hi) = b.bounding_box();
        assert_eq!(lo, vec![0.0, -1.0]);
        assert_eq!(hi, vec![1.0, 1.0]);
    }

    fn cloud(dim: usize, max: usize) -> impl Strategy<Value = CompactSet> {
        prop::collection::vec(prop::collection::vec(-5.0f64..5.0, dim), 1..max)
            .prop_map(move |rows| CompactSet::new(dim, &rows).unwrap())
    }

    proptest! {
        #[test]
        fn hausdorff_metric_axioms(a in cloud(2, 12), b in cloud(2, 12), c in cloud(2, 12)) {
            let ab = hausdorff(&a, &b).unwrap();
            let ba = hausdorff(&b, &a).unwrap();
            let bc = hausdorff(&b, &c).unwrap();
            let ac = hausdorff(&a, &c).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn prune_is_idempotent_net(a in cloud(2, 60), h in 0.05f64..2.0) {
            let p = prune(&a, h).unwrap();
            prop_assert_eq!(&prune(&p, h).unwrap(), &p);
            for q in a.points() {
                prop_assert!(p.distance_to(q) <= h);
            }
            for i in 0..p.len() {
                for j in (i + 1)..p.len() {
                    prop_assert!(dist2(p.point(i), p.point(j)) > h * h);
                }
            }
        }

        #[test]
        fn support_matches_scan(a in cloud(3, 30), th in 0.0f64..6.3, z in -1.0f64..1.0) {
            let r = (1.0 - z * z).sqrt();
            let d = [r * th.cos(), r * th.sin(), z];
            let brute = a.points().map(|p| dot(p, &d)).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(a.support(&d).unwrap(), brute);
        }

        #[test]
        fn support_is_sublinear(a in cloud(2, 20), t1 in 0.0f64..6.3, t2 in 0.0f64..6.3) {
            let d1 = [t1.cos(), t1.sin()];
            let d2 = [t2.cos(), t2.sin()];
            let s = [d1[0] + d2[0], d1[1] + d2[1]];
            let n = norm(&s);
            prop_assume!(n > 1e-6);
            let lhs = a.support(&[s[0] / n, s[1] / n]).unwrap() * n;
            let rhs = a.support(&d1).unwrap() + a.support(&d2).unwrap();
            prop_assert!(lhs <= rhs + 1e-9);
        }

        #[test]
        fn minkowski_inflates_by_r(x in -3.0f64..3.0, y in -3.0f64..3.0, r in 0.0f64..2.0) {
            let a = CompactSet::singleton(&[x, y]).unwrap();
            let g = DirectionGrid::new(2).unwrap();
            let m = minkowski_ball(&a, r, &g).unwrap();
            prop_assert!((hausdorff(&m, &a).unwrap() - r).abs() <= 1e-12 * (1.0 + r));
        }
    }

    /// Number of grid cells of side h/2 (cell diameter below h) meeting the
    /// bounding box gives an upper bound on any h-separated subset.
    #[test]
    fn prune_size_bounded_by_covering_grid() {
        use rand::Rng;
        let mut rng = crate::rng::rng(5);
        for _ in 0..20 {
            let n = rng.gen_range(50..400);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..0.5)])
                .collect();
            let a = CompactSet::new(2, &rows).unwrap();
            let h = rng.gen_range(0.05..0.3);
            let side = h / 2.0_f64.sqrt();
            let (lo, hi) = a.bounding_box();
            let cells: usize = (0..2)
                .map(|k| ((hi[k] - lo[k]) / side).floor() as usize + 1)
                .product();
            assert!(prune(&a, h).unwrap().len() <= cells);
        }
    }
}

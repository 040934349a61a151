//! Convex hulls of point clouds and distance queries against them.
//!
//! Hulls are built in the affine span of the cloud, so a flat cloud in R^3
//! is handled as a planar polygon. Spans up to dimension 3 are exact; above
//! that the vertex set is the support points of a direction grid and the
//! hull is flagged approximate.

use super::{dist2, dot, lex_cmp, norm, CompactSet, DirectionGrid};
use crate::error::Result;

const FW_ITERS: usize = 2000;

#[derive(Clone, Debug)]
pub struct ConvexHull {
    dim: usize,
    exact: bool,
    origin: Vec<f64>,
    /// Orthonormal basis of the affine span, one row per direction.
    basis: Vec<Vec<f64>>,
    /// Extreme points in ambient coordinates (2-d spans: counter-clockwise).
    vertices: Vec<Vec<f64>>,
    /// Extreme points in span coordinates, same order as `vertices`.
    local: Vec<Vec<f64>>,
    /// Outward triangles over `local` when the span is 3-d.
    faces: Vec<Face>,
    tol: f64,
}

#[derive(Clone, Debug)]
struct Face {
    idx: [usize; 3],
    pts: [[f64; 3]; 3],
    normal: [f64; 3],
    offset: f64,
}

/// Extreme points of `conv(a)`; resolution is carried over.
pub fn convex_hull(a: &CompactSet) -> CompactSet {
    ConvexHull::new(a).vertex_set(a.resolution())
}

impl ConvexHull {
    pub fn new(a: &CompactSet) -> Self {
        let dim = a.dim();
        let pts: Vec<&[f64]> = a.points().collect();
        let (lo, hi) = a.bounding_box();
        let scale = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| (h - l).abs().max(l.abs()).max(h.abs()))
            .fold(0.0, f64::max)
            .max(1e-300);
        let tol = 1e-10 * scale.max(1.0);

        // Greedy affine basis: repeatedly add the point farthest from the
        // current span.
        let origin = pts
            .iter()
            .copied()
            .min_by(|p, q| lex_cmp(p, q))
            .unwrap()
            .to_vec();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut seeds = vec![pts.iter().position(|p| *p == origin.as_slice()).unwrap()];
        while basis.len() < dim {
            let mut best = (0, 0.0);
            for (i, p) in pts.iter().enumerate() {
                let r = residual(p, &origin, &basis);
                let n = norm(&r);
                if n > best.1 {
                    best = (i, n);
                }
            }
            if best.1 <= tol {
                break;
            }
            let r = residual(pts[best.0], &origin, &basis);
            basis.push(r.iter().map(|v| v / best.1).collect());
            seeds.push(best.0);
        }
        let k = basis.len();
        let to_local = |p: &[f64]| -> Vec<f64> {
            let d: Vec<f64> = p.iter().zip(&origin).map(|(x, o)| x - o).collect();
            basis.iter().map(|b| dot(b, &d)).collect()
        };
        let ys: Vec<Vec<f64>> = pts.iter().map(|p| to_local(p)).collect();

        let mut faces = Vec::new();
        let (order, exact): (Vec<usize>, bool) = match k {
            0 => (vec![seeds[0]], true),
            1 => {
                let lo = (0..ys.len())
                    .min_by(|&i, &j| ys[i][0].total_cmp(&ys[j][0]))
                    .unwrap();
                let hi = (0..ys.len())
                    .max_by(|&i, &j| ys[i][0].total_cmp(&ys[j][0]))
                    .unwrap();
                (vec![lo, hi], true)
            }
            2 => (monotone_chain(&ys), true),
            3 => {
                let (verts, f) = hull3(&ys, [seeds[0], seeds[1], seeds[2], seeds[3]], tol);
                faces = f;
                (verts, true)
            }
            _ => {
                let grid = DirectionGrid::new(k).expect("positive dimension");
                let mut idx: Vec<usize> = grid
                    .dirs()
                    .map(|d| {
                        (0..ys.len())
                            .max_by(|&i, &j| {
                                dot(&ys[i], d).total_cmp(&dot(&ys[j], d)).then(j.cmp(&i))
                            })
                            .unwrap()
                    })
                    .collect();
                idx.sort_unstable();
                idx.dedup();
                (idx, false)
            }
        };
        Self {
            dim,
            exact,
            vertices: order.iter().map(|&i| pts[i].to_vec()).collect(),
            local: order.iter().map(|&i| ys[i].clone()).collect(),
            origin,
            basis,
            faces,
            tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the affine span of the input cloud.
    pub fn affine_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn vertex_set(&self, resolution: f64) -> CompactSet {
        let mut rows = self.vertices.clone();
        rows.sort_by(|a, b| lex_cmp(a, b));
        CompactSet::new(self.dim, &rows)
            .expect("hull of a valid set is valid")
            .with_resolution(resolution)
    }

    fn to_local(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let d: Vec<f64> = x.iter().zip(&self.origin).map(|(a, o)| a - o).collect();
        let y: Vec<f64> = self.basis.iter().map(|b| dot(b, &d)).collect();
        let off = norm(&residual(x, &self.origin, &self.basis));
        (y, off)
    }

    fn from_local(&self, y: &[f64]) -> Vec<f64> {
        let mut x = self.origin.clone();
        for (b, c) in self.basis.iter().zip(y) {
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += c * bi;
            }
        }
        x
    }

    /// Nearest point of the hull in span coordinates.
    fn project_local(&self, y: &[f64]) -> Vec<f64> {
        match self.affine_dim() {
            0 => vec![],
            1 => {
                let (a, b) = (self.local[0][0], self.local[1][0]);
                vec![y[0].clamp(a.min(b), a.max(b))]
            }
            2 => {
                if self.inside_polygon(y) {
                    return y.to_vec();
                }
                let n = self.local.len();
                (0..n)
                    .map(|i| segment_nearest(y, &self.local[i], &self.local[(i + 1) % n]))
                    .min_by(|p, q| dist2(p, y).total_cmp(&dist2(q, y)))
                    .unwrap()
            }
            3 if !self.faces.is_empty() => {
                if self
                    .faces
                    .iter()
                    .all(|f| dot(&f.normal, y) - f.offset <= self.tol)
                {
                    return y.to_vec();
                }
                self.faces
                    .iter()
                    .map(|f| triangle_nearest(y, &f.pts[0], &f.pts[1], &f.pts[2]))
                    .min_by(|p, q| dist2(p, y).total_cmp(&dist2(q, y)))
                    .unwrap()
            }
            _ => frank_wolfe(&self.local, y),
        }
    }

    fn inside_polygon(&self, y: &[f64]) -> bool {
        let n = self.local.len();
        (0..n).all(|i| {
            let a = &self.local[i];
            let b = &self.local[(i + 1) % n];
            cross(a, b, y) >= -self.tol * norm(&[b[0] - a[0], b[1] - a[1]])
        })
    }

    /// Euclidean projection of `x` onto the hull.
    pub fn nearest_point(&self, x: &[f64]) -> Vec<f64> {
        let (y, _) = self.to_local(x);
        self.from_local(&self.project_local(&y))
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        dist2(x, &self.nearest_point(x)).sqrt()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.distance(x) <= tol
    }

    /// Distance to the hull outside it; inside, minus the distance to the
    /// relative boundary (measured within the affine span, so a segment in
    /// the plane has interior points at negative depth).
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        let (y, off) = self.to_local(x);
        let p = self.project_local(&y);
        let outside = (dist2(&y, &p) + off * off).sqrt();
        if outside > self.tol {
            return outside;
        }
        -self.depth(&y)
    }

    /// Distance from an interior point (span coordinates) to the relative
    /// boundary.
    fn depth(&self, y: &[f64]) -> f64 {
        match self.affine_dim() {
            0 => 0.0,
            1 => {
                let (a, b) = (self.local[0][0], self.local[1][0]);
                (y[0] - a.min(b)).min(a.max(b) - y[0]).max(0.0)
            }
            2 => {
                let n = self.local.len();
                (0..n)
                    .map(|i| {
                        let q = segment_nearest(y, &self.local[i], &self.local[(i + 1) % n]);
                        dist2(&q, y).sqrt()
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            3 if !self.faces.is_empty() => self
                .faces
                .iter()
                .map(|f| (f.offset - dot(&f.normal, y)).max(0.0))
                .fold(f64::INFINITY, f64::min),
            k => {
                // min over unit d of h(d) - <y, d>, sampled on a grid.
                let grid = DirectionGrid::new(k).expect("positive dimension");
                grid.dirs()
                    .map(|d| {
                        let h = self
                            .local
                            .iter()
                            .map(|v| dot(v, d))
                            .fold(f64::NEG_INFINITY, f64::max);
                        (h - dot(y, d)).max(0.0)
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Point of the relative boundary nearest `x`. Points outside the hull
    /// map to their projection.
    pub fn nearest_boundary_point(&self, x: &[f64]) -> Vec<f64> {
        let (y, off) = self.to_local(x);
        let p = self.project_local(&y);
        if (dist2(&y, &p) + off * off).sqrt() > self.tol {
            return self.from_local(&p);
        }
        let yb = match self.affine_dim() {
            0 => y.clone(),
            1 => {
                let (a, b) = (self.local[0][0], self.local[1][0]);
                let (lo, hi) = (a.min(b), a.max(b));
                vec![if y[0] - lo <= hi - y[0] { lo } else { hi }]
            }
            2 => {
                let n = self.local.len();
                (0..n)
                    .map(|i| segment_nearest(&y, &self.local[i], &self.local[(i + 1) % n]))
                    .min_by(|p, q| dist2(p, &y).total_cmp(&dist2(q, &y)))
                    .unwrap()
            }
            3 if !self.faces.is_empty() => {
                let f = self
                    .faces
                    .iter()
                    .min_by(|f, g| {
                        (f.offset - dot(&f.normal, &y)).total_cmp(&(g.offset - dot(&g.normal, &y)))
                    })
                    .unwrap();
                let t = f.offset - dot(&f.normal, &y);
                y.iter().zip(&f.normal).map(|(a, n)| a + t * n).collect()
            }
            k => {
                let grid = DirectionGrid::new(k).expect("positive dimension");
                let (d, t) = grid
                    .dirs()
                    .map(|d| {
                        let h = self
                            .local
                            .iter()
                            .map(|v| dot(v, d))
                            .fold(f64::NEG_INFINITY, f64::max);
                        (d, h - dot(&y, d))
                    })
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                y.iter().zip(d).map(|(a, n)| a + t * n).collect()
            }
        };
        self.from_local(&yb)
    }
}

fn residual(p: &[f64], origin: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut r: Vec<f64> = p.iter().zip(origin).map(|(x, o)| x - o).collect();
    for b in basis {
        let c = dot(&r, b);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri -= c * bi;
        }
    }
    r
}

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Indices of the hull vertices in counter-clockwise order.
fn monotone_chain(ys: &[Vec<f64>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..ys.len()).collect();
    idx.sort_by(|&i, &j| lex_cmp(&ys[i], &ys[j]).then(i.cmp(&j)));
    idx.dedup_by(|a, b| ys[*a] == ys[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2
                && cross(&ys[hull[hull.len() - 2]], &ys[hull[hull.len() - 1]], &ys[i]) <= 0.0
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}

fn sub3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn make_face(ys: &[Vec<f64>], idx: [usize; 3], inside: &[f64]) -> Face {
    let n = cross3(
        sub3(&ys[idx[1]], &ys[idx[0]]),
        sub3(&ys[idx[2]], &ys[idx[0]]),
    );
    let len = norm(&n).max(1e-300);
    let mut normal = [n[0] / len, n[1] / len, n[2] / len];
    let mut idx = idx;
    if dot(&normal, inside) - dot(&normal, &ys[idx[0]]) > 0.0 {
        normal = [-normal[0], -normal[1], -normal[2]];
        idx.swap(1, 2);
    }
    let pts = idx.map(|i| [ys[i][0], ys[i][1], ys[i][2]]);
    Face {
        idx,
        pts,
        normal,
        offset: dot(&normal, &ys[idx[0]]),
    }
}

/// Incremental 3-d hull. Returns the sorted vertex indices and the faces
/// (indexed into `ys`).
fn hull3(ys: &[Vec<f64>], seed: [usize; 4], tol: f64) -> (Vec<usize>, Vec<Face>) {
    let inside: Vec<f64> = (0..3)
        .map(|k| seed.iter().map(|&i| ys[i][k]).sum::<f64>() / 4.0)
        .collect();
    let mut faces: Vec<Face> = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]
        .iter()
        .map(|t| make_face(ys, [seed[t[0]], seed[t[1]], seed[t[2]]], &inside))
        .collect();
    for (i, p) in ys.iter().enumerate() {
        if seed.contains(&i) {
            continue;
        }
        let visible: Vec<bool> = faces
            .iter()
            .map(|f| dot(&f.normal, p) - f.offset > tol)
            .collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, &v)| v) {
            let [a, b, c] = f.idx;
            edges.extend([(a, b), (b, c), (c, a)]);
        }
        let horizon: Vec<(usize, usize)> = edges
            .iter()
            .copied()
            .filter(|&(a, b)| !edges.contains(&(b, a)))
            .collect();
        let mut next: Vec<Face> = faces
            .into_iter()
            .zip(&visible)
            .filter(|(_, &v)| !v)
            .map(|(f, _)| f)
            .collect();
        for (a, b) in horizon {
            next.push(make_face(ys, [a, b, i], &inside));
        }
        faces = next;
    }
    // Points coplanar with a final facet can survive as vertices of an
    // intermediate hull. A true vertex touches at least three facet planes.
    let mut verts: Vec<usize> = faces.iter().flat_map(|f| f.idx).collect();
    verts.sort_unstable();
    verts.dedup();
    verts.retain(|&v| {
        let mut planes: Vec<[f64; 3]> = Vec::new();
        for f in faces.iter().filter(|f| f.idx.contains(&v)) {
            if !planes.iter().any(|n| dist2(n, &f.normal) < 1e-12) {
                planes.push(f.normal);
            }
        }
        planes.len() >= 3
    });
    (verts, faces)
}

fn segment_nearest(y: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    let ab: Vec<f64> = b.iter().zip(a).map(|(x, z)| x - z).collect();
    let l2 = dot(&ab, &ab);
    let t = if l2 == 0.0 {
        0.0
    } else {
        let ay: Vec<f64> = y.iter().zip(a).map(|(x, z)| x - z).collect();
        (dot(&ay, &ab) / l2).clamp(0.0, 1.0)
    };
    a.iter().zip(&ab).map(|(x, d)| x + t * d).collect()
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
fn triangle_nearest(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    let ab = sub3(b, a);
    let ac = sub3(c, a);
    let ap = sub3(p, a);
    let at =
        |s: f64, t: f64| -> Vec<f64> { (0..3).map(|k| a[k] + s * ab[k] + t * ac[k]).collect() };
    let d1 = dot(&ab, &ap);
    let d2 = dot(&ac, &ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a.to_vec();
    }
    let bp = sub3(p, b);
    let d3 = dot(&ab, &bp);
    let d4 = dot(&ac, &bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b.to_vec();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return at(d1 / (d1 - d3), 0.0);
    }
    let cp = sub3(p, c);
    let d5 = dot(&ab, &cp);
    let d6 = dot(&ac, &cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c.to_vec();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return at(0.0, d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (0..3).map(|k| b[k] + w * (c[k] - b[k])).collect();
    }
    let denom = 1.0 / (va + vb + vc);
    at(vb * denom, vc * denom)
}

/// Projection onto `conv(verts)` by Frank-Wolfe with exact line search.
fn frank_wolfe(verts: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let mut z = verts
        .iter()
        .min_by(|p, q| dist2(p, y).total_cmp(&dist2(q, y)))
        .unwrap()
        .clone();
    for _ in 0..FW_ITERS {
        let g: Vec<f64> = z.iter().zip(y).map(|(a, b)| a - b).collect();
        let s = verts
            .iter()
            .min_by(|p, q| dot(&g, p).total_cmp(&dot(&g, q)))
            .unwrap();
        let zs: Vec<f64> = z.iter().zip(s).map(|(a, b)| a - b).collect();
        let gap = dot(&g, &zs);
        let l2 = dot(&zs, &zs);
        if gap <= 1e-15 || l2 == 0.0 {
            break;
        }
        let gamma = (gap / l2).clamp(0.0, 1.0);
        for (zi, d) in z.iter_mut().zip(&zs) {
            *zi -= gamma * d;
        }
    }
    z
}

/// Convex hull of `(1 - s) A + s B`.
pub fn minkowski_combination(a: &CompactSet, b: &CompactSet, s: f64) -> Result<CompactSet> {
    let ha = ConvexHull::new(a);
    let hb = ConvexHull::new(b);
    let mut data = Vec::with_capacity(ha.vertices.len() * hb.vertices.len() * a.dim());
    for p in &ha.vertices {
        for q in &hb.vertices {
            data.extend(p.iter().zip(q).map(|(x, y)| (1.0 - s) * x + s * y));
        }
    }
    let sum = CompactSet::from_flat(a.dim(), data, a.resolution().max(b.resolution()))?;
    Ok(convex_hull(&sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn set2(rows: &[[f64; 2]]) -> CompactSet {
        CompactSet::new(2, &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    /// Pairwise half-plane oracle: (i, j) is a hull edge when every other
    /// point lies weakly on one side and collinear points fall inside the
    /// segment.
    fn brute_hull(a: &CompactSet) -> Vec<Vec<f64>> {
        let n = a.len();
        let mut out: Vec<Vec<f64>> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j || a.point(i) == a.point(j) {
                    continue;
                }
                let (p, q) = (a.point(i), a.point(j));
                let ok = (0..n).all(|k| {
                    let r = a.point(k);
                    let c = cross(p, q, r);
                    if c != 0.0 {
                        return c > 0.0;
                    }
                    let t =
                        dot(&[r[0] - p[0], r[1] - p[1]], &[q[0] - p[0], q[1] - p[1]]) / dist2(p, q);
                    (0.0..=1.0).contains(&t)
                });
                if ok {
                    for v in [p, q] {
                        if !out.iter().any(|o| o == v) {
                            out.push(v.to_vec());
                        }
                    }
                }
            }
        }
        out.sort_by(|x, y| lex_cmp(x, y));
        out
    }

    #[test]
    fn collinear_gives_endpoints() {
        let a = set2(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.5, 0.5]]);
        let h = ConvexHull::new(&a);
        assert_eq!(h.affine_dim(), 1);
        assert_eq!(
            convex_hull(&a).to_rows(),
            vec![vec![0.0, 0.0], vec![2.0, 2.0]]
        );
    }

    #[test]
    fn convex_position_is_fixed() {
        let a = CompactSet::circle([0.0, 0.0], 1.0, 12).unwrap();
        assert_eq!(convex_hull(&a), a.canonical());
    }

    #[test]
    fn random_clouds_match_brute_force() {
        let mut rng = crate::rng::rng(3);
        for _ in 0..50 {
            let n = rng.gen_range(3..40);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .collect();
            let a = CompactSet::new(2, &rows).unwrap();
            assert_eq!(convex_hull(&a).to_rows(), brute_hull(&a));
        }
    }

    #[test]
    fn cube_hull_in_3d() {
        let a = CompactSet::sample_box(&[0.0; 3], &[1.0; 3], 0.25).unwrap();
        let h = ConvexHull::new(&a);
        assert!(h.is_exact());
        assert_eq!(h.vertices().len(), 8);
        assert!((h.distance(&[2.0, 0.5, 0.5]) - 1.0).abs() < 1e-12);
        assert!((h.distance(&[2.0, 2.0, 2.0]) - 3f64.sqrt()).abs() < 1e-12);
        assert!(h.distance(&[0.5, 0.5, 0.5]) < 1e-12);
        assert!((h.signed_distance(&[0.5, 0.5, 0.4]) + 0.4).abs() < 1e-12);
        let b = h.nearest_boundary_point(&[0.5, 0.5, 0.9]);
        assert!((b[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_cloud_in_3d_is_planar() {
        let a = CompactSet::new(
            3,
            &[
                vec![0.0, 0.0, 1.0],
                vec![1.0, 0.0, 1.0],
                vec![0.0, 1.0, 1.0],
                vec![0.2, 0.2, 1.0],
            ],
        )
        .unwrap();
        let h = ConvexHull::new(&a);
        assert_eq!(h.affine_dim(), 2);
        assert_eq!(h.vertices().len(), 3);
        assert!((h.distance(&[0.2, 0.2, 3.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn high_dim_is_flagged_and_projects() {
        let mut rows = Vec::new();
        for k in 0..4 {
            for s in [-1.0, 1.0] {
                let mut e = vec![0.0; 4];
                e[k] = s;
                rows.push(e);
            }
        }
        let a = CompactSet::new(4, &rows).unwrap();
        let h = ConvexHull::new(&a);
        assert!(!h.is_exact());
        assert_eq!(h.vertices().len(), 8);
        // Cross-polytope: distance from (1,1,1,1) to the facet sum x = 1.
        assert!((h.distance(&[1.0, 1.0, 1.0, 1.0]) - 1.5).abs() < 1e-3);
    }

    #[test]
    fn segment_in_plane_has_relative_interior() {
        let a = set2(&[[0.3, -1.0], [0.3, 1.0]]);
        let h = ConvexHull::new(&a);
        assert!((h.signed_distance(&[0.3, 0.5]) + 0.5).abs() < 1e-12);
        assert!((h.signed_distance(&[0.4, 0.5]) - 0.1).abs() < 1e-12);
        assert_eq!(h.nearest_point(&[1.0, 3.0]), vec![0.3, 1.0]);
    }

    #[test]
    fn disc_distances() {
        let disc = CompactSet::circle([0.0, 0.0], 1.0, 4096).unwrap();
        let h = ConvexHull::new(&disc);
        assert!((h.distance(&[2.0, 0.0]) - 1.0).abs() < 1e-9);
        assert!(h.signed_distance(&[0.0, 0.0]) < -0.999);
    }

    #[test]
    fn combination_of_intervals() {
        let a = CompactSet::interval(0.0, 1.0, 0.5).unwrap();
        let b = CompactSet::interval(2.0, 4.0, 0.5).unwrap();
        let m = minkowski_combination(&a, &b, 0.5).unwrap();
        assert_eq!(m.as_flat(), &[1.0, 2.5]);
    }

    proptest! {
        #[test]
        fn projection_is_closest_hull_point(
            rows in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 3..25),
            x in -4.0f64..4.0, y in -4.0f64..4.0,
        ) {
            let a = CompactSet::new(2, &rows).unwrap();
            let h = ConvexHull::new(&a);
            let p = h.nearest_point(&[x, y]);
            let d = dist2(&p, &[x, y]).sqrt();
            // No vertex and no sampled hull point is closer.
            for v in h.vertices() {
                prop_assert!(d <= dist2(v, &[x, y]).sqrt() + 1e-9);
            }
            let vs = h.vertices();
            for i in 0..vs.len() {
                for j in 0..vs.len() {
                    let m = [(vs[i][0] + vs[j][0]) / 2.0, (vs[i][1] + vs[j][1]) / 2.0];
                    prop_assert!(d <= dist2(&m, &[x, y]).sqrt() + 1e-9);
                }
            }
        }
    }
}

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::FinslerStructure;
use crate::error::{ensure, Result};
use crate::inclusion::{SetValuedField, VertexSample};
use crate::sets::{dist2, lex_cmp};

/// Decay requirement `α` in `sup L V ≤ -α(V)`.
#[derive(Clone)]
pub enum Alpha {
    Zero,
    Linear(f64),
    ClassK(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Linear(l) => write!(f, "Linear({l})"),
            Self::ClassK(_) => write!(f, "ClassK(..)"),
        }
    }
}

impl Alpha {
    pub fn eval(&self, v: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Linear(l) => l * v,
            Self::ClassK(a) => a(v),
        }
    }

    /// Checks `α(0) = 0` and monotonicity on a log-spaced grid over
    /// `[1e-6, 1e6]`; a linear rate must be positive.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Zero => Ok(()),
            Self::Linear(l) => ensure(*l > 0.0, || {
                format!("linear rate must be positive, got {l}")
            }),
            Self::ClassK(a) => {
                ensure(a(0.0).abs() <= 1e-12, || {
                    format!("alpha(0) = {} is not 0", a(0.0))
                })?;
                let mut prev = 0.0;
                for k in 0..=120 {
                    let v = 10f64.powf(-6.0 + 0.1 * k as f64);
                    let y = a(v);
                    ensure(y.is_finite() && y >= prev, || {
                        format!("alpha is not monotone near {v}")
                    })?;
                    prev = y;
                }
                Ok(())
            }
        }
    }
}

type Lyapunov = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// Candidate Finsler-Lyapunov function with its sandwich
/// `c1 F^p ≤ V ≤ c2 F^p` and decay requirement.
#[derive(Clone)]
pub struct FinslerCandidate {
    pub finsler: FinslerStructure,
    v: Arc<Lyapunov>,
    pub p: f64,
    pub c1: f64,
    pub c2: f64,
    pub alpha: Alpha,
}

impl fmt::Debug for FinslerCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FinslerCandidate")
            .field("finsler", &self.finsler)
            .field("p", &self.p)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .field("alpha", &self.alpha)
            .finish_non_exhaustive()
    }
}

impl FinslerCandidate {
    pub fn new(
        finsler: FinslerStructure,
        v: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        p: f64,
        c1: f64,
        c2: f64,
        alpha: Alpha,
    ) -> Result<Self> {
        ensure(p >= 1.0, || format!("p must be at least 1, got {p}"))?;
        ensure(c1 > 0.0 && c2 >= c1, || {
            format!("need 0 < c1 <= c2, got c1 = {c1}, c2 = {c2}")
        })?;
        alpha.validate()?;
        Ok(Self {
            finsler,
            v: Arc::new(v),
            p,
            c1,
            c2,
            alpha,
        })
    }

    /// `V = F²` with the Euclidean structure: the quadratic candidate.
    pub fn quadratic(dim: usize, alpha: Alpha) -> Result<Self> {
        Self::new(
            FinslerStructure::euclidean(dim),
            |_, dx| dx.iter().map(|v| v * v).sum(),
            2.0,
            1.0,
            1.0,
            alpha,
        )
    }

    pub fn dim(&self) -> usize {
        self.finsler.dim()
    }

    pub fn v(&self, x: &[f64], dx: &[f64]) -> f64 {
        (self.v)(x, dx)
    }

    /// Whether `c1 F^p ≤ V ≤ c2 F^p` holds at `(x, δx)` up to a relative
    /// tolerance.
    pub fn sandwich_holds(&self, x: &[f64], dx: &[f64]) -> bool {
        let fp = self.finsler.eval(x, dx).powf(self.p);
        let v = self.v(x, dx);
        let tol = 1e-9 * (1.0 + fp.abs());
        self.c1 * fp <= v + tol && v <= self.c2 * fp + tol
    }
}

/// Whether the Lie derivative takes the worst (sup) or best (inf) selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LieMode {
    Sup,
    Inf,
}

#[derive(Clone, Copy, Debug)]
pub struct LieOptions {
    pub fd_step: f64,
    pub mode: LieMode,
    /// Relative forward/backward difference mismatch above which `V` is
    /// treated as nonsmooth at the sample.
    pub nonsmooth_tol: f64,
}

impl LieOptions {
    pub fn new(fd_step: f64) -> Self {
        Self {
            fd_step,
            mode: LieMode::Sup,
            nonsmooth_tol: 1e-3,
        }
    }

    pub fn mode(mut self, mode: LieMode) -> Self {
        self.mode = mode;
        self
    }
}

/// Value of the set-valued Lie derivative at one tangent point.
#[derive(Clone, Debug, PartialEq)]
pub struct LieValue {
    pub value: f64,
    /// Velocity realizing the value.
    pub velocity: Vec<f64>,
    /// The Clarke outer estimate was used.
    pub nonsmooth: bool,
}

/// Gradients of `V` with respect to the joint `(x, δx)` coordinates. With a
/// smooth `V` this is one central-difference gradient; otherwise it is the
/// central gradient together with gradients at the `2·(2n)` points offset by
/// `±2·fd_step` along each coordinate (an outer sample of the Clarke
/// generalized gradient).
fn gradients(
    cand: &FinslerCandidate,
    x: &[f64],
    dx: &[f64],
    opts: &LieOptions,
) -> (Vec<Vec<f64>>, bool) {
    let n = x.len();
    let z: Vec<f64> = x.iter().chain(dx).copied().collect();
    let v = |z: &[f64]| cand.v(&z[..n], &z[n..]);
    let fd = opts.fd_step;
    let central = |z: &[f64]| -> (Vec<f64>, bool) {
        let f0 = v(z);
        let mut g = vec![0.0; 2 * n];
        let mut smooth = true;
        let mut w = z.to_vec();
        for i in 0..2 * n {
            w[i] = z[i] + fd;
            let fp = v(&w);
            w[i] = z[i] - fd;
            let fm = v(&w);
            w[i] = z[i];
            let fwd = (fp - f0) / fd;
            let bwd = (f0 - fm) / fd;
            g[i] = (fp - fm) / (2.0 * fd);
            let scale = 1.0 + g[i].abs();
            if (fwd - bwd).abs() > opts.nonsmooth_tol * scale + 4.0 * fd * scale {
                smooth = false;
            }
        }
        (g, smooth)
    };
    let (g0, smooth) = central(&z);
    if smooth {
        return (vec![g0], false);
    }
    let mut out = vec![g0];
    let mut w = z.clone();
    for i in 0..2 * n {
        for s in [2.0 * fd, -2.0 * fd] {
            w[i] = z[i] + s;
            out.push(central(&w).0);
            w[i] = z[i];
        }
    }
    (out, true)
}

/// Index of the vertex of `set` nearest `target`; ties by lexicographic
/// order. Returns `None` when two distinct vertices tie.
fn match_vertex(set: &VertexSample, target: &[f64]) -> Option<usize> {
    let mut order: Vec<(f64, usize)> = set
        .vertices()
        .enumerate()
        .map(|(i, v)| (dist2(v, target), i))
        .collect();
    order.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| lex_cmp(set.vertex(a.1), set.vertex(b.1)))
    });
    if let Some(second) = order.get(1) {
        let (d0, i0) = order[0];
        let tie = (second.0 - d0).abs() <= 1e-12 * (1.0 + d0);
        if tie && lex_cmp(set.vertex(i0), set.vertex(second.1)) != Ordering::Equal {
            return None;
        }
    }
    Some(order[0].1)
}

/// `sup` (or `inf`) over vertex selections `v ∈ X(φ, x)` of
/// `∂V/∂x · v + ∂V/∂δx · (∂v/∂x) δx`, with `∂v/∂x` from central differences
/// of the matched vertex. Returns `Ok(None)` when vertex matching is
/// ambiguous within `fd_step`, so the sample should be excluded.
pub fn lie_derivative(
    cand: &FinslerCandidate,
    field_phi: &SetValuedField,
    phi: f64,
    x: &[f64],
    dx: &[f64],
    opts: &LieOptions,
) -> Result<Option<LieValue>> {
    let n = field_phi.dim();
    ensure(opts.fd_step > 0.0, || "fd_step must be positive".into())?;
    ensure(x.len() == n && dx.len() == n && cand.dim() == n, || {
        "dimension mismatch".into()
    })?;
    let (grads, nonsmooth) = gradients(cand, x, dx, opts);
    let vel = field_phi.velocities(phi, x);
    let fd = opts.fd_step;
    let mut shifted = Vec::with_capacity(2 * n);
    let mut xp = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + fd;
        let plus = field_phi.velocities(phi, &xp);
        xp[j] = x[j] - fd;
        let minus = field_phi.velocities(phi, &xp);
        xp[j] = x[j];
        if plus.len() != vel.len() || minus.len() != vel.len() {
            return Ok(None);
        }
        shifted.push((plus, minus));
    }
    let mut best: Option<LieValue> = None;
    for v in vel.vertices() {
        // Column j of the Jacobian of this selection.
        let mut jdx = vec![0.0; n];
        for (j, (plus, minus)) in shifted.iter().enumerate() {
            let (Some(ip), Some(im)) = (match_vertex(plus, v), match_vertex(minus, v)) else {
                return Ok(None);
            };
            let (vp, vm) = (plus.vertex(ip), minus.vertex(im));
            for i in 0..n {
                jdx[i] += (vp[i] - vm[i]) / (2.0 * fd) * dx[j];
            }
        }
        let w: Vec<f64> = v.iter().chain(&jdx).copied().collect();
        let value = grads
            .iter()
            .map(|g| g.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let better = match (&best, opts.mode) {
            (None, _) => true,
            (Some(b), LieMode::Sup) => value > b.value,
            (Some(b), LieMode::Inf) => value < b.value,
        };
        if better {
            best = Some(LieValue {
                value,
                velocity: v.to_vec(),
                nonsmooth,
            });
        }
    }
    Ok(best)
}

/// Supremum form of [`lie_derivative`]; ambiguous samples are reported as
/// errors here.
pub fn lie_derivative_sup(
    cand: &FinslerCandidate,
    field_phi: &SetValuedField,
    phi: f64,
    x: &[f64],
    dx: &[f64],
    fd_step: f64,
) -> Result<f64> {
    lie_derivative(cand, field_phi, phi, x, dx, &LieOptions::new(fd_step))?
        .map(|l| l.value)
        .ok_or_else(|| {
            crate::Error::InvalidInput("vertex matching is ambiguous at this sample".into())
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(a: f64, r: f64) -> SetValuedField {
        SetValuedField::new(1, 5.0, a.abs(), move |_, x| {
            VertexSample::ball_around(&[a * x[0]], r)
        })
        .unwrap()
    }

    #[test]
    fn linear_fields() {
        let cand = FinslerCandidate::quadratic(1, Alpha::Linear(2.0)).unwrap();
        for (a, r) in [(-1.0, 0.0), (-1.0, 0.1), (1.0, 0.0)] {
            for (x, dx) in [(0.3, 0.7), (-1.2, -0.4)] {
                let l = lie_derivative_sup(&cand, &linear(a, r), 0.0, &[x], &[dx], 1e-5).unwrap();
                assert!((l - 2.0 * a * dx * dx).abs() < 1e-6, "a = {a}: {l}");
            }
        }
    }

    #[test]
    fn weak_mode_picks_best_selection() {
        let both = SetValuedField::new(1, 5.0, 1.0, |_, x| {
            VertexSample::new(1, vec![-x[0], x[0]], false).unwrap()
        })
        .unwrap();
        let cand = FinslerCandidate::quadratic(1, Alpha::Linear(2.0)).unwrap();
        let sup = lie_derivative(&cand, &both, 0.0, &[0.5], &[1.0], &LieOptions::new(1e-5))
            .unwrap()
            .unwrap();
        let inf = lie_derivative(
            &cand,
            &both,
            0.0,
            &[0.5],
            &[1.0],
            &LieOptions::new(1e-5).mode(LieMode::Inf),
        )
        .unwrap()
        .unwrap();
        assert!((sup.value - 2.0).abs() < 1e-6 && (inf.value + 2.0).abs() < 1e-6);
    }

    #[test]
    fn nonsmooth_candidate_uses_clarke_samples() {
        let cand = FinslerCandidate::new(
            FinslerStructure::euclidean(1),
            |_, dx| dx[0].abs(),
            1.0,
            1.0,
            1.0,
            Alpha::Zero,
        )
        .unwrap();
        let f = linear(-1.0, 0.0);
        let l = lie_derivative(&cand, &f, 0.0, &[0.5], &[0.0], &LieOptions::new(1e-5))
            .unwrap()
            .unwrap();
        assert!(l.nonsmooth);
        // At δx = 0 the variational velocity vanishes.
        assert!(l.value.abs() < 1e-9);
        let l = lie_derivative(&cand, &f, 0.0, &[0.5], &[0.3], &LieOptions::new(1e-5))
            .unwrap()
            .unwrap();
        assert!(!l.nonsmooth && (l.value + 0.3).abs() < 1e-6);
    }

    #[test]
    fn ambiguous_matching_is_flagged() {
        // The two vertices cross at x = 0.
        let f = SetValuedField::new(1, 5.0, 1.0, |_, x| {
            VertexSample::new(1, vec![x[0], -x[0]], true).unwrap()
        })
        .unwrap();
        let cand = FinslerCandidate::quadratic(1, Alpha::Zero).unwrap();
        assert!(
            lie_derivative(&cand, &f, 0.0, &[0.0], &[1.0], &LieOptions::new(1e-5))
                .unwrap()
                .is_none()
        );
    }

    #[test]
    fn alpha_validation() {
        assert!(Alpha::Linear(-1.0).validate().is_err());
        assert!(Alpha::ClassK(Arc::new(|v| v.sqrt())).validate().is_ok());
        assert!(Alpha::ClassK(Arc::new(|v| 1.0 + v)).validate().is_err());
        assert!(Alpha::ClassK(Arc::new(|v| (-v).exp() - 1.0))
            .validate()
            .is_err());
    }

    #[test]
    fn sandwich() {
        let cand = FinslerCandidate::quadratic(2, Alpha::Zero).unwrap();
        assert!(cand.sandwich_holds(&[0.0, 0.0], &[0.3, 0.4]));
        let bad = FinslerCandidate::new(
            FinslerStructure::euclidean(1),
            |_, dx| dx[0].abs(),
            2.0,
            1.0,
            1.0,
            Alpha::Zero,
        )
        .unwrap();
        assert!(!bad.sandwich_holds(&[0.0], &[0.5]));
    }
}

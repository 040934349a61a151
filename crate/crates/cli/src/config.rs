use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use phasefunnel::contraction::{Alpha, FinslerCandidate, FinslerStructure, LieMode};
use phasefunnel::contraction::TangentSampler;
use phasefunnel::hybrid::WalkerConfig;
use phasefunnel::inclusion::systems::SystemConfig;
use phasefunnel::{CompactSet, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Average,
    Reach,
    Poincare,
    Periodic,
    Certify,
    CertifyFunnel,
    Theorem1,
    Theorem2,
    Theorem3,
    GraphDistance,
    Walker,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Average => "average",
            Self::Reach => "reach",
            Self::Poincare => "poincare",
            Self::Periodic => "periodic",
            Self::Certify => "certify",
            Self::CertifyFunnel => "certify-funnel",
            Self::Theorem1 => "theorem1",
            Self::Theorem2 => "theorem2",
            Self::Theorem3 => "theorem3",
            Self::GraphDistance => "graph-distance",
            Self::Walker => "walker",
        }
    }

    /// What the run exercises, stated in every summary report.
    pub fn anchor(self) -> &'static str {
        match self {
            Self::Average => "phase average of a set-valued field (support-function midpoint rule)",
            Self::Reach => "time-parameterized reachable funnel of x' in eps X(phi, x), phi' in Omega(x)",
            Self::Poincare => "one-revolution return map of the phase-parameterized funnel",
            Self::Periodic => "periodic funnel as the fixed point of the return map",
            Self::Certify => "Finsler-Lyapunov contraction certificate: L V + alpha(V) <= 0",
            Self::CertifyFunnel => "contraction outside a periodic funnel plus funnel invariance",
            Self::Theorem1 => "theorem1: original vs averaged funnel gap is O(eps) on [0, L/eps]",
            Self::Theorem2 => "theorem2: averaged funnel gap and approach to a critical point on [0, K L/eps]",
            Self::Theorem3 => "theorem3: averaged funnel gap and approach to an invariant set on [0, K L/eps]",
            Self::GraphDistance => "windowed graph distance with constant time translation",
            Self::Walker => "hybrid walker under funnel-based control with jump consistency",
        }
    }
}

/// Shared numerical settings. Every positive-valued field is validated
/// when present.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub dt: Option<f64>,
    pub dphi: Option<f64>,
    pub h: Option<f64>,
    pub n_phi: Option<usize>,
    /// Directions of the planar support grid.
    pub n_dirs: Option<usize>,
    pub seed: Option<u64>,
    pub t0: Option<f64>,
    pub phi0: Option<f64>,
    pub horizon: Option<f64>,
    pub samples: Option<usize>,
    #[serde(default)]
    pub eps: Vec<f64>,
    pub l: Option<f64>,
    pub horizon_multiplier: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub fd_step: Option<f64>,
    pub slack: Option<f64>,
    pub steps: Option<usize>,
}

impl Numerics {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("dphi", self.dphi),
            ("h", self.h),
            ("horizon", self.horizon),
            ("l", self.l),
            ("horizon_multiplier", self.horizon_multiplier),
            ("tol", self.tol),
            ("fd_step", self.fd_step),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                check(v > 0.0 && v.is_finite(), || {
                    format!("numerics.{name} must be positive, got {v}")
                })?;
            }
        }
        let counts = [
            ("n_phi", self.n_phi),
            ("n_dirs", self.n_dirs),
            ("samples", self.samples),
            ("max_iter", self.max_iter),
            ("steps", self.steps),
        ];
        for (name, v) in counts {
            if let Some(v) = v {
                check(v > 0, || format!("numerics.{name} must be positive"))?;
            }
        }
        check(self.eps.iter().all(|e| *e > 0.0 && e.is_finite()), || {
            "numerics.eps values must be positive".into()
        })?;
        if let Some(s) = self.slack {
            check(s >= 0.0, || "numerics.slack must be nonnegative".into())?;
        }
        Ok(())
    }

    pub fn dt(&self) -> Result<f64> {
        need("numerics.dt", self.dt)
    }

    pub fn dphi(&self) -> Result<f64> {
        need("numerics.dphi", self.dphi)
    }

    pub fn h(&self) -> Result<f64> {
        need("numerics.h", self.h)
    }

    pub fn horizon(&self) -> Result<f64> {
        need("numerics.horizon", self.horizon)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// A finite set: explicit `points`, or a `lo`/`hi` box sampled at
/// `spacing`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpec {
    pub points: Option<Vec<Vec<f64>>>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub spacing: Option<f64>,
    /// Resolution attached to explicit points (defaults to `numerics.h`).
    pub resolution: Option<f64>,
}

impl SetSpec {
    pub fn build(&self, default_resolution: f64) -> Result<CompactSet> {
        match (&self.points, &self.lo, &self.hi) {
            (Some(points), None, None) => {
                check(!points.is_empty(), || "set has no points".into())?;
                let set = CompactSet::new(points[0].len(), points)?;
                Ok(set.with_resolution(self.resolution.unwrap_or(default_resolution)))
            }
            (None, Some(lo), Some(hi)) => {
                let spacing = self.spacing.unwrap_or(default_resolution);
                CompactSet::sample_box(lo, hi, spacing)
            }
            _ => Err(Error::InvalidInput(
                "a set needs either `points` or both `lo` and `hi`".into(),
            )),
        }
    }

    pub fn points(&self) -> Result<Vec<Vec<f64>>> {
        Ok(self.build(0.0)?.to_rows())
    }
}

/// Quadratic candidate `V = Σ w_i δx_i²` with the Euclidean structure,
/// declared sandwich constants and a linear decay rate `lambda`
/// (`alpha = 0` when `lambda` is zero), sampled over the `lo`/`hi` box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSpec {
    pub weights: Option<Vec<f64>>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    #[serde(default)]
    pub lambda: f64,
    /// `sup` (default) or `inf`.
    pub mode: Option<String>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub phi: Option<[f64; 2]>,
}

impl CandidateSpec {
    pub fn build(&self) -> Result<(FinslerCandidate, TangentSampler, LieMode)> {
        let n = self.lo.len();
        let w = self.weights.clone().unwrap_or_else(|| vec![1.0; n]);
        check(w.len() == n && w.iter().all(|v| *v > 0.0), || {
            "candidate.weights must be positive, one per coordinate".into()
        })?;
        check(self.lambda >= 0.0, || {
            "candidate.lambda must be nonnegative".into()
        })?;
        let wmin = w.iter().copied().fold(f64::INFINITY, f64::min);
        let wmax = w.iter().copied().fold(0.0, f64::max);
        let alpha = if self.lambda == 0.0 {
            Alpha::Zero
        } else {
            Alpha::Linear(self.lambda)
        };
        let weights = w.clone();
        let cand = FinslerCandidate::new(
            FinslerStructure::euclidean(n),
            move |_, dx| dx.iter().zip(&weights).map(|(d, wi)| wi * d * d).sum(),
            2.0,
            self.c1.unwrap_or(wmin),
            self.c2.unwrap_or(wmax),
            alpha,
        )?;
        let phi = self.phi.unwrap_or([0.0, TAU]);
        let sampler = TangentSampler::new((phi[0], phi[1]), self.lo.clone(), self.hi.clone())?;
        let mode = match self.mode.as_deref() {
            None | Some("sup") => LieMode::Sup,
            Some("inf") => LieMode::Inf,
            Some(other) => {
                return Err(Error::InvalidInput(format!(
                    "candidate.mode must be sup or inf, got {other:?}"
                )))
            }
        };
        Ok((cand, sampler, mode))
    }
}

/// Where a funnel for `graph-distance` comes from: a funnel CSV, or a time
/// run of the configured system from an initial set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunnelSource {
    pub file: Option<PathBuf>,
    pub initial_set: Option<SetSpec>,
    pub phi0: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub first: FunnelSource,
    pub second: FunnelSource,
    pub eps_g: f64,
    pub search: Option<ShiftGrid>,
    pub scale: Option<f64>,
}

/// Optional pass/fail thresholds; a violated one exits with code 2.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertions {
    pub ratio_max: Option<f64>,
    pub ratio_min: Option<f64>,
    #[serde(default)]
    pub c_within_bound: bool,
    pub max_distance: Option<f64>,
    pub max_gap: Option<f64>,
    /// Largest allowed distance outside the funnel, in units of `h`.
    pub max_funnel_excess: Option<f64>,
    #[serde(default)]
    pub jump_consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkerRun {
    /// `path-integral` (default) or `open-loop`.
    pub controller: Option<String>,
    /// Funnel sections CSV (`phi,point_index,x1,x2`) replacing the
    /// shipped funnel.
    pub funnel_file: Option<PathBuf>,
    #[serde(default)]
    pub model: WalkerConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandKind>,
    pub system: Option<SystemConfig>,
    #[serde(default)]
    pub numerics: Numerics,
    pub initial_set: Option<SetSpec>,
    /// Critical point (`theorem2`) or invariant set (`theorem3`).
    pub target: Option<SetSpec>,
    pub candidate: Option<CandidateSpec>,
    pub graph: Option<GraphSpec>,
    pub walker: Option<WalkerRun>,
    #[serde(default)]
    pub assertions: Assertions,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.numerics.validate()
    }

    pub fn system(&self) -> Result<&SystemConfig> {
        self.system
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("config needs a `system` section".into()))
    }

    pub fn initial_set(&self, h: f64) -> Result<CompactSet> {
        self.initial_set
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("config needs an `initial_set` section".into()))?
            .build(h)
    }

    pub fn candidate(&self) -> Result<&CandidateSpec> {
        self.candidate
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("config needs a `candidate` section".into()))
    }

    /// Resolves relative file references against `base`.
    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(g) = &mut self.graph {
            for src in [&mut g.first, &mut g.second] {
                if let Some(f) = &mut src.file {
                    fix(f);
                }
            }
        }
        if let Some(f) = self.walker.as_mut().and_then(|w| w.funnel_file.as_mut()) {
            fix(f);
        }
    }
}

fn need<T: Copy>(name: &str, v: Option<T>) -> Result<T> {
    v.ok_or_else(|| Error::InvalidInput(format!("config needs `{name}`")))
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}

/// Sets `path` (dot-separated keys) in a JSON object, creating objects on
/// the way. The value is parsed as JSON when possible, else taken as a
/// string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| {
        Error::InvalidInput(format!("--set expects key=value, got {assignment:?}"))
    })?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    check(parts.iter().all(|p| !p.is_empty()), || {
        format!("empty key segment in {key:?}")
    })?;
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::InvalidInput(format!("{key:?} descends into a non-object")))?;
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    node.as_object_mut()
        .ok_or_else(|| Error::InvalidInput(format!("{key:?} descends into a non-object")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Reads the config (an empty object when `path` is `None`), applies the
/// overrides in order and parses strictly.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let origin = path.map_or("config".into(), |p| p.display().to_string());
    let text = match path {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", p.display())))?,
        None => "{}".to_string(),
    };
    let mut root: Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{origin}: {e}")))?;
    for o in overrides {
        apply_override(&mut root, o)?;
    }
    let mut cfg: RunConfig = serde_json::from_value(root).map_err(|e| {
        // Errors from the file itself are reported with line and column.
        match serde_json::from_str::<RunConfig>(&text) {
            Err(located) => Error::Parse(format!("{origin}: {located}")),
            Ok(_) => Error::Parse(format!("{origin} with overrides: {e}")),
        }
    })?;
    if let Some(base) = path.and_then(Path::parent) {
        cfg.rebase(base);
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_create_nested_keys() {
        let mut v = serde_json::json!({"numerics": {"h": 0.1}});
        apply_override(&mut v, "numerics.h=0.5").unwrap();
        apply_override(&mut v, "system.name=rotation").unwrap();
        apply_override(&mut v, "numerics.eps=[0.1,0.05]").unwrap();
        assert_eq!(v["numerics"]["h"], 0.5);
        assert_eq!(v["system"]["name"], "rotation");
        assert_eq!(v["numerics"]["eps"][1], 0.05);
        assert!(apply_override(&mut v, "novalue").is_err());
        assert!(apply_override(&mut v, "numerics.h.x=1").is_err());
    }

    #[test]
    fn strict_parsing() {
        let bad: std::result::Result<RunConfig, _> =
            serde_json::from_value(serde_json::json!({"numerics": {"dtt": 1.0}}));
        assert!(bad.is_err());
        let cfg: RunConfig =
            serde_json::from_value(serde_json::json!({"numerics": {"dt": -1.0}})).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn set_specs() {
        let pts = SetSpec {
            points: Some(vec![vec![0.0, 1.0]]),
            lo: None,
            hi: None,
            spacing: None,
            resolution: None,
        };
        assert_eq!(pts.build(0.1).unwrap().resolution(), 0.1);
        let boxed = SetSpec {
            points: None,
            lo: Some(vec![0.0]),
            hi: Some(vec![1.0]),
            spacing: Some(0.5),
            resolution: None,
        };
        assert_eq!(boxed.build(0.1).unwrap().len(), 3);
        let neither = SetSpec {
            points: None,
            ..pts.clone()
        };
        assert!(neither.build(0.1).is_err());
        let both = SetSpec {
            lo: Some(vec![0.0]),
            hi: Some(vec![1.0]),
            ..pts
        };
        assert!(both.build(0.1).is_err());
    }
}

//! Configuration-driven experiment runner.
//!
//! A configuration is a TOML file with a top-level `experiment` name, a
//! `seed`, optional `[model]`, `[metric]` (or `[[metric]]` for several) and
//! `[options]` tables. Every random draw of an experiment comes from
//! ChaCha8 seeded with that one `seed`, split into independent streams by
//! [`stream`]. Artifacts are CSV files plus a JSON report, written under the
//! output directory with byte-identical contents for identical inputs.

mod experiments;

use crate::error::{Error, Result};
use crate::groups::GroupModel;
use crate::riemann::Metric;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "HALFLIE_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    JetsSelftest,
    GroupValidate,
    Shoot,
    BvpDistance,
    CurvatureTable,
    Completeness,
    Noloss,
    Nondegeneracy,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::JetsSelftest,
        ExperimentKind::GroupValidate,
        ExperimentKind::Shoot,
        ExperimentKind::BvpDistance,
        ExperimentKind::CurvatureTable,
        ExperimentKind::Completeness,
        ExperimentKind::Noloss,
        ExperimentKind::Nondegeneracy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::JetsSelftest => "jets-selftest",
            ExperimentKind::GroupValidate => "group-validate",
            ExperimentKind::Shoot => "shoot",
            ExperimentKind::BvpDistance => "bvp-distance",
            ExperimentKind::CurvatureTable => "curvature-table",
            ExperimentKind::Completeness => "completeness",
            ExperimentKind::Noloss => "noloss",
            ExperimentKind::Nondegeneracy => "nondegeneracy",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::JetsSelftest => "jet functoriality, inversion round trips and norm bounds on random jets",
            ExperimentKind::GroupValidate => "flow brackets against algebra brackets, extension cocycles, semidirect law",
            ExperimentKind::Shoot => "Euler-Arnold shooting: energy and Casimir drift, ad-transpose identity, chart geodesics",
            ExperimentKind::BvpDistance => "geodesic distance by energy minimization against rotation angles",
            ExperimentKind::CurvatureTable => "sectional curvature from force and stress against a Riemann-tensor oracle",
            ExperimentKind::Completeness => "long-horizon geodesics from unit-energy velocities: blow-ups and drift",
            ExperimentKind::Noloss => "Fourier decay exponents of a Sobolev geodesic at five checkpoints",
            ExperimentKind::Nondegeneracy => "geodesic distance against chart norm for seeded targets",
        }
    }

    /// Topic of the underlying result.
    pub fn anchor(self) -> &'static str {
        match self {
            ExperimentKind::JetsSelftest => "jet composition, evaluation and inversion",
            ExperimentKind::GroupValidate => "Lie bracket via flows; group extensions",
            ExperimentKind::Shoot => "Euler-Arnold equation; geodesic equation in charts",
            ExperimentKind::BvpDistance => "Hopf-Rinow: minimal geodesics",
            ExperimentKind::CurvatureTable => "curvature via force and stress",
            ExperimentKind::Completeness => "Hopf-Rinow: geodesic completeness",
            ExperimentKind::Noloss => "no loss or gain of regularity",
            ExperimentKind::Nondegeneracy => "non-degeneracy of geodesic distance",
        }
    }

    /// Whether the experiment draws random numbers and so needs a seed.
    pub fn randomized(self) -> bool {
        !matches!(self, ExperimentKind::Noloss)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub anchor: &'static str,
    pub randomized: bool,
}

pub fn list_experiments() -> Vec<CatalogEntry> {
    ExperimentKind::ALL
        .iter()
        .map(|k| CatalogEntry { name: k.name(), description: k.description(), anchor: k.anchor(), randomized: k.randomized() })
        .collect()
}

pub fn catalog_text() -> String {
    let mut out = String::new();
    for e in list_experiments() {
        out.push_str(&format!("{:<16} {} [{}]\n", e.name, e.description, e.anchor));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// `so2`, `so3`, `se2`, `se3`, `heisenberg` or `diffeo`.
    pub kind: String,
    /// Fourier modes for `diffeo`.
    pub modes: Option<usize>,
}

impl ModelSpec {
    pub fn build(&self) -> Result<GroupModel> {
        let needs_modes = || self.modes.ok_or_else(|| Error::Config(format!("model `{}` needs `modes`", self.kind)));
        match self.kind.as_str() {
            "so2" => Ok(GroupModel::so2()),
            "so3" => Ok(GroupModel::so3()),
            "se2" => Ok(GroupModel::special_euclidean(2)),
            "se3" => Ok(GroupModel::special_euclidean(3)),
            "heisenberg" => Ok(GroupModel::heisenberg()),
            "diffeo" => GroupModel::fourier_diffeo(needs_modes()?).map_err(|e| Error::Config(e.to_string())),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// Diagonal inertia, full inertia matrix, or Sobolev order; none of them
/// means the identity.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub inertia: Option<Vec<f64>>,
    pub matrix: Option<Vec<Vec<f64>>>,
    pub sobolev: Option<f64>,
}

impl MetricSpec {
    pub fn build(&self, model: &GroupModel) -> Result<Metric> {
        let set = [self.inertia.is_some(), self.matrix.is_some(), self.sobolev.is_some()];
        if set.iter().filter(|b| **b).count() > 1 {
            return Err(Error::Config("metric takes one of `inertia`, `matrix`, `sobolev`".into()));
        }
        let m = if let Some(s) = self.sobolev {
            Metric::sobolev(model.clone(), s)
        } else if let Some(rows) = &self.matrix {
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                return Err(Error::Config("inertia matrix must be square".into()));
            }
            Metric::new(model.clone(), DMatrix::from_row_iterator(n, n, rows.iter().flatten().cloned()))
        } else if let Some(d) = &self.inertia {
            Metric::diagonal(model.clone(), d)
        } else {
            Metric::identity(model.clone())
        };
        m.map_err(|e| Error::Config(format!("metric: {e}")))
    }

    pub fn label(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ");
        if let Some(s) = self.sobolev {
            format!("sobolev s={s}")
        } else if let Some(rows) = &self.matrix {
            format!("matrix [{}]", rows.iter().map(|r| list(r)).collect::<Vec<_>>().join("; "))
        } else if let Some(d) = &self.inertia {
            format!("diag({})", list(d))
        } else {
            "identity".into()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(MetricSpec),
    Many(Vec<MetricSpec>),
}

fn metrics_field<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<MetricSpec>, D::Error> {
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(m) => vec![m],
        OneOrMany::Many(v) => v,
    })
}

/// Numeric knobs; each experiment documents its own defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    pub h: Option<f64>,
    pub t: Option<f64>,
    pub intervals: Option<usize>,
    pub restarts: Option<usize>,
    pub samples: Option<usize>,
    pub bound_samples: Option<usize>,
    pub thetas: Option<Vec<f64>>,
    pub amplitude: Option<f64>,
    pub exponent: Option<f64>,
    pub u0: Option<Vec<f64>>,
    /// `finite-difference` or `adjoint`.
    pub gradient: Option<String>,
    /// Compare shooting with chart geodesics (shoot experiment).
    pub lagrangian: Option<bool>,
    pub modes: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: Option<u64>,
    /// Base name of the artifacts; defaults to the experiment name.
    pub output: Option<String>,
    pub model: Option<ModelSpec>,
    #[serde(default, deserialize_with = "metrics_field")]
    pub metric: Vec<MetricSpec>,
    #[serde(default)]
    pub options: Options,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig { experiment, seed: None, output: None, model: None, metric: Vec::new(), options: Options::default() }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.randomized() && self.seed.is_none() {
            return Err(Error::Config(format!("experiment `{}` needs a `seed`", self.experiment)));
        }
        if let Some(m) = &self.model {
            let model = m.build()?;
            for spec in &self.metric {
                spec.build(&model)?;
            }
        }
        if let Some(g) = &self.options.gradient {
            if g != "finite-difference" && g != "adjoint" {
                return Err(Error::Config(format!("unknown gradient `{g}`")));
            }
        }
        if let Some(name) = &self.output {
            if name.is_empty() || name.contains(['/', '\\']) {
                return Err(Error::Config("`output` must be a plain file stem".into()));
            }
        }
        Ok(())
    }

    pub fn stem(&self) -> String {
        self.output.clone().unwrap_or_else(|| self.experiment.name().replace('-', "_"))
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// Independent ChaCha8 stream `k` of an experiment seed.
pub fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Seed for a library routine that takes a plain `u64`, drawn from stream `k`.
pub fn sub_seed(seed: u64, k: u64) -> u64 {
    rand::Rng::random(&mut stream(seed, k))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Assertion {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Assertion { name: name.into(), value, tolerance, pass: value <= tolerance }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Assertion { name: name.into(), value, tolerance, pass: value >= tolerance }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Assertion { name: name.into(), value: if ok { 1.0 } else { 0.0 }, tolerance: 1.0, pass: ok }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub experiment: ExperimentKind,
    pub seed: Option<u64>,
    pub assertions: Vec<Assertion>,
    #[serde(skip)]
    pub artifacts: Vec<Artifact>,
}

impl RunReport {
    pub fn pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass() {
            0
        } else {
            1
        }
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for a in &self.assertions {
            let status = if a.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("{status} {}: {:e} (tolerance {:e})\n", a.name, a.value, a.tolerance));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes every artifact and `<stem>.report.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for a in &self.artifacts {
            let p = dir.join(&a.name);
            std::fs::write(&p, &a.contents)?;
            paths.push(p);
        }
        let p = dir.join(format!("{stem}.report.json"));
        std::fs::write(&p, self.to_json() + "\n")?;
        paths.push(p);
        Ok(paths)
    }
}

/// Runs one experiment; module errors come back tagged with the experiment.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let out = match config.experiment {
        ExperimentKind::JetsSelftest => experiments::jets_selftest(config),
        ExperimentKind::GroupValidate => experiments::group_validate(config),
        ExperimentKind::Shoot => experiments::shoot(config),
        ExperimentKind::BvpDistance => experiments::bvp_distance(config),
        ExperimentKind::CurvatureTable => experiments::curvature_table(config),
        ExperimentKind::Completeness => experiments::completeness(config),
        ExperimentKind::Noloss => experiments::noloss(config),
        ExperimentKind::Nondegeneracy => experiments::nondegeneracy(config),
    };
    let (assertions, artifacts) = out.map_err(|e| match e {
        Error::Config(m) => Error::Config(m),
        other => Error::InvalidInput(format!("{}: {other}", config.experiment)),
    })?;
    Ok(RunReport { experiment: config.experiment, seed: config.seed, assertions, artifacts })
}

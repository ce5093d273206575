//! Run-configuration schema: a TOML file with a `[system]` section, exactly
//! one scenario section, optional tolerance overrides and output paths.
//! Unknown keys are hard errors.

use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub index: Option<IndexConfig>,
    pub singularities: Option<SingularitiesConfig>,
    pub liapunov: Option<LiapunovConfig>,
    pub verify: Option<VerifyConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Gallery name; mutually exclusive with `fields`.
    pub builtin: Option<String>,
    /// DSL field sources (one per integral); requires `n`.
    pub fields: Option<Vec<String>>,
    pub n: Option<usize>,
    /// `H = sum w_a F_a`; omitted means `H = F_1`.
    pub hamiltonian_weights: Option<Vec<f64>>,
    /// Radial Hamiltonian for the rotational builtin, in `r2`, `p2`, `rp`.
    pub h_source: Option<String>,
    /// Half-width of the involution-sampling box for DSL systems
    /// (default 1.0); shrink it when fields have restricted domains.
    pub involution_box: Option<f64>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexConfig {
    /// Omitted: use the system's default curve (the p-plane circle at
    /// q = (1, 0) for the bifurcation family, a radius-2 circle about the
    /// origin for one-freedom systems).
    pub curve: Option<CurveConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    /// "circle" or "action".
    pub kind: String,
    pub center: Option<Vec<f64>>,
    pub u: Option<Vec<f64>>,
    pub v: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub samples: Option<usize>,
    /// Action curves: base point and which action ("L12" or "L(m)").
    pub point: Option<Vec<f64>>,
    pub which: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularitiesConfig {
    pub seeds: Vec<Vec<f64>>,
    #[serde(default = "default_true")]
    pub refine: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiapunovConfig {
    pub point: Vec<f64>,
    pub window_time: Option<f64>,
    pub dt_sample: Option<f64>,
    pub max_windows: Option<usize>,
    pub avg_tol: Option<f64>,
    pub direct_time: Option<f64>,
    pub renorm_dt: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Criterion numbers to run; default all of 1..=10.
    pub criteria: Option<Vec<usize>>,
    /// Space dimensions for the rotational index rows (criterion 2).
    pub rotational_n: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Newton convergence scale for singularity refinement.
    pub newton_tol_det: Option<f64>,
    pub newton_max_iter: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// JSON record path, relative to `--out`.
    pub json: Option<String>,
    /// CSV phase-trace path (index scenario), relative to `--out`.
    pub trace_csv: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Index,
    Singularities,
    Liapunov,
    Verify,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Index => "index",
            Scenario::Singularities => "singularities",
            Scenario::Liapunov => "liapunov",
            Scenario::Verify => "verify",
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| anyhow::anyhow!("config schema violation: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Exactly one scenario section present.
    pub fn scenario(&self) -> anyhow::Result<Scenario> {
        let mut found = Vec::new();
        if self.index.is_some() {
            found.push(Scenario::Index);
        }
        if self.singularities.is_some() {
            found.push(Scenario::Singularities);
        }
        if self.liapunov.is_some() {
            found.push(Scenario::Liapunov);
        }
        if self.verify.is_some() {
            found.push(Scenario::Verify);
        }
        match found.as_slice() {
            [one] => Ok(*one),
            [] => anyhow::bail!("config defines no scenario section"),
            many => anyhow::bail!(
                "config must define exactly one scenario, found {:?}",
                many.iter().map(|s| s.name()).collect::<Vec<_>>()
            ),
        }
    }

    fn validate(&self) -> anyhow::Result<()> {
        self.scenario()?;
        match (&self.system.builtin, &self.system.fields) {
            (Some(_), Some(_)) => {
                anyhow::bail!("system: `builtin` and `fields` are mutually exclusive")
            }
            (None, None) => anyhow::bail!("system: one of `builtin` or `fields` is required"),
            (None, Some(_)) if self.system.n.is_none() => {
                anyhow::bail!("system: DSL `fields` require `n`")
            }
            _ => {}
        }
        if let Some(tol) = self.tolerances.newton_tol_det {
            if tol <= 0.0 {
                anyhow::bail!("tolerances: newton_tol_det must be positive");
            }
        }
        if let Some(cfg) = &self.verify {
            if let Some(criteria) = &cfg.criteria {
                if criteria.iter().any(|k| !(1..=10).contains(k)) {
                    anyhow::bail!("verify: criteria numbers must be within 1..=10");
                }
                if criteria.is_empty() {
                    anyhow::bail!("verify: criteria list must not be empty");
                }
            }
        }
        if let Some(cfg) = &self.index {
            if let Some(curve) = &cfg.curve {
                match curve.kind.as_str() {
                    "circle" => {
                        for (key, present) in [
                            ("center", curve.center.is_some()),
                            ("u", curve.u.is_some()),
                            ("v", curve.v.is_some()),
                            ("radius", curve.radius.is_some()),
                        ] {
                            if !present {
                                anyhow::bail!("index.curve: circle requires `{key}`");
                            }
                        }
                    }
                    "action" => {
                        if curve.point.is_none() || curve.which.is_none() {
                            anyhow::bail!("index.curve: action requires `point` and `which`");
                        }
                    }
                    other => anyhow::bail!("index.curve: unknown kind `{other}`"),
                }
            }
        }
        Ok(())
    }
}

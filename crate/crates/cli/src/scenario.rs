//! Scenario execution: build the configured system, run the requested
//! computation, assemble the record and side files.

use crate::config::{CurveConfig, RunConfig, Scenario};
use crate::record::{
    CriterionRecord, IndexRecord, LiapunovRecord, Record, RowRecord, SingularityRecord,
    VerifyRecord,
};
use anyhow::Context;
use maslov::dynamics::AveragingSpec;
use maslov::expr::ScalarField;
use maslov::gallery::{build_named, ActionKind, GallerySystem};
use maslov::linalg::complex_abs;
use maslov::singularity::{
    k_symplectic_defect, locate_singularity, tau_and_classify, NewtonOptions,
};
use maslov::symplectic::symplectic_product;
use maslov::system::{Hamiltonian, IntegrableSystem};
use maslov::winding::{maslov_index, ClosedCurve};
use maslov::{Point, Tangent};
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// A failure carrying the CLI exit class.
pub struct RunFailure {
    pub exit_code: i32,
    pub message: String,
}

impl RunFailure {
    fn build(message: impl Into<String>) -> Self {
        RunFailure {
            exit_code: 3,
            message: message.into(),
        }
    }

    fn from_core(err: maslov::Error) -> Self {
        RunFailure {
            exit_code: match err.kind() {
                maslov::ErrorKind::Build => 3,
                maslov::ErrorKind::Quality => 2,
            },
            message: err.to_string(),
        }
    }
}

type RunResult<T> = std::result::Result<T, RunFailure>;

fn core<T>(r: maslov::Result<T>) -> RunResult<T> {
    r.map_err(RunFailure::from_core)
}

pub struct RunOutput {
    pub record: Record,
    pub json_path: PathBuf,
    /// Exit code 2 carrier for verify runs with red rows.
    pub quality_failure: bool,
}

fn build_system(cfg: &RunConfig) -> RunResult<GallerySystem<f64>> {
    let sys_cfg = &cfg.system;
    if let Some(name) = &sys_cfg.builtin {
        if sys_cfg.involution_box.is_some() {
            return Err(RunFailure::build(
                "system: involution_box only applies to DSL systems",
            ));
        }
        let mut gallery = core(build_named::<f64>(
            name,
            &sys_cfg.params,
            sys_cfg.h_source.as_deref(),
        ))?;
        if let Some(w) = &sys_cfg.hamiltonian_weights {
            gallery = match gallery {
                GallerySystem::Plain(s) => GallerySystem::Plain(core(
                    s.with_hamiltonian(Hamiltonian::Weights(w.clone())),
                )?),
                GallerySystem::Rotational(_) => {
                    return Err(RunFailure::build(
                        "hamiltonian_weights are not configurable for the rotational builtin",
                    ))
                }
            };
        }
        return Ok(gallery);
    }
    let sources = sys_cfg.fields.as_ref().expect("validated");
    let n = sys_cfg.n.expect("validated");
    let params: Vec<(String, f64)> = sys_cfg
        .params
        .iter()
        .map(|(k, v)| (k.clone(), *v))
        .collect();
    let mut fields = Vec::with_capacity(sources.len());
    for src in sources {
        fields.push(core(ScalarField::parse(src, n, &params))?);
    }
    // No silent ignoring: every declared parameter must be used somewhere.
    let used: std::collections::BTreeSet<String> = fields
        .iter()
        .flat_map(|f| f.referenced_params())
        .collect();
    for (name, _) in &params {
        if !used.contains(name) {
            return Err(RunFailure::build(format!(
                "parameter `{name}` is not referenced by any field"
            )));
        }
    }
    let hamiltonian = match &sys_cfg.hamiltonian_weights {
        Some(w) => Hamiltonian::Weights(w.clone()),
        None => Hamiltonian::FirstField,
    };
    let label = format!("dsl({} fields, n={n})", sources.len());
    let half_width = sys_cfg.involution_box.unwrap_or(1.0);
    if half_width <= 0.0 {
        return Err(RunFailure::build("system: involution_box must be positive"));
    }
    Ok(GallerySystem::Plain(core(
        IntegrableSystem::with_involution_box(fields, hamiltonian, label, half_width),
    )?))
}

fn point_from(v: &[f64], dim: usize, what: &str) -> RunResult<Point> {
    if v.len() != dim {
        return Err(RunFailure::build(format!(
            "{what} has {} coordinates, system needs {dim}",
            v.len()
        )));
    }
    Point::from_slice(v).map_err(RunFailure::from_core)
}

fn build_curve(
    gallery: &GallerySystem<f64>,
    curve: &CurveConfig,
) -> RunResult<ClosedCurve<f64>> {
    let dim = gallery.system().dim();
    match curve.kind.as_str() {
        "circle" => {
            let center = point_from(curve.center.as_ref().unwrap(), dim, "curve.center")?;
            let u = Tangent::from_slice(curve.u.as_ref().unwrap()).map_err(RunFailure::from_core)?;
            let v = Tangent::from_slice(curve.v.as_ref().unwrap()).map_err(RunFailure::from_core)?;
            if u.dim() != dim || v.dim() != dim {
                return Err(RunFailure::build("curve tangents must match the system dimension"));
            }
            let mut c = core(ClosedCurve::circle(center, u, v, curve.radius.unwrap()))?;
            if let Some(samples) = curve.samples {
                c = c.with_initial_samples(samples);
            }
            Ok(c)
        }
        "action" => {
            let rot = gallery.rotational().ok_or_else(|| {
                RunFailure::build("action curves need the rotational builtin system")
            })?;
            let z = point_from(curve.point.as_ref().unwrap(), dim, "curve.point")?;
            let which = parse_action(curve.which.as_ref().unwrap())?;
            let mut c = core(rot.action_curve(&z, which))?;
            if let Some(samples) = curve.samples {
                c = c.with_initial_samples(samples);
            }
            Ok(c)
        }
        other => Err(RunFailure::build(format!("unknown curve kind `{other}`"))),
    }
}

/// Default curve for a minimal `[index]` section: the p-plane circle of the
/// bifurcation discussion for two-freedom systems with base point q = (1, 0),
/// a positively oriented radius-2 origin circle for one-freedom systems.
fn default_curve(gallery: &GallerySystem<f64>) -> RunResult<ClosedCurve<f64>> {
    let sys = gallery.system();
    match sys.n() {
        1 => core(ClosedCurve::circle(
            Point::from_slice(&[0.0, 0.0]).unwrap(),
            Tangent::from_slice(&[1.0, 0.0]).unwrap(),
            Tangent::from_slice(&[0.0, 1.0]).unwrap(),
            2.0,
        )),
        2 => Ok(maslov::gallery::bifurcation_curve::<f64>()),
        _ => Err(RunFailure::build(
            "no default curve for this system; specify [index.curve]",
        )),
    }
}

/// `L12`, `L(3)` or `L3`.
fn parse_action(which: &str) -> RunResult<ActionKind> {
    if which == "L12" {
        return Ok(ActionKind::L12);
    }
    let digits: String = which
        .trim_start_matches('L')
        .chars()
        .filter(|c| c.is_ascii_digit())
        .collect();
    digits
        .parse::<usize>()
        .map(ActionKind::Lm)
        .map_err(|_| RunFailure::build(format!("unknown action `{which}` (use L12 or L(m))")))
}

pub fn run(cfg: &RunConfig, scenario: Scenario, out_dir: &Path) -> RunResult<RunOutput> {
    let gallery = build_system(cfg)?;
    let label = gallery.system().label().to_string();
    let freedoms = gallery.system().n();
    let mut record = Record::new(scenario.name(), &label, freedoms);
    let mut quality_failure = false;

    match scenario {
        Scenario::Index => {
            let index_cfg = cfg.index.as_ref().expect("scenario checked");
            let curve = match &index_cfg.curve {
                Some(c) => build_curve(&gallery, c)?,
                None => default_curve(&gallery)?,
            };
            let result = core(maslov_index(gallery.system(), &curve))?;
            let trace_csv = cfg
                .output
                .trace_csv
                .clone()
                .unwrap_or_else(|| "index_trace.csv".to_string());
            let csv_path = out_dir.join(&trace_csv);
            write_trace_csv(&csv_path, &result).map_err(|e| RunFailure::build(e.to_string()))?;
            record.index = Some(IndexRecord {
                maslov_index: result.index,
                raw_phase_over_pi: result.raw,
                residual: result.residual,
                refinement_depth: result.refinement_depth,
                samples: result.trace.len(),
                // Record the configured (relative) name so identical configs
                // produce byte-identical records regardless of --out.
                trace_csv: Some(trace_csv),
            });
        }
        Scenario::Singularities => {
            let sing_cfg = cfg.singularities.as_ref().expect("scenario checked");
            let opts = NewtonOptions {
                tol_det: cfg.tolerances.newton_tol_det.unwrap_or(1e-12),
                max_iter: cfg.tolerances.newton_max_iter.unwrap_or(50),
            };
            let mut rows = Vec::new();
            for seed in &sing_cfg.seeds {
                let seed_point = point_from(seed, gallery.system().dim(), "seed")?;
                let refined = if sing_cfg.refine {
                    core(locate_singularity(gallery.system(), &seed_point, opts))?
                } else {
                    seed_point.clone()
                };
                let data = core(tau_and_classify(gallery.system(), &refined))?;
                let det_abs = core(gallery.system().det_m(&refined))?;
                let (k_defect, eta_theta) = match (&data.k, &data.eta, &data.theta) {
                    (Some(k), Some(eta), Some(theta)) => (
                        Some(k_symplectic_defect(k)),
                        Some(core(symplectic_product(eta, theta))?),
                    ),
                    _ => (None, None),
                };
                rows.push(SingularityRecord {
                    seed: seed.clone(),
                    refined: refined.coords().iter().copied().collect(),
                    newton_refined: sing_cfg.refine,
                    corank: data.corank,
                    kind: data.kind.as_str().to_string(),
                    tau: data.tau,
                    det_m_abs: Some(complex_abs(det_abs)),
                    k_symplectic_defect: k_defect,
                    eta_theta_product: eta_theta,
                });
            }
            record.singularities = Some(rows);
        }
        Scenario::Liapunov => {
            let lia_cfg = cfg.liapunov.as_ref().expect("scenario checked");
            let x = point_from(&lia_cfg.point, gallery.system().dim(), "liapunov.point")?;
            let defaults = AveragingSpec::<f64>::default();
            let avg = AveragingSpec {
                window_time: lia_cfg.window_time.unwrap_or(defaults.window_time),
                dt_sample: lia_cfg.dt_sample.unwrap_or(defaults.dt_sample),
                max_windows: lia_cfg.max_windows.unwrap_or(defaults.max_windows),
                avg_tol: lia_cfg.avg_tol.unwrap_or(defaults.avg_tol),
                direct_time: lia_cfg.direct_time.unwrap_or(defaults.direct_time),
                renorm_dt: lia_cfg.renorm_dt.unwrap_or(defaults.renorm_dt),
            };
            let report = core(maslov::dynamics::kappa_h_and_sum_rule(
                gallery.system(),
                &x,
                &avg,
            ))?;
            record.liapunov = Some(LiapunovRecord {
                tau: report.tau,
                kappa_alpha: report.kappa_alpha.clone(),
                kappa_h: report.kappa_h,
                kappa_direct: report.kappa_direct,
                sum_rule_residual: report.sum_rule_residual,
                window_means: report
                    .averaging
                    .iter()
                    .map(|d| d.window_means.clone())
                    .collect(),
            });
        }
        Scenario::Verify => {
            let verify_cfg = cfg.verify.as_ref().expect("scenario checked");
            let criteria = verify_cfg
                .criteria
                .clone()
                .unwrap_or_else(|| (1..=10).collect());
            let mut records = Vec::new();
            let mut all_pass = true;
            for k in criteria {
                let report = if k == 2 {
                    if let Some(ns) = &verify_cfg.rotational_n {
                        let start = std::time::Instant::now();
                        let rows = maslov::verify::rotational_index_rows(ns);
                        maslov::verify::CriterionReport {
                            criterion: 2,
                            title: maslov::verify::criterion_title(2).to_string(),
                            rows,
                            elapsed_ms: start.elapsed().as_millis(),
                        }
                    } else {
                        maslov::verify::run_criterion(k)
                    }
                } else {
                    maslov::verify::run_criterion(k)
                };
                all_pass &= report.pass();
                records.push(CriterionRecord {
                    criterion: report.criterion,
                    title: report.title.clone(),
                    pass: report.pass(),
                    elapsed_ms: report.elapsed_ms as u64,
                    rows: report
                        .rows
                        .iter()
                        .map(|r| RowRecord {
                            id: r.id.clone(),
                            value: r.value,
                            expected: r.expected.clone(),
                            pass: r.pass,
                        })
                        .collect(),
                });
            }
            quality_failure = !all_pass;
            record.verify = Some(VerifyRecord {
                all_pass,
                criteria: records,
            });
        }
    }

    let json_name = cfg
        .output
        .json
        .clone()
        .unwrap_or_else(|| format!("{}_record.json", scenario.name()));
    let json_path = out_dir.join(json_name);
    Ok(RunOutput {
        record,
        json_path,
        quality_failure,
    })
}

fn write_trace_csv(path: &Path, result: &maslov::MaslovResult) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = std::fs::File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    writeln!(file, "s,re_detM,im_detM,unwrapped_arg")?;
    for ((s, det), (_, arg)) in result.det_trace.iter().zip(result.trace.iter()) {
        writeln!(file, "{s},{},{},{arg}", det.re, det.im)?;
    }
    Ok(())
}

pub fn write_json(path: &Path, record: &Record) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let json = serde_json::to_string_pretty(record)?;
    std::fs::write(path, json.as_bytes())
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

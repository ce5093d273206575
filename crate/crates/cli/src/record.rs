//! Machine-readable run record. Every number printed in the stdout table is
//! rendered from these structs, so the JSON file is a superset of the table.

use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Record {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub system: SystemRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<IndexRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singularities: Option<Vec<SingularityRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub liapunov: Option<LiapunovRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyRecord>,
}

#[derive(Debug, Serialize)]
pub struct SystemRecord {
    pub label: String,
    pub freedoms: usize,
}

#[derive(Debug, Serialize)]
pub struct IndexRecord {
    pub maslov_index: i64,
    pub raw_phase_over_pi: f64,
    pub residual: f64,
    pub refinement_depth: usize,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_csv: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SingularityRecord {
    pub seed: Vec<f64>,
    pub refined: Vec<f64>,
    pub newton_refined: bool,
    pub corank: usize,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub det_m_abs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_symplectic_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_theta_product: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct LiapunovRecord {
    pub tau: f64,
    pub kappa_alpha: Vec<f64>,
    pub kappa_h: f64,
    pub kappa_direct: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sum_rule_residual: Option<f64>,
    pub window_means: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct VerifyRecord {
    pub all_pass: bool,
    pub criteria: Vec<CriterionRecord>,
}

#[derive(Debug, Serialize)]
pub struct CriterionRecord {
    pub criterion: usize,
    pub title: String,
    pub pass: bool,
    pub elapsed_ms: u64,
    pub rows: Vec<RowRecord>,
}

#[derive(Debug, Serialize)]
pub struct RowRecord {
    pub id: String,
    pub value: f64,
    pub expected: String,
    pub pass: bool,
}

impl Record {
    pub fn new(scenario: &str, label: &str, freedoms: usize) -> Self {
        Record {
            tool: "maslov".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: scenario.to_string(),
            system: SystemRecord {
                label: label.to_string(),
                freedoms,
            },
            index: None,
            singularities: None,
            liapunov: None,
            verify: None,
        }
    }

    /// Human table, one `name = value` row per number in the record.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(&format!("  {k:<34} {v}\n"));
        };
        push("scenario", self.scenario.clone());
        push("system", self.system.label.clone());
        push("freedoms", self.system.freedoms.to_string());
        if let Some(idx) = &self.index {
            push("maslov_index", idx.maslov_index.to_string());
            push("raw_phase_over_pi", format!("{}", idx.raw_phase_over_pi));
            push("residual", format!("{:.3e}", idx.residual));
            push("refinement_depth", idx.refinement_depth.to_string());
            push("samples", idx.samples.to_string());
            if let Some(csv) = &idx.trace_csv {
                push("trace_csv", csv.clone());
            }
        }
        if let Some(sings) = &self.singularities {
            for (i, s) in sings.iter().enumerate() {
                push(&format!("[{i}] refined"), format!("{:?}", s.refined));
                push(&format!("[{i}] corank"), s.corank.to_string());
                push(&format!("[{i}] kind"), s.kind.clone());
                if let Some(tau) = s.tau {
                    push(&format!("[{i}] tau"), format!("{tau}"));
                }
                if let Some(d) = s.det_m_abs {
                    push(&format!("[{i}] |det M|"), format!("{d:.3e}"));
                }
            }
        }
        if let Some(l) = &self.liapunov {
            push("tau", format!("{}", l.tau));
            for (a, k) in l.kappa_alpha.iter().enumerate() {
                push(&format!("kappa_{}", a + 1), format!("{k}"));
            }
            push("kappa_H", format!("{}", l.kappa_h));
            push("kappa_direct", format!("{}", l.kappa_direct));
            if let Some(r) = l.sum_rule_residual {
                push("sum_rule_residual", format!("{r:.3e}"));
            }
        }
        if let Some(v) = &self.verify {
            for c in &v.criteria {
                push(
                    &format!("criterion_{}", c.criterion),
                    format!("{} ({} ms)", if c.pass { "PASS" } else { "FAIL" }, c.elapsed_ms),
                );
                for row in &c.rows {
                    push(
                        &format!("  {}", row.id),
                        format!(
                            "{} [{}] expected {}",
                            row.value,
                            if row.pass { "pass" } else { "FAIL" },
                            row.expected
                        ),
                    );
                }
            }
            push("all_pass", v.all_pass.to_string());
        }
        out
    }
}

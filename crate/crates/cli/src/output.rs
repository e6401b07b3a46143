//! Long-format CSV rows and the acceptance summary.

use std::io::Write;

use serde_json::{json, Map, Value};

pub const EXPERIMENT_VERSION: &str = "1";

pub const COLUMNS: [&str; 12] = [
    "experiment_version",
    "experiment",
    "snr_db",
    "p",
    "dim",
    "trials",
    "family",
    "quantity",
    "mean",
    "stddev",
    "truth",
    "extra",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub experiment: &'static str,
    pub snr_db: Option<f64>,
    pub p: Option<f64>,
    pub dim: usize,
    pub trials: usize,
    pub family: String,
    pub quantity: String,
    pub mean: Option<f64>,
    pub stddev: Option<f64>,
    pub truth: Option<f64>,
    pub extra: Map<String, Value>,
}

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Row {
    fn fields(&self) -> [String; 12] {
        [
            EXPERIMENT_VERSION.to_string(),
            self.experiment.to_string(),
            num(self.snr_db),
            num(self.p),
            self.dim.to_string(),
            self.trials.to_string(),
            self.family.clone(),
            self.quantity.clone(),
            num(self.mean),
            num(self.stddev),
            num(self.truth),
            Value::Object(self.extra.clone()).to_string(),
        ]
    }
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

pub fn summary_json(experiment: &str, assertions: &[Assertion]) -> Value {
    json!({
        "experiment_version": EXPERIMENT_VERSION,
        "experiment": experiment,
        "passed": assertions.iter().all(|a| a.passed),
        "assertions": assertions
            .iter()
            .map(|a| json!({ "name": a.name, "passed": a.passed, "detail": a.detail }))
            .collect::<Vec<_>>(),
    })
}

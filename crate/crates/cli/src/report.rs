//! Report envelope, serialization and replay.

use std::collections::BTreeMap;
use std::time::Instant;

use cotrans_core::LawEntry;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{exit, CliError};
use crate::session::{execute, Session, CONSTRUCTION_DETAIL};
use crate::spec::ProblemSpec;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Replayed residuals must agree with the recorded ones to this absolute tolerance.
pub const REPLAY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportEnvelope {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub radius: usize,
    pub pass: bool,
    pub wall_time_s: f64,
    pub entries: Vec<LawEntry>,
    #[serde(default)]
    pub info: BTreeMap<String, Value>,
}

impl ReportEnvelope {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            exit::PASS
        } else {
            exit::LAW_FAILURE
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Replay(format!("unreadable report: {e}")))
    }
}

/// A finished run: the report plus the optional CSV trajectory dump.
#[derive(Debug)]
pub struct RunResult {
    pub report: ReportEnvelope,
    pub csv: Option<String>,
}

pub fn run(spec: &ProblemSpec) -> Result<RunResult, CliError> {
    let start = Instant::now();
    let out = execute(spec)?;
    let report = ReportEnvelope {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        command: spec.command.name().to_string(),
        seed: spec.seed,
        radius: spec.radius,
        pass: out.report.pass(),
        wall_time_s: start.elapsed().as_secs_f64(),
        entries: out.report.entries,
        info: out.info,
    };
    Ok(RunResult { report, csv: out.csv })
}

/// One replayed entry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplayLine {
    pub law: String,
    pub recorded: f64,
    pub replayed: Option<f64>,
    pub ok: bool,
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= REPLAY_TOLERANCE
}

/// Re-evaluates every recorded argmax under `spec`. Returns per-entry results;
/// the replay succeeds when all of them are `ok`.
pub fn replay(report: &ReportEnvelope, spec: &ProblemSpec) -> Result<Vec<ReplayLine>, CliError> {
    if report.schema_version != SCHEMA_VERSION || report.tool_version != TOOL_VERSION {
        return Err(CliError::Replay(format!(
            "report was written by schema {} / version {}, this is schema {SCHEMA_VERSION} / version {TOOL_VERSION}",
            report.schema_version, report.tool_version
        )));
    }
    if report.command != spec.command.name() {
        return Err(CliError::Replay(format!("report is for `{}`, spec is for `{}`", report.command, spec.command.name())));
    }
    let constructed = report.entries.iter().any(|e| e.details.contains_key(CONSTRUCTION_DETAIL));
    if constructed {
        // the constructor failed; replaying means failing again at the same place
        let fresh = execute(spec)?.report;
        return Ok(report
            .entries
            .iter()
            .map(|e| {
                let again = fresh.entries.iter().find(|f| f.law == e.law && f.argmax == e.argmax);
                let replayed = again.map(|f| f.max_residual);
                ReplayLine { law: e.law.clone(), recorded: e.max_residual, replayed, ok: replayed.is_some_and(|r| close(r, e.max_residual)) }
            })
            .collect());
    }
    let session = Session::new(spec)?;
    let mut lines = Vec::with_capacity(report.entries.len());
    for e in &report.entries {
        let replayed = session.residual_at(e)?;
        let ok = match replayed {
            Some(r) => close(r, e.max_residual),
            None => e.samples == 0 || e.argmax.is_none(),
        };
        lines.push(ReplayLine { law: e.law.clone(), recorded: e.max_residual, replayed, ok });
    }
    Ok(lines)
}

/// Byte-level comparison of two reports with `wall_time_s` masked.
pub fn same_modulo_wall_time(a: &ReportEnvelope, b: &ReportEnvelope) -> bool {
    let mask = |r: &ReportEnvelope| ReportEnvelope { wall_time_s: 0.0, ..r.clone() }.to_json();
    mask(a) == mask(b)
}

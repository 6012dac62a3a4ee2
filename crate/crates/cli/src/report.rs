use crate::config::{Format, RunConfig};
use anyhow::{Context, Result};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.to_string(), pass, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub minsurf: &'static str,
    pub minsurf_cli: &'static str,
    pub modules: BTreeMap<&'static str, &'static str>,
}

impl Versions {
    fn current() -> Self {
        let modules = ["complexfn", "surface", "topology", "spectral", "forms", "cli"]
            .into_iter()
            .map(|m| (m, if m == "cli" { env!("CARGO_PKG_VERSION") } else { minsurf::VERSION }))
            .collect();
        Versions { minsurf: minsurf::VERSION, minsurf_cli: env!("CARGO_PKG_VERSION"), modules }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub command: String,
    pub config: RunConfig,
    pub versions: Versions,
}

/// Did the command finish, and if not, which exit class applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    InvariantViolation,
    NonConvergence,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::InvariantViolation => 2,
            Status::NonConvergence => 3,
        }
    }
}

/// CSV projection of a report.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub struct Outcome {
    pub report: serde_json::Value,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub table: Table,
    /// set by commands that ran but did not converge
    pub nonconvergent: bool,
}

impl Outcome {
    pub fn new(report: impl Serialize, table: Table) -> Result<Self> {
        Ok(Outcome {
            report: serde_json::to_value(report)?,
            checks: Vec::new(),
            notes: Vec::new(),
            table,
            nonconvergent: false,
        })
    }

    pub fn status(&self) -> Status {
        if self.checks.iter().any(|c| !c.pass) {
            Status::InvariantViolation
        } else if self.nonconvergent {
            Status::NonConvergence
        } else {
            Status::Ok
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    provenance: Provenance,
    status: Status,
    checks: &'a [Check],
    notes: &'a [String],
    report: &'a serde_json::Value,
}

pub fn render(command: &str, cfg: &RunConfig, out: &Outcome) -> Result<String> {
    let provenance = Provenance { command: command.to_string(), config: cfg.clone(), versions: Versions::current() };
    match cfg.format {
        Format::Json => {
            let env = Envelope {
                provenance,
                status: out.status(),
                checks: &out.checks,
                notes: &out.notes,
                report: &out.report,
            };
            Ok(serde_json::to_string_pretty(&env)? + "\n")
        }
        Format::Csv => {
            let mut s = String::new();
            s += &format!("# command: {}\n", provenance.command);
            s += &format!("# config: {}\n", serde_json::to_string(&provenance.config)?);
            s += &format!("# versions: {}\n", serde_json::to_string(&provenance.versions)?);
            s += &format!("# status: {}\n", serde_json::to_string(&out.status())?.trim_matches('"'));
            for c in &out.checks {
                s += &format!("# check {}: {} ({})\n", c.name, if c.pass { "pass" } else { "FAIL" }, c.detail);
            }
            for n in &out.notes {
                s += &format!("# note: {n}\n");
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&out.table.header)?;
            for r in &out.table.rows {
                w.write_record(r)?;
            }
            s += &String::from_utf8(w.into_inner().context("flushing csv")?)?;
            Ok(s)
        }
    }
}

pub fn emit(text: &str, out: Option<&str>) -> Result<()> {
    match out {
        Some(path) if path != "-" => std::fs::write(path, text).with_context(|| format!("writing {path}")),
        _ => {
            print!("{text}");
            Ok(())
        }
    }
}

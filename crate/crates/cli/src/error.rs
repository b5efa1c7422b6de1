use std::fmt;

use kirchhoff::inverse::IdentifiabilityReport;
use kirchhoff::Error;
use serde_json::{json, Value};

/// Anything that ends a command unsuccessfully.
#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io { path: String, message: String },
    Usage(String),
    MissingInput(&'static str),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Io { path, message } => write!(f, "cannot read `{path}`: {message}"),
            CliError::Usage(m) => f.write_str(m),
            CliError::MissingInput(field) => write!(f, "netlist has no `{field}`, which this command needs"),
        }
    }
}

impl CliError {
    /// 1 for bad input, 2 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "IoError",
            CliError::Usage(_) => "UsageError",
            CliError::MissingInput(_) => "MissingInput",
        }
    }

    /// `{"error": {"kind": .., "message": .., <details>}}`.
    pub fn to_value(&self) -> Value {
        let mut obj = json!({ "kind": self.kind(), "message": self.to_string() });
        let details = match self {
            CliError::Core(e) => core_details(e),
            CliError::Io { path, .. } => json!({ "path": path }),
            CliError::MissingInput(field) => json!({ "field": field }),
            CliError::Usage(_) => json!({}),
        };
        if let (Some(o), Value::Object(d)) = (obj.as_object_mut(), details) {
            o.extend(d);
        }
        json!({ "error": obj })
    }
}

fn core_details(e: &Error) -> Value {
    match e {
        Error::Parse { line, column, .. } => json!({ "line": line, "column": column }),
        Error::DanglingReference { field, id } | Error::DuplicateId { field, id } => {
            json!({ "field": field, "id": id })
        }
        Error::NonPositiveValue { field, value } => json!({ "field": field, "value": value }),
        Error::SelfLoop { edge, node } => json!({ "edge": edge, "node": node }),
        Error::UnknownEdge(id) => json!({ "edge": id }),
        Error::UnknownNode(id) => json!({ "node": id }),
        Error::ReactiveElement { edge } => json!({ "edge": edge }),
        Error::ZeroPivot { node, pivot } => json!({ "node": node, "pivot": pivot }),
        Error::SingularInterior { min_eigenvalue, threshold } => {
            json!({ "min_eigenvalue": min_eigenvalue, "threshold": threshold })
        }
        Error::ResonantInterior { sigma_min, sigma_max } => {
            json!({ "sigma_min": sigma_min, "sigma_max": sigma_max })
        }
        Error::NoConvergence { iterations } => json!({ "iterations": iterations }),
        Error::RankDeficient { rank, parameters, report } => {
            json!({ "rank": rank, "parameters": parameters, "report": report_value(report) })
        }
        _ => json!({}),
    }
}

pub fn report_value(r: &IdentifiabilityReport) -> Value {
    json!({
        "edges": r.edges,
        "boundary_nodes": r.boundary_nodes,
        "dof": r.dof,
        "necessary_ok": r.necessary_ok,
        "jacobian_rank": r.jacobian_rank,
        "probe_ranks": r.probe_ranks,
        "locally_injective": r.locally_injective,
        "probe_points": r.probe_points,
    })
}

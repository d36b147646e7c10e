//! Flat key-value run configuration.
//!
//! A config file is a TOML document with top-level keys only. Every key can
//! also be given on the command line as `--key value`; those overrides win.
//!
//! ```toml
//! n_sites = 15
//! h = -1.0
//! j = 1.0
//! v = 0.0
//! gamma = 1.0
//! d_max = 20
//! scan_parameter = "h"
//! scan_start = -4.0
//! scan_stop = 4.0
//! scan_steps = 33
//! observables = ["XX@7,8", "XX@7,9", "Z@7"]
//! out = "results/field-scan"
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, Pauli};
use crate::sweeper::SweepSchedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanParameter {
    H,
    J,
    V,
    Gamma,
}

impl ScanParameter {
    pub fn name(self) -> &'static str {
        match self {
            ScanParameter::H => "h",
            ScanParameter::J => "j",
            ScanParameter::V => "v",
            ScanParameter::Gamma => "gamma",
        }
    }

    /// `spec` with this parameter set to `value`.
    pub fn apply(self, spec: &ModelSpec, value: f64) -> ModelSpec {
        let mut s = *spec;
        match self {
            ScanParameter::H => s.field_h = value,
            ScanParameter::J => s.coupling_j = value,
            ScanParameter::V => s.coupling_v = value,
            ScanParameter::Gamma => s.gamma = value,
        }
        s
    }

    pub fn get(self, spec: &ModelSpec) -> f64 {
        match self {
            ScanParameter::H => spec.field_h,
            ScanParameter::J => spec.coupling_j,
            ScanParameter::V => spec.coupling_v,
            ScanParameter::Gamma => spec.gamma,
        }
    }
}

impl FromStr for ScanParameter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "h" => Ok(ScanParameter::H),
            "j" | "J" => Ok(ScanParameter::J),
            "v" | "V" => Ok(ScanParameter::V),
            "gamma" => Ok(ScanParameter::Gamma),
            other => Err(format!(
                "scan_parameter must be one of h, j, v, gamma, got '{other}'"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub parameter: ScanParameter,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl ScanSpec {
    /// Evenly spaced values from `start` to `stop` inclusive.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

/// A product of Pauli operators on distinct sites, written `XX@5,6` or `Z@7`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observable {
    pub factors: Vec<(Pauli, usize)>,
}

impl Observable {
    pub fn single(op: Pauli, site: usize) -> Self {
        Observable {
            factors: vec![(op, site)],
        }
    }

    pub fn pair(op_a: Pauli, a: usize, op_b: Pauli, b: usize) -> Self {
        Observable {
            factors: vec![(op_a, a), (op_b, b)],
        }
    }

    /// Column label, e.g. `XX_5_6`.
    pub fn label(&self) -> String {
        let ops: String = self.factors.iter().map(|(p, _)| p.to_string()).collect();
        let sites: Vec<String> = self.factors.iter().map(|(_, s)| s.to_string()).collect();
        format!("{ops}_{}", sites.join("_"))
    }

    fn check(&self, n_sites: usize) -> std::result::Result<(), String> {
        for (i, &(_, s)) in self.factors.iter().enumerate() {
            if s >= n_sites {
                return Err(format!(
                    "observable {self}: site {s} outside a chain of {n_sites}"
                ));
            }
            if self.factors[..i].iter().any(|&(_, t)| t == s) {
                return Err(format!("observable {self}: site {s} repeated"));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ops: String = self.factors.iter().map(|(p, _)| p.to_string()).collect();
        let sites: Vec<String> = self.factors.iter().map(|(_, s)| s.to_string()).collect();
        write!(f, "{ops}@{}", sites.join(","))
    }
}

impl FromStr for Observable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("observable '{s}' is not of the form OPS@SITES, e.g. XX@5,6 or Z@7");
        let (ops, sites) = s.trim().split_once('@').ok_or_else(bad)?;
        let ops: Vec<Pauli> = ops
            .chars()
            .map(|c| c.to_string().parse::<Pauli>())
            .collect::<Result<_>>()
            .map_err(|e| format!("observable '{s}': {e}"))?;
        let sites: Vec<usize> = sites
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        if ops.is_empty() || ops.len() != sites.len() {
            return Err(bad());
        }
        if ops.len() > 2 {
            return Err(format!(
                "observable '{s}': at most two factors are supported"
            ));
        }
        Ok(Observable {
            factors: ops.into_iter().zip(sites).collect(),
        })
    }
}

/// `⟨Zᵢ⟩` on every site, then `⟨Xᵢ Xᵢ₊₁⟩` and `⟨Xᵢ Xᵢ₊₂⟩` on every pair.
pub fn default_observables(n_sites: usize) -> Vec<Observable> {
    let mut out: Vec<Observable> = (0..n_sites)
        .map(|i| Observable::single(Pauli::Z, i))
        .collect();
    for l in 1..=2 {
        for i in 0..n_sites.saturating_sub(l) {
            out.push(Observable::pair(Pauli::X, i, Pauli::X, i + l));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub schedule: SweepSchedule,
    pub scan: Option<ScanSpec>,
    pub observables: Vec<Observable>,
    pub out: PathBuf,
    pub verify: bool,
    pub format: OutputFormat,
    /// Start every scan point from the previous point's state.
    pub warm_start: bool,
    /// Write a checkpoint per scan point after every sweep.
    pub checkpoint: bool,
    /// Continue from existing checkpoints instead of starting over.
    pub resume: bool,
}

impl RunConfig {
    /// The model of every scan point, in order.
    pub fn points(&self) -> Vec<ModelSpec> {
        match &self.scan {
            Some(scan) => scan
                .values()
                .into_iter()
                .map(|v| scan.parameter.apply(&self.model, v))
                .collect(),
            None => vec![self.model],
        }
    }
}

const SCHEDULE_KEYS: &[&str] = &[
    "d_start",
    "d_max",
    "d_step",
    "gamma_start_factor",
    "gamma_decay",
    "phase1_arnoldi_iters",
    "phase2_arnoldi_iters",
    "phase1_sweeps",
    "max_sweeps",
    "residual_tol",
    "observable_tol",
    "phase1_tol",
    "krylov_dim",
    "cutoff",
    "noise",
    "seed",
    "memory_budget_mb",
    "hermitian_basis",
];

const OTHER_KEYS: &[&str] = &[
    "n_sites",
    "h",
    "j",
    "v",
    "gamma",
    "scan_parameter",
    "scan_start",
    "scan_stop",
    "scan_steps",
    "observables",
    "out",
    "verify",
    "format",
    "warm_start",
    "checkpoint",
    "resume",
];

/// Canonical spelling of a key: dashes become underscores and the usual
/// capitalised symbols are accepted.
pub fn canonical_key(key: &str) -> String {
    match key {
        "N" | "n" => "n_sites".into(),
        "J" => "j".into(),
        "V" => "v".into(),
        other => other.replace('-', "_"),
    }
}

/// Reads a config file into a flat table with canonical keys.
pub fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        Error::Config(vec![format!("{}: {}", path.display(), e.message())])
    })?;
    Ok(table
        .into_iter()
        .map(|(k, v)| (canonical_key(&k), v))
        .collect())
}

/// Interprets a command-line value as TOML, falling back to a bare string.
pub fn parse_value(raw: &str) -> Value {
    format!("x = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("x"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Splits trailing `--key value` arguments into table entries. A key
/// directly followed by another key (or by nothing) is a switch set to `true`.
pub fn parse_overrides(args: &[String]) -> Result<Table> {
    let mut table = Table::new();
    let mut problems = Vec::new();
    let mut it = args.iter().peekable();
    while let Some(arg) = it.next() {
        let Some(key) = arg.strip_prefix("--") else {
            problems.push(format!(
                "unexpected argument '{arg}' (overrides look like --key value)"
            ));
            continue;
        };
        let value = match it.peek() {
            Some(next) if !next.starts_with("--") => parse_value(it.next().expect("peeked")),
            _ => Value::Boolean(true),
        };
        table.insert(canonical_key(key), value);
    }
    if problems.is_empty() {
        Ok(table)
    } else {
        Err(Error::Config(problems))
    }
}

struct Reader<'a> {
    table: &'a Table,
    problems: Vec<String>,
}

impl Reader<'_> {
    fn f64(&mut self, key: &str) -> Option<f64> {
        match self.table.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.problems.push(format!(
                    "{key}: expected a number, got {}",
                    other.type_str()
                ));
                None
            }
        }
    }

    fn usize(&mut self, key: &str) -> Option<usize> {
        match self.table.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            Value::Integer(i) => {
                self.problems
                    .push(format!("{key}: must be non-negative, got {i}"));
                None
            }
            other => {
                self.problems.push(format!(
                    "{key}: expected an integer, got {}",
                    other.type_str()
                ));
                None
            }
        }
    }

    fn bool(&mut self, key: &str) -> Option<bool> {
        match self.table.get(key)? {
            Value::Boolean(b) => Some(*b),
            other => {
                self.problems.push(format!(
                    "{key}: expected true or false, got {}",
                    other.type_str()
                ));
                None
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.table.get(key)? {
            Value::String(s) => Some(s.clone()),
            other => {
                self.problems.push(format!(
                    "{key}: expected a string, got {}",
                    other.type_str()
                ));
                None
            }
        }
    }

    fn strings(&mut self, key: &str) -> Option<Vec<String>> {
        match self.table.get(key)? {
            // a single string may list several entries separated by ';'
            Value::String(s) => Some(
                s.split(';')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(String::from)
                    .collect(),
            ),
            Value::Array(items) => {
                let mut out = Vec::new();
                for item in items {
                    match item {
                        Value::String(s) => out.push(s.clone()),
                        other => self
                            .problems
                            .push(format!("{key}: expected strings, got {}", other.type_str())),
                    }
                }
                Some(out)
            }
            other => {
                self.problems.push(format!(
                    "{key}: expected a list of strings, got {}",
                    other.type_str()
                ));
                None
            }
        }
    }
}

/// Validates a flat table into a run configuration, reporting every problem
/// at once.
pub fn from_table(table: &Table) -> Result<RunConfig> {
    let table: &Table = &table
        .iter()
        .map(|(k, v)| (canonical_key(k), v.clone()))
        .collect();
    let mut r = Reader {
        table,
        problems: Vec::new(),
    };
    for key in table.keys() {
        if !SCHEDULE_KEYS.contains(&key.as_str()) && !OTHER_KEYS.contains(&key.as_str()) {
            r.problems.push(format!("unknown key '{key}'"));
        }
    }

    let n_sites = r.usize("n_sites");
    if n_sites.is_none() && !table.contains_key("n_sites") {
        r.problems.push("n_sites is required".into());
    }
    let mut model = ModelSpec {
        n_sites: n_sites.unwrap_or(1),
        local_dim: 2,
        field_h: r.f64("h").unwrap_or(0.0),
        coupling_j: r.f64("j").unwrap_or(1.0),
        coupling_v: r.f64("v").unwrap_or(0.0),
        gamma: r.f64("gamma").unwrap_or(1.0),
    };

    let mut schedule = SweepSchedule::default();
    macro_rules! sched {
        ($($field:ident: $kind:ident),* $(,)?) => {
            $(if let Some(x) = r.$kind(stringify!($field)) {
                schedule.$field = x;
            })*
        };
    }
    sched!(
        d_start: usize,
        d_max: usize,
        d_step: usize,
        gamma_start_factor: f64,
        gamma_decay: f64,
        phase1_arnoldi_iters: usize,
        phase2_arnoldi_iters: usize,
        phase1_sweeps: usize,
        max_sweeps: usize,
        residual_tol: f64,
        observable_tol: f64,
        phase1_tol: f64,
        krylov_dim: usize,
        cutoff: f64,
        noise: f64,
        memory_budget_mb: usize,
        hermitian_basis: bool,
    );
    if let Some(seed) = r.usize("seed") {
        schedule.seed = seed as u64;
    }
    if !table.contains_key("d_start") && schedule.d_start > schedule.d_max {
        schedule.d_start = schedule.d_max;
    }

    let scan_keys = ["scan_parameter", "scan_start", "scan_stop", "scan_steps"];
    let scan = if scan_keys.iter().any(|k| table.contains_key(*k)) {
        let parameter = r
            .string("scan_parameter")
            .and_then(|s| match s.parse::<ScanParameter>() {
                Ok(p) => Some(p),
                Err(e) => {
                    r.problems.push(e);
                    None
                }
            });
        let start = r.f64("scan_start");
        let stop = r.f64("scan_stop");
        let steps = r.usize("scan_steps");
        for k in scan_keys {
            if !table.contains_key(k) {
                r.problems.push(format!("{k} is required when scanning"));
            }
        }
        if steps == Some(0) {
            r.problems.push("scan_steps must be >= 1".into());
        }
        match (parameter, start, stop, steps) {
            (Some(parameter), Some(start), Some(stop), Some(steps)) if steps > 0 => {
                if !start.is_finite() || !stop.is_finite() {
                    r.problems.push("scan bounds must be finite".into());
                }
                if parameter == ScanParameter::Gamma && start.min(stop) < 0.0 {
                    r.problems
                        .push("a gamma scan must stay non-negative".into());
                }
                model = parameter.apply(&model, start);
                Some(ScanSpec {
                    parameter,
                    start,
                    stop,
                    steps,
                })
            }
            _ => None,
        }
    } else {
        None
    };

    let observables = match r.strings("observables") {
        Some(list) => {
            let mut out = Vec::new();
            for s in list {
                match s.parse::<Observable>() {
                    Ok(o) => out.push(o),
                    Err(e) => r.problems.push(e),
                }
            }
            if out.is_empty() && r.problems.is_empty() {
                r.problems.push("observables must not be empty".into());
            }
            out
        }
        None => default_observables(model.n_sites),
    };
    if n_sites.is_some() {
        for o in &observables {
            if let Err(e) = o.check(model.n_sites) {
                r.problems.push(e);
            }
        }
    }

    let out = r
        .string("out")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("ness-out"));
    let verify = r.bool("verify").unwrap_or(false);
    let format = match r.string("format").as_deref() {
        None | Some("csv") => OutputFormat::Csv,
        Some("json") => OutputFormat::Json,
        Some("both") => OutputFormat::Both,
        Some(other) => {
            r.problems
                .push(format!("format must be csv, json or both, got '{other}'"));
            OutputFormat::Csv
        }
    };
    let warm_start = r.bool("warm_start").unwrap_or(true);
    let checkpoint = r.bool("checkpoint").unwrap_or(false);
    let resume = r.bool("resume").unwrap_or(false);

    let mut problems = r.problems;
    if n_sites.is_some() {
        let points: Vec<ModelSpec> = match &scan {
            Some(s) => s
                .values()
                .into_iter()
                .map(|v| s.parameter.apply(&model, v))
                .collect(),
            None => vec![model],
        };
        for point in points {
            if let Err(Error::Config(p)) = point.validate() {
                problems.extend(p);
                break;
            }
        }
    }
    if let Err(Error::Config(p)) = schedule.validate() {
        problems.extend(p);
    }
    if problems.is_empty() {
        Ok(RunConfig {
            model,
            schedule,
            scan,
            observables,
            out,
            verify,
            format,
            warm_start,
            checkpoint,
            resume,
        })
    } else {
        Err(Error::Config(problems))
    }
}

/// Reads `path` (if any), applies `overrides` on top and validates.
pub fn parse_config(path: Option<&Path>, overrides: &Table) -> Result<RunConfig> {
    let mut table = match path {
        Some(p) => read_table(p)?,
        None => Table::new(),
    };
    for (k, v) in overrides {
        table.insert(canonical_key(k), v.clone());
    }
    from_table(&table)
}

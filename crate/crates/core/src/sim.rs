//! Coverage study for the triangular mode, reference values, and result files.
//!
//! Each cell `(method, n, theta0)` draws its own key
//! `derive_key(seed, [method code, n, theta0 bits])`; replicate `r` of the
//! cell consumes stream `r` under that key. Replicate outcomes are collected
//! in index order before aggregation, so results do not depend on the worker
//! count or on the order in which cells are listed.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvm::bvm_tv;
use crate::error::{Error, Result};
use crate::gfd::{equal_tailed_interval, Grid, Interval};
use crate::rng::{derive_key, substream};
use crate::triangular::{gaussian_limit, Prior, TriangularGrid, TriangularParam, TriangularSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    GF,
    ModGF,
    FlatBayes,
    JeffreysBayes,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::GF, Method::ModGF, Method::FlatBayes, Method::JeffreysBayes];

    pub fn name(self) -> &'static str {
        match self {
            Method::GF => "GF",
            Method::ModGF => "ModGF",
            Method::FlatBayes => "FlatBayes",
            Method::JeffreysBayes => "JeffreysBayes",
        }
    }

    fn code(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

/// Sample sizes of the reference table.
pub const REFERENCE_N: [usize; 10] = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000];
/// Mode values of the reference table.
pub const REFERENCE_THETA: [f64; 8] = [0.01, 0.03, 0.05, 0.10, 0.20, 0.30, 0.40, 0.50];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub n_values: Vec<usize>,
    pub theta_values: Vec<f64>,
    pub replicates: usize,
    pub level: f64,
    pub grid_size: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            n_values: REFERENCE_N.to_vec(),
            theta_values: REFERENCE_THETA.to_vec(),
            replicates: 10_000,
            level: 0.95,
            grid_size: 4096,
            seed: 1,
        }
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {s:?}"))))
        .collect()
}

fn parse_scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {value:?}")))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.methods.is_empty() {
            return fail("methods must not be empty".into());
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return fail(format!("n_values must be non-empty and positive, got {:?}", self.n_values));
        }
        if self.theta_values.is_empty() || self.theta_values.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return fail(format!("theta_values must lie in (0, 1), got {:?}", self.theta_values));
        }
        if self.replicates == 0 {
            return fail("replicates must be at least 1".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return fail(format!("level must lie in (0, 1), got {}", self.level));
        }
        if self.grid_size < 2 {
            return fail(format!("grid_size must be at least 2, got {}", self.grid_size));
        }
        Ok(())
    }

    /// Sets one field from its textual form. Lists are comma separated.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim() {
            "methods" => self.methods = parse_list(key, value)?,
            "n_values" => self.n_values = parse_list(key, value)?,
            "theta_values" => self.theta_values = parse_list(key, value)?,
            "replicates" => self.replicates = parse_scalar(key, value)?,
            "level" => self.level = parse_scalar(key, value)?,
            "grid_size" => self.grid_size = parse_scalar(key, value)?,
            "seed" => self.seed = parse_scalar(key, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of the current values. Blank lines
    /// and lines starting with `#` are skipped.
    pub fn merge_key_values(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut config = Self::default();
        config.merge_key_values(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Self::from_key_values(&text)
    }

    pub fn cell_count(&self) -> usize {
        self.methods.len() * self.n_values.len() * self.theta_values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub method: Method,
    pub n: usize,
    pub theta0: f64,
    pub coverage: f64,
    pub mean_length: f64,
    pub mc_se: f64,
    pub replicates: usize,
}

impl CoverageRecord {
    /// Aggregates replicate outcomes `(covered, length)`.
    pub fn from_outcomes(method: Method, n: usize, theta0: f64, outcomes: &[(bool, f64)]) -> Self {
        let replicates = outcomes.len();
        let hits = outcomes.iter().filter(|o| o.0).count();
        let coverage = hits as f64 / replicates as f64;
        let mean_length = outcomes.iter().map(|o| o.1).sum::<f64>() / replicates as f64;
        Self {
            method,
            n,
            theta0,
            coverage,
            mean_length,
            mc_se: mc_se(coverage, replicates),
            replicates,
        }
    }

    fn sort_key(&self) -> (Method, usize, f64) {
        (self.method, self.n, self.theta0)
    }
}

/// `sqrt(c (1 - c) / replicates)`.
pub fn mc_se(coverage: f64, replicates: usize) -> f64 {
    (coverage * (1.0 - coverage) / replicates as f64).sqrt()
}

/// Stream key of a cell.
pub fn cell_key(seed: u64, method: Method, n: usize, theta0: f64) -> u64 {
    derive_key(seed, &[method.code(), n as u64, theta0.to_bits()])
}

/// Interval for one simulated sample under `method`.
pub fn method_interval(
    method: Method,
    tri: &TriangularGrid,
    sample: &TriangularSample,
    level: f64,
) -> Result<Interval> {
    match method {
        Method::GF => equal_tailed_interval(&tri.gfd(sample)?, level),
        Method::ModGF => equal_tailed_interval(&tri.modified_gfd(sample)?, level),
        Method::FlatBayes => equal_tailed_interval(&tri.bayes_posterior(sample, Prior::Flat)?, level),
        Method::JeffreysBayes => {
            equal_tailed_interval(&tri.bayes_posterior(sample, Prior::Jeffreys)?, level)
        }
    }
}

fn run_cell_on(
    tri: &TriangularGrid,
    method: Method,
    n: usize,
    theta0: f64,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<CoverageRecord> {
    let theta = TriangularParam::new(theta0)?;
    let key = cell_key(seed, method, n, theta0);
    let outcomes = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(key, r);
            let sample = TriangularSample::simulate(theta, n, &mut rng)?;
            let interval = method_interval(method, tri, &sample, level)?;
            Ok((interval.contains(theta0), interval.length()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageRecord::from_outcomes(method, n, theta0, &outcomes))
}

/// Coverage and mean length of `level` intervals over `replicates` samples.
pub fn run_cell(
    method: Method,
    n: usize,
    theta0: f64,
    replicates: usize,
    level: f64,
    grid_size: usize,
    seed: u64,
) -> Result<CoverageRecord> {
    let config = ExperimentConfig {
        methods: vec![method],
        n_values: vec![n],
        theta_values: vec![theta0],
        replicates,
        level,
        grid_size,
        seed,
    };
    config.validate()?;
    let tri = TriangularGrid::new(Grid::unit(grid_size)?)?;
    run_cell_on(&tri, method, n, theta0, replicates, level, seed)
}

/// All cells of the configuration, sorted by method, then `n`, then `theta0`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<CoverageRecord>> {
    config.validate()?;
    let tri = TriangularGrid::new(Grid::unit(config.grid_size)?)?;
    let cells: Vec<(Method, usize, f64)> = config
        .methods
        .iter()
        .flat_map(|&m| {
            config
                .n_values
                .iter()
                .flat_map(move |&n| config.theta_values.iter().map(move |&t| (m, n, t)))
        })
        .collect();
    let mut records = cells
        .par_iter()
        .map(|&(m, n, t)| run_cell_on(&tri, m, n, t, config.replicates, config.level, config.seed))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        ka.0.cmp(&kb.0).then(ka.1.cmp(&kb.1)).then(ka.2.total_cmp(&kb.2))
    });
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceCell {
    pub coverage: f64,
    pub length: f64,
}

/// Published coverage and expected length for every `(method, n, theta)`.
#[derive(Debug, Clone)]
pub struct ReferenceTable {
    rows: Vec<(Method, usize, [ReferenceCell; 8])>,
}

const TABLE_TEXT: &str = include_str!("reference_coverage.txt");

fn parse_table(text: &str) -> ReferenceTable {
    let rows = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|line| {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let method: Method = fields[0].parse().expect("method name in table");
            let n: usize = fields[1].parse().expect("n in table");
            let values: Vec<f64> = fields[2..].iter().map(|v| v.parse().expect("number in table")).collect();
            let cells = std::array::from_fn(|j| ReferenceCell { coverage: values[2 * j], length: values[2 * j + 1] });
            (method, n, cells)
        })
        .collect();
    ReferenceTable { rows }
}

impl ReferenceTable {
    pub fn get() -> &'static ReferenceTable {
        static TABLE: OnceLock<ReferenceTable> = OnceLock::new();
        TABLE.get_or_init(|| parse_table(TABLE_TEXT))
    }

    pub fn lookup(&self, method: Method, n: usize, theta: f64) -> Option<ReferenceCell> {
        let j = REFERENCE_THETA.iter().position(|&t| (t - theta).abs() < 1e-12)?;
        self.rows.iter().find(|r| r.0 == method && r.1 == n).map(|r| r.2[j])
    }

    pub fn len(&self) -> usize {
        self.rows.len() * REFERENCE_THETA.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Every cell as a record with zero Monte-Carlo error.
    pub fn records(&self, replicates: usize) -> Vec<CoverageRecord> {
        self.rows
            .iter()
            .flat_map(|(m, n, cells)| {
                cells.iter().zip(REFERENCE_THETA).map(move |(c, theta0)| CoverageRecord {
                    method: *m,
                    n: *n,
                    theta0,
                    coverage: c.coverage,
                    mean_length: c.length,
                    mc_se: 0.0,
                    replicates,
                })
            })
            .collect()
    }
}

/// Required fraction of passing cells.
pub const PASS_FRACTION: f64 = 0.95;
pub const DEFAULT_COVERAGE_TOLERANCE: f64 = 0.015;
pub const DEFAULT_LENGTH_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellComparison {
    pub method: Method,
    pub n: usize,
    pub theta0: f64,
    pub coverage: f64,
    pub reference_coverage: f64,
    pub coverage_tolerance: f64,
    pub mean_length: f64,
    pub reference_length: f64,
    pub length_tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub cells: Vec<CellComparison>,
    pub passed_cells: usize,
    pub pass_fraction: f64,
    pub passed: bool,
}

/// Coverage must be within `tolerance_coverage + 3 mc_se` of the table and
/// the mean length within `tolerance_length`. The report passes when at least
/// [`PASS_FRACTION`] of the cells do.
pub fn compare_to_reference(
    records: &[CoverageRecord],
    tolerance_coverage: f64,
    tolerance_length: f64,
) -> Result<ComparisonReport> {
    let table = ReferenceTable::get();
    let cells = records
        .iter()
        .map(|r| {
            let reference = table.lookup(r.method, r.n, r.theta0).ok_or_else(|| Error::UnknownCell {
                method: r.method.to_string(),
                n: r.n,
                theta: r.theta0,
            })?;
            let coverage_tolerance = tolerance_coverage + 3.0 * r.mc_se;
            let passed = (r.coverage - reference.coverage).abs() <= coverage_tolerance
                && (r.mean_length - reference.length).abs() <= tolerance_length;
            Ok(CellComparison {
                method: r.method,
                n: r.n,
                theta0: r.theta0,
                coverage: r.coverage,
                reference_coverage: reference.coverage,
                coverage_tolerance,
                mean_length: r.mean_length,
                reference_length: reference.length,
                length_tolerance: tolerance_length,
                passed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let passed_cells = cells.iter().filter(|c| c.passed).count();
    let pass_fraction = if cells.is_empty() { 0.0 } else { passed_cells as f64 / cells.len() as f64 };
    Ok(ComparisonReport { passed: !cells.is_empty() && pass_fraction >= PASS_FRACTION, cells, passed_cells, pass_fraction })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidConfig(format!("unknown format {other:?}"))),
        }
    }
}

pub const CSV_HEADER: [&str; 7] = ["method", "n", "theta0", "coverage", "mean_length", "mc_se", "replicates"];

/// 17 significant digits in scientific notation.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_csv_string(records: &[CoverageRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.method.name().to_string(),
            r.n.to_string(),
            fmt_float(r.theta0),
            fmt_float(r.coverage),
            fmt_float(r.mean_length),
            fmt_float(r.mc_se),
            r.replicates.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("ascii output"))
}

pub fn to_json_string(records: &[CoverageRecord]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(records)?;
    s.push('\n');
    Ok(s)
}

pub fn render(records: &[CoverageRecord], format: Format) -> Result<String> {
    match format {
        Format::Csv => to_csv_string(records),
        Format::Json => to_json_string(records),
    }
}

pub fn parse_csv(text: &str) -> Result<Vec<CoverageRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidConfig(format!("unexpected CSV header {header:?}")));
    }
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn parse_json(text: &str) -> Result<Vec<CoverageRecord>> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse(text: &str, format: Format) -> Result<Vec<CoverageRecord>> {
    match format {
        Format::Csv => parse_csv(text),
        Format::Json => parse_json(text),
    }
}

/// Writes `records` to `path` in `format`.
pub fn emit(records: &[CoverageRecord], format: Format, path: &Path) -> Result<()> {
    let text = render(records, format)?;
    let io = |source| Error::Io { path: path.into(), source };
    let mut file = std::fs::File::create(path).map_err(io)?;
    file.write_all(text.as_bytes()).map_err(io)
}

pub fn load(path: &Path, format: Format) -> Result<Vec<CoverageRecord>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    parse(&text, format)
}

/// Mean total variation between the fiducial density and its Gaussian limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvDecayRow {
    pub theta0: f64,
    pub n: usize,
    pub replicates: usize,
    pub mean_tv: f64,
    pub sd_tv: f64,
}

/// Fiducial-versus-limit discrepancy for every `(theta0, n)` pair, averaged
/// over `replicates` simulated samples.
pub fn tv_decay_study(
    theta_values: &[f64],
    n_values: &[usize],
    replicates: usize,
    grid_size: usize,
    seed: u64,
) -> Result<Vec<TvDecayRow>> {
    if replicates < 2 {
        return Err(Error::InvalidConfig("need at least two replicates".into()));
    }
    if n_values.contains(&0) {
        return Err(Error::InvalidConfig("sample sizes must be positive".into()));
    }
    let tri = TriangularGrid::new(Grid::unit(grid_size)?)?;
    let mut rows = Vec::new();
    for &theta0 in theta_values {
        let theta = TriangularParam::new(theta0)?;
        for &n in n_values {
            let key = derive_key(seed, &[0xb7, n as u64, theta0.to_bits()]);
            let tvs = (0..replicates as u64)
                .into_par_iter()
                .map(|r| {
                    let mut rng = substream(key, r);
                    let sample = TriangularSample::simulate(theta, n, &mut rng)?;
                    bvm_tv(&tri.gfd(&sample)?, &gaussian_limit(&sample, theta)?)
                })
                .collect::<Result<Vec<_>>>()?;
            let mean = tvs.iter().sum::<f64>() / replicates as f64;
            let var = tvs.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (replicates - 1) as f64;
            rows.push(TvDecayRow { theta0, n, replicates, mean_tv: mean, sd_tv: var.sqrt() });
        }
    }
    Ok(rows)
}

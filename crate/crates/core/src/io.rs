//! Run configuration, grayscale image ingestion and run logging.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{NimtError, Result};
use crate::exec::Execution;
use crate::function_space::{empirical_l2, BaseFunction, GridFunction};
use crate::harness::{make_scenario, LinearComparisonRow, ScenarioName, ScenarioOverrides};
use crate::kernel::Kernel;
use crate::learner::Aggregation;
use crate::metrics::{bound_monitor, IterationRecord};
use crate::session::{stream_rng, Assertions, SessionConfig, SessionLog, Stream};
use crate::teacher::{sample_pool, AltTeaching, PackSize, TeacherKind, TeacherPolicy};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: RawScenario,
    #[serde(default)]
    kernel: Option<Kernel>,
    #[serde(default)]
    teacher: RawTeacher,
    seed: u64,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    aggregation: Aggregation,
    #[serde(default)]
    assertions: RawAssertions,
    #[serde(default)]
    execution: Execution,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    eta: Option<f64>,
    epsilon: Option<f64>,
    max_iters: Option<usize>,
    target_image: Option<PathBuf>,
    init_image: Option<PathBuf>,
    init_sign: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTeacher {
    #[serde(default = "default_kind")]
    kind: TeacherKind,
    #[serde(default = "default_k")]
    k: f64,
    pool: Option<RawPool>,
    alt: Option<RawAlt>,
}

impl Default for RawTeacher {
    fn default() -> Self {
        RawTeacher {
            kind: default_kind(),
            k: default_k(),
            pool: None,
            alt: None,
        }
    }
}

fn default_kind() -> TeacherKind {
    TeacherKind::Gft
}

fn default_k() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPool {
    ratio: Option<f64>,
    indices: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlt {
    image: PathBuf,
    #[serde(default = "default_alt_prob")]
    prob: f64,
}

fn default_alt_prob() -> f64 {
    0.2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAssertions {
    #[serde(default = "yes")]
    lemma_descent: bool,
    #[serde(default = "yes")]
    theorem1: bool,
}

impl Default for RawAssertions {
    fn default() -> Self {
        RawAssertions {
            lemma_descent: true,
            theorem1: true,
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
pub enum PoolSpec {
    Ratio(f64),
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AltSpec {
    pub image: PathBuf,
    pub prob: f64,
}

/// A validated run description with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioName,
    pub eta: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub target_image: Option<PathBuf>,
    pub init_image: Option<PathBuf>,
    pub init_sign: Option<f64>,
    pub kernel: Kernel,
    pub teacher: TeacherKind,
    pub k: PackSize,
    pub pool: Option<PoolSpec>,
    pub alt: Option<AltSpec>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub aggregation: Aggregation,
    pub assertions: Assertions,
    pub execution: Execution,
}

fn config_err(key: &str, message: impl Into<String>) -> NimtError {
    NimtError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn resolve_path(base: Option<&Path>, path: &Path) -> PathBuf {
    match base {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

impl RunConfig {
    /// Defaults for `name`: greedy single-example teaching, no pool, no
    /// alternative source.
    pub fn for_scenario(name: ScenarioName, seed: u64) -> Result<Self> {
        let defaults = make_scenario(name, &ScenarioOverrides::default())?;
        Ok(RunConfig {
            scenario: name,
            eta: defaults.eta,
            epsilon: defaults.epsilon,
            max_iters: defaults.max_iters,
            target_image: None,
            init_image: None,
            init_sign: None,
            kernel: *defaults.kernel(),
            teacher: TeacherKind::Gft,
            k: PackSize::Count(1),
            pool: None,
            alt: None,
            seed,
            output_dir: None,
            aggregation: Aggregation::Mean,
            assertions: Assertions::default(),
            execution: Execution::default(),
        })
    }

    /// Range and existence checks, each error naming its config key.
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(config_err(
                "scenario.eta",
                format!("must be positive, got {}", self.eta),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(config_err(
                "scenario.epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        if let Some(sign) = self.init_sign {
            if self.scenario != ScenarioName::Parametric3d {
                return Err(config_err(
                    "scenario.init_sign",
                    "only applies to parametric3d",
                ));
            }
            if sign != 1.0 && sign != -1.0 {
                return Err(config_err(
                    "scenario.init_sign",
                    format!("must be 1 or -1, got {sign}"),
                ));
            }
        }
        for (key, path) in [
            ("scenario.target_image", &self.target_image),
            ("scenario.init_image", &self.init_image),
        ] {
            if let Some(path) = path {
                if self.scenario != ScenarioName::Image {
                    return Err(config_err(key, "only applies to the image scenario"));
                }
                if !path.is_file() {
                    return Err(config_err(
                        key,
                        format!("file {} does not exist", path.display()),
                    ));
                }
            }
        }
        if let Err(e) = self.kernel.validate() {
            return Err(config_err("kernel", e.to_string()));
        }
        match self.k {
            PackSize::Count(0) => return Err(config_err("teacher.k", "must be at least 1")),
            PackSize::Ratio(r) if !(r > 0.0 && r <= 1.0) => {
                return Err(config_err(
                    "teacher.k",
                    format!("ratio must lie in (0, 1], got {r}"),
                ))
            }
            _ => {}
        }
        match &self.pool {
            Some(PoolSpec::Ratio(r)) if !(*r > 0.0 && *r <= 1.0) => {
                return Err(config_err(
                    "teacher.pool.ratio",
                    format!("must lie in (0, 1], got {r}"),
                ))
            }
            Some(PoolSpec::Indices(ix)) if ix.is_empty() => {
                return Err(config_err("teacher.pool.indices", "must not be empty"))
            }
            _ => {}
        }
        if let Some(alt) = &self.alt {
            if !(0.0..=1.0).contains(&alt.prob) {
                return Err(config_err(
                    "teacher.alt.prob",
                    format!("must lie in [0, 1], got {}", alt.prob),
                ));
            }
            if self.scenario != ScenarioName::Image {
                return Err(config_err(
                    "teacher.alt.image",
                    "only applies to the image scenario",
                ));
            }
            if !alt.image.is_file() {
                return Err(config_err(
                    "teacher.alt.image",
                    format!("file {} does not exist", alt.image.display()),
                ));
            }
        }
        Ok(())
    }

    /// Loads images, builds the scenario and the teacher policy.
    pub fn to_session(&self) -> Result<SessionConfig> {
        self.validate()?;
        let target_image = self
            .target_image
            .as_deref()
            .map(load_grayscale_image)
            .transpose()?;
        let init_image = self
            .init_image
            .as_deref()
            .map(load_grayscale_image)
            .transpose()?;
        let overrides = ScenarioOverrides {
            eta: Some(self.eta),
            epsilon: Some(self.epsilon),
            max_iters: Some(self.max_iters),
            kernel: Some(self.kernel),
            target_image,
            init_image,
            init_sign: self.init_sign,
        };
        let scenario = make_scenario(self.scenario, &overrides)?;
        let n = scenario.grid.len();

        let mut policy = TeacherPolicy::new(self.teacher, self.k, self.seed);
        match &self.pool {
            Some(PoolSpec::Ratio(r)) => {
                let mut rng = stream_rng(self.seed, Stream::Pool);
                policy.pool = Some(sample_pool(n, *r, &mut rng)?);
            }
            Some(PoolSpec::Indices(ix)) => {
                if let Some(bad) = ix.iter().find(|&&i| i >= n) {
                    return Err(config_err(
                        "teacher.pool.indices",
                        format!("index {bad} out of range for a grid of {n} points"),
                    ));
                }
                policy.pool = Some(ix.clone());
            }
            None => {}
        }
        if let Some(alt) = &self.alt {
            let image = load_grayscale_image(&alt.image)?;
            let BaseFunction::Grid(target) = scenario.target.base() else {
                unreachable!("validated: alternative teaching needs the image scenario")
            };
            if image.shape() != target.shape() {
                return Err(config_err(
                    "teacher.alt.image",
                    format!(
                        "shape {:?} does not match the target shape {:?}",
                        image.shape(),
                        target.shape()
                    ),
                ));
            }
            let values = image.rescaled_to_match(target).values().to_vec();
            policy.alt = Some(AltTeaching::new(alt.prob, values)?);
        }

        Ok(SessionConfig {
            scenario,
            policy,
            aggregation: self.aggregation,
            assertions: self.assertions,
            execution: self.execution,
        })
    }
}

/// Parses and validates JSON config text. Relative image paths resolve
/// against `base_dir` when given.
pub fn parse_config_in(text: &str, base_dir: Option<&Path>) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(
            if path.is_empty() { "." } else { &path },
            e.into_inner().to_string(),
        )
    })?;

    let name: ScenarioName = raw
        .scenario
        .name
        .parse()
        .map_err(|e: NimtError| config_err("scenario.name", e.to_string()))?;
    let mut config = RunConfig::for_scenario(name, raw.seed)?;
    let s = raw.scenario;
    if let Some(v) = s.eta {
        config.eta = v;
    }
    if let Some(v) = s.epsilon {
        config.epsilon = v;
    }
    if let Some(v) = s.max_iters {
        config.max_iters = v;
    }
    config.target_image = s.target_image.map(|p| resolve_path(base_dir, &p));
    config.init_image = s.init_image.map(|p| resolve_path(base_dir, &p));
    config.init_sign = s.init_sign;
    if let Some(kernel) = raw.kernel {
        config.kernel = kernel;
    }
    config.teacher = raw.teacher.kind;
    config.k =
        PackSize::from_number(raw.teacher.k).map_err(|e| config_err("teacher.k", e.to_string()))?;
    config.pool = match raw.teacher.pool {
        None => None,
        Some(RawPool {
            ratio: Some(r),
            indices: None,
        }) => Some(PoolSpec::Ratio(r)),
        Some(RawPool {
            ratio: None,
            indices: Some(ix),
        }) => Some(PoolSpec::Indices(ix)),
        Some(_) => {
            return Err(config_err(
                "teacher.pool",
                "give exactly one of `ratio` or `indices`",
            ))
        }
    };
    config.alt = raw.teacher.alt.map(|a| AltSpec {
        image: resolve_path(base_dir, &a.image),
        prob: a.prob,
    });
    config.output_dir = raw.output_dir;
    config.aggregation = raw.aggregation;
    config.assertions = Assertions {
        lemma_descent: raw.assertions.lemma_descent,
        theorem1: raw.assertions.theorem1,
    };
    config.execution = raw.execution;
    config.validate()?;
    Ok(config)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_in(text, None)
}

/// Reads a config file; relative paths inside resolve against its directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| NimtError::io(path, e))?;
    parse_config_in(&text, path.parent())
}

// ---------------------------------------------------------------------------
// Images
// ---------------------------------------------------------------------------

fn ingest_err(path: &Path, position: String, message: impl Into<String>) -> NimtError {
    NimtError::Ingest {
        path: path.to_path_buf(),
        position,
        message: message.into(),
    }
}

/// Loads a PGM (P2 or P5) or CSV grid as a surface with values in `[0, 1]`.
pub fn load_grayscale_image(path: &Path) -> Result<GridFunction> {
    let bytes = fs::read(path).map_err(|e| NimtError::io(path, e))?;
    if bytes.starts_with(b"P") {
        parse_pgm(&bytes, path)
    } else {
        parse_csv_grid(&bytes, path)
    }
}

struct PgmReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> PgmReader<'a> {
    fn err(&self, message: impl Into<String>) -> NimtError {
        ingest_err(self.path, format!("byte {}", self.pos), message)
    }

    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<(usize, &'a str)> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| {
            (
                start,
                std::str::from_utf8(&self.bytes[start..self.pos]).unwrap_or("\u{fffd}"),
            )
        })
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let (at, tok) = self
            .token()
            .ok_or_else(|| self.err(format!("unexpected end of file reading {what}")))?;
        tok.parse::<u32>().map_err(|_| {
            ingest_err(
                self.path,
                format!("byte {at}"),
                format!("invalid {what} `{tok}`"),
            )
        })
    }
}

fn parse_pgm(bytes: &[u8], path: &Path) -> Result<GridFunction> {
    let mut r = PgmReader {
        bytes,
        pos: 0,
        path,
    };
    let (_, magic) = r.token().ok_or_else(|| r.err("missing magic number"))?;
    let binary = match magic {
        "P2" => false,
        "P5" => true,
        other => {
            return Err(ingest_err(
                path,
                "byte 0".into(),
                format!("unsupported magic `{other}`, expected P2 or P5"),
            ))
        }
    };
    let cols = r.number("width")? as usize;
    let rows = r.number("height")? as usize;
    let maxval_at = r.pos;
    let maxval = r.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(ingest_err(
            path,
            format!("byte {maxval_at}"),
            format!("maxval must lie in 1..=65535, got {maxval}"),
        ));
    }
    if rows == 0 || cols == 0 {
        return Err(r.err("image has zero width or height"));
    }
    let n = rows * cols;
    let mut raw = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        r.pos += 1;
        let width = if maxval < 256 { 1 } else { 2 };
        let need = n * width;
        if bytes.len() < r.pos + need {
            return Err(r.err(format!(
                "raster truncated: need {need} bytes, have {}",
                bytes.len().saturating_sub(r.pos)
            )));
        }
        for i in 0..n {
            let at = r.pos + i * width;
            raw.push(if width == 1 {
                bytes[at] as u32
            } else {
                u16::from_be_bytes([bytes[at], bytes[at + 1]]) as u32
            });
        }
    } else {
        for _ in 0..n {
            raw.push(r.number("pixel value")?);
        }
    }
    if let Some((i, v)) = raw.iter().enumerate().find(|(_, &v)| v > maxval) {
        return Err(ingest_err(
            path,
            format!("pixel {i}"),
            format!("value {v} exceeds maxval {maxval}"),
        ));
    }
    let scale = maxval as f64;
    GridFunction::new(
        rows,
        cols,
        raw.into_iter().map(|v| v as f64 / scale).collect(),
    )
}

fn parse_csv_grid(bytes: &[u8], path: &Path) -> Result<GridFunction> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut values = Vec::new();
    let mut cols = 0;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let position = e
                .position()
                .map(|p| format!("line {}", p.line()))
                .unwrap_or_else(|| "unknown position".into());
            ingest_err(path, position, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if rows == 0 {
            cols = record.len();
        }
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| {
                ingest_err(
                    path,
                    format!("line {line}"),
                    format!("invalid number `{field}`"),
                )
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(ingest_err(
                    path,
                    format!("line {line}"),
                    format!("value {v} outside [0, 1]"),
                ));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(ingest_err(path, "line 1".into(), "empty grid"));
    }
    GridFunction::new(rows, cols, values)
}

/// Writes `image` as binary 8-bit PGM, rounding values in `[0, 1]` to
/// `0..=255`.
pub fn write_pgm(image: &GridFunction, path: &Path) -> Result<()> {
    let (rows, cols) = image.shape();
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(
        image
            .values()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    fs::write(path, out).map_err(|e| NimtError::io(path, e))
}

// ---------------------------------------------------------------------------
// Logs
// ---------------------------------------------------------------------------

pub const LOG_HEADER: [&str; 12] = [
    "t",
    "x",
    "y",
    "S_star",
    "S_rand",
    "gamma",
    "psi",
    "M",
    "Lbar",
    "descent_lhs",
    "descent_rhs",
    "bound_rhs",
];

/// 17 significant digits; parses back to the identical `f64`.
pub fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// The numeric content of one CSV log row.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub s_star: f64,
    pub s_rand: f64,
    pub gamma: f64,
    pub psi: f64,
    pub m: f64,
    pub lbar: f64,
    pub descent_lhs: f64,
    pub descent_rhs: f64,
    pub bound_rhs: f64,
}

impl From<&IterationRecord> for LogRow {
    fn from(r: &IterationRecord) -> Self {
        LogRow {
            t: r.t,
            x: r.selected.iter().map(|(x, _)| x.clone()).collect(),
            y: r.selected.iter().map(|(_, y)| *y).collect(),
            s_star: r.s_star,
            s_rand: r.s_rand,
            gamma: r.gamma,
            psi: r.psi,
            m: r.m,
            lbar: r.lbar,
            descent_lhs: r.descent_lhs,
            descent_rhs: r.descent_rhs,
            bound_rhs: r.bound_rhs,
        }
    }
}

impl LogRow {
    /// Bit-level equality, treating NaN as equal to NaN.
    pub fn same_bits(&self, other: &LogRow) -> bool {
        let reals = |r: &LogRow| {
            [
                r.s_star,
                r.s_rand,
                r.gamma,
                r.psi,
                r.m,
                r.lbar,
                r.descent_lhs,
                r.descent_rhs,
                r.bound_rhs,
            ]
        };
        let eq = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
        self.t == other.t
            && self.x == other.x
            && self.y.len() == other.y.len()
            && self.y.iter().zip(&other.y).all(|(a, b)| eq(*a, *b))
            && reals(self).iter().zip(reals(other)).all(|(a, b)| eq(*a, b))
    }
}

/// Examples separated by `|`, coordinates within one example by `;`.
fn join_points(points: &[Vec<f64>]) -> String {
    points
        .iter()
        .map(|p| p.iter().map(|v| fmt_real(*v)).collect::<Vec<_>>().join(";"))
        .collect::<Vec<_>>()
        .join("|")
}

fn csv_err(path: &Path, source: csv::Error) -> NimtError {
    NimtError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the per-iteration log, one row per iteration, ordered by `t`.
pub fn write_iteration_log(records: &[IterationRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(LOG_HEADER).map_err(|e| csv_err(path, e))?;
    let mut ordered: Vec<&IterationRecord> = records.iter().collect();
    ordered.sort_by_key(|r| r.t);
    for r in ordered {
        let xs: Vec<Vec<f64>> = r.selected.iter().map(|(x, _)| x.clone()).collect();
        let ys = r
            .selected
            .iter()
            .map(|(_, y)| fmt_real(*y))
            .collect::<Vec<_>>()
            .join("|");
        let row = [
            r.t.to_string(),
            join_points(&xs),
            ys,
            fmt_real(r.s_star),
            fmt_real(r.s_rand),
            fmt_real(r.gamma),
            fmt_real(r.psi),
            fmt_real(r.m),
            fmt_real(r.lbar),
            fmt_real(r.descent_lhs),
            fmt_real(r.descent_rhs),
            fmt_real(r.bound_rhs),
        ];
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| NimtError::io(path, e))
}

/// Parses a log written by [`write_iteration_log`].
pub fn read_iteration_log(path: &Path) -> Result<Vec<LogRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(LOG_HEADER.iter().copied()) {
        return Err(ingest_err(path, "line 1".into(), "unexpected log header"));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |what: &str| ingest_err(path, format!("line {line}"), format!("invalid {what}"));
        let real = |i: usize| -> Result<f64> { record[i].parse().map_err(|_| bad(LOG_HEADER[i])) };
        let reals = |s: &str, sep: char| -> Result<Vec<f64>> {
            s.split(sep)
                .map(|v| v.parse::<f64>().map_err(|_| bad("number")))
                .collect()
        };
        rows.push(LogRow {
            t: record[0].parse().map_err(|_| bad("t"))?,
            x: record[1]
                .split('|')
                .map(|p| reals(p, ';'))
                .collect::<Result<_>>()?,
            y: reals(&record[2], '|')?,
            s_star: real(3)?,
            s_rand: real(4)?,
            gamma: real(5)?,
            psi: real(6)?,
            m: real(7)?,
            lbar: real(8)?,
            descent_lhs: real(9)?,
            descent_rhs: real(10)?,
            bound_rhs: real(11)?,
        });
    }
    Ok(rows)
}

/// End-of-run status written next to the iteration log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub teacher: String,
    pub k: String,
    pub pack_size: usize,
    pub pool_size: usize,
    pub seed: u64,
    pub eta: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub converged: bool,
    pub iterations: usize,
    pub m0: f64,
    pub m_final: f64,
    pub lbar0: f64,
    pub descent_asserted: bool,
    pub theorem1_asserted: bool,
    pub bound_crossings: usize,
    pub alt_substitutions: usize,
}

impl RunSummary {
    pub fn new(config: &RunConfig, log: &SessionLog) -> Result<Self> {
        let crossings = bound_monitor(&log.records, log.lbar0, log.eta)
            .iter()
            .filter(|p| p.crossed)
            .count();
        Ok(RunSummary {
            scenario: config.scenario.to_string(),
            teacher: config.teacher.to_string(),
            k: config.k.to_string(),
            pack_size: log.pack_size,
            pool_size: log.pool_size,
            seed: config.seed,
            eta: config.eta,
            epsilon: config.epsilon,
            max_iters: config.max_iters,
            converged: log.converged,
            iterations: log.iterations,
            m0: log.m0,
            m_final: empirical_l2(&log.final_values, &log.target_values)?,
            lbar0: log.lbar0,
            descent_asserted: log.descent_asserted,
            theorem1_asserted: log.theorem1_asserted,
            bound_crossings: crossings,
            alt_substitutions: log.records.iter().filter(|r| r.substituted).count(),
        })
    }
}

/// Writes `log.csv`, `bounds.csv`, `final_model.csv` and `summary.json`
/// into `dir`.
pub fn write_run_outputs(dir: &Path, config: &RunConfig, log: &SessionLog) -> Result<RunSummary> {
    fs::create_dir_all(dir).map_err(|e| NimtError::io(dir, e))?;
    write_iteration_log(&log.records, &dir.join("log.csv"))?;

    let bounds_path = dir.join("bounds.csv");
    let mut w = csv::Writer::from_path(&bounds_path).map_err(|e| csv_err(&bounds_path, e))?;
    w.write_record(["t", "min_S", "bound_t", "bound_psi", "crossed"])
        .map_err(|e| csv_err(&bounds_path, e))?;
    for p in bound_monitor(&log.records, log.lbar0, log.eta) {
        w.write_record([
            p.t.to_string(),
            fmt_real(p.min_s),
            fmt_real(p.bound),
            p.bound_psi.map(fmt_real).unwrap_or_default(),
            p.crossed.to_string(),
        ])
        .map_err(|e| csv_err(&bounds_path, e))?;
    }
    w.flush().map_err(|e| NimtError::io(&bounds_path, e))?;

    let model_path = dir.join("final_model.csv");
    let mut w = csv::Writer::from_path(&model_path).map_err(|e| csv_err(&model_path, e))?;
    w.write_record(["index", "f_final", "f_target"])
        .map_err(|e| csv_err(&model_path, e))?;
    for (i, (f, t)) in log.final_values.iter().zip(&log.target_values).enumerate() {
        w.write_record([i.to_string(), fmt_real(*f), fmt_real(*t)])
            .map_err(|e| csv_err(&model_path, e))?;
    }
    w.flush().map_err(|e| NimtError::io(&model_path, e))?;

    let summary = RunSummary::new(config, log)?;
    let summary_path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serialises");
    fs::write(&summary_path, text + "\n").map_err(|e| NimtError::io(&summary_path, e))?;
    Ok(summary)
}

/// Writes the linear-kernel versus parametric comparison table.
pub fn write_linear_comparison(rows: &[LinearComparisonRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record([
        "t",
        "x",
        "y",
        "max_gap",
        "M_linear",
        "M_parametric",
        "M_rbf",
    ])
    .map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            fmt_real(r.x),
            fmt_real(r.y),
            fmt_real(r.max_gap),
            fmt_real(r.m_linear),
            fmt_real(r.m_parametric),
            fmt_real(r.m_rbf),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| NimtError::io(path, e))
}

//! Batch driver: run configuration, per-snapshot measures, and CSV and
//! plot-data output.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlations::{
    coherent_information, mutual_information, quantum_discord, single_excitation_ree,
    MeasurementOptions,
};
use crate::cut::{reduce_to_cut, BipartiteCut, Side};
use crate::dynamics::{evolve, time_grid, FmoState, GridKind, InitialState, Method, DIM};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::FmoModel;
use crate::ree::{full_ree, FullReeOptions, GradientMode};

/// Allowed `|discord − ree_single|` before a row is flagged.
pub const DISCORD_REE_TOL: f64 = 1e-6;
/// Slack in the per-row `discord ≤ MI` check.
pub const DISCORD_MI_TOL: f64 = 1e-7;

/// Serde adapter through `FromStr` and `Display`.
mod text {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

/// Initial state of a run: a named preset or a matrix file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitSpec {
    Site1,
    Site6,
    Mixture,
    /// TOML file with 9×9 tables `re` and optional `im`, basis `G, 1..7, S`.
    Custom(PathBuf),
}

impl InitSpec {
    pub fn state(&self) -> Result<FmoState> {
        match self {
            Self::Site1 => InitialState::Site1.state(),
            Self::Site6 => InitialState::Site6.state(),
            Self::Mixture => InitialState::Mixture.state(),
            Self::Custom(path) => load_state(path),
        }
    }
}

impl FromStr for InitSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "site1" => Ok(Self::Site1),
            "site6" => Ok(Self::Site6),
            "mixture" => Ok(Self::Mixture),
            "" => Err(Error::Parse("empty initial state".into())),
            path => Ok(Self::Custom(PathBuf::from(path))),
        }
    }
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Site1 => f.write_str("site1"),
            Self::Site6 => f.write_str("site6"),
            Self::Mixture => f.write_str("mixture"),
            Self::Custom(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    re: Vec<Vec<f64>>,
    im: Option<Vec<Vec<f64>>>,
}

/// Reads a nine-level density matrix from a TOML file.
pub fn load_state(path: &Path) -> Result<FmoState> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: StateFile = toml::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let square = |m: &Vec<Vec<f64>>| m.len() == DIM && m.iter().all(|r| r.len() == DIM);
    if !square(&file.re) || !file.im.as_ref().is_none_or(square) {
        return Err(Error::Parse(format!("state tables must be {DIM}x{DIM}")));
    }
    let m = CMatrix::from_fn(DIM, DIM, |i, j| {
        Complex64::new(file.re[i][j], file.im.as_ref().map_or(0.0, |im| im[i][j]))
    });
    FmoState::from_matrix(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measure {
    Mi,
    Discord,
    ReeSingle,
    ReeFull,
}

impl Measure {
    pub const ALL: [Measure; 4] = [Self::Mi, Self::Discord, Self::ReeSingle, Self::ReeFull];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mi => "mi",
            Self::Discord => "discord",
            Self::ReeSingle => "ree_single",
            Self::ReeFull => "ree_full",
        }
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown measure {s:?} (expected mi, discord, ree_single or ree_full)"
                ))
            })
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Measure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        text::serialize(self, s)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        text::deserialize(d)
    }
}

/// Full-REE search settings as they appear in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub starts: usize,
    pub max_iters: u64,
    pub grad_step: f64,
    pub tol: f64,
    pub floor_delta: f64,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(with = "text")]
    pub gradient: GradientMode,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let d = FullReeOptions::default();
        Self {
            starts: d.starts,
            max_iters: d.max_iters,
            grad_step: d.grad_step,
            tol: d.tol,
            floor_delta: d.floor_delta,
            k: d.k,
            gradient: d.gradient,
        }
    }
}

impl OptimizerConfig {
    pub fn options(&self, seed: u64) -> FullReeOptions {
        FullReeOptions {
            starts: self.starts,
            max_iters: self.max_iters,
            grad_step: self.grad_step,
            tol: self.tol,
            floor_delta: self.floor_delta,
            k: self.k,
            seed,
            gradient: self.gradient,
            ..FullReeOptions::default()
        }
    }
}

/// One run: every field has a matching `run` flag of the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Model file; the shipped default model when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    /// Kelvin; the model's own temperature when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temp: Option<f64>,
    #[serde(with = "text")]
    pub init: InitSpec,
    #[serde(with = "text")]
    pub cut: BipartiteCut,
    #[serde(with = "text")]
    pub measured_side: Side,
    /// Final time in ps.
    pub tmax: f64,
    pub points: usize,
    #[serde(with = "text")]
    pub grid: GridKind,
    #[serde(with = "text")]
    pub method: Method,
    pub measures: Vec<Measure>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub optimizer: OptimizerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: None,
            temp: None,
            init: InitSpec::Site1,
            cut: "A=3;B=1,6".parse().expect("valid cut"),
            measured_side: Side::A,
            tmax: 100.0,
            points: 200,
            grid: GridKind::Log,
            method: Method::rk4(),
            measures: vec![Measure::Mi, Measure::Discord, Measure::ReeSingle],
            seed: 0,
            out: None,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tmax.is_finite() && self.tmax > 0.0) {
            return Err(Error::validation(
                "positive-tmax",
                format!("tmax = {}", self.tmax),
            ));
        }
        if self.points < 2 {
            return Err(Error::validation(
                "grid-points",
                format!("{} points, need >= 2", self.points),
            ));
        }
        if self.measures.is_empty() {
            return Err(Error::validation("measures", "no measures requested"));
        }
        if let Some(t) = self.temp {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::validation(
                    "positive-temperature",
                    format!("temp = {t}"),
                ));
            }
        }
        if self.optimizer.starts == 0 {
            return Err(Error::validation(
                "optimizer-starts",
                "starts must be positive",
            ));
        }
        Ok(())
    }

    pub fn wants(&self, m: Measure) -> bool {
        self.measures.contains(&m)
    }

    pub fn load_model(&self) -> Result<FmoModel> {
        match &self.model {
            Some(p) => FmoModel::load(p),
            None => Ok(FmoModel::default_model()),
        }
    }

    /// Seed used for the optimizers at snapshot `i`.
    pub fn snapshot_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }
}

/// Measures at one time point; `None` for measures not requested.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceRow {
    pub t_ps: f64,
    pub mi: Option<f64>,
    pub coherent_info: Option<f64>,
    pub classical_corr: Option<f64>,
    pub discord: Option<f64>,
    pub ree_single: Option<f64>,
    pub ree_full: Option<f64>,
    pub doubly_excited_fraction: Option<f64>,
    /// Optimizer and consistency flags.
    pub flags: Vec<String>,
}

pub const COLUMNS: [&str; 9] = [
    "t_ps",
    "mi",
    "coherent_info",
    "classical_corr",
    "discord",
    "ree_single",
    "ree_full",
    "doubly_excited_fraction",
    "flags",
];

impl TraceRow {
    fn values(&self) -> [Option<f64>; 8] {
        [
            Some(self.t_ps),
            self.mi,
            self.coherent_info,
            self.classical_corr,
            self.discord,
            self.ree_single,
            self.ree_full,
            self.doubly_excited_fraction,
        ]
    }

    pub fn get(&self, m: Measure) -> Option<f64> {
        match m {
            Measure::Mi => self.mi,
            Measure::Discord => self.discord,
            Measure::ReeSingle => self.ree_single,
            Measure::ReeFull => self.ree_full,
        }
    }

    /// Violations of `0 ≤ discord ≤ MI` and `ree_single ≥ 0`.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if let Some(d) = self.discord {
            if d < -DISCORD_MI_TOL {
                v.push(format!("discord {d} < 0"));
            }
            if let Some(mi) = self.mi {
                if d > mi + DISCORD_MI_TOL {
                    v.push(format!("discord {d} > mi {mi}"));
                }
            }
        }
        if let Some(r) = self.ree_single {
            if r < -DISCORD_MI_TOL {
                v.push(format!("ree_single {r} < 0"));
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTrace {
    pub config: RunConfig,
    pub rows: Vec<TraceRow>,
}

impl CorrelationTrace {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t_ps).collect()
    }

    /// Values of one measure; `NaN` where it was not computed.
    pub fn series(&self, m: Measure) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.get(m).unwrap_or(f64::NAN))
            .collect()
    }

    /// `(t, value)` at the largest value of a measure.
    pub fn peak(&self, m: Measure) -> Option<(f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.get(m).map(|v| (r.t_ps, v)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

fn measure_row(config: &RunConfig, index: usize, t: f64, state: &FmoState) -> Result<TraceRow> {
    let chi = reduce_to_cut(state, &config.cut)?;
    let seed = config.snapshot_seed(index);
    let mut row = TraceRow {
        t_ps: t,
        ..TraceRow::default()
    };
    if config.wants(Measure::Mi) {
        row.mi = Some(mutual_information(&chi));
        row.coherent_info = Some(coherent_information(&chi));
    }
    if config.wants(Measure::Discord) {
        let opts = MeasurementOptions {
            seed,
            ..MeasurementOptions::default()
        };
        let d = quantum_discord(&chi, config.measured_side, &opts)?;
        row.classical_corr = Some(d.classical_corr);
        row.discord = Some(d.discord);
        if row.mi.is_none() {
            row.mi = Some(d.mutual_info);
            row.coherent_info = Some(d.coherent_info);
        }
        if d.flagged {
            row.flags.push("discord-spread".into());
        }
    }
    if config.wants(Measure::ReeSingle) {
        row.ree_single = Some(single_excitation_ree(&chi)?);
    }
    if config.wants(Measure::ReeFull) {
        let r = full_ree(&chi, &config.optimizer.options(seed))?;
        row.ree_full = Some(r.value);
        row.doubly_excited_fraction = r.doubly_excited_fraction;
        if r.flagged {
            row.flags.push("ree-full-spread".into());
        }
        if !r.optimizer_trace.converged {
            row.flags.push("ree-full-max-iters".into());
        }
    }
    if let (Some(d), Some(r)) = (row.discord, row.ree_single) {
        if (d - r).abs() > DISCORD_REE_TOL {
            row.flags.push("discord-ree-mismatch".into());
        }
    }
    if !row.invariant_violations().is_empty() {
        row.flags.push("invariant-violation".into());
    }
    Ok(row)
}

/// Evolves the configured initial state and evaluates the requested measures
/// at every grid point. Snapshots are processed in parallel; results are
/// independent of scheduling.
pub fn run(config: &RunConfig) -> Result<CorrelationTrace> {
    config.validate()?;
    let model = config.load_model()?;
    let rates = model.rates(config.temp)?;
    let rho0 = config.init.state()?;
    let grid = time_grid(config.grid, config.tmax, config.points)?;
    let traj = evolve(&rho0, &model.hamiltonian, &rates, &grid, config.method)?;
    let rows = traj
        .times
        .par_iter()
        .zip(traj.states.par_iter())
        .enumerate()
        .map(|(i, (&t, state))| {
            measure_row(config, i, t, state).map_err(|e| match e {
                e @ Error::AtTime { .. } => e,
                e => Error::AtTime {
                    t_ps: t,
                    source: Box::new(e),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationTrace {
        config: config.clone(),
        rows,
    })
}

/// Runs several configurations concurrently, preserving order.
pub fn run_all(configs: &[RunConfig]) -> Vec<Result<CorrelationTrace>> {
    configs.par_iter().map(run).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Plotdata,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Self::Csv),
            "plotdata" => Ok(Self::Plotdata),
            other => Err(Error::Parse(format!(
                "unknown format {other:?} (expected csv or plotdata)"
            ))),
        }
    }
}

fn fmt_value(v: Option<f64>) -> String {
    // `+ 0.0` folds negative zero.
    v.map_or_else(String::new, |x| format!("{:.11e}", x + 0.0))
}

fn header_comment(trace: &CorrelationTrace) -> String {
    let mut s = format!(
        "# seed = {} (snapshot i uses seed + i)\n",
        trace.config.seed
    );
    for line in trace.config.to_toml().lines() {
        s.push_str("# ");
        s.push_str(line);
        s.push('\n');
    }
    s
}

/// CSV text: a commented config block, one header row, one row per time.
pub fn to_csv(trace: &CorrelationTrace) -> Result<String> {
    let mut buf = header_comment(trace).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let csv_err = |e: csv::Error| Error::Parse(format!("csv: {e}"));
        w.write_record(COLUMNS).map_err(csv_err)?;
        for row in &trace.rows {
            let mut rec: Vec<String> = row.values().into_iter().map(fmt_value).collect();
            rec.push(row.flags.join("|"));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Parse(format!("csv: {e}")))?;
    }
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Parses text produced by [`to_csv`].
pub fn parse_csv(text: &str) -> Result<CorrelationTrace> {
    let config_text: String = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .skip(1)
        .map(|l| format!("{}\n", l.strip_prefix("# ").unwrap_or(&l[1..])))
        .collect();
    let config = RunConfig::parse(&config_text)?;
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| Error::Parse(format!("csv: {e}"));
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(COLUMNS) {
        return Err(Error::Parse(format!("unexpected csv header {header:?}")));
    }
    let num = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
        }
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let t_ps = num(&rec[0])?.ok_or_else(|| Error::Parse("missing t_ps".into()))?;
        rows.push(TraceRow {
            t_ps,
            mi: num(&rec[1])?,
            coherent_info: num(&rec[2])?,
            classical_corr: num(&rec[3])?,
            discord: num(&rec[4])?,
            ree_single: num(&rec[5])?,
            ree_full: num(&rec[6])?,
            doubly_excited_fraction: num(&rec[7])?,
            flags: rec[8]
                .split('|')
                .filter(|f| !f.is_empty())
                .map(String::from)
                .collect(),
        });
    }
    Ok(CorrelationTrace { config, rows })
}

/// Series file path for one measure: `<stem>.<measure>.dat` next to `out`.
pub fn plotdata_path(out: &Path, m: Measure) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or_else(|| "trace".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.{m}.dat"))
}

/// Writes the trace and returns the files created. CSV goes to `out`;
/// plot data writes one `t value` series per requested measure.
pub fn emit(trace: &CorrelationTrace, format: OutputFormat, out: &Path) -> Result<Vec<PathBuf>> {
    if trace.rows.is_empty() {
        return Err(Error::validation("non-empty-trace", "trace has no rows"));
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let write = |path: &Path, body: &str| -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
    };
    match format {
        OutputFormat::Csv => {
            write(out, &to_csv(trace)?)?;
            Ok(vec![out.to_path_buf()])
        }
        OutputFormat::Plotdata => {
            let mut measures = trace.config.measures.clone();
            measures.sort();
            measures.dedup();
            let mut files = Vec::new();
            for m in measures {
                let path = plotdata_path(out, m);
                let mut body = format!("# t_ps {m}\n");
                for row in &trace.rows {
                    if let Some(v) = row.get(m) {
                        body.push_str(&format!("{:.11e} {v:.11e}\n", row.t_ps));
                    }
                }
                write(&path, &body)?;
                files.push(path);
            }
            Ok(files)
        }
    }
}

/// File stem identifying a grid configuration.
pub fn config_slug(c: &RunConfig) -> String {
    let cut = c.cut.to_string().replace(';', "_").replace(['=', ','], "");
    let temp = c.temp.map_or_else(|| "default".into(), |t| format!("{t}K"));
    format!("{temp}_{}_{cut}", c.init)
}

/// The standard simulation grid: three cuts at 77 K and 300 K for each
/// preset initial state, followed by the full-REE configuration.
pub fn standard_grid() -> Vec<RunConfig> {
    let cuts = ["A=3;B=1,6", "A=3;B=1,2", "A=3;B=1,2,4,5,6,7"];
    let mut out = Vec::with_capacity(19);
    for cut in cuts {
        for temp in [77.0, 300.0] {
            for init in [InitSpec::Site1, InitSpec::Site6, InitSpec::Mixture] {
                out.push(RunConfig {
                    temp: Some(temp),
                    init,
                    cut: cut.parse().expect("valid cut"),
                    ..RunConfig::default()
                });
            }
        }
    }
    out.push(RunConfig {
        temp: Some(77.0),
        cut: "A=1,6;B=3".parse().expect("valid cut"),
        measured_side: Side::B,
        measures: vec![
            Measure::Mi,
            Measure::Discord,
            Measure::ReeSingle,
            Measure::ReeFull,
        ],
        ..RunConfig::default()
    });
    out
}

//! Parameter sweeps with resumable CSV output, and post-processing of the
//! resulting witness curves.

use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::eigensolver::{
    golden_section_max, lowest_states, sector_ground_states, superpose, symmetric_ground_state, GroundState,
    GroundStateInfo, GroundStateKind, SolverConfig,
};
use crate::error::{Error, Result};
use crate::oracle::{classicality_distance, OracleConfig, ORACLE_DIM_CAP};
use crate::spin_models::{
    ashkin_teller_parities, build_ashkin_teller, build_xy, x_magnetization, xy_parity, ATParams, XYParams,
};
use crate::states::DensityMatrix;
use crate::witness::{witness_norm, xstate_witness_norm, CorrelatorSet, XStateParams};
use crate::xy_fermion::{solve_ring, symmetric_correlators, DEFAULT_N_MODES};

pub const CSV_COLUMNS: &str = "param,witness_norm,oracle_distance,G_z,G_xx,G_yy,G_zz,energy,sector_gap,residual";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    XySymmetric,
    XyBroken,
    AshkinTeller,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::XySymmetric => "xy_symmetric",
            ModelKind::XyBroken => "xy_broken",
            ModelKind::AshkinTeller => "ashkin_teller",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "xy_symmetric" => Ok(ModelKind::XySymmetric),
            "xy_broken" => Ok(ModelKind::XyBroken),
            "ashkin_teller" => Ok(ModelKind::AshkinTeller),
            _ => Err(Error::Spec(format!("unknown model '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweptParam {
    Lambda,
    Gamma,
    Beta,
    Delta,
}

impl SweptParam {
    pub fn name(self) -> &'static str {
        match self {
            SweptParam::Lambda => "lambda",
            SweptParam::Gamma => "gamma",
            SweptParam::Beta => "beta",
            SweptParam::Delta => "delta",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lambda" => Ok(SweptParam::Lambda),
            "gamma" => Ok(SweptParam::Gamma),
            "beta" => Ok(SweptParam::Beta),
            "delta" => Ok(SweptParam::Delta),
            _ => Err(Error::Spec(format!("unknown swept parameter '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Block {
    Pair,
    Quartet,
    Octet,
    Custom(Vec<usize>),
}

impl Block {
    /// Leftmost spins of the chain.
    pub fn sites(&self) -> Vec<usize> {
        match self {
            Block::Pair => vec![0, 1],
            Block::Quartet => (0..4).collect(),
            Block::Octet => (0..8).collect(),
            Block::Custom(s) => s.clone(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Block::Pair => "pair".into(),
            Block::Quartet => "quartet".into(),
            Block::Octet => "octet".into(),
            Block::Custom(s) => s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(":"),
        }
    }

    /// `pair`, `quartet`, `octet` or a list of spin indices separated by
    /// `:` or `,`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pair" => Ok(Block::Pair),
            "quartet" => Ok(Block::Quartet),
            "octet" => Ok(Block::Octet),
            _ => s
                .split([':', ','])
                .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Spec(format!("bad block '{s}'"))))
                .collect::<Result<Vec<_>>>()
                .map(Block::Custom),
        }
    }
}

pub fn kind_name(k: GroundStateKind) -> &'static str {
    match k {
        GroundStateKind::SymmetricThermal => "symmetric_thermal",
        GroundStateKind::BrokenPlus => "broken_plus",
        GroundStateKind::BrokenMinus => "broken_minus",
        GroundStateKind::RawLowest => "raw_lowest",
    }
}

pub fn parse_kind(s: &str) -> Result<GroundStateKind> {
    match s {
        "symmetric_thermal" | "symmetric" | "thermal" => Ok(GroundStateKind::SymmetricThermal),
        "broken_plus" => Ok(GroundStateKind::BrokenPlus),
        "broken_minus" => Ok(GroundStateKind::BrokenMinus),
        "raw_lowest" => Ok(GroundStateKind::RawLowest),
        _ => Err(Error::Spec(format!("unknown ground state kind '{s}'"))),
    }
}

/// Everything that determines a sweep. Range fields left as `None` take
/// model-dependent defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub model: ModelKind,
    pub param: Option<SweptParam>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub steps: Option<usize>,
    pub gamma: f64,
    pub lambda: f64,
    pub beta: f64,
    pub delta: f64,
    /// Chain length in spins; `0` selects the free-fermion ring for
    /// `xy_symmetric`.
    pub n_spins: Option<usize>,
    pub block: Block,
    pub ground_state: Option<GroundStateKind>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub workers: usize,
    pub oracle: bool,
    pub n_modes: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            model: ModelKind::XySymmetric,
            param: None,
            start: None,
            stop: None,
            steps: None,
            gamma: 0.6,
            lambda: 1.0,
            beta: 1.0,
            delta: 1.0,
            n_spins: None,
            block: Block::Pair,
            ground_state: None,
            out: None,
            seed: 0,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            oracle: false,
            n_modes: DEFAULT_N_MODES,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Spec(format!("bad value for {key}: '{v}'")))
}

impl SweepSpec {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "model" => self.model = ModelKind::parse(v)?,
            "param" | "sweep" => self.param = Some(SweptParam::parse(v)?),
            "start" => self.start = Some(parse_num(key, v)?),
            "stop" => self.stop = Some(parse_num(key, v)?),
            "steps" => self.steps = Some(parse_num(key, v)?),
            "gamma" => self.gamma = parse_num(key, v)?,
            "lambda" => self.lambda = parse_num(key, v)?,
            "beta" => self.beta = parse_num(key, v)?,
            "delta" => self.delta = parse_num(key, v)?,
            "n_spins" => self.n_spins = Some(parse_num(key, v)?),
            "block" => self.block = Block::parse(v)?,
            "ground_state" => self.ground_state = Some(parse_kind(v)?),
            "out" => self.out = Some(PathBuf::from(v)),
            "seed" => self.seed = parse_num(key, v)?,
            "workers" => self.workers = parse_num(key, v)?,
            "oracle" => self.oracle = parse_num(key, v)?,
            "n_modes" => self.n_modes = parse_num(key, v)?,
            k => {
                // `lambda_start`, `beta_stop`, ...: pick the swept parameter too.
                let (p, which) = k.rsplit_once('_').ok_or_else(|| Error::Spec(format!("unknown key '{key}'")))?;
                if which != "start" && which != "stop" {
                    return Err(Error::Spec(format!("unknown key '{key}'")));
                }
                let p = SweptParam::parse(p).map_err(|_| Error::Spec(format!("unknown key '{key}'")))?;
                if self.param.is_some_and(|q| q != p) {
                    return Err(Error::Spec(format!("'{key}' conflicts with swept parameter")));
                }
                self.param = Some(p);
                return self.set(which, v);
            }
        }
        Ok(())
    }

    /// Flat `key = value` lines; `#` starts a comment.
    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Spec(format!("line {}: expected key=value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn swept(&self) -> SweptParam {
        self.param.unwrap_or(match self.model {
            ModelKind::AshkinTeller => SweptParam::Beta,
            _ => SweptParam::Lambda,
        })
    }

    /// `(start, stop, steps)` after defaults.
    pub fn range(&self) -> (f64, f64, usize) {
        let (a, b, n) = match self.swept() {
            SweptParam::Lambda => (0.0, 3.0, 301),
            SweptParam::Beta => (0.3, 1.7, 141),
            SweptParam::Gamma => (0.0, 1.0, 101),
            SweptParam::Delta => (0.0, 4.0, 41),
        };
        (self.start.unwrap_or(a), self.stop.unwrap_or(b), self.steps.unwrap_or(n))
    }

    pub fn spins(&self) -> usize {
        self.n_spins.unwrap_or(match self.model {
            ModelKind::XySymmetric => 0,
            ModelKind::XyBroken => 12,
            ModelKind::AshkinTeller => 16,
        })
    }

    pub fn kind(&self) -> GroundStateKind {
        self.ground_state.unwrap_or(match self.model {
            ModelKind::XyBroken => GroundStateKind::BrokenPlus,
            _ => GroundStateKind::SymmetricThermal,
        })
    }

    pub fn uses_free_fermions(&self) -> bool {
        self.model == ModelKind::XySymmetric && self.spins() == 0
    }

    pub fn grid(&self) -> Vec<f64> {
        let (a, b, n) = self.range();
        let last = (n - 1) as f64;
        (0..n).map(|i| a + (b - a) * i as f64 / last).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b, n) = self.range();
        if n < 2 {
            return Err(Error::Spec("steps must be at least 2".into()));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Spec("range must be finite".into()));
        }
        let p = self.swept();
        let xy = self.model != ModelKind::AshkinTeller;
        if xy != matches!(p, SweptParam::Lambda | SweptParam::Gamma) {
            return Err(Error::Spec(format!("cannot sweep {} for {}", p.name(), self.model.name())));
        }
        if self.workers == 0 {
            return Err(Error::Spec("workers must be positive".into()));
        }
        let n_spins = self.spins();
        let kind = self.kind();
        let sites = self.block.sites();
        if matches!(self.block, Block::Quartet | Block::Octet) && xy {
            return Err(Error::Spec("quartet and octet blocks are for ashkin_teller".into()));
        }
        if sites.len() < 2 {
            return Err(Error::Spec("block needs at least two spins".into()));
        }
        let mut sorted = sites.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != sites.len() {
            return Err(Error::Spec("block indices repeat".into()));
        }
        if self.uses_free_fermions() {
            if self.block != Block::Pair || kind != GroundStateKind::SymmetricThermal {
                return Err(Error::Spec("free-fermion path gives the symmetric nearest-neighbour pair only".into()));
            }
            if self.n_modes < 2 || self.n_modes % 2 != 0 {
                return Err(Error::Spec("n_modes must be even".into()));
            }
            return Ok(());
        }
        if n_spins < 2 {
            return Err(Error::Spec("n_spins must be at least 2".into()));
        }
        if sites.iter().any(|&s| s >= n_spins) {
            return Err(Error::Spec(format!("block {} outside a chain of {n_spins} spins", self.block.name())));
        }
        match self.model {
            ModelKind::XySymmetric if matches!(kind, GroundStateKind::BrokenPlus | GroundStateKind::BrokenMinus) => {
                Err(Error::Spec("use model xy_broken for broken states".into()))
            }
            ModelKind::XyBroken if !matches!(kind, GroundStateKind::BrokenPlus | GroundStateKind::BrokenMinus) => {
                Err(Error::Spec("xy_broken needs broken_plus or broken_minus".into()))
            }
            ModelKind::AshkinTeller if matches!(kind, GroundStateKind::BrokenPlus | GroundStateKind::BrokenMinus) => {
                Err(Error::Spec("broken states are only built for the XY chain".into()))
            }
            ModelKind::AshkinTeller if n_spins % 2 != 0 => {
                Err(Error::Spec("ashkin_teller needs an even spin count (two per site)".into()))
            }
            _ => Ok(()),
        }
    }

    /// Fields that determine the rows, in a fixed order.
    pub fn canonical(&self) -> String {
        let (a, b, n) = self.range();
        format!(
            "model={} param={} start={a} stop={b} steps={n} gamma={} lambda={} beta={} delta={} n_spins={} block={} ground_state={} oracle={} n_modes={}",
            self.model.name(),
            self.swept().name(),
            self.gamma,
            self.lambda,
            self.beta,
            self.delta,
            self.spins(),
            self.block.name(),
            kind_name(self.kind()),
            self.oracle,
            self.n_modes,
        )
    }

    pub fn header(&self) -> String {
        format!("# spec={} seed={}", self.canonical(), self.seed)
    }

    /// `(gamma, lambda, beta, delta)` at swept value `x`.
    fn point(&self, x: f64) -> (f64, f64, f64, f64) {
        let (mut g, mut l, mut b, mut d) = (self.gamma, self.lambda, self.beta, self.delta);
        match self.swept() {
            SweptParam::Gamma => g = x,
            SweptParam::Lambda => l = x,
            SweptParam::Beta => b = x,
            SweptParam::Delta => d = x,
        }
        (g, l, b, d)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub witness: Option<f64>,
    pub oracle_distance: Option<f64>,
    pub correlators: Option<CorrelatorSet>,
    /// Ground energy per spin.
    pub energy: Option<f64>,
    pub sector_gap: Option<f64>,
    pub residual: Option<f64>,
    /// Set when the point failed; all other fields are then empty.
    pub error: Option<String>,
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

impl SweepRow {
    pub fn failed(param: f64, e: &Error) -> Self {
        Self { param, error: Some(e.to_string()), ..Default::default() }
    }

    pub fn to_csv(&self) -> String {
        let c = self.correlators;
        [
            fmt_float(self.param),
            fmt_opt(self.witness),
            fmt_opt(self.oracle_distance),
            fmt_opt(c.map(|c| c.g_z)),
            fmt_opt(c.map(|c| c.g_xx)),
            fmt_opt(c.map(|c| c.g_yy)),
            fmt_opt(c.map(|c| c.g_zz)),
            fmt_opt(self.energy),
            fmt_opt(self.sector_gap),
            fmt_opt(self.residual),
        ]
        .join(",")
    }

    pub fn parse(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 10 {
            return Err(Error::Parse(format!("expected 10 fields, got {}: '{line}'", f.len())));
        }
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| Error::Parse(format!("bad number '{s}'")))
            }
        };
        let param = opt(f[0])?.ok_or_else(|| Error::Parse("missing param".into()))?;
        let corr = [opt(f[3])?, opt(f[4])?, opt(f[5])?, opt(f[6])?];
        let correlators = match corr {
            [Some(g_z), Some(g_xx), Some(g_yy), Some(g_zz)] => {
                Some(CorrelatorSet { g_z, g_xx, g_yy, g_zz, ..Default::default() })
            }
            _ => None,
        };
        let witness = opt(f[1])?;
        Ok(Self {
            param,
            witness,
            oracle_distance: opt(f[2])?,
            correlators,
            energy: opt(f[7])?,
            sector_gap: opt(f[8])?,
            residual: opt(f[9])?,
            error: witness.is_none().then(|| "failed".to_string()),
        })
    }
}

fn point_seed(spec: &SweepSpec, index: usize) -> u64 {
    spec.seed.wrapping_add((index as u64) << 8)
}

fn oracle_value(spec: &SweepSpec, rho: &DensityMatrix) -> Result<Option<f64>> {
    if !spec.oracle || rho.dim() > ORACLE_DIM_CAP {
        return Ok(None);
    }
    let cfg = OracleConfig { seed: spec.seed, ..Default::default() };
    Ok(Some(classicality_distance(rho, &cfg)?.value))
}

/// Ground state of the spec's model at swept value `x`.
pub fn ground_state_at(spec: &SweepSpec, x: f64, seed: u64) -> Result<GroundStateInfo> {
    let (gamma, lambda, beta, delta) = spec.point(x);
    let n = spec.spins();
    let cfg = SolverConfig::default();
    let (h, parities, order) = match spec.model {
        ModelKind::AshkinTeller => {
            let (p1, p2) = ashkin_teller_parities(n / 2)?;
            (build_ashkin_teller(&ATParams::new(n / 2, beta, delta)?)?, vec![p1, p2], None)
        }
        _ => (build_xy(&XYParams::new(n, gamma, lambda)?)?, vec![xy_parity(n)?], Some(x_magnetization(n)?)),
    };
    match spec.kind() {
        GroundStateKind::SymmetricThermal => symmetric_ground_state(&h, &parities, seed, &cfg),
        GroundStateKind::RawLowest => {
            let r = lowest_states(&h, 1, seed, &cfg)?;
            Ok(GroundStateInfo {
                state: GroundState::pure(n, r.vectors[0].clone()),
                energy: r.energies[0],
                sector_gap: f64::NAN,
                residual: r.residuals[0],
                sectors: vec![],
            })
        }
        kind @ (GroundStateKind::BrokenPlus | GroundStateKind::BrokenMinus) => {
            let order = order.ok_or_else(|| Error::Spec("no order parameter for this model".into()))?;
            let sectors = sector_ground_states(&h, &parities, seed, &cfg)?;
            if sectors.len() < 2 {
                return Err(Error::EmptySector);
            }
            let (g0, g1) = (&sectors[0].1, &sectors[1].1);
            let sign = if kind == GroundStateKind::BrokenPlus { 1 } else { -1 };
            let (state, _) = superpose(n, g0, g1, &order, sign)?;
            Ok(GroundStateInfo {
                state,
                energy: g0.energy,
                sector_gap: g1.energy - g0.energy,
                residual: g0.residual.max(g1.residual),
                sectors: sectors.iter().map(|(s, r)| (s.clone(), r.energy)).collect(),
            })
        }
    }
}

/// One sweep row at swept value `x`.
pub fn evaluate_point(spec: &SweepSpec, index: usize, x: f64) -> Result<SweepRow> {
    if spec.uses_free_fermions() {
        let (gamma, lambda, _, _) = spec.point(x);
        let ring = solve_ring(lambda, gamma, spec.n_modes)?;
        let c = symmetric_correlators(&ring);
        let oracle_distance = if spec.oracle {
            oracle_value(spec, &XStateParams::from_correlators(&c)?.density_matrix())?
        } else {
            None
        };
        return Ok(SweepRow {
            param: x,
            witness: Some(xstate_witness_norm(&c)),
            oracle_distance,
            correlators: Some(c),
            energy: Some(ring.energy_density()),
            sector_gap: None,
            residual: None,
            error: None,
        });
    }
    let info = ground_state_at(spec, x, point_seed(spec, index))?;
    let n = spec.spins();
    let rho = info.state.reduced(&spec.block.sites())?;
    let pair = if spec.model == ModelKind::AshkinTeller {
        (ATParams::sigma(0), ATParams::sigma(1))
    } else {
        (0, 1)
    };
    Ok(SweepRow {
        param: x,
        witness: Some(witness_norm(&rho)?),
        oracle_distance: oracle_value(spec, &rho)?,
        correlators: Some(info.state.pair_correlators(pair.0, pair.1)?),
        energy: Some(info.energy / n as f64),
        sector_gap: info.sector_gap.is_finite().then_some(info.sector_gap),
        residual: Some(info.residual),
        error: None,
    })
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Rows taken from an existing output file.
    pub resumed: usize,
    /// Points whose evaluation failed.
    pub failures: Vec<(f64, String)>,
}

impl SweepOutcome {
    pub fn xs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.param).collect()
    }

    /// Witness values; failed rows give NaN.
    pub fn witnesses(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.witness.unwrap_or(f64::NAN)).collect()
    }
}

/// Completed rows of an existing output file, after checking it belongs to
/// `spec`. A trailing partial line is cut off.
fn resume_rows(path: &Path, spec: &SweepSpec, grid: &[f64]) -> Result<Vec<SweepRow>> {
    let text = std::fs::read_to_string(path)?;
    if text.is_empty() {
        return Ok(vec![]);
    }
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut lines = complete.lines();
    if lines.next() != Some(spec.header().as_str()) || lines.next() != Some(CSV_COLUMNS) {
        return Err(Error::Spec(format!("{} was written for a different spec", path.display())));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = SweepRow::parse(line)?;
        if i >= grid.len() || fmt_float(grid[i]) != fmt_float(row.param) {
            return Err(Error::Spec(format!("{}: row {} is off the grid", path.display(), i + 1)));
        }
        rows.push(row);
    }
    if complete.len() != text.len() {
        let f = OpenOptions::new().write(true).open(path)?;
        f.set_len(complete.len() as u64)?;
    }
    Ok(rows)
}

/// Evaluate every grid point. Rows are written in grid order as they
/// complete; an existing output for the same spec is resumed.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutcome> {
    spec.validate()?;
    let grid = spec.grid();
    let mut rows = Vec::new();
    let mut writer = None;
    if let Some(path) = &spec.out {
        let existing = path.exists() && std::fs::metadata(path)?.len() > 0;
        if existing {
            rows = resume_rows(path, spec, &grid)?;
        }
        let mut w = BufWriter::new(OpenOptions::new().create(true).append(true).open(path)?);
        if !existing || std::fs::metadata(path)?.len() == 0 {
            writeln!(w, "{}", spec.header())?;
            writeln!(w, "{CSV_COLUMNS}")?;
            w.flush()?;
        }
        writer = Some(w);
    }
    let resumed = rows.len();
    let mut failures: Vec<(f64, String)> =
        rows.iter().filter_map(|r: &SweepRow| r.error.clone().map(|e| (r.param, e))).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Spec(format!("thread pool: {e}")))?;
    let todo: Vec<(usize, f64)> = grid.iter().copied().enumerate().skip(resumed).collect();
    for chunk in todo.chunks(spec.workers * 4) {
        let batch: Vec<SweepRow> = pool.install(|| {
            chunk
                .par_iter()
                .map(|&(i, x)| evaluate_point(spec, i, x).unwrap_or_else(|e| SweepRow::failed(x, &e)))
                .collect()
        });
        for row in batch {
            if let Some(e) = &row.error {
                failures.push((row.param, e.clone()));
            }
            if let Some(w) = writer.as_mut() {
                writeln!(w, "{}", row.to_csv())?;
            }
            rows.push(row);
        }
        if let Some(w) = writer.as_mut() {
            w.flush()?;
        }
    }
    Ok(SweepOutcome { rows, resumed, failures })
}

/// Header line (if any) and rows of a sweep CSV.
pub fn read_csv(path: &Path) -> Result<(Option<String>, Vec<SweepRow>)> {
    let text = std::fs::read_to_string(path)?;
    let mut header = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        let t = line.trim();
        if t.is_empty() || t == CSV_COLUMNS {
            continue;
        }
        if t.starts_with('#') {
            header.get_or_insert_with(|| t.to_string());
            continue;
        }
        rows.push(SweepRow::parse(t)?);
    }
    Ok((header, rows))
}

pub fn write_csv(path: &Path, header: Option<&str>, rows: &[SweepRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if let Some(h) = header {
        writeln!(w, "{h}")?;
    }
    writeln!(w, "{CSV_COLUMNS}")?;
    for r in rows {
        writeln!(w, "{}", r.to_csv())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stencil {
    Central2,
    Central4,
}

impl Stencil {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "central-2" | "central2" | "2" => Ok(Stencil::Central2),
            "central-4" | "central4" | "4" => Ok(Stencil::Central4),
            _ => Err(Error::Spec(format!("unknown stencil '{s}'"))),
        }
    }
}

fn grid_step(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::InvalidParameter("need at least two points".into()));
    }
    let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    if h == 0.0 || !h.is_finite() {
        return Err(Error::NonUniformGrid(1));
    }
    for i in 1..xs.len() {
        if ((xs[i] - xs[i - 1]) - h).abs() > 1e-9 * h.abs() {
            return Err(Error::NonUniformGrid(i));
        }
    }
    Ok(h)
}

/// First derivative on a uniform grid. Endpoints use one-sided stencils of
/// matching order.
pub fn derivative_scan(xs: &[f64], ys: &[f64], stencil: Stencil) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!("{} abscissae, {} values", xs.len(), ys.len())));
    }
    let h = grid_step(xs)?;
    let n = ys.len();
    if n == 2 {
        let d = (ys[1] - ys[0]) / h;
        return Ok(vec![d, d]);
    }
    let c2 = |i: usize| (ys[i + 1] - ys[i - 1]) / (2.0 * h);
    let mut d = vec![0.0; n];
    if stencil == Stencil::Central4 && n >= 5 {
        d[0] = (-25.0 * ys[0] + 48.0 * ys[1] - 36.0 * ys[2] + 16.0 * ys[3] - 3.0 * ys[4]) / (12.0 * h);
        d[n - 1] = (25.0 * ys[n - 1] - 48.0 * ys[n - 2] + 36.0 * ys[n - 3] - 16.0 * ys[n - 4] + 3.0 * ys[n - 5])
            / (12.0 * h);
        d[1] = (-3.0 * ys[0] - 10.0 * ys[1] + 18.0 * ys[2] - 6.0 * ys[3] + ys[4]) / (12.0 * h);
        d[n - 2] = (3.0 * ys[n - 1] + 10.0 * ys[n - 2] - 18.0 * ys[n - 3] + 6.0 * ys[n - 4] - ys[n - 5]) / (12.0 * h);
        for i in 2..n - 2 {
            d[i] = (ys[i - 2] - 8.0 * ys[i - 1] + 8.0 * ys[i + 1] - ys[i + 2]) / (12.0 * h);
        }
    } else {
        d[0] = (-3.0 * ys[0] + 4.0 * ys[1] - ys[2]) / (2.0 * h);
        d[n - 1] = (3.0 * ys[n - 1] - 4.0 * ys[n - 2] + ys[n - 3]) / (2.0 * h);
        for (i, di) in d.iter_mut().enumerate().take(n - 1).skip(1) {
            *di = c2(i);
        }
    }
    Ok(d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalCandidate {
    pub index: usize,
    pub param: f64,
    pub witness: f64,
    /// Oracle distance, when available.
    pub distance: Option<f64>,
}

/// Local minima of the witness at or below `threshold`. A flat run of equal
/// values counts once, at its first point.
pub fn find_classical_points(xs: &[f64], ws: &[f64], threshold: f64) -> Vec<ClassicalCandidate> {
    let n = ws.len().min(xs.len());
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && ws[j + 1] == ws[i] {
            j += 1;
        }
        let left_ok = i == 0 || ws[i - 1] > ws[i];
        let right_ok = j + 1 >= n || ws[j + 1] > ws[i];
        if left_ok && right_ok && ws[i] <= threshold && ws[i].is_finite() {
            out.push(ClassicalCandidate { index: i, param: xs[i], witness: ws[i], distance: None });
        }
        i = j + 1;
    }
    out
}

/// Attach oracle distances to candidates whose block fits the oracle.
pub fn certify_candidates(spec: &SweepSpec, candidates: &mut [ClassicalCandidate]) -> Result<()> {
    let sites = spec.block.sites();
    if sites.len() > 8 {
        return Ok(());
    }
    let cfg = OracleConfig { seed: spec.seed, ..Default::default() };
    for c in candidates.iter_mut() {
        let rho = if spec.uses_free_fermions() {
            let (gamma, lambda, _, _) = spec.point(c.param);
            XStateParams::from_correlators(&symmetric_correlators(&solve_ring(lambda, gamma, spec.n_modes)?))?
                .density_matrix()
        } else {
            ground_state_at(spec, c.param, point_seed(spec, c.index))?.state.reduced(&sites)?
        };
        c.distance = Some(classicality_distance(&rho, &cfg)?.value);
    }
    Ok(())
}

/// Golden-section minimisation of the witness over `[center - half, center + half]`.
/// Returns `(param, witness)`.
pub fn refine_minimum(spec: &SweepSpec, center: f64, half: f64, iters: usize) -> Result<(f64, f64)> {
    let w = |x: f64| -> Result<f64> {
        evaluate_point(spec, 0, x)?.witness.ok_or_else(|| Error::InvalidState("no witness".into()))
    };
    let failure = std::cell::RefCell::new(None);
    let x = golden_section_max(
        |x| match w(x) {
            Ok(v) => -v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        center - half,
        center + half,
        iters,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok((x, w(x)?))
}

/// Plain-text table of `(x, y)` pairs.
pub fn format_series(xs: &[f64], ys: &[f64], header: &str) -> String {
    let mut s = format!("{header}\n");
    for (x, y) in xs.iter().zip(ys) {
        let _ = writeln!(s, "{},{}", fmt_float(*x), fmt_float(*y));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_and_flags() {
        let mut s = SweepSpec::default();
        s.apply_config("# comment\nmodel = ashkin_teller\nbeta_start=0.3 # inline\nbeta_stop=1.0\nsteps=8\nblock=quartet\n")
            .unwrap();
        assert_eq!(s.model, ModelKind::AshkinTeller);
        assert_eq!(s.swept(), SweptParam::Beta);
        assert_eq!(s.range(), (0.3, 1.0, 8));
        assert_eq!(s.spins(), 16);
        s.validate().unwrap();
        assert!(s.apply_config("bogus=1").is_err());
        assert!(s.apply_config("no equals sign").is_err());
        assert!(s.set("lambda_start", "0").is_err());
    }

    #[test]
    fn spec_validation() {
        let ok = SweepSpec::default();
        ok.validate().unwrap();
        let bad = [
            SweepSpec { steps: Some(1), ..Default::default() },
            SweepSpec { block: Block::Quartet, n_spins: Some(8), ..Default::default() },
            SweepSpec { block: Block::Custom(vec![0, 12]), n_spins: Some(12), ..Default::default() },
            SweepSpec { model: ModelKind::XyBroken, ground_state: Some(GroundStateKind::SymmetricThermal), ..Default::default() },
            SweepSpec { model: ModelKind::AshkinTeller, param: Some(SweptParam::Lambda), ..Default::default() },
            SweepSpec { model: ModelKind::AshkinTeller, n_spins: Some(7), ..Default::default() },
            SweepSpec { block: Block::Custom(vec![1, 1]), n_spins: Some(4), ..Default::default() },
        ];
        for s in bad {
            assert!(matches!(s.validate(), Err(Error::Spec(_))), "{s:?}");
        }
    }

    #[test]
    fn default_grids_hit_reference_points() {
        let g = SweepSpec::default().grid();
        assert_eq!(g.len(), 301);
        assert_eq!(g[125], 1.25);
        assert_eq!(g[100], 1.0);
        let at = SweepSpec { model: ModelKind::AshkinTeller, ..Default::default() }.grid();
        assert_eq!(at.len(), 141);
        assert!((at[31] - 0.61).abs() < 1e-12);
    }

    #[test]
    fn row_round_trip() {
        let r = SweepRow {
            param: 0.1,
            witness: Some(1.0 / 3.0),
            oracle_distance: None,
            correlators: Some(CorrelatorSet { g_z: 0.5, g_xx: -0.25, g_yy: 0.125, g_zz: 0.3, ..Default::default() }),
            energy: Some(-1.2),
            sector_gap: Some(1e-7),
            residual: Some(3e-12),
            error: None,
        };
        let line = r.to_csv();
        assert_eq!(line.split(',').nth(2), Some(""));
        assert_eq!(SweepRow::parse(&line).unwrap(), r);
    }

    #[test]
    fn linear_series_has_constant_derivative() {
        let xs: Vec<f64> = (0..11).map(|i| 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        for s in [Stencil::Central2, Stencil::Central4] {
            for d in derivative_scan(&xs, &ys, s).unwrap() {
                assert!((d - 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stencil_orders_on_smooth_function() {
        let err = |h: f64, s| {
            let xs: Vec<f64> = (0..21).map(|i| h * i as f64).collect();
            let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
            let d = derivative_scan(&xs, &ys, s).unwrap();
            xs.iter().zip(&d).map(|(x, d)| (d - x.cos()).abs()).fold(0.0, f64::max)
        };
        let r2 = err(0.02, Stencil::Central2) / err(0.01, Stencil::Central2);
        let r4 = err(0.02, Stencil::Central4) / err(0.01, Stencil::Central4);
        assert!((3.0..5.5).contains(&r2), "{r2}");
        assert!(r4 > 12.0, "{r4}");
        let xs: Vec<f64> = (0..21).map(|i| 0.01 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        let a = derivative_scan(&xs, &ys, Stencil::Central2).unwrap();
        let b = derivative_scan(&xs, &ys, Stencil::Central4).unwrap();
        for i in 1..20 {
            assert!((a[i] - b[i]).abs() <= 1e-4 * 3.0);
        }
    }

    #[test]
    fn non_uniform_grid_is_rejected() {
        let xs = [0.0, 0.1, 0.25, 0.3];
        assert_eq!(derivative_scan(&xs, &[0.0; 4], Stencil::Central2).unwrap_err(), Error::NonUniformGrid(2));
    }

    #[test]
    fn classical_point_detection() {
        let xs: Vec<f64> = (0..7).map(|i| i as f64).collect();
        assert!(find_classical_points(&xs, &[1.0; 7], 1e-5).is_empty());
        let ws = [0.0, 0.1, 0.2, 1e-7, 0.2, 0.05, 0.1];
        let c = find_classical_points(&xs, &ws, 1e-5);
        assert_eq!(c.iter().map(|c| c.index).collect::<Vec<_>>(), vec![0, 3]);
        let flat = [0.1, 0.0, 0.0, 0.1];
        assert_eq!(find_classical_points(&xs[..4], &flat, 1e-5).len(), 1);
    }

    #[test]
    fn free_fermion_row() {
        let spec = SweepSpec::default();
        let r = evaluate_point(&spec, 0, 0.0).unwrap();
        assert!(r.witness.unwrap().abs() < 1e-12);
        assert!(r.sector_gap.is_none() && r.residual.is_none());
    }
}

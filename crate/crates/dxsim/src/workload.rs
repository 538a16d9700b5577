//! Workload files: the spec files read by `gen` and `sweep`, the files `gen`
//! writes, the sweep runner and the differential check behind `verify`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dxsim_core::engine::baseline::{access_stream, run_baseline};
use dxsim_core::engine::{run, RunOptions, SimError};
use dxsim_core::oracle::{compare_results, oracle_run};
use dxsim_core::program::{ArrayData, ArrayInit};
use dxsim_core::workloads::{
    generate_pattern, kernel, pattern_indices, random_program, sweep_cells, GatherKind,
    PatternSpec, RandomSpec, WorkloadError,
};
use dxsim_core::{MemoryImage, Program, SimConfig, StatReport};
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::dsl;
use crate::image::{save_image, ImageError};

#[derive(Debug, Error)]
pub enum WorkloadFileError {
    #[error(
        "unknown workload kind `{0}` (expected gather-spd, gather-full, scatter, rmw or random)"
    )]
    Kind(String),
    #[error(transparent)]
    Spec(#[from] toml::de::Error),
    #[error(transparent)]
    Pattern(#[from] WorkloadError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("could not start worker threads: {0}")]
    Threads(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorkloadKind {
    Kernel(GatherKind),
    Random,
}

impl WorkloadKind {
    pub fn name(self) -> &'static str {
        match self {
            WorkloadKind::Kernel(k) => k.name(),
            WorkloadKind::Random => "random",
        }
    }
}

impl FromStr for WorkloadKind {
    type Err = WorkloadFileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(WorkloadKind::Random),
            _ => s
                .parse()
                .map(WorkloadKind::Kernel)
                .map_err(|_| WorkloadFileError::Kind(s.to_string())),
        }
    }
}

fn default_seed() -> u64 {
    1
}

/// Spec file of `gen`. Pattern keys are ignored by `random`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    #[serde(flatten)]
    pub pattern: PatternKeys,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

/// Pattern parameters with the microbenchmark defaults.
#[derive(Clone, Debug, Deserialize)]
pub struct PatternKeys {
    #[serde(default = "one")]
    pub rbh: f64,
    #[serde(default = "yes")]
    pub chi: bool,
    #[serde(default = "yes")]
    pub bgi: bool,
    #[serde(default = "sixteen")]
    pub rows_per_bank: u32,
    #[serde(default = "one_two_eight")]
    pub columns: u32,
    #[serde(default = "one_two_eight")]
    pub block: u32,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn sixteen() -> u32 {
    16
}
fn one_two_eight() -> u32 {
    128
}

impl PatternKeys {
    pub fn spec(&self) -> PatternSpec {
        PatternSpec {
            rbh: self.rbh,
            chi: self.chi,
            bgi: self.bgi,
            rows_per_bank: self.rows_per_bank,
            columns: self.columns,
            block: self.block,
        }
    }
}

/// One grid point of a sweep spec.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub rbh: f64,
    pub chi: bool,
    pub bgi: bool,
}

/// Spec file of `sweep`. Without `cell` entries the eight standard cells run.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "gather_full")]
    pub kind: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "sixteen")]
    pub rows_per_bank: u32,
    #[serde(default = "one_two_eight")]
    pub columns: u32,
    #[serde(default = "one_two_eight")]
    pub block: u32,
    #[serde(default)]
    pub cell: Vec<Cell>,
}

fn gather_full() -> String {
    "gather-full".into()
}

impl SweepSpec {
    pub fn cells(&self) -> Vec<PatternSpec> {
        if self.cell.is_empty() {
            return sweep_cells()
                .into_iter()
                .map(|s| PatternSpec {
                    rows_per_bank: self.rows_per_bank,
                    columns: self.columns,
                    block: self.block,
                    ..s
                })
                .collect();
        }
        self.cell
            .iter()
            .map(|c| PatternSpec {
                rbh: c.rbh,
                chi: c.chi,
                bgi: c.bgi,
                rows_per_bank: self.rows_per_bank,
                columns: self.columns,
                block: self.block,
            })
            .collect()
    }
}

pub fn parse_gen_spec(text: &str) -> Result<GenSpec, WorkloadFileError> {
    Ok(toml::from_str(text)?)
}

pub fn parse_sweep_spec(text: &str) -> Result<SweepSpec, WorkloadFileError> {
    Ok(toml::from_str(text)?)
}

/// Builds a microbenchmark kernel whose index array walks `spec`'s pattern
/// over `A`, which spans every line the pattern touches.
pub fn pattern_kernel(
    kind: GatherKind,
    spec: &PatternSpec,
    seed: u64,
    cfg: &SimConfig,
) -> Result<(Program, MemoryImage), WorkloadError> {
    let pat = generate_pattern(spec, &cfg.dram)?;
    let width = 4;
    let idx = pattern_indices(&pat, &cfg.dram, width, seed);
    let a_len = idx
        .iter()
        .map(|&i| i + 1)
        .max()
        .unwrap_or(0)
        .next_multiple_of((cfg.dram.cacheline_bytes / width) as u64);
    Ok(kernel(kind, &idx, a_len, cfg.maa.tile_size))
}

pub fn build(
    kind: WorkloadKind,
    spec: &GenSpec,
    cfg: &SimConfig,
) -> Result<(Program, MemoryImage), WorkloadFileError> {
    Ok(match kind {
        WorkloadKind::Kernel(k) => pattern_kernel(k, &spec.pattern.spec(), spec.seed, cfg)?,
        WorkloadKind::Random => random_program(spec.seed, &RandomSpec::default()),
    })
}

/// Files written by `gen`.
#[derive(Clone, Debug)]
pub struct Emitted {
    pub program: PathBuf,
    pub image: PathBuf,
    pub lines: PathBuf,
}

/// Writes `<stem>.dx`, `<stem>.bin` (every `init file` array) and
/// `<stem>.lines`, the baseline's cacheline misses as `R|W 0x<addr>`.
pub fn emit(
    program: &Program,
    image: &MemoryImage,
    cfg: &SimConfig,
    dir: &Path,
    stem: &str,
) -> Result<Emitted, WorkloadFileError> {
    std::fs::create_dir_all(dir)?;
    let bin = format!("{stem}.bin");
    let mut p = program.clone();
    let mut files: Vec<ArrayData> = Vec::new();
    for (a, data) in p.arrays.iter_mut().zip(&image.arrays) {
        if matches!(a.init, ArrayInit::File(_)) {
            a.init = ArrayInit::File(bin.clone());
            files.push(data.clone());
        }
    }
    let out = Emitted {
        program: dir.join(format!("{stem}.dx")),
        image: dir.join(&bin),
        lines: dir.join(format!("{stem}.lines")),
    };
    std::fs::write(&out.program, dsl::print(&p))?;
    save_image(&out.image, &files)?;
    let (lines, _) = access_stream(program, image.clone(), cfg)?;
    let mut text = String::with_capacity(lines.len() * 12);
    for l in &lines {
        let _ = writeln!(text, "{} {:#x}", if l.write { 'W' } else { 'R' }, l.line);
    }
    std::fs::write(&out.lines, text)?;
    Ok(out)
}

/// Runs every cell of `spec` under DX100 and the baseline on up to `jobs`
/// threads. Rows come back in cell order, DX100 first.
pub fn run_sweep(
    spec: &SweepSpec,
    cfg: &SimConfig,
    jobs: usize,
) -> Result<Vec<StatReport>, WorkloadFileError> {
    let kind: GatherKind = spec
        .kind
        .parse()
        .map_err(|_| WorkloadFileError::Kind(spec.kind.clone()))?;
    let cells = spec.cells();
    let mut work = Vec::new();
    for c in &cells {
        let (p, img) = pattern_kernel(kind, c, spec.seed, cfg)?;
        work.push((c.name(), false, p.clone(), img.clone()));
        work.push((c.name(), true, p, img));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| WorkloadFileError::Threads(e.to_string()))?;
    let rows: Result<Vec<StatReport>, SimError> = pool.install(|| {
        work.into_par_iter()
            .map(|(label, base, p, img)| {
                let opts = RunOptions {
                    trace: false,
                    label,
                };
                let out = if base {
                    run_baseline(&p, img, cfg, &opts)?
                } else {
                    run(&p, img, cfg, &opts)?
                };
                Ok(out.stats)
            })
            .collect()
    });
    Ok(rows?)
}

/// Runs `program` on the timing simulator and the sequential oracle and
/// describes the first difference in memory, tiles or registers.
pub fn verify(program: &Program, image: MemoryImage, cfg: &SimConfig) -> Result<(), String> {
    let oracle = oracle_run(program, image.clone(), &cfg.maa);
    let sim = run(program, image, cfg, &RunOptions::default());
    match (oracle, sim) {
        (Ok(o), Ok(s)) => {
            if let Some(d) = compare_results(&s.image, &s.tiles, &o.image, &o.tiles) {
                return Err(format!("simulator and oracle disagree: {d}"));
            }
            if let Some(r) = (0..s.registers.len()).find(|&r| s.registers[r] != o.registers[r]) {
                return Err(format!(
                    "simulator and oracle disagree: register r{r} is {} vs {}",
                    s.registers[r], o.registers[r]
                ));
            }
            Ok(())
        }
        (Err(o), Err(s)) => Err(format!(
            "program fails in both: oracle: {o}; simulator: {s}"
        )),
        (Err(o), Ok(_)) => Err(format!("only the oracle fails: {o}")),
        (Ok(_), Err(s)) => Err(format!("only the simulator fails: {s}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::initial_image;

    #[test]
    fn kinds_parse() {
        assert_eq!(
            "rmw".parse::<WorkloadKind>().unwrap(),
            WorkloadKind::Kernel(GatherKind::Rmw)
        );
        assert_eq!(
            "random".parse::<WorkloadKind>().unwrap(),
            WorkloadKind::Random
        );
        assert!("gups".parse::<WorkloadKind>().is_err());
    }

    #[test]
    fn spec_defaults_and_unknown_keys() {
        let s = parse_gen_spec("rbh = 0.5\nchi = false\n").unwrap();
        assert_eq!(
            s.pattern.spec(),
            PatternSpec {
                rbh: 0.5,
                chi: false,
                ..PatternSpec::new(1.0, true, true)
            }
        );
        assert_eq!(s.seed, 1);
        assert!(parse_gen_spec("rhb = 0.5\n").is_err());
        let w = parse_sweep_spec("").unwrap();
        assert_eq!(w.cells(), sweep_cells());
        let w = parse_sweep_spec("[[cell]]\nrbh = 0.3\nchi = true\nbgi = false\n").unwrap();
        assert_eq!(w.cells(), vec![PatternSpec::new(0.3, true, false)]);
    }

    #[test]
    fn emitted_files_reload() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SimConfig::default();
        let spec = parse_gen_spec("rows_per_bank = 2\ncolumns = 4\nblock = 4\nseed = 3\n").unwrap();
        let (p, img) = build(WorkloadKind::Kernel(GatherKind::Scatter), &spec, &cfg).unwrap();
        let e = emit(&p, &img, &cfg, dir.path(), "scatter").unwrap();
        let parsed = dsl::parse(&std::fs::read_to_string(&e.program).unwrap()).unwrap();
        let back = initial_image(&parsed.program, dir.path()).unwrap();
        assert_eq!(back, img);
        verify(&parsed.program, back, &cfg).unwrap();
        let lines = std::fs::read_to_string(&e.lines).unwrap();
        assert!(lines
            .lines()
            .all(|l| l.starts_with("R 0x") || l.starts_with("W 0x")));
        assert!(lines.lines().any(|l| l.starts_with('W')));
    }

    #[test]
    fn verify_reports_failures() {
        let cfg = SimConfig::default();
        let (p, img) = random_program(5, &RandomSpec::default());
        verify(&p, img, &cfg).unwrap();
        let text = "array A u32 4\narray B u32 1\ninit B iota\nreg r1 = 1\nreg r2 = 1\n\
                    SLD u32 B -> t0, r0, r1, r2\nALUS u32 ADD t1 <- t0, r1\nILD u32 A -> t2, t1\n";
        let p = dsl::parse(text).unwrap().program;
        verify(&p, MemoryImage::from_program(&p), &cfg).unwrap();
        let bad = text
            .replace("ADD", "SHL")
            .replace("reg r1 = 1", "reg r1 = 3");
        let p = dsl::parse(&bad).unwrap().program;
        let e = verify(&p, MemoryImage::from_program(&p), &cfg).unwrap_err();
        assert!(e.starts_with("program fails in both"), "{e}");
    }
}

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dxsim::config::{apply_seed_override, default_config_text, load_config, SEED_ENV};
use dxsim::image::{save_image, tile_entries};
use dxsim::load_program;
use dxsim::report::{write_csv, write_trace};
use dxsim::workload::{
    build, emit, parse_gen_spec, parse_sweep_spec, run_sweep, verify, WorkloadKind,
};
use dxsim_core::engine::baseline::run_baseline;
use dxsim_core::engine::{run, RunOptions};
use dxsim_core::SimConfig;

#[derive(Parser)]
#[command(
    name = "dxsim",
    version,
    about = "Simulate data-access accelerator programs on a DDR4 memory model"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a program and write its statistics row.
    Run(RunArgs),
    /// Write a workload program, its image and its baseline access list.
    Gen {
        /// gather-spd, gather-full, scatter, rmw or random.
        kind: String,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare the timing simulator with the sequential oracle.
    Verify {
        #[arg(required = true)]
        programs: Vec<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the access-pattern grid under the accelerator and the baseline.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Statistics CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default run configuration.
    Defaults,
}

#[derive(Args)]
struct RunArgs {
    program: PathBuf,
    /// Run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Statistics CSV.
    #[arg(long)]
    out: PathBuf,
    /// JSON-lines event trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Final tile contents as an image file.
    #[arg(long)]
    dump_tiles: Option<PathBuf>,
    /// Final memory as an image file.
    #[arg(long)]
    image_out: Option<PathBuf>,
    /// Also run the host-core baseline and add its row.
    #[arg(long)]
    baseline: bool,
    /// Label column; defaults to the program's file stem.
    #[arg(long)]
    label: Option<String>,
}

fn config(path: Option<&Path>) -> Result<SimConfig> {
    match path {
        Some(p) => Ok(load_config(p)?),
        None => {
            let mut cfg = SimConfig::default();
            apply_seed_override(&mut cfg, std::env::var(SEED_ENV).ok().as_deref())?;
            Ok(cfg)
        }
    }
}

fn create(path: &Path) -> Result<io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(io::BufWriter::new(f))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let cfg = &config(args.config.as_deref())?;
    let program = args.program.as_path();
    let (parsed, image) = load_program(program)?;
    parsed
        .validate(cfg.maa.tiles, cfg.maa.registers)
        .map_err(|d| anyhow::anyhow!("{}:\n{d}", program.display()))?;
    let label = args.label.unwrap_or_else(|| {
        program
            .file_stem()
            .map_or(String::new(), |s| s.to_string_lossy().into())
    });
    let opts = RunOptions {
        trace: args.trace.is_some(),
        label,
    };
    let p = &parsed.program;
    let result = run(p, image.clone(), cfg, &opts)
        .with_context(|| format!("running {}", program.display()))?;
    let mut rows = vec![result.stats.clone()];
    if args.baseline {
        let b = run_baseline(
            p,
            image,
            cfg,
            &RunOptions {
                trace: false,
                ..opts.clone()
            },
        )?;
        rows.push(b.stats);
    }
    write_csv(create(&args.out)?, &rows)?;
    if let Some(t) = &args.trace {
        write_trace(create(t)?, &result.trace)?;
    }
    if let Some(d) = &args.dump_tiles {
        save_image(d, &tile_entries(&result.tiles))?;
    }
    if let Some(i) = &args.image_out {
        save_image(i, &result.image.arrays)?;
    }
    Ok(())
}

fn cmd_gen(kind: &str, spec: &Path, out_dir: &Path, cfg: &SimConfig) -> Result<()> {
    let kind: WorkloadKind = kind.parse()?;
    let text =
        std::fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
    let spec = parse_gen_spec(&text).with_context(|| format!("in {}", spec.display()))?;
    let (p, img) = build(kind, &spec, cfg)?;
    let e = emit(&p, &img, cfg, out_dir, kind.name())?;
    println!(
        "{}\n{}\n{}",
        e.program.display(),
        e.image.display(),
        e.lines.display()
    );
    Ok(())
}

fn cmd_verify(programs: &[PathBuf], cfg: &SimConfig) -> Result<bool> {
    let mut ok = true;
    for path in programs {
        let verdict = load_program(path).and_then(|(parsed, image)| {
            parsed
                .validate(cfg.maa.tiles, cfg.maa.registers)
                .map_err(|d| anyhow::anyhow!("{d}"))?;
            verify(&parsed.program, image, cfg).map_err(anyhow::Error::msg)
        });
        match verdict {
            Ok(()) => println!("ok {}", path.display()),
            Err(e) => {
                ok = false;
                println!("FAIL {}: {e:#}", path.display());
            }
        }
    }
    Ok(ok)
}

fn cmd_sweep(spec: &Path, jobs: usize, cfg: &SimConfig, out: Option<&Path>) -> Result<()> {
    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let text =
        std::fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
    let spec = parse_sweep_spec(&text).with_context(|| format!("in {}", spec.display()))?;
    let rows = run_sweep(&spec, cfg, jobs)?;
    match out {
        Some(p) => write_csv(create(p)?, &rows)?,
        None => write_csv(io::stdout().lock(), &rows)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(args) => cmd_run(args).map(|()| true),
        Cmd::Gen {
            kind,
            spec,
            out_dir,
            config: c,
        } => config(c.as_deref())
            .and_then(|cfg| cmd_gen(&kind, &spec, &out_dir, &cfg))
            .map(|()| true),
        Cmd::Verify {
            programs,
            config: c,
        } => config(c.as_deref()).and_then(|cfg| cmd_verify(&programs, &cfg)),
        Cmd::Sweep {
            spec,
            jobs,
            config: c,
            out,
        } => config(c.as_deref())
            .and_then(|cfg| cmd_sweep(&spec, jobs, &cfg, out.as_deref()))
            .map(|()| true),
        Cmd::Defaults => {
            print!("{}", default_config_text());
            io::stdout().flush().map(|()| true).map_err(Into::into)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

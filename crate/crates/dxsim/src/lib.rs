//! File formats and drivers around `dxsim-core`: the `.dx` program text, run
//! configuration files, binary memory images, statistics CSV, JSON-lines
//! traces, workload generation and the parallel sweep runner.

pub mod config;
pub mod dsl;
pub mod image;
pub mod report;
pub mod workload;

use std::path::Path;

use dxsim_core::MemoryImage;

/// Reads a `.dx` file and its initial image, resolving `init file` paths
/// against the program's directory.
pub fn load_program(path: &Path) -> anyhow::Result<(dsl::Parsed, MemoryImage)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    let parsed = dsl::parse(&text).map_err(|d| anyhow::anyhow!("{}:\n{d}", path.display()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let image = image::initial_image(&parsed.program, dir)?;
    Ok((parsed, image))
}

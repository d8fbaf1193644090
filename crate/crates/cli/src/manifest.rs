use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

/// Provenance record written next to every output file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config: PathBuf,
    pub command: String,
    /// Full argument vector; re-running it reproduces the outputs.
    pub argv: Vec<String>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub constants: &'static str,
    pub generator: &'static str,
    pub parallel: bool,
    pub exit_code: u8,
    pub duration_s: f64,
}

/// `<out>.manifest.json`
pub fn path_for(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

impl RunManifest {
    pub fn new(config: &Path, command: &str, seed: Option<u64>) -> Self {
        Self {
            config: config.to_path_buf(),
            command: command.to_string(),
            argv: std::env::args().collect(),
            outputs: Vec::new(),
            seed,
            version: env!("CARGO_PKG_VERSION"),
            constants: massosc::Constants::VERSION_TAG,
            generator: massosc::rng::GENERATOR,
            parallel: massosc::Exec::parallel_available(),
            exit_code: 0,
            duration_s: 0.0,
        }
    }

    pub fn write(&mut self, path: &Path, elapsed: Duration) -> anyhow::Result<()> {
        self.duration_s = elapsed.as_secs_f64();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

//! Run directories, manifests and progress lines.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chrono::{DateTime, SecondsFormat, Utc};
use conngraph::rng::derive_seed;
use serde::Serialize;
use serde_json::Value;

use crate::Failure;

pub const OUT_ROOT_ENV: &str = "CONNGRAPH_OUT_ROOT";

/// Creates the directory for one run. An explicit `out_dir` must be absent
/// or empty; otherwise `<root>/<subcommand>-<timestamp>-<seed hash>` is used,
/// with a numeric suffix if that name is taken.
pub fn create_run_dir(subcommand: &str, seed: u64, out_dir: Option<&Path>) -> Result<PathBuf, Failure> {
    if let Some(dir) = out_dir {
        if dir.exists() {
            let empty = fs::read_dir(dir)
                .map_err(|e| Failure::runtime(format!("{}: {e}", dir.display())))?
                .next()
                .is_none();
            if !empty {
                return Err(Failure::usage(format!(
                    "refusing to write into non-empty directory {}",
                    dir.display()
                )));
            }
        }
        fs::create_dir_all(dir).map_err(|e| Failure::runtime(format!("{}: {e}", dir.display())))?;
        return Ok(dir.to_path_buf());
    }
    let root = std::env::var_os(OUT_ROOT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    fs::create_dir_all(&root).map_err(|e| Failure::runtime(format!("{}: {e}", root.display())))?;
    let stamp = Utc::now().format("%Y%m%dT%H%M%SZ");
    let base = format!("{subcommand}-{stamp}-{:08x}", derive_seed(seed, 0) >> 32);
    for k in 1.. {
        let name = if k == 1 { base.clone() } else { format!("{base}-{k}") };
        let dir = root.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(Failure::runtime(format!("{}: {e}", dir.display()))),
        }
    }
    unreachable!()
}

#[derive(Debug, Serialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub subcommand: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config: Value,
    pub started: String,
    pub finished: String,
    pub phases: Vec<Phase>,
    pub outputs: Vec<String>,
}

/// Collects timing and output names while a subcommand runs.
pub struct Run {
    pub dir: PathBuf,
    subcommand: String,
    seed: Option<u64>,
    config: Value,
    started: DateTime<Utc>,
    phase_start: Instant,
    phases: Vec<Phase>,
    outputs: Vec<String>,
}

impl Run {
    pub fn start(subcommand: &str, seed: Option<u64>, config: &impl Serialize, out_dir: Option<&Path>) -> Result<Self, Failure> {
        let dir = create_run_dir(subcommand, seed.unwrap_or(0), out_dir)?;
        Ok(Run {
            dir,
            subcommand: subcommand.to_owned(),
            seed,
            config: serde_json::to_value(config).expect("config serializes"),
            started: Utc::now(),
            phase_start: Instant::now(),
            phases: Vec::new(),
            outputs: Vec::new(),
        })
    }

    /// Closes the current phase under `name`.
    pub fn phase(&mut self, name: &str) {
        let now = Instant::now();
        self.phases.push(Phase {
            name: name.to_owned(),
            seconds: (now - self.phase_start).as_secs_f64(),
        });
        self.phase_start = now;
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
        self.outputs.push(name.to_owned());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        self.write(name, text)
    }

    pub fn finish(mut self) -> Result<PathBuf, Failure> {
        let manifest = Manifest {
            subcommand: self.subcommand.clone(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            seed: self.seed,
            config: self.config.clone(),
            started: self.started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            phases: std::mem::take(&mut self.phases),
            outputs: std::mem::take(&mut self.outputs),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = self.dir.join("manifest.json");
        fs::write(&path, text + "\n").map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
        Ok(self.dir)
    }
}

/// Rate-limited progress lines on stderr.
pub struct Progress {
    quiet: bool,
    every: Duration,
    last: Instant,
}

impl Progress {
    pub fn new(quiet: bool) -> Self {
        Progress {
            quiet,
            every: Duration::from_secs(2),
            last: Instant::now(),
        }
    }

    pub fn tick(&mut self, message: impl FnOnce() -> String) {
        if self.quiet || self.last.elapsed() < self.every {
            return;
        }
        self.last = Instant::now();
        eprintln!("{}", message());
    }

    pub fn say(&self, message: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", message.as_ref());
        }
    }
}

/// Print to stdout, treating a closed pipe (`| head`) as success.
pub fn emit(text: impl AsRef<str>) -> Result<(), Failure> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", text.as_ref()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::runtime(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

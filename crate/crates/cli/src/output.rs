//! Atomic artifact emission and the plain-text run manifest.

use std::io;
use std::path::{Path, PathBuf};

/// 17 significant digits, enough to reproduce the exact bits on re-read.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes through a sibling temp file and renames over the final name, so
/// an interrupted run never leaves a half-written artifact behind.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp_name = path.as_os_str().to_owned();
    tmp_name.push(".tmp");
    let tmp = PathBuf::from(tmp_name);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

/// Outcome of one named assertion.
#[derive(Debug, Clone)]
pub enum Outcome {
    Pass,
    Fail(String),
    Skip(String),
}

impl Outcome {
    pub fn word(&self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail(_) => "fail",
            Outcome::Skip(_) => "skip",
        }
    }
}

/// Everything one run reports about itself.
pub struct Manifest {
    pub subcommand: &'static str,
    pub config_echo: Vec<(String, String)>,
    pub stages: Vec<(String, f64)>,
    pub files: Vec<String>,
    pub assertions: Vec<(String, Outcome)>,
    pub failure_stage: Option<String>,
}

impl Manifest {
    pub fn new(subcommand: &'static str, config_echo: Vec<(String, String)>) -> Self {
        Manifest {
            subcommand,
            config_echo,
            stages: Vec::new(),
            files: Vec::new(),
            assertions: Vec::new(),
            failure_stage: None,
        }
    }

    pub fn any_fail(&self) -> bool {
        self.assertions.iter().any(|(_, o)| matches!(o, Outcome::Fail(_)))
    }

    pub fn render(&self) -> String {
        let mut t = String::new();
        t.push_str("fraclab run manifest\n");
        t.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
        t.push_str(&format!("subcommand = {}\n", self.subcommand));
        let status = if let Some(stage) = &self.failure_stage {
            format!("error at stage {stage}")
        } else if self.any_fail() {
            "fail".to_string()
        } else {
            "pass".to_string()
        };
        t.push_str(&format!("status = {status}\n"));

        t.push_str("\n[config]\n");
        for (k, v) in &self.config_echo {
            t.push_str(&format!("{k} = {v}\n"));
        }

        t.push_str("\n[stages]\n");
        for (name, secs) in &self.stages {
            t.push_str(&format!("{name} = {secs:.3}s\n"));
        }

        t.push_str("\n[files]\n");
        if self.files.is_empty() {
            t.push_str("(none)\n");
        }
        for f in &self.files {
            t.push_str(&format!("{f}\n"));
        }

        t.push_str("\n[assertions]\n");
        if self.assertions.is_empty() {
            t.push_str("(none)\n");
        }
        for (name, outcome) in &self.assertions {
            match outcome {
                Outcome::Pass => t.push_str(&format!("{name} = pass\n")),
                Outcome::Fail(why) => t.push_str(&format!("{name} = fail: {why}\n")),
                Outcome::Skip(why) => t.push_str(&format!("{name} = skip: {why}\n")),
            }
        }
        t
    }
}

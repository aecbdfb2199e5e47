use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

pub const MANIFEST_FORMAT: &str = "screenkit-manifest";
pub const MANIFEST_VERSION: u32 = 1;

/// Flags whose values are filesystem paths; they are made absolute before recording.
pub const PATH_FLAGS: [&str; 11] = [
    "--corpus",
    "--corpus-dir",
    "--config",
    "--embeddings",
    "--model",
    "--vocab",
    "--grid",
    "--datasets",
    "--input",
    "--unlabeled",
    "--out",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    /// `name/vN`; bumped whenever the columns change.
    pub schema: String,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: u32,
    pub tool_version: String,
    pub command: String,
    /// Arguments after the program name, with path values absolute.
    pub argv: Vec<String>,
    pub config_path: Option<String>,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub output: String,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn load(path: &Path) -> anyhow::Result<RunManifest> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read manifest {}", path.display()))?;
        let m: RunManifest = serde_json::from_str(&text).with_context(|| format!("invalid manifest {}", path.display()))?;
        if m.format != MANIFEST_FORMAT || m.version != MANIFEST_VERSION {
            anyhow::bail!("unsupported manifest {} v{}", m.format, m.version);
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("cannot write manifest {}", path.display()))
    }
}

/// `<dir>/manifest.json` for directory outputs, `<file>.manifest.json` otherwise.
pub fn manifest_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        out.join("manifest.json")
    } else {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }
}

fn absolute(value: &str) -> String {
    value
        .split(',')
        .map(|p| {
            std::path::absolute(p)
                .map(|a| a.display().to_string())
                .unwrap_or_else(|_| p.to_string())
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// Rewrites path-valued flags to absolute paths, for both `--flag v` and `--flag=v`.
pub fn normalize_argv(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut i = 0;
    while i < args.len() {
        let a = &args[i];
        if let Some((flag, value)) = a.split_once('=') {
            if PATH_FLAGS.contains(&flag) {
                out.push(format!("{flag}={}", absolute(value)));
                i += 1;
                continue;
            }
        }
        out.push(a.clone());
        if PATH_FLAGS.contains(&a.as_str()) && i + 1 < args.len() {
            out.push(absolute(&args[i + 1]));
            i += 2;
        } else {
            i += 1;
        }
    }
    out
}

/// Replaces the value of `--out`, appending the flag when absent.
pub fn replace_out(args: &[String], out: &Path) -> Vec<String> {
    let value = out.display().to_string();
    let mut res = Vec::with_capacity(args.len() + 2);
    let mut replaced = false;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--out" && i + 1 < args.len() {
            res.push("--out".into());
            res.push(value.clone());
            replaced = true;
            i += 2;
        } else if args[i].starts_with("--out=") {
            res.push(format!("--out={value}"));
            replaced = true;
            i += 1;
        } else {
            res.push(args[i].clone());
            i += 1;
        }
    }
    if !replaced {
        res.push("--out".into());
        res.push(value);
    }
    res
}

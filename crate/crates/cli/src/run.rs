//! Run directories and their manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context as _;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

pub struct Context {
    pub out: PathBuf,
    pub run_dir: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    schema: u32,
    command: &'a str,
    argv: Vec<String>,
    parameters: &'a Value,
    /// Resolved configuration handed to the library, defaults filled in.
    resolved: &'a Value,
    seed: Option<u64>,
    rng: Option<&'static str>,
    grid: &'a Value,
    inputs: &'a BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    duration_s: f64,
}

pub struct Run {
    pub dir: PathBuf,
    command: &'static str,
    parameters: Value,
    started: Instant,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    pub seed: Option<u64>,
    pub rng: Option<&'static str>,
    pub grid: Value,
    pub resolved: Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

impl Run {
    /// Create the run directory. Without `--run-dir` it is `<out>/<command>-<hash>`, the hash
    /// covering the command and its canonical parameter JSON, so identical requests share a directory.
    pub fn open(ctx: &Context, command: &'static str, parameters: &impl Serialize) -> anyhow::Result<Run> {
        let parameters = serde_json::to_value(parameters)?;
        let dir = match &ctx.run_dir {
            Some(d) => d.clone(),
            None => {
                let key = format!("{command}\n{parameters}");
                ctx.out.join(format!("{command}-{}", &sha256_hex(key.as_bytes())[..12]))
            }
        };
        std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Run {
            dir,
            command,
            parameters,
            started: Instant::now(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            seed: None,
            rng: None,
            grid: Value::Null,
            resolved: Value::Null,
        })
    }

    /// Record an input file's digest; fails if it cannot be read.
    pub fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        let d = digest_file(path)?;
        self.inputs.insert(path.display().to_string(), d);
        Ok(())
    }

    /// Path of an output file, registered for the manifest.
    pub fn output(&mut self, name: &str) -> anyhow::Result<PathBuf> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        self.outputs.push(name.to_string());
        Ok(p)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> anyhow::Result<()> {
        let p = self.output(name)?;
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(&p, text).with_context(|| format!("cannot write {}", p.display()))
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        let p = self.output(name)?;
        std::fs::write(&p, text).with_context(|| format!("cannot write {}", p.display()))
    }

    /// Digest the outputs, write the manifest and print the directory.
    pub fn finish(self) -> anyhow::Result<PathBuf> {
        let mut outputs = BTreeMap::new();
        for name in &self.outputs {
            outputs.insert(name.clone(), digest_file(&self.dir.join(name))?);
        }
        let manifest = Manifest {
            tool: "awm",
            version: env!("CARGO_PKG_VERSION"),
            schema: SCHEMA,
            command: self.command,
            argv: std::env::args().collect(),
            parameters: &self.parameters,
            resolved: &self.resolved,
            seed: self.seed,
            rng: self.rng,
            grid: &self.grid,
            inputs: &self.inputs,
            outputs,
            duration_s: self.started.elapsed().as_secs_f64(),
        };
        let p = self.dir.join(MANIFEST);
        std::fs::write(&p, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("cannot write {}", p.display()))?;
        println!("run directory: {}", self.dir.display());
        Ok(self.dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_matches_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn derived_directory_depends_on_parameters_only() {
        let tmp = tempfile::tempdir().unwrap();
        let ctx = Context { out: tmp.path().to_path_buf(), run_dir: None };
        let a = Run::open(&ctx, "steady", &serde_json::json!({"chi": 0.3, "zeta": 0.1})).unwrap();
        let b = Run::open(&ctx, "steady", &serde_json::json!({"zeta": 0.1, "chi": 0.3})).unwrap();
        let c = Run::open(&ctx, "steady", &serde_json::json!({"chi": 0.2, "zeta": 0.1})).unwrap();
        assert_eq!(a.dir, b.dir);
        assert_ne!(a.dir, c.dir);
        assert!(a.dir.file_name().unwrap().to_str().unwrap().starts_with("steady-"));
    }
}

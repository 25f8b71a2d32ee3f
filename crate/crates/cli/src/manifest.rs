//! Run manifests: flat key-value records of exactly what a subcommand ran
//! and what it read and wrote, sufficient to replay the run and verify that
//! it reproduces the same bytes.
//!
//! Format: one `key=value` pair per line (the first `=` splits the key from
//! the value), written in a fixed order — `tool`, `version`, `subcommand`,
//! `seed`, the argv as `arg.0`, `arg.1`, ..., then `input.<path>` and
//! `output.<path>` lines sorted by path. Hash values are
//! `sha256:<lowercase hex>` over raw file bytes. No timestamps or absolute
//! paths are introduced, so identical runs produce identical manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::AppError;

/// SHA-256 of a file's bytes, formatted as `sha256:<hex>`.
pub fn hash_file(path: &Path) -> Result<String, AppError> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    let mut s = String::with_capacity(7 + 64);
    s.push_str("sha256:");
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    Ok(s)
}

/// Everything a run manifest records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    /// Full argv after the program name, in order.
    pub args: Vec<String>,
    /// `(path as given, sha256:<hex>)`, sorted by path.
    pub inputs: Vec<(String, String)>,
    /// `(path as written, sha256:<hex>)`, sorted by path.
    pub outputs: Vec<(String, String)>,
}

impl Manifest {
    /// Builds a manifest for a finished run by hashing the named files.
    pub fn for_run(
        subcommand: &str,
        seed: u64,
        args: &[String],
        inputs: &[PathBuf],
        outputs: &[PathBuf],
    ) -> Result<Self, AppError> {
        let mut hashed_inputs = Vec::with_capacity(inputs.len());
        for p in inputs {
            hashed_inputs.push((p.display().to_string(), hash_file(p)?));
        }
        hashed_inputs.sort();
        let mut hashed_outputs = Vec::with_capacity(outputs.len());
        for p in outputs {
            hashed_outputs.push((p.display().to_string(), hash_file(p)?));
        }
        hashed_outputs.sort();
        Ok(Manifest {
            tool: "varcast".to_string(),
            version: varcast::VERSION.to_string(),
            subcommand: subcommand.to_string(),
            seed,
            args: args.to_vec(),
            inputs: hashed_inputs,
            outputs: hashed_outputs,
        })
    }

    /// Serializes to the flat key-value text form.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tool={}", self.tool);
        let _ = writeln!(s, "version={}", self.version);
        let _ = writeln!(s, "subcommand={}", self.subcommand);
        let _ = writeln!(s, "seed={}", self.seed);
        for (i, a) in self.args.iter().enumerate() {
            let _ = writeln!(s, "arg.{i}={a}");
        }
        for (p, h) in &self.inputs {
            let _ = writeln!(s, "input.{p}={h}");
        }
        for (p, h) in &self.outputs {
            let _ = writeln!(s, "output.{p}={h}");
        }
        s
    }

    /// Writes the rendered manifest to `path`.
    pub fn write(&self, path: &Path) -> Result<(), AppError> {
        fs::write(path, self.render()).map_err(|e| AppError::io(path, e))
    }

    /// Parses the flat key-value text form. Unknown keys are rejected so a
    /// corrupted file cannot silently pass verification.
    pub fn parse(text: &str, origin: &Path) -> Result<Self, AppError> {
        let mut tool = None;
        let mut version = None;
        let mut subcommand = None;
        let mut seed = None;
        let mut args: Vec<(usize, String)> = Vec::new();
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();

        let bad = |line_no: usize, detail: &str| {
            AppError::manifest_form(origin, format!("line {line_no}: {detail}"))
        };

        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(line_no, "expected key=value"))?;
            match key {
                "tool" => tool = Some(value.to_string()),
                "version" => version = Some(value.to_string()),
                "subcommand" => subcommand = Some(value.to_string()),
                "seed" => {
                    seed = Some(
                        value
                            .parse::<u64>()
                            .map_err(|_| bad(line_no, "seed is not an unsigned integer"))?,
                    )
                }
                _ => {
                    if let Some(n) = key.strip_prefix("arg.") {
                        let n: usize = n
                            .parse()
                            .map_err(|_| bad(line_no, "argument index is not an integer"))?;
                        args.push((n, value.to_string()));
                    } else if let Some(p) = key.strip_prefix("input.") {
                        inputs.push((p.to_string(), value.to_string()));
                    } else if let Some(p) = key.strip_prefix("output.") {
                        outputs.push((p.to_string(), value.to_string()));
                    } else {
                        return Err(bad(line_no, &format!("unknown key `{key}`")));
                    }
                }
            }
        }

        args.sort_by_key(|(n, _)| *n);
        for (expected, (n, _)) in args.iter().enumerate() {
            if *n != expected {
                return Err(AppError::manifest_form(
                    origin,
                    format!("argument indices are not contiguous at arg.{n}"),
                ));
            }
        }

        Ok(Manifest {
            tool: tool.ok_or_else(|| AppError::manifest_form(origin, "missing `tool`"))?,
            version: version
                .ok_or_else(|| AppError::manifest_form(origin, "missing `version`"))?,
            subcommand: subcommand
                .ok_or_else(|| AppError::manifest_form(origin, "missing `subcommand`"))?,
            seed: seed.ok_or_else(|| AppError::manifest_form(origin, "missing `seed`"))?,
            args: args.into_iter().map(|(_, a)| a).collect(),
            inputs,
            outputs,
        })
    }

    /// Reads and parses a manifest file.
    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Checks one recorded `(path, hash)` list against the files on disk.
    /// Returns the first mismatch as a verification error.
    pub fn verify_hashes(entries: &[(String, String)], role: &str) -> Result<(), AppError> {
        for (path, recorded) in entries {
            let actual = hash_file(Path::new(path))?;
            if &actual != recorded {
                return Err(AppError::manifest_verify(format!(
                    "{role} `{path}`: recorded {recorded}, found {actual}"
                )));
            }
        }
        Ok(())
    }
}

//! Versioned text model format.
//!
//! ```text
//! ocssvm-model 1
//! kernel rbf 0.5              # or: linear | polynomial <degree> <coef0>
//! nu1 0.5
//! nu2 0.01
//! epsilon 0.6667
//! tol 0.001
//! max_iter none               # or an integer
//! seed 0
//! rho1 …
//! rho2 …
//! iterations 412
//! max_violation …
//! wall_seconds …
//! status converged            # converged | max_iter | no_progress
//! dim 2
//! support_vectors 3
//! sv <weight> <x1> … <xd>     # one line per support vector
//! checksum <sha256 of every preceding byte, hex>
//! ```
//!
//! Floats use Rust's shortest round-trip representation, so every numeric
//! field survives a save/load cycle bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{OcsError, Result};
use crate::types::{HyperParams, KernelSpec, SupportVector, TrainMeta, TrainStatus, TrainedModel};

pub const MODEL_MAGIC: &str = "ocssvm-model";
pub const MODEL_VERSION: u32 = 1;

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    fs::write(path, serialize_model(model)).map_err(|e| OcsError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = fs::read_to_string(path).map_err(|e| OcsError::io(path, e))?;
    deserialize_model(&text)
}

fn checksum(body: &str) -> String {
    Sha256::digest(body.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

pub fn serialize_model(model: &TrainedModel) -> String {
    let p = &model.params;
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_MAGIC} {MODEL_VERSION}");
    match p.kernel() {
        KernelSpec::Linear => out.push_str("kernel linear\n"),
        KernelSpec::Rbf { gamma } => {
            let _ = writeln!(out, "kernel rbf {gamma:?}");
        }
        KernelSpec::Polynomial { degree, coef0 } => {
            let _ = writeln!(out, "kernel polynomial {degree} {coef0:?}");
        }
    }
    let _ = writeln!(out, "nu1 {:?}", p.nu1());
    let _ = writeln!(out, "nu2 {:?}", p.nu2());
    let _ = writeln!(out, "epsilon {:?}", p.epsilon());
    let _ = writeln!(out, "tol {:?}", p.tol());
    match p.max_iter() {
        Some(n) => {
            let _ = writeln!(out, "max_iter {n}");
        }
        None => out.push_str("max_iter none\n"),
    }
    let _ = writeln!(out, "seed {}", p.seed());
    let _ = writeln!(out, "rho1 {:?}", model.rho1);
    let _ = writeln!(out, "rho2 {:?}", model.rho2);
    let _ = writeln!(out, "iterations {}", model.meta.iterations);
    let _ = writeln!(out, "max_violation {:?}", model.meta.max_violation);
    let _ = writeln!(out, "wall_seconds {:?}", model.meta.wall_seconds);
    let _ = writeln!(out, "status {}", model.meta.status.as_str());
    let _ = writeln!(out, "dim {}", model.dim);
    let _ = writeln!(out, "support_vectors {}", model.support_vectors.len());
    for sv in &model.support_vectors {
        let _ = write!(out, "sv {:?}", sv.weight);
        for x in &sv.features {
            let _ = write!(out, " {x:?}");
        }
        out.push('\n');
    }
    let sum = checksum(&out);
    let _ = writeln!(out, "checksum {sum}");
    out
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn field(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let (n, line) = self
            .iter
            .next()
            .ok_or_else(|| OcsError::CorruptModel(format!("missing '{key}'")))?;
        let mut parts = line.split(' ');
        if parts.next() != Some(key) {
            return Err(OcsError::CorruptModel(format!("line {}: expected '{key}'", n + 1)));
        }
        Ok(parts.collect())
    }

    fn one(&mut self, key: &str) -> Result<&'a str> {
        match self.field(key)?.as_slice() {
            [v] => Ok(v),
            _ => Err(OcsError::CorruptModel(format!("'{key}' takes one value"))),
        }
    }
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| OcsError::CorruptModel(format!("bad {what} '{s}'")))
}

pub fn deserialize_model(text: &str) -> Result<TrainedModel> {
    let header = text.lines().next().unwrap_or("");
    let version = header
        .strip_prefix(MODEL_MAGIC)
        .map(str::trim)
        .ok_or_else(|| OcsError::CorruptModel("not an ocssvm model file".into()))?;
    if version != MODEL_VERSION.to_string() {
        return Err(OcsError::VersionMismatch {
            found: version.to_string(),
            expected: MODEL_VERSION,
        });
    }

    let body_end = text
        .rfind("checksum ")
        .filter(|&i| i == 0 || text.as_bytes()[i - 1] == b'\n')
        .ok_or_else(|| OcsError::CorruptModel("missing checksum line (truncated file?)".into()))?;
    let (body, tail) = text.split_at(body_end);
    let stored = tail.trim_end_matches('\n').strip_prefix("checksum ").unwrap_or("");
    if stored != checksum(body) {
        return Err(OcsError::CorruptModel("checksum mismatch".into()));
    }

    let mut lines = Lines {
        iter: body.lines().enumerate(),
    };
    lines.iter.next();
    let kernel = match lines.field("kernel")?.as_slice() {
        ["linear"] => KernelSpec::Linear,
        ["rbf", g] => KernelSpec::Rbf {
            gamma: num(g, "rbf gamma")?,
        },
        ["polynomial", d, c] => KernelSpec::Polynomial {
            degree: num(d, "degree")?,
            coef0: num(c, "coef0")?,
        },
        other => return Err(OcsError::CorruptModel(format!("bad kernel {other:?}"))),
    };
    let nu1: f64 = num(lines.one("nu1")?, "nu1")?;
    let nu2: f64 = num(lines.one("nu2")?, "nu2")?;
    let epsilon: f64 = num(lines.one("epsilon")?, "epsilon")?;
    let tol: f64 = num(lines.one("tol")?, "tol")?;
    let max_iter = match lines.one("max_iter")? {
        "none" => None,
        n => Some(num::<usize>(n, "max_iter")?),
    };
    let seed: u64 = num(lines.one("seed")?, "seed")?;
    let mut params = HyperParams::new(nu1, nu2, epsilon, kernel)
        .and_then(|p| p.with_tol(tol))
        .map_err(|e| OcsError::CorruptModel(e.to_string()))?
        .with_seed(seed);
    if let Some(n) = max_iter {
        params = params
            .with_max_iter(n)
            .map_err(|e| OcsError::CorruptModel(e.to_string()))?;
    }

    let rho1 = num(lines.one("rho1")?, "rho1")?;
    let rho2 = num(lines.one("rho2")?, "rho2")?;
    let iterations = num(lines.one("iterations")?, "iterations")?;
    let max_violation = num(lines.one("max_violation")?, "max_violation")?;
    let wall_seconds = num(lines.one("wall_seconds")?, "wall_seconds")?;
    let status = TrainStatus::parse(lines.one("status")?)
        .ok_or_else(|| OcsError::CorruptModel("bad status".into()))?;
    let dim: usize = num(lines.one("dim")?, "dim")?;
    let count: usize = num(lines.one("support_vectors")?, "support vector count")?;

    let mut support_vectors = Vec::with_capacity(count);
    for _ in 0..count {
        let parts = lines.field("sv")?;
        if parts.len() != dim + 1 {
            return Err(OcsError::CorruptModel(format!(
                "support vector has {} values, expected {}",
                parts.len(),
                dim + 1
            )));
        }
        let weight = num(parts[0], "weight")?;
        let features = parts[1..]
            .iter()
            .map(|s| num(s, "feature"))
            .collect::<Result<Vec<f64>>>()?;
        support_vectors.push(SupportVector { features, weight });
    }
    if lines.iter.next().is_some() {
        return Err(OcsError::CorruptModel("trailing data before checksum".into()));
    }

    Ok(TrainedModel {
        support_vectors,
        rho1,
        rho2,
        dim,
        params,
        meta: TrainMeta {
            iterations,
            max_violation,
            wall_seconds,
            status,
        },
    })
}

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::density::DivergenceKind;
use crate::error::{Error, Result};
use crate::training::EmbeddingTable;

const MAGIC: &str = "DOE1";

/// Run metadata stored in the checkpoint header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointMeta {
    pub kind: DivergenceKind,
    pub gamma: f64,
    pub seed: u64,
}

/// Node names, their embeddings and the run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub names: Vec<String>,
    pub table: EmbeddingTable,
    pub meta: CheckpointMeta,
}

fn ck(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

/// Writes a plain-text checkpoint. Floats use the shortest representation
/// that parses back to the same bits.
pub fn save_checkpoint(
    path: impl AsRef<Path>,
    names: &[String],
    table: &EmbeddingTable,
    meta: &CheckpointMeta,
) -> Result<()> {
    let path = path.as_ref();
    if names.len() != table.len() {
        return Err(ck(format!(
            "{} names for {} embeddings",
            names.len(),
            table.len()
        )));
    }
    if let Some(bad) = names
        .iter()
        .find(|n| n.is_empty() || n.chars().any(char::is_whitespace))
    {
        return Err(ck(format!("node name '{bad}' is empty or has whitespace")));
    }
    if !meta.gamma.is_finite() {
        return Err(ck("gamma must be finite"));
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let d = table.dim();
    let mut body = || -> std::io::Result<()> {
        writeln!(
            w,
            "{MAGIC} {} {} {} {} {}",
            table.len(),
            d,
            meta.kind,
            meta.gamma,
            meta.seed
        )?;
        for (i, name) in names.iter().enumerate() {
            w.write_all(name.as_bytes())?;
            for x in &table.means()[i * d..(i + 1) * d] {
                write!(w, " {x}")?;
            }
            for x in &table.log_vars()[i * d..(i + 1) * d] {
                write!(w, " {x}")?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

/// Reads a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&text)
}

/// Parses checkpoint text.
pub fn parse_checkpoint(text: &str) -> Result<Checkpoint> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| ck("empty file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    match h.first() {
        Some(&MAGIC) => {}
        Some(other) => return Err(ck(format!("unsupported format version '{other}'"))),
        None => return Err(ck("empty header")),
    }
    if h.len() != 6 {
        return Err(ck(format!("header has {} fields, expected 6", h.len())));
    }
    let n: usize = h[1].parse().map_err(|_| ck(format!("bad node count '{}'", h[1])))?;
    let d: usize = h[2].parse().map_err(|_| ck(format!("bad dimension '{}'", h[2])))?;
    let kind: DivergenceKind = h[3].parse()?;
    let gamma: f64 = h[4]
        .parse()
        .ok()
        .filter(|g: &f64| g.is_finite())
        .ok_or_else(|| ck(format!("bad gamma '{}'", h[4])))?;
    let seed: u64 = h[5].parse().map_err(|_| ck(format!("bad seed '{}'", h[5])))?;

    let mut names = Vec::with_capacity(n);
    let mut seen = HashSet::with_capacity(n);
    let mut means = Vec::with_capacity(n * d);
    let mut log_vars = Vec::with_capacity(n * d);
    for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        if i >= n {
            return Err(ck(format!("more than the {n} records declared")));
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 1 + 2 * d {
            return Err(ck(format!(
                "record {} has {} values, expected {}",
                i + 1,
                f.len() - 1,
                2 * d
            )));
        }
        if !seen.insert(f[0]) {
            return Err(ck(format!("duplicate node '{}'", f[0])));
        }
        names.push(f[0].to_owned());
        for (j, s) in f[1..].iter().enumerate() {
            let x: f64 = s.parse().map_err(|_| ck(format!("bad number '{s}' in record {}", i + 1)))?;
            if !x.is_finite() {
                return Err(ck(format!("non-finite value in record {}", i + 1)));
            }
            if j < d {
                means.push(x);
            } else {
                log_vars.push(x);
            }
        }
    }
    if names.len() != n {
        return Err(ck(format!("found {} records, header declares {n}", names.len())));
    }
    Ok(Checkpoint {
        names,
        table: EmbeddingTable::from_parts(n, d, means, log_vars)?,
        meta: CheckpointMeta { kind, gamma, seed },
    })
}

use std::fmt::Write as _;
use std::path::Path;

use crate::numeric::{ParamStore, Tensor};
use crate::{Error, Result};

const MAGIC: &str = "akiphen-checkpoint v1";

/// Writes named tensors as text: a magic line, a free-form metadata line,
/// then per tensor `tensor <name> <rank> <dims..>` followed by its values.
pub fn save_checkpoint(store: &ParamStore, meta: &str, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    writeln!(out, "meta {}", meta.replace('\n', " ")).expect("string write");
    for (_, name, t) in store.iter() {
        write!(out, "tensor {name} {}", t.rank()).expect("string write");
        for d in t.shape() {
            write!(out, " {d}").expect("string write");
        }
        out.push('\n');
        let vals: Vec<String> = t.data().iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&vals.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a checkpoint back into a fresh store, plus its metadata line.
pub fn load_checkpoint(path: &Path) -> Result<(ParamStore, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let parse_err = |line: usize, message: String| Error::Parse {
        line: line + 1,
        message,
    };
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        _ => return Err(parse_err(0, "not a checkpoint file".into())),
    }
    let meta = match lines.next() {
        Some((_, l)) if l.starts_with("meta ") => l[5..].to_string(),
        _ => return Err(parse_err(1, "missing metadata line".into())),
    };
    let mut store = ParamStore::new();
    while let Some((i, header)) = lines.next() {
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() < 3 || parts[0] != "tensor" {
            return Err(parse_err(
                i,
                format!("expected a tensor header, got `{header}`"),
            ));
        }
        let rank: usize = parts[2]
            .parse()
            .map_err(|_| parse_err(i, "bad rank".into()))?;
        if parts.len() != 3 + rank {
            return Err(parse_err(
                i,
                "rank does not match the number of extents".into(),
            ));
        }
        let shape = parts[3..]
            .iter()
            .map(|d| {
                d.parse::<usize>()
                    .map_err(|_| parse_err(i, format!("bad extent `{d}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let (j, body) = lines
            .next()
            .ok_or_else(|| parse_err(i + 1, "missing tensor values".into()))?;
        let data = body
            .split_whitespace()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| parse_err(j, format!("bad value `{v}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let t = Tensor::new(shape, data).map_err(|e| parse_err(j, e.to_string()))?;
        store.add(parts[1], t);
    }
    Ok((store, meta))
}

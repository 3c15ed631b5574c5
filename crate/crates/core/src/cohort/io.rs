use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IcuStay, Vocabulary};
use crate::{Error, Result};

const FORMAT: &str = "akiphen-cohort";
const VERSION: u32 = 1;

/// First line of a cohort file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortHeader {
    pub format: String,
    pub version: u32,
    pub n_stays: usize,
    pub vocabulary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub stays: Vec<IcuStay>,
    pub vocab: Vocabulary,
}

/// Writes a header line followed by one JSON object per stay.
pub fn write_cohort(stays: &[IcuStay], vocab: &Vocabulary, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = CohortHeader {
        format: FORMAT.into(),
        version: VERSION,
        n_stays: stays.len(),
        vocabulary: vocab.words().to_vec(),
    };
    let io_err = |e: std::io::Error| Error::io(path, e);
    serde_json::to_writer(&mut w, &header).map_err(|e| Error::io(path, e.into()))?;
    w.write_all(b"\n").map_err(io_err)?;
    for s in stays {
        serde_json::to_writer(&mut w, s).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_cohort(path: &Path) -> Result<Cohort> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let first = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(path, e))?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing header line".into(),
            })
        }
    };
    let header: CohortHeader = serde_json::from_str(&first).map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "unsupported cohort format {} v{}",
                header.format, header.version
            ),
        });
    }
    let vocab = Vocabulary::from_words(header.vocabulary)?;
    let mut stays = Vec::with_capacity(header.n_stays);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let stay: IcuStay = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        stay.validate().map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        stays.push(stay);
    }
    if stays.len() != header.n_stays {
        return Err(Error::Parse {
            line: stays.len() + 2,
            message: format!(
                "header announces {} stays but {} were read",
                header.n_stays,
                stays.len()
            ),
        });
    }
    Ok(Cohort { stays, vocab })
}

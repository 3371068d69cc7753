//! Instance datasets as JSON lines, one seeded instance per line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::derive_seed;
use crate::vrp::{generate_instance, Instance, SizeClass, VrpError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Vrp(#[from] VrpError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeededInstance {
    pub seed: u64,
    pub instance: Instance,
}

/// `count` instances with `customers` customers; line `i` uses the seed
/// derived from `(seed, i)`.
pub fn generate_dataset(
    customers: usize,
    count: usize,
    size_class: SizeClass,
    seed: u64,
) -> Result<Vec<SeededInstance>, VrpError> {
    (0..count as u64)
        .map(|i| {
            let s = derive_seed(seed, &[i]);
            Ok(SeededInstance {
                seed: s,
                instance: generate_instance(customers, size_class, s)?,
            })
        })
        .collect()
}

pub fn write_jsonl(items: &[SeededInstance], out: &mut impl Write) -> Result<(), DatasetError> {
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| DatasetError::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_jsonl(input: impl BufRead) -> Result<Vec<SeededInstance>, DatasetError> {
    let mut items = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        items.push(item);
    }
    Ok(items)
}

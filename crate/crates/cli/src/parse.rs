//! `parse`: CVRPLib files to instance JSON.

use std::fmt;

use anyhow::Context;
use routing_aos::vrp::{parse_cvrplib, ParseError};

use crate::meta::Metadata;
use crate::ParseArgs;

/// Unreadable input data other than CVRPLib files (reference costs and
/// similar).
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

/// Attaches the offending section to a parse error.
pub fn describe(err: ParseError) -> anyhow::Error {
    let context = match err.section() {
        Some(section) => format!("parse error in {section}"),
        None => "parse error".to_string(),
    };
    anyhow::Error::new(err).context(context)
}

pub fn run(args: &ParseArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let inst = parse_cvrplib(&text).map_err(describe)?;
    let json = serde_json::to_string_pretty(&inst)?;
    std::fs::write(&args.out, json + "\n").with_context(|| format!("writing {}", args.out.display()))?;
    let source = format!("input = {:?}\n", args.input.display().to_string());
    Metadata::new("parse", 0, source).write_sidecar(&args.out)?;
    println!("dimension={} capacity={}", inst.len(), inst.capacity());
    Ok(())
}

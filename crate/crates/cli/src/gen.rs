//! `gen`: synthetic instance datasets.

use std::io::{BufWriter, Write};

use anyhow::Context;
use routing_aos::dataset::{generate_dataset, write_jsonl};
use routing_aos::vrp::SizeClass;
use serde::Serialize;

use crate::config::ConfigError;
use crate::meta::Metadata;
use crate::GenArgs;

#[derive(Serialize)]
struct GenSettings {
    customers: usize,
    count: usize,
    seed: u64,
    capacity: u32,
}

pub fn run(args: &GenArgs) -> anyhow::Result<()> {
    if args.n == 0 {
        return Err(ConfigError("--n: must be at least 1".into()).into());
    }
    if args.capacity == Some(0) {
        return Err(ConfigError("--capacity: must be positive".into()).into());
    }
    let size_class = match args.capacity {
        Some(capacity) => SizeClass::Custom { capacity },
        None => SizeClass::for_customers(args.n),
    };
    let data = generate_dataset(args.n, args.count, size_class, args.seed)?;
    let file = std::fs::File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut out = BufWriter::new(file);
    write_jsonl(&data, &mut out)?;
    out.flush()?;
    let settings = GenSettings {
        customers: args.n,
        count: args.count,
        seed: args.seed,
        capacity: size_class.capacity(),
    };
    let config = toml::to_string(&settings).expect("settings serialize");
    Metadata::new("gen", args.seed, config).write_sidecar(&args.out)?;
    println!("wrote {} instances to {}", data.len(), args.out.display());
    Ok(())
}

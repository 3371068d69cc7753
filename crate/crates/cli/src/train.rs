//! `train`: runs the training loop from a config file.

use std::io::{BufReader, BufWriter};

use anyhow::Context;
use routing_aos::agent::{train, CheckpointTarget, InstanceSource};
use routing_aos::dataset::read_jsonl;

use crate::config::RunConfig;
use crate::meta::Metadata;
use crate::TrainArgs;

pub fn resolve_config(args: &TrainArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::from_toml("")?,
    };
    if let Some(p) = &args.policy {
        cfg.train.policy = p.clone();
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(e) = args.episodes {
        cfg.train.episodes = e;
    }
    if let Some(t) = args.steps {
        cfg.search.steps = t;
    }
    if let Some(n) = args.n {
        cfg.instances.customers = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(args: &TrainArgs) -> anyhow::Result<()> {
    let cfg = resolve_config(args)?;
    let source = match &cfg.instances.dataset {
        Some(path) => {
            let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            InstanceSource::Dataset(read_jsonl(BufReader::new(file))?)
        }
        None => InstanceSource::Generated {
            customers: cfg.instances.customers,
            size_class: cfg.instances.size_class(),
        },
    };
    let meta = Metadata::new("train", cfg.seed, cfg.to_toml());
    let metadata = meta.to_json();
    let log_file = std::fs::File::create(&args.log).with_context(|| format!("creating {}", args.log.display()))?;
    let mut log = BufWriter::new(log_file);
    let target = CheckpointTarget {
        path: &args.out_checkpoint,
        metadata: &metadata,
    };
    let outcome = train(&cfg.train_config(source), &mut log, Some(&target))?;
    drop(log);
    meta.write_sidecar(&args.log)?;
    let last = outcome.log.last().expect("at least one episode");
    println!(
        "trained {} episodes with policy {}; last best cost {:.4}",
        outcome.log.len(),
        cfg.train.policy,
        last.best_cost
    );
    match outcome.model {
        Some(_) => println!("checkpoint: {}", args.out_checkpoint.display()),
        None => println!("policy {} does not learn; no checkpoint written", cfg.train.policy),
    }
    Ok(())
}

//! `eval`: runs policies without learning and writes a results table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use routing_aos::agent::{evaluate, EvalInstance, EvalReport, EvalSummary, OperatorPolicy, PolicyArgs, PolicyRegistry};
use routing_aos::dataset::read_jsonl;
use routing_aos::encoder::{Checkpoint, CheckpointError, GamaModel};
use routing_aos::vrp::parse_cvrplib;
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};
use crate::meta::Metadata;
use crate::parse::{describe, InputError};
use crate::EvalArgs;

fn stored_config(ckpt: &Checkpoint) -> Result<RunConfig, CheckpointError> {
    let meta: Metadata = serde_json::from_str(&ckpt.metadata)
        .map_err(|e| CheckpointError::Format(format!("metadata block: {e}")))?;
    RunConfig::from_toml(&meta.config).map_err(|e| CheckpointError::Format(format!("stored config: {e}")))
}

fn resolve(args: &EvalArgs, ckpt: Option<&Checkpoint>) -> anyhow::Result<RunConfig> {
    let mut cfg = match (&args.config, ckpt) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(c)) => stored_config(c)?,
        (None, None) => RunConfig::from_toml("")?,
    };
    if let Some(t) = args.steps {
        cfg.search.steps = t;
    }
    if let Some(r) = args.runs {
        cfg.eval.runs = r;
    }
    if let Some(m) = args.mode {
        cfg.eval.mode = m;
    }
    if args.threads.is_some() {
        cfg.eval.threads = args.threads;
    }
    if let Some(s) = args.seed {
        cfg.eval.seed = s;
    }
    if args.wall_time {
        cfg.eval.record_wall_time = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Instances from a JSONL dataset (ids are line indices) or one CVRPLib file
/// (id is its name).
pub fn load_instances(path: &Path) -> anyhow::Result<Vec<EvalInstance>> {
    if path.extension().is_some_and(|e| e == "vrp") {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let inst = parse_cvrplib(&text).map_err(describe)?;
        return Ok(vec![EvalInstance {
            id: inst.name().to_string(),
            instance: inst,
            reference_cost: None,
        }]);
    }
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_jsonl(BufReader::new(file))?
        .into_iter()
        .enumerate()
        .map(|(i, item)| EvalInstance {
            id: i.to_string(),
            instance: item.instance,
            reference_cost: None,
        })
        .collect())
}

/// Reference costs keyed by instance id: a JSON object, or CSV lines
/// `instance_id,cost` with an optional header.
pub fn load_refs(path: &Path) -> anyhow::Result<BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        return serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())).into());
    }
    let mut refs = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, cost) = line
            .split_once(',')
            .ok_or_else(|| InputError(format!("{} line {}: expected `id,cost`", path.display(), i + 1)))?;
        match cost.trim().parse::<f64>() {
            Ok(c) => {
                refs.insert(id.trim().to_string(), c);
            }
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(InputError(format!("{} line {}: bad cost `{}`", path.display(), i + 1, cost.trim())).into())
            }
        }
    }
    Ok(refs)
}

#[derive(Serialize)]
struct PolicySummary<'a> {
    policy: &'a str,
    #[serde(flatten)]
    summary: &'a EvalSummary,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    metadata: &'a Metadata,
    dataset: String,
    results: Vec<PolicySummary<'a>>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv(reports: &[(String, EvalReport)]) -> String {
    let mut out = String::from("policy,instance_id,run,initial_cost,best_cost,time_ms,gap_pct\n");
    for (policy, report) in reports {
        for r in &report.records {
            let _ = writeln!(
                out,
                "{policy},{},{},{},{},{},{}",
                r.instance_id,
                r.run,
                r.initial_cost,
                r.best_cost,
                opt(r.time_ms),
                opt(r.gap_pct)
            );
        }
    }
    out
}

pub fn run(args: &EvalArgs) -> anyhow::Result<()> {
    let ckpt = args.checkpoint.as_deref().map(Checkpoint::open).transpose()?;
    let cfg = resolve(args, ckpt.as_ref())?;
    let actions = cfg.actions()?;
    let registry = PolicyRegistry::standard();
    let mut policies = vec![args.policy.clone()];
    policies.extend(args.baseline.clone());
    for p in &policies {
        if !registry.contains(p) {
            let known: Vec<_> = registry.names().collect();
            return Err(ConfigError(format!("--policy: unknown policy `{p}` (known: {})", known.join(", "))).into());
        }
    }
    let model = match ckpt {
        Some(c) if policies.iter().any(|p| p == "gama") => Some(Arc::new(c.into_model(cfg.encoder.clone())?)),
        _ => None,
    };
    if model.is_none() && policies.iter().any(|p| p == "gama") {
        return Err(ConfigError("--checkpoint: required for policy gama".into()).into());
    }

    let mut instances = load_instances(&args.data)?;
    if let Some(path) = &args.refs {
        let refs = load_refs(path)?;
        for item in &mut instances {
            item.reference_cost = refs.get(&item.id).copied();
        }
    }

    let episode = cfg.episode_config(cfg.eval.mode);
    let eval_cfg = cfg.eval_config();
    let mut reports = Vec::new();
    for name in &policies {
        let factory = |model: Option<Arc<GamaModel<f32>>>| {
            let args = PolicyArgs {
                actions: actions.len(),
                model,
                sequence: cfg.train.sequence.clone(),
            };
            move || -> Result<Box<dyn OperatorPolicy>, _> { registry.build(name, &args) }
        };
        let make = factory(model.clone());
        let report = evaluate(&instances, &actions, &make, &episode, &eval_cfg)?;
        reports.push((name.clone(), report));
    }

    std::fs::write(&args.out, csv(&reports)).with_context(|| format!("writing {}", args.out.display()))?;
    let meta = Metadata::new("eval", cfg.eval.seed, cfg.to_toml());
    meta.write_sidecar(&args.out)?;
    let summary_path = args.summary.clone().unwrap_or_else(|| {
        let mut s = args.out.as_os_str().to_owned();
        s.push(".summary.json");
        PathBuf::from(s)
    });
    let summary = SummaryFile {
        metadata: &meta,
        dataset: args.data.display().to_string(),
        results: reports
            .iter()
            .map(|(policy, r)| PolicySummary {
                policy,
                summary: &r.summary,
            })
            .collect(),
    };
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)? + "\n")
        .with_context(|| format!("writing {}", summary_path.display()))?;

    println!("{:<16} {:>9} {:>5} {:>12} {:>12} {:>10} {:>9}", "policy", "instances", "runs", "mean", "best", "std", "gap%");
    for (policy, r) in &reports {
        let s = &r.summary;
        println!(
            "{:<16} {:>9} {:>5} {:>12.4} {:>12.4} {:>10.4} {:>9}",
            policy,
            s.instances,
            s.runs,
            s.mean,
            s.best,
            s.std,
            s.mean_gap_pct.map(|g| format!("{g:.3}")).unwrap_or_else(|| "-".into())
        );
    }
    Ok(())
}

//! Subcommand implementations: resolve settings, run the library call,
//! write outputs + resolved config + digest manifest, print a summary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use cayley_datagen::{
    audit_labels, audit_no_leakage, compose_dataset, parse, serialize, DatasetBundle, Split,
    DEFAULT_PERMS_PER_FAMILY,
};
use cayley_model::{ModelConfig, Params};
use cayley_probe::{
    build_heatmaps, ProbeConfig, DEFAULT_BASE_INPUTS, DEFAULT_MAX_PERMUTATIONS, PROBED_OPERATORS,
    STD_CONVENTION,
};
use cayley_theorems::{verify_theorems, VerifyConfig};
use cayley_trainer::{evaluate, k_sweep, sweep_csv, train, write_artifacts, SweepConfig, TrainConfig};

use crate::artifacts::{write_digests, write_resolved_config};
use crate::cli::{
    AuditArgs, Cli, Command, EvalArgs, GenArgs, ModelFlags, ProbeArgs, SplitArg, SweepArgs,
    TrainArgs, TrainFlags, VerifyArgs,
};
use crate::config::{Meta, ModelSection, RunConfig, Seed, TrainSection};

/// Built-in defaults shared by the subcommands.
const DEFAULT_N: usize = 7;
const DEFAULT_M: usize = 6;
const DEFAULT_K_TRAIN: usize = 50;
const DEFAULT_SWEEP_K_TEST: usize = 1000;
const DEFAULT_SWEEP_KS: [usize; 3] = [300, 1000, 3000];
const DEFAULT_TRIALS: usize = 200;
const DEFAULT_SEED: u64 = 0;

/// Dispatches a parsed invocation.
pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Gen(args) => cmd_gen(&file, args),
        Command::Train(args) => cmd_train(&file, args),
        Command::Sweep(args) => cmd_sweep(&file, args),
        Command::Eval(args) => cmd_eval(&file, args),
        Command::Probe(args) => cmd_probe(&file, args),
        Command::VerifyTheorems(args) => cmd_verify(&file, args),
        Command::Audit(args) => cmd_audit(&file, args),
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn pick_seed(flag: Option<u64>, file: Option<Seed>, default: u64) -> u64 {
    flag.or(file.map(|s| s.0)).unwrap_or(default)
}

fn required_path(flag: Option<PathBuf>, file: Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or(file)
        .ok_or_else(|| anyhow!("missing required {name} (pass the flag or set it in --config)"))
}

fn meta(command: &str) -> Meta {
    Meta {
        command: command.to_string(),
        deterministic: true,
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

fn model_section(cfg: &ModelConfig) -> ModelSection {
    ModelSection {
        layers: Some(cfg.layers),
        heads: Some(cfg.heads),
        d_model: Some(cfg.d_model),
        d_ff: Some(cfg.d_ff),
        context_len: Some(cfg.context_len),
    }
}

fn train_section(cfg: &TrainConfig) -> TrainSection {
    TrainSection {
        learning_rate: Some(cfg.learning_rate),
        batch_size: Some(cfg.batch_size),
        max_steps: Some(cfg.max_steps),
        eval_interval: Some(cfg.eval_interval),
        beta1: Some(cfg.beta1),
        beta2: Some(cfg.beta2),
        epsilon: Some(cfg.epsilon),
        weight_decay: Some(cfg.weight_decay),
        early_stop_evals: Some(cfg.early_stop_evals),
        early_stop_threshold: Some(cfg.early_stop_threshold),
        full_sequence_loss: Some(cfg.full_sequence_loss),
    }
}

fn resolve_model(flags: &ModelFlags, file: Option<&ModelSection>, seed: u64) -> ModelConfig {
    let d = ModelConfig::desk();
    let s = file.cloned().unwrap_or_default();
    ModelConfig {
        layers: flags.layers.or(s.layers).unwrap_or(d.layers),
        heads: flags.heads.or(s.heads).unwrap_or(d.heads),
        d_model: flags.d_model.or(s.d_model).unwrap_or(d.d_model),
        d_ff: flags.d_ff.or(s.d_ff).unwrap_or(d.d_ff),
        context_len: flags.context_len.or(s.context_len).unwrap_or(d.context_len),
        seed,
    }
}

fn resolve_train(flags: &TrainFlags, file: Option<&TrainSection>, seed: u64) -> TrainConfig {
    let d = TrainConfig::default();
    let s = file.cloned().unwrap_or_default();
    TrainConfig {
        learning_rate: flags.learning_rate.or(s.learning_rate).unwrap_or(d.learning_rate),
        batch_size: flags.batch_size.or(s.batch_size).unwrap_or(d.batch_size),
        max_steps: flags.max_steps.or(s.max_steps).unwrap_or(d.max_steps),
        eval_interval: flags.eval_interval.or(s.eval_interval).unwrap_or(d.eval_interval),
        beta1: flags.beta1.or(s.beta1).unwrap_or(d.beta1),
        beta2: flags.beta2.or(s.beta2).unwrap_or(d.beta2),
        epsilon: flags.epsilon.or(s.epsilon).unwrap_or(d.epsilon),
        weight_decay: flags.weight_decay.or(s.weight_decay).unwrap_or(d.weight_decay),
        seed,
        early_stop_evals: flags
            .early_stop_evals
            .or(s.early_stop_evals)
            .unwrap_or(d.early_stop_evals),
        early_stop_threshold: flags
            .early_stop_threshold
            .or(s.early_stop_threshold)
            .unwrap_or(d.early_stop_threshold),
        full_sequence_loss: flags
            .full_sequence_loss
            .or(s.full_sequence_loss)
            .unwrap_or(d.full_sequence_loss),
    }
}

// -------------------------------------------------------------------- gen

fn cmd_gen(file: &RunConfig, args: GenArgs) -> Result<()> {
    let n = pick(args.n, file.n, DEFAULT_N);
    let m = pick(args.m, file.m, DEFAULT_M);
    let k_train = pick(args.k_train, file.k_train, DEFAULT_K_TRAIN);
    let k_test = args.k_test.or(file.k_test).unwrap_or(k_train);
    let perms = pick(
        args.perms_per_family,
        file.perms_per_family,
        DEFAULT_PERMS_PER_FAMILY,
    );
    let seed = pick_seed(args.seed, file.seed, DEFAULT_SEED);
    let out = pick(args.out, file.out.clone(), PathBuf::from("out/dataset"));

    let bundle = compose_dataset(n, m, k_train, k_test, perms, seed)?;
    serialize(&bundle, &out)?;

    let resolved = RunConfig {
        meta: Some(meta("gen")),
        n: Some(n),
        m: Some(m),
        k_train: Some(k_train),
        k_test: Some(k_test),
        perms_per_family: Some(perms),
        seed: Some(Seed(seed)),
        out: Some(out.clone()),
        ..RunConfig::default()
    };
    write_resolved_config(&out, &resolved)?;
    write_digests(&out)?;

    println!(
        "gen: wrote {} (train {} rows, test {} rows)",
        out.display(),
        bundle.train.len(),
        bundle.test.len()
    );
    Ok(())
}

// ------------------------------------------------------------------ train

fn cmd_train(file: &RunConfig, args: TrainArgs) -> Result<()> {
    let data = required_path(args.data, file.data.clone(), "--data")?;
    let seed = pick_seed(args.seed, file.seed, DEFAULT_SEED);
    let out = pick(args.out, file.out.clone(), PathBuf::from("out/train"));
    let model_cfg = resolve_model(&args.model, file.model.as_ref(), seed);
    let train_cfg = resolve_train(&args.train, file.train.as_ref(), seed);

    let bundle = parse(&data).with_context(|| format!("loading dataset {}", data.display()))?;
    let trained = train(&train_cfg, &model_cfg, &bundle)?;
    write_artifacts(&out, &trained)?;

    let resolved = RunConfig {
        meta: Some(meta("train")),
        n: Some(bundle.manifest.n),
        m: Some(bundle.manifest.m),
        seed: Some(Seed(seed)),
        data: Some(data),
        out: Some(out.clone()),
        model: Some(model_section(&model_cfg)),
        train: Some(train_section(&train_cfg)),
        ..RunConfig::default()
    };
    write_resolved_config(&out, &resolved)?;
    write_digests(&out)?;

    let last = trained
        .history
        .records
        .last()
        .expect("training always records at least the initial evaluation");
    println!(
        "train: {} steps (early stop: {}), artifacts in {}",
        trained.steps_run,
        trained.early_stopped,
        out.display()
    );
    println!("final train all {:.6}", last.train.overall.value());
    println!("final test all {:.6}", last.test.overall.value());
    for (tag, acc) in &last.test.per_tag {
        println!("final test {} {:.6}", tag.name(), acc.value());
    }
    Ok(())
}

// ------------------------------------------------------------------ sweep

fn cmd_sweep(file: &RunConfig, args: SweepArgs) -> Result<()> {
    let n = pick(args.n, file.n, DEFAULT_N);
    let m = pick(args.m, file.m, DEFAULT_M);
    let k_values = pick(
        args.k_values,
        file.k_values.clone(),
        DEFAULT_SWEEP_KS.to_vec(),
    );
    let k_test = pick(args.k_test, file.k_test, DEFAULT_SWEEP_K_TEST);
    let perms = pick(
        args.perms_per_family,
        file.perms_per_family,
        DEFAULT_PERMS_PER_FAMILY,
    );
    let seed = pick_seed(args.seed, file.seed, DEFAULT_SEED);
    let data_seed = pick_seed(args.data_seed, file.data_seed, seed);
    let out = pick(args.out, file.out.clone(), PathBuf::from("out/sweep"));
    let model_cfg = resolve_model(&args.model, file.model.as_ref(), seed);
    let train_cfg = resolve_train(&args.train, file.train.as_ref(), seed);

    let base = SweepConfig {
        n,
        m,
        k_test,
        perms_per_family: perms,
        data_seed,
        train: train_cfg,
        model: model_cfg,
    };
    let entries = k_sweep(&k_values, &base)?;

    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    for entry in &entries {
        write_artifacts(&out.join(format!("k{}", entry.k)), &entry.trained)?;
    }
    fs::write(out.join("sweep.csv"), sweep_csv(&entries)).context("writing sweep.csv")?;

    let resolved = RunConfig {
        meta: Some(meta("sweep")),
        n: Some(n),
        m: Some(m),
        k_values: Some(k_values.clone()),
        k_test: Some(k_test),
        perms_per_family: Some(perms),
        seed: Some(Seed(seed)),
        data_seed: Some(Seed(data_seed)),
        out: Some(out.clone()),
        model: Some(model_section(&base.model)),
        train: Some(train_section(&train_cfg)),
        ..RunConfig::default()
    };
    write_resolved_config(&out, &resolved)?;
    write_digests(&out)?;

    println!("sweep: wrote {} scales to {}", entries.len(), out.display());
    for entry in &entries {
        let last = entry
            .trained
            .history
            .records
            .last()
            .expect("training always records at least the initial evaluation");
        println!("k={} test all {:.6}", entry.k, last.test.overall.value());
    }
    Ok(())
}

// ------------------------------------------------------------------- eval

fn eval_csv(rows: &[(Split, &cayley_trainer::EvalResult)]) -> String {
    let mut out = String::from("split,tag,accuracy,correct,total\n");
    for (split, result) in rows {
        for (tag, acc) in &result.per_tag {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                split.name(),
                tag.name(),
                acc.value(),
                acc.correct,
                acc.total
            ));
        }
        out.push_str(&format!(
            "{},all,{},{},{}\n",
            split.name(),
            result.overall.value(),
            result.overall.correct,
            result.overall.total
        ));
    }
    out
}

fn check_compatible(params: &Params, bundle: &DatasetBundle) -> Result<()> {
    if params.vocab.n() != bundle.manifest.n || params.vocab.m() != bundle.manifest.m {
        bail!(
            "checkpoint is for Z_{} M={}, dataset is Z_{} M={}",
            params.vocab.n(),
            params.vocab.m(),
            bundle.manifest.n,
            bundle.manifest.m
        );
    }
    Ok(())
}

fn cmd_eval(file: &RunConfig, args: EvalArgs) -> Result<()> {
    let checkpoint = required_path(args.checkpoint, file.checkpoint.clone(), "--checkpoint")?;
    let data = required_path(args.data, file.data.clone(), "--data")?;
    let split = match args.split {
        Some(s) => s,
        None => match file.split.as_deref() {
            Some("train") => SplitArg::Train,
            Some("test") => SplitArg::Test,
            Some("both") | None => SplitArg::Both,
            Some(other) => bail!("unknown split `{other}` (expected train, test, or both)"),
        },
    };
    let batch_size = pick(args.batch_size, file.batch_size, 64);

    let params = Params::load(&checkpoint)
        .with_context(|| format!("loading checkpoint {}", checkpoint.display()))?;
    let bundle = parse(&data).with_context(|| format!("loading dataset {}", data.display()))?;
    check_compatible(&params, &bundle)?;

    let splits: &[Split] = match split {
        SplitArg::Train => &[Split::Train],
        SplitArg::Test => &[Split::Test],
        SplitArg::Both => &[Split::Train, Split::Test],
    };
    let mut results = Vec::new();
    for &s in splits {
        results.push((s, evaluate(&params, &bundle, s, batch_size)?));
    }
    for (s, result) in &results {
        for (tag, acc) in &result.per_tag {
            println!(
                "{} {} {:.6} ({}/{})",
                s.name(),
                tag.name(),
                acc.value(),
                acc.correct,
                acc.total
            );
        }
        println!(
            "{} all {:.6} ({}/{})",
            s.name(),
            result.overall.value(),
            result.overall.correct,
            result.overall.total
        );
    }

    if let Some(out) = args.out.or(file.out.clone()) {
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        let rows: Vec<(Split, &cayley_trainer::EvalResult)> =
            results.iter().map(|(s, r)| (*s, r)).collect();
        fs::write(out.join("eval.csv"), eval_csv(&rows)).context("writing eval.csv")?;
        let resolved = RunConfig {
            meta: Some(meta("eval")),
            n: Some(bundle.manifest.n),
            m: Some(bundle.manifest.m),
            checkpoint: Some(checkpoint),
            data: Some(data),
            split: Some(
                match split {
                    SplitArg::Train => "train",
                    SplitArg::Test => "test",
                    SplitArg::Both => "both",
                }
                .to_string(),
            ),
            batch_size: Some(batch_size),
            out: Some(out.clone()),
            ..RunConfig::default()
        };
        write_resolved_config(&out, &resolved)?;
        write_digests(&out)?;
    }
    Ok(())
}

// ------------------------------------------------------------------ probe

/// Metadata written next to the probe matrices; states the conventions a
/// reader needs to interpret the numbers.
#[derive(Serialize)]
struct ProbeMeta {
    /// Standard-deviation convention of `s_com` (population: divide by N).
    std_convention: String,
    /// Metric identifiers, in matrix order.
    metrics: Vec<String>,
    /// Operator spellings `+` is compared against, in matrix order.
    probed_operators: Vec<String>,
    /// Hidden states are read at this token (the `=` position by default).
    readout: String,
    n: usize,
    m: usize,
    base_inputs: usize,
    max_permutations: usize,
    seed: Seed,
    #[serde(skip_serializing_if = "Option::is_none")]
    position: Option<usize>,
    k_values: Vec<usize>,
    checkpoints: BTreeMap<String, String>,
}

fn scan_checkpoints(dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let mut found = Vec::new();
    for entry in
        fs::read_dir(dir).with_context(|| format!("listing checkpoints in {}", dir.display()))?
    {
        let path = entry?.path();
        if !path.is_dir() {
            continue;
        }
        let Some(name) = path.file_name().and_then(|s| s.to_str()) else {
            continue;
        };
        let Some(k) = name.strip_prefix('k').and_then(|d| d.parse::<usize>().ok()) else {
            continue;
        };
        let ckpt = path.join("model.ckpt");
        if ckpt.is_file() {
            found.push((k, ckpt));
        }
    }
    if found.is_empty() {
        bail!(
            "no k<K>/model.ckpt checkpoints under {} (expected a sweep output directory)",
            dir.display()
        );
    }
    found.sort_unstable_by_key(|(k, _)| *k);
    Ok(found)
}

fn cmd_probe(file: &RunConfig, args: ProbeArgs) -> Result<()> {
    let dir = required_path(args.checkpoints, file.checkpoints.clone(), "--checkpoints")?;
    let out = pick(args.out, file.out.clone(), PathBuf::from("out/probe"));
    let seed = pick_seed(args.seed, file.seed, DEFAULT_SEED);
    let svg = pick(args.svg, file.svg, true);

    let located = scan_checkpoints(&dir)?;
    let mut checkpoints = Vec::with_capacity(located.len());
    for (k, path) in &located {
        let params = Params::load(path)
            .with_context(|| format!("loading checkpoint {}", path.display()))?;
        checkpoints.push((*k, params));
    }
    let first = &checkpoints[0].1;
    let n = first.vocab.n();
    let m = pick(args.m, file.m, first.vocab.m());

    let config = ProbeConfig {
        n,
        m,
        base_inputs: pick(args.base_inputs, file.base_inputs, DEFAULT_BASE_INPUTS),
        max_permutations: pick(
            args.max_permutations,
            file.max_permutations,
            DEFAULT_MAX_PERMUTATIONS,
        ),
        seed,
        position: args.position.or(file.position),
    };
    let matrices = build_heatmaps(&checkpoints, &config)?;

    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    for matrix in &matrices {
        let stem = matrix.file_stem();
        fs::write(out.join(format!("{stem}.csv")), matrix.to_csv())
            .with_context(|| format!("writing {stem}.csv"))?;
        if svg {
            fs::write(out.join(format!("{stem}.svg")), matrix.to_svg())
                .with_context(|| format!("writing {stem}.svg"))?;
        }
    }

    let meta_table = ProbeMeta {
        std_convention: STD_CONVENTION.to_string(),
        metrics: vec!["s_com".to_string(), "s_ide".to_string()],
        probed_operators: PROBED_OPERATORS.iter().map(|op| op.token().to_string()).collect(),
        readout: match config.position {
            Some(p) => format!("position {p}"),
            None => "equals token".to_string(),
        },
        n,
        m,
        base_inputs: config.base_inputs,
        max_permutations: config.max_permutations,
        seed: Seed(seed),
        position: config.position,
        k_values: located.iter().map(|(k, _)| *k).collect(),
        checkpoints: located
            .iter()
            .map(|(k, path)| (format!("k{k}"), path.display().to_string()))
            .collect(),
    };
    fs::write(
        out.join("probe_meta.toml"),
        toml::to_string_pretty(&meta_table).context("serializing probe metadata")?,
    )
    .context("writing probe_meta.toml")?;

    let resolved = RunConfig {
        meta: Some(meta("probe")),
        n: Some(n),
        m: Some(m),
        seed: Some(Seed(seed)),
        checkpoints: Some(dir),
        base_inputs: Some(config.base_inputs),
        max_permutations: Some(config.max_permutations),
        position: config.position,
        svg: Some(svg),
        out: Some(out.clone()),
        ..RunConfig::default()
    };
    write_resolved_config(&out, &resolved)?;
    write_digests(&out)?;

    println!(
        "probe: wrote {} matrices for K = {:?} to {}",
        matrices.len(),
        meta_table.k_values,
        out.display()
    );
    Ok(())
}

// ------------------------------------------------------- verify-theorems

fn cmd_verify(file: &RunConfig, args: VerifyArgs) -> Result<()> {
    let config = VerifyConfig {
        n: pick(args.n, file.n, DEFAULT_N),
        m: pick(args.m, file.m, DEFAULT_M),
        trials: pick(args.trials, file.trials, DEFAULT_TRIALS),
        seed: pick_seed(args.seed, file.seed, DEFAULT_SEED),
    };
    let report = verify_theorems(config)?;
    print!("{report}");

    if let Some(out) = args.out.or(file.out.clone()) {
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        fs::write(out.join("verification.txt"), format!("{report}"))
            .context("writing verification.txt")?;
        let resolved = RunConfig {
            meta: Some(meta("verify-theorems")),
            n: Some(config.n),
            m: Some(config.m),
            trials: Some(config.trials),
            seed: Some(Seed(config.seed)),
            out: Some(out.clone()),
            ..RunConfig::default()
        };
        write_resolved_config(&out, &resolved)?;
        write_digests(&out)?;
    }

    if !report.passed {
        bail!("theorem verification failed");
    }
    Ok(())
}

// ------------------------------------------------------------------ audit

fn cmd_audit(file: &RunConfig, args: AuditArgs) -> Result<()> {
    let data = required_path(args.data, file.data.clone(), "--data")?;
    let bundle = parse(&data).with_context(|| format!("loading dataset {}", data.display()))?;

    let mut report = audit_no_leakage(&bundle);
    let labels = audit_labels(&bundle)?;
    report.violations.extend(labels.violations);
    print!("{report}");

    if !report.is_clean() {
        bail!("audit found {} violation(s)", report.violations.len());
    }
    Ok(())
}

//! Command-line front end. Structured output goes to stdout as JSON, logs to
//! stderr (level from `BOXKB_LOG`).
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 training or
//! construction failure, 3 `rules verify` found a rule that is not captured.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport, DEFAULT_KS};
use crate::expressiveness::{fit, TruthTable};
use crate::kb::{parse_kb_str, parse_kb_str_with_vocab, DataFormat, Split, Vocabulary};
use crate::model::{BranchMode, NormOrder};
use crate::rules::{
    apply_projection, box_stats, check_capture, check_consistency, deductive_closure, inject, parse_rules_open,
    parse_rules_str, Rule, RuleOptions,
};
use crate::training::{initial_params, TrainConfig, Trainer};

#[derive(Parser, Debug)]
#[command(name = "boxkb", version, about = "Box embeddings for knowledge-base completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model; prints one JSON metrics object per epoch.
    Train(TrainArgs),
    /// Rank a split against all corruptions with a saved checkpoint.
    Eval(EvalArgs),
    /// Build a model that classifies a truth table exactly.
    FitExact(FitArgs),
    /// Rule tooling.
    #[command(subcommand)]
    Rules(RulesCommand),
    /// Per-box size and overlap report for a checkpoint.
    BoxStats {
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum RulesCommand {
    /// Print the deductive closure of a rule file.
    Closure {
        #[arg(long)]
        rules: PathBuf,
        /// Resolve relation names against this checkpoint's vocabulary.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Check every rule's geometric capture condition on a checkpoint.
    Verify {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
    },
    /// Check consistency and dry-run injection on random boxes.
    InjectCheck {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug, Default)]
struct TrainArgs {
    /// Flat TOML file with any of the run settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    valid: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// tsv-triple or tsv-nary
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    norm_order: Option<u8>,
    #[arg(long)]
    bounded: Option<bool>,
    /// per-point or per-dimension
    #[arg(long)]
    branch: Option<String>,
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    adversarial_temperature: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    augment_inverses: bool,
    #[arg(long)]
    filter_negatives: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    valid: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value = "tsv-triple")]
    format: String,
    #[arg(long, default_value = "test")]
    split: String,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS)]
    ks: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Lines of relation, entities and 1/0, tab separated.
    #[arg(long)]
    table: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Everything a training run needs; serialized as flat TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: Option<PathBuf>,
    pub valid: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub format: String,
    pub dim: usize,
    pub norm_order: u8,
    pub bounded: bool,
    pub branch: BranchMode,
    pub rules: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub augment_inverses: bool,
    pub learning_rate: f64,
    pub margin: f64,
    pub negatives: usize,
    pub adversarial_temperature: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub checkpoint_every: usize,
    pub filter_negatives: bool,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        RunConfig {
            train: None,
            valid: None,
            test: None,
            format: DataFormat::TsvTriple.to_string(),
            dim: 20,
            norm_order: 1,
            bounded: true,
            branch: BranchMode::PerPoint,
            rules: None,
            out_dir: PathBuf::from("out"),
            augment_inverses: false,
            learning_rate: t.learning_rate,
            margin: t.margin,
            negatives: t.negatives,
            adversarial_temperature: t.adversarial_temperature,
            batch_size: t.batch_size,
            epochs: t.epochs,
            seed: t.seed,
            checkpoint_every: t.checkpoint_every,
            filter_negatives: t.filter_negatives,
            workers: t.workers,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            margin: self.margin,
            negatives: self.negatives,
            adversarial_temperature: self.adversarial_temperature,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
            checkpoint_every: self.checkpoint_every,
            filter_negatives: self.filter_negatives,
            workers: self.workers,
        }
    }

    pub fn norm(&self) -> Result<NormOrder> {
        NormOrder::try_from(self.norm_order)
    }

    pub fn data_format(&self) -> Result<DataFormat> {
        self.format.parse().map_err(|_| Error::Config(format!("unknown data format `{}`", self.format)))
    }

    /// Checks values and makes every path absolute.
    pub fn validate(&mut self) -> Result<()> {
        self.train_config().validate()?;
        self.norm()?;
        self.data_format()?;
        if self.dim == 0 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if self.train.is_none() {
            return Err(Error::Config("no training file given".into()));
        }
        for path in [&mut self.train, &mut self.valid, &mut self.test, &mut self.rules]
            .into_iter()
            .flatten()
        {
            *path = std::fs::canonicalize(&*path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        }
        if self.out_dir.is_relative() {
            self.out_dir = std::env::current_dir()
                .map_err(|e| Error::io(".", e))?
                .join(&self.out_dir);
        }
        Ok(())
    }

    fn apply(&mut self, a: TrainArgs) -> Result<()> {
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = a.$field { self.$target = v; })*
            };
        }
        set!(dim => dim, norm_order => norm_order, bounded => bounded, format => format,
             learning_rate => learning_rate, margin => margin, negatives => negatives,
             adversarial_temperature => adversarial_temperature, batch_size => batch_size,
             epochs => epochs, seed => seed, checkpoint_every => checkpoint_every,
             workers => workers, out => out_dir);
        if a.train.is_some() {
            self.train = a.train;
        }
        if a.valid.is_some() {
            self.valid = a.valid;
        }
        if a.test.is_some() {
            self.test = a.test;
        }
        if a.rules.is_some() {
            self.rules = a.rules;
        }
        if let Some(b) = a.branch {
            self.branch = match b.as_str() {
                "per-point" => BranchMode::PerPoint,
                "per-dimension" => BranchMode::PerDimension,
                other => return Err(Error::Config(format!("unknown branch mode `{other}`"))),
            };
        }
        self.augment_inverses |= a.augment_inverses;
        self.filter_negatives |= a.filter_negatives;
        Ok(())
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("BOXKB_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::FitExact(a) => cmd_fit_exact(a),
        Command::Rules(c) => cmd_rules(c),
        Command::BoxStats { checkpoint } => cmd_box_stats(&checkpoint),
    };
    match outcome {
        Ok(code) => code,
        Err((code, err)) => {
            eprintln!("error: {err}");
            code
        }
    }
}

type CmdResult = std::result::Result<i32, (i32, Error)>;

trait ExitWith<T> {
    fn exit(self, code: i32) -> std::result::Result<T, (i32, Error)>;
}

impl<T> ExitWith<T> for Result<T> {
    fn exit(self, code: i32) -> std::result::Result<T, (i32, Error)> {
        self.map_err(|e| (code, e))
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn read_optional(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e)),
        None => Ok(String::new()),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn load_run_config(args: TrainArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let mut c = RunConfig::from_toml(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?;
            // Paths in a config file are relative to the file.
            let dir = path.parent().unwrap_or(Path::new(""));
            for p in [&mut c.train, &mut c.valid, &mut c.test, &mut c.rules].into_iter().flatten() {
                *p = dir.join(&*p);
            }
            c.out_dir = dir.join(&c.out_dir);
            c
        }
        None => RunConfig::default(),
    };
    config.apply(args)?;
    config.validate()?;
    Ok(config)
}

#[derive(Serialize)]
struct EvalLine<'a> {
    epoch: usize,
    eval: &'a EvalReport,
}

#[derive(Serialize)]
struct TrainSummary {
    best_epoch: usize,
    best_mrr: f64,
    duplicate_negatives: usize,
}

fn cmd_train(args: TrainArgs) -> CmdResult {
    let config = load_run_config(args).exit(1)?;
    let format = config.data_format().exit(1)?;
    let kb = parse_kb_str(
        &read_optional(config.train.as_deref()).exit(1)?,
        &read_optional(config.valid.as_deref()).exit(1)?,
        &read_optional(config.test.as_deref()).exit(1)?,
        format,
    )
    .exit(1)?;
    let kb = if config.augment_inverses {
        kb.augment_inverses().exit(1)?
    } else {
        kb
    };
    let mut params = initial_params(kb.vocab(), config.dim, config.norm().exit(1)?, config.bounded, config.seed);
    params.set_branch(config.branch);
    let projection = match &config.rules {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e)).exit(1)?;
            let rules = parse_rules_str(&text, kb.vocab(), RuleOptions { allow_nary: true }).exit(1)?;
            let injection = inject(&mut params, kb.vocab(), &rules).exit(1)?;
            log::info!(
                "injected {} rules: {} shared slot classes, {} containments, {} initial bound moves",
                rules.len(),
                injection.sharing.classes.len(),
                injection.projection.constraints.len(),
                injection.initial_growth
            );
            Some(injection.projection)
        }
        None => None,
    };

    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::io(&config.out_dir, e))
        .exit(1)?;
    write_file(&config.out_dir.join("config.toml"), &config.to_toml().exit(1)?).exit(1)?;

    let train_config = config.train_config();
    let mut trainer = Trainer::new(params, train_config.clone(), projection).exit(1)?;
    let select = if kb.valid().is_empty() { Split::Train } else { Split::Valid };
    let mut best = (0usize, f64::NEG_INFINITY);
    let checkpoint_step = |trainer: &Trainer, epoch: usize, best: &mut (usize, f64)| -> Result<()> {
        let report = evaluate(&trainer.params, &kb, select, &DEFAULT_KS, train_config.workers)?;
        print_json(&EvalLine { epoch, eval: &report })?;
        let ck = Checkpoint::new(kb.vocab().clone(), trainer.params.clone());
        ck.save(&config.out_dir.join("last.json"))?;
        if report.mrr > best.1 {
            *best = (epoch, report.mrr);
            ck.save(&config.out_dir.join("best.json"))?;
        }
        Ok(())
    };
    if train_config.epochs == 0 {
        checkpoint_step(&trainer, 0, &mut best).exit(2)?;
    }
    for _ in 0..train_config.epochs {
        let metrics = trainer.run_epoch(&kb).exit(2)?;
        print_json(&metrics).exit(2)?;
        let epoch = metrics.epoch;
        if epoch % train_config.checkpoint_every == 0 || epoch == train_config.epochs {
            checkpoint_step(&trainer, epoch, &mut best).exit(2)?;
        }
    }
    print_json(&TrainSummary {
        best_epoch: best.0,
        best_mrr: best.1,
        duplicate_negatives: trainer.duplicate_negatives(),
    })
    .exit(2)?;
    Ok(0)
}

fn load_checkpoint(path: &Path) -> std::result::Result<Checkpoint, (i32, Error)> {
    Checkpoint::load(path).exit(1)
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    let ck = load_checkpoint(&args.checkpoint)?;
    let format: DataFormat = args.format.parse().exit(1)?;
    let split: Split = args.split.parse().exit(1)?;
    let (train, valid, test) = (
        read_optional(args.train.as_deref()).exit(1)?,
        read_optional(args.valid.as_deref()).exit(1)?,
        read_optional(args.test.as_deref()).exit(1)?,
    );
    let kb = parse_kb_str_with_vocab(ck.vocab.clone(), &train, &valid, &test, format).exit(1)?;
    let report = evaluate(&ck.params, &kb, split, &args.ks, args.workers).exit(1)?;
    print_json(&report).exit(1)?;
    Ok(0)
}

fn cmd_fit_exact(args: FitArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.table)
        .map_err(|e| Error::io(&args.table, e))
        .exit(1)?;
    let table = TruthTable::parse(&text).exit(1)?;
    let model = fit(&table).map_err(|e| {
        let code = if matches!(e, Error::Unsupported(_)) { 1 } else { 2 };
        (code, e)
    })?;
    let report = model.report(&table).exit(2)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e)).exit(1)?;
    let vocab = model.vocab().clone();
    Checkpoint::new(vocab, model.into_params())
        .save(&args.out.join("checkpoint.json"))
        .exit(1)?;
    let json = serde_json::to_string(&report).map_err(Error::from).exit(1)?;
    write_file(&args.out.join("report.json"), &(json.clone() + "\n")).exit(1)?;
    println!("{json}");
    Ok(if report.exact { 0 } else { 2 })
}

fn rules_for(path: &Path, vocab: Option<&Vocabulary>) -> Result<(Vocabulary, Vec<Rule>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match vocab {
        Some(v) => Ok((v.clone(), parse_rules_str(&text, v, RuleOptions { allow_nary: true })?)),
        None => parse_rules_open(&text),
    }
}

#[derive(Serialize)]
struct ClosureOutput {
    input: Vec<String>,
    closure: Vec<String>,
}

#[derive(Serialize)]
struct VerifyLine {
    rule: String,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<crate::rules::Witness>,
}

#[derive(Serialize)]
struct InjectCheckOutput {
    consistent: bool,
    shared_classes: Vec<Vec<String>>,
    containments: usize,
    initial_growth: usize,
    second_pass_growth: usize,
}

fn cmd_rules(cmd: RulesCommand) -> CmdResult {
    match cmd {
        RulesCommand::Closure { rules, checkpoint } => {
            let ck = checkpoint.as_deref().map(load_checkpoint).transpose()?;
            let (vocab, rules) = rules_for(&rules, ck.as_ref().map(|c| &c.vocab)).exit(1)?;
            let show = |rs: &[Rule]| rs.iter().map(|r| r.display(&vocab).to_string()).collect();
            print_json(&ClosureOutput {
                input: show(&rules),
                closure: show(&deductive_closure(&rules)),
            })
            .exit(1)?;
            Ok(0)
        }
        RulesCommand::Verify { rules, checkpoint, eps } => {
            let ck = load_checkpoint(&checkpoint)?;
            let (vocab, rules) = rules_for(&rules, Some(&ck.vocab)).exit(1)?;
            let mut all = true;
            let mut lines = Vec::new();
            for rule in &rules {
                let (status, witness) = match check_capture(&ck.params, rule, eps) {
                    Ok(c) if c.captured => ("pass", c.witness),
                    Ok(c) => {
                        all = false;
                        ("fail", c.witness)
                    }
                    Err(Error::Unsupported(_)) => ("unsupported", None),
                    Err(e) => return Err((1, e)),
                };
                lines.push(VerifyLine {
                    rule: rule.display(&vocab).to_string(),
                    status,
                    witness,
                });
            }
            print_json(&lines).exit(1)?;
            Ok(if all { 0 } else { 3 })
        }
        RulesCommand::InjectCheck { rules, dim, seed } => {
            let (mut vocab, rules) = rules_for(&rules, None).exit(1)?;
            if dim == 0 {
                return Err((1, Error::Config("dim must be at least 1".into())));
            }
            check_consistency(&rules, &vocab).map_err(|c| (1, Error::Inconsistent(c)))?;
            vocab.intern_entity("x");
            let mut params = initial_params(&vocab, dim, NormOrder::L1, true, seed);
            let injection = inject(&mut params, &vocab, &rules).exit(1)?;
            let second = apply_projection(&mut params, &injection.projection).exit(2)?;
            let shared_classes = injection
                .sharing
                .classes
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|(r, p)| format!("{}[{}]", vocab.relation_name(*r), p))
                        .collect()
                })
                .collect();
            print_json(&InjectCheckOutput {
                consistent: true,
                shared_classes,
                containments: injection.projection.constraints.len(),
                initial_growth: injection.initial_growth,
                second_pass_growth: second,
            })
            .exit(1)?;
            Ok(0)
        }
    }
}

fn cmd_box_stats(path: &Path) -> CmdResult {
    let ck = load_checkpoint(path)?;
    print_json(&box_stats(&ck.params, &ck.vocab)).exit(1)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrip_and_overrides() {
        let text = "dim = 8\nlearning_rate = 0.5\nepochs = 3\ntrain = \"a.tsv\"\n";
        let mut config = RunConfig::from_toml(text).unwrap();
        assert_eq!((config.dim, config.epochs, config.norm_order), (8, 3, 1));
        config
            .apply(TrainArgs {
                dim: Some(4),
                augment_inverses: true,
                ..TrainArgs::default()
            })
            .unwrap();
        assert_eq!(config.dim, 4);
        assert!(config.augment_inverses);
        let again = RunConfig::from_toml(&config.to_toml().unwrap()).unwrap();
        assert_eq!(again, config);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunConfig::from_toml("dimm = 3"), Err(Error::Config(_))));
    }

    #[test]
    fn help_exits_zero() {
        for args in [vec!["boxkb", "--help"], vec!["boxkb", "train", "--help"], vec!["boxkb", "rules", "verify", "--help"]] {
            assert_eq!(run(args), 0);
        }
        assert_eq!(run(["boxkb", "nonsense"]), 1);
    }
}

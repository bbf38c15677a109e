//! `lre`: generate corpora, split them, train, augment, score and compare.
//!
//! On failure the first stderr line is `error[<Class>]: <message>`. The
//! exit code is 2 for command-line usage errors and 1 for everything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lre_core::cda::{augment_pool, NgramFillModel, SpanSamplerConfig};
use lre_core::data::{generate_synthetic, read_corpus, stratified_split, write_corpus, Corpus, PresetName, SplitSpec};
use lre_core::eval::evaluate;
use lre_core::experiment::{run_experiment, write_report, ExperimentConfig, Mode};
use lre_core::model::{labeled_encodings, read_checkpoint};
use lre_core::{Error, Result};

#[derive(Parser)]
#[command(name = "lre", version, about = "Low-resource relation classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus with hidden gold labels.
    GenCorpus {
        #[arg(long, default_value = "semeval-like")]
        preset: PresetName,
        #[arg(long, default_value_t = 4000)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stratified labeled / unlabeled / test split of a corpus.
    Split {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        labeled: f64,
        #[arg(long, default_value_t = 0.5)]
        unlabeled: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run an experiment config, one run per seed.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's mode.
        #[arg(long)]
        mode: Option<Mode>,
        /// Overrides the config's seeds (comma separated).
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Manufacture an unlabeled pool from labeled mentions.
    Augment {
        #[arg(long)]
        labeled: PathBuf,
        #[arg(long)]
        n_out: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        sampler: SamplerArgs,
    },
    /// Score a checkpoint on a labeled corpus (F1 without no_relation).
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Compare finished runs and export plot and PCA series.
    Report {
        /// Output directories of `train` runs.
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SamplerArgs {
    #[arg(long, default_value_t = 0.15)]
    budget_fraction: f64,
    #[arg(long, default_value_t = 0.2)]
    geo_p: f64,
    #[arg(long, default_value_t = 1)]
    min_len: usize,
    #[arg(long, default_value_t = 10)]
    max_len: usize,
    #[arg(long, default_value_t = 30)]
    max_attempts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl From<SamplerArgs> for SpanSamplerConfig {
    fn from(a: SamplerArgs) -> Self {
        SpanSamplerConfig {
            budget_fraction: a.budget_fraction,
            geo_p: a.geo_p,
            min_len: a.min_len,
            max_len: a.max_len,
            max_attempts: a.max_attempts,
            seed: a.seed,
        }
    }
}

fn inventory_summary(corpus: &Corpus) -> String {
    let inv = corpus.inventory();
    let mut s = format!("{} mentions, {} labels\n", corpus.len(), inv.len());
    for (id, n) in inv.ids().zip(corpus.class_counts()) {
        s.push_str(&format!("{n:>7}  {}\n", inv.name(id)));
    }
    s
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenCorpus { preset, n, seed, out } => {
            let corpus = generate_synthetic(preset, n, seed)?;
            write_corpus(&corpus, &out)?;
            print!("{}", inventory_summary(&corpus));
        }
        Command::Split {
            corpus,
            labeled,
            unlabeled,
            seed,
            out_dir,
        } => {
            let spec = SplitSpec::new(labeled, unlabeled, seed)?;
            let c = read_corpus(&corpus)?;
            let split = stratified_split(&c, &spec).map_err(|e| e.with_path(&corpus))?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            for (name, part) in [
                ("labeled", &split.labeled),
                ("unlabeled", &split.unlabeled),
                ("test", &split.rest),
            ] {
                write_corpus(part, out_dir.join(format!("{name}.jsonl")))?;
                println!("{name}: {} mentions", part.len());
            }
        }
        Command::Train {
            config,
            mode,
            seeds,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(m) = mode {
                cfg.mode = m;
                if m == Mode::GradlreCda && cfg.cda.is_none() {
                    cfg.cda = Some(SpanSamplerConfig::default());
                }
            }
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let logs = run_experiment(&cfg).map_err(|e| e.with_path(&config))?;
            for log in logs {
                let f1 = |r: Option<lre_core::eval::F1Report>| {
                    r.map(|r| format!("{:.4}", r.f1)).unwrap_or_else(|| "-".into())
                };
                println!(
                    "{} seed {}: test F1 {} (pretrained {}), pseudo-label F1 {}",
                    log.meta.mode,
                    log.meta.seed,
                    f1(log.final_test),
                    f1(log.pretrain_test),
                    f1(log.final_pseudo)
                );
            }
        }
        Command::Augment {
            labeled,
            n_out,
            out,
            sampler,
        } => {
            let c = read_corpus(&labeled)?;
            let model = NgramFillModel::train(&c).map_err(|e| e.with_path(&labeled))?;
            let pool = augment_pool(&c, n_out, &sampler.into(), &model).map_err(|e| e.with_path(&labeled))?;
            write_corpus(&pool, &out)?;
            println!("{} augmented mentions", pool.len());
        }
        Command::Eval { checkpoint, corpus } => {
            let ck = read_checkpoint(&checkpoint)?;
            let c = read_corpus(&corpus)?;
            if ck.inventory != *c.inventory() {
                return Err(Error::InvalidInventory(format!(
                    "{} and {} use different label inventories",
                    checkpoint.display(),
                    corpus.display()
                )));
            }
            let data = labeled_encodings(&c, &ck.encoder).map_err(|e| e.with_path(&corpus))?;
            let report = evaluate(&ck.params, &data, c.inventory()).map_err(|e| e.with_path(&corpus))?;
            println!("{}", serde_json::to_string(&report).expect("report serializes"));
        }
        Command::Report { runs, out } => {
            let table = write_report(&runs, &out)?;
            print!("{}", table.to_csv());
        }
    }
    Ok(())
}

fn one_line(e: &Error) -> String {
    let mut msg = e.to_string();
    let mut src = std::error::Error::source(e);
    while let Some(s) = src {
        if !msg.contains(&s.to_string()) {
            msg.push_str(&format!(": {s}"));
        }
        src = s.source();
    }
    msg.replace('\n', " ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let mut lines = text.lines();
            let first = lines.next().unwrap_or_default();
            eprintln!("error[UsageError]: {}", first.strip_prefix("error: ").unwrap_or(first));
            for l in lines {
                eprintln!("{l}");
            }
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.class(), one_line(&e));
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use std::path::Path;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn error_line_is_single_line() {
        let e = Error::InvalidConfig("bad\nthing".into()).with_path(Path::new("x.toml"));
        let line = one_line(&e);
        assert!(!line.contains('\n'));
        assert!(line.starts_with("x.toml"));
    }
}

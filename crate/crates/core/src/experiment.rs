//! Seeded experiment configuration and the runner behind the CLI.
//!
//! One config describes one mode over a list of seeds. Each seed gets its
//! own stratified split of a shared corpus, and the run seed replaces the
//! `seed` field of every sub-config, so a run is fully determined by the
//! config file and its seed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cda::{augment_pool, NgramFillModel, SpanSamplerConfig};
use crate::data::{generate_synthetic, read_corpus, stratified_split, Corpus, PresetName, SplitSpec};
use crate::error::{Error, Result};
use crate::eval::{assemble_report, evaluate, pca2, render_pca_csv, ComparisonTable, F1Report};
use crate::girl::{
    parse_runlog, parse_snapshots, parse_summary, render_runlog, render_snapshots, render_summary,
    train, train_self_training_ablation, GirlConfig, ModelConfig, Monitor, RunLog, RunMeta,
};
use crate::model::{labeled_encodings, pretrain, render_checkpoint, Checkpoint, PolicyParameters, SgdConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Pretraining on the labeled split only.
    Supervised,
    /// Every pseudo-label is trusted.
    SelfTrain,
    /// Gradient-imitation acceptance with the reward-weighted update.
    Gradlre,
    /// Like `Gradlre`, on a pool manufactured from the labeled split.
    GradlreCda,
    /// Supervised training with the unlabeled split's gold labels revealed.
    GoldUpperBound,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Supervised,
        Mode::SelfTrain,
        Mode::Gradlre,
        Mode::GradlreCda,
        Mode::GoldUpperBound,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Supervised => "supervised",
            Mode::SelfTrain => "self-train",
            Mode::Gradlre => "gradlre",
            Mode::GradlreCda => "gradlre-cda",
            Mode::GoldUpperBound => "gold-upper-bound",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown mode `{s}`")))
    }
}

/// Where the corpus comes from: a file, or the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Corpus file; when absent a synthetic corpus of the preset is built.
    pub corpus: Option<PathBuf>,
    pub n_mentions: usize,
    pub seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            corpus: None,
            n_mentions: 4000,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub labeled_fraction: f64,
    pub unlabeled_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            labeled_fraction: 0.05,
            unlabeled_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub preset: PresetName,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub sgd: SgdConfig,
    #[serde(default)]
    pub girl: GirlConfig,
    /// Required by `gradlre-cda`, ignored otherwise.
    #[serde(default)]
    pub cda: Option<SpanSamplerConfig>,
    /// Size of the manufactured pool; defaults to the unlabeled split size.
    #[serde(default)]
    pub augmented_pool_size: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(mode: Mode, preset: PresetName, seeds: Vec<u64>, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            mode,
            preset,
            seeds,
            output_dir: output_dir.into(),
            data: DataConfig::default(),
            split: SplitConfig::default(),
            model: ModelConfig::default(),
            sgd: SgdConfig::default(),
            girl: GirlConfig::default(),
            cda: (mode == Mode::GradlreCda).then(SpanSamplerConfig::default),
            augmented_pool_size: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0);
            Error::parse(line, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| e.with_path(path))
    }

    /// The resolved config, every default spelled out.
    pub fn render(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seeds must list at least one seed".into()));
        }
        // TOML integers are signed, so larger seeds could not be echoed back.
        let mut seeds = self.seeds.clone();
        seeds.extend([self.data.seed, self.sgd.seed, self.girl.seed, self.model.encoder.hash_seed]);
        seeds.extend(self.cda.as_ref().map(|c| c.seed));
        if let Some(s) = seeds.iter().find(|&&s| i64::try_from(s).is_err()) {
            return Err(Error::InvalidConfig(format!("seed {s} exceeds {}", i64::MAX)));
        }
        SplitSpec::new(self.split.labeled_fraction, self.split.unlabeled_fraction, 0)?;
        self.model.encoder.validate()?;
        self.girl.validate()?;
        if self.sgd.batch == 0 || !self.sgd.step_size.is_finite() {
            return Err(Error::InvalidConfig(
                "sgd needs batch >= 1 and a finite step size".into(),
            ));
        }
        match (&self.cda, self.mode) {
            (None, Mode::GradlreCda) => {
                return Err(Error::InvalidConfig("mode gradlre-cda needs a [cda] section".into()))
            }
            (Some(c), _) => c.validate()?,
            _ => {}
        }
        Ok(())
    }

    pub fn load_corpus(&self) -> Result<Corpus> {
        match &self.data.corpus {
            Some(p) => read_corpus(p),
            None => generate_synthetic(self.preset, self.data.n_mentions, self.data.seed),
        }
    }

    fn meta(&self, seed: u64) -> RunMeta {
        RunMeta {
            mode: self.mode.as_str().into(),
            preset: self.preset.as_str().into(),
            labeled_fraction: self.split.labeled_fraction,
            unlabeled_fraction: self.split.unlabeled_fraction,
            seed,
        }
    }
}

/// One finished seed: the trained head and its log.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub checkpoint: Checkpoint,
    pub log: RunLog,
}

fn supervised(
    labeled: &Corpus,
    test: &Corpus,
    sgd: &SgdConfig,
    model: &ModelConfig,
) -> Result<(PolicyParameters, RunLog)> {
    let inventory = labeled.inventory();
    let enc = labeled_encodings(labeled, &model.encoder)?;
    if enc.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    let init = PolicyParameters::init(model.architecture(inventory.len()), sgd.seed);
    let params = pretrain(&init, &enc, sgd);
    let test_enc = labeled_encodings(test, &model.encoder)?;
    let score: Option<F1Report> = if test_enc.is_empty() {
        None
    } else {
        Some(evaluate(&params, &test_enc, inventory)?)
    };
    let log = RunLog {
        pretrain_test: score,
        final_test: score,
        ..Default::default()
    };
    Ok((params, log))
}

/// Trains one seed in memory. Nothing is written.
pub fn run_seed(cfg: &ExperimentConfig, corpus: &Corpus, seed: u64) -> Result<SeedRun> {
    let split = stratified_split(
        corpus,
        &SplitSpec::new(cfg.split.labeled_fraction, cfg.split.unlabeled_fraction, seed)?,
    )?;
    let sgd = SgdConfig { seed, ..cfg.sgd };
    let girl = GirlConfig { seed, ..cfg.girl };
    let test = &split.rest;
    let gold_known = split.unlabeled.mentions().iter().all(|m| m.gold().is_some());
    let monitor = Monitor {
        test: Some(test),
        track_pseudo: gold_known,
    };
    let (params, mut log) = match cfg.mode {
        Mode::Supervised => supervised(&split.labeled, test, &sgd, &cfg.model)?,
        Mode::GoldUpperBound => {
            if let Some(i) = split.unlabeled.mentions().iter().position(|m| m.gold().is_none()) {
                return Err(Error::MissingGold(i));
            }
            let all = split.labeled.concat(&split.unlabeled)?;
            supervised(&all, test, &sgd, &cfg.model)?
        }
        Mode::SelfTrain => {
            train_self_training_ablation(&split.labeled, &split.unlabeled, &girl, &sgd, &cfg.model, monitor)?
        }
        Mode::Gradlre => train(&split.labeled, &split.unlabeled, &girl, &sgd, &cfg.model, monitor)?,
        Mode::GradlreCda => {
            let sampler = cfg
                .cda
                .ok_or_else(|| Error::InvalidConfig("mode gradlre-cda needs a [cda] section".into()))?;
            let fill_model = NgramFillModel::train(&split.labeled)?;
            let n_out = cfg.augmented_pool_size.unwrap_or(split.unlabeled.len());
            let pool = augment_pool(
                &split.labeled,
                n_out,
                &SpanSamplerConfig { seed, ..sampler },
                &fill_model,
            )?;
            let monitor = Monitor {
                test: Some(test),
                track_pseudo: false,
            };
            train(&split.labeled, &pool, &girl, &sgd, &cfg.model, monitor)?
        }
    };
    log.meta = cfg.meta(seed);
    Ok(SeedRun {
        checkpoint: Checkpoint {
            encoder: cfg.model.encoder,
            inventory: corpus.inventory().clone(),
            params,
        },
        log,
    })
}

pub fn seed_dir(output_dir: &Path, seed: u64) -> PathBuf {
    output_dir.join(format!("seed-{seed}"))
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

/// Writes one seed's checkpoint, episode log, snapshots, summary and, when
/// the trajectory has enough snapshots, its PCA projection.
pub fn write_seed_run(dir: &Path, run: &SeedRun) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir.join("checkpoint.json"), &render_checkpoint(&run.checkpoint))?;
    write(dir.join("runlog.jsonl"), &render_runlog(&run.log.episodes))?;
    write(dir.join("snapshots.jsonl"), &render_snapshots(&run.log.snapshots))?;
    write(dir.join("summary.json"), &render_summary(&run.log.summary()))?;
    match pca2(&run.log.snapshots) {
        Ok(p) => write(dir.join("pca.csv"), &render_pca_csv(&run.log.snapshots, &p)),
        Err(Error::DegenerateTrajectory(_)) => Ok(()),
        Err(e) => Err(e),
    }
}

/// Runs every seed of `cfg`, writing the resolved config to
/// `output_dir/config.toml` and each seed under `output_dir/seed-<seed>`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunLog>> {
    cfg.validate()?;
    let corpus = cfg.load_corpus()?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write(out.join("config.toml"), &cfg.render())?;
    let mut logs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let run = run_seed(cfg, &corpus, seed)?;
        write_seed_run(&seed_dir(out, seed), &run)?;
        logs.push(run.log);
    }
    Ok(logs)
}

fn read(path: PathBuf) -> Result<String> {
    fs::read_to_string(&path).map_err(|e| Error::io(path, e))
}

/// Loads every `seed-*` run under `dir`, in ascending seed order.
pub fn load_runs(dir: &Path) -> Result<Vec<RunLog>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut seeds: Vec<(u64, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some(seed) = name.strip_prefix("seed-").and_then(|s| s.parse().ok()) {
            seeds.push((seed, path));
        }
    }
    if seeds.is_empty() {
        return Err(Error::IncompatibleRuns(format!(
            "{} holds no seed-* run directories",
            dir.display()
        )));
    }
    seeds.sort();
    seeds
        .into_iter()
        .map(|(_, d)| {
            let summary = parse_summary(&read(d.join("summary.json"))?).map_err(|e| e.with_path(&d))?;
            let episodes = parse_runlog(&read(d.join("runlog.jsonl"))?).map_err(|e| e.with_path(&d))?;
            let snapshots =
                parse_snapshots(&read(d.join("snapshots.jsonl"))?).map_err(|e| e.with_path(&d))?;
            RunLog::from_parts(summary, episodes, snapshots).map_err(|e| e.with_path(&d))
        })
        .collect()
}

/// Compares the runs under `run_dirs` and writes `table.csv`, `series.csv`
/// and one `pca-<mode>-seed-<seed>.csv` per run that trained past
/// pretraining.
pub fn write_report(run_dirs: &[PathBuf], out: &Path) -> Result<ComparisonTable> {
    let mut runs = Vec::new();
    for d in run_dirs {
        runs.extend(load_runs(d)?);
    }
    let table = assemble_report(&runs)?;
    let mut pcas = Vec::new();
    for r in runs.iter().filter(|r| !r.episodes.is_empty()) {
        let p = pca2(&r.snapshots).map_err(|e| match e {
            Error::DegenerateTrajectory(m) => Error::DegenerateTrajectory(format!(
                "run `{}` seed {}: {m}",
                r.meta.mode, r.meta.seed
            )),
            e => e,
        })?;
        pcas.push((format!("pca-{}-seed-{}.csv", r.meta.mode, r.meta.seed), render_pca_csv(&r.snapshots, &p)));
    }
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write(out.join("table.csv"), &table.to_csv())?;
    write(out.join("series.csv"), &table.series_csv)?;
    for (name, csv) in pcas {
        write(out.join(name), &csv)?;
    }
    Ok(table)
}

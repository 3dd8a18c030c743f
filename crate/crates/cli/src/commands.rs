use std::path::{Path, PathBuf};

use gaze_privacy::attack::{extract_features, train_attacker, RocPoint, Score};
use gaze_privacy::autoencoder::{train_with_progress, AutoencoderModel, EpochLog, PrivacyLevel};
use gaze_privacy::config::PipelineConfig;
use gaze_privacy::data::{
    derive_seed, derive_seed_str, generate_corpus, load_autoencoder_expecting, make_split, save_attacker, save_autoencoder,
    sha256_hex, CorpusManifest, DatasetSplit, RecordingMeta,
};
use gaze_privacy::pipeline::{
    corpus_mse, evaluate_privacy, evaluate_utility, mean_mse, privatize_corpus, range_violations, training_windows, Corpus,
    EvalProtocol, PrivatizedFile, RecordingMse, RAW_LEVEL,
};
use gaze_privacy::report::{render_table, LevelRow, Provenance, TradeoffReport};
use gaze_privacy::utility::CdfPoint;
use gaze_privacy::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::{Cli, Command};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.toml";
pub const PRIVATIZE_SCHEMA_VERSION: u32 = 1;

/// Log of one privatized corpus, written next to its files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivatizeManifest {
    pub schema_version: u32,
    pub level: String,
    pub sigma: f64,
    pub master_seed: u64,
    pub level_seed: u64,
    pub checkpoint_sha256: String,
    pub files: Vec<PrivatizedFile>,
}

struct Ctx {
    cfg: PipelineConfig,
    resolved: String,
    force: bool,
}

impl Ctx {
    fn new(cli: &Cli) -> Result<Self> {
        let mut cfg = match &cli.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        if let Some(o) = &cli.output {
            cfg.paths.output_dir = o.clone();
        }
        if let Some(d) = &cli.data {
            cfg.paths.data_dir = d.clone();
        }
        cfg.validate()?;
        let resolved = cfg.to_toml_string();
        Ok(Self {
            cfg,
            resolved,
            force: cli.force,
        })
    }

    fn seed(&self, component: &str) -> u64 {
        derive_seed_str(self.cfg.seed, component)
    }

    fn write_resolved(&self, dir: &Path) -> Result<()> {
        write_text(&dir.join(RESOLVED_CONFIG_FILE), &self.resolved)
    }

    fn guard(&self, path: &Path) -> Result<()> {
        let occupied = if path.is_dir() {
            std::fs::read_dir(path).map_err(|e| Error::io(path, e))?.next().is_some()
        } else {
            path.exists()
        };
        if occupied && !self.force {
            return Err(Error::Config(format!(
                "{} already exists; pass --force to overwrite",
                path.display()
            )));
        }
        Ok(())
    }

    fn task(&self) -> Option<&str> {
        Some(self.cfg.preprocess.task.as_str()).filter(|t| !t.is_empty())
    }

    fn raw_corpus(&self) -> Result<Corpus> {
        Corpus::load_dir(&self.cfg.paths.data_dir, self.task())?.resampled(self.cfg.preprocess.target_rate_hz)
    }

    fn split(&self, corpus: &Corpus) -> Result<DatasetSplit> {
        make_split(&corpus.subjects(), self.cfg.split.fractions, self.seed("split"))
    }

    fn protocol(&self, split: DatasetSplit) -> EvalProtocol {
        EvalProtocol {
            split,
            enroll_session: self.cfg.evaluation.enroll_session,
            probe_session: self.cfg.evaluation.probe_session,
        }
    }

    fn level(&self, name: &str) -> Result<&PrivacyLevel> {
        self.cfg
            .level(name)
            .ok_or_else(|| Error::Config(format!("privacy level {name:?} is not configured")))
    }

    /// Seed of the `k`-th noise draw of a level.
    fn noise_seed(&self, level: &str, k: usize) -> u64 {
        derive_seed(self.seed(&format!("noise/{level}")), &[k as u64])
    }

    fn attacker_seed(&self, k: usize) -> u64 {
        derive_seed(self.seed("attacker"), &[k as u64])
    }

    fn load_autoencoder(&self) -> Result<AutoencoderModel> {
        let arch = gaze_privacy::autoencoder::Architecture::standard(self.cfg.preprocess.window_len);
        load_autoencoder_expecting(&self.cfg.autoencoder_path(), &arch)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable output");
    write_text(path, &(text + "\n"))
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let io = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Runs the selected subcommand and names the stage for error messages.
pub fn run(cli: &Cli) -> (&'static str, Result<()>) {
    let stage = match &cli.command {
        Command::Synth => "synth",
        Command::TrainAe => "train-ae",
        Command::Privatize { .. } => "privatize",
        Command::TrainAttacker { .. } => "train-attacker",
        Command::Evaluate => "evaluate",
        Command::Report { .. } => "report",
    };
    let result = match &cli.command {
        Command::Report { reports } => report(cli, reports),
        command => Ctx::new(cli).and_then(|ctx| match command {
            Command::Synth => synth(&ctx),
            Command::TrainAe => train_ae(&ctx),
            Command::Privatize { levels } => privatize(&ctx, levels),
            Command::TrainAttacker { level } => train_attacker_cmd(&ctx, level.as_deref()),
            Command::Evaluate => evaluate(&ctx),
            Command::Report { .. } => unreachable!(),
        }),
    };
    (stage, result)
}

fn remove_corpus_files(dir: &Path) -> Result<()> {
    if !dir.is_dir() {
        return Ok(());
    }
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let ours = name == MANIFEST_FILE
            || name == RESOLVED_CONFIG_FILE
            || (name.ends_with(".csv") && RecordingMeta::parse_file_name(name).is_some());
        if ours {
            std::fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
        }
    }
    Ok(())
}

fn synth(ctx: &Ctx) -> Result<()> {
    let dir = &ctx.cfg.paths.data_dir;
    ctx.guard(dir)?;
    remove_corpus_files(dir)?;
    let corpus = generate_corpus(&ctx.cfg.synth, ctx.cfg.seed)?;
    let manifest = CorpusManifest::new(&ctx.cfg.synth, ctx.cfg.seed, &corpus);
    let recordings = Corpus::new(corpus.recordings.into_iter().map(|r| r.recording).collect());
    let paths = recordings.write_dir(dir)?;
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    ctx.write_resolved(dir)?;
    log::info!(
        "wrote {} recordings of {} subjects to {} (corpus {})",
        paths.len(),
        manifest.subjects.len(),
        dir.display(),
        manifest.corpus_id
    );
    Ok(())
}

#[derive(Serialize)]
struct LossRow {
    epoch: usize,
    sigma: f64,
    mse: f64,
    dtw: f64,
    fgsm: f64,
}

impl From<&EpochLog> for LossRow {
    fn from(l: &EpochLog) -> Self {
        Self {
            epoch: l.epoch,
            sigma: l.sigma,
            mse: l.mse,
            dtw: l.dtw,
            fgsm: l.fgsm,
        }
    }
}

fn train_ae(ctx: &Ctx) -> Result<()> {
    let path = ctx.cfg.autoencoder_path();
    ctx.guard(&path)?;
    let corpus = ctx.raw_corpus()?;
    let split = ctx.split(&corpus)?;
    let windows = training_windows(&corpus.select(|m| split.contains_train(m.subject)), ctx.cfg.preprocess.window_len)?;
    log::info!("training on {} windows from {} subjects", windows.len(), split.train.len());
    let mut cfg = ctx.cfg.training.clone();
    cfg.seed = ctx.seed("autoencoder");
    let (model, logs) = train_with_progress(&windows, &cfg, |l| {
        log::info!(
            "epoch {:>3}: sigma {:.3} mse {:.3e} dtw {:.4} fgsm {:.3e}",
            l.epoch,
            l.sigma,
            l.mse,
            l.dtw,
            l.fgsm
        )
    })?;
    std::fs::create_dir_all(ctx.cfg.checkpoint_dir()).map_err(|e| Error::io(ctx.cfg.checkpoint_dir(), e))?;
    save_autoencoder(&path, &model)?;
    write_rows(&ctx.cfg.checkpoint_dir().join("autoencoder_loss.csv"), logs.iter().map(LossRow::from))?;
    ctx.write_resolved(&ctx.cfg.checkpoint_dir())?;
    log::info!("saved {}", path.display());
    Ok(())
}

fn privatize(ctx: &Ctx, only: &[String]) -> Result<()> {
    let levels: Vec<&PrivacyLevel> = if only.is_empty() {
        ctx.cfg.privacy_levels.iter().collect()
    } else {
        only.iter().map(|n| ctx.level(n)).collect::<Result<_>>()?
    };
    for level in &levels {
        ctx.guard(&ctx.cfg.privatized_dir(&level.name))?;
    }
    let model = ctx.load_autoencoder()?;
    let checkpoint = std::fs::read(ctx.cfg.autoencoder_path()).map_err(|e| Error::io(ctx.cfg.autoencoder_path(), e))?;
    let corpus = ctx.raw_corpus()?;
    for level in levels {
        let dir = ctx.cfg.privatized_dir(&level.name);
        remove_corpus_files(&dir)?;
        let level_seed = ctx.noise_seed(&level.name, 0);
        let (data, files) = privatize_corpus(&model, &corpus, level, level_seed)?;
        data.write_dir(&dir)?;
        for f in &files {
            log::debug!("{} -> {} (noise seed {})", f.source, f.output, f.noise_seed);
        }
        write_json(
            &dir.join(MANIFEST_FILE),
            &PrivatizeManifest {
                schema_version: PRIVATIZE_SCHEMA_VERSION,
                level: level.name.clone(),
                sigma: level.sigma,
                master_seed: ctx.cfg.seed,
                level_seed,
                checkpoint_sha256: sha256_hex(&checkpoint),
                files,
            },
        )?;
        ctx.write_resolved(&dir)?;
        log::info!(
            "{}: privatized {} recordings (sigma {}, level seed {level_seed}) into {}",
            level.name,
            data.len(),
            level.sigma,
            dir.display()
        );
    }
    Ok(())
}

/// The recordings of a level: the raw corpus, or the privatized corpus on
/// disk for the first noise seed and a fresh privatization for later ones.
fn level_data(ctx: &Ctx, raw: &Corpus, level: Option<&PrivacyLevel>, k: usize, model: Option<&AutoencoderModel>) -> Result<Corpus> {
    let Some(level) = level else {
        return Ok(raw.clone());
    };
    if k == 0 {
        let dir = ctx.cfg.privatized_dir(&level.name);
        if !dir.is_dir() {
            return Err(Error::format(
                Some(&dir),
                format!("no privatized corpus for level {}; run privatize first", level.name),
            ));
        }
        return Corpus::load_dir(&dir, ctx.task());
    }
    let model = model.expect("checkpoint loaded for extra noise seeds");
    Ok(privatize_corpus(model, raw, level, ctx.noise_seed(&level.name, k))?.0)
}

fn train_attacker_cmd(ctx: &Ctx, level: Option<&str>) -> Result<()> {
    let level = match level {
        None => None,
        Some(n) if n == RAW_LEVEL => None,
        Some(n) => Some(ctx.level(n)?),
    };
    let name = level.map_or(RAW_LEVEL, |l| l.name.as_str());
    let path = ctx.cfg.checkpoint_dir().join(format!("attacker_{name}.json"));
    ctx.guard(&path)?;
    let raw = ctx.raw_corpus()?;
    let protocol = ctx.protocol(ctx.split(&raw)?);
    let data = level_data(ctx, &raw, level, 0, None)?;
    let train: Vec<(u32, &gaze_privacy::GazeSignal)> = data
        .select(|m| protocol.is_model_training(m))
        .into_iter()
        .map(|r| (r.meta.subject, &r.signal))
        .collect();
    let (attacker, log) = train_attacker(&train, &ctx.cfg.attacker, ctx.attacker_seed(0))?;
    let samples: Vec<_> = train
        .iter()
        .flat_map(|(s, sig)| extract_features(sig).into_iter().map(move |f| (*s, f)))
        .collect();
    log::info!(
        "{name}: attacker on {} subjects, final loss {:.4}, training accuracy {:.1}%",
        attacker.subjects().len(),
        log.last().map_or(f64::NAN, |l| l.loss),
        100.0 * attacker.accuracy(&samples)?
    );
    std::fs::create_dir_all(ctx.cfg.checkpoint_dir()).map_err(|e| Error::io(ctx.cfg.checkpoint_dir(), e))?;
    save_attacker(&path, &attacker)?;
    write_rows(&ctx.cfg.checkpoint_dir().join(format!("attacker_{name}_loss.csv")), log)?;
    ctx.write_resolved(&ctx.cfg.checkpoint_dir())?;
    Ok(())
}

#[derive(Serialize)]
struct RocRow {
    far: f64,
    tar: f64,
    threshold: Option<f64>,
}

impl From<&RocPoint> for RocRow {
    fn from(p: &RocPoint) -> Self {
        Self {
            far: p.far,
            tar: p.tar,
            threshold: p.threshold,
        }
    }
}

fn corpus_id(ctx: &Ctx, raw: &Corpus) -> String {
    let manifest = ctx.cfg.paths.data_dir.join(MANIFEST_FILE);
    if let Some(m) = std::fs::read_to_string(&manifest)
        .ok()
        .and_then(|t| serde_json::from_str::<CorpusManifest>(&t).ok())
    {
        return m.corpus_id;
    }
    let names: Vec<String> = raw.recordings.iter().map(|r| r.meta.file_name()).collect();
    format!("files-{}", &sha256_hex(names.join("\n").as_bytes())[..16])
}

fn evaluate(ctx: &Ctx) -> Result<()> {
    let dir = ctx.cfg.reports_dir();
    ctx.guard(&dir)?;
    let raw = ctx.raw_corpus()?;
    let protocol = ctx.protocol(ctx.split(&raw)?);
    let seeds = ctx.cfg.evaluation.noise_seeds;
    let model = if seeds > 1 { Some(ctx.load_autoencoder()?) } else { None };
    let levels: Vec<Option<&PrivacyLevel>> = std::iter::once(None).chain(ctx.cfg.privacy_levels.iter().map(Some)).collect();

    let mut rows = Vec::new();
    for level in levels {
        let name = level.map_or(RAW_LEVEL, |l| l.name.as_str());
        let mut row = LevelRow::empty(name, level.map(|l| l.sigma));
        let mut mses = Vec::new();
        for k in 0..seeds {
            let data = level_data(ctx, &raw, level, k, model.as_ref())?;
            let violations = range_violations(&data);
            if violations > 0 {
                return Err(Error::domain(format!("{name}: {violations} samples outside ±90°")));
            }
            let outcome = evaluate_privacy(&data, &protocol, &ctx.cfg.attacker, ctx.attacker_seed(k))?;
            let mse: Vec<RecordingMse> = corpus_mse(&raw, &data, |m| protocol.is_test(m))?;
            mses.push(mean_mse(&mse).ok_or_else(|| Error::domain("no test recordings"))?);
            row.eer_per_seed.push(100.0 * outcome.eer);
            row.rank1_ir_per_seed.push(100.0 * outcome.rank1);
            log::info!(
                "{name} seed {k}: EER {:.2}%, Rank-1 {:.2}%, MSE {:.4}",
                100.0 * outcome.eer,
                100.0 * outcome.rank1,
                mses[k]
            );
            if k == 0 {
                row.eer_threshold = Some(outcome.eer_threshold);
                write_rows(&dir.join(format!("scores_{name}.csv")), outcome.scores.scores.iter().copied::<Score>())?;
                write_rows(&dir.join(format!("roc_{name}.csv")), outcome.roc.iter().map(RocRow::from))?;
                write_rows(&dir.join(format!("mse_{name}.csv")), mse)?;
                if ctx.cfg.evaluation.predictor {
                    let u = evaluate_utility(&data, &protocol, &ctx.cfg.predictor, ctx.seed("predictor"))?;
                    row.prediction_error = u.errors.mean;
                    row.baseline_prediction_error = u.baseline.mean;
                    log::info!(
                        "{name}: prediction error {:.3}° (last-position {:.3}°) over {} segments",
                        u.errors.mean.unwrap_or(f64::NAN),
                        u.baseline.mean.unwrap_or(f64::NAN),
                        u.errors.count
                    );
                    write_rows(
                        &dir.join(format!("prediction_cdf_{name}.csv")),
                        u.errors.cdf.points.iter().copied::<CdfPoint>(),
                    )?;
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        row.eer = Some(mean(&row.eer_per_seed));
        row.rank1_ir = Some(mean(&row.rank1_ir_per_seed));
        row.mse = Some(mean(&mses));
        rows.push(row);
    }
    let provenance = Provenance {
        master_seed: ctx.cfg.seed,
        noise_seeds: (0..seeds as u64).collect(),
        config_sha256: sha256_hex(ctx.resolved.as_bytes()),
        corpus_id: corpus_id(ctx, &raw),
        tool_version: format!("gaze-privacy {}", env!("CARGO_PKG_VERSION")),
    };
    let report = TradeoffReport::new(provenance, protocol.split.test.len(), rows);
    report.validate()?;
    let path = dir.join("report.json");
    report.save(&path)?;
    ctx.write_resolved(&dir)?;
    let (table, _) = render_table(std::slice::from_ref(&report));
    print!("{table}");
    log::info!("wrote {}", path.display());
    Ok(())
}

fn report(cli: &Cli, paths: &[PathBuf]) -> Result<()> {
    let paths: Vec<PathBuf> = if paths.is_empty() {
        let root = match (&cli.output, &cli.config) {
            (Some(o), _) => o.clone(),
            (None, Some(c)) => PipelineConfig::load(c)?.paths.output_dir,
            (None, None) => PipelineConfig::default().paths.output_dir,
        };
        vec![root.join("reports").join("report.json")]
    } else {
        paths.to_vec()
    };
    let reports: Vec<TradeoffReport> = paths.iter().map(|p| TradeoffReport::load(p)).collect::<Result<_>>()?;
    let (table, warnings) = render_table(&reports);
    for w in warnings {
        log::warn!("{w}");
    }
    print!("{table}");
    Ok(())
}

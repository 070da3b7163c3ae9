//! `train` and `eval`.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use pnr_core::metrics::{evaluate_checkpoint, EvalOptions};
use pnr_core::model::{heldout_l1, Checkpoint, StepReport, TrainConfig, Trainer};
use pnr_core::synth::{gen_toy_dataset, read_dataset, ToyDataset};
use pnr_core::Error;

use crate::commands::at_path;
use crate::{EvalArgs, Failure, TrainArgs};

pub const LOG_HEADER: &str = "step,l1,perceptual,gan_image,gan_pose,total,disc_image,disc_pose,skipped";

fn log_row(r: &StepReport) -> String {
    let l = r.losses.as_array();
    format!(
        "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
        r.step,
        l[0],
        l[1],
        l[2],
        l[3],
        r.total,
        r.disc_image,
        r.disc_pose,
        u8::from(r.skipped)
    )
}

fn seed_from_env() -> Result<Option<u64>, Error> {
    match std::env::var("PNR_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("PNR_SEED `{s}` is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Dataset named by the config (relative paths resolve against the config
/// file's directory) or generated from its settings.
fn load_data(cfg: &TrainConfig, config_path: &Path) -> Result<ToyDataset, Error> {
    match &cfg.data.path {
        Some(p) => {
            let p = if p.is_relative() {
                config_path.parent().unwrap_or(Path::new(".")).join(p)
            } else {
                p.clone()
            };
            at_path(&p, read_dataset(&p))
        }
        None => gen_toy_dataset(cfg.data.identities, cfg.data.samples_per_id, cfg.data.seed),
    }
}

fn unix_time() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn train(a: TrainArgs) -> Result<(), Failure> {
    let text = at_path(&a.config, fs::read_to_string(&a.config).map_err(Error::from))?;
    let mut cfg = TrainConfig::parse(&text)?;
    if let Some(seed) = seed_from_env()? {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let data = load_data(&cfg, &a.config)?;
    if data.train.is_empty() || data.test.is_empty() {
        return Err(Error::Config("dataset needs both train and test identities".into()).into());
    }
    fs::create_dir_all(&a.out)?;
    let started = unix_time();
    fs::write(a.out.join("config.txt"), cfg.to_text())?;

    let mut trainer = Trainer::new(cfg.clone())?;
    let initial = heldout_l1(&trainer.params, &cfg.pnr, &data.test, cfg.mode)?;
    let mut log = BufWriter::new(File::create(a.out.join("loss_log.csv"))?);
    writeln!(log, "{LOG_HEADER}")?;
    for _ in 0..cfg.steps {
        match trainer.train_step(&data.train) {
            Ok(r) => writeln!(log, "{}", log_row(&r))?,
            Err(e) => {
                log.flush()?;
                return Err(e.into());
            }
        }
    }
    log.flush()?;
    drop(log);

    let ck = Checkpoint {
        params: trainer.params.clone(),
        pnr: cfg.pnr,
        adam_generator: trainer.adam_generator.clone(),
        adam_discriminator: trainer.adam_discriminator.clone(),
    };
    ck.save(a.out.join("checkpoint.pnrc"))?;
    let final_l1 = heldout_l1(&trainer.params, &cfg.pnr, &data.test, cfg.mode)?;

    let mut m = String::new();
    let _ = writeln!(m, "mode = {}", cfg.mode.name());
    let _ = writeln!(m, "seed = {}", cfg.seed);
    let _ = writeln!(m, "steps = {}", trainer.steps_done);
    let _ = writeln!(m, "skipped_steps = {}", trainer.steps_skipped);
    let _ = writeln!(m, "train_identities = {}", data.train.len());
    let _ = writeln!(m, "test_identities = {}", data.test.len());
    let _ = writeln!(m, "initial_heldout_l1 = {initial:?}");
    let _ = writeln!(m, "final_heldout_l1 = {final_l1:?}");
    let _ = writeln!(m, "artifacts = config.txt loss_log.csv checkpoint.pnrc manifest.txt");
    if a.record_time {
        let _ = writeln!(m, "started_unix = {started}");
        let _ = writeln!(m, "finished_unix = {}", unix_time());
    }
    fs::write(a.out.join("manifest.txt"), &m)?;
    println!(
        "trained {} steps ({} skipped); held-out L1 {initial:.6} -> {final_l1:.6}",
        trainer.steps_done, trainer.steps_skipped
    );
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<(), Failure> {
    let ck = at_path(&a.checkpoint, Checkpoint::load(&a.checkpoint))?;
    let data = match &a.data {
        Some(dir) => at_path(dir, read_dataset(dir))?,
        None => {
            let d = pnr_core::model::DataConfig::default();
            gen_toy_dataset(d.identities, d.samples_per_id, d.seed)?
        }
    };
    if !(a.noise.is_finite() && a.noise >= 0.0) {
        return Err(Error::Config(format!("noise must be finite and non-negative, got {}", a.noise)).into());
    }
    let opts = EvalOptions {
        shots: a.m,
        noise: a.noise,
        seed: a.seed,
        ..EvalOptions::default()
    };
    let report = evaluate_checkpoint(&ck, &data.test, &opts)?;
    let text = report.to_text();
    print!("{text}");
    if let Some(path) = a.out {
        write_report(&path, &text)?;
    }
    Ok(())
}

fn write_report(path: &PathBuf, text: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)
}

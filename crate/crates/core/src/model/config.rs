//! Training configuration and its `key = value` text form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::model::adam::AdamParams;
use crate::model::loss::LossWeights;
use crate::model::net::Arch;
use crate::solver::{Norm, PnrConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Supervised,
    /// Self-reconstruction from masked rows; the image GAN term is off.
    Unsupervised,
    /// `M` source views per sample.
    Multishot(usize),
}

impl Mode {
    pub fn shots(self) -> usize {
        match self {
            Mode::Multishot(m) => m,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Supervised => "supervised",
            Mode::Unsupervised => "unsupervised",
            Mode::Multishot(_) => "multishot",
        }
    }
}

/// Where training images come from.
#[derive(Clone, Debug, PartialEq)]
pub struct DataConfig {
    pub identities: usize,
    pub samples_per_id: usize,
    pub seed: u64,
    /// Directory written by `synth`; generated in memory when absent.
    pub path: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            identities: 100,
            samples_per_id: 6,
            seed: 7,
            path: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub pnr: PnrConfig,
    pub weights: LossWeights,
    pub adam: AdamParams,
    pub steps: usize,
    pub batch: usize,
    pub seed: u64,
    /// Bernoulli keep probability of each row mask entry (unsupervised).
    pub keep_prob: f64,
    pub arch: Arch,
    pub data: DataConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::for_mode(Mode::Supervised)
    }
}

const KEYS: &[&str] = &[
    "mode",
    "shots",
    "p",
    "lambda1",
    "lambda2",
    "lambda3",
    "lambda4",
    "lr",
    "beta1",
    "beta2",
    "steps",
    "batch",
    "seed",
    "keep_prob",
    "irls_iters",
    "irls_eps",
    "ridge",
    "d",
    "D",
    "hidden",
    "depth",
    "disc_hidden",
    "patch",
    "perceptual_dim",
    "identities",
    "samples_per_id",
    "data_seed",
    "data",
];

impl TrainConfig {
    /// Defaults for `mode`; unsupervised starts with `λ3 = 0`.
    pub fn for_mode(mode: Mode) -> Self {
        Self {
            mode,
            pnr: PnrConfig::lse(),
            weights: match mode {
                Mode::Unsupervised => LossWeights::UNSUPERVISED,
                _ => LossWeights::SUPERVISED,
            },
            adam: AdamParams::default(),
            steps: 300,
            batch: 4,
            seed: 0,
            keep_prob: 0.5,
            arch: Arch::default(),
            data: DataConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.weights.as_array();
        if w.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Config(format!("loss weights must be finite and >= 0, got {w:?}")));
        }
        if self.mode == Mode::Unsupervised && self.weights.gan_image != 0.0 {
            return Err(Error::Config(format!(
                "unsupervised training requires lambda3 = 0, got {}",
                self.weights.gan_image
            )));
        }
        if let Mode::Multishot(m) = self.mode {
            if m == 0 {
                return Err(Error::Config("shots must be >= 1".into()));
            }
        }
        let views = match self.mode {
            Mode::Unsupervised => 1,
            m => m.shots() + 1,
        };
        if self.data.samples_per_id < views {
            return Err(Error::Config(format!(
                "{} training needs samples_per_id >= {views}",
                self.mode.name()
            )));
        }
        if self.data.identities == 0 {
            return Err(Error::Config("identities must be >= 1".into()));
        }
        if self.batch == 0 {
            return Err(Error::Config("batch must be >= 1".into()));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return Err(Error::Config(format!("keep_prob must lie in (0, 1], got {}", self.keep_prob)));
        }
        self.adam.validate()?;
        self.pnr.validate()?;
        self.arch.validate()
    }

    /// Parses `key = value` lines; `#` starts a comment. Unknown and
    /// repeated keys are errors. The result is validated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key `{k}`", n + 1)));
            }
            if kv.insert(k, v).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", n + 1)));
            }
        }
        let mode = match kv.get("mode").copied().unwrap_or("supervised") {
            "supervised" => Mode::Supervised,
            "unsupervised" => Mode::Unsupervised,
            "multishot" => Mode::Multishot(num(&kv, "shots")?.unwrap_or(2)),
            other => return Err(Error::Config(format!("unknown mode `{other}`"))),
        };
        if mode.name() != "multishot" && kv.contains_key("shots") {
            return Err(Error::Config("`shots` applies to mode = multishot only".into()));
        }
        let mut c = Self::for_mode(mode);
        if let Some(p) = num::<u32>(&kv, "p")? {
            c.pnr.norm = Norm::from_p(p).map_err(|e| Error::Config(e.to_string()))?;
        }
        set(&kv, "lambda1", &mut c.weights.l1)?;
        set(&kv, "lambda2", &mut c.weights.perceptual)?;
        set(&kv, "lambda3", &mut c.weights.gan_image)?;
        set(&kv, "lambda4", &mut c.weights.gan_pose)?;
        set(&kv, "lr", &mut c.adam.lr)?;
        set(&kv, "beta1", &mut c.adam.beta1)?;
        set(&kv, "beta2", &mut c.adam.beta2)?;
        set(&kv, "steps", &mut c.steps)?;
        set(&kv, "batch", &mut c.batch)?;
        set(&kv, "seed", &mut c.seed)?;
        set(&kv, "keep_prob", &mut c.keep_prob)?;
        set(&kv, "irls_iters", &mut c.pnr.irls_iters)?;
        set(&kv, "irls_eps", &mut c.pnr.irls_eps)?;
        set(&kv, "ridge", &mut c.pnr.ridge)?;
        set(&kv, "d", &mut c.arch.d)?;
        set(&kv, "D", &mut c.arch.big_d)?;
        set(&kv, "hidden", &mut c.arch.hidden)?;
        set(&kv, "depth", &mut c.arch.depth)?;
        set(&kv, "disc_hidden", &mut c.arch.disc_hidden)?;
        set(&kv, "patch", &mut c.arch.patch)?;
        set(&kv, "perceptual_dim", &mut c.arch.perceptual_dim)?;
        set(&kv, "identities", &mut c.data.identities)?;
        set(&kv, "samples_per_id", &mut c.data.samples_per_id)?;
        set(&kv, "data_seed", &mut c.data.seed)?;
        if let Some(path) = kv.get("data") {
            c.data.path = Some(PathBuf::from(path));
        }
        c.validate()?;
        Ok(c)
    }

    /// Every key, in a fixed order; [`TrainConfig::parse`] reads it back to
    /// an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("mode", self.mode.name().into());
        if let Mode::Multishot(m) = self.mode {
            line("shots", m.to_string());
        }
        line("p", self.pnr.norm.p().to_string());
        line("lambda1", fmt_f(self.weights.l1));
        line("lambda2", fmt_f(self.weights.perceptual));
        line("lambda3", fmt_f(self.weights.gan_image));
        line("lambda4", fmt_f(self.weights.gan_pose));
        line("lr", fmt_f(self.adam.lr));
        line("beta1", fmt_f(self.adam.beta1));
        line("beta2", fmt_f(self.adam.beta2));
        line("steps", self.steps.to_string());
        line("batch", self.batch.to_string());
        line("seed", self.seed.to_string());
        line("keep_prob", fmt_f(self.keep_prob));
        line("irls_iters", self.pnr.irls_iters.to_string());
        line("irls_eps", fmt_f(self.pnr.irls_eps));
        line("ridge", fmt_f(self.pnr.ridge));
        line("d", self.arch.d.to_string());
        line("D", self.arch.big_d.to_string());
        line("hidden", self.arch.hidden.to_string());
        line("depth", self.arch.depth.to_string());
        line("disc_hidden", self.arch.disc_hidden.to_string());
        line("patch", self.arch.patch.to_string());
        line("perceptual_dim", self.arch.perceptual_dim.to_string());
        line("identities", self.data.identities.to_string());
        line("samples_per_id", self.data.samples_per_id.to_string());
        line("data_seed", self.data.seed.to_string());
        if let Some(p) = &self.data.path {
            line("data", p.display().to_string());
        }
        s
    }
}

/// Shortest text that parses back to the same `f64`.
fn fmt_f(x: f64) -> String {
    format!("{x:?}")
}

fn num<T: std::str::FromStr>(kv: &BTreeMap<&str, &str>, key: &str) -> Result<Option<T>> {
    kv.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
        })
        .transpose()
}

fn set<T: std::str::FromStr>(kv: &BTreeMap<&str, &str>, key: &str, slot: &mut T) -> Result<()> {
    if let Some(v) = num(kv, key)? {
        *slot = v;
    }
    Ok(())
}

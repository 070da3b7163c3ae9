//! Image and solver metrics, and test-set evaluation of a model.
//!
//! SSIM here uses uniform non-overlapping 8×8 windows, so values are
//! comparable between runs of this crate but not with Gaussian-window
//! implementations.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::model::{infer_multishot, loss_l1, Checkpoint};
use crate::solver::{solve_lad_irls, solve_lse, PnrConfig};
use crate::synth::{gen_regression_instance, SeededRng, SynthSpec, ToyIdentity, ToyView};
use crate::tensor::Matrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub c1: f64,
    pub c2: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self::with_range(1.0)
    }
}

impl SsimParams {
    /// `C1 = (0.01·L)²`, `C2 = (0.03·L)²` for dynamic range `L`.
    pub fn with_range(l: f64) -> Self {
        Self {
            window: 8,
            c1: (0.01 * l).powi(2),
            c2: (0.03 * l).powi(2),
        }
    }
}

/// SSIM of one window, from its statistics (population moments).
pub fn ssim_from_moments(mu_a: f64, mu_b: f64, var_a: f64, var_b: f64, cov: f64, p: &SsimParams) -> f64 {
    ((2.0 * mu_a * mu_b + p.c1) * (2.0 * cov + p.c2)) / ((mu_a * mu_a + mu_b * mu_b + p.c1) * (var_a + var_b + p.c2))
}

/// Mean SSIM over channels and over the full `window × window` tiles
/// (stride = window). Symmetric in its arguments bit for bit.
pub fn ssim(a: &Image, b: &Image, p: &SsimParams) -> Result<f64> {
    let (h, w, c) = a.dims();
    if b.dims() != a.dims() {
        return Err(Error::dim("ssim", (h, w * c), (b.height(), b.width() * b.channels())));
    }
    if p.window == 0 || h < p.window || w < p.window {
        return Err(Error::contract(format!("{h}x{w} image is smaller than the {0}x{0} window", p.window)));
    }
    if !(p.c1 > 0.0 && p.c2 > 0.0) {
        return Err(Error::Config("SSIM constants must be positive".into()));
    }
    let n = (p.window * p.window) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for ch in 0..c {
        for wy in 0..h / p.window {
            for wx in 0..w / p.window {
                let px = |img: &Image| -> Vec<f64> {
                    let mut v = Vec::with_capacity(p.window * p.window);
                    for dy in 0..p.window {
                        for dx in 0..p.window {
                            v.push(img.get(wy * p.window + dy, wx * p.window + dx, ch));
                        }
                    }
                    v
                };
                let (xa, xb) = (px(a), px(b));
                let mu_a = xa.iter().sum::<f64>() / n;
                let mu_b = xb.iter().sum::<f64>() / n;
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for (x, y) in xa.iter().zip(&xb) {
                    let (da, db) = (x - mu_a, y - mu_b);
                    va += da * da;
                    vb += db * db;
                    cov += da * db;
                }
                total += ssim_from_moments(mu_a, mu_b, va / n, vb / n, cov / n, p);
                count += 1;
            }
        }
    }
    Ok(total / count as f64)
}

/// `‖F̂ − F*‖_F`.
pub fn recovery_error(f_hat: &Matrix, f_star: &Matrix) -> Result<f64> {
    Ok(f_hat.sub(f_star)?.frobenius_norm())
}

/// Recovery errors of LSE and LAD on one planted instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobustTrial {
    pub seed: u64,
    pub lse_error: f64,
    pub lad_error: f64,
}

impl RobustTrial {
    /// Strictly smaller LAD error.
    pub fn lad_wins(&self) -> bool {
        self.lad_error < self.lse_error
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobustReport {
    pub trials: Vec<RobustTrial>,
}

impl RobustReport {
    pub fn lad_wins(&self) -> usize {
        self.trials.iter().filter(|t| t.lad_wins()).count()
    }

    pub fn win_rate(&self) -> f64 {
        self.lad_wins() as f64 / self.trials.len() as f64
    }

    pub fn mean_errors(&self) -> (f64, f64) {
        let n = self.trials.len() as f64;
        (
            self.trials.iter().map(|t| t.lse_error).sum::<f64>() / n,
            self.trials.iter().map(|t| t.lad_error).sum::<f64>() / n,
        )
    }
}

/// Monte-Carlo LSE vs LAD comparison: trial `k` uses `spec` with seed
/// `spec.seed + k`. `lad` supplies the IRLS settings.
pub fn robustness_bench(spec: &SynthSpec, trials: usize, lad: &PnrConfig) -> Result<RobustReport> {
    if trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let lse = PnrConfig::lse().with_ridge(lad.ridge);
    let trials = (0..trials as u64)
        .map(|k| {
            let seed = spec.seed.wrapping_add(k);
            let inst = gen_regression_instance(&SynthSpec { seed, ..spec.clone() })?;
            let f2 = solve_lse(&inst.problem, &lse)?.f;
            let f1 = solve_lad_irls(&inst.problem, lad)?.f;
            Ok(RobustTrial {
                seed,
                lse_error: recovery_error(&f2, &inst.f_star)?,
                lad_error: recovery_error(&f1, &inst.f_star)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RobustReport { trials })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    /// Source counts to evaluate.
    pub shots: Vec<usize>,
    /// Standard deviation of Gaussian pixel noise added to source images.
    pub noise: f64,
    pub seed: u64,
    pub ssim: SsimParams,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            shots: vec![1, 3, 5],
            noise: 0.6,
            seed: 0,
            ssim: SsimParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShotReport {
    pub shots: usize,
    pub pairs: usize,
    pub mean_l1: f64,
    pub mean_ssim: f64,
    pub median_ssim: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub per_shots: Vec<ShotReport>,
}

impl EvalReport {
    pub fn get(&self, shots: usize) -> Option<&ShotReport> {
        self.per_shots.iter().find(|r| r.shots == shots)
    }

    /// Pair-weighted means over every evaluated `M`.
    pub fn overall(&self) -> (f64, f64) {
        let n: usize = self.per_shots.iter().map(|r| r.pairs).sum();
        let l1 = self.per_shots.iter().map(|r| r.mean_l1 * r.pairs as f64).sum::<f64>() / n as f64;
        let s = self.per_shots.iter().map(|r| r.mean_ssim * r.pairs as f64).sum::<f64>() / n as f64;
        (l1, s)
    }

    /// A readable table followed by a `key = value` block.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:>3} {:>6} {:>10} {:>10} {:>12}", "M", "pairs", "mean_l1", "mean_ssim", "median_ssim");
        for r in &self.per_shots {
            let _ = writeln!(
                s,
                "{:>3} {:>6} {:>10.6} {:>10.6} {:>12.6}",
                r.shots, r.pairs, r.mean_l1, r.mean_ssim, r.median_ssim
            );
        }
        let (l1, ss) = self.overall();
        let _ = writeln!(s);
        let _ = writeln!(s, "mean_l1 = {l1:?}");
        let _ = writeln!(s, "mean_ssim = {ss:?}");
        for r in &self.per_shots {
            let m = r.shots;
            let _ = writeln!(s, "m{m}.pairs = {}", r.pairs);
            let _ = writeln!(s, "m{m}.mean_l1 = {:?}", r.mean_l1);
            let _ = writeln!(s, "m{m}.mean_ssim = {:?}", r.mean_ssim);
            let _ = writeln!(s, "m{m}.median_ssim = {:?}", r.median_ssim);
        }
        s
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Source image of view `view` of identity `id` plus seeded zero-mean
/// Gaussian noise (unclamped, so the noise stays unbiased). The same view
/// always receives the same noise.
pub fn noisy_source(image: &Image, id: u32, view: usize, noise: f64, seed: u64) -> Image {
    if noise == 0.0 {
        return image.clone();
    }
    let mut rng = SeededRng::new(seed).fork(((id as u64) << 32) | view as u64);
    let (h, w, c) = image.dims();
    Image::from_fn(h, w, c, |y, x, ch| image.get(y, x, ch) + noise * rng.normal())
}

/// Runs `predict(shots, target)` for every test view and every `M`: the
/// shots are the first `M` other views of the same identity, with noisy
/// images. Identities with too few views are skipped for that `M`.
pub fn evaluate_with(
    test: &[ToyIdentity],
    opts: &EvalOptions,
    mut predict: impl FnMut(&[(&Image, &Image)], &ToyView) -> Result<Image>,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::contract("empty test set"));
    }
    let mut per_shots = Vec::new();
    for &m in &opts.shots {
        if m == 0 {
            return Err(Error::Config("M must be >= 1".into()));
        }
        let mut ssims = Vec::new();
        let mut l1 = 0.0;
        for ident in test {
            if ident.views.len() < m + 1 {
                continue;
            }
            let noisy: Vec<Image> = ident
                .views
                .iter()
                .enumerate()
                .map(|(k, v)| noisy_source(&v.image, ident.id, k, opts.noise, opts.seed))
                .collect();
            for (t, target) in ident.views.iter().enumerate() {
                let shots: Vec<(&Image, &Image)> = (0..ident.views.len())
                    .filter(|&k| k != t)
                    .take(m)
                    .map(|k| (&noisy[k], &ident.views[k].pose_map))
                    .collect();
                let out = predict(&shots, target)?;
                l1 += loss_l1(&out, &target.image)?;
                ssims.push(ssim(&out, &target.image, &opts.ssim)?);
            }
        }
        if ssims.is_empty() {
            return Err(Error::contract(format!("no test identity has {} views", m + 1)));
        }
        let pairs = ssims.len();
        let mean_ssim = ssims.iter().sum::<f64>() / pairs as f64;
        per_shots.push(ShotReport {
            shots: m,
            pairs,
            mean_l1: l1 / pairs as f64,
            mean_ssim,
            median_ssim: median(&mut ssims),
        });
    }
    Ok(EvalReport { per_shots })
}

/// [`evaluate_with`] using the checkpoint's networks and solver settings.
pub fn evaluate_checkpoint(ck: &Checkpoint, test: &[ToyIdentity], opts: &EvalOptions) -> Result<EvalReport> {
    let a = &ck.params.arch;
    if let Some(v) = test.iter().flat_map(|i| i.views.first()).next() {
        let want = ((a.image_size, a.image_size, a.channels), (a.image_size, a.image_size, a.joints));
        if (v.image.dims(), v.pose_map.dims()) != want {
            return Err(Error::Config(format!(
                "checkpoint expects images {:?} and pose maps {:?}, data has {:?} and {:?}",
                want.0,
                want.1,
                v.image.dims(),
                v.pose_map.dims()
            )));
        }
    }
    evaluate_with(test, opts, |shots, target| {
        infer_multishot(&ck.params, &ck.pnr, shots, &target.pose_map)
    })
}

//! Supervised, unsupervised and multi-shot training steps, and inference.
//!
//! A step runs the generator side forward once, updates the
//! discriminators on detached fakes, then back-propagates the weighted
//! generator loss through the updated (but frozen) discriminators and the
//! pNR node into the extractors and generator.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::layer::{pnr_forward, pnr_forward_weighted};
use crate::model::adam::AdamState;
use crate::model::config::{Mode, TrainConfig};
use crate::model::loss::{
    disc_loss_on_tape, gen_gan_loss_on_tape, l1_on_tape, loss_l1, perceptual_on_tape, total_loss, total_loss_on_tape,
    LossComponents,
};
use crate::model::net::{
    appearance_on_tape, extract_appearance, extract_pose, generate_image, generate_on_tape, pose_on_tape,
    DiscriminatorNodes, GeneratorNodes, ModelParams, Side,
};
use crate::solver::{predict_target, sample_mask, solve, stack_shots, PnrConfig};
use crate::synth::{SeededRng, ToyIdentity, ToyView};
use crate::tensor::{Matrix, NodeId, Tape};

/// One training example as patch matrices: `M` source shots
/// `(image, pose map)` and the target `(image, pose map)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub shots: Vec<(Matrix, Matrix)>,
    pub target_image: Matrix,
    pub target_pose: Matrix,
}

impl Sample {
    pub fn from_views(params: &ModelParams, sources: &[&ToyView], target: &ToyView) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::contract("a sample needs at least one source view"));
        }
        let a = &params.arch;
        Ok(Self {
            shots: sources
                .iter()
                .map(|v| Ok((a.image_patches(&v.image)?, a.pose_patches(&v.pose_map)?)))
                .collect::<Result<_>>()?,
            target_image: a.image_patches(&target.image)?,
            target_pose: a.pose_patches(&target.pose_map)?,
        })
    }

    /// Source and target are the same view.
    pub fn reconstruction(params: &ModelParams, view: &ToyView) -> Result<Self> {
        Self::from_views(params, &[view], view)
    }
}

/// Losses of one step. Discriminator losses are those before its update
/// and are zero when the discriminator step did not run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    pub step: u64,
    pub losses: LossComponents,
    pub total: f64,
    pub disc_image: f64,
    pub disc_pose: f64,
    /// The solve hit a singular system; nothing was updated.
    pub skipped: bool,
}

pub struct Trainer {
    pub cfg: TrainConfig,
    pub params: ModelParams,
    pub adam_generator: AdamState,
    pub adam_discriminator: AdamState,
    pub steps_done: u64,
    pub steps_skipped: u64,
    batch_rng: SeededRng,
    mask_rng: SeededRng,
}

/// Tape handles of a batch forward pass.
struct BatchForward {
    nodes: GeneratorNodes,
    l1: NodeId,
    perceptual: NodeId,
    /// `B × image_len`, generated images flattened in patch order.
    fake: NodeId,
    real: Matrix,
    source: Matrix,
    target_pose: Matrix,
}

fn flat(m: &Matrix) -> Matrix {
    m.reshape(1, m.rows() * m.cols()).expect("same element count")
}

fn stack_flat<'a>(ms: impl Iterator<Item = &'a Matrix>) -> Result<Matrix> {
    let rows: Vec<Matrix> = ms.map(flat).collect();
    Matrix::vstack(&rows.iter().collect::<Vec<_>>())
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut root = SeededRng::new(cfg.seed);
        let params = ModelParams::init(cfg.arch, root.next_u64())?;
        Ok(Self::with_params(cfg, params, root))
    }

    fn with_params(cfg: TrainConfig, params: ModelParams, mut root: SeededRng) -> Self {
        Self {
            adam_generator: AdamState::new(params.side_params(Side::Generator)),
            adam_discriminator: AdamState::new(params.side_params(Side::Discriminator)),
            batch_rng: root.fork(1),
            mask_rng: root.fork(2),
            cfg,
            params,
            steps_done: 0,
            steps_skipped: 0,
        }
    }

    /// Draws a batch from `identities` according to the mode and trains on it.
    pub fn train_step(&mut self, identities: &[ToyIdentity]) -> Result<StepReport> {
        let batch = self.sample_batch(identities)?;
        match self.cfg.mode {
            Mode::Unsupervised => self.train_step_unsupervised(&batch),
            _ => self.train_step_supervised(&batch),
        }
    }

    /// Random samples for the current mode: one identity each, `M` distinct
    /// source views and a distinct target (the source itself when
    /// unsupervised).
    pub fn sample_batch(&mut self, identities: &[ToyIdentity]) -> Result<Vec<Sample>> {
        if identities.is_empty() {
            return Err(Error::contract("no training identities"));
        }
        let shots = self.cfg.mode.shots();
        (0..self.cfg.batch)
            .map(|_| {
                let ident = &identities[self.batch_rng.below(identities.len())];
                let n = ident.views.len();
                match self.cfg.mode {
                    Mode::Unsupervised => Sample::reconstruction(&self.params, &ident.views[self.batch_rng.below(n)]),
                    _ => {
                        if n < shots + 1 {
                            return Err(Error::contract(format!(
                                "identity {} has {n} views, {} needed",
                                ident.id,
                                shots + 1
                            )));
                        }
                        let idx = self.batch_rng.sample_without_replacement(n, shots + 1);
                        let sources: Vec<&ToyView> = idx[..shots].iter().map(|&i| &ident.views[i]).collect();
                        Sample::from_views(&self.params, &sources, &ident.views[idx[shots]])
                    }
                }
            })
            .collect()
    }

    /// Paired (or multi-shot) step: sources predict the target.
    pub fn train_step_supervised(&mut self, batch: &[Sample]) -> Result<StepReport> {
        self.step(batch, None)
    }

    /// Self-reconstruction step: each sample's rows are masked with a fresh
    /// Bernoulli(`keep_prob`) mask before the solve.
    pub fn train_step_unsupervised(&mut self, batch: &[Sample]) -> Result<StepReport> {
        if self.cfg.weights.gan_image != 0.0 {
            return Err(Error::Config("unsupervised training requires lambda3 = 0".into()));
        }
        let masks = batch
            .iter()
            .map(|s| {
                let n: usize = s.shots.iter().map(|(h, _)| h.rows()).sum();
                sample_mask(n, self.cfg.keep_prob, &mut self.mask_rng)
            })
            .collect();
        self.step(batch, Some(masks))
    }

    /// Generator-side gradients of the L1 and perceptual terms for `batch`,
    /// in [`ModelParams::side_params`] order. Nothing is updated.
    pub fn generator_gradients(&self, batch: &[Sample]) -> Result<Vec<Matrix>> {
        let mut tape = Tape::new();
        let fw = self.forward_batch(&mut tape, batch, None)?;
        let w = &self.cfg.weights;
        let zero = tape.leaf(Matrix::zeros(1, 1));
        let mut lw = *w;
        lw.gan_image = 0.0;
        lw.gan_pose = 0.0;
        let loss = total_loss_on_tape(&mut tape, &lw, [fw.l1, fw.perceptual, zero, zero])?;
        let grads = tape.backward(loss)?;
        Ok(fw.nodes.ids().into_iter().map(|id| grads.get(id)).collect())
    }

    fn forward_batch(&self, tape: &mut Tape, batch: &[Sample], masks: Option<&[Vec<f64>]>) -> Result<BatchForward> {
        if batch.is_empty() {
            return Err(Error::contract("empty batch"));
        }
        let p = &self.params;
        let nodes = GeneratorNodes::bind(p, tape);
        let phi = tape.leaf(p.perceptual.clone());
        let mut gens = Vec::with_capacity(batch.len());
        let mut flats = Vec::with_capacity(batch.len());
        for (k, s) in batch.iter().enumerate() {
            let mut hs = Vec::with_capacity(s.shots.len());
            let mut ps = Vec::with_capacity(s.shots.len());
            for (img, pose) in &s.shots {
                let x = tape.leaf(img.clone());
                hs.push(appearance_on_tape(p, &nodes, tape, x)?);
                let kx = tape.leaf(pose.clone());
                ps.push(pose_on_tape(p, &nodes, tape, kx)?);
            }
            let (h_s, p_s) = if hs.len() == 1 {
                (hs[0], ps[0])
            } else {
                (tape.vstack(&hs)?, tape.vstack(&ps)?)
            };
            let kt = tape.leaf(s.target_pose.clone());
            let p_t = pose_on_tape(p, &nodes, tape, kt)?;
            let out = match masks {
                Some(m) => pnr_forward_weighted(tape, h_s, p_s, p_t, &m[k], &self.cfg.pnr)?,
                None => pnr_forward(tape, h_s, p_s, p_t, &self.cfg.pnr)?,
            };
            let g = generate_on_tape(p, &nodes, tape, out.h_t)?;
            let (r, c) = tape.value(g).shape();
            flats.push(tape.reshape(g, 1, r * c)?);
            gens.push(g);
        }
        let gen_all = tape.vstack(&gens)?;
        let targets: Vec<&Matrix> = batch.iter().map(|s| &s.target_image).collect();
        let tgt = tape.leaf(Matrix::vstack(&targets)?);
        let l1 = l1_on_tape(tape, gen_all, tgt)?;
        let perceptual = perceptual_on_tape(tape, gen_all, tgt, phi)?;
        let fake = tape.vstack(&flats)?;
        Ok(BatchForward {
            nodes,
            l1,
            perceptual,
            fake,
            real: stack_flat(batch.iter().map(|s| &s.target_image))?,
            source: stack_flat(batch.iter().map(|s| &s.shots[0].0))?,
            target_pose: stack_flat(batch.iter().map(|s| &s.target_pose))?,
        })
    }

    fn step(&mut self, batch: &[Sample], masks: Option<Vec<Vec<bool>>>) -> Result<StepReport> {
        self.steps_done += 1;
        let mut report = StepReport {
            step: self.steps_done,
            ..StepReport::default()
        };
        let masks: Option<Vec<Vec<f64>>> = masks.map(|ms| {
            ms.into_iter()
                .map(|m| m.into_iter().map(|k| if k { 1.0 } else { 0.0 }).collect())
                .collect()
        });
        let mut tape = Tape::new();
        let fw = match self.forward_batch(&mut tape, batch, masks.as_deref()) {
            Ok(fw) => fw,
            Err(Error::Singular { .. }) => {
                self.steps_skipped += 1;
                report.skipped = true;
                return Ok(report);
            }
            Err(e) => return Err(e),
        };
        report.losses.l1 = tape.value(fw.l1).get(0, 0);
        report.losses.perceptual = tape.value(fw.perceptual).get(0, 0);
        if !(report.losses.l1.is_finite() && report.losses.perceptual.is_finite()) {
            return Err(Error::Divergence(format!("non-finite reconstruction loss at step {}", report.step)));
        }

        let w = self.cfg.weights;
        let fake_detached = tape.value(fw.fake).clone();
        if w.gan_image > 0.0 || w.gan_pose > 0.0 {
            let (di, dk) = self.discriminator_step(&fw, &fake_detached)?;
            report.disc_image = di;
            report.disc_pose = dk;
        }

        // Discriminator parameters enter this tape as constants: their
        // gradients are computed but never applied.
        let dn = DiscriminatorNodes::bind(&self.params, &mut tape);
        let src = tape.leaf(fw.source.clone());
        let kt = tape.leaf(fw.target_pose.clone());
        let in_i = tape.hstack(&[fw.fake, src])?;
        let in_k = tape.hstack(&[fw.fake, kt])?;
        let logit_i = self.params.disc_image.forward(&mut tape, &dn.image, in_i)?;
        let logit_k = self.params.disc_pose.forward(&mut tape, &dn.pose, in_k)?;
        let g_i = gen_gan_loss_on_tape(&mut tape, logit_i);
        let g_k = gen_gan_loss_on_tape(&mut tape, logit_k);
        report.losses.gan_image = tape.value(g_i).get(0, 0);
        report.losses.gan_pose = tape.value(g_k).get(0, 0);
        report.total = total_loss(&w, &report.losses);
        if !report.losses.is_finite() || !report.total.is_finite() {
            return Err(Error::Divergence(format!("non-finite loss at step {}", report.step)));
        }
        let loss = total_loss_on_tape(&mut tape, &w, [fw.l1, fw.perceptual, g_i, g_k])?;
        let grads = tape.backward(loss)?;
        let g: Vec<Matrix> = fw.nodes.ids().into_iter().map(|id| grads.get(id)).collect();
        self.adam_generator
            .step(self.params.side_params_mut(Side::Generator), &g, &self.cfg.adam)?;
        if !self.params.is_finite() {
            return Err(Error::Divergence(format!("non-finite parameters after step {}", report.step)));
        }
        Ok(report)
    }

    /// Updates the discriminators whose weight is positive; returns their
    /// losses before the update.
    fn discriminator_step(&mut self, fw: &BatchForward, fake: &Matrix) -> Result<(f64, f64)> {
        let w = self.cfg.weights;
        let mut tape = Tape::new();
        let dn = DiscriminatorNodes::bind(&self.params, &mut tape);
        let mut terms = Vec::new();
        let mut vals = (0.0, 0.0);
        if w.gan_image > 0.0 {
            let real = tape.leaf(Matrix::hstack(&[&fw.real, &fw.source])?);
            let fake = tape.leaf(Matrix::hstack(&[fake, &fw.source])?);
            let lr = self.params.disc_image.forward(&mut tape, &dn.image, real)?;
            let lf = self.params.disc_image.forward(&mut tape, &dn.image, fake)?;
            let l = disc_loss_on_tape(&mut tape, lr, lf)?;
            vals.0 = tape.value(l).get(0, 0);
            terms.push(l);
        }
        if w.gan_pose > 0.0 {
            let real = tape.leaf(Matrix::hstack(&[&fw.real, &fw.target_pose])?);
            let fake = tape.leaf(Matrix::hstack(&[fake, &fw.target_pose])?);
            let lr = self.params.disc_pose.forward(&mut tape, &dn.pose, real)?;
            let lf = self.params.disc_pose.forward(&mut tape, &dn.pose, fake)?;
            let l = disc_loss_on_tape(&mut tape, lr, lf)?;
            vals.1 = tape.value(l).get(0, 0);
            terms.push(l);
        }
        if !(vals.0.is_finite() && vals.1.is_finite()) {
            return Err(Error::Divergence("non-finite discriminator loss".into()));
        }
        let loss = if terms.len() == 1 { terms[0] } else { tape.add(terms[0], terms[1])? };
        let grads = tape.backward(loss)?;
        // An inactive discriminator gets a zero gradient, and with zero
        // moments Adam leaves it exactly where it is.
        let g: Vec<Matrix> = dn.ids().into_iter().map(|id| grads.get(id)).collect();
        self.adam_discriminator
            .step(self.params.side_params_mut(Side::Discriminator), &g, &self.cfg.adam)?;
        Ok(vals)
    }
}

/// Generates the target view from `M ≥ 1` `(image, pose map)` shots.
pub fn infer_multishot(params: &ModelParams, pnr: &PnrConfig, shots: &[(&Image, &Image)], target_pose: &Image) -> Result<Image> {
    let feats = shots
        .iter()
        .map(|(img, pose)| Ok((extract_appearance(params, img)?, extract_pose(params, pose)?)))
        .collect::<Result<Vec<_>>>()?;
    let prob = stack_shots(&feats)?;
    let sol = solve(&prob, pnr)?;
    let h_t = predict_target(&sol.f, &extract_pose(params, target_pose)?)?;
    generate_image(params, &h_t)
}

pub fn infer(params: &ModelParams, pnr: &PnrConfig, source: &ToyView, target_pose: &Image) -> Result<Image> {
    infer_multishot(params, pnr, &[(&source.image, &source.pose_map)], target_pose)
}

/// Mean L1 over held-out identities: every ordered view pair for paired
/// modes, every view against itself for unsupervised.
pub fn heldout_l1(params: &ModelParams, pnr: &PnrConfig, identities: &[ToyIdentity], mode: Mode) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for ident in identities {
        for (i, s) in ident.views.iter().enumerate() {
            for (j, t) in ident.views.iter().enumerate() {
                let wanted = match mode {
                    Mode::Unsupervised => i == j,
                    _ => i != j,
                };
                if wanted {
                    total += loss_l1(&infer(params, pnr, s, &t.pose_map)?, &t.image)?;
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::contract("held-out set has no usable pairs"));
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::loss::LossWeights;
    use crate::synth::gen_toy_dataset;

    fn small_cfg(mode: Mode, weights: LossWeights) -> TrainConfig {
        let mut c = TrainConfig::for_mode(mode);
        c.weights = weights;
        c.batch = 2;
        c.seed = 11;
        c
    }

    fn data() -> Vec<ToyIdentity> {
        gen_toy_dataset(5, 6, 3).unwrap().train
    }

    #[test]
    fn zero_weights_leave_parameters_unchanged() {
        let mut t = Trainer::new(small_cfg(Mode::Supervised, LossWeights::new(0.0, 0.0, 0.0, 0.0))).unwrap();
        let before = t.params.clone();
        let r = t.train_step(&data()).unwrap();
        assert!(!r.skipped);
        assert_eq!(t.params, before);
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn gradient_reaches_every_generator_matrix() {
        let mut t = Trainer::new(small_cfg(Mode::Supervised, LossWeights::new(5.0, 0.0, 0.0, 0.0))).unwrap();
        let batch = t.sample_batch(&data()).unwrap();
        let grads = t.generator_gradients(&batch).unwrap();
        let names = ["appearance", "pose", "generator"];
        let shapes: Vec<String> = names
            .iter()
            .flat_map(|n| {
                let k = t.params.net(n).unwrap().layers.len();
                (0..k).flat_map(move |i| [format!("{n}.{i}.w"), format!("{n}.{i}.b")])
            })
            .collect();
        assert_eq!(grads.len(), shapes.len());
        for (g, name) in grads.iter().zip(&shapes) {
            assert!(g.max_abs() > 0.0, "{name} received no gradient");
        }
    }

    #[test]
    fn halves_touch_only_their_side() {
        let mut t = Trainer::new(small_cfg(Mode::Supervised, LossWeights::SUPERVISED)).unwrap();
        let batch = t.sample_batch(&data()).unwrap();
        let mut tape = Tape::new();
        let fw = t.forward_batch(&mut tape, &batch, None).unwrap();
        let fake = tape.value(fw.fake).clone();
        let gen_before: Vec<Matrix> = t.params.side_params(Side::Generator).into_iter().cloned().collect();
        let disc_before: Vec<Matrix> = t.params.side_params(Side::Discriminator).into_iter().cloned().collect();
        t.discriminator_step(&fw, &fake).unwrap();
        let gen_after: Vec<Matrix> = t.params.side_params(Side::Generator).into_iter().cloned().collect();
        let disc_mid: Vec<Matrix> = t.params.side_params(Side::Discriminator).into_iter().cloned().collect();
        assert_eq!(gen_before, gen_after);
        assert_ne!(disc_before, disc_mid);

        let mut t2 = Trainer::new(small_cfg(Mode::Supervised, LossWeights::SUPERVISED)).unwrap();
        let disc0: Vec<Matrix> = t2.params.side_params(Side::Discriminator).into_iter().cloned().collect();
        let gen0: Vec<Matrix> = t2.params.side_params(Side::Generator).into_iter().cloned().collect();
        t2.train_step_supervised(&batch).unwrap();
        let disc1: Vec<Matrix> = t2.params.side_params(Side::Discriminator).into_iter().cloned().collect();
        let gen1: Vec<Matrix> = t2.params.side_params(Side::Generator).into_iter().cloned().collect();
        assert_eq!(disc1, disc_mid, "generator half moved a discriminator");
        assert_ne!(gen0, gen1);
        assert_ne!(disc0, disc1);
    }

    #[test]
    fn inactive_discriminator_stays_put() {
        let mut t = Trainer::new(small_cfg(Mode::Unsupervised, LossWeights::UNSUPERVISED)).unwrap();
        let before = t.params.disc_image.clone();
        let pose_before = t.params.disc_pose.clone();
        for _ in 0..3 {
            t.train_step(&data()).unwrap();
        }
        assert_eq!(t.params.disc_image, before);
        assert_ne!(t.params.disc_pose, pose_before);
    }

    #[test]
    fn deterministic_trajectories() {
        let run = || {
            let mut t = Trainer::new(small_cfg(Mode::Supervised, LossWeights::SUPERVISED)).unwrap();
            let d = data();
            (0..4).map(|_| t.train_step(&d).unwrap()).collect::<Vec<_>>()
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.total.to_bits(), y.total.to_bits());
        }
    }

    #[test]
    fn full_mask_is_self_reconstruction() {
        let d = data();
        let w = LossWeights::new(5.0, 5.0, 0.0, 10.0);
        let mut u = small_cfg(Mode::Unsupervised, w);
        u.keep_prob = 1.0;
        let mut a = Trainer::new(u).unwrap();
        let mut b = Trainer::new(small_cfg(Mode::Supervised, w)).unwrap();
        assert_eq!(a.params, b.params);
        let batch = vec![
            Sample::reconstruction(&a.params, &d[0].views[0]).unwrap(),
            Sample::reconstruction(&a.params, &d[1].views[2]).unwrap(),
        ];
        let ra = a.train_step_unsupervised(&batch).unwrap();
        let rb = b.train_step_supervised(&batch).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn unsupervised_rejects_image_gan() {
        let mut t = Trainer::new(small_cfg(Mode::Supervised, LossWeights::SUPERVISED)).unwrap();
        let batch = vec![Sample::reconstruction(&t.params, &data()[0].views[0]).unwrap()];
        assert!(matches!(t.train_step_unsupervised(&batch), Err(Error::Config(_))));
        let mut bad = TrainConfig::for_mode(Mode::Unsupervised);
        bad.weights.gan_image = 1.0;
        assert!(matches!(Trainer::new(bad), Err(Error::Config(_))));
    }

    #[test]
    fn multishot_batches_have_distinct_views() {
        let mut t = Trainer::new(small_cfg(Mode::Multishot(3), LossWeights::SUPERVISED)).unwrap();
        let batch = t.sample_batch(&data()).unwrap();
        for s in &batch {
            assert_eq!(s.shots.len(), 3);
            for (img, _) in &s.shots {
                assert_ne!(img, &s.target_image);
            }
        }
        let r = t.train_step_supervised(&batch).unwrap();
        assert!(r.losses.is_finite());
    }

    #[test]
    fn fully_masked_rows_skip_the_step() {
        let mut t = Trainer::new(small_cfg(Mode::Unsupervised, LossWeights::UNSUPERVISED)).unwrap();
        let before = t.params.clone();
        let batch = vec![Sample::reconstruction(&t.params, &data()[0].views[0]).unwrap()];
        let mut tape = Tape::new();
        let zeros = vec![vec![0.0; 16]];
        assert!(matches!(
            t.forward_batch(&mut tape, &batch, Some(&zeros)),
            Err(Error::Singular { .. })
        ));
        let r = t.step(&batch, Some(vec![vec![false; 16]])).unwrap();
        assert!(r.skipped);
        assert_eq!(t.steps_skipped, 1);
        assert_eq!(t.params, before);
    }

    #[test]
    fn duplicated_shot_matches_single_shot() {
        let t = Trainer::new(TrainConfig::default()).unwrap();
        let d = data();
        let (s, tg) = (&d[0].views[0], &d[0].views[1]);
        let one = infer(&t.params, &PnrConfig::lse(), s, &tg.pose_map).unwrap();
        let two = infer_multishot(
            &t.params,
            &PnrConfig::lse(),
            &[(&s.image, &s.pose_map), (&s.image, &s.pose_map)],
            &tg.pose_map,
        )
        .unwrap();
        let diff = one.data().iter().zip(two.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
        let direct = infer_multishot(&t.params, &PnrConfig::lse(), &[(&s.image, &s.pose_map)], &tg.pose_map).unwrap();
        assert_eq!(one, direct);
    }

    #[test]
    fn generated_pixels_stay_in_unit_interval() {
        let mut t = Trainer::new(small_cfg(Mode::Supervised, LossWeights::SUPERVISED)).unwrap();
        let d = data();
        for _ in 0..5 {
            t.train_step(&d).unwrap();
        }
        let img = infer(&t.params, &t.cfg.pnr, &d[0].views[0], &d[0].views[1].pose_map).unwrap();
        assert!(img.data().iter().all(|&v| v > 0.0 && v < 1.0));
    }
}

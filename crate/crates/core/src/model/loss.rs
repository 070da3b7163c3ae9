//! The four training losses, on the tape and as plain values.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::tensor::{Matrix, NodeId, Tape, UnaryOp};

/// `(λ1, λ2, λ3, λ4)` for L1, perceptual, image-GAN and pose-GAN terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub l1: f64,
    pub perceptual: f64,
    pub gan_image: f64,
    pub gan_pose: f64,
}

impl LossWeights {
    pub const SUPERVISED: LossWeights = LossWeights::new(5.0, 5.0, 10.0, 10.0);
    pub const UNSUPERVISED: LossWeights = LossWeights::new(5.0, 5.0, 0.0, 10.0);

    pub const fn new(l1: f64, perceptual: f64, gan_image: f64, gan_pose: f64) -> Self {
        Self {
            l1,
            perceptual,
            gan_image,
            gan_pose,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.l1, self.perceptual, self.gan_image, self.gan_pose]
    }

    pub fn is_zero(&self) -> bool {
        self.as_array().iter().all(|&l| l == 0.0)
    }
}

/// Generator-side loss values of one step, each a batch mean.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossComponents {
    pub l1: f64,
    pub perceptual: f64,
    pub gan_image: f64,
    pub gan_pose: f64,
}

impl LossComponents {
    pub fn as_array(&self) -> [f64; 4] {
        [self.l1, self.perceptual, self.gan_image, self.gan_pose]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// `λ1·L1 + λ2·Lper + λ3·L_I + λ4·L_K`.
pub fn total_loss(w: &LossWeights, c: &LossComponents) -> f64 {
    w.as_array().iter().zip(c.as_array()).map(|(l, v)| l * v).sum()
}

/// Tape version of [`total_loss`]; terms with zero weight are left out.
pub fn total_loss_on_tape(tape: &mut Tape, w: &LossWeights, terms: [NodeId; 4]) -> Result<NodeId> {
    let mut acc: Option<NodeId> = None;
    for (l, t) in w.as_array().into_iter().zip(terms) {
        if l == 0.0 {
            continue;
        }
        let s = tape.scale(t, l);
        acc = Some(match acc {
            None => s,
            Some(a) => tape.add(a, s)?,
        });
    }
    Ok(match acc {
        Some(a) => a,
        None => tape.leaf(Matrix::zeros(1, 1)),
    })
}

/// Mean absolute pixel difference.
pub fn loss_l1(generated: &Image, target: &Image) -> Result<f64> {
    generated.mean_abs_diff(target)
}

pub fn l1_on_tape(tape: &mut Tape, a: NodeId, b: NodeId) -> Result<NodeId> {
    let d = tape.sub(a, b)?;
    let d = tape.unary(UnaryOp::Abs, d);
    Ok(tape.mean(d))
}

/// Mean absolute difference after a frozen linear projection of each
/// patch row: `mean |(A − B)·Φ|`.
pub fn perceptual_on_tape(tape: &mut Tape, a: NodeId, b: NodeId, projection: NodeId) -> Result<NodeId> {
    let d = tape.sub(a, b)?;
    let z = tape.matmul(d, projection)?;
    let z = tape.unary(UnaryOp::Abs, z);
    Ok(tape.mean(z))
}

/// Discriminator and generator GAN losses from logits, as batch means:
/// `d = softplus(−real) + softplus(fake)`, `g = softplus(−fake)`.
pub fn loss_gan(real_logits: &[f64], fake_logits: &[f64]) -> Result<(f64, f64)> {
    if real_logits.is_empty() || real_logits.len() != fake_logits.len() {
        return Err(Error::dim("loss_gan", (real_logits.len(), 1), (fake_logits.len(), 1)));
    }
    let sp = |x: f64| UnaryOp::Softplus.apply(x);
    let n = real_logits.len() as f64;
    let d = real_logits.iter().map(|&r| sp(-r)).sum::<f64>() / n + fake_logits.iter().map(|&f| sp(f)).sum::<f64>() / n;
    let g = fake_logits.iter().map(|&f| sp(-f)).sum::<f64>() / n;
    Ok((d, g))
}

/// Discriminator loss `mean softplus(−real) + mean softplus(fake)`.
pub fn disc_loss_on_tape(tape: &mut Tape, real_logits: NodeId, fake_logits: NodeId) -> Result<NodeId> {
    let r = tape.scale(real_logits, -1.0);
    let r = tape.softplus(r);
    let r = tape.mean(r);
    let f = tape.softplus(fake_logits);
    let f = tape.mean(f);
    tape.add(r, f)
}

/// Non-saturating generator loss `mean softplus(−fake)`.
pub fn gen_gan_loss_on_tape(tape: &mut Tape, fake_logits: NodeId) -> NodeId {
    let f = tape.scale(fake_logits, -1.0);
    let f = tape.softplus(f);
    tape.mean(f)
}

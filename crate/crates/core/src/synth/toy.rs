//! Toy "person" images: three colored body parts laid out by six keypoints.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::synth::SeededRng;

pub const IMAGE_SIZE: usize = 16;
pub const IMAGE_CHANNELS: usize = 3;
pub const JOINTS: usize = 6;
pub const HEATMAP_SIGMA: f64 = 1.5;
pub const BACKGROUND: f64 = 0.05;

/// Joint order: head, neck, hip, left foot, right foot, hand. Coordinates
/// are `(y, x)` pixel indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Keypoints(pub [(usize, usize); JOINTS]);

impl Keypoints {
    pub fn as_f64(&self) -> Vec<(f64, f64)> {
        self.0.iter().map(|&(y, x)| (y as f64, x as f64)).collect()
    }

    fn sample(rng: &mut SeededRng) -> Self {
        let cx = 4 + rng.below(8);
        let top = rng.below(3);
        let torso = 3 + rng.below(3);
        let spread = rng.below(4);
        let arm = 1 + rng.below(3);
        let head = (top + 1, cx);
        let neck = (top + 3, cx);
        let hip = (neck.0 + torso, cx);
        let foot_y = hip.0 + 4;
        Keypoints([
            head,
            neck,
            hip,
            (foot_y, cx - spread),
            (foot_y, cx + spread),
            (neck.0 + arm, cx + 3),
        ])
    }
}

/// Per-identity colors; the pose-invariant content of a toy person.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Palette {
    pub head: [f64; 3],
    pub torso: [f64; 3],
    pub legs: [f64; 3],
}

impl Palette {
    fn sample(rng: &mut SeededRng) -> Self {
        let mut color = || [rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)];
        Palette {
            head: color(),
            torso: color(),
            legs: color(),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.head.iter().chain(&self.torso).chain(&self.legs).copied().collect()
    }

    pub fn from_slice(v: &[f64]) -> Option<Self> {
        if v.len() != 9 {
            return None;
        }
        Some(Palette {
            head: [v[0], v[1], v[2]],
            torso: [v[3], v[4], v[5]],
            legs: [v[6], v[7], v[8]],
        })
    }
}

/// One rendered view of an identity.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyView {
    pub keypoints: Keypoints,
    pub image: Image,
    pub pose_map: Image,
}

impl ToyView {
    pub fn render(palette: &Palette, keypoints: Keypoints) -> Self {
        let pose_map = render_pose_heatmap(&keypoints.as_f64(), IMAGE_SIZE, IMAGE_SIZE, HEATMAP_SIGMA)
            .expect("sampled keypoints lie inside the image");
        ToyView {
            keypoints,
            image: render_person(palette, &keypoints),
            pose_map,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyIdentity {
    pub id: u32,
    pub palette: Palette,
    pub views: Vec<ToyView>,
}

/// A (source, target) pair of views of one identity.
#[derive(Clone, Copy, Debug)]
pub struct ToySample<'a> {
    pub identity: u32,
    pub source: &'a ToyView,
    pub target: &'a ToyView,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyDataset {
    pub train: Vec<ToyIdentity>,
    pub test: Vec<ToyIdentity>,
}

impl ToyDataset {
    /// Every ordered pair of distinct views within each identity.
    pub fn pairs(identities: &[ToyIdentity]) -> Vec<ToySample<'_>> {
        let mut out = Vec::new();
        for ident in identities {
            for (i, s) in ident.views.iter().enumerate() {
                for (j, t) in ident.views.iter().enumerate() {
                    if i != j {
                        out.push(ToySample {
                            identity: ident.id,
                            source: s,
                            target: t,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Renders `identities` people with `samples_per_id` distinct poses each.
/// One identity in five (rounded down) goes to the test split.
pub fn gen_toy_dataset(identities: usize, samples_per_id: usize, seed: u64) -> Result<ToyDataset> {
    if identities == 0 || samples_per_id == 0 {
        return Err(Error::Config("identities and samples_per_id must be >= 1".into()));
    }
    let mut rng = SeededRng::new(seed);
    let n_test = identities / 5;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for id in 0..identities {
        let mut r = rng.fork(id as u64);
        let palette = Palette::sample(&mut r);
        let mut poses: Vec<Keypoints> = Vec::with_capacity(samples_per_id);
        while poses.len() < samples_per_id {
            let kp = Keypoints::sample(&mut r);
            if !poses.contains(&kp) {
                poses.push(kp);
            }
        }
        let ident = ToyIdentity {
            id: id as u32,
            palette,
            views: poses.into_iter().map(|kp| ToyView::render(&palette, kp)).collect(),
        };
        if id < identities - n_test {
            train.push(ident);
        } else {
            test.push(ident);
        }
    }
    Ok(ToyDataset { train, test })
}

/// One Gaussian channel per keypoint: `exp(-‖pixel − kp‖² / (2σ²))`.
pub fn render_pose_heatmap(keypoints: &[(f64, f64)], height: usize, width: usize, sigma: f64) -> Result<Image> {
    for &(y, x) in keypoints {
        if !(y >= 0.0 && x >= 0.0 && y <= (height - 1) as f64 && x <= (width - 1) as f64) {
            return Err(Error::contract(format!(
                "keypoint ({y}, {x}) outside {height}x{width} image"
            )));
        }
    }
    let denom = 2.0 * sigma * sigma;
    Ok(Image::from_fn(height, width, keypoints.len(), |py, px, c| {
        let (ky, kx) = keypoints[c];
        let d2 = (py as f64 - ky).powi(2) + (px as f64 - kx).powi(2);
        (-d2 / denom).exp()
    }))
}

fn render_person(palette: &Palette, kp: &Keypoints) -> Image {
    let mut img = Image::filled(IMAGE_SIZE, IMAGE_SIZE, IMAGE_CHANNELS, BACKGROUND);
    let [head, neck, hip, lfoot, rfoot, hand] = kp.0;
    draw_line(&mut img, hip, lfoot, palette.legs);
    draw_line(&mut img, hip, rfoot, palette.legs);
    let (x0, x1) = (neck.1.saturating_sub(2), (neck.1 + 2).min(IMAGE_SIZE - 1));
    for y in neck.0..=hip.0 {
        for x in x0..=x1 {
            paint(&mut img, y, x, palette.torso);
        }
    }
    draw_line(&mut img, neck, hand, palette.torso);
    for y in head.0.saturating_sub(1)..=(head.0 + 1).min(IMAGE_SIZE - 1) {
        for x in head.1.saturating_sub(1)..=(head.1 + 1).min(IMAGE_SIZE - 1) {
            paint(&mut img, y, x, palette.head);
        }
    }
    img
}

fn paint(img: &mut Image, y: usize, x: usize, color: [f64; 3]) {
    for (c, v) in color.iter().enumerate() {
        img.set(y, x, c, *v);
    }
}

fn draw_line(img: &mut Image, from: (usize, usize), to: (usize, usize), color: [f64; 3]) {
    let (dy, dx) = (to.0 as f64 - from.0 as f64, to.1 as f64 - from.1 as f64);
    let steps = dy.abs().max(dx.abs()) as usize;
    for t in 0..=steps {
        let f = if steps == 0 { 0.0 } else { t as f64 / steps as f64 };
        let y = (from.0 as f64 + f * dy).round() as usize;
        let x = (from.1 as f64 + f * dx).round() as usize;
        paint(img, y, x, color);
    }
}

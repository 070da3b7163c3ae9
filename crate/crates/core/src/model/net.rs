//! Dense per-patch networks standing in for the extractors, the generator
//! and the two discriminators.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::synth::{SeededRng, IMAGE_CHANNELS, IMAGE_SIZE, JOINTS};
use crate::tensor::{Matrix, NodeId, Tape, UnaryOp};

/// Shapes of every network. Images are `image_size²·channels`, cut into a
/// `grid × grid` arrangement of `patch × patch` tiles; each tile is one row
/// of `H` and `P`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arch {
    pub image_size: usize,
    pub channels: usize,
    pub joints: usize,
    pub patch: usize,
    /// Width of `P` and height of `F`.
    pub d: usize,
    /// Width of `H` and `F`.
    pub big_d: usize,
    pub hidden: usize,
    /// Hidden tanh/relu layers per network before the fixed ones.
    pub depth: usize,
    pub disc_hidden: usize,
    pub perceptual_dim: usize,
}

impl Default for Arch {
    fn default() -> Self {
        Self {
            image_size: IMAGE_SIZE,
            channels: IMAGE_CHANNELS,
            joints: JOINTS,
            patch: 4,
            d: 3,
            big_d: 16,
            hidden: 32,
            depth: 1,
            disc_hidden: 32,
            perceptual_dim: 16,
        }
    }
}

impl Arch {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.image_size,
            self.channels,
            self.joints,
            self.patch,
            self.d,
            self.big_d,
            self.hidden,
            self.disc_hidden,
            self.perceptual_dim,
        ];
        if dims.contains(&0) || self.depth == 0 {
            return Err(Error::Config("architecture sizes must be positive".into()));
        }
        if self.image_size % self.patch != 0 {
            return Err(Error::Config(format!(
                "patch {} does not divide image size {}",
                self.patch, self.image_size
            )));
        }
        if self.d >= self.regions() {
            return Err(Error::Config(format!("d = {} must be below the region count {}", self.d, self.regions())));
        }
        Ok(())
    }

    /// `h·w`, the number of patches.
    pub fn regions(&self) -> usize {
        (self.image_size / self.patch).pow(2)
    }

    pub fn patch_pixels(&self) -> usize {
        self.patch * self.patch * self.channels
    }

    pub fn pose_patch_pixels(&self) -> usize {
        self.patch * self.patch * self.joints
    }

    pub fn image_len(&self) -> usize {
        self.image_size * self.image_size * self.channels
    }

    pub fn pose_len(&self) -> usize {
        self.image_size * self.image_size * self.joints
    }

    /// Patch matrix of an image, checking its size against the architecture.
    pub fn image_patches(&self, img: &Image) -> Result<Matrix> {
        self.check_dims(img, self.channels, "image")?;
        img.to_patches(self.patch)
    }

    pub fn pose_patches(&self, pose: &Image) -> Result<Matrix> {
        self.check_dims(pose, self.joints, "pose map")?;
        pose.to_patches(self.patch)
    }

    pub fn image_from_patches(&self, m: &Matrix) -> Result<Image> {
        Image::from_patches(m, self.image_size, self.image_size, self.channels, self.patch)
    }

    fn check_dims(&self, img: &Image, channels: usize, what: &str) -> Result<()> {
        let want = (self.image_size, self.image_size, channels);
        if img.dims() != want {
            return Err(Error::contract(format!("{what} is {:?}, expected {want:?}", img.dims())));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply(self, tape: &mut Tape, x: NodeId) -> NodeId {
        match self {
            Activation::Identity => x,
            Activation::Tanh => tape.unary(UnaryOp::Tanh, x),
            Activation::Relu => tape.unary(UnaryOp::Relu, x),
            Activation::Sigmoid => tape.unary(UnaryOp::Sigmoid, x),
        }
    }
}

/// `x·W + 1·b`, with `b` a single row.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub w: Matrix,
    pub b: Matrix,
}

/// Stack of dense layers; `hidden` after every layer but the last, `output`
/// after the last.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub hidden: Activation,
    pub output: Activation,
}

/// Tape handles of an [`Mlp`]'s parameters, `(W, b)` per layer.
#[derive(Clone, Debug)]
pub struct MlpNodes(pub Vec<(NodeId, NodeId)>);

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn glorot(sizes: &[usize], hidden: Activation, output: Activation, rng: &mut SeededRng) -> Self {
        let layers = sizes
            .windows(2)
            .map(|io| {
                let a = (6.0 / (io[0] + io[1]) as f64).sqrt();
                Dense {
                    w: Matrix::from_fn(io[0], io[1], |_, _| rng.uniform(-a, a)),
                    b: Matrix::zeros(1, io[1]),
                }
            })
            .collect();
        Self { layers, hidden, output }
    }

    pub fn bind(&self, tape: &mut Tape) -> MlpNodes {
        MlpNodes(
            self.layers
                .iter()
                .map(|l| (tape.leaf(l.w.clone()), tape.leaf(l.b.clone())))
                .collect(),
        )
    }

    pub fn forward(&self, tape: &mut Tape, nodes: &MlpNodes, x: NodeId) -> Result<NodeId> {
        let last = nodes.0.len() - 1;
        let mut h = x;
        for (k, &(w, b)) in nodes.0.iter().enumerate() {
            let z = tape.matmul(h, w)?;
            let z = tape.add_row(z, b)?;
            h = if k == last { self.output } else { self.hidden }.apply(tape, z);
        }
        Ok(h)
    }

    pub fn params(&self) -> Vec<&Matrix> {
        self.layers.iter().flat_map(|l| [&l.w, &l.b]).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        self.layers.iter_mut().flat_map(|l| [&mut l.w, &mut l.b]).collect()
    }
}

impl MlpNodes {
    pub fn ids(&self) -> Vec<NodeId> {
        self.0.iter().flat_map(|&(w, b)| [w, b]).collect()
    }
}

/// Every network of the toy model plus the frozen perceptual projection.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub arch: Arch,
    pub appearance: Mlp,
    pub pose: Mlp,
    pub generator: Mlp,
    pub disc_image: Mlp,
    pub disc_pose: Mlp,
    /// `patch_pixels × perceptual_dim`, never trained.
    pub perceptual: Matrix,
}

/// Which networks an optimizer step may touch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Appearance extractor, pose extractor, image generator.
    Generator,
    /// Both discriminators.
    Discriminator,
}

pub const NET_NAMES: [&str; 5] = ["appearance", "pose", "generator", "disc_image", "disc_pose"];

impl ModelParams {
    pub fn init(arch: Arch, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = SeededRng::new(seed);
        let hidden = |n: usize, width: usize| vec![width; n];
        let sizes = |input: usize, mids: Vec<usize>, out: usize| {
            let mut v = vec![input];
            v.extend(mids);
            v.push(out);
            v
        };
        let (t, r, s, i) = (Activation::Tanh, Activation::Relu, Activation::Sigmoid, Activation::Identity);
        let appearance = Mlp::glorot(
            &sizes(arch.patch_pixels(), hidden(arch.depth, arch.hidden), arch.big_d),
            t,
            i,
            &mut rng.fork(0),
        );
        let pose = Mlp::glorot(
            &sizes(arch.pose_patch_pixels(), hidden(arch.depth + 1, arch.hidden), arch.d),
            t,
            i,
            &mut rng.fork(1),
        );
        let generator = Mlp::glorot(
            &sizes(arch.big_d, hidden(arch.depth, arch.hidden), arch.patch_pixels()),
            t,
            s,
            &mut rng.fork(2),
        );
        let disc_image = Mlp::glorot(
            &sizes(2 * arch.image_len(), hidden(arch.depth, arch.disc_hidden), 1),
            r,
            i,
            &mut rng.fork(3),
        );
        let disc_pose = Mlp::glorot(
            &sizes(arch.image_len() + arch.pose_len(), hidden(arch.depth, arch.disc_hidden), 1),
            r,
            i,
            &mut rng.fork(4),
        );
        let mut prng = rng.fork(5);
        let scale = 1.0 / (arch.patch_pixels() as f64).sqrt();
        let perceptual = Matrix::from_fn(arch.patch_pixels(), arch.perceptual_dim, |_, _| scale * prng.normal());
        Ok(Self {
            arch,
            appearance,
            pose,
            generator,
            disc_image,
            disc_pose,
            perceptual,
        })
    }

    pub fn net(&self, name: &str) -> Option<&Mlp> {
        match name {
            "appearance" => Some(&self.appearance),
            "pose" => Some(&self.pose),
            "generator" => Some(&self.generator),
            "disc_image" => Some(&self.disc_image),
            "disc_pose" => Some(&self.disc_pose),
            _ => None,
        }
    }

    pub fn net_mut(&mut self, name: &str) -> Option<&mut Mlp> {
        match name {
            "appearance" => Some(&mut self.appearance),
            "pose" => Some(&mut self.pose),
            "generator" => Some(&mut self.generator),
            "disc_image" => Some(&mut self.disc_image),
            "disc_pose" => Some(&mut self.disc_pose),
            _ => None,
        }
    }

    /// Trainable matrices as `(name, value)` in a fixed order, e.g.
    /// `pose.1.w`.
    pub fn named(&self) -> Vec<(String, &Matrix)> {
        let mut out = Vec::new();
        for net in NET_NAMES {
            let mlp = self.net(net).expect("known net");
            for (k, l) in mlp.layers.iter().enumerate() {
                out.push((format!("{net}.{k}.w"), &l.w));
                out.push((format!("{net}.{k}.b"), &l.b));
            }
        }
        out
    }

    pub fn side_params_mut(&mut self, side: Side) -> Vec<&mut Matrix> {
        match side {
            Side::Generator => {
                let mut v = self.appearance.params_mut();
                v.extend(self.pose.params_mut());
                v.extend(self.generator.params_mut());
                v
            }
            Side::Discriminator => {
                let mut v = self.disc_image.params_mut();
                v.extend(self.disc_pose.params_mut());
                v
            }
        }
    }

    pub fn side_params(&self, side: Side) -> Vec<&Matrix> {
        match side {
            Side::Generator => {
                let mut v = self.appearance.params();
                v.extend(self.pose.params());
                v.extend(self.generator.params());
                v
            }
            Side::Discriminator => {
                let mut v = self.disc_image.params();
                v.extend(self.disc_pose.params());
                v
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.named().iter().all(|(_, m)| m.is_finite())
    }
}

/// Generator-side handles on one tape.
#[derive(Clone, Debug)]
pub struct GeneratorNodes {
    pub appearance: MlpNodes,
    pub pose: MlpNodes,
    pub generator: MlpNodes,
}

impl GeneratorNodes {
    pub fn bind(params: &ModelParams, tape: &mut Tape) -> Self {
        Self {
            appearance: params.appearance.bind(tape),
            pose: params.pose.bind(tape),
            generator: params.generator.bind(tape),
        }
    }

    /// In the order of [`ModelParams::side_params`] for the generator side.
    pub fn ids(&self) -> Vec<NodeId> {
        let mut v = self.appearance.ids();
        v.extend(self.pose.ids());
        v.extend(self.generator.ids());
        v
    }
}

/// Discriminator handles on one tape.
#[derive(Clone, Debug)]
pub struct DiscriminatorNodes {
    pub image: MlpNodes,
    pub pose: MlpNodes,
}

impl DiscriminatorNodes {
    pub fn bind(params: &ModelParams, tape: &mut Tape) -> Self {
        Self {
            image: params.disc_image.bind(tape),
            pose: params.disc_pose.bind(tape),
        }
    }

    pub fn ids(&self) -> Vec<NodeId> {
        let mut v = self.image.ids();
        v.extend(self.pose.ids());
        v
    }
}

/// `H = f_a(patches)`, one row per patch.
pub fn appearance_on_tape(params: &ModelParams, nodes: &GeneratorNodes, tape: &mut Tape, patches: NodeId) -> Result<NodeId> {
    params.appearance.forward(tape, &nodes.appearance, patches)
}

/// `P = f_p(pose patches)`.
pub fn pose_on_tape(params: &ModelParams, nodes: &GeneratorNodes, tape: &mut Tape, patches: NodeId) -> Result<NodeId> {
    params.pose.forward(tape, &nodes.pose, patches)
}

/// Generated patches, values in (0, 1).
pub fn generate_on_tape(params: &ModelParams, nodes: &GeneratorNodes, tape: &mut Tape, h_t: NodeId) -> Result<NodeId> {
    if tape.value(h_t).shape() != (params.arch.regions(), params.arch.big_d) {
        return Err(Error::dim(
            "generate_image",
            tape.value(h_t).shape(),
            (params.arch.regions(), params.arch.big_d),
        ));
    }
    params.generator.forward(tape, &nodes.generator, h_t)
}

fn eval_generator_side(params: &ModelParams, f: impl FnOnce(&mut Tape, &GeneratorNodes) -> Result<NodeId>) -> Result<Matrix> {
    let mut tape = Tape::new();
    let nodes = GeneratorNodes::bind(params, &mut tape);
    let out = f(&mut tape, &nodes)?;
    Ok(tape.value(out).clone())
}

/// `H` (regions × D) for one image.
pub fn extract_appearance(params: &ModelParams, image: &Image) -> Result<Matrix> {
    let x = params.arch.image_patches(image)?;
    eval_generator_side(params, |t, n| {
        let x = t.leaf(x);
        appearance_on_tape(params, n, t, x)
    })
}

/// `P` (regions × d) for one pose map.
pub fn extract_pose(params: &ModelParams, pose_map: &Image) -> Result<Matrix> {
    let x = params.arch.pose_patches(pose_map)?;
    eval_generator_side(params, |t, n| {
        let x = t.leaf(x);
        pose_on_tape(params, n, t, x)
    })
}

/// Decodes `H_t` into an image.
pub fn generate_image(params: &ModelParams, h_t: &Matrix) -> Result<Image> {
    let patches = eval_generator_side(params, |t, n| {
        let x = t.leaf(h_t.clone());
        generate_on_tape(params, n, t, x)
    })?;
    params.arch.image_from_patches(&patches)
}

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Height × width × channels image, channel-last, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self {
            height,
            width,
            channels,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f64) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// Splits into `patch × patch` tiles. Row `k` of the result is tile `k`
    /// in row-major tile order, flattened as (row, column, channel).
    pub fn to_patches(&self, patch: usize) -> Result<Matrix> {
        if patch == 0 || self.height % patch != 0 || self.width % patch != 0 {
            return Err(Error::contract(format!(
                "{}x{} image does not tile into {patch}x{patch} patches",
                self.height, self.width
            )));
        }
        let (gh, gw) = (self.height / patch, self.width / patch);
        let per = patch * patch * self.channels;
        let mut data = Vec::with_capacity(gh * gw * per);
        for gy in 0..gh {
            for gx in 0..gw {
                for py in 0..patch {
                    for px in 0..patch {
                        for c in 0..self.channels {
                            data.push(self.get(gy * patch + py, gx * patch + px, c));
                        }
                    }
                }
            }
        }
        Matrix::new(gh * gw, per, data)
    }

    /// Inverse of [`Image::to_patches`].
    pub fn from_patches(
        m: &Matrix,
        height: usize,
        width: usize,
        channels: usize,
        patch: usize,
    ) -> Result<Image> {
        let (gh, gw) = (height / patch, width / patch);
        if gh * patch != height || gw * patch != width || m.shape() != (gh * gw, patch * patch * channels) {
            return Err(Error::dim(
                "from_patches",
                m.shape(),
                (gh * gw, patch * patch * channels),
            ));
        }
        let mut img = Image::filled(height, width, channels, 0.0);
        for gy in 0..gh {
            for gx in 0..gw {
                let row = m.row(gy * gw + gx);
                let mut k = 0;
                for py in 0..patch {
                    for px in 0..patch {
                        for c in 0..channels {
                            img.set(gy * patch + py, gx * patch + px, c, row[k]);
                            k += 1;
                        }
                    }
                }
            }
        }
        Ok(img)
    }

    /// `height × (width·channels)` matrix, the on-disk layout.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::new(self.height, self.width * self.channels, self.data.clone())
            .expect("image dimensions are positive")
    }

    pub fn from_matrix(m: &Matrix, channels: usize) -> Result<Image> {
        if channels == 0 || m.cols() % channels != 0 {
            return Err(Error::Format(format!(
                "{:?} matrix is not an image with {channels} channels",
                m.shape()
            )));
        }
        Ok(Image {
            height: m.rows(),
            width: m.cols() / channels,
            channels,
            data: m.data().to_vec(),
        })
    }

    pub fn mean_abs_diff(&self, other: &Image) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(Error::dim(
                "image_l1",
                (self.height, self.width * self.channels),
                (other.height, other.width * other.channels),
            ));
        }
        let s: f64 = self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).sum();
        Ok(s / self.data.len() as f64)
    }
}

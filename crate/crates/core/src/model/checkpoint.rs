//! `PNRC` checkpoints.
//!
//! Layout: magic `PNRC`, `version` (1) and record `count` as little-endian
//! `u32`, then `count` records of `name_len: u32`, `name` (UTF-8) and one
//! `PNRM` matrix. Records, in order: `meta` (architecture sizes), `pnr`
//! (norm, IRLS iterations, IRLS floor, ridge), every network matrix,
//! `perceptual`, then for each optimizer `adam.<side>.step` and the
//! `adam.<side>.m.<k>` / `adam.<side>.v.<k>` moments.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::adam::AdamState;
use crate::model::net::{Arch, ModelParams, Side};
use crate::solver::{Norm, PnrConfig};
use crate::tensor::io::{dim_u32, read_matrix, read_u32, write_matrix};
use crate::tensor::Matrix;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PNRC";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub pnr: PnrConfig,
    pub adam_generator: AdamState,
    pub adam_discriminator: AdamState,
}

fn arch_to_row(a: &Arch) -> Matrix {
    let v = [
        a.image_size,
        a.channels,
        a.joints,
        a.patch,
        a.d,
        a.big_d,
        a.hidden,
        a.depth,
        a.disc_hidden,
        a.perceptual_dim,
    ];
    Matrix::from_rows(&[v.map(|x| x as f64)])
}

fn arch_from_row(m: &Matrix) -> Result<Arch> {
    let v = m.data();
    if m.shape() != (1, 10) || v.iter().any(|x| !(x.fract() == 0.0 && *x >= 0.0 && *x < u32::MAX as f64)) {
        return Err(Error::Format(format!("bad meta record {:?}", m.shape())));
    }
    let u = |k: usize| v[k] as usize;
    let arch = Arch {
        image_size: u(0),
        channels: u(1),
        joints: u(2),
        patch: u(3),
        d: u(4),
        big_d: u(5),
        hidden: u(6),
        depth: u(7),
        disc_hidden: u(8),
        perceptual_dim: u(9),
    };
    arch.validate().map_err(|e| Error::Format(e.to_string()))?;
    Ok(arch)
}

fn pnr_to_row(c: &PnrConfig) -> Matrix {
    Matrix::from_rows(&[[c.norm.p() as f64, c.irls_iters as f64, c.irls_eps, c.ridge]])
}

fn pnr_from_row(m: &Matrix) -> Result<PnrConfig> {
    let v = m.data();
    if m.shape() != (1, 4) {
        return Err(Error::Format("bad pnr record".into()));
    }
    let norm = match v[0] {
        x if x == 1.0 => Norm::L1,
        x if x == 2.0 => Norm::L2,
        x => return Err(Error::Format(format!("bad norm {x} in checkpoint"))),
    };
    let cfg = PnrConfig {
        norm,
        irls_iters: v[1] as usize,
        irls_eps: v[2],
        ridge: v[3],
    };
    cfg.validate().map_err(|e| Error::Format(e.to_string()))?;
    Ok(cfg)
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Generator => "generator",
        Side::Discriminator => "discriminator",
    }
}

impl Checkpoint {
    fn records(&self) -> Vec<(String, Matrix)> {
        let mut out = vec![
            ("meta".to_string(), arch_to_row(&self.params.arch)),
            ("pnr".to_string(), pnr_to_row(&self.pnr)),
        ];
        out.extend(self.params.named().into_iter().map(|(n, m)| (n, m.clone())));
        out.push(("perceptual".into(), self.params.perceptual.clone()));
        for (side, st) in [
            (Side::Generator, &self.adam_generator),
            (Side::Discriminator, &self.adam_discriminator),
        ] {
            let s = side_name(side);
            out.push((format!("adam.{s}.step"), Matrix::filled(1, 1, st.step as f64)));
            for (k, m) in st.m.iter().enumerate() {
                out.push((format!("adam.{s}.m.{k}"), m.clone()));
            }
            for (k, v) in st.v.iter().enumerate() {
                out.push((format!("adam.{s}.v.{k}"), v.clone()));
            }
        }
        out
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        let recs = self.records();
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&dim_u32(recs.len())?.to_le_bytes())?;
        for (name, m) in &recs {
            w.write_all(&dim_u32(name.len())?.to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            write_matrix(w, m)?;
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Format(format!("bad checkpoint magic {magic:?}")));
        }
        let version = read_u32(r)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let count = read_u32(r)? as usize;
        let mut recs: Vec<(String, Matrix)> = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let len = read_u32(r)? as usize;
            if len > 4096 {
                return Err(Error::Format(format!("record name of {len} bytes")));
            }
            let mut name = vec![0u8; len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| Error::Format("record name is not UTF-8".into()))?;
            recs.push((name, read_matrix(r)?));
        }
        Self::from_records(recs)
    }

    fn from_records(recs: Vec<(String, Matrix)>) -> Result<Self> {
        let mut it = recs.into_iter();
        let mut next = |want: &str| -> Result<Matrix> {
            match it.next() {
                Some((n, m)) if n == want => Ok(m),
                Some((n, _)) => Err(Error::Format(format!("expected record `{want}`, found `{n}`"))),
                None => Err(Error::Format(format!("missing record `{want}`"))),
            }
        };
        let arch = arch_from_row(&next("meta")?)?;
        let pnr = pnr_from_row(&next("pnr")?)?;
        let mut params = ModelParams::init(arch, 0)?;
        let names: Vec<(String, (usize, usize))> =
            params.named().into_iter().map(|(n, m)| (n, m.shape())).collect();
        let mut loaded = Vec::with_capacity(names.len());
        for (name, shape) in &names {
            let m = next(name)?;
            if m.shape() != *shape {
                return Err(Error::Format(format!("`{name}` is {:?}, expected {shape:?}", m.shape())));
            }
            loaded.push(m);
        }
        // `named` lists generator-side nets first, then discriminators, in
        // the same order as `side_params_mut`.
        let mut values = loaded.into_iter();
        for side in [Side::Generator, Side::Discriminator] {
            for slot in params.side_params_mut(side) {
                *slot = values.next().expect("one value per parameter");
            }
        }
        let perceptual = next("perceptual")?;
        if perceptual.shape() != params.perceptual.shape() {
            return Err(Error::Format("perceptual projection has the wrong shape".into()));
        }
        params.perceptual = perceptual;
        let mut adam = Vec::new();
        for side in [Side::Generator, Side::Discriminator] {
            let s = side_name(side);
            let step = next(&format!("adam.{s}.step"))?;
            let shapes: Vec<(usize, usize)> = params.side_params(side).iter().map(|m| m.shape()).collect();
            let mut st = AdamState::new(params.side_params(side));
            st.step = step.get(0, 0) as u64;
            for (k, sh) in shapes.iter().enumerate() {
                st.m[k] = next(&format!("adam.{s}.m.{k}"))?;
                if st.m[k].shape() != *sh {
                    return Err(Error::Format(format!("adam.{s}.m.{k} has the wrong shape")));
                }
            }
            for (k, sh) in shapes.iter().enumerate() {
                st.v[k] = next(&format!("adam.{s}.v.{k}"))?;
                if st.v[k].shape() != *sh {
                    return Err(Error::Format(format!("adam.{s}.v.{k} has the wrong shape")));
                }
            }
            adam.push(st);
        }
        if let Some((n, _)) = it.next() {
            return Err(Error::Format(format!("unexpected record `{n}`")));
        }
        let adam_discriminator = adam.pop().expect("two states");
        let adam_generator = adam.pop().expect("two states");
        Ok(Self {
            params,
            pnr,
            adam_generator,
            adam_discriminator,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(&mut BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::adam::AdamParams;

    fn sample() -> Checkpoint {
        let arch = Arch {
            big_d: 5,
            hidden: 6,
            disc_hidden: 4,
            ..Arch::default()
        };
        let mut params = ModelParams::init(arch, 9).unwrap();
        let mut adam_generator = AdamState::new(params.side_params(Side::Generator));
        let grads: Vec<Matrix> = params
            .side_params(Side::Generator)
            .iter()
            .map(|m| Matrix::from_fn(m.rows(), m.cols(), |i, j| (i as f64 - j as f64) * 0.01))
            .collect();
        adam_generator
            .step(params.side_params_mut(Side::Generator), &grads, &AdamParams::default())
            .unwrap();
        let adam_discriminator = AdamState::new(params.side_params(Side::Discriminator));
        Checkpoint {
            params,
            pnr: PnrConfig::lad().with_iters(7),
            adam_generator,
            adam_discriminator,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let ck = sample();
        let mut buf = Vec::new();
        ck.write(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"PNRC");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        let back = Checkpoint::read(&mut buf.as_slice()).unwrap();
        assert_eq!(back, ck);
        let mut again = Vec::new();
        back.write(&mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let mut buf = Vec::new();
        sample().write(&mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::read(&mut bad.as_slice()), Err(Error::Format(_))));
        assert!(Checkpoint::read(&mut &buf[..buf.len() - 3]).is_err());
        let mut more = buf.clone();
        let count = u32::from_le_bytes(more[8..12].try_into().unwrap());
        more[8..12].copy_from_slice(&(count + 1).to_le_bytes());
        more.extend_from_slice(&5u32.to_le_bytes());
        more.extend_from_slice(b"extra");
        write_matrix(&mut more, &Matrix::zeros(1, 1)).unwrap();
        assert!(matches!(Checkpoint::read(&mut more.as_slice()), Err(Error::Format(_))));
    }
}

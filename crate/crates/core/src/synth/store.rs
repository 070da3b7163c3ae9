//! Dataset directories: one `PNRM` file per image and pose map plus a
//! plain-text manifest.
//!
//! Manifest lines:
//!
//! ```text
//! identity <id> <split> <palette: 9 comma-separated values>
//! view <id> <image file> <pose file> <keypoints: y,x pairs joined by ';'>
//! ```
//!
//! `#` starts a comment line. Views belong to the most recent identity line
//! with the same id.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::synth::toy::{Keypoints, Palette, Split, ToyDataset, ToyIdentity, ToyView, JOINTS};
use crate::synth::IMAGE_CHANNELS;
use crate::tensor::io::{load_matrix, save_matrix};

pub const MANIFEST_FILE: &str = "manifest.txt";

pub fn write_dataset(dir: &Path, ds: &ToyDataset) -> Result<Vec<std::path::PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut manifest = String::from("# toy dataset: identity <id> <split> <palette>; view <id> <image> <pose> <keypoints>\n");
    let mut written = Vec::new();
    let mut k = 0usize;
    for (split, idents) in [(Split::Train, &ds.train), (Split::Test, &ds.test)] {
        for ident in idents {
            let palette: Vec<String> = ident.palette.to_vec().iter().map(|v| format!("{v:?}")).collect();
            writeln!(manifest, "identity {} {} {}", ident.id, split.as_str(), palette.join(",")).unwrap();
            for view in &ident.views {
                let image_file = format!("view_{k:05}_image.pnrm");
                let pose_file = format!("view_{k:05}_pose.pnrm");
                save_matrix(dir.join(&image_file), &view.image.to_matrix())?;
                save_matrix(dir.join(&pose_file), &view.pose_map.to_matrix())?;
                written.push(dir.join(&image_file));
                written.push(dir.join(&pose_file));
                let kps: Vec<String> = view.keypoints.0.iter().map(|(y, x)| format!("{y},{x}")).collect();
                writeln!(manifest, "view {} {image_file} {pose_file} {}", ident.id, kps.join(";")).unwrap();
                k += 1;
            }
        }
    }
    let mpath = dir.join(MANIFEST_FILE);
    fs::write(&mpath, manifest)?;
    written.push(mpath);
    Ok(written)
}

pub fn read_dataset(dir: &Path) -> Result<ToyDataset> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let mut ds = ToyDataset {
        train: Vec::new(),
        test: Vec::new(),
    };
    // (split, index into that split's vector) of the current identity
    let mut current: Option<(Split, usize, u32)> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::Format(format!("manifest line {}: {what}", lineno + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["identity", id, split, palette] => {
                let id: u32 = id.parse().map_err(|_| bad("bad identity id"))?;
                let values = palette
                    .split(',')
                    .map(|v| v.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad("bad palette"))?;
                let palette = Palette::from_slice(&values).ok_or_else(|| bad("palette needs 9 values"))?;
                let split = match *split {
                    "train" => Split::Train,
                    "test" => Split::Test,
                    _ => return Err(bad("split must be train or test")),
                };
                let target = match split {
                    Split::Train => &mut ds.train,
                    Split::Test => &mut ds.test,
                };
                target.push(ToyIdentity {
                    id,
                    palette,
                    views: Vec::new(),
                });
                current = Some((split, target.len() - 1, id));
            }
            ["view", id, image_file, pose_file, kps] => {
                let id: u32 = id.parse().map_err(|_| bad("bad identity id"))?;
                let Some((split, idx, cur)) = current else {
                    return Err(bad("view before any identity"));
                };
                if cur != id {
                    return Err(bad("view does not follow its identity"));
                }
                let image = Image::from_matrix(&load_matrix(dir.join(image_file))?, IMAGE_CHANNELS)?;
                let pose_map = Image::from_matrix(&load_matrix(dir.join(pose_file))?, JOINTS)?;
                let mut points = [(0usize, 0usize); JOINTS];
                let parts: Vec<&str> = kps.split(';').collect();
                if parts.len() != JOINTS {
                    return Err(bad("wrong keypoint count"));
                }
                for (p, s) in points.iter_mut().zip(parts) {
                    let (y, x) = s.split_once(',').ok_or_else(|| bad("bad keypoint"))?;
                    *p = (
                        y.parse().map_err(|_| bad("bad keypoint"))?,
                        x.parse().map_err(|_| bad("bad keypoint"))?,
                    );
                }
                let view = ToyView {
                    keypoints: Keypoints(points),
                    image,
                    pose_map,
                };
                match split {
                    Split::Train => ds.train[idx].views.push(view),
                    Split::Test => ds.test[idx].views.push(view),
                }
            }
            _ => return Err(bad("unrecognized line")),
        }
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_toy_dataset;

    #[test]
    fn dataset_directory_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = gen_toy_dataset(5, 2, 3).unwrap();
        let files = write_dataset(dir.path(), &ds).unwrap();
        assert!(files.iter().all(|f| f.exists()));
        assert_eq!(read_dataset(dir.path()).unwrap(), ds);
    }

    #[test]
    fn malformed_manifest_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(MANIFEST_FILE), "view 0 a b c\n").unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::Format(_))));
    }
}

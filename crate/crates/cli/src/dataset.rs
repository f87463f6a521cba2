//! Image / ground-truth pairing.
//!
//! A dataset root holds `images/` and `gt/`; files pair by stem
//! (`images/0001.pgm` ↔ `gt/0001.png`). Ground truth is a binary map where
//! any nonzero pixel is a boundary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use autoed_core::image::{list_rasters, load_gray};
use autoed_core::{EdgeMap, GrayImage};
use thiserror::Error;

pub const IMAGE_DIR: &str = "images";
pub const GT_DIR: &str = "gt";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset at {0} has no images")]
    Empty(PathBuf),
    #[error("unpaired files: {}", .0.join(", "))]
    Unpaired(Vec<String>),
    #[error(transparent)]
    Core(#[from] autoed_core::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImagePair {
    pub id: String,
    pub image: PathBuf,
    pub ground_truth: PathBuf,
}

#[derive(Clone, Debug)]
pub struct LoadedPair {
    pub id: String,
    pub image: GrayImage,
    pub ground_truth: EdgeMap,
}

/// Pairs two directories by file stem. Returns the pairs and the stems
/// present on only one side (as `images/<stem>` or `gt/<stem>`).
pub fn pair_dirs(left: &Path, right: &Path) -> Result<(Vec<ImagePair>, Vec<String>), DatasetError> {
    let left_files: BTreeMap<_, _> = list_rasters(left)?.into_iter().collect();
    let mut right_files: BTreeMap<_, _> = list_rasters(right)?.into_iter().collect();
    let mut pairs = Vec::new();
    let mut unpaired = Vec::new();
    for (stem, image) in left_files {
        match right_files.remove(&stem) {
            Some(ground_truth) => pairs.push(ImagePair {
                id: stem,
                image,
                ground_truth,
            }),
            None => unpaired.push(format!("{}/{stem}", dir_label(left))),
        }
    }
    unpaired.extend(right_files.into_keys().map(|s| format!("{}/{s}", dir_label(right))));
    Ok((pairs, unpaired))
}

fn dir_label(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

/// Strictly paired dataset: every image needs ground truth and vice versa.
pub fn discover(root: &Path) -> Result<Vec<ImagePair>, DatasetError> {
    let (pairs, unpaired) = pair_dirs(&root.join(IMAGE_DIR), &root.join(GT_DIR))?;
    if !unpaired.is_empty() {
        return Err(DatasetError::Unpaired(unpaired));
    }
    if pairs.is_empty() {
        return Err(DatasetError::Empty(root.to_path_buf()));
    }
    Ok(pairs)
}

pub fn load_pair(pair: &ImagePair) -> Result<LoadedPair, DatasetError> {
    let image = load_gray(&pair.image)?;
    let gt = load_gray(&pair.ground_truth)?;
    if (gt.width(), gt.height()) != (image.width(), image.height()) {
        return Err(autoed_core::Error::DimensionMismatch {
            left_width: image.width(),
            left_height: image.height(),
            right_width: gt.width(),
            right_height: gt.height(),
        }
        .into());
    }
    Ok(LoadedPair {
        id: pair.id.clone(),
        image,
        ground_truth: EdgeMap::from_gray(&gt),
    })
}

pub fn load(root: &Path) -> Result<Vec<LoadedPair>, DatasetError> {
    discover(root)?.iter().map(load_pair).collect()
}

//! Seeded scene sampling and on-disk dataset layout (PNGs + JSON index).

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::prompt::{prompt_of, PromptTokens};
use super::render::{render, Image};
use super::types::{Cell, Color, ObjectSpec, SceneSpec, Shape, Size};
use crate::imgio;
use crate::seeding::stream_rng;
use crate::tensor::Scalar;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset index malformed: {0}")]
    Index(#[from] serde_json::Error),
    #[error("png error: {0}")]
    Png(#[from] imgio::ImgIoError),
    #[error("unsupported dataset index version {0}")]
    Version(u32),
}

#[derive(Debug, Clone)]
pub struct DatasetItem<T: Scalar> {
    pub spec: SceneSpec,
    pub image: Image<T>,
    pub tokens: PromptTokens,
}

fn sample_color<R: Rng>(rng: &mut R) -> Color {
    Color::ALL[rng.gen_range(0..Color::ALL.len())]
}

/// Sample one valid scene. Object count is 0/1/2 with weights 10/45/45;
/// attributes uniform; cells rejection-sampled until disjoint.
pub fn sample_scene<R: Rng>(rng: &mut R) -> SceneSpec {
    let background = sample_color(rng);
    let n_objects = match rng.gen_range(0..20u32) {
        0..=1 => 0,
        2..=10 => 1,
        _ => 2,
    };
    let mut objects: Vec<ObjectSpec> = Vec::with_capacity(n_objects);
    while objects.len() < n_objects {
        let obj = ObjectSpec {
            shape: Shape::ALL[rng.gen_range(0..Shape::ALL.len())],
            color: sample_color(rng),
            cell: Cell(rng.gen_range(0..Cell::COUNT as u8)),
            size: Size::ALL[rng.gen_range(0..Size::ALL.len())],
        };
        if objects.iter().any(|o| o.cell == obj.cell) {
            continue; // overlap: reject and redraw
        }
        objects.push(obj);
    }
    let mut spec = SceneSpec { background, objects };
    spec.canonicalize();
    spec
}

/// Generate `n` (spec, image, tokens) rows. Each row draws from its own
/// derived stream, so generation order (or parallelism) cannot change the
/// result.
pub fn make_dataset<T: Scalar>(n: usize, seed: u64) -> Vec<DatasetItem<T>> {
    assert!(n > 0, "dataset size must be positive");
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let spec = sample_scene(&mut rng);
            let image = render(&spec).expect("sampled scenes satisfy invariants");
            let tokens = prompt_of(&spec);
            DatasetItem { spec, image, tokens }
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexRow {
    png: String,
    spec: SceneSpec,
    tokens: PromptTokens,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetIndex {
    version: u32,
    seed: u64,
    items: Vec<IndexRow>,
}

/// Write PNGs plus `index.json` into `dir` (created if missing).
pub fn save_dataset<T: Scalar>(
    items: &[DatasetItem<T>],
    seed: u64,
    dir: &Path,
) -> Result<(), DatasetError> {
    fs::create_dir_all(dir)?;
    let mut rows = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let name = format!("img_{i:06}.png");
        imgio::save_png(&item.image, &dir.join(&name))?;
        rows.push(IndexRow { png: name, spec: item.spec.clone(), tokens: item.tokens });
    }
    let index = DatasetIndex { version: 1, seed, items: rows };
    fs::write(dir.join("index.json"), serde_json::to_vec_pretty(&index)?)?;
    Ok(())
}

/// Load a dataset directory. Images are re-rendered from the indexed specs so
/// training sees exact palette values rather than 8-bit quantized pixels; the
/// PNGs are the interchange copy.
pub fn load_dataset<T: Scalar>(dir: &Path) -> Result<Vec<DatasetItem<T>>, DatasetError> {
    let raw = fs::read(dir.join("index.json"))?;
    let index: DatasetIndex = serde_json::from_slice(&raw)?;
    if index.version != 1 {
        return Err(DatasetError::Version(index.version));
    }
    Ok(index
        .items
        .into_iter()
        .map(|row| {
            let image = render(&row.spec).expect("indexed specs are valid");
            DatasetItem { spec: row.spec, image, tokens: row.tokens }
        })
        .collect())
}

pub fn index_path(dir: &Path) -> PathBuf {
    dir.join("index.json")
}

//! Loading and writing segmented cells as PNG rasters plus binary masks.
//!
//! Two layouts are understood:
//! - a manifest CSV with columns `id,label,path[,mask]`, paths relative to
//!   the manifest; a missing mask defaults to the sibling `<stem>.mask.png`;
//! - a directory `<root>/{circular,elongated,other}/*.png`, each image with
//!   its `<stem>.mask.png` sibling.

use std::path::{Path, PathBuf};

use image::{DynamicImage, GenericImageView};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{CellSample, Mask};
use crate::label::ClassLabel;

const MASK_SUFFIX: &str = ".mask.png";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    #[serde(default)]
    pub label: Option<String>,
    pub path: String,
    #[serde(default)]
    pub mask: Option<String>,
}

fn open_image(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Sibling mask path `<dir>/<stem>.mask.png` of an image.
pub fn default_mask_path(image: &Path) -> PathBuf {
    let stem = image.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    image.with_file_name(format!("{stem}{MASK_SUFFIX}"))
}

/// Read one cell. Color images keep their RGB raster; gray is the luma.
pub fn load_cell(id: &str, image: &Path, mask: &Path, label: Option<ClassLabel>) -> Result<CellSample> {
    let img = open_image(image)?;
    if !mask.exists() {
        return Err(Error::io(
            mask,
            std::io::Error::new(std::io::ErrorKind::NotFound, "mask not found"),
        ));
    }
    let m = open_image(mask)?;
    if img.dimensions() != m.dimensions() {
        return Err(Error::Dimension(format!(
            "`{id}`: image is {:?} but mask is {:?}",
            img.dimensions(),
            m.dimensions()
        )));
    }
    let rgb = img.color().has_color().then(|| img.to_rgb8());
    CellSample::new(id, img.to_luma8(), rgb, Mask::from_gray(&m.to_luma8()), label)
}

fn parse_label(s: Option<&str>) -> Result<Option<ClassLabel>> {
    match s.map(str::trim) {
        None | Some("") => Ok(None),
        Some(l) => l.parse().map(Some),
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Cells listed in a manifest, loaded in parallel, in manifest order.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<CellSample>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let entries = read_manifest(path)?;
    entries
        .par_iter()
        .map(|e| {
            let image = base.join(&e.path);
            let mask = e.mask.as_ref().filter(|m| !m.is_empty()).map_or_else(|| default_mask_path(&image), |m| base.join(m));
            load_cell(&e.id, &image, &mask, parse_label(e.label.as_deref())?)
        })
        .collect()
}

/// Cells under `<root>/<label>/`, ids are file stems, sorted by label then name.
pub fn load_directory(root: impl AsRef<Path>) -> Result<Vec<CellSample>> {
    let root = root.as_ref();
    let mut jobs = Vec::new();
    for label in ClassLabel::ALL {
        let dir = root.join(label.name());
        if !dir.is_dir() {
            continue;
        }
        let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                name.ends_with(".png") && !name.ends_with(MASK_SUFFIX)
            })
            .collect();
        files.sort();
        jobs.extend(files.into_iter().map(|p| (label, p)));
    }
    if jobs.is_empty() {
        return Err(Error::EmptyData(format!("no cell images under {}", root.display())));
    }
    jobs.par_iter()
        .map(|(label, p)| {
            let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            load_cell(&id, p, &default_mask_path(p), Some(*label))
        })
        .collect()
}

/// Manifest file if `path` is a file, class directory layout otherwise.
pub fn load_cells(path: impl AsRef<Path>) -> Result<Vec<CellSample>> {
    let path = path.as_ref();
    if path.is_dir() {
        load_directory(path)
    } else {
        load_manifest(path)
    }
}

/// Write cells in the directory layout plus a `manifest.csv`; returns the manifest path.
pub fn write_cells(dir: impl AsRef<Path>, cells: &[CellSample]) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let mut entries = Vec::with_capacity(cells.len());
    for c in cells {
        let sub = c.label.map_or("unlabelled", ClassLabel::name);
        let folder = dir.join(sub);
        std::fs::create_dir_all(&folder).map_err(|e| Error::io(&folder, e))?;
        let image = folder.join(format!("{}.png", c.id));
        let mask = default_mask_path(&image);
        let save = |res: image::ImageResult<()>, p: &Path| {
            res.map_err(|source| Error::Image {
                path: p.to_path_buf(),
                source,
            })
        };
        match &c.rgb {
            Some(rgb) => save(rgb.save(&image), &image)?,
            None => save(c.gray.save(&image), &image)?,
        }
        save(c.mask.to_gray().save(&mask), &mask)?;
        entries.push(ManifestEntry {
            id: c.id.clone(),
            label: c.label.map(|l| l.name().to_string()),
            path: format!("{sub}/{}.png", c.id),
            mask: Some(format!("{sub}/{}{MASK_SUFFIX}", c.id)),
        });
    }
    let manifest = dir.join("manifest.csv");
    let mut w = csv::Writer::from_path(&manifest)?;
    for e in &entries {
        w.serialize(e)?;
    }
    w.flush().map_err(|e| Error::io(&manifest, e))?;
    Ok(manifest)
}

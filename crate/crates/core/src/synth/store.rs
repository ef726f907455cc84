//! Dataset directory layout: `manifest.txt` plus, per fold,
//! `<fold>_images.dlt` (`N×s×s`), `<fold>_labels.dlt` (`N`) and
//! `<fold>_lineage.dlt` (`N×2`: base id, rotation in degrees).

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::{write_pgm, KeyValues};
use crate::numerics::{dlt, Tensor};
use crate::synth::dataset::{Dataset, Sample, Split, SplitCounts, SplitRealization};
use crate::synth::pattern::CellClassSpec;

pub const MANIFEST: &str = "manifest.txt";

fn role_path(dir: &Path, split: Split, role: &str) -> PathBuf {
    dir.join(format!("{}_{role}.dlt", split.name()))
}

fn counts_value(c: SplitCounts) -> String {
    c.to_string()
}

fn parse_counts(kv: &KeyValues, key: &str) -> Result<SplitCounts> {
    let v: Vec<usize> = kv
        .list(key)?
        .ok_or_else(|| Error::Format(format!("missing key `{key}`")))?;
    match v.as_slice() {
        [a, b, c] => Ok(SplitCounts::new(*a, *b, *c)),
        _ => Err(Error::Format(format!("`{key}` needs three counts"))),
    }
}

/// Writes the dataset and returns the files written, manifest last.
pub fn save_dataset(dir: &Path, ds: &Dataset) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for split in Split::ALL {
        let samples: Vec<&Sample> = ds.split(split).collect();
        if samples.is_empty() {
            continue;
        }
        let images: Vec<&Tensor> = samples.iter().map(|s| &s.image).collect();
        let labels = Tensor::new(
            &[samples.len()],
            samples.iter().map(|s| s.label as f32).collect(),
        )?;
        let lineage = Tensor::new(
            &[samples.len(), 2],
            samples
                .iter()
                .flat_map(|s| [s.base_id as f32, s.rotation_deg])
                .collect(),
        )?;
        for (role, t) in [
            ("images", Tensor::stack(&images)?),
            ("labels", labels),
            ("lineage", lineage),
        ] {
            let p = role_path(dir, split, role);
            dlt::write(&p, &t)?;
            written.push(p);
        }
    }
    let mut kv = KeyValues::new();
    kv.set("format", "lsit-dataset-1");
    kv.set("classes", ds.class_names().join(","));
    for (i, c) in ds.classes.iter().enumerate() {
        kv.set(&format!("class.{i}"), c.to_record());
    }
    kv.set("window", ds.window);
    kv.set("seed", ds.seed);
    kv.set("base_per_class", ds.base_per_class);
    kv.set("split_requested", counts_value(ds.realization.requested));
    kv.set("split_bases", counts_value(ds.realization.bases));
    kv.set("split_realized", counts_value(ds.realization.realized));
    kv.set("split_note", ds.realization.note());
    for split in Split::ALL {
        kv.set(&format!("count.{}", split.name()), ds.split_len(split));
    }
    let manifest = dir.join(MANIFEST);
    kv.save(&manifest)?;
    written.push(manifest);
    Ok(written)
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let kv = KeyValues::load(&dir.join(MANIFEST))?;
    let names: Vec<String> = kv.list("classes")?.unwrap_or_default();
    let classes = (0..names.len())
        .map(|i| CellClassSpec::from_record(kv.require(&format!("class.{i}"))?))
        .collect::<Result<Vec<_>>>()?;
    let window: usize = kv.require_parsed("window")?;
    let realization = SplitRealization {
        requested: parse_counts(&kv, "split_requested")?,
        bases: parse_counts(&kv, "split_bases")?,
        realized: parse_counts(&kv, "split_realized")?,
    };
    let mut samples = Vec::new();
    for split in Split::ALL {
        let expected: usize = kv.require_parsed(&format!("count.{}", split.name()))?;
        if expected == 0 {
            continue;
        }
        let images = dlt::read(&role_path(dir, split, "images"))?;
        let labels = dlt::read(&role_path(dir, split, "labels"))?;
        let lineage = dlt::read(&role_path(dir, split, "lineage"))?;
        if images.shape() != [expected, window, window]
            || labels.len() != expected
            || lineage.shape() != [expected, 2]
        {
            return Err(Error::Format(format!(
                "{split} tensors disagree with the manifest ({expected} samples of {window}×{window})"
            )));
        }
        for (i, image) in images.unstack().into_iter().enumerate() {
            let label = labels.data()[i] as usize;
            if label >= classes.len() {
                return Err(Error::Format(format!("label {label} out of range")));
            }
            samples.push(Sample {
                image,
                label,
                base_id: lineage.data()[2 * i] as usize,
                rotation_deg: lineage.data()[2 * i + 1],
                split,
            });
        }
    }
    Ok(Dataset {
        classes,
        window,
        seed: kv.require_parsed("seed")?,
        base_per_class: kv.require_parsed("base_per_class")?,
        realization,
        samples,
    })
}

/// Writes the first `per_class` test samples of each class as PGM files.
pub fn export_pgm(dir: &Path, ds: &Dataset, per_class: usize) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut seen = vec![0usize; ds.n_classes()];
    let mut written = Vec::new();
    for s in ds.split(Split::Test) {
        if seen[s.label] >= per_class {
            continue;
        }
        let p = dir.join(format!(
            "{}_{:02}_base{}_rot{:03}.pgm",
            ds.classes[s.label].name, seen[s.label], s.base_id, s.rotation_deg as u32
        ));
        write_pgm(&p, &s.image)?;
        written.push(p);
        seen[s.label] += 1;
    }
    Ok(written)
}

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::numerics::{rotate_image, Tensor};
use crate::seeded_rng;
use crate::synth::pattern::{generate_pattern, CellClassSpec};

/// Crop windows the pipeline supports.
pub const SUPPORTED_WINDOWS: [usize; 7] = [66, 60, 56, 50, 46, 40, 36];
/// Side of the master frame each base sample is rendered at before rotation.
pub const MASTER_SIZE: usize = 96;
/// Rotations per base sample: 0°, 10°, …, 350°.
pub const ROTATIONS: usize = 36;
pub const ROTATION_STEP_DEG: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::param(format!("unknown split `{s}`")))
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn new(train: usize, val: usize, test: usize) -> Self {
        Self { train, val, test }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }

    fn scaled(&self, k: usize) -> Self {
        Self::new(self.train * k, self.val * k, self.test * k)
    }
}

impl fmt::Display for SplitCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.train, self.val, self.test)
    }
}

/// Per-class split request and what could be realized without splitting any
/// base sample's rotations across folds.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitRealization {
    pub requested: SplitCounts,
    pub bases: SplitCounts,
    pub realized: SplitCounts,
}

impl SplitRealization {
    /// Rounds each requested count to whole bases (`ROTATIONS` samples each);
    /// any excess over `base_per_class` is taken from the training fold.
    pub fn plan(requested: SplitCounts, base_per_class: usize) -> Result<Self> {
        let capacity = base_per_class * ROTATIONS;
        if requested.total() > capacity {
            return Err(Error::Capacity {
                requested: requested.total(),
                available: capacity,
            });
        }
        let round = |n: usize| (n + ROTATIONS / 2) / ROTATIONS;
        let (val, test) = (round(requested.val), round(requested.test));
        let train = round(requested.train).min(base_per_class.saturating_sub(val + test));
        if val + test > base_per_class {
            return Err(Error::Capacity {
                requested: (val + test) * ROTATIONS,
                available: capacity,
            });
        }
        let bases = SplitCounts::new(train, val, test);
        Ok(Self {
            requested,
            bases,
            realized: bases.scaled(ROTATIONS),
        })
    }

    pub fn deviates(&self) -> bool {
        self.requested != self.realized
    }

    pub fn note(&self) -> String {
        if self.deviates() {
            format!(
                "requested {} per class is not a multiple of {ROTATIONS} rotations; realized {} from base splits {}",
                self.requested, self.realized, self.bases
            )
        } else {
            "realized as requested".to_string()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub image: Tensor,
    pub label: usize,
    pub base_id: usize,
    pub rotation_deg: f32,
    pub split: Split,
}

/// Labeled windows with base-sample lineage and fold assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub classes: Vec<CellClassSpec>,
    pub window: usize,
    pub seed: u64,
    pub base_per_class: usize,
    pub realization: SplitRealization,
    pub samples: Vec<Sample>,
}

/// Builds the rotation-augmented dataset.
///
/// Each base sample is rendered on a `MASTER_SIZE` frame, rotated in
/// `ROTATION_STEP_DEG` steps and center-cropped to `window`. Whole bases are
/// assigned to folds, so no base contributes to two folds.
pub fn build_dataset(
    specs: &[CellClassSpec],
    base_per_class: usize,
    window: usize,
    split_counts: SplitCounts,
    seed: u64,
) -> Result<Dataset> {
    if specs.is_empty() {
        return Err(Error::param("at least one class is required"));
    }
    if !SUPPORTED_WINDOWS.contains(&window) {
        return Err(Error::param(format!(
            "unsupported window {window}; expected one of {SUPPORTED_WINDOWS:?}"
        )));
    }
    for s in specs {
        s.validate()?;
    }
    let realization = SplitRealization::plan(split_counts, base_per_class)?;
    let mut samples = Vec::new();
    for (label, spec) in specs.iter().enumerate() {
        let mut order: Vec<usize> = (0..base_per_class).collect();
        order.shuffle(&mut seeded_rng(derive_seed(seed, &[label as u64, 0x5_9117])));
        let bases = realization.bases;
        let assigned = order
            .iter()
            .take(bases.total())
            .enumerate()
            .map(|(pos, &b)| {
                let split = if pos < bases.train {
                    Split::Train
                } else if pos < bases.train + bases.val {
                    Split::Val
                } else {
                    Split::Test
                };
                (b, split)
            });
        for (b, split) in assigned {
            let base_id = label * base_per_class + b;
            let master = generate_pattern(
                spec,
                MASTER_SIZE,
                derive_seed(seed, &[label as u64, b as u64]),
            )?;
            for r in 0..ROTATIONS {
                let deg = r as f64 * ROTATION_STEP_DEG;
                let image = rotate_image(&master, deg).center_crop(window)?;
                samples.push(Sample {
                    image,
                    label,
                    base_id,
                    rotation_deg: deg as f32,
                    split,
                });
            }
        }
    }
    samples.sort_by(|a, b| {
        (a.split, a.label, a.base_id)
            .cmp(&(b.split, b.label, b.base_id))
            .then(a.rotation_deg.total_cmp(&b.rotation_deg))
    });
    Ok(Dataset {
        classes: specs.to_vec(),
        window,
        seed,
        base_per_class,
        realization,
        samples,
    })
}

impl Dataset {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name.clone()).collect()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Sample> + '_ {
        self.samples.iter().filter(move |s| s.split == split)
    }

    pub fn split_len(&self, split: Split) -> usize {
        self.split(split).count()
    }

    /// Sample count per class within one fold.
    pub fn class_counts(&self, split: Split) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for s in self.split(split) {
            counts[s.label] += 1;
        }
        counts
    }

    /// Fails if any base sample appears in more than one fold.
    pub fn check_leakage(&self) -> Result<()> {
        let mut seen: HashMap<usize, Split> = HashMap::new();
        for s in &self.samples {
            if let Some(prev) = seen.insert(s.base_id, s.split) {
                if prev != s.split {
                    return Err(Error::Data(format!(
                        "base {} appears in both {prev} and {}",
                        s.base_id, s.split
                    )));
                }
            }
        }
        Ok(())
    }

    /// Center-crops every sample to a smaller window, keeping lineage.
    pub fn recrop(&self, window: usize) -> Result<Dataset> {
        if window > self.window {
            return Err(Error::dim(format!(
                "cannot recrop {}×{} samples to {window}×{window}",
                self.window, self.window
            )));
        }
        let samples = self
            .samples
            .iter()
            .map(|s| {
                Ok(Sample {
                    image: s.image.center_crop(window)?,
                    ..s.clone()
                })
            })
            .collect::<Result<_>>()?;
        Ok(Dataset {
            window,
            samples,
            ..self.clone()
        })
    }

    /// Keeps only the listed classes, relabeled in the order given.
    pub fn select_classes(&self, keep: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = keep.iter().find(|&&c| c >= self.n_classes()) {
            return Err(Error::Data(format!("class {bad} out of range")));
        }
        let remap: HashMap<usize, usize> = keep.iter().enumerate().map(|(n, &o)| (o, n)).collect();
        let samples = self
            .samples
            .iter()
            .filter_map(|s| {
                remap.get(&s.label).map(|&label| Sample {
                    label,
                    ..s.clone()
                })
            })
            .collect();
        Ok(Dataset {
            classes: keep.iter().map(|&c| self.classes[c].clone()).collect(),
            samples,
            ..self.clone()
        })
    }

    /// Keeps at most `per_class` samples per class and fold, taking whole
    /// bases first so lineage stays intact.
    pub fn subsample(&self, per_class: SplitCounts) -> Dataset {
        let mut taken: HashMap<(Split, usize), usize> = HashMap::new();
        let samples = self
            .samples
            .iter()
            .filter(|s| {
                let n = taken.entry((s.split, s.label)).or_insert(0);
                *n += 1;
                *n <= per_class.get(s.split)
            })
            .cloned()
            .collect();
        Dataset {
            samples,
            ..self.clone()
        }
    }
}

use rand::seq::SliceRandom;
use rand::Rng;

use crate::cnn::adam::AdamState;
use crate::cnn::layer::Layer;
use crate::cnn::network::{argmax, Gradients, Loss, Network, Target};
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::synth::{add_gaussian_noise, Dataset, NoiseSpec, Split};
use crate::{derive_seed, seeded_rng};

/// Variances drawn uniformly per sample when corrupting denoiser inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSchedule {
    pub variances: Vec<f64>,
}

impl NoiseSchedule {
    /// Variances 100, 200, …, 600.
    pub fn standard() -> Self {
        Self {
            variances: (1..=6).map(|k| 100.0 * k as f64).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// Stop after this many epochs without a lower validation loss.
    pub patience: Option<usize>,
    /// On-the-fly corruption of inputs (denoisers).
    pub noise: Option<NoiseSchedule>,
    /// Evenly strided subsets of the training and validation folds.
    pub max_train: Option<usize>,
    pub max_val: Option<usize>,
    /// Per-epoch progress on stderr.
    pub verbose: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            lr: 1e-3,
            seed: 0,
            patience: Some(5),
            noise: None,
            max_train: None,
            max_val: None,
            verbose: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::param(format!(
                "epochs, batch size and lr must be positive: {} / {} / {}",
                self.epochs, self.batch_size, self.lr
            )));
        }
        if let Some(n) = &self.noise {
            if n.variances.is_empty() || n.variances.iter().any(|&v| !(v >= 0.0)) {
                return Err(Error::param("noise schedule needs non-negative variances"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: Option<f64>,
    pub val_loss: Option<f64>,
    pub val_acc: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (lowest validation loss).
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl History {
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])?;
        for e in &self.epochs {
            w.write_record([
                e.epoch.to_string(),
                format!("{:.6}", e.train_loss),
                cell(e.train_acc),
                cell(e.val_loss),
                cell(e.val_acc),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One training or validation item. With a label the target is that class;
/// without one the target is `input` itself (before any corruption).
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub input: Tensor,
    pub label: Option<usize>,
}

/// Evenly strided selection of at most `limit` items.
fn strided<T: Clone>(items: Vec<T>, limit: Option<usize>) -> Vec<T> {
    match limit {
        Some(k) if k < items.len() => {
            let n = items.len();
            (0..k).map(|i| items[i * n / k].clone()).collect()
        }
        _ => items,
    }
}

pub fn class_examples(ds: &Dataset, split: Split, limit: Option<usize>) -> Vec<Example> {
    let all = ds
        .split(split)
        .map(|s| Example {
            input: s.image.clone(),
            label: Some(s.label),
        })
        .collect();
    strided(all, limit)
}

pub fn image_examples(ds: &Dataset, split: Split, limit: Option<usize>) -> Vec<Example> {
    let all = ds
        .split(split)
        .map(|s| Example {
            input: s.image.clone(),
            label: None,
        })
        .collect();
    strided(all, limit)
}

fn corrupt(input: &Tensor, noise: &NoiseSchedule, seed: u64) -> Result<Tensor> {
    let mut rng = seeded_rng(seed);
    let v = noise.variances[rng.gen_range(0..noise.variances.len())];
    add_gaussian_noise(input, &NoiseSpec::new(v, derive_seed(seed, &[1])))
}

fn has_active_dropout(layers: &[Layer]) -> bool {
    layers.iter().any(|l| match l {
        Layer::Dropout { rate } => *rate > 0.0,
        Layer::Dense { dropout, .. } => *dropout > 0.0,
        _ => false,
    })
}

/// Trains with mini-batch Adam. Each batch gradient is the mean of
/// per-sample gradients summed in sample order, so runs are bitwise
/// repeatable for a fixed seed. With validation data and a patience, training
/// stops early and the parameters of the best validation epoch are restored.
pub fn fit(net: &mut Network, train: &[Example], val: &[Example], cfg: &TrainConfig) -> Result<History> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    let classify = net.loss == Loss::CategoricalCrossEntropy;
    for e in train.iter().chain(val) {
        if e.label.is_some() != classify {
            return Err(Error::Data(format!(
                "examples do not match the {} loss",
                net.loss.name()
            )));
        }
    }
    let start = net
        .first_trainable()
        .ok_or_else(|| Error::Structure("no trainable layer".into()))?;
    // Frozen, deterministic prefixes are evaluated once.
    let cache = start > 0 && cfg.noise.is_none() && !has_active_dropout(&net.layers[..start]);
    let prefix = |net: &Network, e: &Example| -> Result<Tensor> {
        let tape = net.forward(&e.input, None)?;
        Ok(tape.activation(start - 1).expect("prefix inside the tape").clone())
    };
    let (train_cache, val_cache) = if cache {
        (
            train.iter().map(|e| prefix(net, e)).collect::<Result<Vec<_>>>()?,
            val.iter().map(|e| prefix(net, e)).collect::<Result<Vec<_>>>()?,
        )
    } else {
        (Vec::new(), Vec::new())
    };

    let mut adam = AdamState::new(net, cfg.lr);
    let mut history = History::default();
    let mut best: Option<(f64, Network)> = None;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut seeded_rng(derive_seed(cfg.seed, &[epoch as u64, 1])));
        let mut drop_rng = seeded_rng(derive_seed(cfg.seed, &[epoch as u64, 2]));
        let (mut loss_sum, mut correct) = (0.0f64, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = Gradients::zeros(net);
            for &i in batch {
                let e = &train[i];
                let tape = if cache {
                    net.forward_from(start, train_cache[i].clone(), Some(&mut drop_rng))?
                } else {
                    let input = match &cfg.noise {
                        Some(n) => corrupt(&e.input, n, derive_seed(cfg.seed, &[epoch as u64, 3, i as u64]))?,
                        None => e.input.clone(),
                    };
                    net.forward(&input, Some(&mut drop_rng))?
                };
                let target = match e.label {
                    Some(c) => Target::Class(c),
                    None => Target::Image(&e.input),
                };
                let (loss, tape) = net.tape_gradients(tape, target, &mut grads)?;
                if !loss.is_finite() {
                    return Err(Error::Numeric(format!("loss diverged in epoch {epoch}")));
                }
                loss_sum += loss;
                if let Some(c) = e.label {
                    correct += usize::from(argmax(tape.output().data()) == c);
                }
            }
            grads.scale(1.0 / batch.len() as f32);
            adam.step(net, &grads)?;
        }
        let (val_loss, val_acc) = if val.is_empty() {
            (None, None)
        } else {
            let cached = cache.then_some(val_cache.as_slice());
            let (l, a) = evaluate(net, val, cached, start, cfg)?;
            (Some(l), a)
        };
        let rec = EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            train_acc: classify.then(|| correct as f64 / train.len() as f64),
            val_loss,
            val_acc,
        };
        if cfg.verbose {
            let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.5}"));
            eprintln!(
                "epoch {epoch}: train loss {:.5} acc {} | val loss {} acc {}",
                rec.train_loss,
                opt(rec.train_acc),
                opt(rec.val_loss),
                opt(rec.val_acc)
            );
        }
        history.epochs.push(rec);
        let score = val_loss.unwrap_or(f64::NAN);
        if score.is_finite() {
            if best.as_ref().map_or(true, |(b, _)| score < *b) {
                best = Some((score, net.clone()));
                history.best_epoch = epoch;
                since_best = 0;
            } else {
                since_best += 1;
            }
            if cfg.patience.is_some_and(|p| since_best >= p) {
                history.stopped_early = true;
                break;
            }
        } else {
            history.best_epoch = epoch;
        }
    }
    if let Some((_, b)) = best {
        *net = b;
    }
    Ok(history)
}

/// Mean loss and, for classifiers, accuracy in inference mode. Validation
/// noise is keyed by sample index so it is identical across epochs.
fn evaluate(
    net: &Network,
    data: &[Example],
    cached: Option<&[Tensor]>,
    start: usize,
    cfg: &TrainConfig,
) -> Result<(f64, Option<f64>)> {
    let (mut loss_sum, mut correct) = (0.0f64, 0usize);
    for (i, e) in data.iter().enumerate() {
        let tape = match cached {
            Some(c) => net.forward_from(start, c[i].clone(), None)?,
            None => {
                let input = match &cfg.noise {
                    Some(n) => corrupt(&e.input, n, derive_seed(cfg.seed, &[u64::MAX, i as u64]))?,
                    None => e.input.clone(),
                };
                net.forward(&input, None)?
            }
        };
        let target = match e.label {
            Some(c) => Target::Class(c),
            None => Target::Image(&e.input),
        };
        loss_sum += net.loss_delta(&tape, target)?.0;
        if let Some(c) = e.label {
            correct += usize::from(argmax(tape.output().data()) == c);
        }
    }
    let acc = data
        .first()
        .and_then(|e| e.label)
        .map(|_| correct as f64 / data.len() as f64);
    Ok((loss_sum / data.len() as f64, acc))
}

pub fn train_classifier(net: &mut Network, ds: &Dataset, cfg: &TrainConfig) -> Result<History> {
    if net.classes() != Some(ds.n_classes()) {
        return Err(Error::Data(format!(
            "network has {:?} outputs, dataset {} classes",
            net.classes(),
            ds.n_classes()
        )));
    }
    let train = class_examples(ds, Split::Train, cfg.max_train);
    let val = class_examples(ds, Split::Val, cfg.max_val);
    fit(net, &train, &val, cfg)
}

/// Pairs noisy inputs (drawn fresh every epoch) with clean targets. Uses the
/// standard variance schedule when `cfg.noise` is unset.
pub fn train_denoiser(net: &mut Network, ds: &Dataset, cfg: &TrainConfig) -> Result<History> {
    let mut cfg = cfg.clone();
    cfg.noise.get_or_insert_with(NoiseSchedule::standard);
    let train = image_examples(ds, Split::Train, cfg.max_train);
    let val = image_examples(ds, Split::Val, cfg.max_val);
    fit(net, &train, &val, &cfg)
}

/// Replaces the classifier head with one more output, copying the old rows
/// and initializing the new one, then trains the head alone on `new_data`.
pub fn extend_head(net: &Network, seed: u64) -> Result<Network> {
    let classes = net
        .classes()
        .ok_or_else(|| Error::Structure("transfer needs a softmax classifier".into()))?;
    let head = net.layers.len() - 2;
    let mut out = net.clone();
    let Layer::Dense { w, b, .. } = &mut out.layers[head] else {
        return Err(Error::Structure("classifier head is not a dense layer".into()));
    };
    let d_in = w.shape()[1];
    let limit = (6.0 / (d_in + classes + 1) as f32).sqrt();
    let mut rng = seeded_rng(derive_seed(seed, &[0x7EAD]));
    let mut wd = w.data().to_vec();
    wd.extend((0..d_in).map(|_| rng.gen_range(-limit..=limit)));
    *w = Tensor::new(&[classes + 1, d_in], wd)?;
    let mut bd = b.data().to_vec();
    bd.push(0.0);
    *b = Tensor::new(&[classes + 1], bd)?;
    out.layers[head + 1] = Layer::SoftmaxOutput { classes: classes + 1 };
    out.freeze_all_but(&[head]);
    out.validate()?;
    Ok(out)
}

pub fn transfer_learn(net: &Network, new_data: &Dataset, cfg: &TrainConfig) -> Result<(Network, History)> {
    let classes = net
        .classes()
        .ok_or_else(|| Error::Structure("transfer needs a softmax classifier".into()))?;
    if new_data.n_classes() != classes + 1 {
        return Err(Error::Data(format!(
            "transfer from {classes} classes needs data with {}, got {}",
            classes + 1,
            new_data.n_classes()
        )));
    }
    let mut out = extend_head(net, cfg.seed)?;
    let history = train_classifier(&mut out, new_data, cfg)?;
    Ok((out, history))
}

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use lsit::classical::{default_sigma, FilterKind, FilterSpec};
use lsit::cnn::{
    grad_cam, load_network, saliency, save_network, train_classifier, train_denoiser, transfer_learn, Architecture,
    Network, NoiseSchedule, TrainConfig,
};
use lsit::elm::{oselm_init, oselm_update, ElmModel, DEFAULT_C_REG, DEFAULT_HIDDEN};
use lsit::io::{panel, write_pgm};
use lsit::metrics::{
    class_metrics, confusion, roc_auc, snr_imp, write_confusion_csv, write_metrics_csv, write_roc_csv,
    write_snr_csv, ConfusionMatrix, SnrReport,
};
use lsit::numerics::dlt;
use lsit::synth::{
    add_gaussian_noise, build_dataset, default_classes, export_pgm, load_dataset, save_dataset, Dataset, NoiseSpec,
    Split, SplitCounts, MANIFEST,
};
use lsit::{derive_seed, Tensor};

use crate::config::Settings;
use crate::error::{config, CliError, CliResult};
use crate::run::RunDir;

const CLASSES_FILE: &str = "classes.txt";
const DEFAULT_SPLIT: [usize; 3] = [1490, 166, 324];

fn open_dataset(dir: &Path) -> CliResult<Dataset> {
    if !dir.join(MANIFEST).is_file() {
        return Err(CliError::Missing(format!("no dataset at {}", dir.display())));
    }
    Ok(load_dataset(dir)?)
}

fn open_network(dir: &Path) -> CliResult<Network> {
    if !dir.join("manifest.txt").is_file() {
        return Err(CliError::Missing(format!("no checkpoint at {}", dir.display())));
    }
    Ok(load_network(dir)?)
}

fn class_names_of(model: &Path) -> CliResult<Option<Vec<String>>> {
    let p = model.join(CLASSES_FILE);
    if !p.is_file() {
        return Ok(None);
    }
    Ok(Some(fs::read_to_string(p)?.lines().map(str::to_string).collect()))
}

fn write_class_names(run: &RunDir, names: &[String]) -> CliResult<()> {
    fs::write(run.path(CLASSES_FILE), names.join("\n") + "\n")?;
    Ok(())
}

fn class_index(ds: &Dataset, name: &str) -> CliResult<usize> {
    ds.class_names()
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| config(format!("dataset has no class `{name}`")))
}

/// Reorders `ds` to the model's class list when one is known.
fn align_classes(ds: &Dataset, names: Option<&[String]>) -> CliResult<Dataset> {
    match names {
        Some(names) => {
            let keep = names.iter().map(|n| class_index(ds, n)).collect::<CliResult<Vec<_>>>()?;
            Ok(ds.select_classes(&keep)?)
        }
        None => Ok(ds.clone()),
    }
}

/// Crops the dataset to the network's input when it is smaller.
fn fit_window(ds: Dataset, side: usize) -> CliResult<Dataset> {
    match ds.window {
        w if w == side => Ok(ds),
        w if w > side => Ok(ds.recrop(side)?),
        w => Err(config(format!("model expects {side}×{side} inputs, dataset window is {w}"))),
    }
}

fn net_side(net: &Network) -> usize {
    *net.input_shape.last().expect("networks have an input shape")
}

/// Evenly strided images and labels of one split.
fn split_stack(ds: &Dataset, split: Split, limit: Option<usize>) -> CliResult<(Tensor, Vec<usize>)> {
    let all: Vec<_> = ds.split(split).collect();
    if all.is_empty() {
        return Err(config(format!("split `{split}` is empty")));
    }
    let n = limit.map_or(all.len(), |k| k.min(all.len()));
    let picked: Vec<_> = (0..n).map(|i| all[i * all.len() / n]).collect();
    let images: Vec<&Tensor> = picked.iter().map(|s| &s.image).collect();
    Ok((Tensor::stack(&images)?, picked.iter().map(|s| s.label).collect()))
}

/// Per-image noise with seed `derive(seed, [variance bits, index])`.
fn corrupt_stack(clean: &Tensor, variance: f64, seed: u64) -> CliResult<Tensor> {
    let noisy = clean
        .unstack()
        .iter()
        .enumerate()
        .map(|(i, img)| add_gaussian_noise(img, &NoiseSpec::new(variance, derive_seed(seed, &[variance.to_bits(), i as u64]))))
        .collect::<lsit::Result<Vec<_>>>()?;
    Ok(Tensor::stack(&noisy.iter().collect::<Vec<_>>())?)
}

fn train_config(s: &mut Settings) -> CliResult<TrainConfig> {
    let d = TrainConfig::default();
    let patience: i64 = s.or("patience", d.patience.map_or(-1, |p| p as i64))?;
    let cfg = TrainConfig {
        epochs: s.or("epochs", d.epochs)?,
        batch_size: s.or("batch", d.batch_size)?,
        lr: s.or("lr", d.lr)?,
        seed: s.seed()?,
        patience: usize::try_from(patience).ok(),
        noise: s.list("variances")?.map(|variances| NoiseSchedule { variances }),
        max_train: s.get("max_train")?,
        max_val: s.get("max_val")?,
        verbose: true,
    };
    cfg.validate()?;
    s.fill("epochs", cfg.epochs);
    s.fill("batch", cfg.batch_size);
    s.fill("lr", cfg.lr);
    s.fill("patience", patience);
    Ok(cfg)
}

fn input_sized(ds: Dataset, s: &mut Settings) -> CliResult<Dataset> {
    let side = s.or("input_size", ds.window)?;
    s.fill("input_size", side);
    fit_window(ds, side)
}

pub fn synth(s: &mut Settings, out: &Path) -> CliResult<()> {
    let run = RunDir::create(out, "synth")?;
    let seed = s.seed()?;
    let window = s.or("window", 50usize)?;
    let base = s.or("base_per_class", 55usize)?;
    let split = s.list::<usize>("split")?.unwrap_or(DEFAULT_SPLIT.to_vec());
    let [train, val, test] = split[..] else {
        return Err(config("`split` needs three counts"));
    };
    let all = default_classes();
    let specs = match s.list::<String>("classes")? {
        Some(names) => names
            .iter()
            .map(|n| {
                all.iter()
                    .find(|c| &c.name == n)
                    .cloned()
                    .ok_or_else(|| config(format!("unknown class `{n}`")))
            })
            .collect::<CliResult<Vec<_>>>()?,
        None => all,
    };
    s.fill("window", window);
    s.fill("base_per_class", base);
    s.fill("split", format!("{train},{val},{test}"));
    let ds = build_dataset(&specs, base, window, SplitCounts::new(train, val, test), seed)?;
    save_dataset(run.root(), &ds)?;
    let pgm = s.or("pgm_per_class", 0usize)?;
    if pgm > 0 {
        export_pgm(&run.path("pgm"), &ds, pgm)?;
    }
    let counts: Vec<String> = Split::ALL
        .iter()
        .map(|&sp| format!("{sp} {}", ds.split_len(sp)))
        .collect();
    println!(
        "{} classes × {} samples, window {window}: {}",
        ds.n_classes(),
        ds.samples.len() / ds.n_classes(),
        counts.join(", ")
    );
    if ds.realization.deviates() {
        println!("note: {}", ds.realization.note());
    }
    run.finish(s)?;
    Ok(())
}

pub fn corrupt(s: &mut Settings, data: &Path, out: &Path) -> CliResult<()> {
    let run = RunDir::create(out, "corrupt")?;
    let ds = open_dataset(data)?;
    let variance: f64 = s.require("variance")?;
    let split: Split = s.or("eval_split", Split::Test)?;
    let (clean, labels) = split_stack(&ds, split, s.get("limit")?)?;
    let noisy = corrupt_stack(&clean, variance, s.seed()?)?;
    dlt::write(&run.path(&format!("{split}_clean.dlt")), &clean)?;
    dlt::write(&run.path(&format!("{split}_noisy.dlt")), &noisy)?;
    let lab = Tensor::new(&[labels.len()], labels.iter().map(|&l| l as f32).collect())?;
    dlt::write(&run.path(&format!("{split}_labels.dlt")), &lab)?;
    let report = snr_imp(&clean, &noisy, &noisy)?;
    println!(
        "{} images at variance {variance}: mean input SNR {:.3} dB",
        report.len(),
        report.mean_snr_in()
    );
    run.finish(s)?;
    Ok(())
}

/// A denoising method applied to `N×h×w` stacks.
enum Method {
    Identity,
    Classical(FilterSpec),
    Cnn(Network),
    Elm(ElmModel),
}

impl Method {
    fn load(name: &str, model: Option<&Path>, kernel: Option<usize>) -> CliResult<Self> {
        let need = |what: &str| {
            model.ok_or_else(|| CliError::Missing(format!("method `{name}` needs a {what} checkpoint")))
        };
        match name {
            "identity" => Ok(Method::Identity),
            "cnn" => Ok(Method::Cnn(open_network(need("CNN")?)?)),
            "elm" => {
                let dir = need("ELM")?;
                if !dir.join("manifest.txt").is_file() {
                    return Err(CliError::Missing(format!("no checkpoint at {}", dir.display())));
                }
                Ok(Method::Elm(ElmModel::load(dir)?))
            }
            other => {
                let kind: FilterKind = other.parse().map_err(|_| config(format!("unknown method `{other}`")))?;
                let mut spec = FilterSpec::default_for(kind);
                if let Some(k) = kernel {
                    spec.kernel = k;
                    if kind == FilterKind::Gaussian {
                        spec.sigma_spatial = default_sigma(k);
                    }
                }
                spec.validate()?;
                Ok(Method::Classical(spec))
            }
        }
    }

    fn apply(&self, noisy: &Tensor) -> CliResult<Tensor> {
        let side = noisy.shape()[1];
        Ok(match self {
            Method::Identity => noisy.clone(),
            Method::Classical(spec) => spec.apply_batch(noisy)?,
            // the convolutional denoiser runs on any frame size
            Method::Cnn(net) if net_side(net) != side => net.with_input_shape(&[1, side, side])?.denoise(noisy)?,
            Method::Cnn(net) => net.denoise(noisy)?,
            Method::Elm(m) => m.denoise(noisy)?,
        })
    }
}

pub fn denoise(s: &mut Settings, data: &Path, out: &Path) -> CliResult<()> {
    let run = RunDir::create(out, "denoise")?;
    let ds = open_dataset(data)?;
    let name: String = s.require("method")?;
    let variance: f64 = s.require("variance")?;
    let model = s.get::<String>("model")?;
    let method = Method::load(&name, model.as_deref().map(Path::new), s.get("kernel")?)?;
    let split: Split = s.or("eval_split", Split::Test)?;
    let (clean, _) = split_stack(&ds, split, s.get("limit")?)?;
    let noisy = corrupt_stack(&clean, variance, s.seed()?)?;
    let den = method.apply(&noisy)?;
    let report = snr_imp(&clean, &noisy, &den)?;
    write_snr_csv(&run.path("snr.csv"), &report)?;
    dlt::write(&run.path("denoised.dlt"), &den)?;
    let (c, n, d) = (clean.unstack(), noisy.unstack(), den.unstack());
    for i in 0..s.or("panels", 4usize)?.min(c.len()) {
        write_pgm(&run.path(&format!("panel_{i}.pgm")), &panel(&[&c[i], &n[i], &d[i]])?)?;
    }
    let summary = format!(
        "method = {name}\nvariance = {variance}\nsamples = {}\nmean_snr_in_db = {:.6}\nmean_snr_out_db = {:.6}\nmean_snr_imp_db = {:.6}\nstd_snr_imp_db = {:.6}\n",
        report.len(),
        report.mean_snr_in(),
        report.mean_snr_out(),
        report.mean_snr_imp(),
        report.std_snr_imp()
    );
    fs::write(run.path("summary.txt"), &summary)?;
    println!("{name} at variance {variance}: SNR_imp {:.3} dB over {} images", report.mean_snr_imp(), report.len());
    run.finish(s)?;
    Ok(())
}

fn train_elm(s: &mut Settings, ds: &Dataset, run: &RunDir) -> CliResult<()> {
    let seed = s.seed()?;
    let hidden = s.or("elm_hidden", DEFAULT_HIDDEN)?;
    let c_reg = s.or("elm_c", DEFAULT_C_REG)?;
    let samples = s.or("elm_samples", 3000usize)?;
    let variances = s.list::<f64>("variances")?.unwrap_or(NoiseSchedule::standard().variances);
    s.fill("elm_hidden", hidden);
    s.fill("elm_c", c_reg);
    s.fill("elm_samples", samples);
    let (clean, _) = split_stack(ds, Split::Train, Some(samples))?;
    // cycle the variance grid over the training images
    let noisy = clean
        .unstack()
        .iter()
        .enumerate()
        .map(|(i, img)| {
            let v = variances[i % variances.len()];
            add_gaussian_noise(img, &NoiseSpec::new(v, derive_seed(seed, &[0xE1, i as u64])))
        })
        .collect::<lsit::Result<Vec<_>>>()?;
    let noisy = Tensor::stack(&noisy.iter().collect::<Vec<_>>())?;
    let mut model = ElmModel::denoiser(ds.window, hidden, seed)?;
    match s.get::<usize>("elm_chunk")? {
        Some(chunk) if chunk > 0 && chunk < clean.shape()[0] => {
            let x = model.encode_inputs(&noisy)?;
            let t = model.encode_targets(&clean)?;
            let rows = |m: &Tensor, a: usize, b: usize| {
                let w = m.shape()[1];
                Tensor::new(&[b - a, w], m.data()[a * w..b * w].to_vec())
            };
            let n = x.shape()[0];
            let mut state = oselm_init(&model, &rows(&x, 0, chunk)?, &rows(&t, 0, chunk)?, c_reg)?;
            let mut a = chunk;
            while a < n {
                let b = (a + chunk).min(n);
                oselm_update(&mut state, &model, &rows(&x, a, b)?, &rows(&t, a, b)?)?;
                a = b;
            }
            state.apply_to(&mut model)?;
            model.c_reg = c_reg;
        }
        _ => model.fit_denoiser(&noisy, &clean, c_reg)?,
    }
    model.save(run.root())?;
    let (vclean, _) = split_stack(ds, Split::Val, Some(300))?;
    let mut lines = String::from("variance,mean_snr_imp_db\n");
    for &v in &variances {
        let vn = corrupt_stack(&vclean, v, derive_seed(seed, &[0xE2]))?;
        let r = snr_imp(&vclean, &vn, &model.denoise(&vn)?)?;
        let _ = writeln!(lines, "{v},{:.6}", r.mean_snr_imp());
        println!("val SNR_imp at variance {v}: {:.3} dB", r.mean_snr_imp());
    }
    fs::write(run.path("val_snr.csv"), lines)?;
    Ok(())
}

pub fn train_denoiser_cmd(s: &mut Settings, data: &Path, out: &Path) -> CliResult<()> {
    let ds = input_sized(open_dataset(data)?, s)?;
    let model: String = s.or("model", "cnn-denoiser".to_string())?;
    s.fill("model", &model);
    let run = RunDir::create(out, "train-denoiser")?;
    if model == "elm" {
        train_elm(s, &ds, &run)?;
        run.finish(s)?;
        return Ok(());
    }
    let arch: Architecture = model.parse().map_err(|_| config(format!("unknown denoiser `{model}`")))?;
    if arch.is_classifier() {
        return Err(config(format!("`{model}` is not a denoiser")));
    }
    let cfg = train_config(s)?;
    let mut net = arch.build(ds.window, 0, cfg.seed)?;
    let history = train_denoiser(&mut net, &ds, &cfg)?;
    save_network(run.root(), &net, Some(&history))?;
    history.write_csv(&run.path("history.csv"))?;
    run.finish(s)?;
    Ok(())
}

pub fn train_classifier_cmd(s: &mut Settings, data: &Path, out: &Path) -> CliResult<()> {
    let run = RunDir::create(out, "train-classifier")?;
    let mut ds = input_sized(open_dataset(data)?, s)?;
    if let Some(name) = s.get::<String>("exclude")? {
        let drop = class_index(&ds, &name)?;
        let keep: Vec<usize> = (0..ds.n_classes()).filter(|&c| c != drop).collect();
        ds = ds.select_classes(&keep)?;
    }
    let arch: Architecture = s.or("arch", Architecture::Classifier)?;
    if !arch.is_classifier() {
        return Err(config(format!("`{arch}` is not a classifier")));
    }
    s.fill("arch", arch);
    let cfg = train_config(s)?;
    let mut net = arch.build(ds.window, ds.n_classes(), cfg.seed)?;
    let history = train_classifier(&mut net, &ds, &cfg)?;
    save_network(run.root(), &net, Some(&history))?;
    write_class_names(&run, &ds.class_names())?;
    history.write_csv(&run.path("history.csv"))?;
    run.finish(s)?;
    Ok(())
}

fn predictions(net: &Network, images: &Tensor) -> CliResult<(Vec<usize>, Vec<Vec<f32>>)> {
    let out = net.predict_batch(images)?;
    Ok(out.into_iter().unzip())
}

pub fn transfer(s: &mut Settings, model: &Path, data: &Path, out: &Path) -> CliResult<()> {
    let run = RunDir::create(out, "transfer")?;
    let net = open_network(model)?;
    let old = class_names_of(model)?
        .ok_or_else(|| CliError::Missing(format!("{} has no {CLASSES_FILE}", model.display())))?;
    let new_class: String = s.require("new_class")?;
    if old.contains(&new_class) {
        return Err(config(format!("the model already knows `{new_class}`")));
    }
    let mut names = old.clone();
    names.push(new_class.clone());
    let ds = fit_window(align_classes(&open_dataset(data)?, Some(&names))?, net_side(&net))?;
    let cfg = train_config(s)?;
    let (test, labels) = split_stack(&ds, Split::Test, None)?;
    let n = names.len();
    let (pre, _) = predictions(&net, &test)?;
    let cm_pre = confusion(&labels, &pre, n)?.with_names(&names)?;
    let (tuned, history) = transfer_learn(&net, &ds, &cfg)?;
    let (post, probs) = predictions(&tuned, &test)?;
    let cm_post = confusion(&labels, &post, n)?.with_names(&names)?;
    let frozen_same = tuned
        .layers
        .iter()
        .zip(&net.layers)
        .zip(&tuned.frozen)
        .filter(|(_, &f)| f)
        .all(|((a, b), _)| a.params() == b.params());
    save_network(run.root(), &tuned, Some(&history))?;
    write_class_names(&run, &names)?;
    history.write_csv(&run.path("history.csv"))?;
    write_confusion_csv(&run.path("confusion_pre.csv"), &cm_pre)?;
    write_confusion_csv(&run.path("confusion_post.csv"), &cm_post)?;
    write_metrics_csv(&run.path("metrics_post.csv"), &class_metrics(&cm_post)?)?;
    if let Ok(curves) = roc_auc(&probs, &labels) {
        write_roc_csv(&run.path("roc_post.csv"), &names, &curves)?;
    }
    let recall = |cm: &ConfusionMatrix| cm.class_recall(n - 1).unwrap_or(0.0);
    let summary = format!(
        "new_class = {new_class}\nnew_class_recall_pre = {:.6}\nnew_class_recall_post = {:.6}\naccuracy_post = {:.6}\nfrozen_unchanged = {frozen_same}\n",
        recall(&cm_pre),
        recall(&cm_post),
        cm_post.accuracy().unwrap_or(0.0)
    );
    fs::write(run.path("summary.txt"), &summary)?;
    print!("{summary}");
    run.finish(s)?;
    Ok(())
}

/// Optionally corrupts and then denoises evaluation images.
fn prepared_inputs(s: &mut Settings, clean: &Tensor) -> CliResult<Tensor> {
    let Some(variance) = s.get::<f64>("variance")? else {
        return Ok(clean.clone());
    };
    let noisy = corrupt_stack(clean, variance, s.seed()?)?;
    match s.get::<String>("denoiser")? {
        Some(dir) => {
            let dir = Path::new(&dir);
            let kind = lsit::io::KeyValues::load(&dir.join("manifest.txt"))
                .map_err(|_| CliError::Missing(format!("no checkpoint at {}", dir.display())))?;
            let method = if kind.get("kind") == Some("elm") { "elm" } else { "cnn" };
            Method::load(method, Some(dir), None)?.apply(&noisy)
        }
        None => Ok(noisy),
    }
}

pub fn eval(s: &mut Settings, model: &Path, data: &Path, out: &Path) -> CliResult<()> {
    let run = RunDir::create(out, "eval")?;
    let net = open_network(model)?;
    let names = class_names_of(model)?;
    let ds = fit_window(align_classes(&open_dataset(data)?, names.as_deref())?, net_side(&net))?;
    if net.classes() != Some(ds.n_classes()) {
        return Err(config(format!(
            "model has {:?} outputs, dataset {} classes",
            net.classes(),
            ds.n_classes()
        )));
    }
    let split: Split = s.or("eval_split", Split::Test)?;
    let (clean, labels) = split_stack(&ds, split, s.get("limit")?)?;
    let inputs = prepared_inputs(s, &clean)?;
    let (preds, probs) = predictions(&net, &inputs)?;
    let names = ds.class_names();
    let cm = confusion(&labels, &preds, ds.n_classes())?.with_names(&names)?;
    write_confusion_csv(&run.path("confusion.csv"), &cm)?;
    write_metrics_csv(&run.path("metrics.csv"), &class_metrics(&cm)?)?;
    let curves = roc_auc(&probs, &labels)?;
    write_roc_csv(&run.path("roc.csv"), &names, &curves)?;
    let mut summary = format!("samples = {}\naccuracy = {:.6}\n", labels.len(), cm.accuracy().unwrap_or(0.0));
    for (name, c) in names.iter().zip(&curves) {
        let _ = writeln!(summary, "auc.{name} = {:.6}", c.auc);
    }
    fs::write(run.path("summary.txt"), &summary)?;
    print!("{summary}");
    run.finish(s)?;
    Ok(())
}

pub fn explain(s: &mut Settings, model: &Path, data: &Path, out: &Path) -> CliResult<()> {
    let run = RunDir::create(out, "explain")?;
    let net = open_network(model)?;
    let names = class_names_of(model)?;
    let ds = fit_window(align_classes(&open_dataset(data)?, names.as_deref())?, net_side(&net))?;
    let per_class = s.or("count", 2usize)?;
    let split: Split = s.or("eval_split", Split::Test)?;
    let mut picked = Vec::new();
    for c in 0..ds.n_classes() {
        picked.extend(ds.split(split).filter(|x| x.label == c).step_by(7).take(per_class));
    }
    if picked.is_empty() {
        return Err(config(format!("split `{split}` is empty")));
    }
    let clean = Tensor::stack(&picked.iter().map(|x| &x.image).collect::<Vec<_>>())?;
    let inputs = prepared_inputs(s, &clean)?.unstack();
    let mut rows = String::from("file,label,predicted\n");
    let class_names = ds.class_names();
    for (k, (sample, x)) in picked.iter().zip(&inputs).enumerate() {
        let (pred, _) = net.predict(x)?;
        let scale = |m: Tensor| m.map(|v| v * 255.0);
        let cam = scale(grad_cam(&net, x, sample.label)?);
        let sal = scale(saliency(&net, x, sample.label)?);
        let stem = format!("{}_{k}", class_names[sample.label]);
        write_pgm(&run.path(&format!("gradcam_{stem}.pgm")), &panel(&[x, &cam])?)?;
        write_pgm(&run.path(&format!("saliency_{stem}.pgm")), &panel(&[x, &sal])?)?;
        let _ = writeln!(rows, "{stem},{},{}", class_names[sample.label], class_names[pred]);
    }
    fs::write(run.path("explain.csv"), rows)?;
    println!("{} samples explained", picked.len());
    run.finish(s)?;
    Ok(())
}

pub fn sweep(s: &mut Settings, data: &Path, out: &Path) -> CliResult<()> {
    let run = RunDir::create(out, "sweep")?;
    let ds = open_dataset(data)?;
    let seed = s.seed()?;
    let variances = s.list::<f64>("variances")?.unwrap_or(NoiseSchedule::standard().variances);
    let methods = s
        .list::<String>("methods")?
        .unwrap_or_else(|| ["gaussian", "average", "median", "bilateral", "cnn", "elm"].map(String::from).to_vec());
    let limit = s.or("limit", 300usize)?;
    s.fill("limit", limit);
    s.fill("methods", methods.join(","));
    let cnn = s.get::<String>("cnn")?;
    let elm = s.get::<String>("elm")?;
    let loaded = methods
        .iter()
        .map(|m| {
            let model = match m.as_str() {
                "cnn" => cnn.as_deref(),
                "elm" => elm.as_deref(),
                _ => None,
            };
            Method::load(m, model.map(Path::new), None)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let (clean, _) = split_stack(&ds, Split::Test, Some(limit))?;
    let mut table = format!("variance,{}\n", methods.join(","));
    let mut per_sample = SnrReport::from_samples(Vec::new());
    for &v in &variances {
        let noisy = corrupt_stack(&clean, v, seed)?;
        let mut row = format!("{v}");
        for (name, m) in methods.iter().zip(&loaded) {
            let r = snr_imp(&clean, &noisy, &m.apply(&noisy)?)?;
            let _ = write!(row, ",{:.6}", r.mean_snr_imp());
            eprintln!("variance {v} {name}: {:.3} dB", r.mean_snr_imp());
            if name == "cnn" {
                per_sample.extend(r);
            }
        }
        table.push_str(&row);
        table.push('\n');
    }
    fs::write(run.path("snr_table.csv"), &table)?;
    if !per_sample.is_empty() {
        write_snr_csv(&run.path("cnn_snr_samples.csv"), &per_sample)?;
    }
    print!("{table}");
    run.finish(s)?;
    Ok(())
}

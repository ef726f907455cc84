//! Acceptance suite. Each test prints one `ACCEPTANCE cNN PASS|FAIL` line
//! with the measured values and the pinned tolerances, then asserts.
//!
//! The heavy criteria share one synthetic dataset and the trained networks
//! through `OnceLock`s; a global lock keeps the tests from competing for the
//! CPU so the reported wall-clock times are honest.

mod common;

use std::io::Write;
use std::path::Path;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use common::gradcheck::{check_random_nets, REL_TOL};
use common::oselm::{batch_beta, data, random_cuts, rel_diff, sequential};
use common::*;
use lsit::classical::{average_filter, bilateral_filter, gaussian_filter, median_filter, FilterKind, FilterSpec};
use lsit::cnn::{
    build_classifier, build_denoiser, grad_cam, mass_fraction, saliency, save_network, train_classifier,
    train_denoiser, transfer_learn, LayerSpec, Network, TrainConfig,
};
use lsit::elm::{ElmModel, DEFAULT_C_REG};
use lsit::metrics::{
    class_metrics, confusion, roc_auc, snr_imp, write_confusion_csv, write_metrics_csv, write_roc_csv,
    write_snr_csv, ClassMetrics, ConfusionMatrix,
};
use lsit::synth::{
    add_gaussian_noise, build_dataset, default_classes, ring_support_mask, save_dataset, Dataset, NoiseSpec,
    Sample, Split, SplitCounts,
};
use lsit::{derive_seed, seeded_rng, Tensor};
use rand::Rng;

const SEED: u64 = 7;
const WINDOW: usize = 50;
const VARIANCES: [f64; 6] = [100.0, 200.0, 300.0, 400.0, 500.0, 600.0];

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: &str, pass: bool, detail: &str) {
    let line = format!("ACCEPTANCE {id} {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    // bypasses the harness capture so the verdicts always reach the log
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "{id}: {detail}");
}

/// Work done once and shared, with the seconds it took.
struct Timed<T> {
    value: T,
    secs: f64,
}

fn timed<T>(f: impl FnOnce() -> T) -> Timed<T> {
    let t = Instant::now();
    let value = f();
    Timed {
        value,
        secs: t.elapsed().as_secs_f64(),
    }
}

/// Six classes, 1980 samples per class at window 50.
fn dataset() -> &'static Timed<Dataset> {
    static DS: OnceLock<Timed<Dataset>> = OnceLock::new();
    DS.get_or_init(|| {
        timed(|| build_dataset(&default_classes(), 55, WINDOW, SplitCounts::new(1490, 166, 324), SEED).unwrap())
    })
}

fn classifier_config(lr: f64, epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: 32,
        lr,
        seed: SEED,
        patience: None,
        max_train: Some(3000),
        max_val: Some(600),
        ..TrainConfig::default()
    }
}

fn classifier() -> &'static Timed<Network> {
    static NET: OnceLock<Timed<Network>> = OnceLock::new();
    NET.get_or_init(|| {
        let ds = &dataset().value;
        timed(|| {
            let mut net = build_classifier(WINDOW, ds.n_classes(), SEED).unwrap();
            train_classifier(&mut net, ds, &classifier_config(1e-3, 3)).unwrap();
            net
        })
    })
}

/// Trained on 36×36 crops, returned rebuilt for the full window.
fn denoiser() -> &'static Timed<Network> {
    static NET: OnceLock<Timed<Network>> = OnceLock::new();
    NET.get_or_init(|| {
        let ds = &dataset().value;
        timed(|| {
            let crops = ds.recrop(36).unwrap();
            let mut net = build_denoiser(36, SEED).unwrap();
            let cfg = TrainConfig {
                epochs: 4,
                batch_size: 16,
                lr: 2e-3,
                seed: SEED,
                patience: None,
                max_train: Some(1200),
                max_val: Some(100),
                ..TrainConfig::default()
            };
            train_denoiser(&mut net, &crops, &cfg).unwrap();
            net.with_input_shape(&[1, WINDOW, WINDOW]).unwrap()
        })
    })
}

fn stack(samples: &[&Sample]) -> Tensor {
    Tensor::stack(&samples.iter().map(|s| &s.image).collect::<Vec<_>>()).unwrap()
}

/// Every `stride`-th sample of a fold, capped at `n`.
fn strided(ds: &Dataset, split: Split, n: usize) -> Vec<&Sample> {
    let all: Vec<&Sample> = ds.split(split).collect();
    let stride = (all.len() / n).max(1);
    all.into_iter().step_by(stride).take(n).collect()
}

fn noisy(clean: &Tensor, variance: f64, seed: u64) -> Tensor {
    add_gaussian_noise(clean, &NoiseSpec::new(variance, seed)).unwrap()
}

fn predict_all(net: &Network, samples: &[&Sample]) -> (Vec<usize>, Vec<Vec<f32>>) {
    samples.iter().map(|s| net.predict(&s.image).unwrap()).unzip()
}

#[test]
fn c01_metrics_from_published_counts() {
    let _g = serial();
    let t = Instant::now();
    // (name, TP, TN, FP, FN, accuracy, precision, recall, specificity, sensitivity, F1, PPV, NPV)
    #[rustfmt::skip]
    let rows: [(&str, u64, u64, u64, u64, [f64; 8]); 6] = [
        ("10um bead", 322, 1614, 2, 6, [0.9959, 0.9938, 0.9817, 0.9988, 0.9817, 0.9877, 0.9938, 0.9963]),
        ("20um bead", 324, 1611, 0, 9, [0.9954, 1.0000, 0.9730, 1.0000, 0.9730, 0.9863, 1.0000, 0.9944]),
        ("MCF7", 184, 1571, 140, 49, [0.9028, 0.5679, 0.7897, 0.9182, 0.7897, 0.6607, 0.5679, 0.9698]),
        ("HepG2", 276, 1494, 48, 126, [0.9105, 0.8519, 0.6866, 0.9689, 0.6866, 0.7603, 0.8519, 0.9222]),
        ("RBC", 324, 1620, 0, 0, [1.0; 8]),
        ("WBC", 324, 1620, 0, 0, [1.0; 8]),
    ];
    const TOL: f64 = 5e-5;
    let mut worst = 0.0f64;
    for (name, tp, tn, fp, fn_, want) in rows {
        let m = ClassMetrics::from_counts(name, tp, tn, fp, fn_);
        let got = [
            m.accuracy,
            m.precision,
            m.recall,
            m.specificity,
            m.sensitivity(),
            m.f1,
            m.ppv(),
            m.npv,
        ];
        for (g, w) in got.iter().zip(want) {
            worst = worst.max((g.expect("defined ratio") - w).abs());
        }
    }
    // the same counts routed through a confusion matrix: one class at a time
    // against a merged "rest" column
    let cm = ConfusionMatrix {
        class_names: vec!["mcf7".into(), "rest".into()],
        counts: vec![vec![184, 49], vec![140, 1571]],
    };
    let via_cm = &class_metrics(&cm).unwrap()[0];
    let direct = ClassMetrics::from_counts("mcf7", 184, 1571, 140, 49);
    let secs = t.elapsed().as_secs_f64();
    let pass = worst <= TOL && via_cm.f1 == direct.f1 && via_cm.npv == direct.npv && secs < 1.0;
    report(
        "c01",
        pass,
        &format!("worst |Δ| {worst:.2e} ≤ {TOL:.0e} over 6 rows × 8 metrics; {secs:.3} s < 1 s"),
    );
}

#[test]
fn c02_oselm_matches_batch_solution() {
    let _g = serial();
    let t = Instant::now();
    let mut rng = seeded_rng(derive_seed(SEED, &[2]));
    let instances = 60;
    let mut worst = 0.0f64;
    let mut max_chunks = 0;
    for i in 0..instances {
        let n = rng.gen_range(10..=200);
        let d_hidden = rng.gen_range(2..=50);
        let (d_in, d_out) = (rng.gen_range(1..=8), rng.gen_range(1..=4));
        let c = 10f64.powf(rng.gen_range(-1.0..4.0));
        let m = ElmModel::new(d_in, d_hidden, d_out, derive_seed(SEED, &[2, i])).unwrap();
        let x = data(n, d_in, derive_seed(SEED, &[2, i, 1]));
        let y = data(n, d_out, derive_seed(SEED, &[2, i, 2]));
        let cuts = random_cuts(n, derive_seed(SEED, &[2, i, 3]));
        max_chunks = max_chunks.max(cuts.len());
        worst = worst.max(rel_diff(&sequential(&m, &x, &y, &cuts, c), &batch_beta(&m, &x, &y, c)));
    }
    let secs = t.elapsed().as_secs_f64();
    report(
        "c02",
        worst <= 1e-5 && secs < 30.0,
        &format!(
            "worst relative ‖Δβ‖ {worst:.2e} ≤ 1e-5 over {instances} instances (n ≤ 200, d_hidden ≤ 50, up to {max_chunks} chunks); {secs:.2} s < 30 s"
        ),
    );
}

#[test]
fn c03_gradients_match_finite_differences() {
    let _g = serial();
    let t = Instant::now();
    let results = check_random_nets(derive_seed(SEED, &[3]), 24);
    let secs = t.elapsed().as_secs_f64();
    let worst = results.iter().map(|r| r.worst).fold(0.0, f64::max);
    let checked: usize = results.iter().map(|r| r.checked).sum();
    let specs: Vec<&LayerSpec> = results.iter().flat_map(|r| &r.specs).collect();
    let covered = [
        specs.iter().any(|s| matches!(s, LayerSpec::Conv { .. })),
        specs.iter().any(|s| matches!(s, LayerSpec::MaxPool { .. })),
        specs.iter().any(|s| matches!(s, LayerSpec::Flatten)),
        specs.iter().any(|s| matches!(s, LayerSpec::Dense { .. })),
        specs.iter().any(|s| matches!(s, LayerSpec::Dense { dropout, .. } if *dropout > 0.0)),
        specs.iter().any(|s| matches!(s, LayerSpec::Dropout { .. })),
        specs.iter().any(|s| matches!(s, LayerSpec::Softmax)),
    ];
    let pass = results.len() >= 20 && worst <= REL_TOL && covered.iter().all(|&c| c) && secs < 120.0;
    report(
        "c03",
        pass,
        &format!(
            "worst relative error {worst:.2e} ≤ {REL_TOL:.0e} on {} nets, {checked} entries, all layer types {}; {secs:.1} s < 120 s",
            results.len(),
            if covered.iter().all(|&c| c) { "covered" } else { "NOT covered" }
        ),
    );
}

#[test]
fn c04_classifier_extents() {
    let _g = serial();
    let net = build_classifier(50, 6, SEED).unwrap();
    let mut extents = vec![50];
    for s in net.shapes().unwrap() {
        // spatial side for feature maps, length for vectors
        extents.push(if s.len() == 3 { s[1] } else { s[0] });
    }
    // the softmax keeps the logit extent
    extents.dedup();
    let want = vec![50, 48, 46, 15, 13, 4, 256, 128, 64, 6];
    report("c04", extents == want, &format!("extents {extents:?}, expected {want:?}"));
}

#[test]
fn c05_six_class_classification() {
    let _g = serial();
    let ds = dataset();
    let net = classifier();
    let t = Instant::now();
    let test: Vec<&Sample> = ds.value.split(Split::Test).collect();
    let labels: Vec<usize> = test.iter().map(|s| s.label).collect();
    let (preds, probs) = predict_all(&net.value, &test);
    let acc = confusion(&labels, &preds, 6).unwrap().accuracy().unwrap();
    let aucs: Vec<f64> = roc_auc(&probs, &labels).unwrap().iter().map(|c| c.auc).collect();
    let min_auc = aucs.iter().cloned().fold(1.0, f64::min);
    let per_class = ds.value.samples.len() / ds.value.n_classes();
    let secs = ds.secs + net.secs + t.elapsed().as_secs_f64();
    report(
        "c05",
        acc >= 0.95 && min_auc >= 0.98 && secs <= 1800.0,
        &format!(
            "test accuracy {acc:.4} ≥ 0.95 on {} images, min per-class AUC {min_auc:.4} ≥ 0.98 ({} per class); {secs:.0} s ≤ 1800 s",
            test.len(),
            per_class
        ),
    );
}

#[test]
fn c06_denoising_gain() {
    let _g = serial();
    let ds = &dataset().value;
    let cnn = denoiser();
    let t = Instant::now();
    let clean = stack(&strided(ds, Split::Test, 300));
    let median = FilterSpec::default_for(FilterKind::Median);
    let mut rows = Vec::new();
    let mut pass = true;
    for (k, &v) in VARIANCES.iter().enumerate() {
        let n = noisy(&clean, v, derive_seed(SEED, &[6, k as u64]));
        let c = snr_imp(&clean, &n, &cnn.value.denoise(&n).unwrap()).unwrap().mean_snr_imp();
        let m = snr_imp(&clean, &n, &median.apply_batch(&n).unwrap()).unwrap().mean_snr_imp();
        pass &= c >= 3.0 && c > m;
        rows.push(format!("var {v}: CNN {c:.2} dB vs median {m:.2} dB"));
    }
    let eval_secs = t.elapsed().as_secs_f64();

    // ELM autoencoder on noisy/clean training pairs with the variances cycled
    let t = Instant::now();
    let train = stack(&strided(ds, Split::Train, 3000));
    let inputs: Vec<Tensor> = train
        .unstack()
        .iter()
        .enumerate()
        .map(|(i, img)| noisy(img, VARIANCES[i % VARIANCES.len()], derive_seed(SEED, &[6, 100, i as u64])))
        .collect();
    let inputs = Tensor::stack(&inputs.iter().collect::<Vec<_>>()).unwrap();
    let mut elm = ElmModel::denoiser(WINDOW, 2000, SEED).unwrap();
    elm.fit_denoiser(&inputs, &train, DEFAULT_C_REG).unwrap();
    let n = noisy(&clean, 100.0, derive_seed(SEED, &[6, 0]));
    let e = snr_imp(&clean, &n, &elm.denoise(&n).unwrap()).unwrap().mean_snr_imp();
    pass &= e >= 2.0;
    let secs = cnn.secs + eval_secs + t.elapsed().as_secs_f64();
    pass &= secs <= 2700.0;
    report(
        "c06",
        pass,
        &format!(
            "CNN ≥ 3 dB and > median at every variance [{}]; ELM {e:.2} dB ≥ 2 dB at var 100; 300 test images; {secs:.0} s ≤ 2700 s",
            rows.join("; ")
        ),
    );
}

#[test]
fn c07_transfer_learning() {
    let _g = serial();
    let ds = &dataset().value;
    let t = Instant::now();
    let five = ds.select_classes(&[0, 1, 2, 3, 4]).unwrap();
    let mut base = build_classifier(WINDOW, 5, SEED).unwrap();
    train_classifier(&mut base, &five, &classifier_config(1e-3, 3)).unwrap();
    let held_out: Vec<&Sample> = ds.split(Split::Test).filter(|s| s.label == 5).collect();
    let recall = |net: &Network| {
        let (preds, _) = predict_all(net, &held_out);
        preds.iter().filter(|&&p| p == 5).count() as f64 / held_out.len() as f64
    };
    let pre = recall(&base);
    let (tuned, _) = transfer_learn(&base, ds, &classifier_config(1e-2, 10)).unwrap();
    let post = recall(&tuned);
    let bits = |net: &Network, l: usize| -> Vec<u32> {
        net.layers[l]
            .params()
            .map(|(w, b)| w.data().iter().chain(b.data()).map(|v| v.to_bits()).collect())
            .unwrap_or_default()
    };
    let frozen: Vec<usize> = (0..tuned.layers.len()).filter(|&l| tuned.frozen[l]).collect();
    let unchanged = frozen.iter().all(|&l| bits(&tuned, l) == bits(&base, l));
    let trainable = tuned.layers.len() - frozen.len();
    let secs = t.elapsed().as_secs_f64();
    report(
        "c07",
        pre == 0.0 && post >= 0.9 && unchanged && secs <= 600.0,
        &format!(
            "6th class recall {pre:.3} = 0 before, {post:.3} ≥ 0.90 after; {} frozen layers bitwise {}, {trainable} trainable; {secs:.0} s ≤ 600 s",
            frozen.len(),
            if unchanged { "unchanged" } else { "CHANGED" }
        ),
    );
}

#[test]
fn c08_classical_filters_match_oracles() {
    let _g = serial();
    let mut rng = seeded_rng(derive_seed(SEED, &[8]));
    const TOL: f64 = 1e-5;
    let mut worst = [0.0f64; 4];
    let images = 200;
    for _ in 0..images {
        let (h, w) = (rng.gen_range(1..=16), rng.gen_range(1..=16));
        let img = Tensor::from_fn(&[h, w], |_| rng.gen_range(0.0..255.0));
        let k = [1, 3, 5, 7][rng.gen_range(0..4)];
        let sigma = rng.gen_range(0.3..3.0);
        let sc = rng.gen_range(1.0..50.0);
        let errs = [
            max_rel_err(&gaussian_filter(&img, k, sigma).unwrap(), &gaussian_oracle(&img, k, sigma)),
            max_rel_err(&average_filter(&img, k).unwrap(), &average_oracle(&img, k)),
            max_rel_err(&median_filter(&img, k).unwrap(), &median_oracle(&img, k)),
            max_rel_err(&bilateral_filter(&img, k, sc, sigma).unwrap(), &bilateral_oracle(&img, k, sc, sigma)),
        ];
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
    }
    report(
        "c08",
        worst.iter().all(|&e| e <= TOL),
        &format!(
            "{images} random images ≤ 16×16, worst range-relative error gaussian {:.1e} average {:.1e} median {:.1e} bilateral {:.1e} ≤ {TOL:.0e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    );
}

#[test]
fn c09_snr_identities() {
    let _g = serial();
    let c = Tensor::new(&[1, 2], vec![3.0, 4.0]).unwrap();
    let n = Tensor::new(&[1, 2], vec![3.0, 5.0]).unwrap();
    let d = Tensor::new(&[1, 2], vec![3.0, 4.5]).unwrap();
    let same = snr_imp(&c, &n, &n).unwrap().mean_snr_imp();
    let worked = snr_imp(&c, &n, &d).unwrap().mean_snr_imp();
    // 20·log10(‖n − c‖ / ‖d − c‖) = 20·log10(2)
    let want = 20.0 * 2f64.log10();
    report(
        "c09",
        same == 0.0 && (worked - 6.0206).abs() <= 1e-3 && (worked - want).abs() <= 1e-9,
        &format!("snr_imp(c, n, n) = {same} exactly; worked example {worked:.6} dB vs 6.0206 ± 1e-3"),
    );
}

fn files_under(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// One reduced synth → train → eval pipeline written under `root`.
fn pipeline(root: &Path) {
    let ds = build_dataset(&default_classes(), 5, 36, SplitCounts::new(108, 36, 36), SEED).unwrap();
    save_dataset(&root.join("data"), &ds).unwrap();
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 16,
        seed: SEED,
        max_train: Some(96),
        max_val: Some(24),
        ..TrainConfig::default()
    };
    let mut net = build_classifier(36, 6, SEED).unwrap();
    let history = train_classifier(&mut net, &ds, &cfg).unwrap();
    save_network(&root.join("classifier"), &net, Some(&history)).unwrap();
    let mut den = build_denoiser(36, SEED).unwrap();
    let history = train_denoiser(&mut den, &ds, &TrainConfig { max_train: Some(24), ..cfg }).unwrap();
    save_network(&root.join("denoiser"), &den, Some(&history)).unwrap();

    let test: Vec<&Sample> = ds.split(Split::Test).collect();
    let labels: Vec<usize> = test.iter().map(|s| s.label).collect();
    let (preds, probs) = predict_all(&net, &test);
    let cm = confusion(&labels, &preds, 6).unwrap().with_names(&ds.class_names()).unwrap();
    let eval = root.join("eval");
    std::fs::create_dir_all(&eval).unwrap();
    write_confusion_csv(&eval.join("confusion.csv"), &cm).unwrap();
    write_metrics_csv(&eval.join("metrics.csv"), &class_metrics(&cm).unwrap()).unwrap();
    write_roc_csv(&eval.join("roc.csv"), &ds.class_names(), &roc_auc(&probs, &labels).unwrap()).unwrap();
    let clean = stack(&test[..12]);
    let n = noisy(&clean, 300.0, SEED);
    write_snr_csv(&eval.join("snr.csv"), &snr_imp(&clean, &n, &den.denoise(&n).unwrap()).unwrap()).unwrap();
}

#[test]
fn c10_repeated_runs_are_byte_identical() {
    let _g = serial();
    let t = Instant::now();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path());
    pipeline(b.path());
    let (fa, fb) = (files_under(a.path()), files_under(b.path()));
    let names: Vec<&String> = fa.iter().map(|f| &f.0).collect();
    let differing: Vec<&String> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| &x.0)
        .collect();
    let covered = ["data/", "classifier/", "denoiser/", "eval/confusion", "eval/metrics", "eval/roc", "eval/snr"]
        .iter()
        .all(|k| names.iter().any(|n| n.starts_with(k)));
    let same = fa.len() == fb.len() && differing.is_empty() && covered;
    report(
        "c10",
        same,
        &format!(
            "{} artifacts from two synth/train/eval runs, {} differ {differing:?} (dataset, checkpoints and eval CSVs all present: {covered}); {:.0} s",
            names.len(),
            differing.len(),
            t.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn gradcam_peaks_inside_ring_support() {
    let _g = serial();
    let ds = &dataset().value;
    let net = &classifier().value;
    let masks: Vec<Tensor> = ds.classes.iter().map(|c| ring_support_mask(c, WINDOW)).collect();
    let (mut correct, mut inside) = (0, 0);
    for s in strided(ds, Split::Test, 300) {
        let (pred, _) = net.predict(&s.image).unwrap();
        if pred != s.label {
            continue;
        }
        correct += 1;
        let cam = grad_cam(net, &s.image, s.label).unwrap();
        let peak = (0..cam.len()).fold(0, |best, i| if cam.data()[i] > cam.data()[best] { i } else { best });
        inside += (masks[s.label].data()[peak] > 0.0) as usize;
    }
    let frac = inside as f64 / correct.max(1) as f64;
    report(
        "gradcam",
        correct > 0 && frac >= 0.9,
        &format!("peak inside ring support for {inside}/{correct} correctly classified ({frac:.3} ≥ 0.90)"),
    );
}

#[test]
fn saliency_concentrates_after_denoising() {
    let _g = serial();
    let ds = &dataset().value;
    let net = &classifier().value;
    let den = &denoiser().value;
    let samples = strided(ds, Split::Test, 100);
    let (mut before, mut after) = (Vec::new(), Vec::new());
    for (i, s) in samples.iter().enumerate() {
        let mask = ring_support_mask(&ds.classes[s.label], WINDOW);
        let n = noisy(&s.image, 300.0, derive_seed(SEED, &[11, i as u64]));
        let d = den.denoise(&n).unwrap();
        before.push(mass_fraction(&saliency(net, &n, s.label).unwrap(), &mask).unwrap());
        after.push(mass_fraction(&saliency(net, &d, s.label).unwrap(), &mask).unwrap());
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let (mb, ma) = (median(&mut before), median(&mut after));
    report(
        "saliency",
        ma > mb,
        &format!(
            "median ring-support saliency mass {mb:.4} noisy → {ma:.4} denoised over {} samples at variance 300",
            samples.len()
        ),
    );
}

mod common;

use common::oselm::*;
use lsit::elm::{oselm_init, oselm_update, ElmModel};
use lsit::{seeded_rng, Tensor};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn two_chunks_equal_batch() {
    let m = ElmModel::new(6, 20, 3, 1).unwrap();
    let (x, t) = (data(80, 6, 2), data(80, 3, 3));
    let seq = sequential(&m, &x, &t, &[30, 80], 100.0);
    assert!(rel_diff(&seq, &batch_beta(&m, &x, &t, 100.0)) < 1e-5);
}

#[test]
fn chunk_order_does_not_matter() {
    let m = ElmModel::new(5, 15, 2, 4).unwrap();
    let (x, t) = (data(60, 5, 5), data(60, 2, 6));
    let ab = sequential(&m, &x, &t, &[25, 60], 10.0);
    let mut xs = rows(&x, 25, 60).into_data();
    xs.extend_from_slice(rows(&x, 0, 25).data());
    let mut ts = rows(&t, 25, 60).into_data();
    ts.extend_from_slice(rows(&t, 0, 25).data());
    let ba = sequential(
        &m,
        &Tensor::new(&[60, 5], xs).unwrap(),
        &Tensor::new(&[60, 2], ts).unwrap(),
        &[35, 60],
        10.0,
    );
    assert!(rel_diff(&ba, &ab) < 1e-4);
}

#[test]
fn repeating_seen_data_barely_moves_beta() {
    // Exactly realizable targets: the ridge optimum barely moves when the
    // same rows are presented again.
    let mut m = ElmModel::new(4, 10, 2, 7).unwrap();
    let x = data(100, 4, 8);
    let h = m.hidden_map(&x).unwrap();
    let w = data(10, 2, 9);
    let t = lsit::numerics::matmul(&h, &w).unwrap();
    let mut s = oselm_init(&m, &x, &t, 1e8).unwrap();
    let before = s.beta.clone();
    oselm_update(&mut s, &m, &rows(&x, 0, 50), &rows(&t, 0, 50)).unwrap();
    assert!(rel_diff(&s.beta, &before) < 1e-3);
    s.apply_to(&mut m).unwrap();
}

#[test]
fn zero_readout_with_unit_scaling_is_zero_map() {
    let m = ElmModel::new(9, 4, 9, 1).unwrap();
    let y = m.predict(&data(3, 9, 2)).unwrap();
    assert!(y.data().iter().all(|&v| v == 0.0));
}

#[test]
fn training_never_touches_hidden_layer() {
    let mut m = ElmModel::new(6, 12, 2, 3).unwrap();
    let (w, b) = (m.w_in().clone(), m.b_in().clone());
    let (x, t) = (data(40, 6, 1), data(40, 2, 2));
    m.train_batch(&x, &t, 5.0).unwrap();
    let mut s = oselm_init(&m, &rows(&x, 0, 20), &rows(&t, 0, 20), 5.0).unwrap();
    oselm_update(&mut s, &m, &rows(&x, 20, 40), &rows(&t, 20, 40)).unwrap();
    s.apply_to(&mut m).unwrap();
    assert_eq!(m.w_in().data(), w.data());
    assert_eq!(m.b_in().data(), b.data());
}

#[test]
fn denoiser_shape_and_range() {
    let mut m = ElmModel::denoiser(5, 30, 2).unwrap();
    let mut rng = seeded_rng(4);
    let clean = Tensor::from_fn(&[40, 5, 5], |i| 128.0 + 60.0 * ((i % 25) as f32 / 12.0 - 1.0));
    let noisy = Tensor::from_fn(&[40, 5, 5], |i| (clean.data()[i] + rng.gen_range(-20.0f32..20.0)).clamp(0.0, 255.0));
    m.fit_denoiser(&noisy, &clean, 100.0).unwrap();
    let out = m.denoise(&noisy).unwrap();
    assert_eq!(out.shape(), noisy.shape());
    assert!(out.data().iter().all(|&v| (0.0..=255.0).contains(&v)));
    assert!(m.denoise(&Tensor::zeros(&[4, 4])).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn random_chunkings_equal_batch(
        n in 10usize..200,
        d_hidden in 2usize..50,
        seed in 0u64..1000,
        cut_seed in 0u64..1000,
        log_c in -1.0f64..4.0,
    ) {
        let c = 10f64.powf(log_c);
        let m = ElmModel::new(5, d_hidden, 3, seed).unwrap();
        let (x, t) = (data(n, 5, seed + 1), data(n, 3, seed + 2));
        let cuts = random_cuts(n, cut_seed);
        let seq = sequential(&m, &x, &t, &cuts, c);
        let err = rel_diff(&seq, &batch_beta(&m, &x, &t, c));
        prop_assert!(err <= 1e-5, "relative error {err:e} over {} chunks", cuts.len());
    }
}

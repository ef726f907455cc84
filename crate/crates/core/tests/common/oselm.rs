//! Independent batch ridge solution and chunked replay for OS-ELM checks.

use lsit::elm::{oselm_init, oselm_update, ElmModel};
use lsit::numerics::{ridge_solve64, Mat64};
use lsit::{seeded_rng, Tensor};
use rand::Rng;

pub fn data(n: usize, d: usize, seed: u64) -> Tensor {
    let mut rng = seeded_rng(seed);
    Tensor::from_fn(&[n, d], |_| rng.gen_range(-1.0f32..1.0))
}

pub fn rows(t: &Tensor, lo: usize, hi: usize) -> Tensor {
    let d = t.shape()[1];
    Tensor::new(&[hi - lo, d], t.data()[lo * d..hi * d].to_vec()).unwrap()
}

pub fn rel_diff(a: &Mat64, b: &Mat64) -> f64 {
    let mut d = a.clone();
    d.add_assign(b, -1.0);
    d.frobenius() / b.frobenius()
}

/// Batch oracle assembled independently of the model's training path.
pub fn batch_beta(m: &ElmModel, x: &Tensor, t: &Tensor, c: f64) -> Mat64 {
    let h = Mat64::from_tensor(&m.hidden_map(x).unwrap()).unwrap();
    ridge_solve64(&h, &Mat64::from_tensor(t).unwrap(), c).unwrap()
}

pub fn sequential(m: &ElmModel, x: &Tensor, t: &Tensor, cuts: &[usize], c: f64) -> Mat64 {
    let mut s = oselm_init(m, &rows(x, 0, cuts[0]), &rows(t, 0, cuts[0]), c).unwrap();
    for w in cuts.windows(2) {
        oselm_update(&mut s, m, &rows(x, w[0], w[1]), &rows(t, w[0], w[1])).unwrap();
    }
    s.beta
}

/// Random increasing chunk boundaries ending at `n`.
pub fn random_cuts(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = seeded_rng(seed);
    let mut cuts = vec![rng.gen_range(1..=n)];
    while *cuts.last().unwrap() < n {
        let last = *cuts.last().unwrap();
        cuts.push(rng.gen_range(last + 1..=n));
    }
    cuts
}

//! Central finite-difference check of parameter gradients.

use rand::Rng;

use super::params::ParamStore;
use super::tape::{Tape, Var};
use super::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct GradReport {
    /// Largest `|analytic − numeric| / max(|analytic|, |numeric|, 1e-4)`.
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
    /// Entries skipped because `x ± h` flips a ReLU input's sign; central
    /// differences across a kink do not estimate the derivative.
    pub kinks: usize,
}

/// Compares the gradients `backward` produces for `loss` with central
/// differences of step `h` on every parameter scalar in `store`.
///
/// `loss` must build the same computation for any parameter values. The
/// store's gradients are zeroed; its values are left as they were.
pub fn check_params(store: &mut ParamStore, h: f64, loss: impl Fn(&ParamStore, &mut Tape) -> Var) -> GradReport {
    store.zero_grad();
    let mut tape = Tape::new();
    let out = loss(store, &mut tape);
    let pattern = tape.relu_pattern();
    tape.backward(out, store).expect("scalar loss");
    let eval = |s: &ParamStore| {
        let mut t = Tape::new();
        let v = loss(s, &mut t);
        (t.value(v).data()[0], t.relu_pattern() == pattern)
    };
    let mut report = GradReport { max_rel_error: 0.0, max_abs_error: 0.0, worst: None, checked: 0, kinks: 0 };
    let mut probe = store.clone();
    for id in store.ids() {
        for i in 0..store.value(id).len() {
            let x = store.value(id).data()[i];
            probe.value_mut(id).data_mut()[i] = x + h;
            let (up, same_up) = eval(&probe);
            probe.value_mut(id).data_mut()[i] = x - h;
            let (down, same_down) = eval(&probe);
            probe.value_mut(id).data_mut()[i] = x;
            if !(same_up && same_down) {
                report.kinks += 1;
                continue;
            }
            let numeric = (up - down) / (2.0 * h);
            let analytic = store.grad(id).data()[i];
            let abs = (analytic - numeric).abs();
            let rel = abs / analytic.abs().max(numeric.abs()).max(1e-4);
            report.checked += 1;
            report.max_abs_error = report.max_abs_error.max(abs);
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((store.name(id).to_owned(), i));
            }
        }
    }
    store.zero_grad();
    report
}

/// `rows × cols` matrix uniform in `[-1, 1]`.
pub fn random_tensor<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Tensor {
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..=1.0)).collect()).unwrap()
}

#[cfg(test)]
mod tests {
    use std::rc::Rc;

    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::nn::{softmax_rows, ParamId, Window, Windows};

    fn store_with(rng: &mut ChaCha8Rng, shapes: &[(&str, usize, usize)]) -> ParamStore {
        let mut s = ParamStore::new();
        for &(name, r, c) in shapes {
            s.add(name, random_tensor(rng, r, c)).unwrap();
        }
        s
    }

    fn assert_ok(report: GradReport) {
        assert!(report.max_rel_error <= 1e-4, "{report:?}");
    }

    #[test]
    fn sum_gives_ones() {
        let mut s = store_with(&mut ChaCha8Rng::seed_from_u64(0), &[("w", 2, 3)]);
        let mut tape = Tape::new();
        let w = tape.param(&s, ParamId(0));
        let l = tape.sum(w);
        tape.backward(l, &mut s).unwrap();
        assert_eq!(s.grad(ParamId(0)).data(), &[1.0; 6]);
    }

    #[test]
    fn constant_loss_gives_zeros() {
        let mut s = store_with(&mut ChaCha8Rng::seed_from_u64(0), &[("w", 2, 3)]);
        let mut tape = Tape::new();
        let w = tape.param(&s, ParamId(0));
        let z = tape.scale(w, 0.0);
        let l = tape.sum(z);
        tape.backward(l, &mut s).unwrap();
        assert!(s.grad(ParamId(0)).data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn kink_crossings_are_skipped() {
        let mut s = ParamStore::new();
        s.add("x", Tensor::new(&[3], vec![4e-6, -0.5, 0.5]).unwrap()).unwrap();
        let r = check_params(&mut s, 1e-5, |s, t| {
            let x = t.param(s, ParamId(0));
            let y = t.relu(x);
            let y = t.mul(y, y);
            t.sum(y)
        });
        assert_eq!((r.kinks, r.checked), (1, 2));
        assert_ok(r);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut s = store_with(&mut ChaCha8Rng::seed_from_u64(0), &[("w", 2, 3)]);
        let mut tape = Tape::new();
        let w = tape.param(&s, ParamId(0));
        assert!(tape.backward(w, &mut s).is_err());
    }

    #[test]
    fn dense_ops() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = store_with(&mut rng, &[("x", 4, 3), ("w", 3, 5), ("b", 1, 5), ("u", 4, 5)]);
        assert_ok(check_params(&mut s, 1e-5, |s, t| {
            let x = t.param(s, ParamId(0));
            let w = t.param(s, ParamId(1));
            let b = t.param(s, ParamId(2));
            let u = t.param(s, ParamId(3));
            let y = t.matmul(x, w);
            let y = t.add_bias(y, b);
            let a = t.tanh(y);
            let r = t.relu(y);
            let g = t.sigmoid(u);
            let m = t.mul(a, g);
            let m = t.add(m, r);
            let m = t.scale(m, 0.7);
            let c = t.concat_cols(&[m, a]);
            let c = t.slice_cols(c, 2, 6);
            let c = t.mul(c, c);
            t.weighted_sum(c, Rc::new((0..24).map(|i| (i as f64 * 0.37).sin()).collect()))
        }));
    }

    #[test]
    fn row_ops() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = store_with(&mut rng, &[("x", 5, 3)]);
        assert_ok(check_params(&mut s, 1e-5, |s, t| {
            let x = t.param(s, ParamId(0));
            let g = t.gather_rows(x, Rc::new(vec![4, 0, 0, 2]));
            let g = t.scale_rows(g, Rc::new(vec![0.5, -1.0, 2.0, 1.5]));
            let sc = t.scatter_add_rows(g, Rc::new(vec![1, 1, 0, 2]), 3);
            let sq = t.mul(sc, sc);
            let f = t.gather_flat(sq, Rc::new(vec![0, 4, 8, 3]));
            t.sum(f)
        }));
    }

    #[test]
    fn batch_norm_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = store_with(&mut rng, &[("x", 6, 4), ("g", 1, 4), ("b", 1, 4)]);
        let mean = [0.1, -0.2, 0.3, 0.0];
        let var = [0.5, 1.5, 2.0, 0.9];
        let coef = Rc::new((0..24).map(|i| (i as f64 * 1.3).cos()).collect::<Vec<_>>());
        assert_ok(check_params(&mut s, 1e-5, |s, t| {
            let x = t.param(s, ParamId(0));
            let g = t.param(s, ParamId(1));
            let b = t.param(s, ParamId(2));
            let (y, _, _) = t.batch_norm(x, g, b);
            let z = t.fixed_norm(y, g, b, &mean, &var);
            let z = t.tanh(z);
            t.weighted_sum(z, coef.clone())
        }));
    }

    #[test]
    fn masked_attention() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = store_with(&mut rng, &[("q", 3, 4), ("k", 5, 4), ("v", 5, 6)]);
        let windows = Rc::new(Windows::new(
            vec![Window { start: 0, len: 3 }, Window { start: 2, len: 3 }, Window { start: 3, len: 2 }],
            Some(vec![true, false, true, true, true, true, false, false]),
        ));
        let coef = Rc::new((0..18).map(|i| (i as f64 * 0.9).sin()).collect::<Vec<_>>());
        let report = check_params(&mut s, 1e-5, |s, t| {
            let q = t.param(s, ParamId(0));
            let k = t.param(s, ParamId(1));
            let v = t.param(s, ParamId(2));
            let o = t.attention(q, k, v, 2, windows.clone());
            t.weighted_sum(o, coef.clone())
        });
        assert_ok(report);
        // the fully masked query produces zeros
        let mut tape = Tape::new();
        let q = tape.param(&s, ParamId(0));
        let k = tape.param(&s, ParamId(1));
        let v = tape.param(&s, ParamId(2));
        let o = tape.attention(q, k, v, 2, windows);
        assert!(tape.value(o).row(2).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pointer() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = store_with(&mut rng, &[("q", 2, 4), ("k", 6, 4)]);
        let windows = Rc::new(Windows::new(
            vec![Window { start: 0, len: 4 }, Window { start: 3, len: 3 }],
            Some(vec![true, true, false, true, false, true, true]),
        ));
        assert_ok(check_params(&mut s, 1e-5, |s, t| {
            let q = t.param(s, ParamId(0));
            let k = t.param(s, ParamId(1));
            let lp = t.pointer_log_softmax(q, k, windows.clone(), 10.0, 0.5);
            let picked = t.gather_flat(lp, Rc::new(vec![1, 3, 6]));
            t.weighted_sum(picked, Rc::new(vec![1.0, -0.5, 2.0]))
        }));
        let mut tape = Tape::new();
        let q = tape.param(&s, ParamId(0));
        let k = tape.param(&s, ParamId(1));
        let lp = tape.pointer_log_softmax(q, k, windows, 10.0, 0.5);
        let v = tape.value(lp).data();
        assert_eq!(v[2], f64::NEG_INFINITY);
        let z: f64 = v[..4].iter().map(|x| x.exp()).sum();
        assert!((z - 1.0).abs() < 1e-12);
        assert!(v.iter().filter(|x| x.is_finite()).all(|&x| x <= 0.0 && x >= -20.0 - 6f64.ln()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn softmax_rows_normalized(seed in any::<u64>(), rows in 1usize..6, cols in 1usize..9, spread in 0.1f64..50.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tensor(&mut rng, rows, cols);
            let t = Tensor::matrix(rows, cols, t.data().iter().map(|x| x * spread).collect()).unwrap();
            let p = softmax_rows(&t);
            for r in 0..rows {
                prop_assert!(p.row(r).iter().all(|&x| x >= 0.0));
                prop_assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            }
        }

        #[test]
        fn random_mlp_shapes(seed in any::<u64>(), n in 2usize..6, d in 1usize..5, hdim in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = store_with(&mut rng, &[("x", n, d), ("w1", d, hdim), ("b1", 1, hdim), ("w2", hdim, 2)]);
            let report = check_params(&mut s, 1e-5, |s, t| {
                let x = t.param(s, ParamId(0));
                let w1 = t.param(s, ParamId(1));
                let b1 = t.param(s, ParamId(2));
                let w2 = t.param(s, ParamId(3));
                let h = t.matmul(x, w1);
                let h = t.add_bias(h, b1);
                let h = t.tanh(h);
                let y = t.matmul(h, w2);
                let y = t.sigmoid(y);
                t.sum(y)
            });
            prop_assert!(report.max_rel_error <= 1e-4, "{:?}", report);
        }

        #[test]
        fn forward_is_deterministic(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = store_with(&mut rng, &[("q", 2, 4), ("k", 3, 4)]);
            let run = || {
                let mut t = Tape::new();
                let q = t.param(&s, ParamId(0));
                let k = t.param(&s, ParamId(1));
                let o = t.attention(q, k, k, 2, Rc::new(Windows::grouped(&[Window { start: 0, len: 3 }; 2])));
                t.value(o).clone()
            };
            prop_assert_eq!(run(), run());
        }
    }
}

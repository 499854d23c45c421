//! Finite-difference verification of every analytic gradient: the two loss
//! heads with respect to their outputs, and the full loss-through-model
//! parameter gradients for both architectures.

mod common;

use common::{
    build_hierarchy, finite_difference_gradients, flat_grads, grad_rel_err, random_dag, rng,
};
use hierclass::model::{Model, ModelArch};
use hierclass::{encode_label, hierarchical_loss, loss_mask, onehot_loss};
use rand::prelude::*;

const FD_STEP: f64 = 1e-6;
const TOLERANCE: f64 = 1e-5;

#[test]
fn hierarchical_loss_gradient_matches_central_differences() {
    let mut rng = rng(41);
    for _ in 0..50 {
        let n = rng.random_range(2..20);
        let enc: Vec<f64> = (0..n).map(|_| f64::from(rng.random_bool(0.5))).collect();
        let mask: Vec<f64> = (0..n).map(|_| f64::from(rng.random_bool(0.6))).collect();
        let out: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
        let analytic = hierarchical_loss(&enc, &mask, &out).unwrap();
        for k in 0..n {
            let mut plus = out.clone();
            plus[k] += FD_STEP;
            let mut minus = out.clone();
            minus[k] -= FD_STEP;
            let numeric = (hierarchical_loss(&enc, &mask, &plus).unwrap().value
                - hierarchical_loss(&enc, &mask, &minus).unwrap().value)
                / (2.0 * FD_STEP);
            assert!(grad_rel_err(analytic.gradient[k], numeric) < TOLERANCE);
        }
    }
}

#[test]
fn onehot_loss_gradient_matches_central_differences() {
    let mut rng = rng(42);
    for _ in 0..50 {
        let n = rng.random_range(2..15);
        let target = rng.random_range(0..n);
        let out: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
        let analytic = onehot_loss(target, &out).unwrap();
        for k in 0..n {
            let mut plus = out.clone();
            plus[k] += FD_STEP;
            let mut minus = out.clone();
            minus[k] -= FD_STEP;
            let numeric = (onehot_loss(target, &plus).unwrap().value
                - onehot_loss(target, &minus).unwrap().value)
                / (2.0 * FD_STEP);
            assert!(grad_rel_err(analytic.gradient[k], numeric) < TOLERANCE);
        }
    }
}

fn check_model_gradients(arch: ModelArch, seed: u64, points: usize) {
    let mut rng = rng(seed);
    for _ in 0..points {
        let dag = random_dag(&mut rng, 10, 2);
        let labeled: Vec<usize> = (0..dag.n).collect();
        let h = build_hierarchy(&dag, &labeled);
        let input_dim = rng.random_range(1..6);
        let x: Vec<f64> = (0..input_dim).map(|_| rng.random_range(-1.5..1.5)).collect();

        // hierarchical head
        let y = h.node_ids().nth(rng.random_range(0..dag.n)).unwrap();
        let enc = encode_label(&h, y);
        let mask = loss_mask(&h, y);
        let model = Model::init(arch, input_dim, h.node_count(), &mut rng);
        let out = model.forward(&x).unwrap();
        let loss = hierarchical_loss(enc.values(), mask.values(), &out).unwrap();
        let analytic = flat_grads(&model.backward(&x, &loss.gradient).unwrap());
        let numeric = finite_difference_gradients(&model, FD_STEP, |m| {
            hierarchical_loss(enc.values(), mask.values(), &m.forward(&x).unwrap())
                .unwrap()
                .value
        });
        for (a, n) in analytic.iter().zip(&numeric) {
            assert!(grad_rel_err(*a, *n) < TOLERANCE, "hierarchical: {a} vs {n}");
        }

        // baseline head
        let classes = h.labeled().len();
        let target = rng.random_range(0..classes);
        let model = Model::init(arch, input_dim, classes, &mut rng);
        let out = model.forward(&x).unwrap();
        let loss = onehot_loss(target, &out).unwrap();
        let analytic = flat_grads(&model.backward(&x, &loss.gradient).unwrap());
        let numeric = finite_difference_gradients(&model, FD_STEP, |m| {
            onehot_loss(target, &m.forward(&x).unwrap()).unwrap().value
        });
        for (a, n) in analytic.iter().zip(&numeric) {
            assert!(grad_rel_err(*a, *n) < TOLERANCE, "baseline: {a} vs {n}");
        }
    }
}

#[test]
fn linear_model_gradients_match_finite_differences() {
    check_model_gradients(ModelArch::Linear, 43, 25);
}

#[test]
fn hidden_model_gradients_match_finite_differences() {
    check_model_gradients(ModelArch::Hidden(6), 44, 25);
}

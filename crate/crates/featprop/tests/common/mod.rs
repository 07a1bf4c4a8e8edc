//! Shared helpers for the integration test suites.

use featprop::gcn::{loss_and_gradients, GcnModel, GcnVariant};
use featprop::graph::{normalized_adjacency, FeatureMatrix, Graph, LabelVector, NodeSet};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct GradCheck {
    pub max_rel_err: f64,
    pub n_params: usize,
}

/// Compares the analytic gradients against central finite differences on a
/// random small instance (n <= 8, d <= 5, h <= 4, C <= 3). Returns the worst
/// relative error across every parameter entry of both layers.
pub fn finite_difference_check(seed: u64, variant: GcnVariant) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=8);
    let d = rng.random_range(1..=5);
    let h = rng.random_range(1..=4);
    let c = rng.random_range(2..=3);

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < 0.4 {
                edges.push((i, j));
            }
        }
    }
    let graph = Graph::from_edges(n, edges).unwrap();
    let s = normalized_adjacency(&graph);

    let mut x = Array2::<f64>::zeros((n, d));
    for v in x.iter_mut() {
        *v = rng.random::<f64>() * 2.0 - 1.0;
    }
    let x = FeatureMatrix::new(x).unwrap();
    let labels =
        LabelVector::new((0..n).map(|_| rng.random_range(0..c)).collect(), c).unwrap();
    let mut pool: NodeSet = (0..n).filter(|_| rng.random::<f64>() < 0.6).collect();
    if pool.is_empty() {
        pool.insert(rng.random_range(0..n));
    }
    let weight_decay = [0.0, 5e-4, 0.05][rng.random_range(0..3)];

    let model = GcnModel::glorot(d, h, c, variant, seed.wrapping_mul(31).wrapping_add(7));
    let (_, grads) = loss_and_gradients(&model, &s, &x, &labels, &pool, weight_decay).unwrap();

    let eps = 1e-6;
    let mut max_rel_err: f64 = 0.0;
    let mut n_params = 0;
    for layer in 0..2 {
        let base = if layer == 0 { model.theta0() } else { model.theta1() };
        let analytic = if layer == 0 { &grads.theta0 } else { &grads.theta1 };
        for idx in 0..base.len() {
            let loss_at = |delta: f64| -> f64 {
                let mut perturbed = base.clone();
                perturbed.as_slice_mut().unwrap()[idx] += delta;
                let m = if layer == 0 {
                    GcnModel::from_parameters(perturbed, model.theta1().clone(), variant)
                } else {
                    GcnModel::from_parameters(model.theta0().clone(), perturbed, variant)
                }
                .unwrap();
                loss_and_gradients(&m, &s, &x, &labels, &pool, weight_decay)
                    .unwrap()
                    .0
            };
            let fd = (loss_at(eps) - loss_at(-eps)) / (2.0 * eps);
            let a = analytic.as_slice().unwrap()[idx];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            max_rel_err = max_rel_err.max(rel);
            n_params += 1;
        }
    }
    GradCheck { max_rel_err, n_params }
}

//! Shared test support: random DAGs and the independent oracles the
//! implementation is checked against. Everything here works from raw node
//! counts and edge lists so that it never touches the data structures under
//! test.

#![allow(dead_code)]
// index-based loops below mirror the textbook statements of the oracles
#![allow(clippy::needless_range_loop)]

use hierclass::model::{Gradients, Model};
use hierclass::{Hierarchy, NodeId};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random DAG as raw `(child, parent)` index pairs with `parent < child`,
/// acyclic by construction.
#[derive(Clone, Debug)]
pub struct RawDag {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

/// Draws a DAG with `1..=max_nodes` nodes where every node has at most
/// `max_parents` parents picked uniformly among earlier nodes. Nodes that
/// draw zero parents become extra roots.
pub fn random_dag(rng: &mut impl Rng, max_nodes: usize, max_parents: usize) -> RawDag {
    let n = rng.random_range(1..=max_nodes);
    let mut edges = Vec::new();
    for child in 1..n {
        let cap = max_parents.min(child);
        let k = rng.random_range(0..=cap);
        let mut candidates: Vec<usize> = (0..child).collect();
        candidates.shuffle(rng);
        for &parent in &candidates[..k] {
            edges.push((child, parent));
        }
    }
    RawDag { n, edges }
}

pub fn node_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("n{i}")).collect()
}

/// Builds the hierarchy under test from a raw DAG; `labeled` by index.
pub fn build_hierarchy(dag: &RawDag, labeled: &[usize]) -> Hierarchy {
    let names = node_names(dag.n);
    let edges: Vec<(String, String)> = dag
        .edges
        .iter()
        .map(|&(c, p)| (names[c].clone(), names[p].clone()))
        .collect();
    let labeled: Vec<String> = labeled.iter().map(|&i| names[i].clone()).collect();
    Hierarchy::build(&names, &edges, &labeled).expect("construction-acyclic DAG must build")
}

pub fn node(h: &Hierarchy, index: usize) -> NodeId {
    h.node_id(&format!("n{index}")).expect("node exists")
}

/// O(n³) Floyd–Warshall reachability: `reach[d][a]` is true when ancestor
/// `a` is reachable from descendant `d` through child→parent edges.
pub fn closure_oracle(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; n]; n];
    for &(c, p) in edges {
        reach[c][p] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    reach
}

/// Encoding oracle straight from its definition: 1 where the component is
/// the label or one of its ancestors.
pub fn encode_oracle(n: usize, edges: &[(usize, usize)], y: usize) -> Vec<f64> {
    let reach = closure_oracle(n, edges);
    (0..n)
        .map(|s| if s == y || reach[y][s] { 1.0 } else { 0.0 })
        .collect()
}

/// Mask oracle straight from its definition: 1 where the component is the
/// label, or has some parent that is the label or an ancestor of the label.
pub fn mask_oracle(n: usize, edges: &[(usize, usize)], y: usize) -> Vec<f64> {
    let reach = closure_oracle(n, edges);
    (0..n)
        .map(|s| {
            let selected = s == y
                || edges
                    .iter()
                    .any(|&(c, p)| c == s && (p == y || reach[y][p]));
            if selected {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Naive per-node recursive marginal evaluation with no memoization: roots
/// are 1, anything else is its conditional times the noisy-OR of its
/// recursively evaluated parents.
pub fn naive_marginals(n: usize, edges: &[(usize, usize)], cond: &[f64]) -> Vec<f64> {
    let mut parents_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(c, p) in edges {
        if !parents_of[c].contains(&p) {
            parents_of[c].push(p);
        }
    }
    for list in &mut parents_of {
        list.sort_unstable();
    }

    fn eval(s: usize, parents_of: &[Vec<usize>], cond: &[f64]) -> f64 {
        let parents = &parents_of[s];
        if parents.is_empty() {
            return 1.0;
        }
        let none_hold: f64 = parents
            .iter()
            .map(|&p| 1.0 - eval(p, parents_of, cond))
            .product();
        cond[s] * (1.0 - none_hold)
    }

    (0..n).map(|s| eval(s, &parents_of, cond)).collect()
}

/// Parameters flattened in a fixed order (hidden weights, hidden bias,
/// output weights, output bias) for finite-difference checks.
pub fn flat_params(model: &Model) -> Vec<f64> {
    let mut out = Vec::new();
    if let Some(hidden) = &model.hidden {
        out.extend_from_slice(&hidden.weights);
        out.extend_from_slice(&hidden.bias);
    }
    out.extend_from_slice(&model.output.weights);
    out.extend_from_slice(&model.output.bias);
    out
}

pub fn set_flat_params(model: &mut Model, values: &[f64]) {
    let mut cursor = 0;
    let mut take = |slice: &mut [f64]| {
        slice.copy_from_slice(&values[cursor..cursor + slice.len()]);
        cursor += slice.len();
    };
    if let Some(hidden) = &mut model.hidden {
        take(&mut hidden.weights);
        take(&mut hidden.bias);
    }
    take(&mut model.output.weights);
    take(&mut model.output.bias);
    assert_eq!(cursor, values.len(), "parameter vector length mismatch");
}

pub fn flat_grads(grads: &Gradients) -> Vec<f64> {
    let mut out = Vec::new();
    if let Some(hidden) = &grads.hidden {
        out.extend_from_slice(&hidden.weights);
        out.extend_from_slice(&hidden.bias);
    }
    out.extend_from_slice(&grads.output.weights);
    out.extend_from_slice(&grads.output.bias);
    out
}

/// Central finite differences of `loss` over every parameter of `model`.
pub fn finite_difference_gradients(
    model: &Model,
    step: f64,
    mut loss: impl FnMut(&Model) -> f64,
) -> Vec<f64> {
    let base = flat_params(model);
    let mut grads = Vec::with_capacity(base.len());
    for k in 0..base.len() {
        let mut plus = base.clone();
        plus[k] += step;
        let mut minus = base.clone();
        minus[k] -= step;
        let mut m_plus = model.clone();
        set_flat_params(&mut m_plus, &plus);
        let mut m_minus = model.clone();
        set_flat_params(&mut m_minus, &minus);
        grads.push((loss(&m_plus) - loss(&m_minus)) / (2.0 * step));
    }
    grads
}

/// Relative error with a unit floor, the usual gradient-check measure:
/// `|a - b| / max(1, |a|, |b|)`.
pub fn grad_rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

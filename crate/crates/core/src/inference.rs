//! Marginal probabilities from conditional per-node scores, and single-class
//! prediction.
//!
//! The estimator outputs, for each node `s`, the probability of `s` given
//! that at least one of its parents holds. Marginalizing these conditionals
//! recursively turns them into unconditional per-node probabilities: a root
//! holds with probability 1, and any other node holds with probability
//! `cond[s] · (1 - Π_p (1 - marginal[p]))` — the noisy-OR combination of its
//! parents. One pass over the topological order computes every marginal.
//!
//! Prediction scores a node by the joint event "the node holds and none of
//! its children do": `marginal[s] · Π_c (1 - cond[c])`. The argmax runs over
//! the labeled subset (MLNP) or over every node (ANP).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::hierarchy::{Hierarchy, NodeId};
use crate::PROB_EPS;

/// Complements below this threshold switch the product to log space.
const UNDERFLOW_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum InferenceError {
    #[error("expected {expected} scores, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no candidate nodes to predict from")]
    EmptyCandidateSet,
}

/// Per-node conditional scores, each clamped into `[PROB_EPS, 1 - PROB_EPS]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalScores {
    values: Vec<f64>,
}

impl ConditionalScores {
    /// Wraps raw estimator outputs, clamping every component into the open
    /// unit interval. Fails when the length does not match the hierarchy.
    pub fn new(h: &Hierarchy, mut values: Vec<f64>) -> Result<Self, InferenceError> {
        if values.len() != h.node_count() {
            return Err(InferenceError::LengthMismatch {
                expected: h.node_count(),
                got: values.len(),
            });
        }
        for v in &mut values {
            *v = v.clamp(PROB_EPS, 1.0 - PROB_EPS);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, s: NodeId) -> f64 {
        self.values[s.index()]
    }
}

/// Per-node marginal probabilities; every root is exactly 1.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalScores {
    values: Vec<f64>,
}

impl MarginalScores {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, s: NodeId) -> f64 {
        self.values[s.index()]
    }
}

/// Candidate set for the prediction argmax.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredictionMode {
    /// Mandatory labeled node prediction: candidates restricted to the
    /// labeled subset.
    Mlnp,
    /// Arbitrary node prediction: every node is a candidate, inner nodes
    /// and roots included.
    Anp,
}

impl FromStr for PredictionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mlnp" => Ok(Self::Mlnp),
            "anp" => Ok(Self::Anp),
            other => Err(format!("unknown prediction mode '{other}' (expected mlnp or anp)")),
        }
    }
}

impl fmt::Display for PredictionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mlnp => "mlnp",
            Self::Anp => "anp",
        })
    }
}

/// `Π (1 - p)` over the given probabilities, evaluated in log space when a
/// complement is small enough to underflow across long chains.
fn complement_product(probs: impl Iterator<Item = f64> + Clone) -> f64 {
    if probs.clone().any(|p| 1.0 - p < UNDERFLOW_EPS) {
        probs.map(|p| (1.0 - p).ln()).sum::<f64>().exp()
    } else {
        probs.map(|p| 1.0 - p).product()
    }
}

/// Turns conditional scores into marginal probabilities in one pass over the
/// topological order. Roots are forced to 1 regardless of their conditional
/// score.
///
/// Panics if the scores were built for a different hierarchy size.
pub fn marginals(h: &Hierarchy, cond: &ConditionalScores) -> MarginalScores {
    assert_eq!(cond.values.len(), h.node_count(), "scores built for another hierarchy");
    let mut values = vec![0.0; h.node_count()];
    for &s in h.topo_order() {
        let parents = h.parents(s);
        values[s.index()] = if parents.is_empty() {
            1.0
        } else {
            let at_least_one_parent =
                1.0 - complement_product(parents.iter().map(|p| values[p.index()]));
            cond.get(s) * at_least_one_parent
        };
    }
    MarginalScores { values }
}

/// Score of predicting exactly node `s`: its marginal times the probability
/// that none of its children hold, with child probabilities taken from the
/// conditional scores.
pub fn prediction_scores(h: &Hierarchy, cond: &ConditionalScores, marg: &MarginalScores) -> Vec<f64> {
    assert_eq!(cond.values.len(), h.node_count(), "scores built for another hierarchy");
    assert_eq!(marg.values.len(), h.node_count(), "marginals built for another hierarchy");
    h.node_ids()
        .map(|s| {
            let no_child = complement_product(h.children(s).iter().map(|c| cond.get(*c)));
            marg.get(s) * no_child
        })
        .collect()
}

/// Argmax of precomputed prediction scores over the mode's candidate set,
/// ties broken by smallest node id.
pub fn predict_from_scores(
    h: &Hierarchy,
    scores: &[f64],
    mode: PredictionMode,
) -> Result<NodeId, InferenceError> {
    assert_eq!(scores.len(), h.node_count(), "scores built for another hierarchy");
    let mut best: Option<(NodeId, f64)> = None;
    let consider = |best: &mut Option<(NodeId, f64)>, s: NodeId| {
        let score = scores[s.index()];
        if best.is_none_or(|(_, b)| score > b) {
            *best = Some((s, score));
        }
    };
    match mode {
        PredictionMode::Mlnp => {
            for &s in h.labeled() {
                consider(&mut best, s);
            }
        }
        PredictionMode::Anp => {
            for s in h.node_ids() {
                consider(&mut best, s);
            }
        }
    }
    best.map(|(s, _)| s).ok_or(InferenceError::EmptyCandidateSet)
}

/// Predicts a single class from conditional scores: marginalize, score, and
/// take the argmax over the mode's candidates.
pub fn predict(
    h: &Hierarchy,
    cond: &ConditionalScores,
    mode: PredictionMode,
) -> Result<NodeId, InferenceError> {
    let marg = marginals(h, cond);
    let scores = prediction_scores(h, cond, &marg);
    predict_from_scores(h, &scores, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy1() -> Hierarchy {
        Hierarchy::build(
            &["entity", "animal", "vehicle", "dog", "corgi", "car", "bus"],
            &[
                ("animal", "entity"),
                ("vehicle", "entity"),
                ("dog", "animal"),
                ("corgi", "dog"),
                ("car", "vehicle"),
                ("bus", "vehicle"),
            ],
            &["corgi", "car", "bus"],
        )
        .unwrap()
    }

    fn toy2() -> Hierarchy {
        Hierarchy::build(
            &["entity", "mammal", "aquatic", "whale", "dolphin"],
            &[
                ("mammal", "entity"),
                ("aquatic", "entity"),
                ("whale", "mammal"),
                ("whale", "aquatic"),
                ("dolphin", "whale"),
            ],
            &["whale", "dolphin"],
        )
        .unwrap()
    }

    fn scores_by_name(h: &Hierarchy, pairs: &[(&str, f64)], fill: f64) -> ConditionalScores {
        let mut values = vec![fill; h.node_count()];
        for (name, v) in pairs {
            values[h.node_id(name).unwrap().index()] = *v;
        }
        ConditionalScores::new(h, values).unwrap()
    }

    fn by_name<'a>(h: &Hierarchy, values: &'a [f64]) -> impl Fn(&str) -> f64 + 'a {
        let index: std::collections::HashMap<String, usize> = h
            .node_ids()
            .map(|s| (h.name(s).to_owned(), s.index()))
            .collect();
        move |name: &str| values[index[name]]
    }

    #[test]
    fn toy1_marginals_match_hand_recursion() {
        let h = toy1();
        let cond = scores_by_name(
            &h,
            &[
                ("animal", 0.9),
                ("vehicle", 0.2),
                ("dog", 0.8),
                ("corgi", 0.7),
                ("car", 0.5),
                ("bus", 0.5),
            ],
            0.5,
        );
        let marg = marginals(&h, &cond);
        let get = by_name(&h, marg.values());
        assert!((get("entity") - 1.0).abs() < 1e-12);
        assert!((get("animal") - 0.9).abs() < 1e-12);
        assert!((get("vehicle") - 0.2).abs() < 1e-12);
        assert!((get("dog") - 0.8 * 0.9).abs() < 1e-12);
        assert!((get("corgi") - 0.7 * 0.8 * 0.9).abs() < 1e-12);
        assert!((get("car") - 0.5 * 0.2).abs() < 1e-12);
        assert!((get("bus") - 0.5 * 0.2).abs() < 1e-12);
    }

    #[test]
    fn all_ones_is_a_fixed_point() {
        let h = toy1();
        let cond = ConditionalScores::new(&h, vec![1.0; h.node_count()]).unwrap();
        let marg = marginals(&h, &cond);
        for &v in marg.values() {
            // conditionals clamp to 1 - eps; roots stay exactly 1
            assert!(v > 1.0 - 1e-5);
        }
        assert_eq!(marg.get(h.node_id("entity").unwrap()), 1.0);
    }

    #[test]
    fn toy2_multi_parent_noisy_or() {
        let h = toy2();
        let cond = scores_by_name(
            &h,
            &[("mammal", 0.6), ("aquatic", 0.5), ("whale", 0.9), ("dolphin", 0.4)],
            0.5,
        );
        let marg = marginals(&h, &cond);
        let get = by_name(&h, marg.values());
        // whale's parent factor: 1 - (1-0.6)(1-0.5) = 0.8
        assert!((get("whale") - 0.9 * 0.8).abs() < 1e-12);
        assert!((get("dolphin") - 0.4 * 0.9 * 0.8).abs() < 1e-12);
    }

    #[test]
    fn toy1_prediction_scores_match_hand_evaluation() {
        let h = toy1();
        let cond = scores_by_name(
            &h,
            &[
                ("animal", 0.9),
                ("vehicle", 0.2),
                ("dog", 0.8),
                ("corgi", 0.7),
                ("car", 0.5),
                ("bus", 0.5),
            ],
            0.5,
        );
        let marg = marginals(&h, &cond);
        let scores = prediction_scores(&h, &cond, &marg);
        let get = by_name(&h, &scores);
        assert!((get("corgi") - 0.504).abs() < 1e-12);
        assert!((get("car") - 0.1).abs() < 1e-12);
        assert!((get("bus") - 0.1).abs() < 1e-12);
        assert!((get("dog") - 0.72 * (1.0 - 0.7)).abs() < 1e-12);
        assert!((get("animal") - 0.9 * (1.0 - 0.8)).abs() < 1e-12);
        assert!((get("vehicle") - 0.2 * (1.0 - 0.5) * (1.0 - 0.5)).abs() < 1e-12);
        assert!((get("entity") - (1.0 - 0.9) * (1.0 - 0.2)).abs() < 1e-12);
    }

    #[test]
    fn leaf_scores_equal_their_marginals() {
        let h = toy1();
        let cond = scores_by_name(&h, &[("corgi", 0.7), ("dog", 0.8), ("animal", 0.9)], 0.5);
        let marg = marginals(&h, &cond);
        let scores = prediction_scores(&h, &cond, &marg);
        for s in h.leaves() {
            assert_eq!(scores[s.index()], marg.get(s));
        }
    }

    #[test]
    fn predicts_toy1_under_both_modes() {
        let h = toy1();
        let cond = scores_by_name(
            &h,
            &[
                ("animal", 0.9),
                ("vehicle", 0.2),
                ("dog", 0.8),
                ("corgi", 0.7),
                ("car", 0.5),
                ("bus", 0.5),
            ],
            0.5,
        );
        let mlnp = predict(&h, &cond, PredictionMode::Mlnp).unwrap();
        assert_eq!(h.name(mlnp), "corgi");
        let anp = predict(&h, &cond, PredictionMode::Anp).unwrap();
        assert_eq!(h.name(anp), "corgi");
    }

    #[test]
    fn predicts_inner_node_class_on_toy2() {
        let h = toy2();
        let cond = scores_by_name(
            &h,
            &[("mammal", 0.6), ("aquatic", 0.5), ("whale", 0.9), ("dolphin", 0.4)],
            0.5,
        );
        let marg = marginals(&h, &cond);
        let scores = prediction_scores(&h, &cond, &marg);
        let get = by_name(&h, &scores);
        assert!((get("whale") - 0.432).abs() < 1e-12);
        assert!((get("dolphin") - 0.288).abs() < 1e-12);
        // whale is an inner node, yet wins MLNP over its leaf child
        let pred = predict(&h, &cond, PredictionMode::Mlnp).unwrap();
        assert_eq!(h.name(pred), "whale");
    }

    #[test]
    fn ties_break_to_smallest_id() {
        let h = toy1();
        let cond = ConditionalScores::new(&h, vec![0.5; h.node_count()]).unwrap();
        // car and bus tie exactly at 0.25 and beat corgi's 0.125; car has
        // the smaller id
        let marg = marginals(&h, &cond);
        let scores = prediction_scores(&h, &cond, &marg);
        let car = h.node_id("car").unwrap();
        let bus = h.node_id("bus").unwrap();
        assert_eq!(scores[car.index()], scores[bus.index()]);
        let pred = predict_from_scores(&h, &scores, PredictionMode::Mlnp).unwrap();
        assert_eq!(pred, car);
    }

    #[test]
    fn empty_candidate_set_is_an_error() {
        let h = Hierarchy::build(&["only"], &[], &[]).unwrap();
        let cond = ConditionalScores::new(&h, vec![0.5]).unwrap();
        let err = predict(&h, &cond, PredictionMode::Mlnp).unwrap_err();
        assert_eq!(err, InferenceError::EmptyCandidateSet);
        // ANP still works: the single root is a candidate
        assert!(predict(&h, &cond, PredictionMode::Anp).is_ok());
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let h = toy1();
        let err = ConditionalScores::new(&h, vec![0.5; 3]).unwrap_err();
        assert_eq!(err, InferenceError::LengthMismatch { expected: 7, got: 3 });
    }

    #[test]
    fn long_chain_does_not_underflow_to_garbage() {
        // 400 nodes in a chain with conditionals so close to 1 that the
        // complement product underflows without the log-space route.
        let names: Vec<String> = (0..400).map(|i| format!("n{i}")).collect();
        let edges: Vec<(String, String)> = (1..400)
            .map(|i| (format!("n{i}"), format!("n{}", i - 1)))
            .collect();
        let h = Hierarchy::build(&names, &edges, &[names[399].clone()]).unwrap();
        let cond = ConditionalScores::new(&h, vec![1.0; 400]).unwrap();
        let marg = marginals(&h, &cond);
        let last = h.node_id("n399").unwrap();
        assert!(marg.get(last) > 0.99);
        assert!(marg.get(last) <= 1.0);
    }
}

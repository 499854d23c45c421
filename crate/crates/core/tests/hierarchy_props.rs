//! Hierarchy invariants checked against independent oracles on random DAGs.

// index pairs keep the closure comparison in oracle terms
#![allow(clippy::needless_range_loop)]

mod common;

use common::{build_hierarchy, closure_oracle, node, random_dag, rng, RawDag};
use hierclass::{Hierarchy, HierarchyError};
use proptest::prelude::*;
use rand::prelude::*;

fn raw_dag_strategy(max_n: usize) -> impl Strategy<Value = RawDag> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (1..n)
            .flat_map(|c| (0..c).map(move |p| (c, p)))
            .collect();
        proptest::collection::vec(proptest::bool::weighted(0.25), pairs.len()).prop_map(
            move |bits| RawDag {
                n,
                edges: pairs
                    .iter()
                    .zip(bits)
                    .filter(|(_, keep)| *keep)
                    .map(|(&e, _)| e)
                    .collect(),
            },
        )
    })
}

proptest! {
    #[test]
    fn closure_equals_reachability_oracle(dag in raw_dag_strategy(20)) {
        let h = build_hierarchy(&dag, &[]);
        let reach = closure_oracle(dag.n, &dag.edges);
        for d in 0..dag.n {
            for a in 0..dag.n {
                prop_assert_eq!(h.is_ancestor(node(&h, d), node(&h, a)), reach[d][a]);
            }
        }
    }

    #[test]
    fn topo_order_is_valid(dag in raw_dag_strategy(20)) {
        let h = build_hierarchy(&dag, &[]);
        let mut position = vec![0; dag.n];
        for (i, &s) in h.topo_order().iter().enumerate() {
            position[s.index()] = i;
        }
        prop_assert_eq!(h.topo_order().len(), dag.n);
        for (c, p) in h.edges() {
            prop_assert!(position[p.index()] < position[c.index()]);
        }
    }

    #[test]
    fn parents_and_children_are_mutually_consistent(dag in raw_dag_strategy(20)) {
        let h = build_hierarchy(&dag, &[]);
        for s in h.node_ids() {
            for &p in h.parents(s) {
                prop_assert!(h.children(p).contains(&s));
            }
            for &c in h.children(s) {
                prop_assert!(h.parents(c).contains(&s));
            }
        }
    }

    #[test]
    fn tsv_round_trip_preserves_structure(dag in raw_dag_strategy(20)) {
        prop_assume!(dag.n >= 2);
        // only edge-connected nodes are representable in the file format, so
        // hang every untouched node off an earlier one first
        let mut dag = dag;
        let mut touched = vec![false; dag.n];
        for &(c, p) in &dag.edges {
            touched[c] = true;
            touched[p] = true;
        }
        let untouched: Vec<usize> = (0..dag.n).filter(|&i| !touched[i]).collect();
        for i in untouched {
            let edge = if i == 0 { (1, 0) } else { (i, i - 1) };
            dag.edges.push(edge);
        }
        let labeled: Vec<usize> = (0..dag.n).filter(|i| i % 2 == 0).collect();
        let h = build_hierarchy(&dag, &labeled);
        let back = Hierarchy::from_tsv(&h.to_tsv()).unwrap();
        // ids may be renumbered by appearance order; names carry structure
        prop_assert_eq!(structure(&h), structure(&back));
    }
}

/// Name-based view of a hierarchy: (nodes, edges, labels), all sorted.
#[allow(clippy::type_complexity)]
fn structure(h: &Hierarchy) -> (Vec<String>, Vec<(String, String)>, Vec<String>) {
    let mut nodes: Vec<String> = h.node_ids().map(|s| h.name(s).to_owned()).collect();
    let mut edges: Vec<(String, String)> = h
        .edges()
        .map(|(c, p)| (h.name(c).to_owned(), h.name(p).to_owned()))
        .collect();
    let mut labels: Vec<String> = h.labeled().iter().map(|&s| h.name(s).to_owned()).collect();
    nodes.sort();
    edges.sort();
    labels.sort();
    (nodes, edges, labels)
}

#[test]
fn closure_matches_oracle_at_full_scale() {
    let mut rng = rng(0xc105);
    for _ in 0..200 {
        let dag = random_dag(&mut rng, 50, 4);
        let h = build_hierarchy(&dag, &[]);
        let reach = closure_oracle(dag.n, &dag.edges);
        for d in 0..dag.n {
            for a in 0..dag.n {
                assert_eq!(h.is_ancestor(node(&h, d), node(&h, a)), reach[d][a]);
            }
        }
    }
}

#[test]
fn accepts_every_random_acyclic_graph() {
    let mut rng = rng(0x5eed);
    for _ in 0..200 {
        let dag = random_dag(&mut rng, 30, 4);
        build_hierarchy(&dag, &[]); // panics on rejection
    }
}

#[test]
fn rejects_every_randomly_cyclized_graph() {
    let mut rng = rng(0xc1c1e);
    let mut tested = 0;
    while tested < 200 {
        let dag = random_dag(&mut rng, 30, 4);
        if dag.edges.is_empty() {
            continue;
        }
        // close a random reachability pair (or reverse an edge) into a cycle
        let reach = closure_oracle(dag.n, &dag.edges);
        let reachable: Vec<(usize, usize)> = (0..dag.n)
            .flat_map(|d| (0..dag.n).map(move |a| (d, a)))
            .filter(|&(d, a)| reach[d][a])
            .collect();
        let &(descendant, ancestor) = reachable
            .choose(&mut rng)
            .expect("graphs with edges have reachable pairs");
        let mut edges = dag.edges.clone();
        edges.push((ancestor, descendant));

        let names = common::node_names(dag.n);
        let named: Vec<(String, String)> = edges
            .iter()
            .map(|&(c, p)| (names[c].clone(), names[p].clone()))
            .collect();
        let err = Hierarchy::build(&names, &named, &[]).unwrap_err();
        assert!(
            matches!(err, HierarchyError::CycleDetected(_)),
            "expected CycleDetected, got {err:?}"
        );
        tested += 1;
    }
}

#[test]
fn reported_cycle_is_a_real_cycle() {
    let err = Hierarchy::build(
        &["r", "a", "b", "c", "d"],
        &[("a", "r"), ("b", "a"), ("c", "b"), ("b", "c"), ("d", "c")],
        &[],
    )
    .unwrap_err();
    let HierarchyError::CycleDetected(cycle) = err else {
        panic!("expected CycleDetected");
    };
    // each consecutive pair (and the wrap-around) must be a child→parent edge
    let edges = [("a", "r"), ("b", "a"), ("c", "b"), ("b", "c"), ("d", "c")];
    for i in 0..cycle.len() {
        let child = cycle[i].as_str();
        let parent = cycle[(i + 1) % cycle.len()].as_str();
        assert!(
            edges.contains(&(child, parent)),
            "{child} -> {parent} is not an edge"
        );
    }
}

#[test]
fn every_non_root_reaches_a_root() {
    let mut rng = rng(77);
    for _ in 0..50 {
        let dag = random_dag(&mut rng, 25, 3);
        let h = build_hierarchy(&dag, &[]);
        let root_set: Vec<bool> = {
            let mut v = vec![false; dag.n];
            for &r in h.roots() {
                v[r.index()] = true;
            }
            v
        };
        assert!(!h.roots().is_empty());
        for s in h.node_ids() {
            if !root_set[s.index()] {
                assert!(
                    h.ancestors(s).any(|a| root_set[a.index()]),
                    "node {} reaches no root",
                    s.index()
                );
            }
        }
    }
}

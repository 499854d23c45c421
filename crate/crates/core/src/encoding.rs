//! Hierarchical label encoding and the loss mask derived from it.
//!
//! A single ground-truth label expands to a binary target over the whole
//! node set: the label itself plus every ancestor. The loss mask selects
//! which estimator components train for that label: the label, its
//! children, and the children of each of its ancestors. Inside the mask
//! the encoding is 1 exactly on the label-to-root path, so each masked
//! component only has to discriminate among siblings.

use crate::hierarchy::{Hierarchy, NodeId};

/// Binary target vector over all nodes: 1 at the label and every ancestor.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelEncoding {
    values: Vec<f64>,
}

/// Binary selector over all nodes: components that receive gradient for a
/// given label. Roots other than the label itself are never selected.
#[derive(Clone, Debug, PartialEq)]
pub struct LossMask {
    values: Vec<f64>,
}

macro_rules! binary_vector_impl {
    ($ty:ident) => {
        impl $ty {
            /// Components as 0.0/1.0 values, indexed by node id.
            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn len(&self) -> usize {
                self.values.len()
            }

            pub fn is_empty(&self) -> bool {
                self.values.is_empty()
            }

            pub fn is_set(&self, s: NodeId) -> bool {
                self.values[s.index()] == 1.0
            }

            /// Ids of the 1-components, in index order.
            pub fn ones(&self) -> impl Iterator<Item = NodeId> + '_ {
                self.values
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v == 1.0)
                    .map(|(i, _)| NodeId::new(i))
            }
        }
    };
}

binary_vector_impl!(LabelEncoding);
binary_vector_impl!(LossMask);

/// Expands label `y` to its hierarchical encoding: 1 at `y` and at every
/// ancestor of `y`, 0 elsewhere.
pub fn encode_label(h: &Hierarchy, y: NodeId) -> LabelEncoding {
    let mut values = vec![0.0; h.node_count()];
    values[y.index()] = 1.0;
    for a in h.ancestors(y) {
        values[a.index()] = 1.0;
    }
    LabelEncoding { values }
}

/// Computes the loss mask for label `y`: 1 at `y`, at every child of `y`,
/// and at every child of an ancestor of `y`.
pub fn loss_mask(h: &Hierarchy, y: NodeId) -> LossMask {
    let mut values = vec![0.0; h.node_count()];
    values[y.index()] = 1.0;
    for &c in h.children(y) {
        values[c.index()] = 1.0;
    }
    for a in h.ancestors(y) {
        for &c in h.children(a) {
            values[c.index()] = 1.0;
        }
    }
    LossMask { values }
}

/// Encoding and mask pairs precomputed for every labeled node.
///
/// They depend only on the hierarchy, so training computes them once and
/// reuses them every step.
#[derive(Clone, Debug)]
pub struct EncodingTable {
    entries: Vec<Option<(LabelEncoding, LossMask)>>,
}

impl EncodingTable {
    pub fn new(h: &Hierarchy) -> Self {
        let mut entries = vec![None; h.node_count()];
        for &y in h.labeled() {
            entries[y.index()] = Some((encode_label(h, y), loss_mask(h, y)));
        }
        Self { entries }
    }

    /// Encoding/mask pair for a labeled node; `None` for unlabeled nodes.
    pub fn get(&self, y: NodeId) -> Option<(&LabelEncoding, &LossMask)> {
        self.entries[y.index()].as_ref().map(|(e, m)| (e, m))
    }
}

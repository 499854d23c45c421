//! Synthetic hierarchical datasets, CSV ingestion and per-feature
//! standardization.
//!
//! The generator builds a complete tree and assigns every node a Gaussian
//! mean that drifts from its parent's mean by a per-level displacement whose
//! scale halves at each level. Samples are drawn around leaf means, so leaves
//! under a common subtree stay closer together than leaves across subtrees —
//! the hierarchy carries genuine signal.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::hierarchy::{Hierarchy, NodeId};

/// Scale of the mean displacement at `level` (1-based, children of the root
/// are level 1): `level_scale · 0.5^(level-1)`.
const LEVEL_DECAY: f64 = 0.5;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: label '{name}' is not a labeled class of the hierarchy")]
    LabelNotInHierarchy { line: usize, name: String },
    #[error("line {line}: expected {expected} feature columns, got {got}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Per-feature affine transform fitted on a training split.
///
/// Uses the population convention (divide by `n`), so the two-point column
/// `(0, 2)` maps to `(-1, +1)`. Features with standard deviation below
/// `1e-12` are centered but left unscaled.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

/// Feature vectors with labels from the hierarchy's labeled subset.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<NodeId>,
    dim: usize,
    standardization: Option<Standardization>,
}

impl Dataset {
    pub fn from_parts(features: Vec<Vec<f64>>, labels: Vec<NodeId>) -> Result<Self, DataError> {
        if features.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        if features.len() != labels.len() {
            return Err(DataError::InvalidConfig(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let dim = features[0].len();
        for (i, row) in features.iter().enumerate() {
            if row.len() != dim {
                return Err(DataError::DimensionMismatch {
                    line: i + 1,
                    expected: dim,
                    got: row.len(),
                });
            }
        }
        Ok(Self {
            features,
            labels,
            dim,
            standardization: None,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn label(&self, i: usize) -> NodeId {
        self.labels[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], NodeId)> + '_ {
        self.features
            .iter()
            .map(Vec::as_slice)
            .zip(self.labels.iter().copied())
    }

    /// The transform already applied to this dataset, if any.
    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// Fits per-feature mean/stddev on this dataset and returns the
    /// standardized copy with the fitted parameters recorded.
    pub fn standardize(&self) -> Result<Dataset, DataError> {
        if self.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        let n = self.len() as f64;
        let mut mean = vec![0.0; self.dim];
        for row in &self.features {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut variance = vec![0.0; self.dim];
        for row in &self.features {
            for ((var, v), m) in variance.iter_mut().zip(row).zip(&mean) {
                let d = v - m;
                *var += d * d;
            }
        }
        let scale: Vec<f64> = variance
            .iter()
            .map(|&v| {
                let sd = (v / n).sqrt();
                if sd < 1e-12 {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        let params = Standardization { mean, scale };
        let mut out = self.apply_standardization(&params)?;
        out.standardization = Some(params);
        Ok(out)
    }

    /// Applies a previously fitted transform, e.g. to a held-out split.
    pub fn apply_standardization(&self, params: &Standardization) -> Result<Dataset, DataError> {
        if params.mean.len() != self.dim {
            return Err(DataError::DimensionMismatch {
                line: 0,
                expected: self.dim,
                got: params.mean.len(),
            });
        }
        let features = self
            .features
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&params.mean)
                    .zip(&params.scale)
                    .map(|((v, m), s)| (v - m) / s)
                    .collect()
            })
            .collect();
        Ok(Dataset {
            features,
            labels: self.labels.clone(),
            dim: self.dim,
            standardization: Some(params.clone()),
        })
    }

    /// Exact partition into train/validation splits, stratified per class.
    ///
    /// Each class's samples are shuffled with the seed, the first
    /// `round(n · train_fraction)` go to the training side, and both sides
    /// keep the original dataset order.
    pub fn stratified_split(
        &self,
        train_fraction: f64,
        seed: u64,
    ) -> Result<(Dataset, Dataset), DataError> {
        if !(0.0 < train_fraction && train_fraction < 1.0) {
            return Err(DataError::InvalidConfig(format!(
                "train fraction must be in (0, 1), got {train_fraction}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut classes: Vec<NodeId> = self.labels.clone();
        classes.sort_unstable();
        classes.dedup();

        let mut train_idx = Vec::new();
        let mut val_idx = Vec::new();
        for class in classes {
            let mut indices: Vec<usize> = (0..self.len())
                .filter(|&i| self.labels[i] == class)
                .collect();
            indices.shuffle(&mut rng);
            let take = ((indices.len() as f64) * train_fraction).round() as usize;
            train_idx.extend_from_slice(&indices[..take]);
            val_idx.extend_from_slice(&indices[take..]);
        }
        train_idx.sort_unstable();
        val_idx.sort_unstable();

        let subset = |idx: &[usize]| Dataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
            standardization: self.standardization.clone(),
        };
        Ok((subset(&train_idx), subset(&val_idx)))
    }

    /// Parses the dataset CSV format: header `f0,…,f{d-1},label`, one sample
    /// per row with the label as a node name from the labeled subset.
    pub fn from_csv(text: &str, h: &Hierarchy) -> Result<Self, DataError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(DataError::EmptyDataset)?;
        let columns: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
        if columns.len() < 2 || columns.last() != Some(&"label") {
            return Err(DataError::Parse {
                line: 1,
                message: "expected header 'f0,…,label'".to_owned(),
            });
        }
        let dim = columns.len() - 1;
        for (i, col) in columns[..dim].iter().enumerate() {
            if *col != format!("f{i}") {
                return Err(DataError::Parse {
                    line: 1,
                    message: format!("expected feature column 'f{i}', got '{col}'"),
                });
            }
        }

        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (idx, raw) in lines {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 1 {
                return Err(DataError::DimensionMismatch {
                    line: line_no,
                    expected: dim,
                    got: fields.len() - 1,
                });
            }
            let row: Result<Vec<f64>, _> = fields[..dim].iter().map(|f| f.parse()).collect();
            let row = row.map_err(|e| DataError::Parse {
                line: line_no,
                message: format!("bad feature value: {e}"),
            })?;
            let name = fields[dim];
            let label = h
                .node_id(name)
                .filter(|&s| h.is_labeled(s))
                .ok_or_else(|| DataError::LabelNotInHierarchy {
                    line: line_no,
                    name: name.to_owned(),
                })?;
            features.push(row);
            labels.push(label);
        }
        if features.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        Ok(Self {
            features,
            labels,
            dim,
            standardization: None,
        })
    }

    /// Writes the same CSV format [`Dataset::from_csv`] parses.
    pub fn to_csv(&self, h: &Hierarchy) -> String {
        let mut out = String::new();
        for i in 0..self.dim {
            let _ = write!(out, "f{i},");
        }
        out.push_str("label\n");
        for (row, label) in self.iter() {
            for v in row {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{}", h.name(label));
        }
        out
    }

    pub fn from_csv_file(path: impl AsRef<Path>, h: &Hierarchy) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_csv(&text, h)
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>, h: &Hierarchy) -> Result<(), DataError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv(h)).map_err(|source| DataError::Io {
            path: path.to_owned(),
            source,
        })
    }
}

/// Shape and noise parameters for [`generate_synthetic`].
#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    /// Tree depth below the root; leaves sit at this level.
    pub depth: usize,
    /// Children per inner node.
    pub branching: usize,
    pub samples_per_leaf: usize,
    /// Feature dimension.
    pub dim: usize,
    /// Displacement scale for level-1 means; halves at each further level.
    pub level_scale: f64,
    /// Observation noise around leaf means.
    pub noise: f64,
    pub seed: u64,
}

// false for NaN as well
fn positive(x: f64) -> bool {
    x > 0.0
}

impl SynthConfig {
    fn validate(&self) -> Result<(), DataError> {
        let mut problems = Vec::new();
        if self.depth < 1 {
            problems.push("depth must be at least 1");
        }
        if self.branching < 2 {
            problems.push("branching must be at least 2");
        }
        if self.samples_per_leaf < 1 {
            problems.push("samples_per_leaf must be at least 1");
        }
        if self.dim < 1 {
            problems.push("dim must be at least 1");
        }
        if !positive(self.level_scale) {
            problems.push("level_scale must be positive");
        }
        if !positive(self.noise) {
            problems.push("noise must be positive");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DataError::InvalidConfig(problems.join("; ")))
        }
    }
}

/// Builds a complete tree of the configured shape and draws samples around
/// hierarchically correlated Gaussian class means. The labeled subset is the
/// leaves. Deterministic in the config (including its seed).
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<(Hierarchy, Dataset), DataError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Breadth-first node layout: ids increase level by level.
    let mut names: Vec<String> = vec!["root".to_owned()];
    let mut levels: Vec<usize> = vec![0];
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut frontier: Vec<usize> = vec![0];
    for level in 1..=cfg.depth {
        let mut next = Vec::with_capacity(frontier.len() * cfg.branching);
        for &parent in &frontier {
            for b in 0..cfg.branching {
                let name = format!("{}.{b}", names[parent]);
                edges.push((name.clone(), names[parent].clone()));
                names.push(name);
                levels.push(level);
                next.push(names.len() - 1);
            }
        }
        frontier = next;
    }
    let leaf_names: Vec<String> = frontier.iter().map(|&i| names[i].clone()).collect();
    let h = Hierarchy::build(&names, &edges, &leaf_names)
        .expect("complete tree construction is always a valid hierarchy");

    // Means drift from the parent by a level-scaled Gaussian displacement.
    let mut means: Vec<Vec<f64>> = vec![vec![0.0; cfg.dim]; names.len()];
    for s in h.node_ids().skip(1) {
        let parent = h.parents(s)[0];
        let scale = cfg.level_scale * LEVEL_DECAY.powi(levels[s.index()] as i32 - 1);
        means[s.index()] = means[parent.index()]
            .clone()
            .into_iter()
            .map(|m| m + scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
    }

    let mut features = Vec::with_capacity(frontier.len() * cfg.samples_per_leaf);
    let mut labels = Vec::with_capacity(features.capacity());
    for &leaf in h.labeled() {
        for _ in 0..cfg.samples_per_leaf {
            let row: Vec<f64> = means[leaf.index()]
                .iter()
                .map(|m| m + cfg.noise * rng.sample::<f64, _>(StandardNormal))
                .collect();
            features.push(row);
            labels.push(leaf);
        }
    }

    let ds = Dataset {
        features,
        labels,
        dim: cfg.dim,
        standardization: None,
    };
    Ok((h, ds))
}

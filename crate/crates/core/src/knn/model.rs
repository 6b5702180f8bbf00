use super::{DistanceMetric, KnnError};
use crate::ingest::Label;
use crate::preprocess::{EncodedMatrix, FeatureSchema};
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    InverseDistance,
}

/// A training row reached from a query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    // Closer first; equal distances resolve to the lower training index.
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Outcome of one vote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    /// Winning vote mass over total vote mass.
    pub score: f64,
    /// Both classes drew equal mass; the label fell back to [`Label::NoClaim`].
    pub tie: bool,
}

/// Exact brute-force k-nearest-neighbour classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub train: Array2<f64>,
    pub labels: Vec<Label>,
    pub schema: FeatureSchema,
    pub k: usize,
    pub metric: DistanceMetric,
    pub weighting: Weighting,
}

// Rows of the training matrix scanned per tile, sized to stay cache resident.
const TRAIN_TILE: usize = 256;
// Queries sharing one pass over a tile.
const QUERY_BLOCK: usize = 16;

impl KnnModel {
    pub fn fit(
        train: &EncodedMatrix,
        k: usize,
        metric: DistanceMetric,
        weighting: Weighting,
    ) -> Result<Self, KnnError> {
        metric.validate()?;
        let n = train.nrows();
        if n == 0 {
            return Err(KnnError::EmptyTraining);
        }
        if k == 0 || k > n {
            return Err(KnnError::InvalidK { k, n });
        }
        if train.values.iter().any(|v| !v.is_finite()) {
            return Err(KnnError::NonFinite);
        }
        Ok(KnnModel {
            train: train.values.as_standard_layout().into_owned(),
            labels: train.labels.clone(),
            schema: train.schema.clone(),
            k,
            metric,
            weighting,
        })
    }

    pub fn dim(&self) -> usize {
        self.train.ncols()
    }

    pub fn with_k(&self, k: usize) -> Result<Self, KnnError> {
        if k == 0 || k > self.train.nrows() {
            return Err(KnnError::InvalidK { k, n: self.train.nrows() });
        }
        Ok(KnnModel { k, ..self.clone() })
    }

    fn check_dim(&self, found: usize) -> Result<(), KnnError> {
        if found != self.dim() {
            return Err(KnnError::DimensionMismatch { expected: self.dim(), found });
        }
        Ok(())
    }

    /// The `k` closest training rows to `query`, nearest first.
    pub fn find_k_nearest(&self, query: &[f64]) -> Result<Vec<Neighbor>, KnnError> {
        self.check_dim(query.len())?;
        Ok(self.nearest_unchecked(query, self.k))
    }

    fn nearest_unchecked(&self, query: &[f64], k: usize) -> Vec<Neighbor> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        for (index, row) in self.train.outer_iter().enumerate() {
            let row = row.to_slice().expect("training matrix is contiguous");
            offer(&mut heap, k, Neighbor { index, distance: self.metric.eval(query, row) });
        }
        heap.into_sorted_vec()
    }

    /// Neighbour lists for a block of queries, scanning the training matrix in
    /// tiles so each tile is reused across the block.
    fn nearest_block(&self, queries: ArrayView2<'_, f64>, k: usize) -> Vec<Vec<Neighbor>> {
        let mut heaps: Vec<BinaryHeap<Neighbor>> = (0..queries.nrows()).map(|_| BinaryHeap::with_capacity(k + 1)).collect();
        let n = self.train.nrows();
        let mut start = 0;
        while start < n {
            let end = (start + TRAIN_TILE).min(n);
            for (query, heap) in queries.outer_iter().zip(heaps.iter_mut()) {
                let query = query.to_slice().expect("query block is contiguous");
                for index in start..end {
                    let row = self.train.row(index);
                    let row = row.to_slice().expect("training matrix is contiguous");
                    offer(heap, k, Neighbor { index, distance: self.metric.eval(query, row) });
                }
            }
            start = end;
        }
        heaps.into_iter().map(BinaryHeap::into_sorted_vec).collect()
    }

    /// Neighbour lists of length `k` for every query row, optionally in parallel.
    /// Output is identical for any thread count.
    pub fn neighbors_many(
        &self,
        queries: &Array2<f64>,
        k: usize,
        threads: usize,
    ) -> Result<Vec<Vec<Neighbor>>, KnnError> {
        self.check_dim(queries.ncols())?;
        if k == 0 || k > self.train.nrows() {
            return Err(KnnError::InvalidK { k, n: self.train.nrows() });
        }
        let queries = queries.as_standard_layout();
        let blocks: Vec<ArrayView2<'_, f64>> = queries
            .axis_chunks_iter(ndarray::Axis(0), QUERY_BLOCK)
            .collect();
        let run = || -> Vec<Vec<Neighbor>> {
            blocks
                .par_iter()
                .flat_map_iter(|block| self.nearest_block(block.view(), k))
                .collect()
        };
        if threads <= 1 {
            Ok(blocks.iter().flat_map(|block| self.nearest_block(block.view(), k)).collect())
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| KnnError::ThreadPool(e.to_string()))?;
            Ok(pool.install(run))
        }
    }

    /// Votes over a neighbour list (nearest first).
    pub fn vote(&self, neighbors: &[Neighbor]) -> Prediction {
        vote(neighbors, &self.labels, self.weighting)
    }

    pub fn predict_one(&self, query: &[f64]) -> Result<Prediction, KnnError> {
        let neighbors = self.find_k_nearest(query)?;
        Ok(self.vote(&neighbors))
    }

    pub fn predict_detailed(&self, queries: &Array2<f64>, threads: usize) -> Result<Vec<Prediction>, KnnError> {
        if queries.nrows() == 0 {
            self.check_dim(queries.ncols())?;
            return Ok(Vec::new());
        }
        let lists = self.neighbors_many(queries, self.k, threads)?;
        Ok(lists.iter().map(|list| self.vote(list)).collect())
    }

    pub fn predict(&self, queries: &Array2<f64>) -> Result<Vec<Label>, KnnError> {
        self.predict_threads(queries, 1)
    }

    pub fn predict_threads(&self, queries: &Array2<f64>, threads: usize) -> Result<Vec<Label>, KnnError> {
        Ok(self
            .predict_detailed(queries, threads)?
            .into_iter()
            .map(|p| p.label)
            .collect())
    }
}

fn offer(heap: &mut BinaryHeap<Neighbor>, k: usize, candidate: Neighbor) {
    if heap.len() < k {
        heap.push(candidate);
    } else if let Some(worst) = heap.peek() {
        if candidate < *worst {
            heap.pop();
            heap.push(candidate);
        }
    }
}

/// Weighted vote. Under inverse-distance weighting, neighbours at distance
/// zero (if any) vote alone with equal weight. Equal mass resolves to
/// [`Label::NoClaim`].
pub fn vote(neighbors: &[Neighbor], labels: &[Label], weighting: Weighting) -> Prediction {
    let mut mass = [0.0f64; 2];
    match weighting {
        Weighting::Uniform => {
            for n in neighbors {
                mass[labels[n.index] as usize] += 1.0;
            }
        }
        Weighting::InverseDistance => {
            let exact: Vec<&Neighbor> = neighbors.iter().filter(|n| n.distance == 0.0).collect();
            if exact.is_empty() {
                for n in neighbors {
                    mass[labels[n.index] as usize] += n.distance.recip();
                }
            } else {
                for n in exact {
                    mass[labels[n.index] as usize] += 1.0;
                }
            }
        }
    }
    let total = mass[0] + mass[1];
    let (label, tie) = match mass[1].partial_cmp(&mass[0]) {
        Some(Ordering::Greater) => (Label::Claim, false),
        Some(Ordering::Less) => (Label::NoClaim, false),
        _ => (Label::NoClaim, true),
    };
    let score = if total > 0.0 { mass[label as usize] / total } else { 0.0 };
    Prediction { label, score, tie }
}

/// Accuracy on the training and test sets for each neighbour count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweepRow {
    pub k: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

fn accuracy(predicted: impl Iterator<Item = Label>, actual: &[Label]) -> f64 {
    let hits = predicted.zip(actual).filter(|(p, a)| p == *a).count();
    hits as f64 / actual.len() as f64
}

/// Train/test accuracy across `k_values`. Neighbour lists are computed once
/// at the largest k; smaller k use their prefixes, which are exactly the
/// smaller neighbour sets under the index tie-break.
pub fn accuracy_vs_k_sweep(
    train: &EncodedMatrix,
    test: &EncodedMatrix,
    k_values: &[usize],
    metric: DistanceMetric,
    weighting: Weighting,
    threads: usize,
) -> Result<Vec<KSweepRow>, KnnError> {
    let k_max = *k_values.iter().max().ok_or(KnnError::EmptyKValues)?;
    let model = KnnModel::fit(train, k_max, metric, weighting)?;
    if let Some(&bad) = k_values.iter().find(|&&k| k == 0) {
        return Err(KnnError::InvalidK { k: bad, n: train.nrows() });
    }
    if test.nrows() == 0 {
        return Err(KnnError::EmptyQueries);
    }
    let train_lists = model.neighbors_many(&train.values, k_max, threads)?;
    let test_lists = model.neighbors_many(&test.values, k_max, threads)?;
    Ok(k_values
        .iter()
        .map(|&k| KSweepRow {
            k,
            train_accuracy: accuracy(train_lists.iter().map(|l| model.vote(&l[..k]).label), &train.labels),
            test_accuracy: accuracy(test_lists.iter().map(|l| model.vote(&l[..k]).label), &test.labels),
        })
        .collect())
}

//! Axis-aligned regression trees fitted by greedy variance reduction; the
//! base learner of the boosting loop.

use crate::error::{Error, Result};
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Binary regression tree with constant leaf values. Samples route left when
/// `x[feature] <= threshold`. Trees are immutable once fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TreeDto", try_from = "TreeDto")]
pub struct RegressionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

/// Flat-array serialization: leaves carry feature -1 and their value; splits
/// carry child indices and a zero value.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TreeDto {
    n_features: usize,
    feature: Vec<i64>,
    threshold: Vec<f64>,
    left: Vec<u32>,
    right: Vec<u32>,
    value: Vec<f64>,
}

impl From<RegressionTree> for TreeDto {
    fn from(tree: RegressionTree) -> Self {
        let n = tree.nodes.len();
        let mut dto = TreeDto {
            n_features: tree.n_features,
            feature: Vec::with_capacity(n),
            threshold: Vec::with_capacity(n),
            left: Vec::with_capacity(n),
            right: Vec::with_capacity(n),
            value: Vec::with_capacity(n),
        };
        for node in &tree.nodes {
            match *node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    dto.feature.push(feature as i64);
                    dto.threshold.push(threshold);
                    dto.left.push(left as u32);
                    dto.right.push(right as u32);
                    dto.value.push(0.0);
                }
                Node::Leaf { value } => {
                    dto.feature.push(-1);
                    dto.threshold.push(0.0);
                    dto.left.push(0);
                    dto.right.push(0);
                    dto.value.push(value);
                }
            }
        }
        dto
    }
}

impl TryFrom<TreeDto> for RegressionTree {
    type Error = Error;

    fn try_from(dto: TreeDto) -> Result<Self> {
        let n = dto.feature.len();
        if dto.threshold.len() != n || dto.left.len() != n || dto.right.len() != n || dto.value.len() != n {
            return Err(Error::ModelFormat("tree arrays have inconsistent lengths".into()));
        }
        if n == 0 {
            return Err(Error::ModelFormat("tree has no nodes".into()));
        }
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            if dto.feature[i] < 0 {
                nodes.push(Node::Leaf { value: dto.value[i] });
            } else {
                let (left, right) = (dto.left[i] as usize, dto.right[i] as usize);
                if left >= n || right >= n || left <= i || right <= i {
                    return Err(Error::ModelFormat(format!("node {i} has invalid children")));
                }
                nodes.push(Node::Split {
                    feature: dto.feature[i] as usize,
                    threshold: dto.threshold[i],
                    left,
                    right,
                });
            }
        }
        Ok(RegressionTree {
            nodes,
            n_features: dto.n_features,
        })
    }
}

impl RegressionTree {
    /// Routes `x` to a leaf and returns its value.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                Node::Leaf { value } => return Ok(value),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    targets: &'a [f64],
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Sum of values in a canonical (sorted) order, so results do not depend on
/// the incoming sample order.
fn canonical_sum(values: &mut Vec<f64>) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.iter().sum()
}

impl Builder<'_> {
    fn leaf(&mut self, indices: &[usize]) -> usize {
        let mut vals: Vec<f64> = indices.iter().map(|&i| self.targets[i]).collect();
        let value = canonical_sum(&mut vals) / indices.len() as f64;
        self.nodes.push(Node::Leaf { value });
        self.nodes.len() - 1
    }

    fn best_split(&self, indices: &[usize]) -> Option<BestSplit> {
        let n = indices.len();
        if n < 2 * self.min_leaf || n < 2 {
            return None;
        }

        // Parent sum-of-squares, canonical order.
        let mut vals: Vec<f64> = indices.iter().map(|&i| self.targets[i]).collect();
        vals.sort_unstable_by(f64::total_cmp);
        let total: f64 = vals.iter().sum();
        let total_sq: f64 = vals.iter().map(|v| v * v).sum();
        let parent_sse = total_sq - total * total / n as f64;

        let mut best: Option<BestSplit> = None;
        let mut order: Vec<usize> = indices.to_vec();
        for feature in 0..self.x.ncols() {
            // Sorting by (value, target) makes prefix sums canonical: two rows
            // with identical keys contribute identically wherever they land.
            order.sort_unstable_by(|&a, &b| {
                self.x[[a, feature]]
                    .total_cmp(&self.x[[b, feature]])
                    .then(self.targets[a].total_cmp(&self.targets[b]))
            });

            let mut left_sum = 0.0;
            let mut left_sq = 0.0;
            for pos in 1..n {
                let prev = order[pos - 1];
                let t = self.targets[prev];
                left_sum += t;
                left_sq += t * t;

                let v_prev = self.x[[prev, feature]];
                let v_next = self.x[[order[pos], feature]];
                if v_prev == v_next {
                    continue;
                }
                if pos < self.min_leaf || n - pos < self.min_leaf {
                    continue;
                }
                let right_sum = total - left_sum;
                let right_sq = total_sq - left_sq;
                let sse_left = left_sq - left_sum * left_sum / pos as f64;
                let sse_right = right_sq - right_sum * right_sum / (n - pos) as f64;
                let gain = parent_sse - sse_left - sse_right;
                // Strict improvement wins, so the first candidate found keeps
                // ties at the lowest feature index and lowest threshold.
                if gain > best.as_ref().map_or(0.0, |b| b.gain) {
                    best = Some(BestSplit {
                        feature,
                        threshold: 0.5 * (v_prev + v_next),
                        gain,
                    });
                }
            }
        }

        // A split must beat zero impurity gain beyond float noise.
        best.filter(|b| b.gain > 1e-12 * (1.0 + parent_sse.abs()))
    }

    fn build(&mut self, indices: &[usize], depth: usize) -> usize {
        if depth == self.max_depth {
            return self.leaf(indices);
        }
        let Some(split) = self.best_split(indices) else {
            return self.leaf(indices);
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.x[[i, split.feature]] <= split.threshold);

        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 }); // placeholder
        let left = self.build(&left_idx, depth + 1);
        let right = self.build(&right_idx, depth + 1);
        self.nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        slot
    }
}

/// Fits a regression tree to `targets` by greedy best-split search over
/// variance reduction. Candidate thresholds are midpoints between consecutive
/// distinct sorted feature values; leaf values are target means. Splitting
/// stops at `max_depth`, below `2 * min_leaf` samples, or zero gain.
pub fn fit_tree(
    x: ArrayView2<'_, f64>,
    targets: &[f64],
    max_depth: usize,
    min_leaf: usize,
) -> Result<RegressionTree> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::EmptyInput("fit_tree"));
    }
    if targets.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: targets.len(),
        });
    }
    if max_depth == 0 {
        return Err(Error::Config {
            field: "max_depth",
            message: "must be >= 1".into(),
        });
    }
    if min_leaf == 0 {
        return Err(Error::Config {
            field: "min_leaf",
            message: "must be >= 1".into(),
        });
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::Validation("tree targets must be finite".into()));
    }

    let mut builder = Builder {
        x,
        targets,
        max_depth,
        min_leaf,
        nodes: Vec::new(),
    };
    let indices: Vec<usize> = (0..x.nrows()).collect();
    builder.build(&indices, 0);
    Ok(RegressionTree {
        nodes: builder.nodes,
        n_features: x.ncols(),
    })
}

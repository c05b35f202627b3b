//! Least-squares projection of a label vector onto its order tree.
//!
//! The constraint set of a mixed sample is a star centred on the second
//! original label with one extra edge from the first original label. The
//! projection visits the leaves in descending order and makes two merge
//! passes: leaves above the second label are pooled into its block, and if
//! the pooled block then rises above the first label the two blocks are
//! pooled and the pass continues against the merged block. The leaves sit in
//! a max-heap, so only the leaves that get pooled are ever put in order.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::labels::{LabelDistribution, OrderTree};
use crate::{Error, Result};

/// Largest label count accepted by [`brute_force_projection`].
pub const ORACLE_MAX_LABELS: usize = 12;

/// Blocks of labels that share one value in the projected vector.
///
/// Block ids are assigned in ascending order of each block's smallest member.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    block_of: Vec<u32>,
    block_value: Vec<f64>,
    block_size: Vec<u32>,
}

impl BlockPartition {
    fn from_groups(input: &[f64], group_of: &[usize]) -> Self {
        // group_of holds arbitrary tags; renumber by first appearance.
        const UNSEEN: u32 = u32::MAX;
        let mut renumber = vec![UNSEEN; group_of.len()];
        let mut block_of = Vec::with_capacity(group_of.len());
        let mut sums = Vec::new();
        let mut block_size = Vec::new();
        for (label, &group) in group_of.iter().enumerate() {
            if renumber[group] == UNSEEN {
                renumber[group] = sums.len() as u32;
                sums.push(0.0);
                block_size.push(0);
            }
            let block = renumber[group];
            block_of.push(block);
            sums[block as usize] += input[label];
            block_size[block as usize] += 1;
        }
        let block_value = sums
            .iter()
            .zip(&block_size)
            .map(|(&sum, &size)| sum / size as f64)
            .collect();
        Self {
            block_of,
            block_value,
            block_size,
        }
    }

    pub fn block_of(&self, label: usize) -> usize {
        self.block_of[label] as usize
    }

    pub fn value(&self, block: usize) -> f64 {
        self.block_value[block]
    }

    pub fn size(&self, block: usize) -> usize {
        self.block_size[block] as usize
    }

    pub fn block_count(&self) -> usize {
        self.block_value.len()
    }

    pub fn members(&self, block: usize) -> impl Iterator<Item = usize> + '_ {
        self.block_of
            .iter()
            .enumerate()
            .filter(move |&(_, &b)| b as usize == block)
            .map(|(label, _)| label)
    }

    /// Every label receives the value of its block.
    pub fn recover(&self) -> Vec<f64> {
        self.block_of
            .iter()
            .map(|&b| self.block_value[b as usize])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicResult {
    pub calibrated: LabelDistribution,
    pub blocks: BlockPartition,
    /// Number of block merges performed.
    pub violations_found: usize,
}

/// A leaf value ordered by `total_cmp`. Callers fold -0.0 into 0.0 first so
/// that the order agrees with `==`.
#[derive(Clone, Copy, PartialEq)]
struct LeafValue(f64);

impl Eq for LeafValue {}

impl PartialOrd for LeafValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LeafValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Running state of the pooled block.
struct Pool {
    sum: f64,
    len: usize,
    absorbed: usize,
    /// Smallest pooled leaf value and how many pooled leaves share it.
    lowest: Option<(f64, usize)>,
}

impl Pool {
    /// Pools leaves, largest first, while they exceed the running mean.
    fn absorb(&mut self, heap: &mut BinaryHeap<LeafValue>) {
        while let Some(&LeafValue(top)) = heap.peek() {
            if self.sum / (self.len as f64) >= top {
                break;
            }
            heap.pop();
            self.sum += top;
            self.len += 1;
            self.absorbed += 1;
            self.lowest = match self.lowest {
                Some((value, count)) if value == top => Some((value, count + 1)),
                _ => Some((top, 1)),
            };
        }
    }
}

/// Projects `soft` onto the order tree, minimizing squared error.
///
/// The input space is carried over to the output; the projection preserves
/// the total and the range of the input, so probability vectors stay valid.
/// Runs in `O(c + k log c)` for `k` pooled leaves.
pub fn adapted_irt(soft: &LabelDistribution, tree: &OrderTree) -> Result<IsotonicResult> {
    soft.expect_len(tree.node_count())?;
    let input = soft.values();
    let (root, second) = (tree.root(), tree.second());

    let mut heap: BinaryHeap<LeafValue> = tree
        .leaves()
        .map(|leaf| LeafValue(input[leaf] + 0.0))
        .collect();
    let mut pool = Pool {
        sum: input[second],
        len: 1,
        absorbed: 0,
        lowest: None,
    };
    pool.absorb(&mut heap);
    let root_merged = input[root] < pool.sum / pool.len as f64;
    if root_merged {
        pool.sum += input[root];
        pool.len += 1;
        pool.absorb(&mut heap);
    }
    drop(heap);
    let merges = pool.absorbed + usize::from(root_merged);

    // The pooled leaves are the largest ones, equal values going to the
    // lowest labels first. Recover them from the smallest pooled value and
    // how many copies of it were pooled.
    let (threshold, mut ties_left) = pool.lowest.unwrap_or((f64::INFINITY, 0));

    let classes = input.len();
    let block_count = classes - merges;
    let mut block_of = Vec::with_capacity(classes);
    let mut block_value = Vec::with_capacity(block_count);
    let mut block_size = Vec::with_capacity(block_count);
    let mut pooled: Option<u32> = None;
    let mut pooled_sum = 0.0;
    for (label, &value) in input.iter().enumerate() {
        let in_pool = if label == second || label == root {
            label == second || root_merged
        } else if value > threshold {
            true
        } else if value == threshold && ties_left > 0 {
            ties_left -= 1;
            true
        } else {
            false
        };
        if in_pool {
            // Summed in ascending label order, like every other block mean.
            pooled_sum += value;
            let block = *pooled.get_or_insert_with(|| {
                block_value.push(0.0);
                block_size.push(0);
                (block_value.len() - 1) as u32
            });
            block_size[block as usize] += 1;
            block_of.push(block);
        } else {
            block_of.push(block_value.len() as u32);
            // A one-member mean, `(0 + v) / 1`, which maps -0.0 to 0.0.
            block_value.push(0.0 + value);
            block_size.push(1);
        }
    }
    let pool = pooled.expect("the second label is always pooled") as usize;
    block_value[pool] = pooled_sum / block_size[pool] as f64;

    let blocks = BlockPartition {
        block_of,
        block_value,
        block_size,
    };
    let calibrated = LabelDistribution::from_parts_unchecked(blocks.recover(), soft.space());
    Ok(IsotonicResult {
        calibrated,
        blocks,
        violations_found: merges,
    })
}

/// Exhaustive projection used to check [`adapted_irt`].
///
/// Every subset of tree edges is treated as the set of active (equality)
/// constraints. Each subset fixes a partition whose least-squares solution is
/// the vector of block means; the feasible candidate with the smallest squared
/// error is the projection.
pub fn brute_force_projection(
    soft: &LabelDistribution,
    tree: &OrderTree,
) -> Result<LabelDistribution> {
    const FEASIBILITY_SLACK: f64 = 1e-12;

    soft.expect_len(tree.node_count())?;
    let classes = soft.len();
    if classes > ORACLE_MAX_LABELS {
        return Err(Error::OracleTooLarge {
            max: ORACLE_MAX_LABELS,
            actual: classes,
        });
    }
    let input = soft.values();
    let edges: Vec<(usize, usize)> = tree.edges().collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut parent = vec![0usize; classes];
    for active in 0u32..(1 << edges.len()) {
        for (k, p) in parent.iter_mut().enumerate() {
            *p = k;
        }
        for (bit, &(i, j)) in edges.iter().enumerate() {
            if active & (1 << bit) != 0 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
        let group_of: Vec<usize> = (0..classes).map(|k| find(&mut parent, k)).collect();
        let candidate = BlockPartition::from_groups(input, &group_of).recover();
        let feasible = edges
            .iter()
            .all(|&(i, j)| candidate[i] >= candidate[j] - FEASIBILITY_SLACK);
        if !feasible {
            continue;
        }
        let error: f64 = candidate
            .iter()
            .zip(input)
            .map(|(m, v)| (m - v) * (m - v))
            .sum();
        if best.as_ref().is_none_or(|(e, _)| error < *e) {
            best = Some((error, candidate));
        }
    }
    // The all-merged candidate is always feasible.
    let (_, values) = best.expect("at least one feasible partition");
    Ok(LabelDistribution::from_parts_unchecked(
        values,
        soft.space(),
    ))
}

fn find(parent: &mut [usize], mut k: usize) -> usize {
    while parent[k] != k {
        parent[k] = parent[parent[k]];
        k = parent[k];
    }
    k
}

/// Number of tree edges `(i, j)` with `soft[i] < soft[j]`.
pub fn count_violations(soft: &LabelDistribution, tree: &OrderTree) -> Result<usize> {
    soft.expect_len(tree.node_count())?;
    let v = soft.values();
    Ok(tree.edges().filter(|&(i, j)| v[i] < v[j]).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::MixedHardLabel;
    use alloc::vec;

    fn star(classes: usize) -> OrderTree {
        MixedHardLabel::new(0, 1, 0.7, classes)
            .unwrap()
            .order_tree()
    }

    fn probs(values: &[f64]) -> LabelDistribution {
        LabelDistribution::probabilities(values.to_vec()).unwrap()
    }

    fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).abs() <= tol, "{actual:?} vs {expected:?}");
        }
    }

    #[test]
    fn concordant_input_is_unchanged() {
        let soft = probs(&[0.5, 0.3, 0.1, 0.1]);
        let result = adapted_irt(&soft, &star(4)).unwrap();
        assert_eq!(result.calibrated, soft);
        assert_eq!(result.violations_found, 0);
        assert_eq!(result.blocks.block_count(), 4);
    }

    #[test]
    fn leaf_above_both_originals_pools_three_labels() {
        let soft = probs(&[0.2, 0.3, 0.5, 0.0]);
        let result = adapted_irt(&soft, &star(4)).unwrap();
        assert_close(
            result.calibrated.values(),
            &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0],
            1e-15,
        );
        // leaf 2 into the second block, then the second block into the root.
        assert_eq!(result.violations_found, 2);
        assert_eq!(result.blocks.block_count(), 2);
        assert_eq!(result.blocks.members(0).collect::<Vec<_>>(), [0, 1, 2]);
        let oracle = brute_force_projection(&soft, &star(4)).unwrap();
        assert_close(result.calibrated.values(), oracle.values(), 1e-12);
    }

    #[test]
    fn single_root_violation_averages_pair() {
        let soft = probs(&[0.3, 0.4, 0.2, 0.1]);
        let result = adapted_irt(&soft, &star(4)).unwrap();
        assert_close(result.calibrated.values(), &[0.35, 0.35, 0.2, 0.1], 1e-15);
        assert_eq!(result.violations_found, 1);
    }

    #[test]
    fn oracle_examples() {
        let tree = star(4);
        let cases: [(&[f64], &[f64]); 3] = [
            (&[0.5, 0.3, 0.1, 0.1], &[0.5, 0.3, 0.1, 0.1]),
            (&[0.3, 0.4, 0.2, 0.1], &[0.35, 0.35, 0.2, 0.1]),
            (&[0.0, 0.0, 0.5, 0.5], &[0.25, 0.25, 0.25, 0.25]),
        ];
        for (input, expected) in cases {
            let projected = brute_force_projection(&probs(input), &tree).unwrap();
            assert_close(projected.values(), expected, 1e-15);
        }
    }

    #[test]
    fn full_merge_pulls_in_leaves_after_root_merge() {
        // The second pass must keep absorbing leaves against the merged block.
        let soft = probs(&[0.0, 0.0, 0.5, 0.5]);
        let result = adapted_irt(&soft, &star(4)).unwrap();
        assert_close(result.calibrated.values(), &[0.25; 4], 1e-15);
        assert_eq!(result.blocks.block_count(), 1);
        assert_eq!(result.violations_found, 3);
    }

    #[test]
    fn relabeled_tree() {
        let h = MixedHardLabel::new(3, 1, 0.6, 5).unwrap();
        let soft = probs(&[0.3, 0.1, 0.1, 0.2, 0.3]);
        let tree = h.order_tree();
        let result = adapted_irt(&soft, &tree).unwrap();
        let oracle = brute_force_projection(&soft, &tree).unwrap();
        assert_close(result.calibrated.values(), oracle.values(), 1e-12);
        assert_eq!(count_violations(&result.calibrated, &tree).unwrap(), 0);
    }

    #[test]
    fn two_labels() {
        let h = MixedHardLabel::new(0, 1, 0.9, 2).unwrap();
        let result = adapted_irt(&probs(&[0.25, 0.75]), &h.order_tree()).unwrap();
        assert_eq!(result.calibrated.values(), &[0.5, 0.5]);
    }

    #[test]
    fn tied_leaves_sort_by_index() {
        let soft = probs(&[0.1, 0.2, 0.35, 0.35]);
        let result = adapted_irt(&soft, &star(4)).unwrap();
        assert_close(result.calibrated.values(), &[0.25; 4], 1e-15);
    }

    #[test]
    fn logit_space_is_preserved() {
        let soft = LabelDistribution::logits(vec![1.0, 2.0, -1.0]).unwrap();
        let result = adapted_irt(&soft, &star(3)).unwrap();
        assert_eq!(result.calibrated.space(), crate::Space::Logit);
        assert_eq!(result.calibrated.values(), &[1.5, 1.5, -1.0]);
    }

    #[test]
    fn counts_violations() {
        let tree = star(4);
        assert_eq!(
            count_violations(&probs(&[0.5, 0.3, 0.1, 0.1]), &tree),
            Ok(0)
        );
        assert_eq!(
            count_violations(&probs(&[0.1, 0.2, 0.6, 0.1]), &tree),
            Ok(2)
        );
        assert_eq!(
            count_violations(&probs(&[0.3, 0.4, 0.2, 0.1]), &tree),
            Ok(1)
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let soft = probs(&[0.5, 0.5]);
        let expected = Error::DimensionMismatch {
            expected: 4,
            actual: 2,
        };
        assert_eq!(adapted_irt(&soft, &star(4)), Err(expected.clone()));
        assert_eq!(count_violations(&soft, &star(4)), Err(expected.clone()));
        assert_eq!(brute_force_projection(&soft, &star(4)), Err(expected));
    }

    #[test]
    fn oracle_refuses_large_inputs() {
        let soft = probs(&[1.0 / 13.0; 13]);
        assert_eq!(
            brute_force_projection(&soft, &star(13)),
            Err(Error::OracleTooLarge {
                max: 12,
                actual: 13
            })
        );
        let soft = probs(&[1.0 / 12.0; 12]);
        assert!(brute_force_projection(&soft, &star(12)).is_ok());
    }
}

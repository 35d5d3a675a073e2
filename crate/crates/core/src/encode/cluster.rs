//! Recursive partitioning of missing patterns.
//!
//! A cluster is split on the missingness of one feature when both children
//! are large enough, every group's share of each child lies in `[beta, alpha]`,
//! and the two children's minimized logistic losses sum to less than the
//! parent's. Clusters are processed first-in first-out.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::features::{encode_zero, EncodedDataset};
use crate::data::{Dataset, GroupId, MissingMask};
use crate::error::{Error, Result};
use crate::fairclf::linear::{minimized_sum_loss, sum_loss};
use crate::fairclf::OptimizerSettings;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    pub k_min: usize,
    /// Upper bound on any group's fraction in a child.
    pub alpha: f64,
    /// Lower bound on any group's fraction in a child.
    pub beta: f64,
    /// L2 weight in the per-cluster loss `min_w sum loss + l2/2 |w|^2`.
    pub l2: f64,
    pub optimizer: OptimizerSettings,
}

impl ClusterConfig {
    pub fn new(k_min: usize, alpha: f64, beta: f64) -> Self {
        Self { k_min, alpha, beta, l2: 1e-4, optimizer: OptimizerSettings::default() }
    }

    fn validate(&self, n_groups: usize) -> Result<()> {
        let share = 1.0 / n_groups.max(1) as f64;
        if self.k_min == 0 {
            return Err(Error::Parameter("k_min must be at least 1".into()));
        }
        if !(0.0 <= self.beta && self.beta <= share + 1e-12 && share <= self.alpha + 1e-12 && self.alpha <= 1.0) {
            return Err(Error::Parameter(format!(
                "need 0 <= beta <= 1/|S| <= alpha <= 1, got beta={} alpha={} with |S|={n_groups}",
                self.beta, self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    /// Rows with `m[feature] = 0` go to `observed`, the rest to `missing`.
    Split { feature: usize, observed: usize, missing: usize },
    Leaf { cluster: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafRecord {
    pub node: usize,
    pub size: usize,
    pub group_fractions: Vec<(GroupId, f64)>,
    pub loss: f64,
    /// Training row indices.
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitRecord {
    pub node: usize,
    pub feature: usize,
    pub parent_loss: f64,
    pub children_loss: f64,
    /// Sum of losses over all current clusters before and after the split.
    pub total_before: f64,
    pub total_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPartition {
    pub dimension: usize,
    pub nodes: Vec<Node>,
    /// Indexed by cluster id. Empty when parsed from text.
    pub leaves: Vec<LeafRecord>,
    pub splits: Vec<SplitRecord>,
}

impl ClusterPartition {
    pub fn n_clusters(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("partition dimension={} clusters={}\n", self.dimension, self.n_clusters());
        for (id, n) in self.nodes.iter().enumerate() {
            let _ = match n {
                Node::Split { feature, observed, missing } => writeln!(s, "{id} split {feature} {observed} {missing}"),
                Node::Leaf { cluster } => writeln!(s, "{id} leaf {cluster}"),
            };
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |row: usize, m: &str| Error::Parse { row, message: m.to_string() };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty partition"))?;
        let dimension = header
            .split_whitespace()
            .find_map(|t| t.strip_prefix("dimension="))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(1, "missing dimension"))?;
        let mut nodes = Vec::new();
        for (i, line) in lines {
            let t: Vec<&str> = line.split_whitespace().collect();
            let num = |k: usize| t.get(k).and_then(|v| v.parse::<usize>().ok()).ok_or_else(|| bad(i + 1, line));
            if num(0)? != nodes.len() {
                return Err(bad(i + 1, "node ids must be consecutive"));
            }
            nodes.push(match t.get(1) {
                Some(&"split") => Node::Split { feature: num(2)?, observed: num(3)?, missing: num(4)? },
                Some(&"leaf") => Node::Leaf { cluster: num(2)? },
                _ => return Err(bad(i + 1, line)),
            });
        }
        let part = Self { dimension, nodes, leaves: Vec::new(), splits: Vec::new() };
        part.check_tree()?;
        Ok(part)
    }

    fn check_tree(&self) -> Result<()> {
        let n = self.nodes.len();
        let q = self.n_clusters();
        let mut seen = vec![false; q];
        for node in &self.nodes {
            match *node {
                Node::Split { feature, observed, missing } => {
                    if feature >= self.dimension || observed >= n || missing >= n {
                        return Err(Error::Parameter("split node out of range".into()));
                    }
                }
                Node::Leaf { cluster } => match seen.get_mut(cluster) {
                    Some(s) if !*s => *s = true,
                    _ => return Err(Error::Parameter(format!("bad leaf cluster id {cluster}"))),
                },
            }
        }
        if n == 0 {
            return Err(Error::Parameter("partition has no nodes".into()));
        }
        Ok(())
    }
}

/// Routes a missing pattern to its cluster id. Every pattern reaches a leaf.
pub fn assign_cluster(part: &ClusterPartition, mask: &MissingMask) -> usize {
    let mut id = 0;
    loop {
        match part.nodes[id] {
            Node::Leaf { cluster } => return cluster,
            Node::Split { feature, observed, missing } => {
                id = if mask.is_missing(feature) { missing } else { observed };
            }
        }
    }
}

struct Builder<'a> {
    enc: EncodedDataset,
    masks: Vec<MissingMask>,
    groups: &'a [GroupId],
    validation: Option<(EncodedDataset, Vec<MissingMask>)>,
    cfg: ClusterConfig,
}

struct Pending {
    node: usize,
    rows: Vec<usize>,
    val_rows: Vec<usize>,
    loss: f64,
}

impl Builder<'_> {
    /// Minimized training loss, or the held-out loss of the training fit.
    fn loss(&self, rows: &[usize], val_rows: &[usize]) -> f64 {
        let sub = self.enc.select(rows);
        let (value, model) = minimized_sum_loss(&sub, self.cfg.l2, &self.cfg.optimizer);
        match &self.validation {
            None => value,
            Some((val, _)) => sum_loss(&model, &val.select(val_rows)),
        }
    }

    fn fractions(&self, rows: &[usize]) -> Vec<(GroupId, f64)> {
        let n = rows.len().max(1) as f64;
        self.groups
            .iter()
            .map(|&g| (g, rows.iter().filter(|&&i| self.enc.groups[i] == g).count() as f64 / n))
            .collect()
    }

    fn admissible(&self, rows: &[usize]) -> bool {
        rows.len() >= self.cfg.k_min
            && self.fractions(rows).iter().all(|&(_, f)| f >= self.cfg.beta - 1e-12 && f <= self.cfg.alpha + 1e-12)
    }

    fn split_rows(masks: &[MissingMask], rows: &[usize], j: usize) -> (Vec<usize>, Vec<usize>) {
        rows.iter().partition(|&&i| !masks[i].is_missing(j))
    }

    fn val_split(&self, val_rows: &[usize], j: usize) -> (Vec<usize>, Vec<usize>) {
        match &self.validation {
            Some((_, vm)) => Self::split_rows(vm, val_rows, j),
            None => (Vec::new(), Vec::new()),
        }
    }

    fn build(self) -> ClusterPartition {
        let d = self.enc.n_cols();
        let all: Vec<usize> = (0..self.enc.n_rows()).collect();
        let all_val: Vec<usize> = self.validation.as_ref().map_or(Vec::new(), |(v, _)| (0..v.n_rows()).collect());
        let root_loss = self.loss(&all, &all_val);
        let mut nodes = vec![Node::Leaf { cluster: usize::MAX }];
        let mut leaves = Vec::new();
        let mut splits = Vec::new();
        let mut total = root_loss;
        let mut queue = VecDeque::from([Pending { node: 0, rows: all, val_rows: all_val, loss: root_loss }]);

        while let Some(p) = queue.pop_front() {
            let candidates: Vec<usize> = (0..d)
                .filter(|&j| {
                    let (a, b) = Self::split_rows(&self.masks, &p.rows, j);
                    self.admissible(&a) && self.admissible(&b)
                })
                .collect();
            let evaluated: Vec<(usize, f64, f64, f64)> = candidates
                .par_iter()
                .map(|&j| {
                    let (a, b) = Self::split_rows(&self.masks, &p.rows, j);
                    let (va, vb) = self.val_split(&p.val_rows, j);
                    let (la, lb) = (self.loss(&a, &va), self.loss(&b, &vb));
                    (j, la + lb, la, lb)
                })
                .collect();
            let best = evaluated.iter().fold(None::<&(usize, f64, f64, f64)>, |best, c| match best {
                Some(b) if b.1 <= c.1 => Some(b),
                _ => Some(c),
            });
            match best {
                Some(&(j, l, la, lb)) if l < p.loss => {
                    let (a, b) = Self::split_rows(&self.masks, &p.rows, j);
                    let (va, vb) = self.val_split(&p.val_rows, j);
                    let (ia, ib) = (nodes.len(), nodes.len() + 1);
                    nodes.push(Node::Leaf { cluster: usize::MAX });
                    nodes.push(Node::Leaf { cluster: usize::MAX });
                    nodes[p.node] = Node::Split { feature: j, observed: ia, missing: ib };
                    let before = total;
                    total = total - p.loss + l;
                    log::debug!("split node {} on feature {j}: loss {:.6} -> {:.6}", p.node, p.loss, l);
                    splits.push(SplitRecord {
                        node: p.node,
                        feature: j,
                        parent_loss: p.loss,
                        children_loss: l,
                        total_before: before,
                        total_after: total,
                    });
                    queue.push_back(Pending { node: ia, rows: a, val_rows: va, loss: la });
                    queue.push_back(Pending { node: ib, rows: b, val_rows: vb, loss: lb });
                }
                _ => {
                    nodes[p.node] = Node::Leaf { cluster: leaves.len() };
                    leaves.push(LeafRecord {
                        node: p.node,
                        size: p.rows.len(),
                        group_fractions: self.fractions(&p.rows),
                        loss: p.loss,
                        rows: p.rows,
                    });
                }
            }
        }
        ClusterPartition { dimension: d, nodes, leaves, splits }
    }
}

/// Builds the partition, scoring clusters by their minimized training loss.
pub fn cluster_missing_patterns(train: &Dataset, cfg: &ClusterConfig) -> Result<ClusterPartition> {
    cluster_impl(train, None, cfg)
}

/// As [`cluster_missing_patterns`], but a cluster's loss is the held-out
/// loss on `validation` rows routed to it, of the model fitted on `train`.
pub fn cluster_missing_patterns_validated(train: &Dataset, validation: &Dataset, cfg: &ClusterConfig) -> Result<ClusterPartition> {
    if validation.dimension() != train.dimension() {
        return Err(Error::Dimension { expected: train.dimension(), found: validation.dimension() });
    }
    cluster_impl(train, Some(validation), cfg)
}

fn cluster_impl(train: &Dataset, validation: Option<&Dataset>, cfg: &ClusterConfig) -> Result<ClusterPartition> {
    if train.is_empty() {
        return Err(Error::EmptyData);
    }
    cfg.validate(train.group_set().len())?;
    let enc = encode_zero(train);
    enc.check_finite()?;
    let builder = Builder {
        enc,
        masks: train.masks(),
        groups: train.group_set(),
        validation: validation.map(|v| (encode_zero(v), v.masks())),
        cfg: *cfg,
    };
    Ok(builder.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Sample;
    use crate::missingness::gen_synthetic;

    fn tiny() -> Dataset {
        let samples = (0..40)
            .map(|i| {
                let miss = i % 2 == 0;
                let y = if miss { u8::from(i % 4 == 0) } else { u8::from(i % 3 == 0) };
                let x = f64::from(i % 7) - 3.0;
                Sample::new(vec![Some(x), if miss { None } else { Some(-x) }], (i % 5 % 2) as u32, y)
            })
            .collect();
        Dataset::new(vec!["a".into(), "b".into()], samples).unwrap()
    }

    #[test]
    fn synthetic_splits_on_second_feature() {
        let ds = gen_synthetic(0);
        let part = cluster_missing_patterns(&ds, &ClusterConfig::new(1, 1.0, 0.0)).unwrap();
        assert_eq!(part.n_clusters(), 2);
        assert!(matches!(part.nodes[0], Node::Split { feature: 1, .. }));
    }

    #[test]
    fn complete_data_is_one_cluster() {
        let samples = (0..20).map(|i| Sample::new(vec![Some(f64::from(i))], (i % 2) as u32, (i / 10) as u8)).collect();
        let ds = Dataset::new(vec!["a".into()], samples).unwrap();
        let part = cluster_missing_patterns(&ds, &ClusterConfig::new(1, 1.0, 0.0)).unwrap();
        assert_eq!(part.n_clusters(), 1);
        assert_eq!(assign_cluster(&part, &MissingMask(vec![true])), 0);
    }

    #[test]
    fn representation_bound_excludes_skewed_split() {
        // The missing rows are 95% group 0.
        let samples = (0..100)
            .map(|i| {
                let miss = i < 40;
                let g = if miss { u32::from(i >= 38) } else { u32::from(i % 2 == 0) };
                let y = u8::from(miss) ^ u8::from(i % 9 == 0);
                Sample::new(vec![Some(1.0), if miss { None } else { Some(2.0) }], g, y)
            })
            .collect();
        let ds = Dataset::new(vec!["a".into(), "b".into()], samples).unwrap();
        assert_eq!(cluster_missing_patterns(&ds, &ClusterConfig::new(1, 1.0, 0.0)).unwrap().n_clusters(), 2);
        assert_eq!(cluster_missing_patterns(&ds, &ClusterConfig::new(1, 0.6, 0.0)).unwrap().n_clusters(), 1);
    }

    #[test]
    fn invalid_bounds_rejected() {
        assert!(cluster_missing_patterns(&tiny(), &ClusterConfig::new(1, 0.4, 0.0)).is_err());
        assert!(cluster_missing_patterns(&tiny(), &ClusterConfig::new(1, 1.0, 0.6)).is_err());
        assert!(cluster_missing_patterns(&tiny(), &ClusterConfig::new(0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn leaves_respect_constraints_and_losses_drop() {
        let cfg = ClusterConfig::new(5, 0.8, 0.2);
        let part = cluster_missing_patterns(&tiny(), &cfg).unwrap();
        for s in &part.splits {
            assert!(s.total_after < s.total_before);
        }
        if part.n_clusters() > 1 {
            for leaf in &part.leaves {
                assert!(leaf.size >= cfg.k_min);
                assert!(leaf.group_fractions.iter().all(|&(_, f)| (0.2..=0.8).contains(&f)));
            }
        }
    }

    #[test]
    fn text_round_trip_and_routing() {
        let part = cluster_missing_patterns(&gen_synthetic(1), &ClusterConfig::new(1, 1.0, 0.0)).unwrap();
        let back = ClusterPartition::from_text(&part.to_text()).unwrap();
        assert_eq!(back.nodes, part.nodes);
        let observed = assign_cluster(&back, &MissingMask(vec![false, false]));
        let missing = assign_cluster(&back, &MissingMask(vec![false, true]));
        assert_ne!(observed, missing);
        assert!(assign_cluster(&back, &MissingMask(vec![true, true])) < back.n_clusters());
    }

    #[test]
    fn validated_mode_runs() {
        let ds = gen_synthetic(2);
        let (tr, va) = crate::data::split_train_test(&ds, 0.2, 0).unwrap();
        let part = cluster_missing_patterns_validated(&tr, &va, &ClusterConfig::new(1, 1.0, 0.0)).unwrap();
        assert_eq!(part.n_clusters(), 2);
    }
}

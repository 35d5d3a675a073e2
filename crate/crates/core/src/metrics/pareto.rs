/// One (accuracy, disparity) outcome with the hyperparameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint {
    pub accuracy: f64,
    pub disparity: f64,
    pub params: Vec<(String, String)>,
}

impl TradeoffPoint {
    pub fn new(accuracy: f64, disparity: f64) -> Self {
        Self { accuracy, disparity, params: Vec::new() }
    }

    /// Higher-or-equal accuracy and lower-or-equal disparity, one strictly.
    pub fn dominates(&self, other: &TradeoffPoint) -> bool {
        self.accuracy >= other.accuracy
            && self.disparity <= other.disparity
            && (self.accuracy > other.accuracy || self.disparity < other.disparity)
    }
}

/// Indices of the non-dominated points, sorted by accuracy ascending. Points
/// with identical coordinates are reported once (first occurrence).
pub fn pareto_indices(points: &[TradeoffPoint]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    // Accuracy descending, disparity ascending: a point can only be dominated
    // by something earlier in this order.
    order.sort_by(|&a, &b| {
        points[b]
            .accuracy
            .total_cmp(&points[a].accuracy)
            .then(points[a].disparity.total_cmp(&points[b].disparity))
            .then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = Vec::new();
    let mut best_disparity = f64::INFINITY;
    let mut last: Option<usize> = None;
    for i in order {
        let p = &points[i];
        if let Some(l) = last {
            if points[l].accuracy == p.accuracy && points[l].disparity == p.disparity {
                continue;
            }
        }
        if p.disparity < best_disparity {
            best_disparity = p.disparity;
            kept.push(i);
            last = Some(i);
        }
    }
    kept.reverse();
    kept
}

pub fn pareto_frontier(points: &[TradeoffPoint]) -> Vec<TradeoffPoint> {
    pareto_indices(points).into_iter().map(|i| points[i].clone()).collect()
}

//! Plug-in entropies and mutual information, all in bits.
//!
//! Sums are taken over sorted terms so that any two joint distributions that
//! are relabelings of each other give bit-identical results.

use std::collections::BTreeMap;

use crate::data::Dataset;

fn xlog2x_terms_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// `g(a) = -a log2 a - (1 - a) log2 (1 - a)`, with `g(0) = g(1) = 0`.
pub fn binary_entropy(a: f64) -> f64 {
    let h = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    h(a) + h(1.0 - a)
}

/// Shannon entropy of a probability vector.
pub fn entropy(probs: impl IntoIterator<Item = f64>) -> f64 {
    xlog2x_terms_sum(probs.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.log2()).collect())
}

fn marginals<A: Ord + Clone, B: Ord + Clone>(joint: &BTreeMap<(A, B), f64>) -> (BTreeMap<A, f64>, BTreeMap<B, f64>) {
    let mut pa = BTreeMap::new();
    let mut pb = BTreeMap::new();
    for ((a, b), &p) in joint {
        *pa.entry(a.clone()).or_insert(0.0) += p;
        *pb.entry(b.clone()).or_insert(0.0) += p;
    }
    (pa, pb)
}

/// `I(A; B)` of a joint probability table.
pub fn mutual_information<A: Ord + Clone, B: Ord + Clone>(joint: &BTreeMap<(A, B), f64>) -> f64 {
    let (pa, pb) = marginals(joint);
    let terms = joint
        .iter()
        .filter(|(_, &p)| p > 0.0)
        .map(|((a, b), &p)| p * (p / (pa[a] * pb[b])).log2())
        .collect();
    xlog2x_terms_sum(terms).max(0.0)
}

/// `H(Y | T)` of a joint table keyed by `(y, t)`.
pub fn conditional_entropy<Y: Ord + Clone, T: Ord + Clone>(joint: &BTreeMap<(Y, T), f64>) -> f64 {
    let (_, pt) = marginals(joint);
    let terms = joint.iter().filter(|(_, &p)| p > 0.0).map(|((_, t), &p)| -p * (p / pt[t]).log2()).collect();
    xlog2x_terms_sum(terms).max(0.0)
}

fn counts<A: Ord + Clone, B: Ord + Clone>(pairs: impl IntoIterator<Item = (A, B)>) -> (BTreeMap<(A, B), u64>, u64) {
    let mut c = BTreeMap::new();
    let mut n = 0;
    for pair in pairs {
        *c.entry(pair).or_insert(0) += 1;
        n += 1;
    }
    (c, n)
}

fn count_marginals<A: Ord + Clone, B: Ord + Clone>(c: &BTreeMap<(A, B), u64>) -> (BTreeMap<A, u64>, BTreeMap<B, u64>) {
    let mut ca = BTreeMap::new();
    let mut cb = BTreeMap::new();
    for ((a, b), &k) in c {
        *ca.entry(a.clone()).or_insert(0) += k;
        *cb.entry(b.clone()).or_insert(0) += k;
    }
    (ca, cb)
}

/// Plug-in `I(A; B)` from paired observations. Works on integer counts, so
/// the result only depends on the multiset of `(c_ab, c_a, c_b)` triples.
pub fn plugin_mutual_information<A: Ord + Clone, B: Ord + Clone>(pairs: impl IntoIterator<Item = (A, B)>) -> f64 {
    let (c, n) = counts(pairs);
    if n == 0 {
        return 0.0;
    }
    let (ca, cb) = count_marginals(&c);
    let nf = n as f64;
    let terms = c
        .iter()
        .map(|((a, b), &k)| {
            let k = k as f64;
            (k / nf) * ((k * nf) / (ca[a] as f64 * cb[b] as f64)).log2()
        })
        .collect();
    xlog2x_terms_sum(terms).max(0.0)
}

/// Plug-in `H(Y | T)` from paired observations `(y, t)`.
pub fn plugin_conditional_entropy<Y: Ord + Clone, T: Ord + Clone>(pairs: impl IntoIterator<Item = (Y, T)>) -> f64 {
    let (c, n) = counts(pairs);
    if n == 0 {
        return 0.0;
    }
    let (_, ct) = count_marginals(&c);
    let nf = n as f64;
    let terms = c.iter().map(|((_, t), &k)| -(k as f64 / nf) * (k as f64 / ct[t] as f64).log2()).collect();
    xlog2x_terms_sum(terms).max(0.0)
}

/// Plug-in mutual information between the full missing pattern and the label.
pub fn mutual_info_my(ds: &Dataset) -> f64 {
    plugin_mutual_information(ds.samples().iter().map(|s| (s.mask(), s.label)))
}

/// Plug-in `H(Y | M)`; convenience for reports.
pub fn conditional_entropy_y_given_m(ds: &Dataset) -> f64 {
    plugin_conditional_entropy(ds.samples().iter().map(|s| (s.label, s.mask())))
}

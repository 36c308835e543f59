//! Global and local assortativity over labeled interaction networks.
//!
//! The local score of a node compares the mixing inside its neighborhood,
//! weighted by a personalized PageRank distribution, to the label mixing
//! expected from the global marginals:
//!
//! ```text
//! r(l) = ( sum_g e_gg(l) - sum_g a_g b_g ) / Qmax ,   Qmax = 1 - sum_g a_g b_g
//! e_gh(l) = sum_{i: y_i = g} sum_{j: y_j = h} w(i; l) A_ij / k_i
//! ```
//!
//! Metadata may be incomplete: sums run over labeled endpoints only, the
//! labeled mass z(l) seen from each node is recorded before `e` is
//! renormalized, and z(l) weights the node's histogram contribution.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{ClusterAssignment, Label};
use crate::error::{Error, Result};
use crate::graph::InteractionGraph;
use crate::record::UserId;

pub const GROUPS: usize = 3;

/// Edge-mass proportions between the known label groups, with marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    /// `e[g][h]`: proportion of labeled edge mass from group g to group h.
    pub e: [[f64; GROUPS]; GROUPS],
    /// Row marginals (outgoing share per group).
    pub a: [f64; GROUPS],
    /// Column marginals (incoming share per group).
    pub b: [f64; GROUPS],
}

impl MixingMatrix {
    pub fn trace(&self) -> f64 {
        (0..GROUPS).map(|g| self.e[g][g]).sum()
    }

    pub fn sum_ab(&self) -> f64 {
        (0..GROUPS).map(|g| self.a[g] * self.b[g]).sum()
    }

    /// Maximum modularity `1 - sum_g a_g b_g`.
    pub fn q_max(&self) -> f64 {
        1.0 - self.sum_ab()
    }

    fn from_mass(mass: [[f64; GROUPS]; GROUPS]) -> Result<Self> {
        let total: f64 = mass.iter().flatten().sum();
        if total <= 0.0 {
            return Err(Error::NoLabeledEdges);
        }
        let mut e = mass;
        for row in &mut e {
            for cell in row {
                *cell /= total;
            }
        }
        let mut a = [0.0; GROUPS];
        let mut b = [0.0; GROUPS];
        for g in 0..GROUPS {
            for h in 0..GROUPS {
                a[g] += e[g][h];
                b[g] += e[h][g];
            }
        }
        Ok(MixingMatrix { e, a, b })
    }
}

fn group_of(assignment: &ClusterAssignment, user: &UserId) -> Option<usize> {
    assignment.label_of(user).group_index()
}

/// Global mixing matrix from uniformly weighted labeled edges: every unit of
/// edge weight with both endpoints labeled counts once.
pub fn global_mixing(
    graph: &InteractionGraph,
    assignment: &ClusterAssignment,
) -> Result<MixingMatrix> {
    let groups: Vec<Option<usize>> = graph
        .user_ids()
        .map(|u| group_of(assignment, u))
        .collect();
    let mut mass = [[0.0; GROUPS]; GROUPS];
    for (i, j, w) in graph.edges() {
        if let (Some(g), Some(h)) = (groups[i], groups[j]) {
            mass[g][h] += w as f64;
        }
    }
    MixingMatrix::from_mass(mass)
}

/// Newman's assortativity coefficient over the labeled directed edges.
///
/// When every labeled edge lies inside one single group the normalizer
/// vanishes; that degenerate case is defined as perfect assortativity.
pub fn global_assortativity(
    graph: &InteractionGraph,
    assignment: &ClusterAssignment,
) -> Result<f64> {
    let mixing = global_mixing(graph, assignment)?;
    let q_max = mixing.q_max();
    if q_max <= f64::EPSILON {
        log::warn!("single labeled group: assortativity defined as 1");
        return Ok(1.0);
    }
    Ok((mixing.trace() - mixing.sum_ab()) / q_max)
}

/// Which adjacency the PageRank walk uses. The neighborhood definition
/// defaults to the undirected projection; mixing itself always respects the
/// reply direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkDirection {
    Undirected,
    Directed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PprParams {
    /// Damping factor, in (0, 1).
    pub alpha: f64,
    /// L1 residual convergence threshold.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub direction: WalkDirection,
}

impl Default for PprParams {
    fn default() -> Self {
        PprParams {
            alpha: 0.85,
            tolerance: 1e-10,
            max_iterations: 10_000,
            direction: WalkDirection::Undirected,
        }
    }
}

impl PprParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter("alpha must be in (0, 1)".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be > 0".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Row-stochastic transition structure, precomputed once and shared by all
/// per-node PageRank runs. Rows of dangling nodes are empty; their walk mass
/// teleports back to the focal node.
pub struct WalkMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl WalkMatrix {
    pub fn new(graph: &InteractionGraph, direction: WalkDirection) -> Self {
        let n = graph.node_count();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let nbrs: Vec<(usize, u64)> = match direction {
                WalkDirection::Undirected => graph.undirected_neighbors(i).into_iter().collect(),
                WalkDirection::Directed => graph.out_edges(i).collect(),
            };
            let total: u64 = nbrs.iter().map(|&(_, w)| w).sum();
            if total == 0 {
                rows.push(Vec::new());
            } else {
                rows.push(
                    nbrs.into_iter()
                        .map(|(j, w)| (j, w as f64 / total as f64))
                        .collect(),
                );
            }
        }
        WalkMatrix { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Personalized PageRank by power iteration: solves
/// `w = alpha * w * P + (1 - alpha) * delta_focal` to the requested L1
/// residual. Returns the weight per node index; the weights sum to 1.
pub fn ppr(walk: &WalkMatrix, focal: usize, params: &PprParams) -> Result<Vec<f64>> {
    params.validate()?;
    let n = walk.rows.len();
    if focal >= n {
        return Err(Error::InvalidParameter(format!(
            "focal index {focal} out of range ({n} nodes)"
        )));
    }
    let alpha = params.alpha;
    let mut w = vec![0.0; n];
    w[focal] = 1.0;
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..params.max_iterations {
        next.iter_mut().for_each(|x| *x = 0.0);
        let mut dangling = 0.0;
        for i in 0..n {
            let wi = w[i];
            if wi == 0.0 {
                continue;
            }
            if walk.rows[i].is_empty() {
                dangling += wi;
                continue;
            }
            for &(j, p) in &walk.rows[i] {
                next[j] += alpha * wi * p;
            }
        }
        next[focal] += (1.0 - alpha) + alpha * dangling;
        residual = w.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut w, &mut next);
        if residual < params.tolerance {
            return Ok(w);
        }
    }
    Err(Error::Convergence {
        iterations: params.max_iterations,
        residual,
    })
}

/// Convenience wrapper building the walk matrix for one focal node.
pub fn personalized_pagerank(
    graph: &InteractionGraph,
    focal: usize,
    params: &PprParams,
) -> Result<Vec<f64>> {
    let walk = WalkMatrix::new(graph, params.direction);
    ppr(&walk, focal, params)
}

/// Local mixing of one neighborhood: the renormalized matrix plus the
/// labeled mass `z` seen before renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMixing {
    pub e: [[f64; GROUPS]; GROUPS],
    pub z: f64,
}

/// Evaluates `e_gh(l)` for a given neighborhood weight vector. The directed
/// adjacency with out-degree normalization is used; sums are restricted to
/// labeled endpoints. Errors when no labeled edge mass is reachable.
pub fn local_mixing(
    graph: &InteractionGraph,
    assignment: &ClusterAssignment,
    w: &[f64],
) -> Result<LocalMixing> {
    let groups: Vec<Option<usize>> = graph
        .user_ids()
        .map(|u| group_of(assignment, u))
        .collect();
    local_mixing_with_groups(graph, &groups, w)
}

fn local_mixing_with_groups(
    graph: &InteractionGraph,
    groups: &[Option<usize>],
    w: &[f64],
) -> Result<LocalMixing> {
    let mut mass = [[0.0; GROUPS]; GROUPS];
    for i in 0..graph.node_count() {
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        let Some(g) = groups[i] else { continue };
        let k = graph.weighted_out_degree(i);
        if k == 0 {
            continue; // dangling nodes contribute no edge mass
        }
        let k = k as f64;
        for (j, wt) in graph.out_edges(i) {
            if let Some(h) = groups[j] {
                mass[g][h] += wi * wt as f64 / k;
            }
        }
    }
    let z: f64 = mass.iter().flatten().sum();
    if z <= 0.0 {
        return Err(Error::NoLabeledNeighborhood);
    }
    let mut e = mass;
    for row in &mut e {
        for cell in row {
            *cell /= z;
        }
    }
    Ok(LocalMixing { e, z })
}

/// Local assortativity of one node: `(r(l), z_l)`.
pub fn local_assortativity(
    graph: &InteractionGraph,
    assignment: &ClusterAssignment,
    focal: usize,
    params: &PprParams,
) -> Result<(f64, f64)> {
    let global = global_mixing(graph, assignment)?;
    let w = personalized_pagerank(graph, focal, params)?;
    let local = local_mixing(graph, assignment, &w)?;
    let q_max = global.q_max();
    if q_max <= f64::EPSILON {
        log::warn!("single labeled group: local assortativity defined as 1");
        return Ok((1.0, local.z));
    }
    let trace: f64 = (0..GROUPS).map(|g| local.e[g][g]).sum();
    Ok(((trace - global.sum_ab()) / q_max, local.z))
}

/// Per-node assortativity result.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEntry {
    pub user: UserId,
    pub label: Label,
    /// `None` when no labeled edge mass was reachable (flagged node).
    pub r_local: Option<f64>,
    pub z_weight: f64,
}

/// The full per-node profile of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct AssortativityProfile {
    pub entries: Vec<ProfileEntry>,
    pub global_r: f64,
    pub q_max: f64,
    pub params: PprParams,
}

/// Computes r(l) and z_l for every node of the graph. Per-node jobs run in
/// parallel over the immutable graph and are merged in node order, so the
/// result is independent of the worker count.
pub fn compute_profiles(
    graph: &InteractionGraph,
    assignment: &ClusterAssignment,
    params: &PprParams,
) -> Result<AssortativityProfile> {
    params.validate()?;
    let global = global_mixing(graph, assignment)?;
    let q_max = global.q_max();
    let sum_ab = global.sum_ab();
    let global_r = if q_max <= f64::EPSILON {
        1.0
    } else {
        (global.trace() - sum_ab) / q_max
    };
    let walk = WalkMatrix::new(graph, params.direction);
    let groups: Vec<Option<usize>> = graph
        .user_ids()
        .map(|u| group_of(assignment, u))
        .collect();

    let entries: Result<Vec<ProfileEntry>> = (0..graph.node_count())
        .into_par_iter()
        .map(|focal| {
            let w = ppr(&walk, focal, params)?;
            let entry = match local_mixing_with_groups(graph, &groups, &w) {
                Ok(local) => {
                    let trace: f64 = (0..GROUPS).map(|g| local.e[g][g]).sum();
                    let r = if q_max <= f64::EPSILON {
                        1.0
                    } else {
                        (trace - sum_ab) / q_max
                    };
                    ProfileEntry {
                        user: graph.node_id(focal).clone(),
                        label: assignment.label_of(graph.node_id(focal)),
                        r_local: Some(r),
                        z_weight: local.z,
                    }
                }
                Err(Error::NoLabeledNeighborhood) => ProfileEntry {
                    user: graph.node_id(focal).clone(),
                    label: assignment.label_of(graph.node_id(focal)),
                    r_local: None,
                    z_weight: 0.0,
                },
                Err(e) => return Err(e),
            };
            Ok(entry)
        })
        .collect();

    Ok(AssortativityProfile {
        entries: entries?,
        global_r,
        q_max,
        params: *params,
    })
}

impl AssortativityProfile {
    /// z-weighted mean r over nodes with the given label (all labels when
    /// `None`); flagged nodes are excluded.
    pub fn weighted_mean_r(&self, filter: Option<Label>) -> Option<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for entry in &self.entries {
            if filter.is_some_and(|l| l != entry.label) {
                continue;
            }
            if let Some(r) = entry.r_local {
                num += entry.z_weight * r;
                den += entry.z_weight;
            }
        }
        (den > 0.0).then(|| num / den)
    }

    /// Writes `user_id,label,r_local,z_weight` sorted by user id; flagged
    /// nodes have an empty r_local field.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "user_id,label,r_local,z_weight")?;
        let mut ordered: BTreeMap<&UserId, &ProfileEntry> =
            self.entries.iter().map(|e| (&e.user, e)).collect();
        for (user, entry) in ordered.iter_mut() {
            match entry.r_local {
                Some(r) => writeln!(w, "{user},{},{r},{}", entry.label, entry.z_weight)?,
                None => writeln!(w, "{user},{},,{}", entry.label, entry.z_weight)?,
            }
        }
        Ok(())
    }
}

/// A z-weighted histogram over [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedHistogram {
    /// `bins + 1` edges spanning [-1, 1].
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

/// Histograms a set of profiles: each node contributes mass z_l to the bin
/// of its r(l). Flagged nodes (z = 0 or r undefined) are excluded. Scores
/// outside [-1, 1] land in the outermost bins.
pub fn assort_histogram(
    entries: &[ProfileEntry],
    filter: Option<Label>,
    bins: usize,
) -> Result<WeightedHistogram> {
    if bins == 0 {
        return Err(Error::InvalidParameter("bins must be >= 1".into()));
    }
    let edges: Vec<f64> = (0..=bins).map(|i| -1.0 + 2.0 * i as f64 / bins as f64).collect();
    let mut masses = vec![0.0; bins];
    for entry in entries {
        if filter.is_some_and(|l| l != entry.label) {
            continue;
        }
        let (Some(r), z) = (entry.r_local, entry.z_weight) else {
            continue;
        };
        if z <= 0.0 {
            continue;
        }
        let idx = (((r + 1.0) / 2.0) * bins as f64).floor() as i64;
        let idx = idx.clamp(0, bins as i64 - 1) as usize;
        masses[idx] += z;
    }
    Ok(WeightedHistogram { edges, masses })
}

/// Per-group histograms plus the all-node background.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSet {
    pub edges: Vec<f64>,
    pub majority: Vec<f64>,
    pub minority: Vec<f64>,
    pub intermediate: Vec<f64>,
    pub all: Vec<f64>,
}

pub fn histogram_set(profile: &AssortativityProfile, bins: usize) -> Result<HistogramSet> {
    let majority = assort_histogram(&profile.entries, Some(Label::Majority), bins)?;
    let minority = assort_histogram(&profile.entries, Some(Label::Minority), bins)?;
    let intermediate = assort_histogram(&profile.entries, Some(Label::Intermediate), bins)?;
    let all = assort_histogram(&profile.entries, None, bins)?;
    Ok(HistogramSet {
        edges: majority.edges.clone(),
        majority: majority.masses,
        minority: minority.masses,
        intermediate: intermediate.masses,
        all: all.masses,
    })
}

impl HistogramSet {
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(
            w,
            "bin_lo,bin_hi,mass_majority,mass_minority,mass_intermediate,mass_all"
        )?;
        for i in 0..self.all.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                self.edges[i],
                self.edges[i + 1],
                self.majority[i],
                self.minority[i],
                self.intermediate[i],
                self.all[i]
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::Provenance;
    use approx::assert_abs_diff_eq;

    fn u(s: &str) -> UserId {
        UserId::new(s)
    }

    /// Builds a graph plus an assignment from `(src, dst, weight)` triples
    /// and `(user, label)` pairs.
    fn fixture(
        edges: &[(&str, &str, u64)],
        labels: &[(&str, Label)],
    ) -> (InteractionGraph, ClusterAssignment) {
        let mut g = InteractionGraph::new();
        for (s, d, w) in edges {
            g.add_weighted(&u(s), &u(d), *w);
        }
        let mut a = ClusterAssignment::new();
        for (user, label) in labels {
            a.set(u(user), *label, Provenance::EventNetwork);
        }
        (g, a)
    }

    /// Complete bipartite digraph between two equal groups, both directions.
    fn bipartite() -> (InteractionGraph, ClusterAssignment) {
        let maj = ["m1", "m2", "m3"];
        let min = ["x1", "x2", "x3"];
        let mut edges = Vec::new();
        for a in maj {
            for b in min {
                edges.push((a, b, 1));
                edges.push((b, a, 1));
            }
        }
        let labels: Vec<(&str, Label)> = maj
            .iter()
            .map(|m| (*m, Label::Majority))
            .chain(min.iter().map(|m| (*m, Label::Minority)))
            .collect();
        fixture(&edges, &labels)
    }

    #[test]
    fn perfectly_assortative_two_groups() {
        let (g, a) = fixture(
            &[("m1", "m2", 2), ("m2", "m1", 1), ("x1", "x2", 3)],
            &[
                ("m1", Label::Majority),
                ("m2", Label::Majority),
                ("x1", Label::Minority),
                ("x2", Label::Minority),
            ],
        );
        let r = global_assortativity(&g, &a).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn complete_bipartite_is_perfectly_disassortative() {
        let (g, a) = bipartite();
        let r = global_assortativity(&g, &a).unwrap();
        assert_abs_diff_eq!(r, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_group_defined_as_one() {
        let (g, a) = fixture(
            &[("m1", "m2", 1)],
            &[("m1", Label::Majority), ("m2", Label::Majority)],
        );
        assert_eq!(global_assortativity(&g, &a).unwrap(), 1.0);
    }

    #[test]
    fn unlabeled_edges_are_excluded() {
        let (g, a) = fixture(
            &[("m1", "m2", 1), ("m1", "nolabel", 50)],
            &[("m1", Label::Majority), ("m2", Label::Majority)],
        );
        // the heavy edge to the unlabeled user must not contribute
        let mixing = global_mixing(&g, &a).unwrap();
        assert_abs_diff_eq!(mixing.e[0][0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn no_labeled_edges_is_an_error() {
        let (g, a) = fixture(&[("p", "q", 1)], &[("p", Label::Majority)]);
        assert!(matches!(
            global_assortativity(&g, &a),
            Err(Error::NoLabeledEdges)
        ));
    }

    #[test]
    fn random_label_shuffle_averages_near_zero() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        // fixed ring + chords graph on 30 nodes
        let mut g = InteractionGraph::new();
        for i in 0..30 {
            g.add_interaction(&u(&format!("n{i}")), &u(&format!("n{}", (i + 1) % 30)));
            g.add_interaction(&u(&format!("n{i}")), &u(&format!("n{}", (i + 7) % 30)));
        }
        let mut labels: Vec<Label> = (0..30)
            .map(|i| match i % 3 {
                0 => Label::Majority,
                1 => Label::Minority,
                _ => Label::Intermediate,
            })
            .collect();
        let mut sum = 0.0;
        for _ in 0..100 {
            labels.shuffle(&mut rng);
            let mut a = ClusterAssignment::new();
            for (i, l) in labels.iter().enumerate() {
                a.set(u(&format!("n{i}")), *l, Provenance::EventNetwork);
            }
            sum += global_assortativity(&g, &a).unwrap();
        }
        let mean = sum / 100.0;
        assert!(mean.abs() < 0.05, "permutation null mean {mean}");
    }

    #[test]
    fn ppr_isolated_focal_node_is_delta() {
        let mut g = InteractionGraph::new();
        g.add_node(&u("alone"));
        g.add_interaction(&u("a"), &u("b"));
        let focal = g.node_index(&u("alone")).unwrap();
        let w = personalized_pagerank(&g, focal, &PprParams::default()).unwrap();
        assert_eq!(w[focal], 1.0);
        assert_eq!(w.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn ppr_two_node_closed_form() {
        // symmetric pair: w(focal) = 1/(1+alpha), w(other) = alpha/(1+alpha)
        let mut g = InteractionGraph::new();
        g.add_interaction(&u("a"), &u("b"));
        let params = PprParams {
            alpha: 0.85,
            tolerance: 1e-14,
            ..PprParams::default()
        };
        let w = personalized_pagerank(&g, 0, &params).unwrap();
        assert_abs_diff_eq!(w[0], 1.0 / 1.85, epsilon = 1e-10);
        assert_abs_diff_eq!(w[1], 0.85 / 1.85, epsilon = 1e-10);
    }

    #[test]
    fn ppr_small_alpha_concentrates_on_focal() {
        let mut g = InteractionGraph::new();
        for i in 0..9 {
            g.add_interaction(&u(&format!("p{i}")), &u(&format!("p{}", i + 1)));
        }
        let params = PprParams {
            alpha: 0.01,
            tolerance: 1e-14,
            ..PprParams::default()
        };
        let w = personalized_pagerank(&g, 4, &params).unwrap();
        assert!(w[4] > 0.98, "w(focal) = {}", w[4]);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ppr_reports_convergence_failure() {
        let mut g = InteractionGraph::new();
        g.add_interaction(&u("a"), &u("b"));
        let params = PprParams {
            alpha: 0.99,
            tolerance: 1e-15,
            max_iterations: 3,
            ..PprParams::default()
        };
        assert!(matches!(
            personalized_pagerank(&g, 0, &params),
            Err(Error::Convergence { .. })
        ));
    }

    #[test]
    fn local_mixing_star_all_same_group() {
        let (g, a) = fixture(
            &[("c", "l1", 1), ("c", "l2", 1), ("c", "l3", 1)],
            &[
                ("c", Label::Majority),
                ("l1", Label::Majority),
                ("l2", Label::Majority),
                ("l3", Label::Majority),
            ],
        );
        let mut w = vec![0.0; g.node_count()];
        w[g.node_index(&u("c")).unwrap()] = 1.0;
        let local = local_mixing(&g, &a, &w).unwrap();
        assert_abs_diff_eq!(local.e[0][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(local.z, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn local_mixing_star_cross_group() {
        let (g, a) = fixture(
            &[("c", "l1", 1), ("c", "l2", 1)],
            &[
                ("c", Label::Majority),
                ("l1", Label::Minority),
                ("l2", Label::Minority),
            ],
        );
        let mut w = vec![0.0; g.node_count()];
        w[g.node_index(&u("c")).unwrap()] = 1.0;
        let local = local_mixing(&g, &a, &w).unwrap();
        assert_abs_diff_eq!(local.e[0][1], 1.0, epsilon = 1e-12);
        assert_eq!(local.e[0][0], 0.0);
    }

    #[test]
    fn local_mixing_matches_exhaustive_sum() {
        // two triangles joined by one bridge edge
        let edges = [
            ("a1", "a2", 2),
            ("a2", "a3", 1),
            ("a3", "a1", 1),
            ("b1", "b2", 1),
            ("b2", "b3", 3),
            ("b3", "b1", 1),
            ("a1", "b1", 1),
        ];
        let labels = [
            ("a1", Label::Majority),
            ("a2", Label::Majority),
            ("a3", Label::Intermediate),
            ("b1", Label::Minority),
            ("b2", Label::Minority),
            ("b3", Label::Minority),
        ];
        let (g, a) = fixture(&edges, &labels);
        let focal = g.node_index(&u("a1")).unwrap();
        let w = personalized_pagerank(&g, focal, &PprParams::default()).unwrap();
        let local = local_mixing(&g, &a, &w).unwrap();

        // exhaustive double sum over a dense adjacency copy
        let n = g.node_count();
        let mut dense = vec![vec![0u64; n]; n];
        for (i, j, wt) in g.edges() {
            dense[i][j] = wt;
        }
        let group: Vec<Option<usize>> = g
            .user_ids()
            .map(|usr| a.label_of(usr).group_index())
            .collect();
        let mut mass = [[0.0; GROUPS]; GROUPS];
        for i in 0..n {
            let k: u64 = dense[i].iter().sum();
            if k == 0 {
                continue;
            }
            for j in 0..n {
                if dense[i][j] == 0 {
                    continue;
                }
                if let (Some(gi), Some(gj)) = (group[i], group[j]) {
                    mass[gi][gj] += w[i] * dense[i][j] as f64 / k as f64;
                }
            }
        }
        let z: f64 = mass.iter().flatten().sum();
        assert_abs_diff_eq!(local.z, z, epsilon = 1e-9);
        for g_idx in 0..GROUPS {
            for h in 0..GROUPS {
                assert_abs_diff_eq!(local.e[g_idx][h], mass[g_idx][h] / z, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn flagged_node_without_labeled_mass() {
        // focal in a separate component without labels
        let (mut g, a) = fixture(
            &[("m1", "m2", 1), ("x1", "x2", 1)],
            &[
                ("m1", Label::Majority),
                ("m2", Label::Majority),
                ("x1", Label::Minority),
                ("x2", Label::Minority),
            ],
        );
        g.add_interaction(&u("u1"), &u("u2")); // unlabeled island
        let focal = g.node_index(&u("u1")).unwrap();
        let w = personalized_pagerank(&g, focal, &PprParams::default()).unwrap();
        assert!(matches!(
            local_mixing(&g, &a, &w),
            Err(Error::NoLabeledNeighborhood)
        ));
        let profile = compute_profiles(&g, &a, &PprParams::default()).unwrap();
        let entry = profile
            .entries
            .iter()
            .find(|e| e.user == u("u1"))
            .unwrap();
        assert_eq!(entry.r_local, None);
        assert_eq!(entry.z_weight, 0.0);
    }

    #[test]
    fn perfectly_assortative_gives_local_one_everywhere() {
        let (g, a) = fixture(
            &[("m1", "m2", 1), ("m2", "m1", 2), ("x1", "x2", 1), ("x2", "x1", 1)],
            &[
                ("m1", Label::Majority),
                ("m2", Label::Majority),
                ("x1", Label::Minority),
                ("x2", Label::Minority),
            ],
        );
        for focal in 0..g.node_count() {
            let (r, z) = local_assortativity(&g, &a, focal, &PprParams::default()).unwrap();
            assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
            assert!(z > 0.0);
        }
    }

    #[test]
    fn complete_bipartite_gives_local_minus_one_everywhere() {
        let (g, a) = bipartite();
        for focal in 0..g.node_count() {
            let (r, _) = local_assortativity(&g, &a, focal, &PprParams::default()).unwrap();
            assert_abs_diff_eq!(r, -1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn label_permutation_leaves_r_unchanged() {
        let edges = [
            ("a1", "a2", 2),
            ("a2", "a3", 1),
            ("a3", "a1", 1),
            ("b1", "b2", 1),
            ("b2", "b3", 3),
            ("a1", "b1", 1),
            ("b3", "a2", 2),
        ];
        let labels = [
            ("a1", Label::Majority),
            ("a2", Label::Majority),
            ("a3", Label::Intermediate),
            ("b1", Label::Minority),
            ("b2", Label::Minority),
            ("b3", Label::Intermediate),
        ];
        let (g, a) = fixture(&edges, &labels);
        // permute groups: majority -> minority -> intermediate -> majority
        let permute = |l: Label| match l {
            Label::Majority => Label::Minority,
            Label::Minority => Label::Intermediate,
            Label::Intermediate => Label::Majority,
            Label::Unclassified => Label::Unclassified,
        };
        let permuted_labels: Vec<(&str, Label)> =
            labels.iter().map(|(s, l)| (*s, permute(*l))).collect();
        let (_, a2) = fixture(&edges, &permuted_labels);
        let params = PprParams::default();
        for focal in 0..g.node_count() {
            let (r1, z1) = local_assortativity(&g, &a, focal, &params).unwrap();
            let (r2, z2) = local_assortativity(&g, &a2, focal, &params).unwrap();
            assert_abs_diff_eq!(r1, r2, epsilon = 1e-12);
            assert_abs_diff_eq!(z1, z2, epsilon = 1e-12);
        }
    }

    #[test]
    fn unlabeled_islands_in_other_components_do_not_perturb_r() {
        let edges = [
            ("m1", "m2", 1),
            ("m2", "x1", 2),
            ("x1", "m1", 1),
            ("x1", "x2", 1),
        ];
        let labels = [
            ("m1", Label::Majority),
            ("m2", Label::Majority),
            ("x1", Label::Minority),
            ("x2", Label::Minority),
        ];
        let (g, a) = fixture(&edges, &labels);
        let (mut g2, _) = fixture(&edges, &labels);
        g2.add_interaction(&u("zz1"), &u("zz2")); // unlabeled separate island
        let params = PprParams::default();
        for focal_user in ["m1", "m2", "x1", "x2"] {
            let f1 = g.node_index(&u(focal_user)).unwrap();
            let f2 = g2.node_index(&u(focal_user)).unwrap();
            let (r1, z1) = local_assortativity(&g, &a, f1, &params).unwrap();
            let (r2, z2) = local_assortativity(&g2, &a, f2, &params).unwrap();
            assert_abs_diff_eq!(r1, r2, epsilon = 1e-12);
            assert_abs_diff_eq!(z1, z2, epsilon = 1e-12);
        }
    }

    #[test]
    fn z_weight_never_exceeds_one() {
        let (g, a) = fixture(
            &[("m1", "m2", 1), ("m2", "x1", 2), ("x1", "m1", 1)],
            &[
                ("m1", Label::Majority),
                ("m2", Label::Majority),
                ("x1", Label::Minority),
            ],
        );
        let profile = compute_profiles(&g, &a, &PprParams::default()).unwrap();
        for entry in &profile.entries {
            assert!(entry.z_weight <= 1.0 + 1e-12);
            if let Some(r) = entry.r_local {
                assert!(r <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn histogram_examples() {
        let entries = vec![
            ProfileEntry {
                user: u("a"),
                label: Label::Majority,
                r_local: Some(1.0),
                z_weight: 0.5,
            },
            ProfileEntry {
                user: u("b"),
                label: Label::Majority,
                r_local: Some(1.0),
                z_weight: 0.5,
            },
        ];
        let hist = assort_histogram(&entries, None, 40).unwrap();
        assert_eq!(hist.masses[39], 1.0);
        assert_eq!(hist.masses.iter().sum::<f64>(), 1.0);

        let entries = vec![
            ProfileEntry {
                user: u("a"),
                label: Label::Majority,
                r_local: Some(-1.0),
                z_weight: 0.2,
            },
            ProfileEntry {
                user: u("b"),
                label: Label::Minority,
                r_local: Some(1.0),
                z_weight: 0.8,
            },
        ];
        let hist = assort_histogram(&entries, None, 40).unwrap();
        assert_abs_diff_eq!(hist.masses[39] / hist.masses[0], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn profile_csv_has_empty_field_for_flagged_nodes() {
        let profile = AssortativityProfile {
            entries: vec![
                ProfileEntry {
                    user: u("a"),
                    label: Label::Majority,
                    r_local: Some(0.25),
                    z_weight: 0.5,
                },
                ProfileEntry {
                    user: u("b"),
                    label: Label::Unclassified,
                    r_local: None,
                    z_weight: 0.0,
                },
            ],
            global_r: 0.1,
            q_max: 0.5,
            params: PprParams::default(),
        };
        let mut buf = Vec::new();
        profile.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("a,majority,0.25,0.5"));
        assert!(text.contains("b,unclassified,,0"));
    }
}

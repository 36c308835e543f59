//! Engagement tables, participation tests, and the cross-cluster reply
//! interaction matrix.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::classify::{ClusterAssignment, Label};
use crate::error::{Error, Result};
use crate::forest::ReplyTree;
use crate::graph::InteractionGraph;
use crate::ingest::SeedSet;
use crate::record::UserId;

const TABLE_LABELS: [Label; 4] = [
    Label::Majority,
    Label::Minority,
    Label::Intermediate,
    Label::Unclassified,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngagementRow {
    pub label: Label,
    pub users: u64,
    pub user_share: f64,
    pub replies: u64,
    pub reply_share: f64,
}

/// Per-cluster user and reply counts over the reply trees.
#[derive(Debug, Clone, PartialEq)]
pub struct EngagementTable {
    pub rows: [EngagementRow; 4],
}

impl EngagementTable {
    pub fn row(&self, label: Label) -> &EngagementRow {
        self.rows
            .iter()
            .find(|r| r.label == label)
            .expect("all labels present")
    }

    pub fn total_users(&self) -> u64 {
        self.rows.iter().map(|r| r.users).sum()
    }

    pub fn total_replies(&self) -> u64 {
        self.rows.iter().map(|r| r.replies).sum()
    }

    /// Reply count over the three known labels.
    pub fn labeled_replies(&self) -> u64 {
        self.rows
            .iter()
            .filter(|r| r.label != Label::Unclassified)
            .map(|r| r.replies)
            .sum()
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "label,users,user_share,replies,reply_share")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                row.label, row.users, row.user_share, row.replies, row.reply_share
            )?;
        }
        Ok(())
    }
}

fn table_from_counts(
    users: BTreeMap<Label, BTreeSet<&UserId>>,
    replies: BTreeMap<Label, u64>,
) -> EngagementTable {
    let total_users: u64 = users.values().map(|s| s.len() as u64).sum();
    let total_replies: u64 = replies.values().sum();
    let share = |count: u64, total: u64| {
        if total == 0 {
            0.0
        } else {
            count as f64 / total as f64
        }
    };
    let rows = TABLE_LABELS.map(|label| {
        let u = users.get(&label).map(|s| s.len() as u64).unwrap_or(0);
        let r = replies.get(&label).copied().unwrap_or(0);
        EngagementRow {
            label,
            users: u,
            user_share: share(u, total_users),
            replies: r,
            reply_share: share(r, total_replies),
        }
    });
    EngagementTable { rows }
}

fn engagement_with_filter(
    forest: &[ReplyTree],
    assignment: &ClusterAssignment,
    depth_filter: Option<usize>,
) -> EngagementTable {
    let mut users: BTreeMap<Label, BTreeSet<&UserId>> = BTreeMap::new();
    let mut replies: BTreeMap<Label, u64> = BTreeMap::new();
    for tree in forest {
        for (node, depth) in tree.iter_bfs() {
            if node.parent.is_none() {
                continue; // the root is not a reply
            }
            if depth_filter.is_some_and(|d| depth != d) {
                continue;
            }
            let label = assignment.label_of(&node.author_id);
            users.entry(label).or_default().insert(&node.author_id);
            *replies.entry(label).or_insert(0) += 1;
        }
    }
    table_from_counts(users, replies)
}

/// Distinct reply authors and reply counts per cluster (root tweets
/// excluded). Shares are fractions of the respective totals.
pub fn engagement_table(forest: &[ReplyTree], assignment: &ClusterAssignment) -> EngagementTable {
    engagement_with_filter(forest, assignment, None)
}

/// As [`engagement_table`], restricted to first-order replies (direct
/// replies to the root).
pub fn first_order_table(forest: &[ReplyTree], assignment: &ClusterAssignment) -> EngagementTable {
    engagement_with_filter(forest, assignment, Some(1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticipationRow {
    pub label: Label,
    /// Cluster members that wrote at least one reply (seeds excluded).
    pub active: u64,
    /// Cluster members in the base network (seeds excluded).
    pub base: u64,
    /// `active / base`; `None` when the base is empty.
    pub share: Option<f64>,
}

/// Share of retweet-cluster members active in the reply network, per known
/// label, seed users excluded from both numerator and denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipationTable {
    pub rows: [ParticipationRow; 3],
}

impl ParticipationTable {
    pub fn row(&self, label: Label) -> &ParticipationRow {
        self.rows
            .iter()
            .find(|r| r.label == label)
            .expect("known label")
    }

    /// The 3x2 (cluster x active/inactive) contingency table.
    pub fn contingency(&self) -> Vec<Vec<u64>> {
        self.rows
            .iter()
            .map(|r| vec![r.active, r.base - r.active])
            .collect()
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "label,active,base,share")?;
        for row in &self.rows {
            match row.share {
                Some(s) => writeln!(w, "{},{},{},{s}", row.label, row.active, row.base)?,
                None => writeln!(w, "{},{},{},", row.label, row.active, row.base)?,
            }
        }
        Ok(())
    }
}

pub fn participation_share<'a>(
    rt_assignment: &ClusterAssignment,
    reply_users: impl IntoIterator<Item = &'a UserId>,
    seeds: &SeedSet,
) -> ParticipationTable {
    let reply_users: BTreeSet<&UserId> = reply_users.into_iter().collect();
    let mut base: BTreeMap<Label, u64> = BTreeMap::new();
    let mut active: BTreeMap<Label, u64> = BTreeMap::new();
    for (user, label, _) in rt_assignment.iter() {
        if seeds.contains(user) {
            continue;
        }
        *base.entry(label).or_insert(0) += 1;
        if reply_users.contains(user) {
            *active.entry(label).or_insert(0) += 1;
        }
    }
    let rows = Label::KNOWN.map(|label| {
        let b = base.get(&label).copied().unwrap_or(0);
        let a = active.get(&label).copied().unwrap_or(0);
        ParticipationRow {
            label,
            active: a,
            base: b,
            share: (b > 0).then(|| a as f64 / b as f64),
        }
    });
    ParticipationTable { rows }
}

/// Outcome of a hypothesis test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    /// Degrees of freedom (chi-square only).
    pub df: Option<u64>,
    pub p_value: f64,
    pub sample_sizes: Vec<u64>,
}

/// Pearson chi-square test of independence on an r x c count table, expected
/// counts from the row/column marginals. Any zero marginal is an error.
pub fn chi_square(table: &[Vec<u64>]) -> Result<TestResult> {
    let r = table.len();
    if r < 2 {
        return Err(Error::InvalidParameter(
            "contingency table needs at least 2 rows".into(),
        ));
    }
    let c = table[0].len();
    if c < 2 {
        return Err(Error::InvalidParameter(
            "contingency table needs at least 2 columns".into(),
        ));
    }
    if table.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidParameter("ragged contingency table".into()));
    }
    let row_sums: Vec<u64> = table.iter().map(|row| row.iter().sum()).collect();
    let col_sums: Vec<u64> = (0..c).map(|j| table.iter().map(|row| row[j]).sum()).collect();
    if row_sums.iter().chain(col_sums.iter()).any(|&s| s == 0) {
        return Err(Error::InvalidParameter(
            "contingency table has a zero marginal".into(),
        ));
    }
    let total: u64 = row_sums.iter().sum();
    let mut stat = 0.0;
    for i in 0..r {
        for j in 0..c {
            let expected = row_sums[i] as f64 * col_sums[j] as f64 / total as f64;
            let diff = table[i][j] as f64 - expected;
            stat += diff * diff / expected;
        }
    }
    let df = ((r - 1) * (c - 1)) as u64;
    let dist = ChiSquared::new(df as f64)
        .map_err(|e| Error::InvalidParameter(format!("chi-square df: {e}")))?;
    Ok(TestResult {
        statistic: stat,
        df: Some(df),
        p_value: dist.sf(stat),
        sample_sizes: row_sums,
    })
}

/// Two-sided two-proportion z-test with the pooled standard error.
pub fn two_proportion_z(k1: u64, n1: u64, k2: u64, n2: u64) -> Result<TestResult> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidParameter("sample sizes must be > 0".into()));
    }
    if k1 > n1 || k2 > n2 {
        return Err(Error::InvalidParameter(
            "successes exceed the sample size".into(),
        ));
    }
    let pooled = (k1 + k2) as f64 / (n1 + n2) as f64;
    if pooled == 0.0 || pooled == 1.0 {
        return Err(Error::DegenerateVariance);
    }
    let p1 = k1 as f64 / n1 as f64;
    let p2 = k2 as f64 / n2 as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    let z = (p1 - p2) / se;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(TestResult {
        statistic: z,
        df: None,
        p_value: 2.0 * normal.sf(z.abs()),
        sample_sizes: vec![n1, n2],
    })
}

/// Reply counts between the known clusters. `counts[g][h]` is the reply
/// weight from cluster g to cluster h; `from_totals[g]` counts every reply g
/// gave, including replies to unclassified users, so shares over a row need
/// not sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    pub counts: [[u64; 3]; 3],
    pub from_totals: [u64; 3],
}

impl InteractionMatrix {
    /// Fraction of cluster g's replies that went to cluster h.
    pub fn share(&self, from: Label, to: Label) -> f64 {
        let g = from.group_index().expect("known label");
        let h = to.group_index().expect("known label");
        if self.from_totals[g] == 0 {
            0.0
        } else {
            self.counts[g][h] as f64 / self.from_totals[g] as f64
        }
    }

    /// Total labeled-to-labeled reply count.
    pub fn labeled_total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// CSV in the same orientation as the paper-style table: one row per
    /// target cluster, one column per source cluster.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(
            w,
            "to_label,from_majority,from_majority_share,from_minority,from_minority_share,from_intermediate,from_intermediate_share"
        )?;
        for h in 0..3 {
            let label = Label::from_group_index(h);
            let mut fields = vec![label.to_string()];
            for g in 0..3 {
                fields.push(self.counts[g][h].to_string());
                fields.push(
                    self.share(Label::from_group_index(g), label).to_string(),
                );
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        let totals: Vec<String> = self.from_totals.iter().map(|t| format!("{t},")).collect();
        writeln!(w, "overall,{}", totals.join(""))?;
        Ok(())
    }
}

pub fn interaction_matrix(
    reply_network: &InteractionGraph,
    assignment: &ClusterAssignment,
) -> InteractionMatrix {
    let groups: Vec<Option<usize>> = reply_network
        .user_ids()
        .map(|u| assignment.label_of(u).group_index())
        .collect();
    let mut counts = [[0u64; 3]; 3];
    let mut from_totals = [0u64; 3];
    for (i, j, w) in reply_network.edges() {
        if let Some(g) = groups[i] {
            from_totals[g] += w;
            if let Some(h) = groups[j] {
                counts[g][h] += w;
            }
        }
    }
    InteractionMatrix {
        counts,
        from_totals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::Provenance;
    use crate::forest::build_forest;
    use crate::ingest::ParseMode;
    use crate::record::InteractionRecord;
    use approx::assert_abs_diff_eq;

    fn u(s: &str) -> UserId {
        UserId::new(s)
    }

    fn seeds(ids: &[&str]) -> SeedSet {
        SeedSet::new(ids.iter().map(|s| u(s))).unwrap()
    }

    fn assign(pairs: &[(&str, Label)]) -> ClusterAssignment {
        let mut a = ClusterAssignment::new();
        for (user, label) in pairs {
            a.set(u(user), *label, Provenance::EventNetwork);
        }
        a
    }

    fn forest_from(records: Vec<InteractionRecord>, seed_ids: &[&str]) -> Vec<ReplyTree> {
        build_forest(&records, &seeds(seed_ids), ParseMode::Strict)
            .unwrap()
            .0
    }

    #[test]
    fn single_majority_replier_owns_the_table() {
        let records = vec![
            InteractionRecord::original("r", "seed", 0, ""),
            InteractionRecord::reply("x1", "maj", 1, "r", "seed", ""),
            InteractionRecord::reply("x2", "maj", 2, "x1", "maj", ""),
        ];
        let forest = forest_from(records, &["seed"]);
        let table = engagement_table(&forest, &assign(&[("maj", Label::Majority)]));
        let row = table.row(Label::Majority);
        assert_eq!((row.users, row.replies), (1, 2));
        assert_eq!((row.user_share, row.reply_share), (1.0, 1.0));
    }

    #[test]
    fn shares_sum_to_one_across_labels() {
        let records = vec![
            InteractionRecord::original("r", "seed", 0, ""),
            InteractionRecord::reply("a", "maj", 1, "r", "seed", ""),
            InteractionRecord::reply("b", "min", 2, "r", "seed", ""),
            InteractionRecord::reply("c", "int", 3, "r", "seed", ""),
            InteractionRecord::reply("d", "ghost", 4, "r", "seed", ""),
        ];
        let forest = forest_from(records, &["seed"]);
        let assignment = assign(&[
            ("maj", Label::Majority),
            ("min", Label::Minority),
            ("int", Label::Intermediate),
        ]);
        let table = engagement_table(&forest, &assignment);
        let user_share: f64 = table.rows.iter().map(|r| r.user_share).sum();
        let reply_share: f64 = table.rows.iter().map(|r| r.reply_share).sum();
        assert_abs_diff_eq!(user_share, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(reply_share, 1.0, epsilon = 1e-9);
        assert_eq!(table.row(Label::Unclassified).users, 1);
    }

    #[test]
    fn first_order_counts_only_depth_one() {
        // chain root <- a <- b: only a's reply is first-order
        let records = vec![
            InteractionRecord::original("r", "seed", 0, ""),
            InteractionRecord::reply("x", "a", 1, "r", "seed", ""),
            InteractionRecord::reply("y", "b", 2, "x", "a", ""),
        ];
        let forest = forest_from(records, &["seed"]);
        let assignment = assign(&[("a", Label::Majority), ("b", Label::Minority)]);
        let table = first_order_table(&forest, &assignment);
        assert_eq!(table.row(Label::Majority).replies, 1);
        assert_eq!(table.row(Label::Minority).replies, 0);

        // star of 5: all five count
        let mut records = vec![InteractionRecord::original("r", "seed", 0, "")];
        for i in 0..5 {
            records.push(InteractionRecord::reply(
                format!("s{i}"),
                format!("u{i}"),
                1,
                "r",
                "seed",
                "",
            ));
        }
        let forest = forest_from(records, &["seed"]);
        let table = first_order_table(&forest, &ClusterAssignment::new());
        assert_eq!(table.total_replies(), 5);
    }

    #[test]
    fn participation_share_examples() {
        let rt = assign(&[
            ("m1", Label::Majority),
            ("m2", Label::Majority),
            ("x1", Label::Minority),
            ("s", Label::Majority), // seed, excluded
        ]);
        let all_reply: Vec<UserId> = vec![u("m1"), u("m2"), u("x1")];
        let table = participation_share(&rt, all_reply.iter(), &seeds(&["s"]));
        assert_eq!(table.row(Label::Majority).share, Some(1.0));
        assert_eq!(table.row(Label::Minority).share, Some(1.0));
        assert_eq!(table.row(Label::Intermediate).share, None); // empty base
        assert_eq!(table.row(Label::Majority).base, 2);

        let none: Vec<UserId> = Vec::new();
        let table = participation_share(&rt, none.iter(), &seeds(&["s"]));
        assert_eq!(table.row(Label::Majority).share, Some(0.0));
    }

    #[test]
    fn chi_square_on_expected_table_is_zero() {
        // observed equals expected under independence
        let table = vec![vec![10, 10], vec![20, 20]];
        let result = chi_square(&table).unwrap();
        assert_abs_diff_eq!(result.statistic, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(result.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn chi_square_hand_computed_fixture() {
        // E = 15 everywhere; chi2 = 4 * 25/15 = 20/3
        let result = chi_square(&[vec![10, 20], vec![20, 10]]).unwrap();
        assert_abs_diff_eq!(result.statistic, 20.0 / 3.0, epsilon = 1e-6);
        assert_eq!(result.df, Some(1));
        assert_abs_diff_eq!(result.p_value, 0.009823274507519235, epsilon = 1e-9);
    }

    #[test]
    fn chi_square_rejects_zero_marginal() {
        assert!(matches!(
            chi_square(&[vec![0, 0], vec![5, 5]]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            chi_square(&[vec![0, 5], vec![0, 5]]),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn chi_square_invariant_under_permutations() {
        let base = vec![vec![12, 7, 31], vec![25, 3, 14]];
        let a = chi_square(&base).unwrap();
        // swap rows
        let b = chi_square(&[base[1].clone(), base[0].clone()]).unwrap();
        assert_abs_diff_eq!(a.statistic, b.statistic, epsilon = 1e-12);
        // permute columns
        let permuted: Vec<Vec<u64>> = base.iter().map(|r| vec![r[2], r[0], r[1]]).collect();
        let c = chi_square(&permuted).unwrap();
        assert_abs_diff_eq!(a.statistic, c.statistic, epsilon = 1e-12);
    }

    #[test]
    fn z_test_identical_proportions() {
        let result = two_proportion_z(30, 100, 15, 50).unwrap();
        assert_abs_diff_eq!(result.statistic, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(result.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn z_test_hand_formula_fixture() {
        // pooled p = 0.35, se = sqrt(2 * 0.35 * 0.65 / 100)
        let result = two_proportion_z(48, 100, 22, 100).unwrap();
        assert_abs_diff_eq!(result.statistic, 3.854496446637726, epsilon = 1e-9);
        assert_abs_diff_eq!(result.p_value, 1.1596806776374382e-4, epsilon = 1e-9);
    }

    #[test]
    fn z_test_antisymmetry_is_exact() {
        let a = two_proportion_z(48, 100, 22, 131).unwrap();
        let b = two_proportion_z(22, 131, 48, 100).unwrap();
        assert_eq!(a.statistic, -b.statistic);
        assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn z_test_degenerate_pooled_proportion() {
        assert!(matches!(
            two_proportion_z(0, 10, 0, 20),
            Err(Error::DegenerateVariance)
        ));
        assert!(matches!(
            two_proportion_z(10, 10, 20, 20),
            Err(Error::DegenerateVariance)
        ));
    }

    fn reply_net(edges: &[(&str, &str, u64)]) -> InteractionGraph {
        let mut g = InteractionGraph::new();
        for (s, d, w) in edges {
            g.add_weighted(&u(s), &u(d), *w);
        }
        g
    }

    #[test]
    fn interaction_matrix_intra_majority_only() {
        let net = reply_net(&[("m1", "m2", 3), ("m2", "m1", 1)]);
        let m = interaction_matrix(
            &net,
            &assign(&[("m1", Label::Majority), ("m2", Label::Majority)]),
        );
        assert_eq!(m.counts[0][0], 4);
        assert_eq!(m.counts[0][1], 0);
        assert_eq!(m.counts[1][1], 0);
        assert_eq!(m.share(Label::Majority, Label::Majority), 1.0);
    }

    #[test]
    fn interaction_matrix_single_cross_reply() {
        let net = reply_net(&[("x", "m", 1)]);
        let m = interaction_matrix(
            &net,
            &assign(&[("x", Label::Minority), ("m", Label::Majority)]),
        );
        assert_eq!(m.counts[1][0], 1);
        assert_eq!(m.share(Label::Minority, Label::Majority), 1.0);
    }

    #[test]
    fn replies_to_unclassified_count_toward_totals_only() {
        let net = reply_net(&[("x", "m", 3), ("x", "ghost", 1)]);
        let m = interaction_matrix(
            &net,
            &assign(&[("x", Label::Minority), ("m", Label::Majority)]),
        );
        assert_eq!(m.from_totals[1], 4);
        assert_eq!(m.counts[1][0], 3);
        assert_abs_diff_eq!(m.share(Label::Minority, Label::Majority), 0.75, epsilon = 1e-12);
    }

    #[test]
    fn engagement_and_interaction_totals_agree_without_self_replies() {
        // build a small forest, aggregate it, and compare the labeled reply
        // count to the interaction-matrix from-label totals
        let records = vec![
            InteractionRecord::original("r", "seed", 0, ""),
            InteractionRecord::reply("a", "maj", 1, "r", "seed", ""),
            InteractionRecord::reply("b", "min", 2, "a", "maj", ""),
            InteractionRecord::reply("c", "maj", 3, "b", "min", ""),
            InteractionRecord::reply("d", "ghost", 4, "r", "seed", ""),
        ];
        let forest = forest_from(records, &["seed"]);
        let assignment = assign(&[
            ("maj", Label::Majority),
            ("min", Label::Minority),
            ("seed", Label::Majority),
        ]);
        let table = engagement_table(&forest, &assignment);
        let net = crate::forest::aggregate_reply_network(&forest);
        let matrix = interaction_matrix(&net, &assignment);
        let from_total: u64 = matrix.from_totals.iter().sum();
        assert_eq!(from_total, table.labeled_replies());
    }
}

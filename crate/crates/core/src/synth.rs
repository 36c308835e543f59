//! Seeded generator of ground-truth corpora: planted-partition retweet
//! behavior plus group-conditioned reply behavior.
//!
//! The retweet structure is a degree-corrected planted partition; per-user
//! activity follows a discrete power law (exponent 2.5, a fixture constant)
//! so layouts get realistic hubs. Pole groups retweet inside their own block
//! at the intra rate; intermediate users retweet both poles at the intra
//! rate, which places them between the poles in the layout. Reply trees grow
//! by preferential attachment (ticket sampling over tree sizes for roots,
//! recency-geometric selection for deeper targets) with a fixed first-order
//! fraction per group.

use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Geometric, Poisson, Zeta};
use serde::{Deserialize, Serialize};

use crate::classify::{ClusterAssignment, Label, Provenance};
use crate::error::{Error, Result};
use crate::ingest::SeedSet;
use crate::record::{InteractionRecord, UserId};

const ACTIVITY_EXPONENT: f64 = 2.5;
const ACTIVITY_CAP: f64 = 10_000.0;
const SEED_ACTIVITY_BOOST: f64 = 20.0;
const RECENCY_P: f64 = 0.1;
const ROOT_PHASE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub size: usize,
    pub seed_users: usize,
    /// Probability that a user writes any reply at all.
    pub activation: f64,
    /// Mean replies per active user, >= 1.
    pub mean_replies: f64,
    /// Target-group distribution for replies `[majority, minority,
    /// intermediate]`; sums to 1.
    pub preference: [f64; 3],
    /// Fraction of replies addressed directly to a root tweet.
    pub first_order_fraction: f64,
    /// Multiplier on the power-law retweet activity of the group's members.
    pub activity_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub majority: GroupSpec,
    pub minority: GroupSpec,
    pub intermediate: GroupSpec,
    /// Relative retweet rate within a block.
    pub retweet_intra_rate: f64,
    /// Relative retweet rate across blocks.
    pub retweet_cross_rate: f64,
    pub mean_retweets_per_user: f64,
    /// Mean root posts per seed user.
    pub roots_per_seed: f64,
    pub span_days: u32,
    pub seed: u64,
}

impl GeneratorParams {
    /// Preset mirroring the observed debate pattern: a 25% minority with
    /// roughly doubled reply activation and a 0.7 out-group reply
    /// preference, plus a small in-between group attached to both poles.
    pub fn paper_pattern(seed: u64) -> Self {
        GeneratorParams {
            majority: GroupSpec {
                size: 7000,
                seed_users: 30,
                activation: 0.2,
                mean_replies: 3.0,
                preference: [0.65, 0.20, 0.15],
                first_order_fraction: 0.40,
                activity_scale: 1.0,
            },
            minority: GroupSpec {
                size: 2500,
                seed_users: 15,
                activation: 0.4,
                mean_replies: 3.5,
                preference: [0.70, 0.25, 0.05],
                first_order_fraction: 0.55,
                activity_scale: 1.0,
            },
            intermediate: GroupSpec {
                size: 500,
                seed_users: 5,
                activation: 0.25,
                mean_replies: 3.0,
                preference: [0.55, 0.15, 0.30],
                first_order_fraction: 0.45,
                activity_scale: 3.0,
            },
            retweet_intra_rate: 10.0,
            retweet_cross_rate: 1.0,
            mean_retweets_per_user: 10.0,
            roots_per_seed: 40.0,
            span_days: 45,
            seed,
        }
    }

    /// A scaled-down variant of the paper pattern for quick end-to-end runs.
    pub fn small(seed: u64) -> Self {
        let mut p = Self::paper_pattern(seed);
        p.majority.size = 350;
        p.majority.seed_users = 6;
        p.minority.size = 125;
        p.minority.seed_users = 3;
        p.intermediate.size = 25;
        p.intermediate.seed_users = 1;
        p.roots_per_seed = 10.0;
        p.span_days = 20;
        p
    }

    pub fn groups(&self) -> [&GroupSpec; 3] {
        [&self.majority, &self.minority, &self.intermediate]
    }

    pub fn total_users(&self) -> usize {
        self.majority.size + self.minority.size + self.intermediate.size
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [
            ("majority", &self.majority),
            ("minority", &self.minority),
            ("intermediate", &self.intermediate),
        ] {
            if g.size < 1 {
                return Err(Error::Infeasible(format!("{name}: size must be >= 1")));
            }
            if g.seed_users > g.size {
                return Err(Error::Infeasible(format!(
                    "{name}: more seed users than members"
                )));
            }
            if !(0.0..=1.0).contains(&g.activation) {
                return Err(Error::Infeasible(format!(
                    "{name}: activation outside [0, 1]"
                )));
            }
            if !(0.0..=1.0).contains(&g.first_order_fraction) {
                return Err(Error::Infeasible(format!(
                    "{name}: first_order_fraction outside [0, 1]"
                )));
            }
            if g.activation > 0.0 && g.mean_replies < 1.0 {
                return Err(Error::Infeasible(format!(
                    "{name}: mean_replies must be >= 1 when users activate"
                )));
            }
            if !(g.activity_scale > 0.0) {
                return Err(Error::Infeasible(format!(
                    "{name}: activity_scale must be > 0"
                )));
            }
            let pref_sum: f64 = g.preference.iter().sum();
            if g.preference.iter().any(|&p| p < 0.0) || (pref_sum - 1.0).abs() > 1e-9 {
                return Err(Error::Infeasible(format!(
                    "{name}: preference must be a distribution"
                )));
            }
        }
        if !(self.retweet_intra_rate > 0.0) || self.retweet_cross_rate < 0.0 {
            return Err(Error::Infeasible("retweet rates invalid".into()));
        }
        if self.mean_retweets_per_user < 1.0 {
            return Err(Error::Infeasible(
                "mean_retweets_per_user must be >= 1".into(),
            ));
        }
        if self.span_days == 0 {
            return Err(Error::Infeasible("span_days must be >= 1".into()));
        }
        let replies_requested = self.groups().iter().any(|g| g.activation > 0.0);
        let total_seeds: usize = self.groups().iter().map(|g| g.seed_users).sum();
        if replies_requested && (total_seeds == 0 || self.roots_per_seed <= 0.0) {
            return Err(Error::Infeasible(
                "replies requested but no roots can exist (no seeds or roots_per_seed = 0)".into(),
            ));
        }
        Ok(())
    }
}

/// The generated archive plus its ground truth.
pub struct SynthCorpus {
    pub records: Vec<InteractionRecord>,
    pub truth: ClusterAssignment,
    pub seeds: SeedSet,
    pub params: GeneratorParams,
}

struct Users {
    /// Group index per user.
    group: Vec<usize>,
    /// Seed flag per user.
    is_seed: Vec<bool>,
    /// Activity weight prefix sums, one vector per group.
    act_cum: [Vec<f64>; 3],
    /// User indices per group (parallel to `act_cum` entries).
    members: [Vec<usize>; 3],
}

fn user_name(idx: usize) -> String {
    format!("u{idx:05}")
}

fn sample_member(users: &Users, group: usize, rng: &mut ChaCha8Rng) -> usize {
    let cum = &users.act_cum[group];
    let total = *cum.last().expect("non-empty group");
    let x = rng.random_range(0.0..total);
    let pos = cum.partition_point(|&c| c <= x);
    users.members[group][pos.min(users.members[group].len() - 1)]
}

fn sample_category(weights: &[f64; 3], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let x = rng.random_range(0.0..total);
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if x < acc {
            return i;
        }
    }
    2
}

fn poisson_count(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive mean");
    dist.sample(rng) as u64
}

/// Generates a corpus. Deterministic for a fixed parameter set: the same
/// params and seed produce an identical record list.
pub fn generate(params: &GeneratorParams) -> Result<SynthCorpus> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.total_users();
    let span_secs = params.span_days as i64 * 86_400;

    // users, groups, seeds, activity
    let mut group = Vec::with_capacity(n);
    let mut is_seed = Vec::with_capacity(n);
    for (g, spec) in params.groups().iter().enumerate() {
        for i in 0..spec.size {
            group.push(g);
            is_seed.push(i < spec.seed_users);
        }
    }
    let zeta = Zeta::new(ACTIVITY_EXPONENT).expect("valid exponent");
    let mut members: [Vec<usize>; 3] = Default::default();
    let mut act_cum: [Vec<f64>; 3] = Default::default();
    for u in 0..n {
        let mut act: f64 = zeta.sample(&mut rng).min(ACTIVITY_CAP);
        act *= params.groups()[group[u]].activity_scale;
        if is_seed[u] {
            act *= SEED_ACTIVITY_BOOST;
        }
        let g = group[u];
        let prev = act_cum[g].last().copied().unwrap_or(0.0);
        members[g].push(u);
        act_cum[g].push(prev + act);
    }
    let users = Users {
        group,
        is_seed,
        act_cum,
        members,
    };

    let mut records = Vec::new();
    let mut tweet_seq = 0usize;
    let next_tweet_id = |seq: &mut usize| {
        let id = format!("t{seq:08}");
        *seq += 1;
        id
    };

    // root posts by seed users, in the opening phase of the span
    // per-group: (tweet_id, author) plus a ticket pool for size-proportional
    // tree selection
    let mut roots: [Vec<(String, usize)>; 3] = Default::default();
    for u in 0..n {
        if !users.is_seed[u] {
            continue;
        }
        let count = poisson_count(params.roots_per_seed, &mut rng);
        for _ in 0..count {
            let id = next_tweet_id(&mut tweet_seq);
            roots[users.group[u]].push((id, u));
        }
    }
    let total_roots: usize = roots.iter().map(|r| r.len()).sum();
    let replies_requested = params
        .groups()
        .iter()
        .any(|g| g.activation > 0.0 && g.size > 0);
    if replies_requested && total_roots == 0 {
        return Err(Error::Infeasible(
            "no root posts were generated but replies are requested; raise roots_per_seed".into(),
        ));
    }
    let root_phase = ((span_secs as f64) * ROOT_PHASE_FRACTION) as i64;
    {
        let mut all_roots: Vec<(usize, &(String, usize))> = Vec::new();
        for g in 0..3 {
            for r in &roots[g] {
                all_roots.push((g, r));
            }
        }
        let step = (root_phase / (total_roots.max(1) as i64)).max(1);
        for (i, (_, (id, author))) in all_roots.iter().enumerate() {
            records.push(InteractionRecord::original(
                id.clone(),
                user_name(*author),
                (i as i64) * step,
                "",
            ));
        }
    }

    // reply events: each active user contributes 1 + Poisson(mean - 1)
    // replies; the event list is shuffled so trees grow with interleaved
    // authorship
    let mut reply_events: Vec<usize> = Vec::new();
    for u in 0..n {
        let spec = params.groups()[users.group[u]];
        if spec.activation > 0.0 && rng.random_bool(spec.activation) {
            let count = 1 + poisson_count(spec.mean_replies - 1.0, &mut rng);
            for _ in 0..count {
                reply_events.push(u);
            }
        }
    }
    use rand::seq::SliceRandom;
    reply_events.shuffle(&mut rng);

    // ticket pools per root group: one ticket per root plus one per attached
    // reply, so root selection is proportional to current tree size
    let mut tickets: [Vec<usize>; 3] = [
        (0..roots[0].len()).collect(),
        (0..roots[1].len()).collect(),
        (0..roots[2].len()).collect(),
    ];
    struct DeepCandidate {
        tweet_id: String,
        author: usize,
        root_group: usize,
        root_slot: usize,
    }
    // non-root tree tweets by author group, in creation order
    let mut deep_candidates: [Vec<DeepCandidate>; 3] = Default::default();
    let geometric = Geometric::new(RECENCY_P).expect("valid p");

    let reply_phase_start = root_phase;
    let reply_step = ((span_secs - reply_phase_start) / (reply_events.len().max(1) as i64)).max(1);
    let mut emitted_replies = 0i64;
    for &u in &reply_events {
        let spec = params.groups()[users.group[u]];
        // (parent tweet, parent author, tree root group, tree root slot)
        let mut parent: Option<(String, usize, usize, usize)> = None;
        for _attempt in 0..30 {
            let h = sample_category(&spec.preference, &mut rng);
            let first_order = rng.random_bool(spec.first_order_fraction);
            if !first_order && !deep_candidates[h].is_empty() {
                let len = deep_candidates[h].len();
                let offset = (geometric.sample(&mut rng) as usize).min(len - 1);
                let cand = &deep_candidates[h][len - 1 - offset];
                if cand.author != u {
                    parent = Some((
                        cand.tweet_id.clone(),
                        cand.author,
                        cand.root_group,
                        cand.root_slot,
                    ));
                    break;
                }
            } else if !roots[h].is_empty() {
                let slot = tickets[h][rng.random_range(0..tickets[h].len())];
                let (id, author) = &roots[h][slot];
                if *author != u {
                    parent = Some((id.clone(), *author, h, slot));
                    break;
                }
            }
        }
        let Some((parent_id, parent_author, root_group, root_slot)) = parent else {
            continue; // no eligible target; drop the event
        };
        let id = next_tweet_id(&mut tweet_seq);
        let ts = reply_phase_start + emitted_replies * reply_step;
        emitted_replies += 1;
        records.push(InteractionRecord::reply(
            id.clone(),
            user_name(u),
            ts,
            parent_id,
            user_name(parent_author),
            "",
        ));
        deep_candidates[users.group[u]].push(DeepCandidate {
            tweet_id: id,
            author: u,
            root_group,
            root_slot,
        });
        tickets[root_group].push(root_slot);
    }

    // retweets: every user emits one baseline retweet plus activity-weighted
    // extras, targets drawn from the planted block structure
    let rate = |g: usize, h: usize| -> f64 {
        match (g, h) {
            (2, 0) | (2, 1) => params.retweet_intra_rate,
            (2, 2) => params.retweet_cross_rate,
            _ if g == h => params.retweet_intra_rate,
            _ => params.retweet_cross_rate,
        }
    };
    let act_total =
        |g: usize| -> f64 { users.act_cum[g].last().copied().unwrap_or(0.0) };
    // pole users pick target groups with pair-probability semantics (rate
    // times group mass); intermediate users split between the two poles
    // evenly so they sit between them rather than lean toward the bigger
    // one, and keep a moderate internal structure that holds the in-between
    // band together
    let group_weights = |g: usize| -> [f64; 3] {
        if g == 2 {
            [
                params.retweet_intra_rate,
                params.retweet_intra_rate,
                params.retweet_intra_rate / 2.0,
            ]
        } else {
            [
                rate(g, 0) * act_total(0),
                rate(g, 1) * act_total(1),
                rate(g, 2) * act_total(2),
            ]
        }
    };
    let mut retweet_sources: Vec<usize> = (0..n).collect();
    let extras = ((params.mean_retweets_per_user - 1.0) * n as f64).round() as usize;
    for _ in 0..extras {
        // activity-weighted over the whole population: pick group by mass,
        // then member
        let weights = [act_total(0), act_total(1), act_total(2)];
        let g = sample_category(&weights, &mut rng);
        retweet_sources.push(sample_member(&users, g, &mut rng));
    }
    let rt_step = (span_secs / (retweet_sources.len().max(1) as i64)).max(1);
    let mut ext_seq = 0usize;
    for (i, &src) in retweet_sources.iter().enumerate() {
        let g = users.group[src];
        let weights = group_weights(g);
        let mut target = src;
        for _ in 0..30 {
            let h = sample_category(&weights, &mut rng);
            let cand = sample_member(&users, h, &mut rng);
            if cand != src {
                target = cand;
                break;
            }
        }
        if target == src {
            continue;
        }
        let id = next_tweet_id(&mut tweet_seq);
        let ext = format!("ext{ext_seq:08}");
        ext_seq += 1;
        records.push(InteractionRecord::retweet(
            id,
            user_name(src),
            (i as i64) * rt_step,
            ext,
            user_name(target),
            "",
        ));
    }

    // ground truth and seed set
    let mut truth = ClusterAssignment::new();
    for u in 0..n {
        truth.set(
            UserId::new(user_name(u)),
            Label::from_group_index(users.group[u]),
            Provenance::EventNetwork,
        );
    }
    let seeds = SeedSet::new(
        (0..n)
            .filter(|&u| users.is_seed[u])
            .map(|u| UserId::new(user_name(u))),
    )?;

    Ok(SynthCorpus {
        records,
        truth,
        seeds,
        params: *params,
    })
}

//! Reply tree reconstruction, tree metrics, and reply-network aggregation.
//!
//! Trees are rooted at seed-authored original posts. Building is two-pass
//! (index everything, then attach via parent pointers), so the result does
//! not depend on record order.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::classify::ClusterAssignment;
use crate::error::{Error, Result};
use crate::graph::InteractionGraph;
use crate::ingest::{ParseMode, SeedSet};
use crate::record::{InteractionRecord, RecordKind, TweetId, UserId};

/// One node of a reply tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub tweet_id: TweetId,
    pub author_id: UserId,
    pub created_at: i64,
    /// `None` for the root.
    pub parent: Option<TweetId>,
}

/// A root post plus all transitively attached replies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplyTree {
    root: InteractionRecord,
    nodes: HashMap<TweetId, TreeNode>,
    children: HashMap<TweetId, Vec<TweetId>>,
}

impl ReplyTree {
    fn new(root: InteractionRecord) -> Self {
        let mut nodes = HashMap::new();
        nodes.insert(
            root.tweet_id.clone(),
            TreeNode {
                tweet_id: root.tweet_id.clone(),
                author_id: root.author_id.clone(),
                created_at: root.created_at,
                parent: None,
            },
        );
        ReplyTree {
            root,
            nodes,
            children: HashMap::new(),
        }
    }

    fn attach(&mut self, rec: &InteractionRecord) {
        let parent = rec.ref_tweet_id.clone().expect("reply has a parent id");
        self.nodes.insert(
            rec.tweet_id.clone(),
            TreeNode {
                tweet_id: rec.tweet_id.clone(),
                author_id: rec.author_id.clone(),
                created_at: rec.created_at,
                parent: Some(parent.clone()),
            },
        );
        self.children
            .entry(parent)
            .or_default()
            .push(rec.tweet_id.clone());
    }

    fn sort_children(&mut self) {
        let by_time: HashMap<TweetId, (i64, TweetId)> = self
            .nodes
            .values()
            .map(|n| (n.tweet_id.clone(), (n.created_at, n.tweet_id.clone())))
            .collect();
        for kids in self.children.values_mut() {
            kids.sort_by_key(|id| by_time[id].clone());
        }
    }

    pub fn root(&self) -> &InteractionRecord {
        &self.root
    }

    pub fn root_id(&self) -> &TweetId {
        &self.root.tweet_id
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: &TweetId) -> Option<&TreeNode> {
        self.nodes.get(id)
    }

    pub fn children_of(&self, id: &TweetId) -> &[TweetId] {
        self.children.get(id).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Nodes in breadth-first order starting at the root; the second element
    /// is the node depth in edges.
    pub fn iter_bfs(&self) -> Vec<(&TreeNode, usize)> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut queue = std::collections::VecDeque::new();
        queue.push_back((&self.root.tweet_id, 0usize));
        while let Some((id, depth)) = queue.pop_front() {
            out.push((&self.nodes[id], depth));
            for kid in self.children_of(id) {
                queue.push_back((kid, depth + 1));
            }
        }
        out
    }

    pub fn metrics(&self) -> TreeMetrics {
        tree_metrics(self)
    }
}

/// Size, depth, and first-order reply count of a tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeMetrics {
    /// Number of tweets in the tree, root included.
    pub size: u64,
    /// Longest root-to-leaf path, in edges.
    pub depth: u64,
    /// Direct replies to the root.
    pub first_order: u64,
}

pub fn tree_metrics(tree: &ReplyTree) -> TreeMetrics {
    let mut size = 0u64;
    let mut depth = 0u64;
    for (_, d) in tree.iter_bfs() {
        size += 1;
        depth = depth.max(d as u64);
    }
    TreeMetrics {
        size,
        depth,
        first_order: tree.children_of(tree.root_id()).len() as u64,
    }
}

/// Why a reply record did not end up attached to any tree.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestTallies {
    /// Replies whose parent chain hits a tweet absent from the corpus.
    pub orphans: u64,
    /// Replies whose chain terminates outside the seed forest (a non-seed
    /// original, or a non-reply record).
    pub foreign: u64,
    /// Replies dropped because their timestamp precedes their parent's
    /// (descendants of a dropped reply included).
    pub timestamp_violations: u64,
    /// Duplicate tweet ids skipped in lenient mode.
    pub duplicates: u64,
    /// Attached replies whose author equals the parent author (kept in the
    /// tree; produce no reply-network edge).
    pub self_replies: u64,
    /// Replies attached across all trees.
    pub attached: u64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Attach {
    /// Attached under the tree with the given root index.
    InTree(usize),
    Orphan,
    Foreign,
    TsDropped,
}

/// Builds one tree per seed-authored original post and attaches every reply
/// whose parent chain reaches such a root.
///
/// Records must be de-duplicated by tweet id; in strict mode a duplicate is
/// an error, in lenient mode the first occurrence wins and the rest are
/// tallied. Trees are returned sorted by root tweet id.
pub fn build_forest(
    records: &[InteractionRecord],
    seeds: &SeedSet,
    mode: ParseMode,
) -> Result<(Vec<ReplyTree>, ForestTallies)> {
    let mut tallies = ForestTallies::default();

    // first pass: de-duplicated record index
    let mut recs: Vec<&InteractionRecord> = Vec::with_capacity(records.len());
    let mut idx_of: HashMap<&TweetId, usize> = HashMap::with_capacity(records.len());
    for rec in records {
        if idx_of.contains_key(&rec.tweet_id) {
            if mode == ParseMode::Strict {
                return Err(Error::DuplicateTweetId(rec.tweet_id.as_str().to_owned()));
            }
            tallies.duplicates += 1; // lenient: first occurrence wins
            continue;
        }
        idx_of.insert(&rec.tweet_id, recs.len());
        recs.push(rec);
    }

    // roots sorted by tweet id for a deterministic forest order
    let mut root_recs: Vec<usize> = recs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.kind == RecordKind::Original && seeds.contains(&r.author_id))
        .map(|(i, _)| i)
        .collect();
    root_recs.sort_by(|&a, &b| recs[a].tweet_id.cmp(&recs[b].tweet_id));
    let mut tree_of: Vec<Option<usize>> = vec![None; recs.len()];
    for (slot, &rec_idx) in root_recs.iter().enumerate() {
        tree_of[rec_idx] = Some(slot);
    }

    // second pass: resolve each reply by walking the parent chain; the
    // outcome is memoized so every link is walked once
    let mut status: Vec<Option<Attach>> = vec![None; recs.len()];
    for (slot, &rec_idx) in root_recs.iter().enumerate() {
        status[rec_idx] = Some(Attach::InTree(slot));
    }
    let resolve = |start: usize, status: &mut Vec<Option<Attach>>| -> Attach {
        let mut chain: Vec<usize> = Vec::new();
        let mut cursor = start;
        let outcome = loop {
            if let Some(s) = status[cursor] {
                break s;
            }
            let rec = recs[cursor];
            match rec.kind {
                RecordKind::Original => break Attach::Foreign, // non-seed original
                RecordKind::Retweet => break Attach::Foreign,
                RecordKind::Reply => {
                    let parent_id = rec.ref_tweet_id.as_ref().expect("reply has parent");
                    match idx_of.get(parent_id) {
                        None => {
                            chain.push(cursor);
                            break Attach::Orphan;
                        }
                        Some(&p) => {
                            chain.push(cursor);
                            if rec.created_at < recs[p].created_at {
                                break Attach::TsDropped;
                            }
                            cursor = p;
                        }
                    }
                }
            }
        };
        for idx in chain {
            status[idx] = Some(outcome);
        }
        outcome
    };

    let mut trees: Vec<ReplyTree> = root_recs
        .iter()
        .map(|&i| ReplyTree::new(recs[i].clone()))
        .collect();

    let mut reply_order: Vec<usize> = (0..recs.len())
        .filter(|&i| recs[i].kind == RecordKind::Reply)
        .collect();
    reply_order.sort_by(|&a, &b| recs[a].tweet_id.cmp(&recs[b].tweet_id));
    for idx in reply_order {
        let rec = recs[idx];
        match resolve(idx, &mut status) {
            Attach::InTree(slot) => {
                trees[slot].attach(rec);
                tallies.attached += 1;
                let parent_idx = idx_of[rec.ref_tweet_id.as_ref().unwrap()];
                if rec.author_id == recs[parent_idx].author_id {
                    tallies.self_replies += 1;
                }
            }
            Attach::Orphan => tallies.orphans += 1,
            Attach::Foreign => tallies.foreign += 1,
            Attach::TsDropped => tallies.timestamp_violations += 1,
        }
    }

    for tree in &mut trees {
        tree.sort_children();
    }
    Ok((trees, tallies))
}

/// Complementary cumulative distribution: for each distinct value `v`, the
/// fraction of inputs `>= v`. Monotone non-increasing; the minimum value maps
/// to 1.
pub fn ccdf(values: &[u64]) -> Result<Vec<(u64, f64)>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("ccdf values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let ge = sorted.len() - i;
        out.push((v, ge as f64 / n));
        while i < sorted.len() && sorted[i] == v {
            i += 1;
        }
    }
    Ok(out)
}

/// Aggregates all direct-reply pairs into one directed network: an edge from
/// the reply author to the parent author per attached reply. Self-replies
/// land in the graph's self-loop tally.
pub fn aggregate_reply_network(forest: &[ReplyTree]) -> InteractionGraph {
    let mut g = InteractionGraph::new();
    for tree in forest {
        for (node, _) in tree.iter_bfs() {
            if let Some(parent_id) = &node.parent {
                let parent_author = &tree.nodes[parent_id].author_id;
                g.add_interaction(&node.author_id, parent_author);
            }
        }
    }
    g
}

/// Distinct authors of attached replies (root authors excluded unless they
/// also replied somewhere).
pub fn reply_authors(forest: &[ReplyTree]) -> std::collections::BTreeSet<UserId> {
    forest
        .iter()
        .flat_map(|t| {
            t.iter_bfs()
                .into_iter()
                .filter(|(n, _)| n.parent.is_some())
                .map(|(n, _)| n.author_id.clone())
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Every user present in the reply trees: root authors and reply authors.
/// This is the user set whose classification is imported from the retweet
/// networks.
pub fn tree_participants(forest: &[ReplyTree]) -> std::collections::BTreeSet<UserId> {
    forest
        .iter()
        .flat_map(|t| {
            t.iter_bfs()
                .into_iter()
                .map(|(n, _)| n.author_id.clone())
                .collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct TreeExport {
    root_id: TweetId,
    root_author: UserId,
    root_created_at: i64,
    root_text: String,
    nodes: Vec<TreeNodeExport>,
}

#[derive(Serialize, Deserialize)]
struct TreeNodeExport {
    tweet_id: TweetId,
    parent: Option<TweetId>,
    author_id: UserId,
    created_at: i64,
    depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

/// Writes one JSON object per tree: ids, parent pointers, authors, and, when
/// an assignment is given, per-node cluster labels. Nodes are in BFS order.
pub fn write_trees(
    mut w: impl Write,
    forest: &[ReplyTree],
    assignment: Option<&ClusterAssignment>,
) -> Result<()> {
    for tree in forest {
        let nodes = tree
            .iter_bfs()
            .into_iter()
            .map(|(n, depth)| TreeNodeExport {
                tweet_id: n.tweet_id.clone(),
                parent: n.parent.clone(),
                author_id: n.author_id.clone(),
                created_at: n.created_at,
                depth,
                label: assignment.map(|a| a.label_of(&n.author_id).to_string()),
            })
            .collect();
        let export = TreeExport {
            root_id: tree.root.tweet_id.clone(),
            root_author: tree.root.author_id.clone(),
            root_created_at: tree.root.created_at,
            root_text: tree.root.text.clone(),
            nodes,
        };
        serde_json::to_writer(&mut w, &export).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads the `write_trees` format back into trees (labels are ignored).
pub fn read_trees(reader: impl BufRead) -> Result<Vec<ReplyTree>> {
    let mut forest = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let export: TreeExport = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        let root = InteractionRecord::original(
            export.root_id.as_str(),
            export.root_author.as_str(),
            export.root_created_at,
            export.root_text.clone(),
        );
        let mut tree = ReplyTree::new(root);
        for n in export.nodes {
            if n.parent.is_none() {
                continue; // the root node entry
            }
            tree.nodes.insert(
                n.tweet_id.clone(),
                TreeNode {
                    tweet_id: n.tweet_id.clone(),
                    author_id: n.author_id,
                    created_at: n.created_at,
                    parent: n.parent.clone(),
                },
            );
            tree.children
                .entry(n.parent.unwrap())
                .or_default()
                .push(n.tweet_id);
        }
        tree.sort_children();
        forest.push(tree);
    }
    Ok(forest)
}

/// Writes `tree_id,S,D,first_order` rows sorted by tree id.
pub fn write_metrics_csv(mut w: impl Write, forest: &[ReplyTree]) -> Result<()> {
    writeln!(w, "tree_id,S,D,first_order")?;
    for tree in forest {
        let m = tree.metrics();
        writeln!(
            w,
            "{},{},{},{}",
            tree.root_id(),
            m.size,
            m.depth,
            m.first_order
        )?;
    }
    Ok(())
}

/// Ordered per-tree metrics, useful for the CCDFs.
pub fn forest_metrics(forest: &[ReplyTree]) -> Vec<TreeMetrics> {
    forest.iter().map(|t| t.metrics()).collect()
}

//! Weighted directed interaction graph over user ids.
//!
//! Nodes are interned to dense indices in insertion order; adjacency is kept
//! in both directions. Self-interactions are dropped and tallied. After
//! construction the graph is immutable and freely shareable across threads.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::record::{InteractionRecord, RecordKind, UserId};

#[derive(Debug, Clone, Default)]
pub struct InteractionGraph {
    ids: Vec<UserId>,
    index: HashMap<UserId, usize>,
    out: Vec<BTreeMap<usize, u64>>,
    inn: Vec<BTreeMap<usize, u64>>,
    self_loops: u64,
    total_weight: u64,
}

impl InteractionGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the retweet network: one unit of weight from the retweeter to
    /// the retweeted author for every retweet record.
    pub fn retweet_network(records: &[InteractionRecord]) -> Self {
        let mut g = InteractionGraph::new();
        for rec in records {
            if rec.kind == RecordKind::Retweet {
                if let Some(target) = &rec.ref_user_id {
                    g.add_interaction(&rec.author_id, target);
                }
            }
        }
        g
    }

    /// Interns a node, returning its index.
    pub fn add_node(&mut self, id: &UserId) -> usize {
        if let Some(&idx) = self.index.get(id) {
            return idx;
        }
        let idx = self.ids.len();
        self.ids.push(id.clone());
        self.index.insert(id.clone(), idx);
        self.out.push(BTreeMap::new());
        self.inn.push(BTreeMap::new());
        idx
    }

    /// Increments the edge `src -> dst` by one. A self-interaction leaves
    /// the graph unchanged and bumps the self-loop tally.
    pub fn add_interaction(&mut self, src: &UserId, dst: &UserId) {
        if src == dst {
            self.self_loops += 1;
            return;
        }
        self.add_weighted(src, dst, 1);
    }

    /// Adds `w` units of weight to the edge `src -> dst`.
    pub fn add_weighted(&mut self, src: &UserId, dst: &UserId, w: u64) {
        if w == 0 {
            return;
        }
        if src == dst {
            self.self_loops += w;
            return;
        }
        let s = self.add_node(src);
        let d = self.add_node(dst);
        *self.out[s].entry(d).or_insert(0) += w;
        *self.inn[d].entry(s).or_insert(0) += w;
        self.total_weight += w;
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    /// Number of distinct directed edges.
    pub fn edge_count(&self) -> usize {
        self.out.iter().map(|m| m.len()).sum()
    }

    /// Sum of all edge weights (total interactions, self-loops excluded).
    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn self_loop_tally(&self) -> u64 {
        self.self_loops
    }

    pub fn node_id(&self, idx: usize) -> &UserId {
        &self.ids[idx]
    }

    pub fn node_index(&self, id: &UserId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &UserId) -> bool {
        self.index.contains_key(id)
    }

    pub fn user_ids(&self) -> impl Iterator<Item = &UserId> {
        self.ids.iter()
    }

    pub fn out_edges(&self, idx: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.out[idx].iter().map(|(&j, &w)| (j, w))
    }

    pub fn in_edges(&self, idx: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.inn[idx].iter().map(|(&j, &w)| (j, w))
    }

    /// Directed edges as `(src, dst, weight)`, ordered by `(src, dst)` index.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, m)| m.iter().map(move |(&j, &w)| (i, j, w)))
    }

    pub fn weight(&self, src: &UserId, dst: &UserId) -> u64 {
        match (self.node_index(src), self.node_index(dst)) {
            (Some(s), Some(d)) => self.out[s].get(&d).copied().unwrap_or(0),
            _ => 0,
        }
    }

    /// Structural degree: number of incident directed edges.
    pub fn degree(&self, idx: usize) -> usize {
        self.out[idx].len() + self.inn[idx].len()
    }

    pub fn weighted_out_degree(&self, idx: usize) -> u64 {
        self.out[idx].values().sum()
    }

    pub fn weighted_in_degree(&self, idx: usize) -> u64 {
        self.inn[idx].values().sum()
    }

    /// Undirected view: neighbors with summed weights in both directions.
    pub fn undirected_neighbors(&self, idx: usize) -> BTreeMap<usize, u64> {
        let mut nbrs = self.out[idx].clone();
        for (&j, &w) in &self.inn[idx] {
            *nbrs.entry(j).or_insert(0) += w;
        }
        nbrs
    }

    /// Weakly connected components of the undirected projection.
    ///
    /// Component 0 is the largest; ties broken by the smallest contained
    /// user id. Remaining components are ordered by decreasing size with the
    /// same tie-break.
    pub fn weak_components(&self) -> ComponentLabeling {
        let n = self.node_count();
        let mut raw = vec![usize::MAX; n];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for start in 0..n {
            if raw[start] != usize::MAX {
                continue;
            }
            let cid = comps.len();
            let mut members = vec![start];
            raw[start] = cid;
            let mut queue = vec![start];
            while let Some(u) = queue.pop() {
                for (&v, _) in self.out[u].iter().chain(self.inn[u].iter()) {
                    if raw[v] == usize::MAX {
                        raw[v] = cid;
                        members.push(v);
                        queue.push(v);
                    }
                }
            }
            comps.push(members);
        }
        // order: size desc, then smallest contained user id asc
        let mut order: Vec<usize> = (0..comps.len()).collect();
        let min_id = |c: &Vec<usize>| c.iter().map(|&i| &self.ids[i]).min().unwrap().clone();
        let keys: Vec<(usize, UserId)> = comps.iter().map(|c| (c.len(), min_id(c))).collect();
        order.sort_by(|&a, &b| {
            keys[b].0.cmp(&keys[a].0).then_with(|| keys[a].1.cmp(&keys[b].1))
        });
        let mut relabel = vec![0usize; comps.len()];
        for (new, &old) in order.iter().enumerate() {
            relabel[old] = new;
        }
        let labels: Vec<usize> = raw.into_iter().map(|c| relabel[c]).collect();
        let mut sizes = vec![0usize; comps.len()];
        for &l in &labels {
            sizes[l] += 1;
        }
        ComponentLabeling { labels, sizes }
    }

    /// Induced subgraph on `keep`; weights preserved, self-loop tally reset.
    pub fn restrict(&self, keep: &HashSet<UserId>) -> InteractionGraph {
        let mut g = InteractionGraph::new();
        for (idx, id) in self.ids.iter().enumerate() {
            if !keep.contains(id) {
                continue;
            }
            g.add_node(id);
            for (&j, &w) in &self.out[idx] {
                if keep.contains(&self.ids[j]) {
                    g.add_weighted(id, &self.ids[j], w);
                }
            }
        }
        g
    }

    /// The giant (largest weakly connected) component as an induced subgraph.
    pub fn giant_component(&self) -> InteractionGraph {
        let labeling = self.weak_components();
        let keep: HashSet<UserId> = labeling
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == 0)
            .map(|(i, _)| self.ids[i].clone())
            .collect();
        self.restrict(&keep)
    }

    /// Writes `src<TAB>dst<TAB>weight` lines sorted by user id.
    pub fn write_edge_list(&self, mut w: impl Write) -> Result<()> {
        let mut rows: Vec<(&UserId, &UserId, u64)> = self
            .edges()
            .map(|(i, j, wt)| (&self.ids[i], &self.ids[j], wt))
            .collect();
        rows.sort();
        for (src, dst, wt) in rows {
            for id in [src, dst] {
                if id.as_str().contains(['\t', '\n']) {
                    return Err(Error::Format(format!(
                        "user id {id:?} contains a tab or newline"
                    )));
                }
            }
            writeln!(w, "{src}\t{dst}\t{wt}")?;
        }
        // isolated nodes exported as bare ids so restriction round-trips
        let mut isolated: Vec<&UserId> = (0..self.node_count())
            .filter(|&i| self.degree(i) == 0)
            .map(|i| &self.ids[i])
            .collect();
        isolated.sort();
        for id in isolated {
            writeln!(w, "{id}")?;
        }
        Ok(())
    }

    /// Reads the `write_edge_list` format.
    pub fn read_edge_list(reader: impl BufRead) -> Result<Self> {
        let mut g = InteractionGraph::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                [id] => {
                    g.add_node(&UserId::new(*id));
                }
                [src, dst, wt] => {
                    let wt: u64 = wt.parse().map_err(|_| Error::Parse {
                        line: idx + 1,
                        message: format!("bad weight {wt:?}"),
                    })?;
                    g.add_weighted(&UserId::new(*src), &UserId::new(*dst), wt);
                }
                _ => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: "expected `src<TAB>dst<TAB>weight` or a bare node id".into(),
                    })
                }
            }
        }
        Ok(g)
    }

    /// GraphML export with optional per-node cluster labels and coordinates.
    pub fn write_graphml(
        &self,
        mut w: impl Write,
        label_of: impl Fn(&UserId) -> Option<String>,
        position_of: impl Fn(&UserId) -> Option<(f64, f64)>,
    ) -> Result<()> {
        writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
        writeln!(
            w,
            r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">"#
        )?;
        writeln!(
            w,
            r#"  <key id="label" for="node" attr.name="label" attr.type="string"/>"#
        )?;
        writeln!(w, r#"  <key id="x" for="node" attr.name="x" attr.type="double"/>"#)?;
        writeln!(w, r#"  <key id="y" for="node" attr.name="y" attr.type="double"/>"#)?;
        writeln!(
            w,
            r#"  <key id="weight" for="edge" attr.name="weight" attr.type="long"/>"#
        )?;
        writeln!(w, r#"  <graph edgedefault="directed">"#)?;
        let mut order: Vec<usize> = (0..self.node_count()).collect();
        order.sort_by(|&a, &b| self.ids[a].cmp(&self.ids[b]));
        for idx in &order {
            let id = &self.ids[*idx];
            let esc = xml_escape(id.as_str());
            writeln!(w, r#"    <node id="{esc}">"#)?;
            if let Some(label) = label_of(id) {
                writeln!(w, r#"      <data key="label">{}</data>"#, xml_escape(&label))?;
            }
            if let Some((x, y)) = position_of(id) {
                writeln!(w, r#"      <data key="x">{x}</data>"#)?;
                writeln!(w, r#"      <data key="y">{y}</data>"#)?;
            }
            writeln!(w, r#"    </node>"#)?;
        }
        let mut rows: Vec<(&UserId, &UserId, u64)> = self
            .edges()
            .map(|(i, j, wt)| (&self.ids[i], &self.ids[j], wt))
            .collect();
        rows.sort();
        for (src, dst, wt) in rows {
            writeln!(
                w,
                r#"    <edge source="{}" target="{}"><data key="weight">{wt}</data></edge>"#,
                xml_escape(src.as_str()),
                xml_escape(dst.as_str())
            )?;
        }
        writeln!(w, r#"  </graph>"#)?;
        writeln!(w, r#"</graphml>"#)?;
        Ok(())
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Partition of the node set into weakly connected components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    /// Component id per node index; the giant component has id 0.
    pub labels: Vec<usize>,
    /// Member count per component id.
    pub sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn giant_size(&self) -> usize {
        self.sizes.first().copied().unwrap_or(0)
    }
}

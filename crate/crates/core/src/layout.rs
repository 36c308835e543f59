//! Deterministic force-directed spatialization of interaction networks.
//!
//! Forces per iteration: linear attraction along edges (optionally scaled by
//! edge weight), degree-weighted pairwise repulsion `k_r (deg+1)(deg'+1)/d`,
//! and gravity `k_g (deg+1)` toward the origin. The global speed adapts via
//! the swing/traction ratio with per-node swing damping. Runs are
//! reproducible: a fixed (graph, params, seed) triple gives bit-identical
//! positions regardless of worker count, because every node's force is
//! accumulated independently against an immutable position snapshot.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::InteractionGraph;
use crate::record::UserId;

/// Exponent on edge weights in the attraction term: `None` ignores weights,
/// `Linear` multiplies attraction by the weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightInfluence {
    None,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepulsionMode {
    /// Exact below [`LayoutParams::barnes_hut_threshold`] nodes, Barnes-Hut above.
    Auto,
    Exact,
    BarnesHut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    /// Repulsion scaling, > 0.
    pub repulsion: f64,
    /// Gravity strength, >= 0.
    pub gravity: f64,
    pub iterations: usize,
    /// Jitter tolerance of the adaptive speed.
    pub tolerance: f64,
    pub lin_log: bool,
    pub weight_influence: WeightInfluence,
    pub repulsion_mode: RepulsionMode,
    /// Barnes-Hut opening angle.
    pub theta: f64,
    /// Node count above which `Auto` switches to Barnes-Hut.
    pub barnes_hut_threshold: usize,
    /// Worker threads for force accumulation; 0 and 1 run sequentially.
    pub threads: usize,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            repulsion: 2.0,
            gravity: 1.0,
            iterations: 200,
            tolerance: 1.0,
            lin_log: false,
            weight_influence: WeightInfluence::Linear,
            repulsion_mode: RepulsionMode::Auto,
            theta: 0.5,
            barnes_hut_threshold: 5000,
            threads: 1,
        }
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.repulsion > 0.0) {
            return Err(Error::InvalidParameter("repulsion must be > 0".into()));
        }
        if !(self.gravity >= 0.0) {
            return Err(Error::InvalidParameter("gravity must be >= 0".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be > 0".into()));
        }
        if !(self.theta > 0.0) {
            return Err(Error::InvalidParameter("theta must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutMeta {
    pub iterations: usize,
    pub mean_displacement: f64,
    pub seed: u64,
    pub params: LayoutParams,
}

/// 2-D coordinates per node.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutEmbedding {
    ids: Vec<UserId>,
    positions: Vec<(f64, f64)>,
    index: HashMap<UserId, usize>,
    pub meta: Option<LayoutMeta>,
}

impl LayoutEmbedding {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (UserId, (f64, f64))>) -> Self {
        let mut ids = Vec::new();
        let mut positions = Vec::new();
        let mut index = HashMap::new();
        for (id, pos) in pairs {
            if index.contains_key(&id) {
                continue;
            }
            index.insert(id.clone(), ids.len());
            ids.push(id);
            positions.push(pos);
        }
        LayoutEmbedding {
            ids,
            positions,
            index,
            meta: None,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn position_of(&self, id: &UserId) -> Option<(f64, f64)> {
        self.index.get(id).map(|&i| self.positions[i])
    }

    pub fn contains(&self, id: &UserId) -> bool {
        self.index.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&UserId, (f64, f64))> {
        self.ids.iter().zip(self.positions.iter().copied())
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    /// Writes `node_id,x,y` rows sorted by node id. Floats use the shortest
    /// round-trippable decimal form.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "node_id,x,y")?;
        let mut order: Vec<usize> = (0..self.ids.len()).collect();
        order.sort_by(|&a, &b| self.ids[a].cmp(&self.ids[b]));
        for i in order {
            let id = &self.ids[i];
            if id.as_str().contains([',', '\n']) {
                return Err(Error::Format(format!(
                    "user id {id:?} contains a comma or newline"
                )));
            }
            let (x, y) = self.positions[i];
            writeln!(w, "{id},{x},{y}")?;
        }
        Ok(())
    }

    /// Reads the `write_csv` format (header optional), e.g. embeddings
    /// produced by external layout tools.
    pub fn read_csv(reader: impl BufRead) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || (idx == 0 && line.starts_with("node_id")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: "expected node_id,x,y".into(),
                });
            }
            let x: f64 = fields[1].parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("bad x {:?}", fields[1]),
            })?;
            let y: f64 = fields[2].parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("bad y {:?}", fields[2]),
            })?;
            pairs.push((UserId::new(fields[0]), (x, y)));
        }
        Ok(LayoutEmbedding::from_pairs(pairs))
    }
}

// Adaptive-speed constants of the published algorithm.
const KS: f64 = 0.1;
const KS_MAX: f64 = 10.0;
const SPEED_RISE_CAP: f64 = 1.5;

/// Seeded initial positions: uniform in a square whose side grows with the
/// node count.
fn initial_positions(n: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let side = 100.0 * (n as f64).sqrt().max(1.0) / 10.0;
    let half = side.max(100.0) / 2.0;
    (0..n)
        .map(|_| {
            (
                rng.random_range(-half..half),
                rng.random_range(-half..half),
            )
        })
        .collect()
}

/// Spatializes the graph from seeded random initial positions.
pub fn spatialize(graph: &InteractionGraph, params: &LayoutParams, seed: u64) -> Result<LayoutEmbedding> {
    params.validate()?;
    if graph.node_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = initial_positions(graph.node_count(), &mut rng);
    spatialize_with_initial(graph, params, seed, initial)
}

/// Spatializes from caller-provided initial positions (one per node, in node
/// index order). The seed only feeds the duplicate-position jitter.
pub fn spatialize_with_initial(
    graph: &InteractionGraph,
    params: &LayoutParams,
    seed: u64,
    initial: Vec<(f64, f64)>,
) -> Result<LayoutEmbedding> {
    params.validate()?;
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if initial.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{} initial positions for {n} nodes",
            initial.len()
        )));
    }

    let masses: Vec<f64> = (0..n).map(|i| (graph.degree(i) + 1) as f64).collect();
    let use_barnes_hut = match params.repulsion_mode {
        RepulsionMode::Exact => false,
        RepulsionMode::BarnesHut => true,
        RepulsionMode::Auto => n > params.barnes_hut_threshold,
    };

    let mut jitter_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6a69_7474_6572);
    let mut positions = initial;
    let mut prev_forces = vec![(0.0, 0.0); n];
    let mut global_speed = 1.0f64;
    let mut mean_displacement = 0.0f64;

    let pool = build_pool(params.threads);

    for iteration in 0..params.iterations {
        jitter_duplicates(&mut positions, &mut jitter_rng);

        let forces = compute_forces(graph, params, &positions, &masses, use_barnes_hut, pool.as_ref());

        // adaptive global speed from swing vs traction
        let mut swing_sum = 0.0;
        let mut traction_sum = 0.0;
        for i in 0..n {
            let (fx, fy) = forces[i];
            let (px, py) = prev_forces[i];
            let swing = (fx - px).hypot(fy - py);
            let traction = 0.5 * (fx + px).hypot(fy + py);
            swing_sum += masses[i] * swing;
            traction_sum += masses[i] * traction;
        }
        if swing_sum > 0.0 {
            let target = params.tolerance * traction_sum / swing_sum;
            global_speed = target.min(global_speed * SPEED_RISE_CAP);
        }

        let mut displacement_sum = 0.0;
        for i in 0..n {
            let (fx, fy) = forces[i];
            let (px, py) = prev_forces[i];
            let swing = (fx - px).hypot(fy - py);
            let mut speed = KS * global_speed / (1.0 + global_speed * swing.sqrt());
            let norm = fx.hypot(fy);
            if norm > 0.0 {
                speed = speed.min(KS_MAX / norm);
            }
            positions[i].0 += fx * speed;
            positions[i].1 += fy * speed;
            displacement_sum += norm * speed;
            if !positions[i].0.is_finite() || !positions[i].1.is_finite() {
                return Err(Error::NumericalBlowup { iteration });
            }
        }
        mean_displacement = displacement_sum / n as f64;
        prev_forces = forces;
    }

    let ids: Vec<UserId> = graph.user_ids().cloned().collect();
    let index: HashMap<UserId, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i))
        .collect();
    Ok(LayoutEmbedding {
        ids,
        positions,
        index,
        meta: Some(LayoutMeta {
            iterations: params.iterations,
            mean_displacement,
            seed,
            params: params.clone(),
        }),
    })
}

fn build_pool(threads: usize) -> Option<rayon::ThreadPool> {
    if threads > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .ok()
    } else {
        None
    }
}

/// Coincident nodes would see an undefined repulsion direction; displace
/// every duplicate by seeded noise before the force pass.
fn jitter_duplicates(positions: &mut [(f64, f64)], rng: &mut ChaCha8Rng) {
    let mut seen: HashMap<(u64, u64), usize> = HashMap::with_capacity(positions.len());
    for i in 0..positions.len() {
        loop {
            let key = (positions[i].0.to_bits(), positions[i].1.to_bits());
            match seen.get(&key) {
                None => {
                    seen.insert(key, i);
                    break;
                }
                Some(_) => {
                    positions[i].0 += rng.random_range(-1e-6..1e-6);
                    positions[i].1 += rng.random_range(-1e-6..1e-6);
                }
            }
        }
    }
}

fn compute_forces(
    graph: &InteractionGraph,
    params: &LayoutParams,
    positions: &[(f64, f64)],
    masses: &[f64],
    use_barnes_hut: bool,
    pool: Option<&rayon::ThreadPool>,
) -> Vec<(f64, f64)> {
    let tree = use_barnes_hut.then(|| quadtree::QuadTree::build(positions, masses));

    let force_of = |i: usize| -> (f64, f64) {
        let (xi, yi) = positions[i];
        let mut fx = 0.0;
        let mut fy = 0.0;

        // attraction along incident edges, both directions
        for (j, w) in graph.out_edges(i).chain(graph.in_edges(i)) {
            let (xj, yj) = positions[j];
            let dx = xj - xi;
            let dy = yj - yi;
            let mut factor = match params.weight_influence {
                WeightInfluence::None => 1.0,
                WeightInfluence::Linear => w as f64,
            };
            if params.lin_log {
                let d = (dx * dx + dy * dy).sqrt();
                if d > 0.0 {
                    factor *= d.ln_1p() / d;
                }
            }
            fx += factor * dx;
            fy += factor * dy;
        }

        // repulsion from every other node
        match &tree {
            Some(tree) => {
                let (rx, ry) = tree.repulsion_at(i, positions[i], masses[i], params.repulsion, params.theta);
                fx += rx;
                fy += ry;
            }
            None => {
                for j in 0..positions.len() {
                    if j == i {
                        continue;
                    }
                    let (xj, yj) = positions[j];
                    let dx = xi - xj;
                    let dy = yi - yj;
                    let d2 = dx * dx + dy * dy;
                    if d2 == 0.0 {
                        continue;
                    }
                    let f = params.repulsion * masses[i] * masses[j] / d2;
                    fx += f * dx;
                    fy += f * dy;
                }
            }
        }

        // gravity toward the origin
        if params.gravity > 0.0 {
            let d = (xi * xi + yi * yi).sqrt();
            if d > 0.0 {
                let f = params.gravity * masses[i] / d;
                fx -= f * xi;
                fy -= f * yi;
            }
        }

        (fx, fy)
    };

    match pool {
        Some(pool) => pool.install(|| {
            use rayon::prelude::*;
            (0..positions.len()).into_par_iter().map(force_of).collect()
        }),
        None => (0..positions.len()).map(force_of).collect(),
    }
}

/// Exact O(n^2) repulsion pass: `k_r (deg_i+1)(deg_j+1) / d` along the
/// separating direction. The test oracle for the accelerated pass.
pub fn repulsion_exact(positions: &[(f64, f64)], degrees: &[u64], k_r: f64) -> Vec<(f64, f64)> {
    let masses: Vec<f64> = degrees.iter().map(|&d| (d + 1) as f64).collect();
    let n = positions.len();
    let mut forces = vec![(0.0, 0.0); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = positions[i].0 - positions[j].0;
            let dy = positions[i].1 - positions[j].1;
            let d2 = dx * dx + dy * dy;
            if d2 == 0.0 {
                continue;
            }
            let f = k_r * masses[i] * masses[j] / d2;
            forces[i].0 += f * dx;
            forces[i].1 += f * dy;
            forces[j].0 -= f * dx;
            forces[j].1 -= f * dy;
        }
    }
    forces
}

/// Barnes-Hut approximate repulsion with opening angle `theta`.
pub fn repulsion_barnes_hut(
    positions: &[(f64, f64)],
    degrees: &[u64],
    k_r: f64,
    theta: f64,
) -> Vec<(f64, f64)> {
    let masses: Vec<f64> = degrees.iter().map(|&d| (d + 1) as f64).collect();
    let tree = quadtree::QuadTree::build(positions, &masses);
    (0..positions.len())
        .map(|i| tree.repulsion_at(i, positions[i], masses[i], k_r, theta))
        .collect()
}

mod quadtree {
    //! Arena-allocated quadtree over point masses.

    const MAX_DEPTH: usize = 48;

    enum CellKind {
        Empty,
        /// Point indices stored in this leaf (multiple only at MAX_DEPTH).
        Leaf(Vec<usize>),
        Internal([usize; 4]),
    }

    struct Cell {
        cx: f64,
        cy: f64,
        half: f64,
        mass: f64,
        mx: f64, // mass-weighted coordinate sums until finalized
        my: f64,
        kind: CellKind,
    }

    pub struct QuadTree<'a> {
        cells: Vec<Cell>,
        positions: &'a [(f64, f64)],
        masses: &'a [f64],
    }

    impl<'a> QuadTree<'a> {
        pub fn build(positions: &'a [(f64, f64)], masses: &'a [f64]) -> Self {
            let mut min_x = f64::INFINITY;
            let mut max_x = f64::NEG_INFINITY;
            let mut min_y = f64::INFINITY;
            let mut max_y = f64::NEG_INFINITY;
            for &(x, y) in positions {
                min_x = min_x.min(x);
                max_x = max_x.max(x);
                min_y = min_y.min(y);
                max_y = max_y.max(y);
            }
            let cx = (min_x + max_x) / 2.0;
            let cy = (min_y + max_y) / 2.0;
            let half = ((max_x - min_x).max(max_y - min_y) / 2.0).max(1e-9);
            let root = Cell {
                cx,
                cy,
                half,
                mass: 0.0,
                mx: 0.0,
                my: 0.0,
                kind: CellKind::Empty,
            };
            let mut tree = QuadTree {
                cells: vec![root],
                positions,
                masses,
            };
            for i in 0..positions.len() {
                tree.insert(0, i, 0);
            }
            for cell in &mut tree.cells {
                if cell.mass > 0.0 {
                    cell.mx /= cell.mass;
                    cell.my /= cell.mass;
                }
            }
            tree
        }

        fn quadrant(cx: f64, cy: f64, p: (f64, f64)) -> usize {
            let east = p.0 > cx;
            let north = p.1 > cy;
            (north as usize) * 2 + east as usize
        }

        fn make_children(&mut self, idx: usize) -> [usize; 4] {
            let (cx, cy, half) = {
                let c = &self.cells[idx];
                (c.cx, c.cy, c.half)
            };
            let q = half / 2.0;
            let mut children = [0usize; 4];
            for (k, (dx, dy)) in [(-q, -q), (q, -q), (-q, q), (q, q)].iter().enumerate() {
                children[k] = self.cells.len();
                self.cells.push(Cell {
                    cx: cx + dx,
                    cy: cy + dy,
                    half: q,
                    mass: 0.0,
                    mx: 0.0,
                    my: 0.0,
                    kind: CellKind::Empty,
                });
            }
            children
        }

        /// Adds the point's mass to this cell and places it in the subtree.
        fn insert(&mut self, idx: usize, point: usize, depth: usize) {
            let (px, py) = self.positions[point];
            let m = self.masses[point];
            let (cx, cy) = {
                let cell = &mut self.cells[idx];
                cell.mass += m;
                cell.mx += m * px;
                cell.my += m * py;
                (cell.cx, cell.cy)
            };
            enum Action {
                MakeLeaf,
                PushLeaf,
                Split(Vec<usize>),
                Descend([usize; 4]),
            }
            let action = match &mut self.cells[idx].kind {
                CellKind::Empty => Action::MakeLeaf,
                CellKind::Leaf(_) if depth >= MAX_DEPTH => Action::PushLeaf,
                CellKind::Leaf(pts) => Action::Split(std::mem::take(pts)),
                CellKind::Internal(children) => Action::Descend(*children),
            };
            match action {
                Action::MakeLeaf => self.cells[idx].kind = CellKind::Leaf(vec![point]),
                Action::PushLeaf => {
                    if let CellKind::Leaf(pts) = &mut self.cells[idx].kind {
                        pts.push(point);
                    }
                }
                Action::Split(occupants) => {
                    let children = self.make_children(idx);
                    self.cells[idx].kind = CellKind::Internal(children);
                    // occupants keep their mass contribution at this level;
                    // re-insert them one level down only
                    for occ in occupants {
                        let op = self.positions[occ];
                        self.insert(children[Self::quadrant(cx, cy, op)], occ, depth + 1);
                    }
                    self.insert(children[Self::quadrant(cx, cy, (px, py))], point, depth + 1);
                }
                Action::Descend(children) => {
                    self.insert(children[Self::quadrant(cx, cy, (px, py))], point, depth + 1);
                }
            }
        }

        /// Repulsion force on the query point from all other points.
        pub fn repulsion_at(
            &self,
            query: usize,
            pos: (f64, f64),
            mass: f64,
            k_r: f64,
            theta: f64,
        ) -> (f64, f64) {
            let mut fx = 0.0;
            let mut fy = 0.0;
            let mut stack = vec![0usize];
            while let Some(idx) = stack.pop() {
                let cell = &self.cells[idx];
                if cell.mass == 0.0 {
                    continue;
                }
                match &cell.kind {
                    CellKind::Empty => {}
                    CellKind::Leaf(points) => {
                        for &p in points {
                            if p == query {
                                continue;
                            }
                            let dx = pos.0 - self.positions[p].0;
                            let dy = pos.1 - self.positions[p].1;
                            let d2 = dx * dx + dy * dy;
                            if d2 == 0.0 {
                                continue;
                            }
                            let f = k_r * mass * self.masses[p] / d2;
                            fx += f * dx;
                            fy += f * dy;
                        }
                    }
                    CellKind::Internal(children) => {
                        let dx = pos.0 - cell.mx;
                        let dy = pos.1 - cell.my;
                        let d2 = dx * dx + dy * dy;
                        // open cells that contain the query point; otherwise
                        // compare the cell diagonal to the distance
                        let contains = (pos.0 - cell.cx).abs() <= cell.half
                            && (pos.1 - cell.cy).abs() <= cell.half;
                        let diag2 = 8.0 * cell.half * cell.half;
                        if !contains && d2 > 0.0 && diag2 < theta * theta * d2 {
                            let f = k_r * mass * cell.mass / d2;
                            fx += f * dx;
                            fy += f * dy;
                        } else {
                            stack.extend_from_slice(children);
                        }
                    }
                }
            }
            (fx, fy)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::UserId;
    use proptest::prelude::*;

    fn path_graph(n: usize) -> InteractionGraph {
        let mut g = InteractionGraph::new();
        for i in 0..n.saturating_sub(1) {
            g.add_interaction(
                &UserId::new(format!("n{i}")),
                &UserId::new(format!("n{}", i + 1)),
            );
        }
        g
    }

    #[test]
    fn single_node_stays_fixed_without_gravity() {
        let mut g = InteractionGraph::new();
        g.add_node(&UserId::new("only"));
        let params = LayoutParams {
            gravity: 0.0,
            iterations: 50,
            ..LayoutParams::default()
        };
        let emb = spatialize_with_initial(&g, &params, 7, vec![(3.0, -4.0)]).unwrap();
        assert_eq!(emb.position_of(&UserId::new("only")), Some((3.0, -4.0)));
    }

    #[test]
    fn two_node_equilibrium_matches_closed_form() {
        // attraction d balances repulsion 4 k_r / d at d* = 2 sqrt(k_r)
        let g = path_graph(2);
        let k_r = 4.0;
        let params = LayoutParams {
            repulsion: k_r,
            gravity: 0.0,
            iterations: 800,
            weight_influence: WeightInfluence::None,
            ..LayoutParams::default()
        };
        let emb = spatialize(&g, &params, 11).unwrap();
        let a = emb.position_of(&UserId::new("n0")).unwrap();
        let b = emb.position_of(&UserId::new("n1")).unwrap();
        let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        let expected = 2.0 * k_r.sqrt();
        assert!(
            (d - expected).abs() / expected < 0.05,
            "distance {d} vs closed form {expected}"
        );
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let g = path_graph(20);
        let params = LayoutParams {
            iterations: 40,
            ..LayoutParams::default()
        };
        let a = spatialize(&g, &params, 99).unwrap();
        let b = spatialize(&g, &params, 99).unwrap();
        assert_eq!(a.positions(), b.positions());
        let c = spatialize(&g, &params, 100).unwrap();
        assert_ne!(a.positions(), c.positions());
    }

    #[test]
    fn worker_count_does_not_change_positions() {
        let g = path_graph(40);
        for mode in [RepulsionMode::Exact, RepulsionMode::BarnesHut] {
            let base = LayoutParams {
                iterations: 30,
                repulsion_mode: mode,
                ..LayoutParams::default()
            };
            let seq = spatialize(&g, &base, 5).unwrap();
            for threads in [2, 8] {
                let par = spatialize(&g, &LayoutParams { threads, ..base.clone() }, 5).unwrap();
                assert_eq!(seq.positions(), par.positions(), "threads={threads}");
            }
        }
    }

    #[test]
    fn symmetric_pair_repulsion_is_equal_and_opposite() {
        let forces = repulsion_exact(&[(0.0, 0.0), (2.0, 0.0)], &[1, 1], 1.0);
        assert_eq!(forces[0].0, -forces[1].0);
        assert_eq!(forces[0].1, -forces[1].1);
        assert!(forces[0].0 < 0.0 && forces[1].0 > 0.0);
    }

    #[test]
    fn equilateral_triangle_repulsion_is_radial() {
        let sqrt3 = 3.0f64.sqrt();
        let pts = [(0.0, 1.0), (-sqrt3 / 2.0, -0.5), (sqrt3 / 2.0, -0.5)];
        let forces = repulsion_exact(&pts, &[2, 2, 2], 1.5);
        let mags: Vec<f64> = forces
            .iter()
            .map(|f| (f.0 * f.0 + f.1 * f.1).sqrt())
            .collect();
        for pair in mags.windows(2) {
            assert!((pair[0] - pair[1]).abs() < 1e-9);
        }
        for (p, f) in pts.iter().zip(&forces) {
            // outward: force parallel to the position vector
            let dot = p.0 * f.0 + p.1 * f.1;
            let cross = p.0 * f.1 - p.1 * f.0;
            assert!(dot > 0.0);
            assert!(cross.abs() < 1e-9);
        }
    }

    #[test]
    fn barnes_hut_matches_exact_within_five_percent() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let positions: Vec<(f64, f64)> = (0..100)
            .map(|_| (rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)))
            .collect();
        let degrees: Vec<u64> = (0..100).map(|_| rng.random_range(0..20)).collect();
        let exact = repulsion_exact(&positions, &degrees, 2.0);
        let approx = repulsion_barnes_hut(&positions, &degrees, 2.0, 0.5);
        for (e, a) in exact.iter().zip(&approx) {
            let err = ((e.0 - a.0).powi(2) + (e.1 - a.1).powi(2)).sqrt();
            let norm = (e.0 * e.0 + e.1 * e.1).sqrt();
            assert!(err <= 0.05 * norm.max(1e-9), "err {err} vs norm {norm}");
        }
    }

    #[test]
    fn blowup_is_reported_with_iteration() {
        // initial positions so far apart that the attraction force overflows
        let g = path_graph(2);
        let params = LayoutParams {
            iterations: 50,
            ..LayoutParams::default()
        };
        let initial = vec![(-1.0e308, 0.0), (1.0e308, 0.0)];
        match spatialize_with_initial(&g, &params, 3, initial) {
            Err(Error::NumericalBlowup { iteration }) => assert_eq!(iteration, 0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn coincident_nodes_are_jittered_apart() {
        let g = path_graph(3);
        let params = LayoutParams {
            iterations: 5,
            ..LayoutParams::default()
        };
        let emb = spatialize_with_initial(
            &g,
            &params,
            21,
            vec![(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)],
        )
        .unwrap();
        let p: Vec<_> = emb.positions().to_vec();
        assert_ne!(p[0], p[1]);
        assert_ne!(p[1], p[2]);
        assert!(p.iter().all(|(x, y)| x.is_finite() && y.is_finite()));
    }

    /// Potential proxy: attraction d^2/2 per edge unit weight, repulsion
    /// -k_r m m' ln d per pair, gravity k_g m |p|.
    fn potential(g: &InteractionGraph, params: &LayoutParams, pos: &[(f64, f64)]) -> f64 {
        let masses: Vec<f64> = (0..g.node_count()).map(|i| (g.degree(i) + 1) as f64).collect();
        let mut u = 0.0;
        for (i, j, w) in g.edges() {
            let d2 = (pos[i].0 - pos[j].0).powi(2) + (pos[i].1 - pos[j].1).powi(2);
            let wf = match params.weight_influence {
                WeightInfluence::None => 1.0,
                WeightInfluence::Linear => w as f64,
            };
            u += wf * d2 / 2.0;
        }
        for i in 0..pos.len() {
            for j in (i + 1)..pos.len() {
                let d = ((pos[i].0 - pos[j].0).powi(2) + (pos[i].1 - pos[j].1).powi(2))
                    .sqrt()
                    .max(1e-12);
                u -= params.repulsion * masses[i] * masses[j] * d.ln();
            }
            u += params.gravity * masses[i] * (pos[i].0.powi(2) + pos[i].1.powi(2)).sqrt();
        }
        u
    }

    #[test]
    fn energy_trend_decreases_over_second_half() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        // random connected-ish graph on 60 nodes: a path plus chords
        let mut g = path_graph(60);
        for _ in 0..80 {
            let a = rng.random_range(0..60);
            let b = rng.random_range(0..60);
            if a != b {
                g.add_interaction(&UserId::new(format!("n{a}")), &UserId::new(format!("n{b}")));
            }
        }
        let params = LayoutParams {
            iterations: 10,
            ..LayoutParams::default()
        };
        // run in 30 chunks of 10 iterations, recording the potential
        let mut rng_init = ChaCha8Rng::seed_from_u64(9);
        let mut positions = initial_positions(g.node_count(), &mut rng_init);
        let mut energies = Vec::new();
        for _ in 0..30 {
            let emb = spatialize_with_initial(&g, &params, 1, positions.clone()).unwrap();
            positions = emb.positions().to_vec();
            energies.push(potential(&g, &params, &positions));
        }
        let half = energies.len() / 2;
        let third_quarter: f64 =
            energies[half..half + 7].iter().sum::<f64>() / 7.0;
        let last_quarter: f64 = energies[energies.len() - 7..].iter().sum::<f64>() / 7.0;
        assert!(
            last_quarter <= third_quarter,
            "energy rose over the final iterations: {third_quarter} -> {last_quarter}"
        );
    }

    #[test]
    fn planted_blocks_separate_in_layout() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut g = InteractionGraph::new();
        let n_block = 60;
        let id = |b: usize, i: usize| UserId::new(format!("b{b}_{i}"));
        for b in 0..2 {
            for i in 0..n_block {
                g.add_node(&id(b, i));
            }
        }
        for b in 0..2 {
            for i in 0..n_block {
                for j in 0..n_block {
                    if i != j && rng.random_bool(0.2) {
                        g.add_interaction(&id(b, i), &id(b, j));
                    }
                }
            }
        }
        for i in 0..n_block {
            for j in 0..n_block {
                if rng.random_bool(0.02) {
                    g.add_interaction(&id(0, i), &id(1, j));
                }
            }
        }
        let params = LayoutParams {
            iterations: 400,
            ..LayoutParams::default()
        };
        let emb = spatialize(&g, &params, 4).unwrap();
        let centroid = |b: usize| {
            let pts: Vec<(f64, f64)> = (0..n_block)
                .map(|i| emb.position_of(&id(b, i)).unwrap())
                .collect();
            let cx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
            let cy = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
            let spread = pts
                .iter()
                .map(|p| ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt())
                .sum::<f64>()
                / pts.len() as f64;
            ((cx, cy), spread)
        };
        let ((c0x, c0y), s0) = centroid(0);
        let ((c1x, c1y), s1) = centroid(1);
        let between = ((c0x - c1x).powi(2) + (c0y - c1y).powi(2)).sqrt();
        let spread = (s0 + s1) / 2.0;
        assert!(
            between > 3.0 * spread,
            "blocks failed to separate: centroid distance {between}, spread {spread}"
        );
    }

    #[test]
    fn embedding_csv_round_trip() {
        let emb = LayoutEmbedding::from_pairs([
            (UserId::new("a"), (1.5, -2.25)),
            (UserId::new("b"), (0.1234567890123, 9.0)),
        ]);
        let mut buf = Vec::new();
        emb.write_csv(&mut buf).unwrap();
        let again = LayoutEmbedding::read_csv(&buf[..]).unwrap();
        assert_eq!(emb.position_of(&UserId::new("a")), again.position_of(&UserId::new("a")));
        assert_eq!(emb.position_of(&UserId::new("b")), again.position_of(&UserId::new("b")));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        /// With gravity off, translating the initial layout translates the
        /// output (up to floating-point noise).
        #[test]
        fn translation_equivariance_without_gravity(
            tx in -50.0f64..50.0,
            ty in -50.0f64..50.0,
            seed in 0u64..50,
        ) {
            let g = path_graph(12);
            let params = LayoutParams {
                gravity: 0.0,
                iterations: 30,
                repulsion_mode: RepulsionMode::Exact,
                ..LayoutParams::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let initial = initial_positions(12, &mut rng);
            let shifted: Vec<(f64, f64)> = initial.iter().map(|(x, y)| (x + tx, y + ty)).collect();
            let base = spatialize_with_initial(&g, &params, 1, initial).unwrap();
            let moved = spatialize_with_initial(&g, &params, 1, shifted).unwrap();
            for (a, b) in base.positions().iter().zip(moved.positions()) {
                prop_assert!((b.0 - a.0 - tx).abs() < 1e-6, "{} vs {}", b.0 - a.0, tx);
                prop_assert!((b.1 - a.1 - ty).abs() < 1e-6, "{} vs {}", b.1 - a.1, ty);
            }
        }
    }
}

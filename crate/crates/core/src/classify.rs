//! Opinion-cluster assignment from layout geometry, with fallback merging
//! and coverage accounting.
//!
//! Boundaries are an explicit input artifact (a small text file of regions)
//! so the classification step is reproducible and auditable. The two pole
//! regions are named freely in the file; which pole is called Majority is
//! decided by member count after assignment.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::LayoutEmbedding;
use crate::record::UserId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Majority,
    Minority,
    Intermediate,
    Unclassified,
}

impl Label {
    /// The three known labels, in canonical order.
    pub const KNOWN: [Label; 3] = [Label::Majority, Label::Minority, Label::Intermediate];

    pub fn group_index(self) -> Option<usize> {
        match self {
            Label::Majority => Some(0),
            Label::Minority => Some(1),
            Label::Intermediate => Some(2),
            Label::Unclassified => None,
        }
    }

    pub fn from_group_index(idx: usize) -> Label {
        Label::KNOWN[idx]
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Majority => f.write_str("majority"),
            Label::Minority => f.write_str("minority"),
            Label::Intermediate => f.write_str("intermediate"),
            Label::Unclassified => f.write_str("unclassified"),
        }
    }
}

impl std::str::FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majority" => Ok(Label::Majority),
            "minority" => Ok(Label::Minority),
            "intermediate" => Ok(Label::Intermediate),
            "unclassified" => Ok(Label::Unclassified),
            other => Err(Error::Format(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    EventNetwork,
    FallbackNetwork,
    None,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::EventNetwork => f.write_str("event_network"),
            Provenance::FallbackNetwork => f.write_str("fallback_network"),
            Provenance::None => f.write_str("none"),
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "event_network" => Ok(Provenance::EventNetwork),
            "fallback_network" => Ok(Provenance::FallbackNetwork),
            "none" => Ok(Provenance::None),
            other => Err(Error::Format(format!("unknown provenance {other:?}"))),
        }
    }
}

/// User -> (label, provenance). Users absent from the map are unclassified
/// with provenance `None`, so the invariant `provenance = None <=> label =
/// Unclassified` holds by construction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterAssignment {
    map: std::collections::BTreeMap<UserId, (Label, Provenance)>,
}

impl ClusterAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a classified user. Unclassified labels are not stored.
    pub fn set(&mut self, user: UserId, label: Label, provenance: Provenance) {
        if label == Label::Unclassified {
            return;
        }
        debug_assert!(provenance != Provenance::None);
        self.map.insert(user, (label, provenance));
    }

    pub fn label_of(&self, user: &UserId) -> Label {
        self.map
            .get(user)
            .map(|&(l, _)| l)
            .unwrap_or(Label::Unclassified)
    }

    pub fn provenance_of(&self, user: &UserId) -> Provenance {
        self.map
            .get(user)
            .map(|&(_, p)| p)
            .unwrap_or(Provenance::None)
    }

    pub fn is_classified(&self, user: &UserId) -> bool {
        self.map.contains_key(user)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Classified users with their labels, in user-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&UserId, Label, Provenance)> {
        self.map.iter().map(|(u, &(l, p))| (u, l, p))
    }

    /// Users carrying the given label, in user-id order.
    pub fn users_with_label(&self, label: Label) -> Vec<&UserId> {
        self.map
            .iter()
            .filter(|(_, &(l, _))| l == label)
            .map(|(u, _)| u)
            .collect()
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.map.values().filter(|&&(l, _)| l == label).count()
    }

    /// Writes `user_id,label,provenance` for every user in `universe`
    /// (classified or not), in user-id order.
    pub fn write_csv<'a>(
        &self,
        mut w: impl Write,
        universe: impl IntoIterator<Item = &'a UserId>,
    ) -> Result<()> {
        writeln!(w, "user_id,label,provenance")?;
        let users: BTreeSet<&UserId> = universe.into_iter().collect();
        for user in users {
            writeln!(
                w,
                "{user},{},{}",
                self.label_of(user),
                self.provenance_of(user)
            )?;
        }
        Ok(())
    }

    /// Reads the `write_csv` format; unclassified rows are skipped.
    pub fn read_csv(reader: impl BufRead) -> Result<(Self, BTreeSet<UserId>)> {
        let mut assignment = ClusterAssignment::new();
        let mut universe = BTreeSet::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if idx == 0 && line.starts_with("user_id") {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: "expected user_id,label,provenance".into(),
                });
            }
            let user = UserId::new(fields[0]);
            let label: Label = fields[1].parse()?;
            let provenance: Provenance = fields[2].parse()?;
            universe.insert(user.clone());
            if label != Label::Unclassified {
                assignment.set(user, label, provenance);
            }
        }
        Ok((assignment, universe))
    }
}

/// A classification region in layout coordinates. Regions are closed: points
/// exactly on an edge belong to the region.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Simple polygon (even-odd rule).
    Polygon(Vec<(f64, f64)>),
    /// Closed half-plane left of the directed line `a -> b`.
    HalfPlane { a: (f64, f64), b: (f64, f64) },
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    if cross(a, b, p).abs() > 1e-12 * (1.0 + a.0.abs() + b.0.abs() + a.1.abs() + b.1.abs()) {
        return false;
    }
    p.0 >= a.0.min(b.0) - 1e-12
        && p.0 <= a.0.max(b.0) + 1e-12
        && p.1 >= a.1.min(b.1) - 1e-12
        && p.1 <= a.1.max(b.1) + 1e-12
}

fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(p1, q1, q2) || on_segment(p2, q1, q2) || on_segment(q1, p1, p2) || on_segment(q2, p1, p2)
}

impl Region {
    pub fn contains(&self, p: (f64, f64)) -> bool {
        match self {
            Region::HalfPlane { a, b } => cross(*a, *b, p) >= 0.0,
            Region::Polygon(vs) => {
                let n = vs.len();
                for i in 0..n {
                    if on_segment(p, vs[i], vs[(i + 1) % n]) {
                        return true;
                    }
                }
                // even-odd ray cast toward +x
                let mut inside = false;
                for i in 0..n {
                    let (xi, yi) = vs[i];
                    let (xj, yj) = vs[(i + 1) % n];
                    if (yi > p.1) != (yj > p.1) {
                        let x_int = xi + (p.1 - yi) / (yj - yi) * (xj - xi);
                        if p.0 < x_int {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        match self {
            Region::HalfPlane { a, b } => {
                if a == b {
                    return Err(Error::InvalidBoundary(format!(
                        "region {name}: half-plane endpoints coincide"
                    )));
                }
            }
            Region::Polygon(vs) => {
                if vs.len() < 3 {
                    return Err(Error::InvalidBoundary(format!(
                        "region {name}: polygon needs at least 3 vertices"
                    )));
                }
                let n = vs.len();
                for i in 0..n {
                    if vs[i] == vs[(i + 1) % n] {
                        return Err(Error::InvalidBoundary(format!(
                            "region {name}: repeated consecutive vertex"
                        )));
                    }
                }
                // non-adjacent edge pairs must not intersect
                for i in 0..n {
                    for j in i + 1..n {
                        let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                        if adjacent {
                            continue;
                        }
                        if segments_intersect(vs[i], vs[(i + 1) % n], vs[j], vs[(j + 1) % n]) {
                            return Err(Error::InvalidBoundary(format!(
                                "region {name}: polygon self-intersects (edges {i} and {j})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        match self {
            Region::Polygon(vs) => vs.clone(),
            Region::HalfPlane { a, b } => vec![*a, *b],
        }
    }
}

fn regions_overlap(r1: &Region, r2: &Region) -> bool {
    match (r1, r2) {
        (Region::HalfPlane { a: a1, b: b1 }, Region::HalfPlane { a: a2, b: b2 }) => {
            // normals of "left of a->b": n = (-(dy), dx)
            let n1 = (-(b1.1 - a1.1), b1.0 - a1.0);
            let n2 = (-(b2.1 - a2.1), b2.0 - a2.0);
            let cr = n1.0 * n2.1 - n1.1 * n2.0;
            let dot = n1.0 * n2.0 + n1.1 * n2.1;
            if cr.abs() > 1e-12 * (n1.0.abs() + n1.1.abs()) * (n2.0.abs() + n2.1.abs()) || dot >= 0.0 {
                // non-antiparallel half-planes always share points
                return true;
            }
            // antiparallel: disjoint iff the slabs do not meet
            let c1 = n1.0 * a1.0 + n1.1 * a1.1; // region1: n1·p >= c1
            let c2 = n2.0 * a2.0 + n2.1 * a2.1; // region2: n2·p >= c2
            // n2 = -s*n1 with s>0; region2 in n1 terms: n1·p <= -c2/s
            let s = -(dot) / (n1.0 * n1.0 + n1.1 * n1.1);
            let upper = -c2 / s;
            c1 <= upper
        }
        (Region::Polygon(vs), hp @ Region::HalfPlane { .. })
        | (hp @ Region::HalfPlane { .. }, Region::Polygon(vs)) => {
            vs.iter().any(|&v| hp.contains(v))
        }
        (Region::Polygon(v1), Region::Polygon(v2)) => {
            let n1 = v1.len();
            let n2 = v2.len();
            for i in 0..n1 {
                for j in 0..n2 {
                    if segments_intersect(v1[i], v1[(i + 1) % n1], v2[j], v2[(j + 1) % n2]) {
                        return true;
                    }
                }
            }
            r1.contains(v2[0]) || r2.contains(v1[0])
        }
    }
}

/// Two disjoint pole regions; everything else in the layout is the
/// in-between (intermediate) zone.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    regions: [(String, Region); 2],
}

impl BoundarySpec {
    pub fn new(
        name_a: impl Into<String>,
        region_a: Region,
        name_b: impl Into<String>,
        region_b: Region,
    ) -> Result<Self> {
        let name_a = name_a.into();
        let name_b = name_b.into();
        region_a.validate(&name_a)?;
        region_b.validate(&name_b)?;
        if regions_overlap(&region_a, &region_b) {
            return Err(Error::OverlappingRegions(format!("{name_a} and {name_b}")));
        }
        Ok(BoundarySpec {
            regions: [(name_a, region_a), (name_b, region_b)],
        })
    }

    /// Two half-plane pole regions perpendicular to the axis `c1 -> c2`,
    /// leaving a gap of `gap_fraction` of the axis length around the
    /// midpoint. Useful for splitting a layout along a known separating
    /// axis.
    pub fn split_along(c1: (f64, f64), c2: (f64, f64), gap_fraction: f64) -> Result<Self> {
        let axis = (c2.0 - c1.0, c2.1 - c1.1);
        let len = (axis.0 * axis.0 + axis.1 * axis.1).sqrt();
        if !(0.0..1.0).contains(&gap_fraction) {
            return Err(Error::InvalidBoundary(
                "gap_fraction must be in [0, 1)".into(),
            ));
        }
        let half_gap = gap_fraction * len / 2.0;
        Self::split_at(c1, c2, len / 2.0 - half_gap, len / 2.0 + half_gap)
    }

    /// As [`BoundarySpec::split_along`], with explicit cut positions along
    /// the axis: `cut_a < cut_b` are distances from `c1` toward `c2`. The
    /// region around `c1` holds axis coordinates up to `cut_a`, the region
    /// around `c2` holds coordinates from `cut_b`.
    pub fn split_at(c1: (f64, f64), c2: (f64, f64), cut_a: f64, cut_b: f64) -> Result<Self> {
        let axis = (c2.0 - c1.0, c2.1 - c1.1);
        let len = (axis.0 * axis.0 + axis.1 * axis.1).sqrt();
        if len == 0.0 {
            return Err(Error::InvalidBoundary("coincident pole centers".into()));
        }
        if !(cut_a < cut_b) {
            return Err(Error::InvalidBoundary(format!(
                "cut positions must satisfy cut_a < cut_b (got {cut_a}, {cut_b})"
            )));
        }
        let dir = (axis.0 / len, axis.1 / len);
        let perp = (-dir.1, dir.0);
        let pa = (c1.0 + cut_a * dir.0, c1.1 + cut_a * dir.1);
        let pb = (c1.0 + cut_b * dir.0, c1.1 + cut_b * dir.1);
        let region_a = Region::HalfPlane {
            a: pa,
            b: (pa.0 + perp.0, pa.1 + perp.1),
        };
        let region_b = Region::HalfPlane {
            a: pb,
            b: (pb.0 - perp.0, pb.1 - perp.1),
        };
        BoundarySpec::new("pole_a", region_a, "pole_b", region_b)
    }

    pub fn regions(&self) -> &[(String, Region); 2] {
        &self.regions
    }

    /// Reads the boundary file format:
    ///
    /// ```text
    /// region <name> polygon|halfplane
    /// <x>,<y>
    /// ...
    /// ```
    ///
    /// Exactly two regions; `#` comments and blank lines are ignored.
    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut regions: Vec<(String, String, Vec<(f64, f64)>)> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("region ") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 2 {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: "expected `region <name> polygon|halfplane`".into(),
                    });
                }
                regions.push((parts[0].to_owned(), parts[1].to_owned(), Vec::new()));
            } else {
                let (name_kind, verts) = regions.last_mut().ok_or(Error::Parse {
                    line: idx + 1,
                    message: "vertex before any region header".into(),
                })
                .map(|r| ((r.0.clone(), r.1.clone()), &mut r.2))?;
                let _ = name_kind;
                let mut parts = line.splitn(2, ',');
                let x: f64 = parts
                    .next()
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or(Error::Parse {
                        line: idx + 1,
                        message: "expected `x,y`".into(),
                    })?;
                let y: f64 = parts
                    .next()
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or(Error::Parse {
                        line: idx + 1,
                        message: "expected `x,y`".into(),
                    })?;
                verts.push((x, y));
            }
        }
        if regions.len() != 2 {
            return Err(Error::InvalidBoundary(format!(
                "expected exactly 2 regions, found {}",
                regions.len()
            )));
        }
        let mut built = Vec::new();
        for (name, kind, verts) in regions {
            let region = match kind.as_str() {
                "polygon" => Region::Polygon(verts),
                "halfplane" => {
                    if verts.len() != 2 {
                        return Err(Error::InvalidBoundary(format!(
                            "region {name}: halfplane needs exactly 2 points"
                        )));
                    }
                    Region::HalfPlane {
                        a: verts[0],
                        b: verts[1],
                    }
                }
                other => {
                    return Err(Error::InvalidBoundary(format!(
                        "region {name}: unknown kind {other:?}"
                    )))
                }
            };
            built.push((name, region));
        }
        let (nb, rb) = built.pop().unwrap();
        let (na, ra) = built.pop().unwrap();
        BoundarySpec::new(na, ra, nb, rb)
    }

    pub fn write(&self, mut w: impl Write) -> Result<()> {
        for (name, region) in &self.regions {
            match region {
                Region::Polygon(_) => writeln!(w, "region {name} polygon")?,
                Region::HalfPlane { .. } => writeln!(w, "region {name} halfplane")?,
            }
            for (x, y) in region.vertices() {
                writeln!(w, "{x},{y}")?;
            }
        }
        Ok(())
    }
}

/// Assigns every embedded node a label: the larger pole region becomes
/// Majority, the smaller Minority (ties broken by region name order), and
/// everything outside both regions is Intermediate. Provenance is
/// `EventNetwork`.
pub fn assign_clusters(
    embedding: &LayoutEmbedding,
    boundaries: &BoundarySpec,
) -> ClusterAssignment {
    let mut pole_members: [Vec<&UserId>; 2] = [Vec::new(), Vec::new()];
    let mut between: Vec<&UserId> = Vec::new();
    for (user, pos) in embedding.iter() {
        if boundaries.regions[0].1.contains(pos) {
            pole_members[0].push(user);
        } else if boundaries.regions[1].1.contains(pos) {
            pole_members[1].push(user);
        } else {
            between.push(user);
        }
    }
    let majority_first = pole_members[0].len() >= pole_members[1].len();
    let (maj, min) = if majority_first {
        (&pole_members[0], &pole_members[1])
    } else {
        (&pole_members[1], &pole_members[0])
    };
    let mut assignment = ClusterAssignment::new();
    for user in maj {
        assignment.set((*user).clone(), Label::Majority, Provenance::EventNetwork);
    }
    for user in min {
        assignment.set((*user).clone(), Label::Minority, Provenance::EventNetwork);
    }
    for user in between {
        assignment.set(user.clone(), Label::Intermediate, Provenance::EventNetwork);
    }
    assignment
}

/// For each user in `users`: the event label if classified, otherwise the
/// fallback label (with fallback provenance), otherwise unclassified.
pub fn fallback_merge<'a>(
    event: &ClusterAssignment,
    fallback: &ClusterAssignment,
    users: impl IntoIterator<Item = &'a UserId>,
) -> ClusterAssignment {
    let mut merged = ClusterAssignment::new();
    for user in users {
        if event.is_classified(user) {
            merged.set(user.clone(), event.label_of(user), event.provenance_of(user));
        } else if fallback.is_classified(user) {
            merged.set(
                user.clone(),
                fallback.label_of(user),
                Provenance::FallbackNetwork,
            );
        }
    }
    merged
}

/// Fraction of `users` carrying a known label.
pub fn coverage<'a>(
    assignment: &ClusterAssignment,
    users: impl IntoIterator<Item = &'a UserId>,
) -> Result<f64> {
    let mut total = 0usize;
    let mut classified = 0usize;
    for user in users {
        total += 1;
        if assignment.is_classified(user) {
            classified += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyInput("coverage user set"));
    }
    Ok(classified as f64 / total as f64)
}

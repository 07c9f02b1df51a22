//! Brute-force oracle: surfaces as polygon-edge identifications, curves as
//! edge cycles on the 1-skeleton.
//!
//! Everything here is computed from first principles — Euler characteristic
//! and orientability from the gluing data, pair classification by literally
//! cutting along the curve and capping boundary circles — so agreement with
//! [`crate::pairalg`] is a genuine cross-check, not a tautology. The two
//! modules share no normalization code.

use crate::pairalg::{
    normalize, BaseToken, ClosedSurface, PairWord, Side, TopPair, RP2, SPHERE, TORUS,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CellError {
    #[error("invalid complex: {0}")]
    InvalidComplex(String),
    #[error("curve is not embedded: {0}")]
    NotEmbedded(String),
    #[error("no such node: {0}")]
    NoSuchNode(String),
    #[error("realization error: {0}")]
    Realize(String),
}

/// One polygon side: an edge label traversed forward or reversed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct OrientedEdge {
    pub edge: usize,
    pub reversed: bool,
}

impl OrientedEdge {
    pub fn fwd(edge: usize) -> Self {
        OrientedEdge { edge, reversed: false }
    }
    pub fn rev(edge: usize) -> Self {
        OrientedEdge { edge, reversed: true }
    }
    pub fn flip(self) -> Self {
        OrientedEdge { edge: self.edge, reversed: !self.reversed }
    }
}

/// One end of an (unoriented) edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct EdgeEnd {
    edge: usize,
    head: bool,
}

/// Closed surface as a set of polygons with edge sides glued in pairs.
/// Every label occurring exactly twice guarantees the realization is a closed
/// surface (vertex links close up into circles automatically); validity also
/// requires connectedness.
#[derive(Clone, Debug)]
pub struct CellSurface {
    pub polygons: Vec<Vec<OrientedEdge>>,
    pub edge_names: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Invariants {
    pub chi: i64,
    pub orientable: bool,
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
}

/// Disjoint-set over corner indices.
struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let r = self.find(self.0[x]);
            self.0[x] = r;
        }
        self.0[x]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

/// Corner-to-vertex assignment. Corner (p, i) is the point at the start of
/// side i of polygon p.
struct VertexMap {
    offsets: Vec<usize>,
    corner_vertex: Vec<usize>,
    vertex_count: usize,
}

impl VertexMap {
    fn corner(&self, p: usize, i: usize) -> usize {
        self.corner_vertex[self.offsets[p] + i]
    }
}

type Occ = (usize, usize); // (polygon, position)

impl CellSurface {
    pub fn edge_count(&self) -> usize {
        self.edge_names.len()
    }

    fn occurrence_lists(&self) -> Vec<Vec<Occ>> {
        let mut occ = vec![Vec::new(); self.edge_names.len()];
        for (p, poly) in self.polygons.iter().enumerate() {
            for (i, oe) in poly.iter().enumerate() {
                occ[oe.edge].push((p, i));
            }
        }
        occ
    }

    fn reversed_at(&self, (p, i): Occ) -> bool {
        self.polygons[p][i].reversed
    }

    /// Corner where the traversal of side (p, i) starts.
    fn tail_corner(&self, (p, i): Occ) -> Occ {
        if self.reversed_at((p, i)) {
            (p, (i + 1) % self.polygons[p].len())
        } else {
            (p, i)
        }
    }

    /// Corner where the traversal of side (p, i) ends (= the corner holding
    /// the far end of the edge as the polygon walks it).
    fn head_corner(&self, (p, i): Occ) -> Occ {
        if self.reversed_at((p, i)) {
            (p, i)
        } else {
            (p, (i + 1) % self.polygons[p].len())
        }
    }

    /// Vertex orbits of the corners. Labels occurring once (cut boundaries)
    /// simply contribute no identification.
    fn vertex_map(&self) -> Result<VertexMap, CellError> {
        let mut offsets = Vec::with_capacity(self.polygons.len());
        let mut total = 0;
        for poly in &self.polygons {
            offsets.push(total);
            total += poly.len();
        }
        let idx = |o: &Vec<usize>, (p, i): Occ| o[p] + i;
        let mut dsu = Dsu::new(total);
        for occs in self.occurrence_lists() {
            match occs.len() {
                0 | 1 => {}
                2 => {
                    let (a, b) = (occs[0], occs[1]);
                    dsu.union(idx(&offsets, self.tail_corner(a)), idx(&offsets, self.tail_corner(b)));
                    dsu.union(idx(&offsets, self.head_corner(a)), idx(&offsets, self.head_corner(b)));
                }
                n => {
                    return Err(CellError::InvalidComplex(format!(
                        "an edge label occurs {n} times (expected at most 2)"
                    )))
                }
            }
        }
        let mut names = BTreeMap::new();
        let mut corner_vertex = vec![0usize; total];
        for c in 0..total {
            let root = dsu.find(c);
            let next = names.len();
            let v = *names.entry(root).or_insert(next);
            corner_vertex[c] = v;
        }
        Ok(VertexMap { offsets, corner_vertex, vertex_count: names.len() })
    }

    /// Strict validity: non-empty polygons, every label exactly twice, and a
    /// connected gluing.
    pub fn validate(&self) -> Result<(), CellError> {
        if self.polygons.is_empty() {
            return Err(CellError::InvalidComplex("no polygons".into()));
        }
        if self.polygons.iter().any(|p| p.is_empty()) {
            return Err(CellError::InvalidComplex("empty polygon".into()));
        }
        for (e, occs) in self.occurrence_lists().iter().enumerate() {
            if occs.len() != 2 {
                return Err(CellError::InvalidComplex(format!(
                    "edge `{}` occurs {} times (expected 2)",
                    self.edge_names.get(e).map(String::as_str).unwrap_or("?"),
                    occs.len()
                )));
            }
        }
        if self.polygon_components().len() != 1 {
            return Err(CellError::InvalidComplex("complex is disconnected".into()));
        }
        Ok(())
    }

    /// Connected groups of polygon indices under shared edge labels.
    fn polygon_components(&self) -> Vec<Vec<usize>> {
        let occ = self.occurrence_lists();
        let n = self.polygons.len();
        let mut dsu = Dsu::new(n);
        for occs in &occ {
            for w in occs.windows(2) {
                dsu.union(w[0].0, w[1].0);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for p in 0..n {
            groups.entry(dsu.find(p)).or_default().push(p);
        }
        groups.into_values().collect()
    }

    /// Coherent-orientation search: polygons are 2-colored so that every glued
    /// edge pair is traversed in opposite directions; a contradiction means
    /// non-orientable.
    fn orientable(&self) -> bool {
        let occ = self.occurrence_lists();
        let mut color = vec![None::<bool>; self.polygons.len()];
        for start in 0..self.polygons.len() {
            if color[start].is_some() {
                continue;
            }
            color[start] = Some(false);
            let mut stack = vec![start];
            while let Some(p) = stack.pop() {
                let cp = color[p].unwrap();
                for (i, oe) in self.polygons[p].iter().enumerate() {
                    let occs = &occ[oe.edge];
                    if occs.len() != 2 {
                        continue;
                    }
                    let other = if occs[0] == (p, i) { occs[1] } else { occs[0] };
                    // Opposite traversal required: flags equal means the
                    // neighbor keeps the same color only when flipped.
                    let want = cp ^ true ^ oe.reversed ^ self.reversed_at(other);
                    match color[other.0] {
                        None => {
                            color[other.0] = Some(want);
                            stack.push(other.0);
                        }
                        Some(c) if c != want => return false,
                        Some(_) => {}
                    }
                }
            }
        }
        true
    }

    pub fn invariants(&self) -> Result<Invariants, CellError> {
        self.validate()?;
        let vm = self.vertex_map()?;
        let vertices = vm.vertex_count;
        let edges = self.edge_names.len();
        let faces = self.polygons.len();
        Ok(Invariants {
            chi: vertices as i64 - edges as i64 + faces as i64,
            orientable: self.orientable(),
            vertices,
            edges,
            faces,
        })
    }

    /// Normal form of the realized closed surface.
    pub fn classify(&self) -> Result<ClosedSurface, CellError> {
        let inv = self.invariants()?;
        if inv.orientable {
            if inv.chi % 2 != 0 || inv.chi > 2 {
                return Err(CellError::InvalidComplex(format!(
                    "orientable complex with chi = {}",
                    inv.chi
                )));
            }
            Ok(ClosedSurface::orientable(((2 - inv.chi) / 2) as u32))
        } else {
            if inv.chi > 1 {
                return Err(CellError::InvalidComplex(format!(
                    "non-orientable complex with chi = {}",
                    inv.chi
                )));
            }
            Ok(ClosedSurface::non_orientable((2 - inv.chi) as u32))
        }
    }

    /// Split into connected sub-complexes (edge ids reindexed per component).
    fn components(&self) -> Vec<CellSurface> {
        self.polygon_components()
            .into_iter()
            .map(|polys| {
                let mut map: BTreeMap<usize, usize> = BTreeMap::new();
                let mut names = Vec::new();
                let polygons = polys
                    .iter()
                    .map(|&p| {
                        self.polygons[p]
                            .iter()
                            .map(|oe| {
                                let id = *map.entry(oe.edge).or_insert_with(|| {
                                    names.push(self.edge_names[oe.edge].clone());
                                    names.len() - 1
                                });
                                OrientedEdge { edge: id, reversed: oe.reversed }
                            })
                            .collect()
                    })
                    .collect();
                CellSurface { polygons, edge_names: names }
            })
            .collect()
    }

    fn add_edge(&mut self, hint: &str) -> usize {
        let mut name = hint.to_string();
        while self.edge_names.contains(&name) {
            name.push('\'');
        }
        self.edge_names.push(name);
        self.edge_names.len() - 1
    }

    /// Start end of the traversal of side occurrence `o`.
    fn start_end(&self, o: Occ) -> EdgeEnd {
        let oe = self.polygons[o.0][o.1];
        EdgeEnd { edge: oe.edge, head: oe.reversed }
    }

    /// Far end of the traversal of side occurrence `o`.
    fn finish_end(&self, o: Occ) -> EdgeEnd {
        let oe = self.polygons[o.0][o.1];
        EdgeEnd { edge: oe.edge, head: !oe.reversed }
    }

    /// Vertex holding a given edge end.
    fn end_vertex(&self, vm: &VertexMap, occ: &[Vec<Occ>], end: EdgeEnd) -> usize {
        let o = occ[end.edge][0];
        let corner = if end.head { self.head_corner(o) } else { self.tail_corner(o) };
        vm.corner(corner.0, corner.1)
    }

    /// Connected sum with `other` performed inside face `face`: a hole is
    /// punched in both faces and the two boundary circles are glued. The host
    /// face keeps its index; `other`'s polygons are appended. χ drops by 2
    /// and any curve on the host 1-skeleton is untouched.
    pub fn connected_sum(&self, face: usize, other: &CellSurface) -> Result<CellSurface, CellError> {
        if face >= self.polygons.len() {
            return Err(CellError::InvalidComplex(format!("no face {face}")));
        }
        let mut out = self.clone();
        // Import other's edges under fresh ids.
        let mut map = Vec::with_capacity(other.edge_names.len());
        for name in &other.edge_names {
            map.push(out.add_edge(name));
        }
        let mut imported: Vec<Vec<OrientedEdge>> = other
            .polygons
            .iter()
            .map(|poly| {
                poly.iter()
                    .map(|oe| OrientedEdge { edge: map[oe.edge], reversed: oe.reversed })
                    .collect()
            })
            .collect();
        // Hole circle x1 x2 x3 and the access chords.
        let x1 = out.add_edge("x1");
        let x2 = out.add_edge("x2");
        let x3 = out.add_edge("x3");
        let ca = out.add_edge("ca");
        let cb = out.add_edge("cb");
        out.polygons[face].extend([
            OrientedEdge::fwd(ca),
            OrientedEdge::rev(x3),
            OrientedEdge::rev(x2),
            OrientedEdge::rev(x1),
            OrientedEdge::rev(ca),
        ]);
        imported[0].extend([
            OrientedEdge::fwd(cb),
            OrientedEdge::fwd(x1),
            OrientedEdge::fwd(x2),
            OrientedEdge::fwd(x3),
            OrientedEdge::rev(cb),
        ]);
        out.polygons.extend(imported);
        Ok(out)
    }
}

impl fmt::Display for CellSurface {
    /// Text format: one polygon word per line, `name` or `name~` per side.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for poly in &self.polygons {
            let line: Vec<String> = poly
                .iter()
                .map(|oe| {
                    let mut s = self.edge_names[oe.edge].clone();
                    if oe.reversed {
                        s.push('~');
                    }
                    s
                })
                .collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Parse the one-polygon-word-per-line text format.
pub fn parse_complex(text: &str) -> Result<CellSurface, CellError> {
    let mut names: Vec<String> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut polygons = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut poly = Vec::new();
        for tok in line.split_whitespace() {
            let (name, reversed) = match tok.strip_suffix('~') {
                Some(n) => (n, true),
                None => (tok, false),
            };
            if name.is_empty() {
                return Err(CellError::InvalidComplex("empty edge name".into()));
            }
            let id = *index.entry(name.to_string()).or_insert_with(|| {
                names.push(name.to_string());
                names.len() - 1
            });
            poly.push(OrientedEdge { edge: id, reversed });
        }
        if poly.is_empty() {
            return Err(CellError::InvalidComplex("empty polygon word".into()));
        }
        polygons.push(poly);
    }
    Ok(CellSurface { polygons, edge_names: names })
}

/// Parse a cycle in the same token format against a complex's edge names.
pub fn parse_cycle(cs: &CellSurface, text: &str) -> Result<Vec<OrientedEdge>, CellError> {
    let mut cycle = Vec::new();
    for tok in text.split_whitespace() {
        let (name, reversed) = match tok.strip_suffix('~') {
            Some(n) => (n, true),
            None => (tok, false),
        };
        let edge = cs
            .edge_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| CellError::InvalidComplex(format!("unknown edge `{name}`")))?;
        cycle.push(OrientedEdge { edge, reversed });
    }
    Ok(cycle)
}

/// Closed edge path on the 1-skeleton with its self-intersection data.
/// `crossings` lists pairs of cycle positions that start at the same vertex;
/// an embedded curve has none.
#[derive(Clone, Debug)]
pub struct CurveTrace {
    pub cycle: Vec<OrientedEdge>,
    pub crossings: Vec<(usize, usize)>,
}

impl CurveTrace {
    /// Validate the cycle (closed, connected, each edge used once) and derive
    /// the crossing list from repeated vertex visits.
    pub fn new(host: &CellSurface, cycle: Vec<OrientedEdge>) -> Result<CurveTrace, CellError> {
        if cycle.is_empty() {
            return Err(CellError::NotEmbedded("empty cycle".into()));
        }
        let occ = host.occurrence_lists();
        let vm = host.vertex_map()?;
        let mut seen = vec![false; host.edge_names.len()];
        for oe in &cycle {
            if oe.edge >= host.edge_names.len() {
                return Err(CellError::InvalidComplex("cycle edge out of range".into()));
            }
            if std::mem::replace(&mut seen[oe.edge], true) {
                return Err(CellError::NotEmbedded("cycle repeats an edge".into()));
            }
        }
        let vertex_at = |pos: usize| {
            let oe = cycle[pos];
            host.end_vertex(&vm, &occ, EdgeEnd { edge: oe.edge, head: oe.reversed })
        };
        let n = cycle.len();
        for i in 0..n {
            let oe = cycle[i];
            let head = host.end_vertex(&vm, &occ, EdgeEnd { edge: oe.edge, head: !oe.reversed });
            if head != vertex_at((i + 1) % n) {
                return Err(CellError::NotEmbedded(format!("cycle breaks between positions {i} and {}", (i + 1) % n)));
            }
        }
        let mut crossings = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if vertex_at(i) == vertex_at(j) {
                    crossings.push((i, j));
                }
            }
        }
        Ok(CurveTrace { cycle, crossings })
    }

    pub fn is_embedded(&self) -> bool {
        self.crossings.is_empty()
    }
}

/// Cut the host along an embedded cycle: the second polygon occurrence of each
/// cycle edge is relabeled to a fresh copy, turning the curve into boundary.
/// Returns the cut complex and the cycle-edge/copy pairs.
fn cut_along(host: &CellSurface, cycle: &[OrientedEdge]) -> (CellSurface, Vec<(usize, usize)>) {
    let occ = host.occurrence_lists();
    let mut cut = host.clone();
    let mut pairs = Vec::new();
    for oe in cycle {
        let (p, i) = occ[oe.edge][1];
        let name = host.edge_names[oe.edge].clone() + "*";
        let copy = cut.add_edge(&name);
        cut.polygons[p][i].edge = copy;
        pairs.push((oe.edge, copy));
    }
    (cut, pairs)
}

/// Walk the boundary circles of a cut complex. Each boundary vertex carries
/// exactly two boundary edge-ends; circles are returned as sequences of
/// (edge, forward?) in walk order.
fn boundary_circles(cut: &CellSurface, boundary: &[usize]) -> Result<Vec<Vec<(usize, bool)>>, CellError> {
    let occ = cut.occurrence_lists();
    let vm = cut.vertex_map()?;
    let mut ends_at: BTreeMap<usize, Vec<EdgeEnd>> = BTreeMap::new();
    for &e in boundary {
        for head in [false, true] {
            let end = EdgeEnd { edge: e, head };
            let v = cut.end_vertex(&vm, &occ, end);
            ends_at.entry(v).or_default().push(end);
        }
    }
    for (v, ends) in &ends_at {
        if ends.len() != 2 {
            return Err(CellError::InvalidComplex(format!(
                "boundary vertex {v} has {} boundary ends",
                ends.len()
            )));
        }
    }
    let mut visited = vec![false; cut.edge_names.len()];
    let mut circles = Vec::new();
    for &start in boundary {
        if visited[start] {
            continue;
        }
        let mut circle = Vec::new();
        let mut edge = start;
        let mut forward = true;
        loop {
            visited[edge] = true;
            circle.push((edge, forward));
            let arrive = EdgeEnd { edge, head: forward };
            let v = cut.end_vertex(&vm, &occ, arrive);
            let ends = &ends_at[&v];
            let next = if ends[0] == arrive { ends[1] } else { ends[0] };
            // Departing from the tail end means traversing forward.
            edge = next.edge;
            forward = !next.head;
            if edge == start && forward {
                break;
            }
            if visited[edge] {
                return Err(CellError::InvalidComplex("boundary walk collapsed".into()));
            }
        }
        circles.push(circle);
    }
    Ok(circles)
}

/// Cap every boundary circle with a disc polygon following the walk.
fn cap_circles(mut cut: CellSurface, circles: &[Vec<(usize, bool)>]) -> CellSurface {
    for circle in circles {
        let poly = circle
            .iter()
            .map(|&(e, fwd)| OrientedEdge { edge: e, reversed: !fwd })
            .collect();
        cut.polygons.push(poly);
    }
    cut
}

/// Classify the pair (host, embedded curve) by cutting and capping — fully
/// independent of the symbolic route.
pub fn canonical_pair(cs: &CellSurface, c: &CurveTrace) -> Result<TopPair, CellError> {
    let inv = cs.invariants()?;
    if !c.is_embedded() {
        return Err(CellError::NotEmbedded(format!("{} crossings", c.crossings.len())));
    }
    let (cut, pairs) = cut_along(cs, &c.cycle);
    let boundary: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    let circles = boundary_circles(&cut, &boundary)?;
    let capped = cap_circles(cut, &circles);
    let comps = capped.components();
    match (circles.len(), comps.len()) {
        (1, 1) => Ok(TopPair::one_sided(capped.classify()?)),
        (2, 2) => Ok(TopPair::separating(comps[0].classify()?, comps[1].classify()?)),
        (2, 1) => Ok(TopPair::non_sep(capped.classify()?, inv.orientable)),
        (a, b) => Err(CellError::InvalidComplex(format!(
            "cutting along an embedded circle gave {a} boundary circles and {b} components"
        ))),
    }
}

/// For a separating pair, classify the two complement sides and return one
/// original face index lying on each.
pub fn separating_side_faces(
    cs: &CellSurface,
    c: &CurveTrace,
) -> Result<Vec<(ClosedSurface, usize)>, CellError> {
    if !c.is_embedded() {
        return Err(CellError::NotEmbedded("crossings present".into()));
    }
    let original_faces = cs.polygons.len();
    let (cut, pairs) = cut_along(cs, &c.cycle);
    let boundary: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    let circles = boundary_circles(&cut, &boundary)?;
    let capped = cap_circles(cut, &circles);
    let groups = capped.polygon_components();
    let comps = capped.components();
    if comps.len() != 2 {
        return Err(CellError::InvalidComplex("curve does not separate".into()));
    }
    let mut out = Vec::new();
    for (group, comp) in groups.iter().zip(comps.iter()) {
        let face = *group
            .iter()
            .find(|&&p| p < original_faces)
            .ok_or_else(|| CellError::InvalidComplex("component without original faces".into()))?;
        out.push((comp.classify()?, face));
    }
    Ok(out)
}

/// Where to blow up a real point.
#[derive(Clone, Copy, Debug)]
pub enum BlowUpLocation {
    /// Interior point of a face: the ambient surface gains a crosscap away
    /// from the curve.
    OffCurve { face: usize },
    /// Interior point of a curve edge: the pair gains a (ℝP², line) pair-sum.
    OnCurve { cycle_pos: usize },
    /// A self-intersection of an immersed trace: the crossing is resolved
    /// through the new crosscap.
    AtNode { crossing: usize },
}

pub fn blow_up_point(
    cs: &CellSurface,
    c: &CurveTrace,
    location: BlowUpLocation,
) -> Result<(CellSurface, CurveTrace), CellError> {
    match location {
        BlowUpLocation::OffCurve { face } => {
            let out = cs.connected_sum(face, &surface_complex(RP2))?;
            let trace = CurveTrace::new(&out, c.cycle.clone())?;
            Ok((out, trace))
        }
        BlowUpLocation::OnCurve { cycle_pos } => blow_up_on_curve(cs, c, cycle_pos),
        BlowUpLocation::AtNode { crossing } => blow_up_at_node(cs, c, crossing),
    }
}

/// Blow up an interior point of curve edge `cycle[cycle_pos]`: the edge is
/// subdivided and a Möbius patch is glued around the midpoint, through which
/// the curve is rerouted. Implements the pair-sum with (ℝP², line).
fn blow_up_on_curve(
    cs: &CellSurface,
    c: &CurveTrace,
    cycle_pos: usize,
) -> Result<(CellSurface, CurveTrace), CellError> {
    let oe = *c
        .cycle
        .get(cycle_pos)
        .ok_or_else(|| CellError::NoSuchNode(format!("cycle position {cycle_pos}")))?;
    let e = oe.edge;
    let occ = cs.occurrence_lists();
    let (role_a, role_b) = (occ[e][0], occ[e][1]);

    let mut out = cs.clone();
    let base = cs.edge_names[e].clone();
    // The subdivision keeps the old id for the first half.
    let e1 = e;
    let mut half = format!("{base}.1");
    while out.edge_names.contains(&half) {
        half.push('\'');
    }
    out.edge_names[e1] = half;
    let e2 = out.add_edge(&format!("{base}.2"));
    let a1 = out.add_edge("a1");
    let a2 = out.add_edge("a2");
    let c1 = out.add_edge("c1");
    let c2 = out.add_edge("c2");
    let alpha = out.add_edge("al");
    let g = out.add_edge("g");

    let mut rebuilt: Vec<Vec<OrientedEdge>> = Vec::with_capacity(out.polygons.len() + 2);
    for (p, poly) in cs.polygons.iter().enumerate() {
        let mut word = Vec::with_capacity(poly.len() + 4);
        for (i, side) in poly.iter().enumerate() {
            if (p, i) == role_a {
                if !side.reversed {
                    word.extend([
                        OrientedEdge::fwd(e1),
                        OrientedEdge::fwd(a1),
                        OrientedEdge::fwd(a2),
                        OrientedEdge::fwd(e2),
                    ]);
                } else {
                    word.extend([
                        OrientedEdge::rev(e2),
                        OrientedEdge::rev(a2),
                        OrientedEdge::rev(a1),
                        OrientedEdge::rev(e1),
                    ]);
                }
            } else if (p, i) == role_b {
                if !side.reversed {
                    word.extend([
                        OrientedEdge::fwd(e1),
                        OrientedEdge::rev(c2),
                        OrientedEdge::rev(c1),
                        OrientedEdge::fwd(e2),
                    ]);
                } else {
                    word.extend([
                        OrientedEdge::rev(e2),
                        OrientedEdge::fwd(c1),
                        OrientedEdge::fwd(c2),
                        OrientedEdge::rev(e1),
                    ]);
                }
            } else {
                word.push(*side);
            }
        }
        rebuilt.push(word);
    }
    rebuilt.push(vec![
        OrientedEdge::fwd(c2),
        OrientedEdge::fwd(alpha),
        OrientedEdge::rev(a2),
        OrientedEdge::fwd(g),
    ]);
    rebuilt.push(vec![
        OrientedEdge::fwd(a1),
        OrientedEdge::fwd(g),
        OrientedEdge::rev(c1),
        OrientedEdge::rev(alpha),
    ]);
    out.polygons = rebuilt;

    let mut cycle = Vec::with_capacity(c.cycle.len() + 2);
    for (i, old) in c.cycle.iter().enumerate() {
        if i == cycle_pos {
            if !old.reversed {
                cycle.extend([OrientedEdge::fwd(e1), OrientedEdge::fwd(alpha), OrientedEdge::fwd(e2)]);
            } else {
                cycle.extend([OrientedEdge::rev(e2), OrientedEdge::rev(alpha), OrientedEdge::rev(e1)]);
            }
        } else {
            cycle.push(*old);
        }
    }
    let trace = CurveTrace::new(&out, cycle)?;
    Ok((out, trace))
}

/// Resolve one transverse self-intersection: truncate the crossing vertex and
/// glue in a Möbius patch carrying two disjoint arcs that reconnect the
/// strands in their original pairing. χ drops by 1, the crossing disappears.
fn blow_up_at_node(
    cs: &CellSurface,
    c: &CurveTrace,
    crossing: usize,
) -> Result<(CellSurface, CurveTrace), CellError> {
    let &(pi, pj) = c
        .crossings
        .get(crossing)
        .ok_or_else(|| CellError::NoSuchNode(format!("crossing {crossing}")))?;
    let occ = cs.occurrence_lists();
    let vm = cs.vertex_map()?;
    let n = c.cycle.len();
    let arrive = |pos: usize| {
        let oe = c.cycle[(pos + n - 1) % n];
        EdgeEnd { edge: oe.edge, head: !oe.reversed }
    };
    let depart = |pos: usize| {
        let oe = c.cycle[pos];
        EdgeEnd { edge: oe.edge, head: oe.reversed }
    };
    let marked = [arrive(pi), depart(pi), arrive(pj), depart(pj)];
    let v = cs.end_vertex(&vm, &occ, marked[0]);
    for m in &marked[1..] {
        if cs.end_vertex(&vm, &occ, *m) != v {
            return Err(CellError::NoSuchNode("strand ends at different vertices".into()));
        }
    }
    // The truncation needs the four strand ends on four distinct edges, none
    // of them looping back to the node. Violations are cured by subdividing
    // the involved cycle edges (topology-neutral) and retrying.
    let degenerate = {
        let mut edges: Vec<usize> = marked.iter().map(|m| m.edge).collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len() != 4
            || marked.iter().any(|m| {
                let other = EdgeEnd { edge: m.edge, head: !m.head };
                cs.end_vertex(&vm, &occ, other) == v
            })
    };
    if degenerate {
        let involved = [(pi + n - 1) % n, pi, (pj + n - 1) % n, pj];
        let (cs2, cycle2, posmap) = subdivide_cycle_positions(cs, &c.cycle, &involved);
        let c2 = CurveTrace::new(&cs2, cycle2)?;
        let target = (posmap[pi], posmap[pj]);
        let idx = c2
            .crossings
            .iter()
            .position(|&p| p == target)
            .ok_or_else(|| CellError::NoSuchNode("crossing lost in subdivision".into()))?;
        return blow_up_at_node(&cs2, &c2, idx);
    }

    // ---- Link circle of v: alternating edge-ends and corners. ----
    // Corner (p, i) joins finish_end(side i-1) to start_end(side i); each
    // edge end at v is incident to exactly two corner instances.
    struct CornerRec {
        occ: Occ,
        left: EdgeEnd,
        right: EdgeEnd,
    }
    let mut recs: Vec<CornerRec> = Vec::new();
    let mut at: BTreeMap<EdgeEnd, Vec<usize>> = BTreeMap::new();
    for (p, poly) in cs.polygons.iter().enumerate() {
        let len = poly.len();
        for i in 0..len {
            if vm.corner(p, i) != v {
                continue;
            }
            let prev = (p, (i + len - 1) % len);
            let left = cs.finish_end(prev);
            let right = cs.start_end((p, i));
            let ri = recs.len();
            recs.push(CornerRec { occ: (p, i), left, right });
            at.entry(left).or_default().push(ri);
            at.entry(right).or_default().push(ri);
        }
    }
    for (end, incident) in &at {
        if incident.len() != 2 {
            return Err(CellError::InvalidComplex(format!(
                "edge end {end:?} at node has {} adjacent corners",
                incident.len()
            )));
        }
    }
    let mut used = vec![false; recs.len()];
    let mut ends_walk = vec![marked[0]];
    let mut corner_walk: Vec<(Occ, bool)> = Vec::new();
    let mut cur = marked[0];
    loop {
        let Some(&ri) = at[&cur].iter().find(|&&ri| !used[ri]) else {
            return Err(CellError::InvalidComplex("link walk stuck".into()));
        };
        used[ri] = true;
        let rec = &recs[ri];
        let forward = rec.left == cur;
        corner_walk.push((rec.occ, forward));
        cur = if forward { rec.right } else { rec.left };
        if cur == marked[0] {
            break;
        }
        ends_walk.push(cur);
    }
    if corner_walk.len() != recs.len() {
        return Err(CellError::InvalidComplex("link of node is not a single circle".into()));
    }

    // ---- Transversality: the strands must interleave around the link. ----
    let pos_of = |end: EdgeEnd| {
        ends_walk
            .iter()
            .position(|&x| x == end)
            .ok_or_else(|| CellError::NoSuchNode("strand end missing from link".into()))
    };
    let mut others = [
        (pos_of(depart(pi))?, 1u8),
        (pos_of(arrive(pj))?, 2),
        (pos_of(depart(pj))?, 2),
    ];
    others.sort_unstable();
    // marked[0] (strand 1) sits at position 0, so around the circle the
    // strand tags must read 1, 2, 1, 2.
    if [others[0].1, others[1].1, others[2].1] != [2, 1, 2] {
        return Err(CellError::NoSuchNode("crossing is not transverse".into()));
    }
    let (w2, w3, w4) = (others[0].0, others[1].0, others[2].0);
    let alpha2_forward = ends_walk[w2] == arrive(pj);

    // ---- Truncate: one fresh link edge per corner (two where a segment of
    // length 1 must make room for the patch's interior vertex). ----
    let seg_of = |t: usize| -> usize {
        // Corner t sits between ends t and t+1.
        if t < w2 {
            0
        } else if t < w3 {
            1
        } else if t < w4 {
            2
        } else {
            3
        }
    };
    let k = corner_walk.len();
    let mut seg_sizes = [0usize; 4];
    for t in 0..k {
        seg_sizes[seg_of(t)] += 1;
    }
    if seg_sizes.iter().any(|&s| s == 0) {
        return Err(CellError::NoSuchNode("degenerate link segment".into()));
    }
    let mut out = cs.clone();
    // Corner t gets 1 or 2 fresh edges, polygon-oriented.
    let mut corner_edges: Vec<Vec<usize>> = Vec::with_capacity(k);
    for t in 0..k {
        let split = (seg_of(t) == 1 && seg_sizes[1] == 1) || (seg_of(t) == 3 && seg_sizes[3] == 1);
        let mut ids = vec![out.add_edge(&format!("l{t}"))];
        if split {
            ids.push(out.add_edge(&format!("l{t}b")));
        }
        corner_edges.push(ids);
    }
    // Rebuild polygons with the link edges inserted before each v-corner.
    let mut inserts: BTreeMap<Occ, Vec<OrientedEdge>> = BTreeMap::new();
    for (t, &(corner, _)) in corner_walk.iter().enumerate() {
        let word: Vec<OrientedEdge> = corner_edges[t].iter().map(|&id| OrientedEdge::fwd(id)).collect();
        inserts.insert(corner, word);
    }
    let mut rebuilt = Vec::with_capacity(out.polygons.len() + 3);
    for (p, poly) in cs.polygons.iter().enumerate() {
        let mut word = Vec::with_capacity(poly.len() + 4);
        for (i, side) in poly.iter().enumerate() {
            if let Some(ins) = inserts.get(&(p, i)) {
                word.extend(ins.iter().copied());
            }
            word.push(*side);
        }
        rebuilt.push(word);
    }
    out.polygons = rebuilt;

    // Walk-ordered boundary segments as (edge, walk-forward?) lists.
    let mut segments: [Vec<(usize, bool)>; 4] = Default::default();
    for (t, &(_, forward)) in corner_walk.iter().enumerate() {
        let seg = seg_of(t);
        if forward {
            for &id in &corner_edges[t] {
                segments[seg].push((id, true));
            }
        } else {
            for &id in corner_edges[t].iter().rev() {
                segments[seg].push((id, false));
            }
        }
    }

    // ---- Möbius patch. ----
    let a1 = out.add_edge("r1");
    let a2 = out.add_edge("r2");
    let g = out.add_edge("rg");
    let along = |seg: &[(usize, bool)]| -> Vec<OrientedEdge> {
        seg.iter().map(|&(e, d)| OrientedEdge { edge: e, reversed: !d }).collect()
    };
    let against = |seg: &[(usize, bool)]| -> Vec<OrientedEdge> {
        seg.iter().rev().map(|&(e, d)| OrientedEdge { edge: e, reversed: d }).collect()
    };
    let (s3_part, t1_part) = segments[1].split_at(1);
    let (t3_part, s1_part) = segments[3].split_at(1);

    let mut f1 = along(s1_part);
    f1.push(OrientedEdge::fwd(a1));
    f1.extend(against(t1_part));
    f1.push(OrientedEdge::fwd(g));

    let mut f2 = along(&segments[0]);
    f2.push(OrientedEdge::fwd(a2));
    f2.extend(against(&segments[2]));
    f2.push(OrientedEdge::rev(a1));

    let mut f3 = along(s3_part);
    f3.push(OrientedEdge::fwd(g));
    f3.extend(against(t3_part));
    f3.push(OrientedEdge::rev(a2));

    out.polygons.extend([f1, f2, f3]);

    // ---- Reroute the curve through the patch arcs. ----
    let mut cycle = c.cycle.clone();
    let ins1 = OrientedEdge::fwd(a1);
    let ins2 = if alpha2_forward { OrientedEdge::fwd(a2) } else { OrientedEdge::rev(a2) };
    // Insert before position pj first so pi stays valid (pi < pj).
    cycle.insert(pj, ins2);
    cycle.insert(pi, ins1);
    let trace = CurveTrace::new(&out, cycle)?;
    if trace.crossings.len() != c.crossings.len() - 1 {
        return Err(CellError::InvalidComplex(format!(
            "node resolution left {} crossings (expected {})",
            trace.crossings.len(),
            c.crossings.len() - 1
        )));
    }
    Ok((out, trace))
}

/// Subdivide the cycle edges found at the given cycle positions, in both the
/// polygons and the cycle. Returns the new complex and cycle plus the map
/// from old cycle positions to new ones (same start vertex).
fn subdivide_cycle_positions(
    cs: &CellSurface,
    cycle: &[OrientedEdge],
    positions: &[usize],
) -> (CellSurface, Vec<OrientedEdge>, Vec<usize>) {
    let mut out = cs.clone();
    let mut halves: BTreeMap<usize, usize> = BTreeMap::new();
    for &k in positions {
        let e = cycle[k].edge;
        if halves.contains_key(&e) {
            continue;
        }
        let base = cs.edge_names[e].clone();
        let mut first = format!("{base}.1");
        while out.edge_names.contains(&first) {
            first.push('\'');
        }
        out.edge_names[e] = first;
        let e2 = out.add_edge(&format!("{base}.2"));
        halves.insert(e, e2);
    }
    let split = |oe: &OrientedEdge| -> Vec<OrientedEdge> {
        match halves.get(&oe.edge) {
            Some(&e2) if !oe.reversed => vec![OrientedEdge::fwd(oe.edge), OrientedEdge::fwd(e2)],
            Some(&e2) => vec![OrientedEdge::rev(e2), OrientedEdge::rev(oe.edge)],
            None => vec![*oe],
        }
    };
    out.polygons = cs
        .polygons
        .iter()
        .map(|poly| poly.iter().flat_map(|side| split(side)).collect())
        .collect();
    let mut new_cycle = Vec::with_capacity(cycle.len() + positions.len());
    let mut posmap = Vec::with_capacity(cycle.len());
    for oe in cycle {
        posmap.push(new_cycle.len());
        new_cycle.extend(split(oe));
    }
    (out, new_cycle, posmap)
}

/// Resolve crossings until the trace is embedded.
pub fn resolve_all_nodes(
    cs: &CellSurface,
    c: &CurveTrace,
) -> Result<(CellSurface, CurveTrace), CellError> {
    let (mut s, mut t) = (cs.clone(), c.clone());
    while !t.is_embedded() {
        let (s2, t2) = blow_up_point(&s, &t, BlowUpLocation::AtNode { crossing: 0 })?;
        s = s2;
        t = t2;
    }
    Ok((s, t))
}

/// Sphere with an immersed curve that goes around the equator twice with
/// 2g+1 transverse self-intersections: 2g lens faces plus a chord-split lens
/// make up the 2g+2 equatorial regions between the two strand passes, with
/// northern/southern hemisphere faces above and below.
pub fn equator_double_curve(g: u32) -> (CellSurface, CurveTrace) {
    assert!(g >= 1, "needs at least one handle");
    let n = (2 * g + 1) as usize;
    let mut names = Vec::new();
    let mut name = |s: String| {
        names.push(s);
        names.len() - 1
    };
    let a: Vec<usize> = (0..n - 1).map(|i| name(format!("a{i}"))).collect();
    let b: Vec<usize> = (0..n - 1).map(|i| name(format!("b{i}"))).collect();
    let p1 = name("p1".into());
    let p2 = name("p2".into());
    let q1 = name("q1".into());
    let q2 = name("q2".into());
    let m = name("m".into());

    let mut polygons: Vec<Vec<OrientedEdge>> = Vec::new();
    for i in 0..n - 1 {
        polygons.push(vec![OrientedEdge::fwd(b[i]), OrientedEdge::rev(a[i])]);
    }
    polygons.push(vec![OrientedEdge::fwd(q1), OrientedEdge::rev(m), OrientedEdge::rev(p1)]);
    polygons.push(vec![OrientedEdge::fwd(q2), OrientedEdge::rev(p2), OrientedEdge::fwd(m)]);
    let mut north: Vec<OrientedEdge> = a.iter().map(|&e| OrientedEdge::fwd(e)).collect();
    north.push(OrientedEdge::fwd(p1));
    north.push(OrientedEdge::fwd(p2));
    polygons.push(north);
    let mut south = vec![OrientedEdge::rev(q2), OrientedEdge::rev(q1)];
    south.extend(b.iter().rev().map(|&e| OrientedEdge::rev(e)));
    polygons.push(south);

    let cs = CellSurface { polygons, edge_names: names };

    let mut cycle = Vec::new();
    for i in 0..n - 1 {
        cycle.push(OrientedEdge::fwd(if i % 2 == 0 { a[i] } else { b[i] }));
    }
    cycle.push(OrientedEdge::fwd(p1));
    cycle.push(OrientedEdge::fwd(p2));
    for i in 0..n - 1 {
        cycle.push(OrientedEdge::fwd(if i % 2 == 0 { b[i] } else { a[i] }));
    }
    cycle.push(OrientedEdge::fwd(q1));
    cycle.push(OrientedEdge::fwd(q2));

    let trace = CurveTrace::new(&cs, cycle).expect("equator trace is a valid closed walk");
    (cs, trace)
}

/// Standard one-polygon complex for a closed surface.
pub fn surface_complex(s: ClosedSurface) -> CellSurface {
    let mut names = Vec::new();
    let mut word = Vec::new();
    match s {
        ClosedSurface::Orientable { genus: 0 } => {
            // Sphere as a pillow: two 1-gons won't do (a monogon pair is a
            // sphere too, but keep one polygon with a cancelling pair).
            names.push("d".into());
            word.push(OrientedEdge::fwd(0));
            word.push(OrientedEdge::rev(0));
        }
        ClosedSurface::Orientable { genus } => {
            for h in 0..genus {
                let a = names.len();
                names.push(format!("h{h}a"));
                names.push(format!("h{h}b"));
                word.push(OrientedEdge::fwd(a));
                word.push(OrientedEdge::fwd(a + 1));
                word.push(OrientedEdge::rev(a));
                word.push(OrientedEdge::rev(a + 1));
            }
        }
        ClosedSurface::NonOrientable { crosscaps } => {
            for c in 0..crosscaps {
                let a = names.len();
                names.push(format!("c{c}"));
                word.push(OrientedEdge::fwd(a));
                word.push(OrientedEdge::fwd(a));
            }
        }
    }
    CellSurface { polygons: vec![word], edge_names: names }
}

/// A word realized as an explicit complex, with the two complement faces of a
/// separating base tracked so side-tagged sums land on the right side.
#[derive(Clone, Debug)]
pub struct Realization {
    pub surface: CellSurface,
    pub curve: CurveTrace,
    pub left_face: Option<usize>,
    pub right_face: Option<usize>,
}

fn base_realization(base: BaseToken) -> Result<Realization, CellError> {
    let (text, cycle_text, left, right) = match base {
        BaseToken::S2L => ("e1 e2\ne2~ e1~", "e1 e2", Some(0), Some(1)),
        BaseToken::T2L => ("a b a~ b~", "a", None, None),
        BaseToken::KL => ("a b a~ b", "a", None, None),
        BaseToken::KF => ("a b a b~", "a", None, None),
        BaseToken::RP2L => ("a a", "a", None, None),
        BaseToken::T2NULL => ("e1 e2\ne2~ e1~", "e1 e2", Some(0), Some(1)),
    };
    let mut surface = parse_complex(text)?;
    let mut curve = {
        let cycle = parse_cycle(&surface, cycle_text)?;
        CurveTrace::new(&surface, cycle)?
    };
    if base == BaseToken::T2NULL {
        // Left is the torus side by convention.
        surface = surface.connected_sum(0, &surface_complex(TORUS))?;
        curve = CurveTrace::new(&surface, curve.cycle)?;
    }
    Ok(Realization { surface, curve, left_face: left, right_face: right })
}

/// Build an explicit cell-complex realization of a pair word: base complex,
/// then one on-curve blow-up per RP2L pair-sum, then connected sums of the
/// surface summands into the appropriate faces.
pub fn realize(word: &PairWord) -> Result<Realization, CellError> {
    word.validate().map_err(|e| CellError::Realize(e.to_string()))?;
    let mut r = base_realization(word.base)?;
    for _ in 0..word.rp2l_count {
        let (s, c) = blow_up_point(&r.surface, &r.curve, BlowUpLocation::OnCurve { cycle_pos: 0 })?;
        r.surface = s;
        r.curve = c;
        r.left_face = None;
        r.right_face = None;
    }
    let separating = word.base.is_separating() && word.rp2l_count == 0;
    for &(x, side) in &word.summands {
        if x == SPHERE {
            continue;
        }
        let face = match side {
            Side::Left => r.left_face.ok_or_else(|| CellError::Realize("no left side".into()))?,
            Side::Right => r.right_face.ok_or_else(|| CellError::Realize("no right side".into()))?,
            Side::Any if separating => {
                return Err(CellError::Realize("side required on a separating pair".into()))
            }
            Side::Any => 0,
        };
        r.surface = r.surface.connected_sum(face, &surface_complex(x))?;
        r.curve = CurveTrace::new(&r.surface, r.curve.cycle)?;
    }
    Ok(r)
}

/// Every valid word whose summand complexity (RP2L count + crosscaps + 2·genus)
/// is at most `max`. Sphere summands are no-ops and are skipped.
pub fn enumerate_words(max: u32) -> Vec<PairWord> {
    let mut words = Vec::new();
    let bases = [
        BaseToken::S2L,
        BaseToken::T2L,
        BaseToken::KL,
        BaseToken::KF,
        BaseToken::RP2L,
        BaseToken::T2NULL,
    ];
    for base in bases {
        if base.is_separating() {
            for lr in 0..=max {
                for lt in 0..=(max - lr) / 2 {
                    for rr in 0..=(max - lr - 2 * lt) {
                        for rt in 0..=(max - lr - 2 * lt - rr) / 2 {
                            let mut summands = Vec::new();
                            summands.extend((0..lr).map(|_| (RP2, Side::Left)));
                            summands.extend((0..lt).map(|_| (TORUS, Side::Left)));
                            summands.extend((0..rr).map(|_| (RP2, Side::Right)));
                            summands.extend((0..rt).map(|_| (TORUS, Side::Right)));
                            words.push(PairWord { base, rp2l_count: 0, summands });
                        }
                    }
                }
            }
            for rp2l in 1..=max {
                for c in 0..=(max - rp2l) {
                    for t in 0..=(max - rp2l - c) / 2 {
                        let mut summands = Vec::new();
                        summands.extend((0..c).map(|_| (RP2, Side::Any)));
                        summands.extend((0..t).map(|_| (TORUS, Side::Any)));
                        words.push(PairWord { base, rp2l_count: rp2l, summands });
                    }
                }
            }
        } else {
            for rp2l in 0..=max {
                for c in 0..=(max - rp2l) {
                    for t in 0..=(max - rp2l - c) / 2 {
                        let mut summands = Vec::new();
                        summands.extend((0..c).map(|_| (RP2, Side::Any)));
                        summands.extend((0..t).map(|_| (TORUS, Side::Any)));
                        words.push(PairWord { base, rp2l_count: rp2l, summands });
                    }
                }
            }
        }
    }
    words
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub words: usize,
    pub mismatches: Vec<(String, TopPair, TopPair)>,
}

/// Exhaustive oracle-equivalence check: for every word within the complexity
/// bound, the symbolic evaluation and the cut-complex classification of an
/// explicit realization must agree.
pub fn oracle_word_sweep(max_complexity: u32) -> SweepReport {
    let words = enumerate_words(max_complexity);
    let total = words.len();
    let mismatches = crate::par_flat_map(words, |word| {
        let symbolic = match normalize(&word) {
            Ok(p) => p,
            Err(e) => return vec![(format!("{word}: {e}"), TopPair::sphere_circle(), TopPair::sphere_circle())],
        };
        let oracle = realize(&word)
            .and_then(|r| canonical_pair(&r.surface, &r.curve));
        match oracle {
            Ok(p) if p == symbolic => vec![],
            Ok(p) => vec![(word.to_string(), symbolic, p)],
            Err(e) => vec![(format!("{word}: {e}"), symbolic, symbolic)],
        }
    });
    SweepReport { words: total, mismatches }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairalg::{ClosedSurface, KLEIN, RP2, SPHERE, TORUS};

    fn complex(text: &str) -> CellSurface {
        parse_complex(text).unwrap()
    }

    fn trace(cs: &CellSurface, cycle: &str) -> CurveTrace {
        CurveTrace::new(cs, parse_cycle(cs, cycle).unwrap()).unwrap()
    }

    #[test]
    fn invariants_of_standard_words() {
        let torus = complex("a b a~ b~");
        let inv = torus.invariants().unwrap();
        assert_eq!((inv.chi, inv.orientable), (0, true));
        let rp2 = complex("a a");
        let inv = rp2.invariants().unwrap();
        assert_eq!((inv.chi, inv.orientable), (1, false));
        let klein = complex("a b a b~");
        let inv = klein.invariants().unwrap();
        assert_eq!((inv.chi, inv.orientable), (0, false));
        assert_eq!(complex("a b a~ b~").classify().unwrap(), TORUS);
        assert_eq!(surface_complex(ClosedSurface::orientable(2)).classify().unwrap(), ClosedSurface::orientable(2));
        assert_eq!(surface_complex(ClosedSurface::non_orientable(5)).classify().unwrap(), ClosedSurface::non_orientable(5));
        assert_eq!(surface_complex(SPHERE).classify().unwrap(), SPHERE);
    }

    #[test]
    fn invalid_complexes_are_rejected() {
        assert!(complex("a b a~").validate().is_err());
        assert!(complex("a a\nb b").validate().is_err());
    }

    #[test]
    fn text_round_trip() {
        let cs = complex("a b a~ b\nc c");
        let again = complex(&cs.to_string());
        assert_eq!(cs.polygons, again.polygons);
        assert_eq!(cs.edge_names, again.edge_names);
    }

    #[test]
    fn canonical_pairs_of_named_complexes() {
        let torus = complex("a b a~ b~");
        assert_eq!(canonical_pair(&torus, &trace(&torus, "a")).unwrap(), TopPair::torus_essential());
        let klein = complex("a b a b~");
        assert_eq!(canonical_pair(&klein, &trace(&klein, "a")).unwrap(), TopPair::klein_fiber());
        let klein_l = complex("a b a~ b");
        assert_eq!(canonical_pair(&klein_l, &trace(&klein_l, "a")).unwrap(), TopPair::klein_line());
        let rp2 = complex("a a");
        assert_eq!(canonical_pair(&rp2, &trace(&rp2, "a")).unwrap(), TopPair::rp2_line());
        let sphere = complex("e1 e2\ne2~ e1~");
        assert_eq!(canonical_pair(&sphere, &trace(&sphere, "e1 e2")).unwrap(), TopPair::sphere_circle());
    }

    #[test]
    fn connected_sum_adds_material() {
        let torus = complex("a b a~ b~");
        let sum = torus.connected_sum(0, &surface_complex(RP2)).unwrap();
        assert_eq!(sum.classify().unwrap(), ClosedSurface::non_orientable(3));
        let sum2 = torus.connected_sum(0, &surface_complex(TORUS)).unwrap();
        assert_eq!(sum2.classify().unwrap(), ClosedSurface::orientable(2));
        assert_eq!(
            sum.invariants().unwrap().chi,
            torus.invariants().unwrap().chi + RP2.euler_char() - 2
        );
    }

    #[test]
    fn off_curve_blow_up_per_side() {
        let sphere = complex("e1 e2\ne2~ e1~");
        let tr = trace(&sphere, "e1 e2");
        for face in [0usize, 1] {
            let (s, c) = blow_up_point(&sphere, &tr, BlowUpLocation::OffCurve { face }).unwrap();
            assert_eq!(canonical_pair(&s, &c).unwrap(), TopPair::separating(RP2, SPHERE));
        }
    }

    #[test]
    fn on_curve_blow_up_is_rp2_line_sum() {
        let sphere = complex("e1 e2\ne2~ e1~");
        let tr = trace(&sphere, "e1 e2");
        let (s, c) = blow_up_point(&sphere, &tr, BlowUpLocation::OnCurve { cycle_pos: 0 }).unwrap();
        assert_eq!(canonical_pair(&s, &c).unwrap(), TopPair::rp2_line());
        assert_eq!(s.invariants().unwrap().chi, 1);
        // Iterate: the variant keeps cycling and χ keeps dropping.
        let (s2, c2) = blow_up_point(&s, &c, BlowUpLocation::OnCurve { cycle_pos: 0 }).unwrap();
        assert_eq!(canonical_pair(&s2, &c2).unwrap(), TopPair::klein_fiber());
        let (s3, c3) = blow_up_point(&s2, &c2, BlowUpLocation::OnCurve { cycle_pos: 0 }).unwrap();
        assert_eq!(canonical_pair(&s3, &c3).unwrap(), TopPair::one_sided(TORUS));
        let (s4, c4) = blow_up_point(&s3, &c3, BlowUpLocation::OnCurve { cycle_pos: 0 }).unwrap();
        assert_eq!(canonical_pair(&s4, &c4).unwrap(), TopPair::non_sep(TORUS, false));
    }

    #[test]
    fn figure_eight_resolution() {
        // Transverse figure-eight on the sphere: one node.
        let cs = complex("a\nb\na~ b");
        assert_eq!(cs.classify().unwrap(), SPHERE);
        let tr = trace(&cs, "a b");
        assert_eq!(tr.crossings.len(), 1);
        let (s, c) = blow_up_point(&cs, &tr, BlowUpLocation::AtNode { crossing: 0 }).unwrap();
        assert!(c.is_embedded());
        assert_eq!(s.invariants().unwrap().chi, 1);
        assert_eq!(canonical_pair(&s, &c).unwrap(), TopPair::separating(RP2, SPHERE));
    }

    #[test]
    fn equator_complex_shape() {
        for g in 1..=3u32 {
            let (cs, tr) = equator_double_curve(g);
            let inv = cs.invariants().unwrap();
            assert_eq!((inv.chi, inv.orientable), (2, true));
            assert_eq!(tr.crossings.len(), (2 * g + 1) as usize);
            // Faces: equatorial regions plus the two hemispheres.
            assert_eq!(inv.faces, (2 * g + 2 + 2) as usize);
        }
    }

    #[test]
    fn equator_resolution_gives_moebius_plus_handles() {
        for g in 1..=2u32 {
            let (cs, tr) = equator_double_curve(g);
            let (s, c) = resolve_all_nodes(&cs, &tr).unwrap();
            assert_eq!(
                canonical_pair(&s, &c).unwrap(),
                TopPair::separating(RP2, ClosedSurface::orientable(g))
            );
            assert_eq!(s.invariants().unwrap().chi, 2 - (2 * g + 1) as i64);
        }
    }

    #[test]
    fn separating_sides_are_identified() {
        let (cs, tr) = equator_double_curve(1);
        let (s, c) = resolve_all_nodes(&cs, &tr).unwrap();
        let sides = separating_side_faces(&s, &c).unwrap();
        let mut surfaces: Vec<ClosedSurface> = sides.iter().map(|(x, _)| *x).collect();
        surfaces.sort();
        assert_eq!(surfaces, vec![TORUS, RP2]);
        // Summing a crosscap into the identified non-orientable side.
        let (nonor_face,) = sides
            .iter()
            .find(|(x, _)| !x.is_orientable())
            .map(|(_, f)| (*f,))
            .unwrap();
        let s2 = s.connected_sum(nonor_face, &surface_complex(RP2)).unwrap();
        let c2 = CurveTrace::new(&s2, c.cycle.clone()).unwrap();
        assert_eq!(
            canonical_pair(&s2, &c2).unwrap(),
            TopPair::separating(KLEIN, TORUS)
        );
    }

    #[test]
    fn realize_matches_symbolic_on_base_words() {
        for base in ["S2L", "T2L", "KL", "KF", "RP2L", "T2NULL"] {
            let word: PairWord = base.parse().unwrap();
            let r = realize(&word).unwrap();
            assert_eq!(
                canonical_pair(&r.surface, &r.curve).unwrap(),
                normalize(&word).unwrap(),
                "base {base}"
            );
        }
    }

    #[test]
    fn realize_matches_symbolic_on_sample_words() {
        for w in [
            "S2L + 4*RP2L",
            "S2L + L:RP2 + R:2*RP2",
            "S2L + L:T2 + R:RP2",
            "T2NULL + L:RP2",
            "T2NULL + R:2*RP2",
            "KL + 2*RP2L + RP2",
            "KF + 1*RP2L + T2",
            "T2L + 3*RP2L",
            "RP2L + 2*RP2L + RP2",
        ] {
            let word: PairWord = w.parse().unwrap();
            let r = realize(&word).unwrap();
            assert_eq!(
                canonical_pair(&r.surface, &r.curve).unwrap(),
                normalize(&word).unwrap(),
                "word {w}"
            );
        }
    }

    #[test]
    fn small_sweep_is_clean() {
        let report = oracle_word_sweep(4);
        assert!(report.words > 100);
        assert!(report.mismatches.is_empty(), "{:?}", report.mismatches);
    }
}

//! Conforming triangulations of the disc: a built-in ring mesher, a reader
//! for Triangle's `.node`/`.ele` text formats, and per-node zone tags for
//! the protective band along the outer boundary.

use crate::error::{Error, Result};

/// Zone label attached to every mesh node.
///
/// `DeltaZone` marks interior nodes lying within the protective band of
/// width `delta` measured from the outer boundary; boundary nodes keep the
/// `Boundary` tag and are counted as part of the band as well (see
/// [`TriMesh::in_delta_zone`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeTag {
    Interior,
    Boundary,
    DeltaZone,
}

impl NodeTag {
    pub fn as_u8(self) -> u8 {
        match self {
            NodeTag::Interior => 0,
            NodeTag::Boundary => 1,
            NodeTag::DeltaZone => 2,
        }
    }

    pub fn from_u8(v: u8) -> Result<NodeTag> {
        match v {
            0 => Ok(NodeTag::Interior),
            1 => Ok(NodeTag::Boundary),
            2 => Ok(NodeTag::DeltaZone),
            other => Err(Error::invalid(format!("unknown node tag {other}"))),
        }
    }
}

/// Conforming triangle mesh with counter-clockwise elements, an oriented
/// boundary cycle and cached element geometry.
#[derive(Debug, Clone)]
pub struct TriMesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<(usize, usize)>,
    boundary_nodes: Vec<usize>,
    node_tags: Vec<NodeTag>,
    h: f64,
    areas: Vec<f64>,
    lumped_mass: Vec<f64>,
    delta: f64,
    /// Radius of the generating circle, when the mesh came from the disc mesher.
    radius: Option<f64>,
}

impl TriMesh {
    /// Validates raw connectivity and builds the derived structures.
    ///
    /// Triangles with negative signed area are reoriented; zero-area
    /// triangles are rejected. The boundary must form a single closed cycle.
    pub fn new(nodes: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<TriMesh> {
        Self::with_radius(nodes, triangles, None)
    }

    fn with_radius(
        nodes: Vec<[f64; 2]>,
        mut triangles: Vec<[usize; 3]>,
        radius: Option<f64>,
    ) -> Result<TriMesh> {
        if nodes.len() < 3 || triangles.is_empty() {
            return Err(Error::invalid("mesh needs at least 3 nodes and 1 triangle"));
        }
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= nodes.len() {
                    return Err(Error::invalid(format!(
                        "triangle {t} references node {v} out of range"
                    )));
                }
            }
            let a = signed_area(&nodes, *tri);
            if a == 0.0 || !a.is_finite() {
                return Err(Error::invalid(format!("triangle {t} is degenerate")));
            }
            if a < 0.0 {
                tri.swap(1, 2);
            }
        }
        let boundary_edges = extract_boundary(&nodes, &triangles)?;
        let boundary_nodes: Vec<usize> = boundary_edges.iter().map(|&(a, _)| a).collect();

        let areas: Vec<f64> = triangles.iter().map(|&t| signed_area(&nodes, t)).collect();
        let mut lumped_mass = vec![0.0; nodes.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri.iter() {
                lumped_mass[v] += areas[t] / 3.0;
            }
        }
        let mut h: f64 = 0.0;
        for tri in &triangles {
            for k in 0..3 {
                let a = nodes[tri[k]];
                let b = nodes[tri[(k + 1) % 3]];
                h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        let mut node_tags = vec![NodeTag::Interior; nodes.len()];
        for &b in &boundary_nodes {
            node_tags[b] = NodeTag::Boundary;
        }
        Ok(TriMesh {
            nodes,
            triangles,
            boundary_edges,
            boundary_nodes,
            node_tags,
            h,
            areas,
            lumped_mass,
            delta: 0.0,
            radius,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        self.nodes[i]
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Boundary edges as (from, to) pairs, counter-clockwise around the domain.
    pub fn boundary_edges(&self) -> &[(usize, usize)] {
        &self.boundary_edges
    }

    /// Boundary node indices in cycle order; entry `k` is the source node of
    /// `boundary_edges()[k]`.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn tag(&self, i: usize) -> NodeTag {
        self.node_tags[i]
    }

    pub fn tags(&self) -> &[NodeTag] {
        &self.node_tags
    }

    /// True for nodes inside the protective band, boundary nodes included.
    pub fn in_delta_zone(&self, i: usize) -> bool {
        matches!(self.node_tags[i], NodeTag::Boundary | NodeTag::DeltaZone)
    }

    /// Characteristic mesh size: the longest edge.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Lumped P1 mass (one third of the area of the incident triangles).
    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped_mass
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        [
            (self.nodes[a][0] + self.nodes[b][0] + self.nodes[c][0]) / 3.0,
            (self.nodes[a][1] + self.nodes[b][1] + self.nodes[c][1]) / 3.0,
        ]
    }

    /// Width of the currently tagged protective band.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    /// Polar angle of a boundary node about the origin.
    pub fn boundary_angle(&self, node: usize) -> f64 {
        let [x, y] = self.nodes[node];
        y.atan2(x)
    }

    /// Distance from a point to the outer boundary: exact circle distance for
    /// generated disc meshes, distance to the boundary polyline otherwise.
    pub fn distance_to_boundary(&self, p: [f64; 2]) -> f64 {
        if let Some(r) = self.radius {
            return (r - (p[0] * p[0] + p[1] * p[1]).sqrt()).abs();
        }
        let mut best = f64::INFINITY;
        for &(a, b) in &self.boundary_edges {
            best = best.min(point_segment_distance(p, self.nodes[a], self.nodes[b]));
        }
        best
    }

    /// FNV-1a hash over node coordinates and connectivity; stable across runs
    /// and recorded in run manifests.
    pub fn content_hash(&self) -> u64 {
        let mut hash: u64 = 0xcbf29ce484222325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x100000001b3);
            }
        };
        for p in &self.nodes {
            eat(&p[0].to_le_bytes());
            eat(&p[1].to_le_bytes());
        }
        for t in &self.triangles {
            for &v in t.iter() {
                eat(&(v as u64).to_le_bytes());
            }
        }
        hash
    }
}

fn signed_area(nodes: &[[f64; 2]], [a, b, c]: [usize; 3]) -> f64 {
    let (pa, pb, pc) = (nodes[a], nodes[b], nodes[c]);
    0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Collects edges owned by exactly one triangle and chains them into the
/// single counter-clockwise boundary cycle.
fn extract_boundary(
    nodes: &[[f64; 2]],
    triangles: &[[usize; 3]],
) -> Result<Vec<(usize, usize)>> {
    use std::collections::HashMap;
    let _ = nodes;
    // directed edge (a,b) of a CCW triangle has the domain on its left; a
    // boundary edge is one whose reverse never occurs.
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in triangles {
        for k in 0..3 {
            let e = (tri[k], tri[(k + 1) % 3]);
            *seen.entry(e).or_insert(0) += 1;
            if seen[&e] > 1 {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) appears twice with the same orientation",
                    e.0, e.1
                )));
            }
        }
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    let mut start = usize::MAX;
    for (&(a, b), _) in seen.iter() {
        if !seen.contains_key(&(b, a)) {
            if next.insert(a, b).is_some() {
                return Err(Error::invalid(format!(
                    "boundary branches at node {a}; not a single cycle"
                )));
            }
            start = start.min(a);
        }
    }
    if start == usize::MAX {
        return Err(Error::invalid("mesh has no boundary"));
    }
    let mut cycle = Vec::with_capacity(next.len());
    let mut cur = start;
    loop {
        let nxt = *next
            .get(&cur)
            .ok_or_else(|| Error::invalid(format!("boundary cycle breaks at node {cur}")))?;
        cycle.push((cur, nxt));
        cur = nxt;
        if cur == start {
            break;
        }
        if cycle.len() > next.len() {
            return Err(Error::invalid("boundary is not a single closed cycle"));
        }
    }
    if cycle.len() != next.len() {
        return Err(Error::invalid(
            "boundary has more than one connected component",
        ));
    }
    Ok(cycle)
}

/// Builds a disc mesh from concentric node rings with azimuthal counts
/// proportional to the ring index, stitched ring by ring.
///
/// The realized longest edge stays within a factor two of `target_h`; the
/// ring count is rounded to an even number so that one node circle falls at
/// half the radius, where the reference experiments place the inclusion
/// interface.
pub fn generate_disc_mesh(radius: f64, target_h: f64) -> Result<TriMesh> {
    if !(radius > 0.0) || !(target_h > 0.0) {
        return Err(Error::invalid(format!(
            "radius and target_h must be positive, got radius={radius}, target_h={target_h}"
        )));
    }
    let ideal = 2.08 * radius / target_h;
    let rings = if ideal < 1.5 {
        1usize
    } else {
        (2.0 * (ideal / 2.0).round()) as usize
    };

    let ring_offset = |k: usize| -> usize {
        if k == 0 {
            0
        } else {
            1 + 3 * k * (k - 1)
        }
    };
    let ring_count = |k: usize| -> usize { if k == 0 { 1 } else { 6 * k } };

    let mut nodes: Vec<[f64; 2]> = Vec::with_capacity(1 + 3 * rings * (rings + 1));
    nodes.push([0.0, 0.0]);
    for k in 1..=rings {
        let r = radius * k as f64 / rings as f64;
        let n = ring_count(k);
        for j in 0..n {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            nodes.push([r * theta.cos(), r * theta.sin()]);
        }
    }

    let mut triangles: Vec<[usize; 3]> = Vec::with_capacity(6 * rings * rings);
    // innermost ring: fan around the center node
    for j in 0..ring_count(1) {
        triangles.push([0, 1 + j, 1 + (j + 1) % ring_count(1)]);
    }
    for k in 1..rings {
        let n_in = ring_count(k);
        let n_out = ring_count(k + 1);
        let off_in = ring_offset(k);
        let off_out = ring_offset(k + 1);
        let angle_in = |i: usize| 2.0 * std::f64::consts::PI * i as f64 / n_in as f64;
        let angle_out = |j: usize| 2.0 * std::f64::consts::PI * j as f64 / n_out as f64;
        // two-pointer stitch: advance on whichever ring has the smaller
        // next angle, closing triangles as we go
        let mut i = 0usize;
        let mut j = 0usize;
        while i < n_in || j < n_out {
            let advance_outer = if j >= n_out {
                false
            } else if i >= n_in {
                true
            } else {
                angle_out(j + 1) <= angle_in(i + 1)
            };
            if advance_outer {
                triangles.push([
                    off_in + i % n_in,
                    off_out + j % n_out,
                    off_out + (j + 1) % n_out,
                ]);
                j += 1;
            } else {
                triangles.push([
                    off_in + i % n_in,
                    off_out + j % n_out,
                    off_in + (i + 1) % n_in,
                ]);
                i += 1;
            }
        }
    }

    TriMesh::with_radius(nodes, triangles, Some(radius))
}

/// Like [`generate_disc_mesh`], but nodes near a given interior circle are
/// snapped onto it so that the circle is resolved by mesh edges.
///
/// Coefficient jumps across an unfitted circle cost one element layer of
/// smearing, which biases energy-based misfits; snapping removes the bias
/// for inclusion interfaces that do not share the mesh's ring structure.
/// Nodes within a third of the local ring spacing move radially (relative
/// to the circle's center) onto the circle; the topology is unchanged.
pub fn generate_fitted_disc_mesh(
    radius: f64,
    target_h: f64,
    circle_center: [f64; 2],
    circle_radius: f64,
) -> Result<TriMesh> {
    let base = generate_disc_mesh(radius, target_h)?;
    // ring count from the node count 1 + 3k(k+1), hence the radial spacing
    let rings = ((1.0 + 4.0 * (base.num_nodes() as f64 - 1.0) / 3.0).sqrt() - 1.0) / 2.0;
    let spacing = radius / rings.max(1.0);
    let snap = 0.35 * spacing;
    let original = base.nodes().to_vec();
    let mut nodes = original.clone();
    for p in nodes.iter_mut() {
        let dx = p[0] - circle_center[0];
        let dy = p[1] - circle_center[1];
        let d = (dx * dx + dy * dy).sqrt();
        if d > 1e-12 && (d - circle_radius).abs() < snap {
            // keep the outer boundary exact
            let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
            if rho < radius - 1e-9 {
                let scale = circle_radius / d;
                p[0] = circle_center[0] + dx * scale;
                p[1] = circle_center[1] + dy * scale;
            }
        }
    }
    // revert snaps that squash or invert an incident triangle
    let area_of = |nodes: &[[f64; 2]], tri: &[usize; 3]| -> f64 {
        let (a, b, c) = (nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    };
    for _ in 0..8 {
        let mut reverted = false;
        for tri in base.triangles() {
            let before = area_of(&original, tri);
            let after = area_of(&nodes, tri);
            if after <= 0.1 * before {
                for &v in tri.iter() {
                    if nodes[v] != original[v] {
                        nodes[v] = original[v];
                        reverted = true;
                    }
                }
            }
        }
        if !reverted {
            break;
        }
    }
    let mut mesh = TriMesh::with_radius(nodes, base.triangles().to_vec(), Some(radius))?;
    mesh.delta = base.delta;
    Ok(mesh)
}

/// Retags nodes whose distance to the outer boundary is below `delta`.
///
/// Boundary nodes keep the `Boundary` tag; [`TriMesh::in_delta_zone`] treats
/// both tags as members of the band.
pub fn tag_delta_zone(mesh: &TriMesh, delta: f64) -> Result<TriMesh> {
    if !(delta >= 0.0) {
        return Err(Error::invalid(format!("delta must be >= 0, got {delta}")));
    }
    let mut out = mesh.clone();
    out.delta = delta;
    for i in 0..out.nodes.len() {
        if out.node_tags[i] == NodeTag::Boundary {
            continue;
        }
        out.node_tags[i] = if mesh.distance_to_boundary(out.nodes[i]) < delta {
            NodeTag::DeltaZone
        } else {
            NodeTag::Interior
        };
    }
    Ok(out)
}

/// Parses Triangle's plain-text `.node` and `.ele` formats.
///
/// The index base (0 or 1) is detected from the first data row of each file;
/// comment lines start with `#`. Clockwise triangles are reoriented.
pub fn load_triangle_format(node_text: &str, ele_text: &str) -> Result<TriMesh> {
    let nodes = parse_node_file(node_text)?;
    let triangles = parse_ele_file(ele_text, nodes.len())?;
    TriMesh::new(nodes, triangles)
}

struct NumberedLine<'a> {
    line_no: usize,
    fields: Vec<&'a str>,
}

fn data_lines(text: &str) -> impl Iterator<Item = NumberedLine<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            None
        } else {
            Some(NumberedLine {
                line_no: i + 1,
                fields: body.split_whitespace().collect(),
            })
        }
    })
}

fn field<T: std::str::FromStr>(line: &NumberedLine<'_>, idx: usize, what: &str) -> Result<T> {
    let raw = line
        .fields
        .get(idx)
        .ok_or_else(|| Error::parse(line.line_no, format!("missing {what}")))?;
    raw.parse::<T>()
        .map_err(|_| Error::parse(line.line_no, format!("cannot parse {what} from {raw:?}")))
}

fn parse_node_file(text: &str) -> Result<Vec<[f64; 2]>> {
    let mut lines = data_lines(text);
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty .node file"))?;
    let count: usize = field(&header, 0, "node count")?;
    let dim: usize = field(&header, 1, "dimension")?;
    if dim != 2 {
        return Err(Error::parse(header.line_no, format!("expected 2-D nodes, got dim {dim}")));
    }
    if count == 0 {
        return Err(Error::parse(header.line_no, "node count is zero"));
    }
    let mut base: Option<usize> = None;
    let mut nodes = vec![None::<[f64; 2]>; count];
    let mut seen = 0usize;
    for line in lines {
        if seen == count {
            return Err(Error::parse(line.line_no, "more node rows than the header declared"));
        }
        let raw_idx: usize = field(&line, 0, "node index")?;
        let b = *base.get_or_insert(if raw_idx == 0 { 0 } else { 1 });
        let idx = raw_idx
            .checked_sub(b)
            .filter(|&i| i < count)
            .ok_or_else(|| Error::parse(line.line_no, format!("node index {raw_idx} out of range")))?;
        let x: f64 = field(&line, 1, "x coordinate")?;
        let y: f64 = field(&line, 2, "y coordinate")?;
        if nodes[idx].replace([x, y]).is_some() {
            return Err(Error::parse(line.line_no, format!("duplicate node index {raw_idx}")));
        }
        seen += 1;
    }
    if seen != count {
        return Err(Error::parse(0, format!("header declared {count} nodes, found {seen}")));
    }
    Ok(nodes.into_iter().map(|n| n.unwrap()).collect())
}

fn parse_ele_file(text: &str, num_nodes: usize) -> Result<Vec<[usize; 3]>> {
    let mut lines = data_lines(text);
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty .ele file"))?;
    let count: usize = field(&header, 0, "element count")?;
    let per: usize = field(&header, 1, "nodes per element")?;
    if per != 3 {
        return Err(Error::parse(header.line_no, format!("expected 3 nodes per element, got {per}")));
    }
    if count == 0 {
        return Err(Error::parse(header.line_no, "element count is zero"));
    }
    let mut base: Option<usize> = None;
    let mut node_base: Option<usize> = None;
    let mut tris = vec![None::<[usize; 3]>; count];
    let mut seen = 0usize;
    for line in lines {
        if seen == count {
            return Err(Error::parse(line.line_no, "more element rows than the header declared"));
        }
        let raw_idx: usize = field(&line, 0, "element index")?;
        let b = *base.get_or_insert(if raw_idx == 0 { 0 } else { 1 });
        let idx = raw_idx
            .checked_sub(b)
            .filter(|&i| i < count)
            .ok_or_else(|| Error::parse(line.line_no, format!("element index {raw_idx} out of range")))?;
        let mut corners = [0usize; 3];
        for (k, corner) in corners.iter_mut().enumerate() {
            let raw: usize = field(&line, 1 + k, "corner node index")?;
            let nb = *node_base.get_or_insert(if raw == 0 { 0 } else { 1 });
            *corner = raw
                .checked_sub(nb)
                .filter(|&i| i < num_nodes)
                .ok_or_else(|| {
                    Error::parse(line.line_no, format!("corner node index {raw} out of range"))
                })?;
        }
        if tris[idx].replace(corners).is_some() {
            return Err(Error::parse(line.line_no, format!("duplicate element index {raw_idx}")));
        }
        seen += 1;
    }
    if seen != count {
        return Err(Error::parse(0, format!("header declared {count} elements, found {seen}")));
    }
    Ok(tris.into_iter().map(|t| t.unwrap()).collect())
}

//! Dirichlet domains with face pairings and their coned barycentric
//! triangulations.

use std::collections::HashMap;

use nalgebra::{Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use super::geometry::{circumcenter, minkowski_dist, radial_project, GeodesicTet, HPoint, Isometry, MinkowskiVec};
use crate::error::{Error, Result};
use crate::spectrum::decimal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dec(#[serde(with = "decimal")] pub f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceSpec {
    /// Indices into the vertex list, in cyclic order.
    pub vertices: Vec<usize>,
}

/// `g` maps face `face` onto face `partner`, and `F(g x) = F(x) + phi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingSpec {
    pub face: usize,
    pub partner: usize,
    pub matrix: [[Dec; 4]; 4],
    pub phi: i64,
}

/// Domain file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub name: String,
    pub vertices: Vec<[Dec; 4]>,
    pub faces: Vec<FaceSpec>,
    pub pairings: Vec<PairingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<[Dec; 4]>,
}

fn point(v: &[Dec; 4]) -> Result<HPoint> {
    HPoint::new(MinkowskiVec(v.map(|d| d.0)))
}

fn dec4(p: &HPoint) -> [Dec; 4] {
    p.vec().0.map(Dec)
}

impl DomainSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// A cube of inradius `h` around the origin whose opposite faces are
    /// paired by the translations along the coordinate axes, each carrying
    /// `phi[axis]`. Vertex and edge cycles behave as for a flat 3-torus, so it
    /// is a convenient consistent test complex.
    pub fn cube(h: f64, phi: [i64; 3]) -> Result<Self> {
        // Faces are the planes x_i = +-tanh(h) x_0, at distance h from o.
        let t = h.tanh();
        let corner = |s: [f64; 3]| {
            let v = Vector3::new(s[0] * t, s[1] * t, s[2] * t);
            radial_project(MinkowskiVec::new(1.0, v[0], v[1], v[2]))
        };
        let signs: Vec<[f64; 3]> = (0..8)
            .map(|i| [if i & 1 == 0 { -1.0 } else { 1.0 }, if i & 2 == 0 { -1.0 } else { 1.0 }, if i & 4 == 0 { -1.0 } else { 1.0 }])
            .collect();
        let vertices: Vec<HPoint> = signs.iter().map(|s| corner(*s)).collect::<Result<_>>()?;
        let mut faces = Vec::new();
        let mut pairings = Vec::new();
        for axis in 0..3 {
            let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
            for side in [-1.0, 1.0] {
                let find = |sa: f64, sb: f64| {
                    signs.iter().position(|s| s[axis] == side && s[a] == sa && s[b] == sb).expect("cube corner")
                };
                faces.push(FaceSpec { vertices: vec![find(-1.0, -1.0), find(1.0, -1.0), find(1.0, 1.0), find(-1.0, 1.0)] });
            }
            let g = Isometry::boost(axis + 1, 2.0 * h);
            pairings.push(PairingSpec {
                face: 2 * axis,
                partner: 2 * axis + 1,
                matrix: std::array::from_fn(|r| std::array::from_fn(|c| Dec(g.0[(r, c)]))),
                phi: phi[axis],
            });
        }
        Ok(Self {
            name: format!("cube-{h}"),
            vertices: vertices.iter().map(dec4).collect(),
            faces,
            pairings,
            basepoint: None,
        })
    }
}

/// Which geometric slot a triangulation node occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Basepoint,
    Vertex(usize),
    Edge(usize, usize),
    Face(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub kind: NodeKind,
    pub point: HPoint,
    /// Free value slot this node reads from.
    pub slot: usize,
    /// `value(node) = values[slot] + offset`.
    pub offset: i64,
}

/// A gluing constraint `value(to) = value(from) + phi`, kept for residual checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gluing {
    pub from: usize,
    pub to: usize,
    pub phi: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainComplex {
    pub name: String,
    pub nodes: Vec<Node>,
    pub tets: Vec<[usize; 4]>,
    pub gluings: Vec<Gluing>,
    pub slots: usize,
}

impl DomainComplex {
    pub fn node_values(&self, values: &[f64]) -> Vec<f64> {
        self.nodes.iter().map(|n| values[n.slot] + n.offset as f64).collect()
    }

    pub fn tetrahedron(&self, i: usize) -> Result<GeodesicTet> {
        GeodesicTet::new(self.tets[i].map(|n| self.nodes[n].point))
    }

    /// Maximum of `|offset(to) - offset(from) - phi|` over gluings with a
    /// shared slot; zero for a consistent complex.
    pub fn equivariance_residual(&self) -> i64 {
        self.gluings
            .iter()
            .map(|g| (self.nodes[g.to].offset - self.nodes[g.from].offset - g.phi).abs())
            .max()
            .unwrap_or(0)
    }
}

struct Offsets {
    parent: Vec<usize>,
    /// `value(i) = value(parent[i]) + up[i]`.
    up: Vec<i64>,
}

impl Offsets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), up: vec![0; n] }
    }

    fn find(&mut self, i: usize) -> (usize, i64) {
        if self.parent[i] == i {
            return (i, 0);
        }
        let (root, off) = self.find(self.parent[i]);
        self.up[i] += off;
        self.parent[i] = root;
        (root, self.up[i])
    }

    /// Impose `value(b) = value(a) + phi`.
    fn union(&mut self, a: usize, b: usize, phi: i64) -> Result<()> {
        let (ra, oa) = self.find(a);
        let (rb, ob) = self.find(b);
        if ra == rb {
            if ob - oa != phi {
                return Err(Error::Infeasible(format!(
                    "gluing constraints disagree: offsets give {} but the pairing requires {phi}",
                    ob - oa
                )));
            }
            return Ok(());
        }
        // value(rb) = value(ra) + oa + phi - ob
        self.parent[rb] = ra;
        self.up[rb] = oa + phi - ob;
        Ok(())
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Barycentric subdivision of faces and edges coned on the basepoint. Every
/// face with `k` sides contributes `2k` tetrahedra.
pub fn triangulate(spec: &DomainSpec) -> Result<DomainComplex> {
    let verts: Vec<HPoint> = spec.vertices.iter().map(point).collect::<Result<_>>()?;
    let base = spec.basepoint.as_ref().map(point).transpose()?.unwrap_or_else(HPoint::origin);

    let mut nodes: Vec<(NodeKind, HPoint)> = vec![(NodeKind::Basepoint, base)];
    nodes.extend(verts.iter().enumerate().map(|(i, p)| (NodeKind::Vertex(i), *p)));
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut face_index = Vec::with_capacity(spec.faces.len());
    for (f, face) in spec.faces.iter().enumerate() {
        let k = face.vertices.len();
        if k < 3 || face.vertices.iter().any(|&v| v >= verts.len()) {
            return Err(Error::Schema(format!("face {f} needs at least three valid vertex indices")));
        }
        let sum = face.vertices.iter().fold(MinkowskiVec([0.0; 4]), |acc, &v| acc + verts[v].vec());
        face_index.push(nodes.len());
        nodes.push((NodeKind::Face(f), radial_project(sum)?));
        for j in 0..k {
            let key = edge_key(face.vertices[j], face.vertices[(j + 1) % k]);
            edge_index.entry(key).or_insert_with(|| {
                let p = radial_project(verts[key.0].vec() + verts[key.1].vec()).expect("sum of future vectors");
                nodes.push((NodeKind::Edge(key.0, key.1), p));
                nodes.len() - 1
            });
        }
    }
    let vertex_node = |v: usize| v + 1;

    let mut tets = Vec::new();
    for (f, face) in spec.faces.iter().enumerate() {
        let k = face.vertices.len();
        for j in 0..k {
            let (a, b) = (face.vertices[j], face.vertices[(j + 1) % k]);
            let e = edge_index[&edge_key(a, b)];
            tets.push([0, face_index[f], vertex_node(a), e]);
            tets.push([0, face_index[f], e, vertex_node(b)]);
        }
    }

    let mut offsets = Offsets::new(nodes.len());
    let mut gluings = Vec::new();
    for (pi, pairing) in spec.pairings.iter().enumerate() {
        let (fa, fb) = (pairing.face, pairing.partner);
        if fa >= spec.faces.len() || fb >= spec.faces.len() {
            return Err(Error::Schema(format!("pairing {pi} names a missing face")));
        }
        let g = Isometry::new(Matrix4::from_fn(|r, c| pairing.matrix[r][c].0))?;
        let on_face = |f: usize| -> Vec<usize> {
            let fv = &spec.faces[f].vertices;
            let k = fv.len();
            let mut out = vec![face_index[f]];
            out.extend(fv.iter().map(|&v| vertex_node(v)));
            out.extend((0..k).map(|j| edge_index[&edge_key(fv[j], fv[(j + 1) % k])]));
            out
        };
        let targets = on_face(fb);
        for src in on_face(fa) {
            let image = g.apply(&nodes[src].1);
            let dst = targets
                .iter()
                .copied()
                .find(|&t| minkowski_dist(&nodes[t].1, &image) < 1e-8)
                .ok_or_else(|| Error::Schema(format!("pairing {pi} does not map face {fa} onto face {fb}")))?;
            offsets.union(src, dst, pairing.phi)?;
            gluings.push(Gluing { from: src, to: dst, phi: pairing.phi });
        }
    }

    let mut slot_of_root = HashMap::new();
    let mut out_nodes = Vec::with_capacity(nodes.len());
    for (i, (kind, p)) in nodes.iter().enumerate() {
        let (root, off) = offsets.find(i);
        let n = slot_of_root.len();
        let slot = *slot_of_root.entry(root).or_insert(n);
        out_nodes.push(Node { kind: *kind, point: *p, slot, offset: off });
    }
    let complex = DomainComplex { name: spec.name.clone(), nodes: out_nodes, tets, gluings, slots: slot_of_root.len() };

    let missing: Vec<usize> = (0..complex.tets.len())
        .filter(|&i| complex.tetrahedron(i).and_then(|t| circumcenter(&t)).is_err())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingCircumcenters(format!(
            "{} of {} tetrahedra have no circumcenter (first: {}); try another basepoint",
            missing.len(),
            complex.tets.len(),
            missing[0]
        )));
    }
    Ok(complex)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_structure() {
        let spec = DomainSpec::cube(0.3, [1, 0, 0]).unwrap();
        let c = triangulate(&spec).unwrap();
        // 6 faces with 4 sides, 2 tetrahedra per side.
        assert_eq!(c.tets.len(), 48);
        // Nodes: basepoint, 8 vertices, 12 edges, 6 faces.
        assert_eq!(c.nodes.len(), 27);
        // Torus-like gluing: 1 basepoint, 1 vertex class, 3 edge classes, 3 face classes.
        assert_eq!(c.slots, 8);
        assert_eq!(c.equivariance_residual(), 0);
    }

    #[test]
    fn json_roundtrip() {
        let spec = DomainSpec::cube(0.2, [0, 1, 0]).unwrap();
        let back = DomainSpec::from_json(&spec.to_json().unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn mismatched_pairing_rejected() {
        let mut spec = DomainSpec::cube(0.3, [1, 0, 0]).unwrap();
        spec.pairings[0].partner = 3;
        assert!(matches!(triangulate(&spec), Err(Error::Schema(_))));
    }
}

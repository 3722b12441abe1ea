//! Hyperboloid-model geometry: points, distances, radial projection,
//! circumcenters and the Lipschitz bound of linear extensions on geodesic
//! tetrahedra.

use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `<x, x> = -1` relative to `x_0^2`.
const HYPERBOLOID_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiVec(pub [f64; 4]);

impl MinkowskiVec {
    pub fn new(x0: f64, x1: f64, x2: f64, x3: f64) -> Self {
        Self([x0, x1, x2, x3])
    }

    /// `<x, y> = -x0 y0 + x1 y1 + x2 y2 + x3 y3`.
    pub fn inner(&self, other: &Self) -> f64 {
        let (a, b) = (self.0, other.0);
        -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
    }

    /// `sqrt(-<x, x>)`; only meaningful for timelike vectors.
    pub fn norm(&self) -> f64 {
        (-self.inner(self)).sqrt()
    }

    pub fn spatial(&self) -> Vector3<f64> {
        Vector3::new(self.0[1], self.0[2], self.0[3])
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::from(self.0)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self([v[0], v[1], v[2], v[3]])
    }
}

impl Add for MinkowskiVec {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for MinkowskiVec {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Mul<MinkowskiVec> for f64 {
    type Output = MinkowskiVec;
    fn mul(self, v: MinkowskiVec) -> MinkowskiVec {
        MinkowskiVec(v.0.map(|x| self * x))
    }
}

/// A point of the upper sheet `<x, x> = -1`, `x_0 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MinkowskiVec", into = "MinkowskiVec")]
pub struct HPoint(MinkowskiVec);

impl TryFrom<MinkowskiVec> for HPoint {
    type Error = Error;
    fn try_from(v: MinkowskiVec) -> Result<Self> {
        HPoint::new(v)
    }
}

impl From<HPoint> for MinkowskiVec {
    fn from(p: HPoint) -> Self {
        p.0
    }
}

impl HPoint {
    pub fn new(v: MinkowskiVec) -> Result<Self> {
        let q = v.inner(&v);
        if !(v.0[0] > 0.0) || (q + 1.0).abs() > HYPERBOLOID_TOL * v.0[0] * v.0[0] {
            return Err(Error::Precondition(format!("{:?} is not on the hyperboloid (<x,x> = {q})", v.0)));
        }
        Ok(Self(v))
    }

    pub fn origin() -> Self {
        Self(MinkowskiVec::new(1.0, 0.0, 0.0, 0.0))
    }

    /// `exp_o(s u)` for a unit vector `u` of `R^3`.
    pub fn exp_origin(s: f64, direction: Vector3<f64>) -> Self {
        let u = direction.normalize();
        let (c, sh) = (s.cosh(), s.sinh());
        Self(MinkowskiVec::new(c, sh * u[0], sh * u[1], sh * u[2]))
    }

    pub fn vec(&self) -> MinkowskiVec {
        self.0
    }
}

/// `d(x, y) = arccosh(-<x, y>)`, evaluated as `2 arcsinh(|x - y| / 2)`
/// (with `|x - y|^2 = <x - y, x - y> = 4 sinh^2(d/2)`) to keep precision for
/// nearby points.
pub fn minkowski_dist(x: &HPoint, y: &HPoint) -> f64 {
    let d = x.0 - y.0;
    2.0 * (0.5 * d.inner(&d).max(0.0).sqrt()).asinh()
}

/// `P(x) = x / ||x||` on the future cone.
pub fn radial_project(x: MinkowskiVec) -> Result<HPoint> {
    if !(x.inner(&x) < 0.0 && x.0[0] > 0.0) {
        return Err(Error::Precondition(format!("{:?} is not future timelike", x.0)));
    }
    let n = x.norm();
    Ok(HPoint(MinkowskiVec(x.0.map(|c| c / n))))
}

/// A linear map preserving the Lorentzian form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry(pub Matrix4<f64>);

fn lorentz_form() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(-1.0, 1.0, 1.0, 1.0))
}

impl Isometry {
    /// Validate `g^T J g = J` and that `g` preserves the upper sheet.
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        let j = lorentz_form();
        let err = (m.transpose() * j * m - j).abs().max();
        let scale = m.abs().max().powi(2).max(1.0);
        if err > 1e-9 * scale || m[(0, 0)] <= 0.0 {
            return Err(Error::Precondition(format!("matrix does not preserve the hyperboloid (residual {err})")));
        }
        Ok(Self(m))
    }

    pub fn apply_vec(&self, v: MinkowskiVec) -> MinkowskiVec {
        MinkowskiVec::from_vector(&(self.0 * v.to_vector()))
    }

    /// Image of a point, re-projected to absorb rounding.
    pub fn apply(&self, p: &HPoint) -> HPoint {
        radial_project(self.apply_vec(p.0)).expect("isometries preserve the future cone")
    }

    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry(self.0 * other.0)
    }

    /// Reflection in the hyperplane `<x, n> = 0` for spacelike `n`.
    pub fn reflection(n: MinkowskiVec) -> Result<Self> {
        let nn = n.inner(&n);
        if !(nn > 0.0) {
            return Err(Error::Precondition("reflection normal must be spacelike".into()));
        }
        let nv = n.to_vector();
        let jn = lorentz_form() * nv;
        Ok(Self(Matrix4::identity() - (2.0 / nn) * nv * jn.transpose()))
    }

    /// The reflection exchanging two distinct points.
    pub fn swap(a: &HPoint, b: &HPoint) -> Result<Self> {
        Self::reflection(a.0 - b.0)
    }

    /// Boost of hyperbolic length `s` along the `x_axis`-th spatial axis.
    pub fn boost(axis: usize, s: f64) -> Self {
        let mut m = Matrix4::identity();
        let (c, sh) = (s.cosh(), s.sinh());
        m[(0, 0)] = c;
        m[(axis, axis)] = c;
        m[(0, axis)] = sh;
        m[(axis, 0)] = sh;
        Self(m)
    }

    /// Rotation of the spatial coordinates.
    pub fn rotation(r: &Matrix3<f64>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(1, 1).copy_from(r);
        Self(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicTet {
    pub vertices: [HPoint; 4],
    pub circumcenter: Option<HPoint>,
    pub radius: Option<f64>,
}

impl GeodesicTet {
    pub fn new(vertices: [HPoint; 4]) -> Result<Self> {
        let m = Matrix4::from_columns(&vertices.map(|v| v.0.to_vector()));
        let scale: f64 = vertices.iter().map(|v| v.0 .0[0]).product();
        if m.determinant().abs() <= 1e-14 * scale {
            return Err(Error::Degenerate("tetrahedron vertices are linearly dependent".into()));
        }
        Ok(Self { vertices, circumcenter: None, radius: None })
    }

    pub fn with_circumcenter(mut self) -> Result<Self> {
        let (c, r) = circumcenter(&self)?;
        self.circumcenter = Some(c);
        self.radius = Some(r);
        Ok(self)
    }

    pub fn map(&self, g: &Isometry) -> Self {
        Self {
            vertices: self.vertices.map(|v| g.apply(&v)),
            circumcenter: self.circumcenter.map(|c| g.apply(&c)),
            radius: self.radius,
        }
    }
}

/// Generalized cross product: the vector orthogonal (in the Euclidean sense)
/// to three vectors of `R^4`.
fn cross4(a: &Vector4<f64>, b: &Vector4<f64>, c: &Vector4<f64>) -> Vector4<f64> {
    let minor = |skip: usize| {
        let cols: Vec<usize> = (0..4).filter(|&i| i != skip).collect();
        Matrix3::from_fn(|r, k| [a, b, c][r][cols[k]]).determinant()
    };
    Vector4::new(minor(0), -minor(1), minor(2), -minor(3))
}

/// Circumcenter and circumradius: the line `<z, v_0 - v_i> = 0` meets the
/// hyperboloid exactly when it is timelike.
pub fn circumcenter(tet: &GeodesicTet) -> Result<(HPoint, f64)> {
    let j = lorentz_form();
    let v = tet.vertices.map(|p| p.0.to_vector());
    let rows: Vec<Vector4<f64>> = (1..4).map(|i| j * (v[0] - v[i])).collect();
    let z = cross4(&rows[0], &rows[1], &rows[2]);
    let zv = MinkowskiVec::from_vector(&z);
    let q = zv.inner(&zv);
    let scale = z.norm_squared();
    if !(q < -1e-14 * scale) {
        return Err(Error::NoCircumcenter);
    }
    let zv = if zv.0[0] < 0.0 { -1.0 * zv } else { zv };
    let c = radial_project(zv)?;
    let d: Vec<f64> = tet.vertices.iter().map(|p| minkowski_dist(&c, p)).collect();
    let spread = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - d.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread > 1e-10 * (1.0 + d[0]) {
        return Err(Error::Degenerate(format!("circumcenter distances differ by {spread}")));
    }
    Ok((c, d[0]))
}

/// Stretch factor of `P_hor^{-1}` (projection from the hyperboloid onto the
/// plane `x_0 = cosh_r` through the origin of `R^4`) at `p` along the tangent
/// vector `v`: Euclidean length of the image over hyperbolic length of `v`.
pub fn horizontal_stretch(cosh_r: f64, p: &HPoint, v: MinkowskiVec) -> Result<f64> {
    let x = p.vec();
    let hyp = v.inner(&v);
    if v.inner(&x).abs() > 1e-9 * (1.0 + x.0[0] * v.0.iter().map(|c| c.abs()).sum::<f64>()) || !(hyp > 0.0) {
        return Err(Error::Precondition("stretch needs a nonzero tangent vector".into()));
    }
    let x0 = x.0[0];
    let d = (cosh_r / x0) * v - (cosh_r * v.0[0] / (x0 * x0)) * x;
    Ok(d.spatial().norm() / hyp.sqrt())
}

/// Move the circumcenter to the origin by the reflection exchanging them.
pub fn center_tet(tet: &GeodesicTet) -> Result<GeodesicTet> {
    let (c, r) = match (tet.circumcenter, tet.radius) {
        (Some(c), Some(r)) => (c, r),
        _ => circumcenter(tet)?,
    };
    let o = HPoint::origin();
    if minkowski_dist(&c, &o) < 1e-15 {
        return Ok(GeodesicTet { vertices: tet.vertices, circumcenter: Some(o), radius: Some(r) });
    }
    let g = Isometry::swap(&c, &o)?;
    Ok(GeodesicTet { vertices: tet.vertices.map(|v| g.apply(&v)), circumcenter: Some(o), radius: Some(r) })
}

/// Precomputed data for the gradient of linear extensions on one centered
/// tetrahedron: `|dF| <= cosh(R) |M (f_1 - f_0, f_2 - f_0, f_3 - f_0)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientOperator {
    pub cosh_r: f64,
    pub m: Matrix3<f64>,
}

impl GradientOperator {
    pub fn new(tet: &GeodesicTet) -> Result<Self> {
        let centered = center_tet(tet)?;
        let r = centered.radius.expect("center_tet sets the radius");
        let p = centered.vertices.map(|v| v.0.spatial());
        let edges = Matrix3::from_rows(&[(p[1] - p[0]).transpose(), (p[2] - p[0]).transpose(), (p[3] - p[0]).transpose()]);
        let scale = (p[1] - p[0]).norm() * (p[2] - p[0]).norm() * (p[3] - p[0]).norm();
        if edges.determinant().abs() <= 1e-12 * scale {
            return Err(Error::Degenerate("projected vertices are coplanar".into()));
        }
        let m = edges.try_inverse().ok_or_else(|| Error::Degenerate("singular edge matrix".into()))?;
        Ok(Self { cosh_r: r.cosh(), m })
    }

    pub fn bound(&self, values: [f64; 4]) -> f64 {
        let d = Vector3::new(values[1] - values[0], values[2] - values[0], values[3] - values[0]);
        self.cosh_r * (self.m * d).norm()
    }
}

/// Upper bound on `||dF||` over the tetrahedron for the linear extension of
/// the vertex values.
pub fn lipschitz_bound(tet: &GeodesicTet, values: [f64; 4]) -> Result<f64> {
    Ok(GradientOperator::new(tet)?.bound(values))
}

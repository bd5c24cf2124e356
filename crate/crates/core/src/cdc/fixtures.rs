//! A curvature-exact fixture for the quantitative conjugate-flow checks: the
//! inward normal exponential of a plane ellipse. Its conjugate set is the
//! focal curve t = 1/kappa(z), the image of the conjugate set is the evolute,
//! and the classical string construction makes the radius-vs-arclength
//! identity exact, so unbeatable inequalities can be verified against truth.

use nalgebra::{DMatrix, DVector};

use super::CdcSpace;
use crate::geometry::Vec2;

/// Normal exponential map of the ellipse (a cos z, b sin z): V-coordinates
/// (t, z) map to gamma(z) + t nu(z) with nu the inward unit normal.
#[derive(Debug, Clone)]
pub struct EllipseNormalExp {
    pub a: f64,
    pub b: f64,
}

impl EllipseNormalExp {
    pub fn new(a: f64, b: f64) -> EllipseNormalExp {
        EllipseNormalExp { a, b }
    }

    pub fn gamma(&self, z: f64) -> Vec2 {
        Vec2::new(self.a * z.cos(), self.b * z.sin())
    }

    fn dgamma(&self, z: f64) -> Vec2 {
        Vec2::new(-self.a * z.sin(), self.b * z.cos())
    }

    /// Inward unit normal (the ellipse runs counterclockwise).
    pub fn normal(&self, z: f64) -> Vec2 {
        let t = self.dgamma(z).normalize();
        Vec2::new(-t.y, t.x)
    }

    /// Curvature of the ellipse at parameter z.
    pub fn kappa(&self, z: f64) -> f64 {
        let (s, c) = z.sin_cos();
        let w = self.a * self.a * s * s + self.b * self.b * c * c;
        self.a * self.b / w.powf(1.5)
    }

    /// Focal distance along the inward normal: the first conjugate time.
    pub fn rho(&self, z: f64) -> f64 {
        1.0 / self.kappa(z)
    }

    pub fn point(&self, t: f64, z: f64) -> Vec2 {
        self.gamma(z) + self.normal(z) * t
    }
}

impl CdcSpace for EllipseNormalExp {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let p = self.point(x[0], x[1]);
        DVector::from_vec(vec![p.x, p.y])
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (t, z) = (x[0], x[1]);
        let nu = self.normal(z);
        // d/dz of gamma + t nu, via Frenet: nu' = -kappa |gamma'| T
        let dg = self.dgamma(z);
        let speed = dg.norm();
        let tan = dg / speed;
        let dnu = -tan * (self.kappa(z) * speed);
        DMatrix::from_column_slice(
            2,
            2,
            &[nu.x, nu.y, dg.x + t * dnu.x, dg.y + t * dnu.y],
        )
    }

    fn radial(&self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![1.0, 0.0])
    }

    fn radius(&self, x: &DVector<f64>) -> f64 {
        x[0]
    }
}

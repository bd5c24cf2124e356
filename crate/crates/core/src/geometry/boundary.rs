//! Boundary components: closed curves bounding the 2D test manifolds, plus the
//! geodesic circle used to reduce a point source to the boundary setting.

use super::metric::Vec2;

pub const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone)]
pub struct BoundaryComponent {
    pub id: usize,
    pub kind: BoundaryKind,
}

#[derive(Debug, Clone)]
pub enum BoundaryKind {
    /// Euclidean circle; `inward` is +1 when the manifold interior lies toward
    /// the center, -1 when it lies away from it (inner circle of an annulus).
    Circle { center: Vec2, radius: f64, inward: f64 },
    /// Straight segment, parametrized by arclength over [0, len); `normal`
    /// points into the manifold. Used for half-plane style tests.
    Segment { origin: Vec2, dir: Vec2, normal: Vec2, len: f64 },
    /// Geodesic circle of radius eps around a point source, parametrized by
    /// the shooting direction angle. Points are filled in by the flow module;
    /// here it only carries the bookkeeping.
    PointReduction { center: Vec2, eps: f64 },
}

impl BoundaryComponent {
    /// Parameter period of the component.
    pub fn period(&self) -> f64 {
        match &self.kind {
            BoundaryKind::Circle { .. } => TAU,
            BoundaryKind::Segment { len, .. } => *len,
            BoundaryKind::PointReduction { .. } => TAU,
        }
    }

    /// Boundary point at parameter s (flat components only; the point
    /// reduction on curved manifolds is resolved by the flow module).
    pub fn point(&self, s: f64) -> Vec2 {
        match &self.kind {
            BoundaryKind::Circle { center, radius, .. } => {
                center + Vec2::new(s.cos(), s.sin()) * *radius
            }
            BoundaryKind::Segment { origin, dir, .. } => origin + dir * s,
            BoundaryKind::PointReduction { center, eps } => {
                center + Vec2::new(s.cos(), s.sin()) * *eps
            }
        }
    }

    /// Tangent d(point)/ds at parameter s.
    pub fn tangent(&self, s: f64) -> Vec2 {
        match &self.kind {
            BoundaryKind::Circle { radius, .. } => {
                Vec2::new(-s.sin(), s.cos()) * *radius
            }
            BoundaryKind::Segment { dir, .. } => *dir,
            BoundaryKind::PointReduction { eps, .. } => Vec2::new(-s.sin(), s.cos()) * *eps,
        }
    }

    /// Euclidean inner normal hint at parameter s.
    pub fn inner_normal_hint(&self, s: f64) -> Vec2 {
        match &self.kind {
            BoundaryKind::Circle { inward, .. } => {
                Vec2::new(s.cos(), s.sin()) * (-*inward)
            }
            BoundaryKind::Segment { normal, .. } => *normal,
            BoundaryKind::PointReduction { .. } => Vec2::new(s.cos(), s.sin()),
        }
    }

    /// Wrap a parameter into [0, period).
    pub fn wrap_param(&self, s: f64) -> f64 {
        let p = self.period();
        s.rem_euclid(p)
    }

    /// Distance between two parameters on the component's parameter circle.
    pub fn param_distance(&self, a: f64, b: f64) -> f64 {
        let p = self.period();
        let d = (a - b).rem_euclid(p);
        d.min(p - d)
    }
}

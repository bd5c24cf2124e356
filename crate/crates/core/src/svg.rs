//! Minimal SVG writer for 2D point clouds and polylines. Floats are fixed to
//! nine significant digits so artifacts reproduce byte for byte.

use crate::numerics::fmt_sig9 as f9;
use crate::geometry::Vec2;

pub struct SvgDoc {
    min: Vec2,
    max: Vec2,
    body: String,
}

impl SvgDoc {
    pub fn new(min: Vec2, max: Vec2) -> SvgDoc {
        SvgDoc { min, max, body: String::new() }
    }

    fn scale(&self) -> f64 {
        800.0 / (self.max.x - self.min.x).max(self.max.y - self.min.y)
    }

    fn map(&self, p: Vec2) -> (f64, f64) {
        let s = self.scale();
        ((p.x - self.min.x) * s, (self.max.y - p.y) * s)
    }

    pub fn circle(&mut self, p: Vec2, r_px: f64, color: &str) {
        let (x, y) = self.map(p);
        self.body.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"/>\n",
            f9(x),
            f9(y),
            f9(r_px),
            color
        ));
    }

    pub fn polyline(&mut self, pts: &[Vec2], color: &str, width: f64) {
        if pts.len() < 2 {
            return;
        }
        let mut d = String::new();
        for (i, p) in pts.iter().enumerate() {
            let (x, y) = self.map(*p);
            d.push_str(if i == 0 { "M" } else { " L" });
            d.push_str(&format!("{} {}", f9(x), f9(y)));
        }
        self.body.push_str(&format!(
            "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"/>\n",
            d,
            color,
            f9(width)
        ));
    }

    pub fn finish(self) -> String {
        let s = self.scale();
        let w = (self.max.x - self.min.x) * s;
        let h = (self.max.y - self.min.y) * s;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" width=\"{}\" height=\"{}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            f9(w),
            f9(h),
            f9(w),
            f9(h),
            self.body
        )
    }
}

/// Color for a structure class, shared by every plot.
pub fn class_color(class: &crate::split::PointClass) -> &'static str {
    use crate::split::PointClass::*;
    match class {
        Cleave => "#1f77b4",
        Edge => "#2ca02c",
        DegenerateCleave => "#ff7f0e",
        Crossing => "#d62728",
        Remainder => "#9467bd",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_output() {
        let build = || {
            let mut doc = SvgDoc::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0));
            doc.circle(Vec2::new(0.25, -0.5), 2.0, "#1f77b4");
            doc.polyline(&[Vec2::new(0.0, 0.0), Vec2::new(0.5, 0.7)], "black", 1.0);
            doc.finish()
        };
        assert_eq!(build(), build());
        assert!(build().starts_with("<svg"));
    }
}

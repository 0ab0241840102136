//! Minimal SVG emitter: polylines and circle markers in a data-space
//! viewport, no rendering dependencies.

use num_complex::Complex64;
use std::fmt::Write;

pub struct SvgDoc {
    size: f64,
    /// data-space half-width of the viewport
    extent: f64,
    body: String,
}

impl SvgDoc {
    pub fn new(extent: f64) -> Self {
        SvgDoc {
            size: 640.0,
            extent: extent.max(1e-9),
            body: String::new(),
        }
    }

    fn map(&self, z: Complex64) -> (f64, f64) {
        let s = self.size / (2.0 * self.extent);
        (
            self.size / 2.0 + z.re * s,
            // SVG y axis points down
            self.size / 2.0 - z.im * s,
        )
    }

    pub fn polyline(&mut self, points: &[Complex64], stroke: &str) {
        if points.len() < 2 {
            return;
        }
        let mut attr = String::new();
        for &z in points {
            let (x, y) = self.map(z);
            let _ = write!(attr, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            self.body,
            r#"  <polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.2"/>"#,
            attr.trim_end()
        );
    }

    pub fn marker(&mut self, z: Complex64, fill: &str) {
        let (x, y) = self.map(z);
        let _ = writeln!(
            self.body,
            r#"  <circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{fill}"/>"#
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" \
             width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n{}</svg>\n",
            self.body,
            s = self.size
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_curve_and_valid_xml() {
        let mut doc = SvgDoc::new(2.0);
        doc.polyline(
            &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 1.0)],
            "#336699",
        );
        doc.polyline(
            &[Complex64::new(-1.0, 0.5), Complex64::new(0.3, -0.2)],
            "#993333",
        );
        doc.marker(Complex64::new(0.0, 0.0), "black");
        let text = doc.finish();
        assert!(text.starts_with("<?xml"));
        assert_eq!(text.matches("<polyline").count(), 2);
        assert!(text.ends_with("</svg>\n"));
        // well-formed: every opened tag closes
        assert_eq!(text.matches("/>").count(), 3);
    }
}

//! Static SVG scatter plots of zeros (k-plane) and eigenvalues (λ-plane).

use std::fmt::Write;

use num_complex::Complex64;

const SIZE: f64 = 480.0;
const PAD: f64 = 40.0;

/// Maps a square data window onto the canvas with y pointing up.
struct Frame {
    x0: f64,
    y0: f64,
    span: f64,
}

impl Frame {
    fn px(&self, z: Complex64) -> (f64, f64) {
        let s = (SIZE - 2.0 * PAD) / self.span;
        (PAD + (z.re - self.x0) * s, SIZE - PAD - (z.im - self.y0) * s)
    }

    fn scale(&self) -> f64 {
        (SIZE - 2.0 * PAD) / self.span
    }
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{PAD}" y="24" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, f: &Frame) {
    let (ax, ay) = f.px(Complex64::new(0.0, 0.0));
    let _ = writeln!(s, r##"<line x1="{PAD}" y1="{ay:.3}" x2="{:.3}" y2="{ay:.3}" stroke="#888"/>"##, SIZE - PAD);
    let _ = writeln!(s, r##"<line x1="{ax:.3}" y1="{PAD}" x2="{ax:.3}" y2="{:.3}" stroke="#888"/>"##, SIZE - PAD);
}

fn dots(s: &mut String, f: &Frame, pts: &[Complex64], color: &str) {
    for &z in pts {
        let (x, y) = f.px(z);
        let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="3.5" fill="{color}"/>"#);
    }
}

/// Upper-half-plane zeros with the half circles |k| = ∫|V| and |k| = R.
pub fn k_plane(title: &str, zeros: &[Complex64], m1: f64, radius: f64) -> String {
    let reach = zeros.iter().map(|z| z.norm()).fold(m1.max(radius), f64::max).max(1e-12) * 1.1;
    let f = Frame { x0: -reach, y0: -0.1 * reach, span: 2.0 * reach };
    let mut s = header(title);
    axes(&mut s, &f);
    for (r, color, label) in [(m1, "#1f77b4", "|k| = m1"), (radius, "#d62728", "|k| = R")] {
        let (x1, y1) = f.px(Complex64::new(r, 0.0));
        let (x2, y2) = f.px(Complex64::new(-r, 0.0));
        let rr = r * f.scale();
        let _ = writeln!(
            s,
            r#"<path d="M {x1:.3} {y1:.3} A {rr:.3} {rr:.3} 0 0 0 {x2:.3} {y2:.3}" fill="none" stroke="{color}" stroke-dasharray="4 3"><title>{label}</title></path>"#
        );
    }
    dots(&mut s, &f, zeros, "black");
    s.push_str("</svg>\n");
    s
}

/// Eigenvalues with the disk |λ| ≤ (∫|V|)².
pub fn lambda_plane(title: &str, lambdas: &[Complex64], m1: f64) -> String {
    let disk = m1 * m1;
    let reach = lambdas.iter().map(|z| z.norm()).fold(disk, f64::max).max(1e-12) * 1.1;
    let f = Frame { x0: -reach, y0: -reach, span: 2.0 * reach };
    let mut s = header(title);
    axes(&mut s, &f);
    let (cx, cy) = f.px(Complex64::new(0.0, 0.0));
    let _ = writeln!(
        s,
        r##"<circle cx="{cx:.3}" cy="{cy:.3}" r="{:.3}" fill="#1f77b4" fill-opacity="0.08" stroke="#1f77b4"><title>|λ| = m1²</title></circle>"##,
        disk * f.scale()
    );
    // The essential spectrum [0, ∞).
    let (x0, y0) = f.px(Complex64::new(0.0, 0.0));
    let _ = writeln!(
        s,
        r##"<line x1="{x0:.3}" y1="{y0:.3}" x2="{:.3}" y2="{y0:.3}" stroke="#2ca02c" stroke-width="3"/>"##,
        SIZE - PAD
    );
    dots(&mut s, &f, lambdas, "black");
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plots_are_well_formed_and_deterministic() {
        let zs = [Complex64::new(0.3, 0.5), Complex64::new(-1.0, 0.2)];
        let a = k_plane("well <1>", &zs, 2.0, 4.0);
        assert_eq!(a, k_plane("well <1>", &zs, 2.0, 4.0));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert_eq!(a.matches("<circle").count(), 2);
        assert!(a.contains("well &lt;1&gt;"));
        let l = lambda_plane("x", &[zs[0] * zs[0]], 2.0);
        assert_eq!(l.matches("<circle").count(), 2);
        // Empty input still draws the frame.
        assert!(k_plane("empty", &[], 0.0, 0.0).contains("</svg>"));
    }
}

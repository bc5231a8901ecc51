//! Minimal deterministic SVG histogram.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

/// Bin counts over `[0, hi]`, with `hi` the largest value (1 when all are 0).
pub fn bin_counts(values: &[f64], bins: usize) -> (Vec<usize>, f64) {
    let bins = bins.max(1);
    let max = values.iter().copied().fold(0.0, f64::max);
    let hi = if max > 0.0 { max } else { 1.0 };
    let mut counts = vec![0; bins];
    for &v in values {
        let b = ((v / hi) * bins as f64).floor() as usize;
        counts[b.min(bins - 1)] += 1;
    }
    (counts, hi)
}

/// Histogram of `values` drawn as bars; `x_label` names the unit.
pub fn histogram(values: &[f64], bins: usize, title: &str, x_label: &str) -> String {
    let (counts, hi) = bin_counts(values, bins);
    let peak = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let bar_w = plot_w / counts.len() as f64;
    let base = MARGIN_T + plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    for (i, &c) in counts.iter().enumerate() {
        let h = c as f64 / peak * plot_h;
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4a78a8"/>"##,
            MARGIN_L + i as f64 * bar_w,
            base - h,
            (bar_w - 1.0).max(0.5),
            h
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN_L}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="#000000"/>"##,
        MARGIN_L + plot_w
    );
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{base:.2}" stroke="#000000"/>"##
    );
    for (x, label) in [(MARGIN_L, 0.0), (MARGIN_L + plot_w, hi)] {
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{label:.3}</text>"#,
            base + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
        MARGIN_L - 6.0,
        MARGIN_T + 4.0,
        peak as usize
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_cover_every_value() {
        let v = [0.0, 0.5, 1.0, 2.0, 2.0];
        let (c, hi) = bin_counts(&v, 4);
        assert_eq!(hi, 2.0);
        assert_eq!(c, vec![1, 1, 1, 2]);
        assert_eq!(c.iter().sum::<usize>(), v.len());
    }

    #[test]
    fn all_zero_lands_in_first_bin() {
        let (c, hi) = bin_counts(&[0.0; 5], 3);
        assert_eq!(hi, 1.0);
        assert_eq!(c, vec![5, 0, 0]);
    }

    #[test]
    fn output_is_deterministic_and_well_formed() {
        let v: Vec<f64> = (0..100).map(|i| (i % 17) as f64 * 0.3).collect();
        let a = histogram(&v, 20, "errors <us>", "error (us)");
        assert_eq!(a, histogram(&v, 20, "errors <us>", "error (us)"));
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("fill=\"#4a78a8\"").count(), 20);
        assert!(a.contains("errors &lt;us&gt;"));
    }
}

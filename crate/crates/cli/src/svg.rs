//! Minimal SVG line plot: a polyline plus circle markers.

pub struct Plot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub points: &'a [(f64, f64)],
    pub markers: &'a [(f64, f64)],
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(p: &Plot<'_>) -> String {
    let all = p.points.iter().chain(p.markers);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>\n",
        W / 2.0,
        esc(p.title)
    ));
    s.push_str(&format!(
        "<path d=\"M{PAD} {PAD} V{} H{}\" stroke=\"black\" fill=\"none\"/>\n",
        H - PAD,
        W - PAD
    ));
    for (v, anchor_x, anchor_y, rot) in [
        (format!("{x0:.3}"), sx(x0), H - PAD + 18.0, false),
        (format!("{x1:.3}"), sx(x1), H - PAD + 18.0, false),
        (format!("{y0:.3}"), PAD - 6.0, sy(y0), true),
        (format!("{y1:.3}"), PAD - 6.0, sy(y1), true),
    ] {
        let anchor = if rot { "end" } else { "middle" };
        s.push_str(&format!(
            "<text x=\"{anchor_x:.2}\" y=\"{anchor_y:.2}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"11\">{v}</text>\n"
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
        W / 2.0,
        H - 12.0,
        esc(p.x_label)
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        H / 2.0,
        H / 2.0,
        esc(p.y_label)
    ));
    if !p.points.is_empty() {
        let d: Vec<String> = p
            .points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| format!("{}{:.2} {:.2}", if i == 0 { "M" } else { "L" }, sx(x), sy(y)))
            .collect();
        s.push_str(&format!(
            "<path d=\"{}\" stroke=\"#1f5fbf\" stroke-width=\"2\" fill=\"none\"/>\n",
            d.join(" ")
        ));
    }
    for &(x, y) in p.markers {
        s.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"#c0392b\"/>\n",
            sx(x),
            sy(y)
        ));
    }
    s.push_str("</svg>\n");
    s
}

//! CSV tables, SVG sketches and atomic file writes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::point::Point;

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| std::io::Error::other("output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

/// Comma-separated table with a header row; floats get 17 significant digits.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        let parts: Vec<String> = cells.iter().map(Cell::render).collect();
        self.text.push_str(&parts.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub enum Cell {
    Int(i64),
    Num(f64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format!("{x:.16e}"),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

/// Voronoi-vertex images as `w,x,y,re,im`.
pub fn image_csv(points: &[Point], images: impl Iterator<Item = Complex64>) -> String {
    let mut csv = Csv::new(&["w", "x", "y", "re", "im"]);
    for (w, (p, z)) in points.iter().zip(images).enumerate() {
        csv.row(&[w.into(), p.x.into(), p.y.into(), z.re.into(), z.im.into()]);
    }
    csv.into_string()
}

/// Minimal SVG canvas in world coordinates (y up).
pub struct Svg {
    min: Point,
    max: Point,
    body: String,
}

impl Svg {
    pub fn new(points: impl IntoIterator<Item = Point>) -> Self {
        let (mut min, mut max) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in points {
            min = Point::new(min.x.min(p.x), min.y.min(p.y));
            max = Point::new(max.x.max(p.x), max.y.max(p.y));
        }
        if !min.x.is_finite() {
            (min, max) = (Point::new(-1.0, -1.0), Point::new(1.0, 1.0));
        }
        let pad = 0.05 * (max - min).norm().max(1e-9);
        Svg { min: min - Point::new(pad, pad), max: max + Point::new(pad, pad), body: String::new() }
    }

    fn stroke(&self) -> f64 {
        2e-3 * (self.max - self.min).norm()
    }

    pub fn line(&mut self, a: Point, b: Point, color: &str) {
        let w = self.stroke();
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.6}" y1="{:.6}" x2="{:.6}" y2="{:.6}" stroke="{color}" stroke-width="{w:.6}"/>"#,
            a.x, -a.y, b.x, -b.y
        );
    }

    pub fn polygon(&mut self, pts: &[Point], fill: &str) {
        let coords: Vec<String> = pts.iter().map(|p| format!("{:.6},{:.6}", p.x, -p.y)).collect();
        let _ = writeln!(self.body, r#"<polygon points="{}" fill="{fill}" stroke="none"/>"#, coords.join(" "));
    }

    pub fn circle(&mut self, c: Point, r: f64, color: &str) {
        let w = 2.0 * self.stroke();
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.6}" cy="{:.6}" r="{r:.6}" fill="none" stroke="{color}" stroke-width="{w:.6}"/>"#,
            c.x, -c.y
        );
    }

    pub fn finish(self) -> String {
        let size = self.max - self.min;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\" width=\"800\" height=\"{:.0}\">\n<rect x=\"{:.6}\" y=\"{:.6}\" width=\"{:.6}\" height=\"{:.6}\" fill=\"white\"/>\n{}</svg>\n",
            self.min.x,
            -self.max.y,
            size.x,
            size.y,
            800.0 * size.y / size.x,
            self.min.x,
            -self.max.y,
            size.x,
            size.y,
            self.body
        )
    }
}

/// Blue to red through white for `t` in [0, 1].
pub fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let s = 2.0 * t;
        (s, s, 1.0)
    } else {
        let s = 2.0 * (1.0 - t);
        (1.0, s, s)
    };
    format!("#{:02x}{:02x}{:02x}", (255.0 * r) as u8, (255.0 * g) as u8, (255.0 * b) as u8)
}

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

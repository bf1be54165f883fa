//! Line-oriented text formats: `mesh v1`, `annulus v1` and `domain v1`.

use std::io::{BufRead, Write};

use super::{from_labeled_parts, BoundaryLabel, GeometryError, PolygonalAnnulus, Triangulation};
use crate::point::Point;

pub fn write_mesh<W: Write>(t: &Triangulation, mut w: W) -> std::io::Result<()> {
    writeln!(w, "mesh v1")?;
    for (p, l) in t.vertices().iter().zip(t.labels()) {
        writeln!(w, "v {:.16e} {:.16e} {}", p.x, p.y, l.code())?;
    }
    for [a, b, c] in t.triangles() {
        writeln!(w, "t {a} {b} {c}")?;
    }
    Ok(())
}

/// Reads a mesh, trusting its labels. Blank lines and `#` comments are skipped.
pub fn read_mesh<R: BufRead>(r: R) -> Result<Triangulation, GeometryError> {
    let mut verts = Vec::new();
    let mut labels = Vec::new();
    let mut tris = Vec::new();
    let mut header = false;
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        let bad = |msg: &str| GeometryError::Parse { line: lineno, msg: msg.to_string() };
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        if !header {
            if s != "mesh v1" {
                return Err(bad("expected header `mesh v1`"));
            }
            header = true;
            continue;
        }
        let f: Vec<&str> = s.split_whitespace().collect();
        match f.as_slice() {
            ["v", x, y, l] => {
                let x: f64 = x.parse().map_err(|_| bad("bad x coordinate"))?;
                let y: f64 = y.parse().map_err(|_| bad("bad y coordinate"))?;
                if !x.is_finite() || !y.is_finite() {
                    return Err(bad("non-finite coordinate"));
                }
                let l = l.parse::<u8>().ok().and_then(BoundaryLabel::from_code).ok_or_else(|| bad("label must be 0, 1 or 2"))?;
                verts.push(Point::new(x, y));
                labels.push(l);
            }
            ["t", a, b, c] => {
                let p = |s: &str| s.parse::<usize>().map_err(|_| bad("bad vertex index"));
                tris.push([p(a)?, p(b)?, p(c)?]);
            }
            _ => return Err(bad("expected `v x y label` or `t i j k`")),
        }
    }
    if !header {
        return Err(GeometryError::Parse { line: 0, msg: "empty file".into() });
    }
    from_labeled_parts(verts, tris, labels, None)
}

type Tagged = (Option<f64>, Vec<(usize, Point)>);

/// Records of a polygon file: the pitch line and tagged points, in order.
fn read_tagged<R: BufRead>(r: R, header: &str, tags: &[&str]) -> Result<Tagged, GeometryError> {
    let mut pitch = None;
    let mut pts = Vec::new();
    let mut seen = false;
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let bad = |msg: String| GeometryError::Parse { line: n + 1, msg };
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        if !seen {
            if s != header {
                return Err(bad(format!("expected header `{header}`")));
            }
            seen = true;
            continue;
        }
        let f: Vec<&str> = s.split_whitespace().collect();
        let num = |t: &str| match t.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(bad(format!("bad number `{t}`"))),
        };
        match f.as_slice() {
            ["pitch", h] => pitch = Some(num(h)?),
            [tag, x, y] if tags.contains(tag) => {
                let k = tags.iter().position(|t| t == tag).unwrap();
                pts.push((k, Point::new(num(x)?, num(y)?)));
            }
            _ => return Err(bad(format!("unexpected record `{s}`"))),
        }
    }
    if !seen {
        return Err(GeometryError::Parse { line: 0, msg: "empty file".into() });
    }
    Ok((pitch, pts))
}

/// `annulus v1`: a `pitch h` line, then `outer x y` and `inner x y` loop vertices.
pub fn read_annulus_spec<R: BufRead>(r: R) -> Result<(PolygonalAnnulus, f64), GeometryError> {
    let (pitch, pts) = read_tagged(r, "annulus v1", &["outer", "inner"])?;
    let pitch = pitch.ok_or_else(|| GeometryError::Parse { line: 0, msg: "missing `pitch` line".into() })?;
    let pick = |k: usize| pts.iter().filter(|(t, _)| *t == k).map(|(_, p)| *p).collect::<Vec<_>>();
    Ok((PolygonalAnnulus::new(pick(0), pick(1))?, pitch))
}

pub fn write_annulus_spec<W: Write>(ann: &PolygonalAnnulus, pitch: f64, mut w: W) -> std::io::Result<()> {
    writeln!(w, "annulus v1")?;
    writeln!(w, "pitch {pitch:.16e}")?;
    for p in ann.outer() {
        writeln!(w, "outer {:.16e} {:.16e}", p.x, p.y)?;
    }
    for p in ann.inner() {
        writeln!(w, "inner {:.16e} {:.16e}", p.x, p.y)?;
    }
    Ok(())
}

/// `domain v1`: an optional `pitch h` line, then `p x y` boundary vertices.
pub fn read_domain<R: BufRead>(r: R) -> Result<(Vec<Point>, Option<f64>), GeometryError> {
    let (pitch, pts) = read_tagged(r, "domain v1", &["p"])?;
    if pts.len() < 3 {
        return Err(GeometryError::Parse { line: 0, msg: "a domain needs at least 3 points".into() });
    }
    Ok((pts.into_iter().map(|(_, p)| p).collect(), pitch))
}

pub fn write_domain<W: Write>(boundary: &[Point], pitch: Option<f64>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "domain v1")?;
    if let Some(h) = pitch {
        writeln!(w, "pitch {h:.16e}")?;
    }
    for p in boundary {
        writeln!(w, "p {:.16e} {:.16e}", p.x, p.y)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_round_annulus, RoundAnnulus};

    #[test]
    fn round_trip_is_bit_exact() {
        let m = generate_round_annulus(&RoundAnnulus::new(1.0, 2.0, 0.5).unwrap(), 0).unwrap();
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.labels(), m.labels());
        assert_eq!(back.triangles(), m.triangles());
    }

    #[test]
    fn short_decimals_survive() {
        let text = "mesh v1\nv 0.1 0.2 1\nv 1.3 0.2 1\nv 0.1 1.7 1\nt 0 1 2\n";
        let m = read_mesh(text.as_bytes()).unwrap();
        assert_eq!(m.vertex(0), Point::new(0.1, 0.2));
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        assert_eq!(read_mesh(buf.as_slice()).unwrap().vertices(), m.vertices());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = read_mesh("mesh v1\nv 0 0 1\nq 1 2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, GeometryError::Parse { line: 3, .. }));
        assert!(read_mesh("mesh v2\n".as_bytes()).is_err());
    }

    #[test]
    fn annulus_spec_round_trip() {
        let ann = PolygonalAnnulus::square(Point::new(0.5, 0.0), 2.0, 0.5).unwrap();
        let mut buf = Vec::new();
        write_annulus_spec(&ann, 0.25, &mut buf).unwrap();
        let (back, pitch) = read_annulus_spec(buf.as_slice()).unwrap();
        assert_eq!(back, ann);
        assert_eq!(pitch, 0.25);
        assert!(read_annulus_spec("annulus v1\nouter 0 0\n".as_bytes()).is_err());
    }

    #[test]
    fn domain_file() {
        let (pts, pitch) = read_domain("domain v1\n# unit square\np 0 0\np 1 0\np 1 1\np 0 1\n".as_bytes()).unwrap();
        assert_eq!(pts.len(), 4);
        assert_eq!(pitch, None);
        let err = read_domain("domain v1\np 0 0\np 1 x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, GeometryError::Parse { line: 3, .. }));
    }
}

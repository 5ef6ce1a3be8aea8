//! OFF mesh files. Only vertices are kept; face lines are validated and
//! dropped.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud};

pub fn read_off(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_off(&text, path)
}

/// Parse OFF text. Accepts both `OFF` on its own line and the fused
/// `OFF<nv> <nf> <ne>` first line that some ModelNet files carry.
pub fn parse_off(text: &str, path: &Path) -> Result<PointCloud> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| err(hline, format!("expected OFF header, found `{header}`")))?
        .trim();
    let (cline, counts) = if rest.is_empty() {
        lines
            .next()
            .ok_or_else(|| err(hline + 1, "missing counts line".into()))?
    } else {
        (hline, rest)
    };
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(cline, format!("bad counts: {e}")))?;
    if counts.len() != 3 {
        return Err(err(
            cline,
            format!("expected 3 counts, found {}", counts.len()),
        ));
    }
    let (nv, nf) = (counts[0], counts[1]);
    if nv == 0 {
        return Err(err(cline, "mesh declares no vertices".into()));
    }

    let mut points: Vec<Point> = Vec::with_capacity(nv);
    let mut last = cline;
    for k in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(last + 1, format!("expected {nv} vertices, found {k}")))?;
        last = ln;
        let vals: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(ln, format!("bad vertex: {e}")))?;
        if vals.len() != 3 {
            return Err(err(
                ln,
                format!(
                    "vertex {k} has {} values, expected 3 (header declares {nv} vertices)",
                    vals.len()
                ),
            ));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(err(ln, "non-finite coordinate".into()));
        }
        points.push([vals[0], vals[1], vals[2]]);
    }

    for f in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(last + 1, format!("expected {nf} faces, found {f}")))?;
        last = ln;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(ln, format!("bad face: {e}")))?;
        let (&k, rest) = idx
            .split_first()
            .ok_or_else(|| err(ln, "empty face".into()))?;
        if rest.len() < k || rest[..k].iter().any(|&i| i >= nv) {
            return Err(err(ln, "face references missing vertices".into()));
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(err(ln, "trailing data after faces".into()));
    }
    Ok(PointCloud::new(points))
}

/// Vertex-only OFF with 17 significant digits per coordinate.
pub fn format_off(pc: &PointCloud) -> String {
    let mut s = format!("OFF\n{} 0 0\n", pc.len());
    for p in &pc.points {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", p[0], p[1], p[2]);
    }
    s
}

pub fn write_off(pc: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_off(pc)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<PointCloud> {
        parse_off(s, Path::new("mem.off"))
    }

    #[test]
    fn minimal_mesh() {
        let pc = parse("OFF\n3 1 0\n0 0 0\n1.5 0 -2\n0 1 0.25\n3 0 1 2\n").unwrap();
        assert_eq!(
            pc.points,
            vec![[0.0, 0.0, 0.0], [1.5, 0.0, -2.0], [0.0, 1.0, 0.25]]
        );
    }

    #[test]
    fn short_vertex_list_is_rejected() {
        let e = parse("OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap_err();
        match e {
            Error::Parse { line, .. } => assert_eq!(line, 6),
            other => panic!("{other}"),
        }
        assert!(parse("OFF\n4 0 0\n0 0 0\n1 0 0\n0 1 0\n").is_err());
    }

    #[test]
    fn fused_header_matches_split_header() {
        let body = "0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 2 3\n";
        let a = parse(&format!("OFF\n4 2 0\n{body}")).unwrap();
        let b = parse(&format!("OFF4 2 0\n{body}")).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
    }

    #[test]
    fn malformed_counts_and_header() {
        assert!(parse("PLY\n1 0 0\n0 0 0\n").is_err());
        assert!(parse("OFF\n1 0\n0 0 0\n").is_err());
        assert!(parse("OFF\nx 0 0\n0 0 0\n").is_err());
        assert!(parse("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n").is_err());
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let pc = parse("# made by hand\nOFF\n\n2 0 0 # counts\n1 2 3\n4 5 6\n").unwrap();
        assert_eq!(pc.len(), 2);
    }

    proptest! {
        #[test]
        fn write_then_read_round_trips(coords in proptest::collection::vec(
            (any::<f64>(), any::<f64>(), any::<f64>()), 1..20)
        ) {
            let pts: Vec<Point> = coords
                .into_iter()
                .map(|(a, b, c)| [a, b, c])
                .filter(|p| p.iter().all(|v| v.is_finite()))
                .collect();
            prop_assume!(!pts.is_empty());
            let pc = PointCloud::new(pts);
            let back = parse(&format_off(&pc)).unwrap();
            prop_assert_eq!(back.points, pc.points);
        }
    }
}

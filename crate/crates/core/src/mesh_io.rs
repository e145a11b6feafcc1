//! Plain-text mesh files.
//!
//! ```text
//! # comment
//! vertices 4
//! 0 0 0 outer
//! ...
//! triangles 2
//! 0 0 1 2
//! ...
//! hole 0 0 0.01            (optional)
//! symmetry 2 0 0            (optional, followed by one "i image" line per vertex)
//! values u 4                (optional, repeatable, one "i value" line per vertex)
//! ```
//!
//! Numbers are written with the shortest representation that reads back
//! to the same `f64`, so a write/read cycle is exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{BoundaryTag, Symmetry, TriMesh};

/// A mesh read from disk together with any named nodal value sections.
#[derive(Debug)]
pub struct MeshFile {
    pub mesh: TriMesh,
    pub values: Vec<(String, Vec<f64>)>,
}

impl MeshFile {
    pub fn values_named(&self, name: &str) -> Option<&[f64]> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }
}

pub fn write_mesh<W: Write>(mut w: W, mesh: &TriMesh, values: &[(&str, &[f64])]) -> Result<()> {
    let n = mesh.vertex_count();
    writeln!(w, "vertices {n}")?;
    for (i, (p, t)) in mesh.vertices().iter().zip(mesh.tags()).enumerate() {
        writeln!(w, "{i} {} {} {}", p[0], p[1], t.as_str())?;
    }
    writeln!(w, "triangles {}", mesh.triangles().len())?;
    for (i, t) in mesh.triangles().iter().enumerate() {
        writeln!(w, "{i} {} {} {}", t[0], t[1], t[2])?;
    }
    if let Some((c, r)) = mesh.hole() {
        writeln!(w, "hole {} {} {}", c[0], c[1], r)?;
    }
    if let Some(s) = mesh.symmetry() {
        writeln!(w, "symmetry {} {} {}", s.kappa, s.center[0], s.center[1])?;
        for (i, j) in s.perm.iter().enumerate() {
            writeln!(w, "{i} {j}")?;
        }
    }
    for (name, vals) in values {
        if vals.len() != n {
            return Err(Error::param("values", format!("section {name} has {} entries for {n} vertices", vals.len())));
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::param("values", format!("bad section name {name:?}")));
        }
        writeln!(w, "values {name} {n}")?;
        for (i, v) in vals.iter().enumerate() {
            writeln!(w, "{i} {v}")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_mesh(path: impl AsRef<Path>, mesh: &TriMesh, values: &[(&str, &[f64])]) -> Result<()> {
    write_mesh(BufWriter::new(File::create(path)?), mesh, values)
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<MeshFile> {
    read_mesh(BufReader::new(File::open(path)?))
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    /// Next non-blank, non-comment line, split into fields.
    fn next(&mut self) -> Result<Option<Vec<String>>> {
        for l in self.inner.by_ref() {
            self.line += 1;
            let l = l?;
            let body = l.split('#').next().unwrap_or("").trim();
            if !body.is_empty() {
                return Ok(Some(body.split_whitespace().map(str::to_owned).collect()));
            }
        }
        Ok(None)
    }

    fn expect(&mut self, what: &str) -> Result<Vec<String>> {
        self.next()?.ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn err(&self, detail: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            detail: detail.into(),
        }
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("cannot parse {s:?}")))
    }

    /// Reads `count` rows of `width` fields, checking the leading index.
    fn rows(&mut self, count: usize, width: usize, what: &str) -> Result<Vec<Vec<String>>> {
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            let f = self.expect(what)?;
            if f.len() != width {
                return Err(self.err(format!("{what} row needs {width} fields, found {}", f.len())));
            }
            let idx: usize = self.num(&f[0])?;
            if idx != i {
                return Err(self.err(format!("{what} index {idx} out of order (expected {i})")));
            }
            out.push(f);
        }
        Ok(out)
    }
}

pub fn read_mesh<R: BufRead>(reader: R) -> Result<MeshFile> {
    let mut lines = Lines {
        inner: reader.lines(),
        line: 0,
    };
    let mut vertices: Vec<Point> = Vec::new();
    let mut tags = Vec::new();
    let mut triangles = Vec::new();
    let mut hole = None;
    let mut symmetry = None;
    let mut values = Vec::new();
    let mut seen_vertices = false;
    let mut seen_triangles = false;

    while let Some(head) = lines.next()? {
        match head[0].as_str() {
            "vertices" if head.len() == 2 && !seen_vertices => {
                let n: usize = lines.num(&head[1])?;
                for f in lines.rows(n, 4, "vertex")? {
                    vertices.push([lines.num(&f[1])?, lines.num(&f[2])?]);
                    let tag = BoundaryTag::parse(&f[3]).ok_or_else(|| lines.err(format!("unknown tag {:?}", f[3])))?;
                    tags.push(tag);
                }
                seen_vertices = true;
            }
            "triangles" if head.len() == 2 && !seen_triangles => {
                let m: usize = lines.num(&head[1])?;
                for f in lines.rows(m, 4, "triangle")? {
                    triangles.push([lines.num(&f[1])?, lines.num(&f[2])?, lines.num(&f[3])?]);
                }
                seen_triangles = true;
            }
            "hole" if head.len() == 4 => {
                hole = Some(([lines.num(&head[1])?, lines.num(&head[2])?], lines.num::<f64>(&head[3])?));
            }
            "symmetry" if head.len() == 4 => {
                let kappa: u32 = lines.num(&head[1])?;
                let center = [lines.num(&head[2])?, lines.num(&head[3])?];
                let mut perm = Vec::with_capacity(vertices.len());
                for f in lines.rows(vertices.len(), 2, "symmetry")? {
                    perm.push(lines.num(&f[1])?);
                }
                symmetry = Some(Symmetry { kappa, center, perm });
            }
            "values" if head.len() == 3 => {
                let n: usize = lines.num(&head[2])?;
                if n != vertices.len() {
                    return Err(lines.err(format!("values section has {n} entries for {} vertices", vertices.len())));
                }
                let mut v = Vec::with_capacity(n);
                for f in lines.rows(n, 2, "value")? {
                    v.push(lines.num(&f[1])?);
                }
                values.push((head[1].clone(), v));
            }
            other => return Err(lines.err(format!("unexpected section header {other:?}"))),
        }
    }
    if !seen_vertices || !seen_triangles {
        return Err(lines.err("missing vertices or triangles section"));
    }
    let mut mesh = TriMesh::from_parts(vertices, triangles, tags, symmetry)?;
    if let Some((c, r)) = hole {
        mesh = mesh.with_hole(c, r);
    }
    Ok(MeshFile { mesh, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PiercedDomainSpec;
    use crate::mesh::build_mesh;

    #[test]
    fn write_then_read_is_exact() {
        let spec = PiercedDomainSpec::centered_unit_disk(0.05, Some(2)).unwrap();
        let mesh = build_mesh(&spec, 0.2, 0.3).unwrap();
        let u: Vec<f64> = mesh.vertices().iter().map(|p| (p[0] * 3.1).sin() + p[1] / 7.0).collect();
        let mut buf = Vec::new();
        write_mesh(&mut buf, &mesh, &[("u", &u)]).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        assert_eq!(back.mesh.vertices(), mesh.vertices());
        assert_eq!(back.mesh.triangles(), mesh.triangles());
        assert_eq!(back.mesh.tags(), mesh.tags());
        assert_eq!(back.mesh.symmetry(), mesh.symmetry());
        assert_eq!(back.mesh.hole(), mesh.hole());
        assert_eq!(back.values_named("u").unwrap(), u.as_slice());
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# two triangles\n\nvertices 4\n0 0 0 outer\n1 1 0 outer\n2 1 1 outer # corner\n3 0 1 outer\ntriangles 2\n0 0 1 2\n1 0 2 3\n";
        let f = read_mesh(text.as_bytes()).unwrap();
        assert_eq!(f.mesh.vertex_count(), 4);
        assert!((f.mesh.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bad_input_reports_line() {
        let text = "vertices 2\n0 0 0 outer\n1 1 0 sideways\n";
        match read_mesh(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "vertices 1\n0 0 0 outer\ntriangles 1\n0 0 0 5\n";
        assert!(matches!(read_mesh(text.as_bytes()), Err(Error::BrokenMesh(_))));
    }
}

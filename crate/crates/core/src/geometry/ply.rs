//! PLY reader and writer for vertex clouds.
//!
//! Reads `ascii 1.0` and `binary_little_endian 1.0` files. The `vertex`
//! element must carry numeric `x`, `y`, `z`; `nx`, `ny`, `nz` are loaded when
//! all three are present. Any other element is skipped with a warning.
//! Written files store coordinates and normals as `double`, so a binary
//! round-trip is bit-exact (ASCII output uses shortest round-trip formatting
//! and is exact as well).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

pub type Rgb = [u8; 3];

/// Reads a PLY file into a point cloud, in file vertex order.
pub fn load_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&bytes)
}

/// Writes `cloud` (with optional per-point colors) as PLY.
pub fn save_ply(
    cloud: &PointCloud,
    path: impl AsRef<Path>,
    format: PlyFormat,
    colors: Option<&[Rgb]>,
) -> Result<()> {
    let path = path.as_ref();
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if let Some(c) = colors {
        if c.len() != cloud.len() {
            return Err(Error::ColorCountMismatch(c.len(), cloud.len()));
        }
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_ply(&mut w, cloud, format, colors)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Serializes `cloud` as PLY into any writer. Preconditions are checked by
/// [`save_ply`]; mismatched colors here are an `InvalidInput` I/O error.
pub fn write_ply<W: Write>(
    w: &mut W,
    cloud: &PointCloud,
    format: PlyFormat,
    colors: Option<&[Rgb]>,
) -> std::io::Result<()> {
    if colors.is_some_and(|c| c.len() != cloud.len()) {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "color count does not match point count",
        ));
    }
    let fmt = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    writeln!(w, "ply")?;
    writeln!(w, "format {fmt} 1.0")?;
    writeln!(w, "comment written by afford")?;
    writeln!(w, "element vertex {}", cloud.len())?;
    for name in ["x", "y", "z"] {
        writeln!(w, "property double {name}")?;
    }
    let normals = cloud.normals();
    if normals.is_some() {
        for name in ["nx", "ny", "nz"] {
            writeln!(w, "property double {name}")?;
        }
    }
    if colors.is_some() {
        for name in ["red", "green", "blue"] {
            writeln!(w, "property uchar {name}")?;
        }
    }
    writeln!(w, "end_header")?;

    for (i, p) in cloud.points().iter().enumerate() {
        let n = normals.map(|ns| ns[i]);
        let c = colors.map(|cs| cs[i]);
        match format {
            PlyFormat::Ascii => {
                write!(w, "{} {} {}", p.x, p.y, p.z)?;
                if let Some(n) = n {
                    write!(w, " {} {} {}", n.x, n.y, n.z)?;
                }
                if let Some(c) = c {
                    write!(w, " {} {} {}", c[0], c[1], c[2])?;
                }
                writeln!(w)?;
            }
            PlyFormat::BinaryLittleEndian => {
                for v in p.to_array() {
                    w.write_all(&v.to_le_bytes())?;
                }
                if let Some(n) = n {
                    for v in n.to_array() {
                        w.write_all(&v.to_le_bytes())?;
                    }
                }
                if let Some(c) = c {
                    w.write_all(&c)?;
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Scalar> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn decode_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Clone, Debug)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Clone, Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
    body_offset: usize,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedFile(msg.into())
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut offset = 0;
    let mut next_line = || -> Result<&str> {
        let rest = &bytes[offset..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| malformed("unterminated header"))?;
        offset += end + 1;
        std::str::from_utf8(&rest[..end])
            .map(|s| s.trim_end_matches('\r'))
            .map_err(|_| malformed("header is not valid UTF-8"))
    };

    if next_line()?.trim() != "ply" {
        return Err(malformed("missing 'ply' magic"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = next_line()?;
        let mut tok = line.split_whitespace();
        match tok.next() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                format = Some(match (tok.next(), tok.next()) {
                    (Some("ascii"), Some("1.0")) => PlyFormat::Ascii,
                    (Some("binary_little_endian"), Some("1.0")) => PlyFormat::BinaryLittleEndian,
                    (Some(f), _) => return Err(malformed(format!("unsupported format {f:?}"))),
                    _ => return Err(malformed("incomplete format line")),
                });
            }
            Some("element") => {
                let name = tok.next().ok_or_else(|| malformed("element without name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| malformed(format!("bad count for element {name}")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| malformed("property before any element"))?;
                let words: Vec<&str> = tok.collect();
                let prop = match words.as_slice() {
                    ["list", c, i, _name] => Property::List {
                        count: Scalar::parse(c).ok_or_else(|| malformed(format!("bad type {c}")))?,
                        item: Scalar::parse(i).ok_or_else(|| malformed(format!("bad type {i}")))?,
                    },
                    [ty, name] => Property::Scalar {
                        name: name.to_string(),
                        ty: Scalar::parse(ty).ok_or_else(|| malformed(format!("bad type {ty}")))?,
                    },
                    _ => return Err(malformed(format!("bad property line {line:?}"))),
                };
                el.properties.push(prop);
            }
            Some("end_header") => break,
            Some(other) => return Err(malformed(format!("unexpected header keyword {other:?}"))),
        }
    }
    Ok(Header {
        format: format.ok_or_else(|| malformed("missing format line"))?,
        elements,
        body_offset: offset,
    })
}

/// Column positions of the fields we extract from the vertex element.
struct VertexLayout {
    xyz: [usize; 3],
    normals: Option<[usize; 3]>,
}

fn vertex_layout(el: &Element) -> Result<VertexLayout> {
    let find = |want: &str| {
        el.properties.iter().position(|p| match p {
            Property::Scalar { name, .. } => name == want,
            Property::List { .. } => false,
        })
    };
    let xyz = match (find("x"), find("y"), find("z")) {
        (Some(x), Some(y), Some(z)) => [x, y, z],
        _ => return Err(malformed("vertex element lacks x, y, z")),
    };
    let normals = match (find("nx"), find("ny"), find("nz")) {
        (Some(x), Some(y), Some(z)) => Some([x, y, z]),
        _ => None,
    };
    Ok(VertexLayout { xyz, normals })
}

/// Parses an in-memory PLY document.
pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    let header = parse_header(bytes)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| malformed("no vertex element"))?;
    let layout = vertex_layout(&header.elements[vertex_pos])?;
    for el in &header.elements {
        if el.name != "vertex" {
            log::warn!("skipping PLY element {:?} ({} entries)", el.name, el.count);
        }
    }

    let body = &bytes[header.body_offset..];
    let mut reader: Box<dyn RowReader> = match header.format {
        PlyFormat::Ascii => Box::new(AsciiRows::new(body)?),
        PlyFormat::BinaryLittleEndian => Box::new(BinaryRows { body, pos: 0 }),
    };

    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut row = Vec::new();
    for (ei, el) in header.elements.iter().enumerate() {
        let keep = ei == vertex_pos;
        if keep {
            points.reserve(el.count);
        }
        for r in 0..el.count {
            row.clear();
            reader.read_row(&el.properties, &mut row).map_err(|e| match e {
                Error::MalformedFile(m) => {
                    malformed(format!("element {:?} row {r} of {}: {m}", el.name, el.count))
                }
                other => other,
            })?;
            if keep {
                let [x, y, z] = layout.xyz;
                points.push(Point3::new(row[x], row[y], row[z]));
                if let Some([x, y, z]) = layout.normals {
                    normals.push(Point3::new(row[x], row[y], row[z]));
                }
            }
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return Err(Error::NonFiniteData(format!("vertex {i}")));
    }
    if layout.normals.is_some() {
        for (i, n) in normals.iter_mut().enumerate() {
            if !n.is_finite() {
                return Err(Error::NonFiniteData(format!("normal {i}")));
            }
            // Single-precision normals from other tools are rarely unit to 1e-6.
            if (n.norm() - 1.0).abs() > 1e-6 {
                *n = n
                    .normalized()
                    .ok_or_else(|| malformed(format!("zero-length normal at vertex {i}")))?;
            }
        }
        PointCloud::with_normals(points, normals)
    } else {
        PointCloud::new(points)
    }
}

trait RowReader {
    /// Reads one element row; scalar properties are appended in declaration
    /// order (list properties are consumed and contribute a NaN placeholder).
    fn read_row(&mut self, props: &[Property], out: &mut Vec<f64>) -> Result<()>;
}

struct AsciiRows<'a> {
    tokens: std::str::SplitAsciiWhitespace<'a>,
}

impl<'a> AsciiRows<'a> {
    fn new(body: &'a [u8]) -> Result<Self> {
        let text = std::str::from_utf8(body).map_err(|_| malformed("ASCII body is not UTF-8"))?;
        Ok(AsciiRows {
            tokens: text.split_ascii_whitespace(),
        })
    }

    fn next_value(&mut self) -> Result<f64> {
        let t = self.tokens.next().ok_or_else(|| malformed("unexpected end of data"))?;
        t.parse::<f64>()
            .map_err(|_| malformed(format!("invalid number {t:?}")))
    }
}

impl RowReader for AsciiRows<'_> {
    fn read_row(&mut self, props: &[Property], out: &mut Vec<f64>) -> Result<()> {
        for p in props {
            match p {
                Property::Scalar { .. } => {
                    let v = self.next_value()?;
                    out.push(v);
                }
                Property::List { .. } => {
                    let n = self.next_value()?;
                    if n < 0.0 || n.fract() != 0.0 {
                        return Err(malformed(format!("invalid list length {n}")));
                    }
                    for _ in 0..n as usize {
                        self.next_value()?;
                    }
                    out.push(f64::NAN);
                }
            }
        }
        Ok(())
    }
}

struct BinaryRows<'a> {
    body: &'a [u8],
    pos: usize,
}

impl BinaryRows<'_> {
    fn take(&mut self, ty: Scalar) -> Result<f64> {
        let n = ty.size();
        let b = self
            .body
            .get(self.pos..self.pos + n)
            .ok_or_else(|| malformed("unexpected end of data"))?;
        self.pos += n;
        Ok(ty.decode_le(b))
    }
}

impl RowReader for BinaryRows<'_> {
    fn read_row(&mut self, props: &[Property], out: &mut Vec<f64>) -> Result<()> {
        for p in props {
            match *p {
                Property::Scalar { ty, .. } => {
                    let v = self.take(ty)?;
                    out.push(v);
                }
                Property::List { count, item } => {
                    let n = self.take(count)?;
                    if n < 0.0 {
                        return Err(malformed(format!("invalid list length {n}")));
                    }
                    let skip = n as usize * item.size();
                    if self.pos + skip > self.body.len() {
                        return Err(malformed("unexpected end of data"));
                    }
                    self.pos += skip;
                    out.push(f64::NAN);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_ascii_vertex() {
        let doc = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n";
        let c = parse_ply(doc).unwrap();
        assert_eq!(c.points(), &[Point3::ORIGIN]);
        assert!(c.normals().is_none());
    }

    #[test]
    fn truncated_ascii_is_malformed() {
        let mut doc = String::from(
            "ply\nformat ascii 1.0\nelement vertex 10\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
        );
        for i in 0..9 {
            doc.push_str(&format!("{i} 0 0\n"));
        }
        assert!(matches!(parse_ply(doc.as_bytes()), Err(Error::MalformedFile(_))));
    }

    #[test]
    fn truncated_binary_is_malformed() {
        let cloud = PointCloud::new((0..10).map(|i| Point3::new(i as f64, 0.0, 1.0)).collect()).unwrap();
        let mut buf = Vec::new();
        write_ply(&mut buf, &cloud, PlyFormat::BinaryLittleEndian, None).unwrap();
        buf.truncate(buf.len() - 24);
        assert!(matches!(parse_ply(&buf), Err(Error::MalformedFile(_))));
    }

    #[test]
    fn zero_vertices_is_empty_cloud() {
        let doc = b"ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
        assert!(matches!(parse_ply(doc), Err(Error::EmptyCloud)));
    }

    #[test]
    fn nan_coordinate_is_rejected() {
        let doc = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\nnan 0 0\n";
        assert!(matches!(parse_ply(doc), Err(Error::NonFiniteData(_))));
    }

    #[test]
    fn skips_faces_and_reads_normals_and_mixed_types() {
        let doc = "ply\r\nformat ascii 1.0\r\ncomment mixed\r\nelement vertex 2\r\nproperty float x\r\nproperty float y\r\nproperty float z\r\nproperty float nx\r\nproperty float ny\r\nproperty float nz\r\nproperty uchar red\r\nelement face 1\r\nproperty list uchar int vertex_indices\r\nend_header\r\n1 2 3 0 0 1 255\r\n4 5 6 0 1 0 0\r\n3 0 1 1\r\n";
        let c = parse_ply(doc.as_bytes()).unwrap();
        assert_eq!(c.points()[1], Point3::new(4.0, 5.0, 6.0));
        assert_eq!(c.normals().unwrap()[1], Point3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn binary_with_float_properties_and_face_list() {
        let mut buf = b"ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n".to_vec();
        for v in [0.5f32, -1.25, 2.0] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.push(3);
        for i in [0i32, 0, 0] {
            buf.extend_from_slice(&i.to_le_bytes());
        }
        let c = parse_ply(&buf).unwrap();
        assert_eq!(c.points(), &[Point3::new(0.5, -1.25, 2.0)]);
    }

    #[test]
    fn missing_coordinates_or_format_is_malformed() {
        let doc = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nend_header\n0 0\n";
        assert!(matches!(parse_ply(doc), Err(Error::MalformedFile(_))));
        let doc = b"ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n";
        assert!(matches!(parse_ply(doc), Err(Error::MalformedFile(_))));
        assert!(matches!(parse_ply(b"not a ply"), Err(Error::MalformedFile(_))));
    }

    #[test]
    fn color_count_is_checked_before_writing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        let cloud = PointCloud::new(vec![Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0)]).unwrap();
        let err = save_ply(&cloud, &path, PlyFormat::Ascii, Some(&[[0, 0, 0]])).unwrap_err();
        assert!(matches!(err, Error::ColorCountMismatch(1, 2)));
        assert!(!path.exists());
    }
}

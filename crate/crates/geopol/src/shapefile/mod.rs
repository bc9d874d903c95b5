//! ESRI shapefile (.shp) and dBASE III (.dbf) readers, plus the join that
//! pairs shapes with their attribute rows.
//!
//! Shapefiles mix endianness: the header is big-endian through word 6 and
//! little-endian from word 7, record headers are big-endian, payloads
//! little-endian. Only shape types 0 (null), 1 (point), and 5 (polygon)
//! are supported. All reads are bounds-checked; malformed input yields an
//! error, never a panic.

use std::collections::BTreeMap;

use thiserror::Error;

mod dbf;
mod shp;

pub use dbf::parse_dbf;
pub use shp::parse_shp;

#[derive(Debug, Error)]
pub enum ShapefileError {
    #[error("bad magic: {0}")]
    BadMagic(String),
    #[error("unsupported shape type {0}")]
    UnsupportedShapeType(i32),
    #[error("record {record}: shape type {found} does not match header type {expected}")]
    ShapeTypeMismatch { record: u32, found: i32, expected: i32 },
    #[error("record {expected}: record number reads {found}")]
    BadRecordNumber { expected: u32, found: i32 },
    #[error("truncated: {0}")]
    Truncated(String),
    #[error("record {0}: non-finite coordinate")]
    NonFiniteCoordinate(u32),
    #[error("record {record}: malformed ring: {message}")]
    MalformedRing { record: u32, message: String },
    #[error("bad version byte 0x{0:02x}, expected 0x03")]
    BadVersionByte(u8),
    #[error("row/field mismatch: {0}")]
    RowFieldMismatch(String),
    #[error("duplicate field name {0:?}")]
    DuplicateField(String),
    #[error("record count mismatch: {shp} shapes vs {dbf} attribute rows")]
    CountMismatch { shp: usize, dbf: usize },
    #[error("field {0:?} not usable: {1}")]
    MissingField(String, String),
}

/// Bounds-checked cursor over input bytes. Every read names what it was
/// after so truncation errors stay diagnosable.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Reader<'a> {
        Reader { bytes, pos: 0 }
    }

    pub(crate) fn pos(&self) -> usize {
        self.pos
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ShapefileError> {
        if self.remaining() < n {
            return Err(ShapefileError::Truncated(format!(
                "{what} needs {n} bytes at offset {}, only {} available",
                self.pos,
                self.remaining()
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8, ShapefileError> {
        Ok(self.take(1, what)?[0])
    }

    pub(crate) fn peek_u8(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    pub(crate) fn i32_be(&mut self, what: &str) -> Result<i32, ShapefileError> {
        let b = self.take(4, what)?;
        Ok(i32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn i32_le(&mut self, what: &str) -> Result<i32, ShapefileError> {
        let b = self.take(4, what)?;
        Ok(i32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn u16_le(&mut self, what: &str) -> Result<u16, ShapefileError> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    pub(crate) fn u32_le(&mut self, what: &str) -> Result<u32, ShapefileError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn f64_le(&mut self, what: &str) -> Result<f64, ShapefileError> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8-byte slice")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeType {
    Point = 1,
    Polygon = 5,
}

/// One decoded record. Null shapes carry no parts; point records carry one
/// single-vertex part; polygon records carry one closed ring per part.
#[derive(Debug, Clone, PartialEq)]
pub struct RawShape {
    pub record_number: u32,
    pub is_null: bool,
    pub parts: Vec<Vec<(f64, f64)>>,
}

impl RawShape {
    /// Null shapes and zero-part polygon records contribute no geometry.
    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShpDataset {
    pub shape_type: ShapeType,
    /// Header bounds: xmin, ymin, xmax, ymax in degrees.
    pub bbox: [f64; 4],
    pub records: Vec<RawShape>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldType {
    Character,
    Numeric,
    /// Any other dBASE type byte; cells readable as opaque text only.
    Other(u8),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDescriptor {
    pub name: String,
    pub field_type: FieldType,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeTable {
    pub fields: Vec<FieldDescriptor>,
    /// One map per live row, keyed by field name. Deleted rows are dropped
    /// during parsing.
    pub rows: Vec<BTreeMap<String, String>>,
}

/// Which .dbf columns supply the feature id and legal name. Configuration
/// rather than constants: Census datasets disagree on column names (GEOID
/// vs AFFGEOID, NAME vs BASENAME).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMapping {
    pub id_field: String,
    pub name_field: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawEntry {
    pub record_number: u32,
    pub id: String,
    pub legal_name: String,
    pub shape: RawShape,
}

/// A record excluded from the join, with the reason preserved so the ETL
/// can carry it into provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SkipEvent {
    pub record_number: u32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub shape_type: ShapeType,
    pub entries: Vec<RawEntry>,
    pub skipped: Vec<SkipEvent>,
}

fn usable_field<'t>(
    table: &'t AttributeTable,
    name: &str,
) -> Result<&'t FieldDescriptor, ShapefileError> {
    let field = table
        .fields
        .iter()
        .find(|f| f.name == name)
        .ok_or_else(|| {
            ShapefileError::MissingField(name.to_string(), "not present in the table".into())
        })?;
    match field.field_type {
        FieldType::Character | FieldType::Numeric => Ok(field),
        FieldType::Other(t) => Err(ShapefileError::MissingField(
            name.to_string(),
            format!("field type {:?} is not interpretable", t as char),
        )),
    }
}

/// Join a .shp and its .dbf sidecar by record order. Null shapes and
/// empty-geometry records become skip events instead of entries; output
/// order follows .shp record order.
pub fn load_dataset(
    shp_bytes: &[u8],
    dbf_bytes: &[u8],
    mapping: &FieldMapping,
) -> Result<RawDataset, ShapefileError> {
    let dataset = parse_shp(shp_bytes)?;
    let table = parse_dbf(dbf_bytes)?;
    usable_field(&table, &mapping.id_field)?;
    usable_field(&table, &mapping.name_field)?;
    if dataset.records.len() != table.rows.len() {
        return Err(ShapefileError::CountMismatch {
            shp: dataset.records.len(),
            dbf: table.rows.len(),
        });
    }

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (shape, row) in dataset.records.into_iter().zip(&table.rows) {
        let record_number = shape.record_number;
        if shape.is_null {
            skipped.push(SkipEvent {
                record_number,
                reason: "null shape".into(),
            });
            continue;
        }
        if shape.is_empty() {
            skipped.push(SkipEvent {
                record_number,
                reason: "empty geometry".into(),
            });
            continue;
        }
        let id = row[&mapping.id_field].clone();
        if id.is_empty() {
            skipped.push(SkipEvent {
                record_number,
                reason: "empty id".into(),
            });
            continue;
        }
        entries.push(RawEntry {
            record_number,
            id,
            legal_name: row[&mapping.name_field].clone(),
            shape,
        });
    }
    Ok(RawDataset {
        shape_type: dataset.shape_type,
        entries,
        skipped,
    })
}

#[cfg(test)]
pub(crate) fn fixture(name: &str) -> Vec<u8> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name);
    std::fs::read(&path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

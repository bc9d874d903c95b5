//! dBASE III (.dbf) attribute table reader.

use std::collections::BTreeMap;

use super::{AttributeTable, FieldDescriptor, FieldType, Reader, ShapefileError};

const VERSION_DBASE3: u8 = 0x03;
const FIELD_TERMINATOR: u8 = 0x0d;
const DELETED_FLAG: u8 = 0x2a;
const EOF_MARKER: u8 = 0x1a;

fn decode_name(raw: &[u8]) -> String {
    let end = raw.iter().position(|&b| b == 0).unwrap_or(raw.len());
    String::from_utf8_lossy(&raw[..end]).into_owned()
}

/// Decode a complete .dbf byte sequence. Character cells are right-trimmed
/// of padding, numeric cells trimmed on both sides, deleted rows dropped.
pub fn parse_dbf(bytes: &[u8]) -> Result<AttributeTable, ShapefileError> {
    let mut r = Reader::new(bytes);
    let version = r.u8("version byte")?;
    if version != VERSION_DBASE3 {
        return Err(ShapefileError::BadVersionByte(version));
    }
    r.take(3, "last-update date")?;
    let record_count = r.u32_le("record count")?;
    let header_size = r.u16_le("header size")? as usize;
    let record_size = r.u16_le("record size")? as usize;
    r.take(20, "reserved header bytes")?;

    let mut fields: Vec<FieldDescriptor> = Vec::new();
    loop {
        match r.peek_u8() {
            Some(FIELD_TERMINATOR) => {
                r.u8("field terminator")?;
                break;
            }
            Some(_) => {
                let desc = r.take(32, "field descriptor")?;
                let name = decode_name(&desc[0..11]);
                if fields.iter().any(|f| f.name == name) {
                    return Err(ShapefileError::DuplicateField(name));
                }
                let field_type = match desc[11] {
                    b'C' => FieldType::Character,
                    b'N' => FieldType::Numeric,
                    other => FieldType::Other(other),
                };
                fields.push(FieldDescriptor {
                    name,
                    field_type,
                    length: desc[16] as usize,
                });
            }
            None => {
                return Err(ShapefileError::Truncated(
                    "field descriptors not terminated by 0x0d".into(),
                ))
            }
        }
    }
    if r.pos() != header_size {
        return Err(ShapefileError::RowFieldMismatch(format!(
            "declared header size {header_size}, descriptors end at {}",
            r.pos()
        )));
    }
    let row_width = 1 + fields.iter().map(|f| f.length).sum::<usize>();
    if row_width != record_size {
        return Err(ShapefileError::RowFieldMismatch(format!(
            "declared record size {record_size}, field lengths sum to {row_width}"
        )));
    }

    let mut rows = Vec::new();
    for _ in 0..record_count {
        let row = r.take(record_size, "table row")?;
        if row[0] == DELETED_FLAG {
            continue;
        }
        let mut cells = BTreeMap::new();
        let mut offset = 1;
        for field in &fields {
            let raw = &row[offset..offset + field.length];
            offset += field.length;
            let text = String::from_utf8_lossy(raw);
            let cell = match field.field_type {
                FieldType::Character | FieldType::Other(_) => text.trim_end_matches(' '),
                FieldType::Numeric => text.trim_matches(' '),
            };
            cells.insert(field.name.clone(), cell.to_string());
        }
        rows.push(cells);
    }

    match r.remaining() {
        0 => {}
        1 if r.peek_u8() == Some(EOF_MARKER) => {}
        n => {
            return Err(ShapefileError::Truncated(format!(
                "{n} unexpected bytes after the last row"
            )))
        }
    }
    Ok(AttributeTable { fields, rows })
}

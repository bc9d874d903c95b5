//! .shp main-file reader.

use super::{RawShape, Reader, ShapeType, ShapefileError, ShpDataset};

const FILE_CODE: i32 = 9994;
const VERSION: i32 = 1000;
const HEADER_LEN: usize = 100;

/// Decode a complete .shp byte sequence. Records are scanned sequentially;
/// any .shx sidecar is redundant for a full scan and is ignored.
pub fn parse_shp(bytes: &[u8]) -> Result<ShpDataset, ShapefileError> {
    let mut r = Reader::new(bytes);
    let file_code = r.i32_be("file code")?;
    if file_code != FILE_CODE {
        return Err(ShapefileError::BadMagic(format!(
            "file code {file_code}, expected {FILE_CODE}"
        )));
    }
    r.take(20, "reserved header words")?;
    let file_len_words = r.i32_be("file length")?;
    if i64::from(file_len_words) * 2 != bytes.len() as i64 {
        return Err(ShapefileError::Truncated(format!(
            "header declares {} bytes, file has {}",
            i64::from(file_len_words) * 2,
            bytes.len()
        )));
    }
    let version = r.i32_le("version")?;
    if version != VERSION {
        return Err(ShapefileError::BadMagic(format!(
            "version {version}, expected {VERSION}"
        )));
    }
    let type_code = r.i32_le("shape type")?;
    let shape_type = match type_code {
        1 => ShapeType::Point,
        5 => ShapeType::Polygon,
        other => return Err(ShapefileError::UnsupportedShapeType(other)),
    };
    let mut bbox = [0.0; 4];
    for slot in &mut bbox {
        *slot = r.f64_le("header bounding box")?;
    }
    r.take(32, "header z/m ranges")?;
    debug_assert_eq!(r.pos(), HEADER_LEN);

    let mut records = Vec::new();
    while r.remaining() > 0 {
        let expected = records.len() as u32 + 1;
        let found = r.i32_be("record number")?;
        if found != expected as i32 {
            return Err(ShapefileError::BadRecordNumber { expected, found });
        }
        let content_words = r.i32_be("record content length")?;
        if content_words < 0 {
            return Err(ShapefileError::Truncated(format!(
                "record {expected}: negative content length"
            )));
        }
        let content = r.take(content_words as usize * 2, "record content")?;
        records.push(parse_record(expected, shape_type, content)?);
    }
    Ok(ShpDataset {
        shape_type,
        bbox,
        records,
    })
}

fn parse_record(
    record: u32,
    header_type: ShapeType,
    content: &[u8],
) -> Result<RawShape, ShapefileError> {
    let mut r = Reader::new(content);
    let type_code = r.i32_le("record shape type")?;
    let parts = match type_code {
        0 => Vec::new(),
        1 if header_type == ShapeType::Point => {
            let x = r.f64_le("point x")?;
            let y = r.f64_le("point y")?;
            if !x.is_finite() || !y.is_finite() {
                return Err(ShapefileError::NonFiniteCoordinate(record));
            }
            vec![vec![(x, y)]]
        }
        5 if header_type == ShapeType::Polygon => parse_polygon_parts(record, &mut r)?,
        1 | 5 => {
            return Err(ShapefileError::ShapeTypeMismatch {
                record,
                found: type_code,
                expected: header_type as i32,
            })
        }
        other => return Err(ShapefileError::UnsupportedShapeType(other)),
    };
    if r.remaining() > 0 {
        return Err(ShapefileError::Truncated(format!(
            "record {record}: {} bytes of content beyond the shape",
            r.remaining()
        )));
    }
    Ok(RawShape {
        record_number: record,
        is_null: type_code == 0,
        parts,
    })
}

fn parse_polygon_parts(
    record: u32,
    r: &mut Reader,
) -> Result<Vec<Vec<(f64, f64)>>, ShapefileError> {
    for _ in 0..4 {
        r.f64_le("record bounding box")?;
    }
    let num_parts = r.i32_le("part count")?;
    let num_points = r.i32_le("point count")?;
    if num_parts < 0 || num_points < 0 {
        return Err(ShapefileError::Truncated(format!(
            "record {record}: negative part or point count"
        )));
    }
    let (num_parts, num_points) = (num_parts as usize, num_points as usize);
    // size check up front so absurd counts fail before any allocation
    let needed = num_parts as u64 * 4 + num_points as u64 * 16;
    if needed != r.remaining() as u64 {
        return Err(ShapefileError::Truncated(format!(
            "record {record}: {num_parts} parts and {num_points} points need {needed} bytes, \
             {} available",
            r.remaining()
        )));
    }
    if num_parts == 0 && num_points > 0 {
        return Err(ShapefileError::MalformedRing {
            record,
            message: "points present but no parts".into(),
        });
    }

    let mut offsets = Vec::with_capacity(num_parts);
    for _ in 0..num_parts {
        offsets.push(r.i32_le("part offset")?);
    }
    let mut points = Vec::with_capacity(num_points);
    for _ in 0..num_points {
        let x = r.f64_le("vertex x")?;
        let y = r.f64_le("vertex y")?;
        if !x.is_finite() || !y.is_finite() {
            return Err(ShapefileError::NonFiniteCoordinate(record));
        }
        points.push((x, y));
    }

    let mut parts = Vec::with_capacity(num_parts);
    for (i, &start) in offsets.iter().enumerate() {
        let end = offsets
            .get(i + 1)
            .copied()
            .unwrap_or(num_points as i32);
        if start < 0 || end <= start || end > num_points as i32 {
            return Err(ShapefileError::MalformedRing {
                record,
                message: format!("part offsets {start}..{end} out of order or out of range"),
            });
        }
        let ring = points[start as usize..end as usize].to_vec();
        if ring.len() < 4 {
            return Err(ShapefileError::MalformedRing {
                record,
                message: format!("ring has {} vertices, need at least 4", ring.len()),
            });
        }
        if ring.first() != ring.last() {
            return Err(ShapefileError::MalformedRing {
                record,
                message: "ring is not closed".into(),
            });
        }
        parts.push(ring);
    }
    Ok(parts)
}

//! Read a shapefile pair at the lowest level: the .shp geometry records,
//! the .dbf attribute table, and the joined dataset with its skip events.
//!
//! Run with: cargo run --example parse_shapefile

use std::fs;
use std::path::Path;

use geopol::shapefile::{load_dataset, parse_dbf, parse_shp, FieldMapping};

fn fixture(name: &str) -> Vec<u8> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name);
    fs::read(&path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let shp = parse_shp(&fixture("states_mini.shp"))?;
    println!("states_mini.shp: shape type {:?}", shp.shape_type);
    let [xmin, ymin, xmax, ymax] = shp.bbox;
    println!("header bbox: ({xmin} {ymin}) to ({xmax} {ymax})");
    for rec in &shp.records {
        let vertices: usize = rec.parts.iter().map(Vec::len).sum();
        println!(
            "  record {}: {} ring(s), {} vertices",
            rec.record_number,
            rec.parts.len(),
            vertices
        );
    }

    let dbf = parse_dbf(&fixture("states_mini.dbf"))?;
    let names: Vec<&str> = dbf.fields.iter().map(|f| f.name.as_str()).collect();
    println!("states_mini.dbf: fields {}", names.join(", "));
    for row in &dbf.rows {
        println!("  GEOID={} NAME={}", row["GEOID"], row["NAME"]);
    }

    // the mixed fixture holds a null shape and an empty polygon between two
    // ordinary records; joining keeps them as skip events
    let raw = load_dataset(
        &fixture("mixed_mini.shp"),
        &fixture("mixed_mini.dbf"),
        &FieldMapping {
            id_field: "GEOID".into(),
            name_field: "NAME".into(),
        },
    )?;
    println!("mixed_mini: {} usable entries", raw.entries.len());
    for entry in &raw.entries {
        println!("  record {} -> {} ({})", entry.record_number, entry.id, entry.legal_name);
    }
    for skip in &raw.skipped {
        println!("  record {} skipped: {}", skip.record_number, skip.reason);
    }
    Ok(())
}

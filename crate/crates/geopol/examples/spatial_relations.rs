//! Infer spatial relations for query points against a persisted store:
//! which polygon features contain each point, and how far each point is
//! from chosen distance targets.
//!
//! Run with: cargo run --example spatial_relations

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use geopol::geometry::Point;
use geopol::relations::infer_relations;
use geopol::store::load_ntriples;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join("store_mini.nt");
    let store = load_ntriples(&fs::read_to_string(&path)?)?;

    let targets: BTreeSet<String> = ["http://example.org/sites/CAMPPARKS".to_string()].into();
    for (lon, lat) in [(0.5, 0.5), (0.9, 0.9), (2.5, 0.5), (50.0, 50.0)] {
        let p = Point::new(lon, lat)?;
        let facts = infer_relations(p, &store, &targets, "urn:query:location")?;
        println!("POINT({lon} {lat})");
        if facts.within.is_empty() {
            println!("  within: nothing");
        }
        for iri in &facts.within {
            println!("  within <{iri}>");
        }
        for (iri, km) in &facts.distances_km {
            println!("  distance to <{iri}>: {km:.3} km");
        }
    }
    Ok(())
}

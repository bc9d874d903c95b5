//! Parse the policy DSL and classify locations: membership is the least
//! fixed point of the class expressions over a set of spatial facts, with
//! declared superclasses closed over.
//!
//! Run with: cargo run --example policy_classification

use std::fs;
use std::path::Path;

use geopol::geometry::Point;
use geopol::policy::{classify_with_support, parse_policy_doc};
use geopol::relations::LocationFacts;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join("policy_mini.pol");
    let ps = parse_policy_doc(&fs::read_to_string(&path)?)?;
    println!("{} classes, {} provisions", ps.classes.len(), ps.provisions.len());
    for (iri, def) in &ps.classes {
        println!("class <{iri}> = {}", def.equivalent_to);
    }

    let cases: [(&str, &[&str]); 3] = [
        ("at the Fairbanks-analog site", &[
            "http://example.org/states/A1",
            "http://example.org/sites/FAIRBANKS",
        ]),
        ("in state A1 only", &["http://example.org/states/A1"]),
        ("outside everything", &[]),
    ];
    for (label, within) in cases {
        let mut facts = LocationFacts::new("urn:example:location", Point::new(0.0, 0.0)?);
        facts.within = within.iter().map(|s| s.to_string()).collect();
        let c = classify_with_support(&facts, &ps);
        println!("\n{label}: {} iteration(s)", c.iterations);
        if c.memberships.is_empty() {
            println!("  no memberships");
        }
        for class in &c.memberships {
            let atoms: Vec<String> = c.support[class].iter().map(|a| a.to_string()).collect();
            println!("  member of <{class}> via {}", atoms.join(" and "));
        }
    }
    Ok(())
}

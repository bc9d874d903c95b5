//! The full decision pipeline: parse a transmission request, infer its
//! location's relations, classify, test every provision, and print the
//! deterministic decision document.
//!
//! Run with: cargo run --example evaluate_request

use std::fs;
use std::path::Path;

use geopol::pipeline::{decision_document, evaluate_request, parse_request};
use geopol::policy::{parse_policy_doc, validate_policy_set};
use geopol::store::load_ntriples;

fn fixture_text(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = load_ntriples(&fixture_text("store_mini.nt"))?;
    let ps = parse_policy_doc(&fixture_text("policy_mini.pol"))?;
    let report = validate_policy_set(&ps, &store);
    assert!(!report.has_errors(), "policy must validate:\n{report}");

    for name in ["fairbanks.req", "arizona.req", "band_mismatch.req"] {
        let req = parse_request(&fixture_text(name))?;
        let decision = evaluate_request(&req, &store, &ps)?;
        let verdicts: Vec<String> = decision
            .provision_results
            .iter()
            .map(|r| {
                format!(
                    "{}/{} {}",
                    r.policy_id,
                    r.provision_id,
                    if r.applicable { "applicable" } else { "not applicable" }
                )
            })
            .collect();
        println!("# {name}: {}", verdicts.join(", "));
        print!("{}", decision_document(&decision));
    }
    Ok(())
}

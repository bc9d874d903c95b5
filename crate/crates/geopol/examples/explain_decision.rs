//! Explanations end to end: the step-by-step trace behind a decision, and
//! the provenance chain from each cited feature back to its source file.
//!
//! Run with: cargo run --example explain_decision

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use geopol::pipeline::{evaluate_request, explain, parse_request, StepKind};
use geopol::policy::{parse_policy_doc, SupportAtom};
use geopol::store::{load_ntriples, provenance_trace};

fn fixture_text(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = load_ntriples(&fixture_text("store_mini.nt"))?;
    let ps = parse_policy_doc(&fixture_text("policy_mini.pol"))?;
    let req = parse_request(&fixture_text("fairbanks.req"))?;
    let decision = evaluate_request(&req, &store, &ps)?;

    print!("{}", explain(&decision));

    // every feature cited as evidence has a derivation chain in the store
    let mut cited: BTreeSet<&str> = BTreeSet::new();
    for step in &decision.trace.steps {
        if step.kind != StepKind::ClassEntered {
            continue;
        }
        for atom in &step.support {
            match atom {
                SupportAtom::Within(f) => cited.insert(f),
                SupportAtom::Distance { feature, .. } => cited.insert(feature),
            };
        }
    }
    println!("\nprovenance of the cited features:");
    for iri in cited {
        let chain = provenance_trace(&store, iri)?;
        for record in &chain.records {
            println!(
                "  <{}> derived from <{}> by <{}> at {}",
                record.entity, record.derived_from, record.generated_by, record.at
            );
        }
    }
    Ok(())
}

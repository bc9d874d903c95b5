//! End-to-end request evaluation.
//!
//! A transmission request carries a point location and an optional
//! frequency band. Evaluation infers spatial relations against the store,
//! classifies the location, and checks every provision, recording each
//! step in an explanation trace.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use thiserror::Error;

use crate::geometry::{emit_wkt, parse_wkt, Geometry, GeometryError, Point};
use crate::policy::{classify_with_support, Band, Effect, PolicySet, Provision, SupportAtom};
use crate::relations::{apply_relations, infer_relations, LocationFacts, RelationError};
use crate::store::FeatureStore;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("request location must be a POINT, found {0}")]
    NotAPoint(&'static str),
    #[error("request document has no location_wkt")]
    MissingLocation,
    #[error("request document has no {0}")]
    MissingField(&'static str),
    #[error("request location_wkt: {0}")]
    InvalidWkt(#[from] GeometryError),
    #[error(transparent)]
    Relation(#[from] RelationError),
}

/// A request to transmit from a point location, optionally in a band.
/// `facts` starts empty and is populated during evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionRequest {
    pub id: String,
    pub requester: String,
    pub location_wkt: String,
    pub frequency_mhz: Option<Band>,
    pub attributes: BTreeMap<String, String>,
    pub facts: LocationFacts,
}

fn location_node_for(id: &str) -> String {
    format!("urn:request:{id}:location")
}

impl TransmissionRequest {
    /// Build a request directly; `location_wkt` must be a WKT point.
    pub fn new(
        id: impl Into<String>,
        requester: impl Into<String>,
        location_wkt: impl Into<String>,
        frequency_mhz: Option<Band>,
    ) -> Result<TransmissionRequest, PipelineError> {
        let id = id.into();
        let location_wkt = location_wkt.into();
        let point = request_point(&location_wkt)?;
        Ok(TransmissionRequest {
            facts: LocationFacts::new(location_node_for(&id), point),
            id,
            requester: requester.into(),
            location_wkt,
            frequency_mhz,
            attributes: BTreeMap::new(),
        })
    }
}

fn request_point(wkt: &str) -> Result<Point, PipelineError> {
    match parse_wkt(wkt)? {
        Geometry::Point(p) => Ok(p),
        Geometry::Polygon(_) => Err(PipelineError::NotAPoint("POLYGON")),
        Geometry::MultiPolygon(_) => Err(PipelineError::NotAPoint("MULTIPOLYGON")),
    }
}

/// Parse the flat key-value request document: one `key = value` per line,
/// `#` comments. Keys: `id`, `requester`, `location_wkt`, optional
/// `frequency_mhz` as `low..high`, and free-form `attr.*` entries.
pub fn parse_request(text: &str) -> Result<TransmissionRequest, PipelineError> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(PipelineError::Syntax {
                line: line_no,
                message: format!("expected `key = value`, found `{line}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        let known = matches!(key, "id" | "requester" | "location_wkt" | "frequency_mhz");
        if !known && !key.starts_with("attr.") {
            return Err(PipelineError::Syntax {
                line: line_no,
                message: format!("unknown key `{key}`"),
            });
        }
        if key.starts_with("attr.") && key.len() == "attr.".len() {
            return Err(PipelineError::Syntax {
                line: line_no,
                message: "empty attribute name after `attr.`".into(),
            });
        }
        if entries
            .insert(key.to_string(), (line_no, value.to_string()))
            .is_some()
        {
            return Err(PipelineError::Syntax {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
    }

    let required = |key: &'static str| -> Result<String, PipelineError> {
        match entries.get(key) {
            Some((_, v)) if !v.is_empty() => Ok(v.clone()),
            _ if key == "location_wkt" => Err(PipelineError::MissingLocation),
            _ => Err(PipelineError::MissingField(key)),
        }
    };
    let id = required("id")?;
    let requester = required("requester")?;
    let location_wkt = required("location_wkt")?;

    let frequency_mhz = match entries.get("frequency_mhz") {
        None => None,
        Some((line, v)) => {
            let bad = |message: String| PipelineError::Syntax {
                line: *line,
                message,
            };
            let (lo, hi) = v
                .split_once("..")
                .ok_or_else(|| bad(format!("expected `low..high` MHz, found `{v}`")))?;
            let lo: f64 = lo
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad band low bound `{}`", lo.trim())))?;
            let hi: f64 = hi
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad band high bound `{}`", hi.trim())))?;
            if !lo.is_finite() || !hi.is_finite() {
                return Err(bad("band bounds must be finite".into()));
            }
            if hi < lo {
                return Err(bad(format!("band low bound {lo} exceeds high bound {hi}")));
            }
            Some(Band {
                low_mhz: lo,
                high_mhz: hi,
            })
        }
    };

    let point = request_point(&location_wkt).map_err(|e| match e {
        // report WKT syntax problems at the document line
        PipelineError::InvalidWkt(inner) => PipelineError::Syntax {
            line: entries["location_wkt"].0,
            message: format!("location_wkt: {inner}"),
        },
        other => other,
    })?;

    let attributes = entries
        .iter()
        .filter_map(|(k, (_, v))| {
            k.strip_prefix("attr.")
                .map(|name| (name.to_string(), v.clone()))
        })
        .collect();

    Ok(TransmissionRequest {
        facts: LocationFacts::new(location_node_for(&id), point),
        id,
        requester,
        location_wkt,
        frequency_mhz,
        attributes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    RelationInferred,
    ClassEntered,
    ProvisionMatched,
    ProvisionRejected,
}

impl StepKind {
    fn name(self) -> &'static str {
        match self {
            StepKind::RelationInferred => "RelationInferred",
            StepKind::ClassEntered => "ClassEntered",
            StepKind::ProvisionMatched => "ProvisionMatched",
            StepKind::ProvisionRejected => "ProvisionRejected",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub kind: StepKind,
    pub detail: String,
    pub support: Vec<SupportAtom>,
}

/// Ordered record of evaluation: relations first, then class entries,
/// then one step per provision.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExplanationTrace {
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProvisionResult {
    pub policy_id: String,
    pub provision_id: String,
    pub applicable: bool,
    pub effect: Effect,
    pub obligation: Option<String>,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub request_id: String,
    pub memberships: std::collections::BTreeSet<String>,
    pub relations: LocationFacts,
    pub provision_results: Vec<ProvisionResult>,
    pub trace: ExplanationTrace,
}

/// Distances quoted in documents and traces are rounded to 1e-6 km
/// (millimeters); stored facts stay exact.
fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn band_reasons(provision: &Provision, request_band: Option<Band>) -> (bool, String) {
    match (provision.band, request_band) {
        (None, _) => (true, "provision has no band constraint".into()),
        (Some(pb), None) => (
            false,
            format!("provision requires band {pb} and the request declares no band"),
        ),
        (Some(pb), Some(rb)) => {
            if pb.overlaps(&rb) {
                (true, format!("request band {rb} overlaps provision band {pb}"))
            } else {
                (
                    false,
                    format!("request band {rb} does not overlap provision band {pb}"),
                )
            }
        }
    }
}

/// Evaluate a request: infer relations over the store, classify, then
/// test every provision. A provision applies iff its location class is a
/// membership and its band (when present) overlaps the request band.
pub fn evaluate_request(
    req: &TransmissionRequest,
    store: &FeatureStore,
    ps: &PolicySet,
) -> Result<Decision, PipelineError> {
    let point = request_point(&req.location_wkt)?;
    let facts = infer_relations(point, store, &ps.distance_targets(), &req.facts.location_node)?;
    let req = apply_relations(req, &facts)?;
    let classification = classify_with_support(&req.facts, ps);

    let mut steps = Vec::new();
    for iri in &req.facts.within {
        steps.push(TraceStep {
            kind: StepKind::RelationInferred,
            detail: format!("location is within <{iri}>"),
            support: Vec::new(),
        });
    }
    for (iri, km) in &req.facts.distances_km {
        steps.push(TraceStep {
            kind: StepKind::RelationInferred,
            detail: format!("distance to <{iri}> is {} km", round6(*km)),
            support: Vec::new(),
        });
    }
    for class in &classification.memberships {
        steps.push(TraceStep {
            kind: StepKind::ClassEntered,
            detail: format!("location is in class <{class}>"),
            support: classification.support[class].clone(),
        });
    }

    let mut provision_results = Vec::new();
    for provision in &ps.provisions {
        let class_ok = classification.memberships.contains(&provision.location_class);
        let class_reason = if class_ok {
            format!("location is in class <{}>", provision.location_class)
        } else {
            format!("location is not in class <{}>", provision.location_class)
        };
        let (band_ok, band_reason) = band_reasons(provision, req.frequency_mhz);
        let applicable = class_ok && band_ok;
        let reasons = vec![class_reason, band_reason];
        let detail = format!(
            "provision {} is {}: effect {}; {}",
            provision.key(),
            if applicable { "applicable" } else { "not applicable" },
            provision.effect,
            reasons.join("; "),
        );
        steps.push(TraceStep {
            kind: if applicable {
                StepKind::ProvisionMatched
            } else {
                StepKind::ProvisionRejected
            },
            detail,
            support: if applicable {
                classification
                    .support
                    .get(&provision.location_class)
                    .cloned()
                    .unwrap_or_default()
            } else {
                Vec::new()
            },
        });
        provision_results.push(ProvisionResult {
            policy_id: provision.policy_id.clone(),
            provision_id: provision.id.clone(),
            applicable,
            effect: provision.effect,
            obligation: provision.obligation.clone(),
            reasons,
        });
    }

    Ok(Decision {
        request_id: req.id.clone(),
        memberships: classification.memberships,
        relations: req.facts.clone(),
        provision_results,
        trace: ExplanationTrace { steps },
    })
}

fn support_value(atom: &SupportAtom) -> Value {
    match atom {
        SupportAtom::Within(iri) => json!({ "kind": "within", "feature": iri }),
        SupportAtom::Distance {
            feature,
            km,
            threshold_km,
        } => json!({
            "kind": "distance",
            "feature": feature,
            "km": round6(*km),
            "threshold_km": threshold_km,
        }),
    }
}

/// Render a decision as key-sorted pretty JSON, newline-terminated.
/// Byte-identical for identical inputs.
pub fn decision_document(d: &Decision) -> String {
    let distances: BTreeMap<&String, f64> = d
        .relations
        .distances_km
        .iter()
        .map(|(k, v)| (k, round6(*v)))
        .collect();
    let doc = json!({
        "request_id": d.request_id,
        "memberships": d.memberships,
        "relations": {
            "location_node": d.relations.location_node,
            "point": emit_wkt(&Geometry::Point(d.relations.point)),
            "within": d.relations.within,
            "distances_km": distances,
        },
        "provision_results": d.provision_results.iter().map(|r| json!({
            "policy_id": r.policy_id,
            "provision_id": r.provision_id,
            "applicable": r.applicable,
            "effect": r.effect.to_string(),
            "obligation": r.obligation,
            "reasons": r.reasons,
        })).collect::<Vec<_>>(),
        "trace": d.trace.steps.iter().map(|s| json!({
            "kind": s.kind.name(),
            "detail": s.detail,
            "support": s.support.iter().map(support_value).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("decision serializes");
    text.push('\n');
    text
}

/// Render the trace as text, one line per step. Pure: identical decisions
/// yield identical text.
pub fn explain(d: &Decision) -> String {
    let mut out = format!(
        "request {} at {}\n",
        d.request_id,
        emit_wkt(&Geometry::Point(d.relations.point))
    );
    for step in &d.trace.steps {
        let tag = match step.kind {
            StepKind::RelationInferred => "relation",
            StepKind::ClassEntered => "class",
            StepKind::ProvisionMatched | StepKind::ProvisionRejected => "provision",
        };
        out.push_str(&format!("[{tag}] {}", step.detail));
        if step.kind == StepKind::ClassEntered && !step.support.is_empty() {
            let atoms: Vec<String> = step.support.iter().map(|a| a.to_string()).collect();
            out.push_str(&format!(", because {}", atoms.join(" and ")));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{fixture_policy, fixture_store};

    const FAIRBANKS_REQ: &str = "\
id = r1
requester = agentX
location_wkt = POINT(0.5 0.5)
frequency_mhz = 1770..1770
attr.power_w = 10
";

    #[test]
    fn parse_request_document() {
        let r = parse_request(FAIRBANKS_REQ).unwrap();
        assert_eq!(r.id, "r1");
        assert_eq!(r.requester, "agentX");
        assert_eq!(r.location_wkt, "POINT(0.5 0.5)");
        assert_eq!(
            r.frequency_mhz,
            Some(Band {
                low_mhz: 1770.0,
                high_mhz: 1770.0
            })
        );
        assert_eq!(r.attributes["power_w"], "10");
        assert_eq!(r.facts.location_node, "urn:request:r1:location");
        assert!(r.facts.within.is_empty());
    }

    #[test]
    fn parse_request_rejects_polygon_location() {
        let doc = "id = r\nrequester = a\nlocation_wkt = POLYGON((0 0,1 0,1 1,0 0))\n";
        assert!(matches!(
            parse_request(doc),
            Err(PipelineError::NotAPoint("POLYGON"))
        ));
    }

    #[test]
    fn parse_request_requires_location() {
        assert!(matches!(
            parse_request("id = r\nrequester = a\n"),
            Err(PipelineError::MissingLocation)
        ));
        assert!(matches!(
            parse_request("requester = a\nlocation_wkt = POINT(0 0)\n"),
            Err(PipelineError::MissingField("id"))
        ));
    }

    #[test]
    fn parse_request_syntax_errors_carry_line_numbers() {
        let base = "id = r\nrequester = a\nlocation_wkt = POINT(0 0)\n";
        let cases = [
            (format!("{base}bogus line\n"), 4),
            (format!("{base}foo = bar\n"), 4),
            (format!("{base}id = s\n"), 4),
            (format!("{base}frequency_mhz = 10\n"), 4),
            (format!("{base}frequency_mhz = 20..10\n"), 4),
            ("id = r\nrequester = a\nlocation_wkt = POINT(oops)\n".to_string(), 3),
        ];
        for (doc, want_line) in cases {
            match parse_request(&doc) {
                Err(PipelineError::Syntax { line, .. }) => assert_eq!(line, want_line, "{doc}"),
                other => panic!("{doc:?}: expected syntax error, got {other:?}"),
            }
        }
    }

    #[test]
    fn fairbanks_analog_request_is_permitted() {
        let d = evaluate_request(
            &parse_request(FAIRBANKS_REQ).unwrap(),
            &fixture_store(),
            &fixture_policy(),
        )
        .unwrap();
        assert_eq!(
            d.memberships,
            ["CountryLocation".to_string(), "US91Loc".to_string()].into()
        );
        assert_eq!(d.provision_results.len(), 1);
        let r = &d.provision_results[0];
        assert!(r.applicable);
        assert_eq!(r.effect, Effect::Permit);
        assert!(d
            .trace
            .steps
            .iter()
            .any(|s| s.kind == StepKind::ProvisionMatched));
    }

    #[test]
    fn arizona_analog_request_is_not_applicable() {
        let req = TransmissionRequest::new("r2", "agentX", "POINT(0.9 0.9)", None).unwrap();
        let d = evaluate_request(&req, &fixture_store(), &fixture_policy()).unwrap();
        assert_eq!(d.memberships, ["CountryLocation".to_string()].into());
        let r = &d.provision_results[0];
        assert!(!r.applicable);
        assert!(r.reasons.iter().any(|m| m.contains("not in class")));
    }

    #[test]
    fn band_mismatch_rejects_with_reason() {
        let req = TransmissionRequest::new(
            "r3",
            "agentX",
            "POINT(0.5 0.5)",
            Some(Band {
                low_mhz: 1790.0,
                high_mhz: 1800.0,
            }),
        )
        .unwrap();
        let d = evaluate_request(&req, &fixture_store(), &fixture_policy()).unwrap();
        assert_eq!(d.memberships.len(), 2);
        let r = &d.provision_results[0];
        assert!(!r.applicable);
        assert!(r.reasons.iter().any(|m| m.contains("does not overlap")));
    }

    #[test]
    fn bandless_request_cannot_match_banded_provision() {
        let req = TransmissionRequest::new("r4", "agentX", "POINT(0.5 0.5)", None).unwrap();
        let d = evaluate_request(&req, &fixture_store(), &fixture_policy()).unwrap();
        let r = &d.provision_results[0];
        assert!(!r.applicable);
        assert!(r.reasons.iter().any(|m| m.contains("declares no band")));
    }

    #[test]
    fn decision_document_is_deterministic_and_key_sorted() {
        let req = parse_request(FAIRBANKS_REQ).unwrap();
        let store = fixture_store();
        let ps = fixture_policy();
        let a = decision_document(&evaluate_request(&req, &store, &ps).unwrap());
        let b = decision_document(&evaluate_request(&req, &store, &ps).unwrap());
        assert_eq!(a, b);
        let memberships_at = a.find("\"memberships\"").unwrap();
        let relations_at = a.find("\"relations\"").unwrap();
        assert!(memberships_at < relations_at);
        assert!(a.ends_with('\n'));
    }

    #[test]
    fn explain_names_relations_and_classes() {
        let d = evaluate_request(
            &parse_request(FAIRBANKS_REQ).unwrap(),
            &fixture_store(),
            &fixture_policy(),
        )
        .unwrap();
        let text = explain(&d);
        assert!(text.contains("[relation] location is within <http://example.org/sites/FAIRBANKS>"));
        assert!(text.contains("[class] location is in class <US91Loc>"));
        assert!(text.contains("[provision] provision US91/2c is applicable"));
        assert_eq!(text, explain(&d));
    }

    #[test]
    fn trace_support_reproduces_each_entered_class() {
        let d = evaluate_request(
            &parse_request(FAIRBANKS_REQ).unwrap(),
            &fixture_store(),
            &fixture_policy(),
        )
        .unwrap();
        let ps = fixture_policy();
        for step in &d.trace.steps {
            if step.kind != StepKind::ClassEntered {
                continue;
            }
            let class = step
                .detail
                .split('<')
                .nth(1)
                .and_then(|s| s.strip_suffix('>'))
                .unwrap();
            let mut cited = LocationFacts::new(
                d.relations.location_node.clone(),
                d.relations.point,
            );
            for atom in &step.support {
                match atom {
                    SupportAtom::Within(f) => {
                        cited.within.insert(f.clone());
                    }
                    SupportAtom::Distance { feature, km, .. } => {
                        cited.distances_km.insert(feature.clone(), *km);
                    }
                }
            }
            assert!(
                crate::policy::classify(&cited, &ps).contains(class),
                "support for {class} does not reproduce it"
            );
        }
    }

    #[test]
    fn verdicts_are_consistent_with_memberships() {
        let store = fixture_store();
        let ps = fixture_policy();
        for wkt in ["POINT(0.5 0.5)", "POINT(0.9 0.9)", "POINT(50 50)", "POINT(2.5 0.5)"] {
            let req = TransmissionRequest::new(
                "r",
                "a",
                wkt,
                Some(Band {
                    low_mhz: 1770.0,
                    high_mhz: 1770.0,
                }),
            )
            .unwrap();
            let d = evaluate_request(&req, &store, &ps).unwrap();
            for r in &d.provision_results {
                if r.applicable {
                    let class = ps
                        .provisions
                        .iter()
                        .find(|p| p.key() == format!("{}/{}", r.policy_id, r.provision_id))
                        .unwrap()
                        .location_class
                        .clone();
                    assert!(d.memberships.contains(&class));
                }
            }
        }
    }
}

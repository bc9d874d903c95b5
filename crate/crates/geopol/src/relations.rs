//! Spatial relation inference for a request point: which features contain
//! it, and how far it is from distance-constrained features. The inferred
//! relations are asserted back into the request's fact set.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::geometry::{distance_point_geometry_km, sf_within_point, Point};
use crate::pipeline::TransmissionRequest;
use crate::store::FeatureStore;

#[derive(Debug, Error)]
pub enum RelationError {
    #[error("unknown feature {0}")]
    UnknownFeature(String),
    #[error("location node mismatch: request has {expected}, facts have {found}")]
    NodeMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WithinRelation {
    pub subject: String,
    pub feature: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceAttribute {
    pub subject: String,
    pub feature: String,
    pub km: f64,
}

/// Everything inferred about one location node.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationFacts {
    pub location_node: String,
    pub point: Point,
    pub within: BTreeSet<String>,
    pub distances_km: BTreeMap<String, f64>,
}

impl LocationFacts {
    pub fn new(location_node: impl Into<String>, point: Point) -> LocationFacts {
        LocationFacts {
            location_node: location_node.into(),
            point,
            within: BTreeSet::new(),
            distances_km: BTreeMap::new(),
        }
    }

    pub fn within_relations(&self) -> Vec<WithinRelation> {
        self.within
            .iter()
            .map(|f| WithinRelation {
                subject: self.location_node.clone(),
                feature: f.clone(),
            })
            .collect()
    }

    pub fn distance_attributes(&self) -> Vec<DistanceAttribute> {
        self.distances_km
            .iter()
            .map(|(f, km)| DistanceAttribute {
                subject: self.location_node.clone(),
                feature: f.clone(),
                km: *km,
            })
            .collect()
    }
}

/// Compute within-relations over the store's candidate features and
/// distances for exactly `distance_targets`.
pub fn infer_relations(
    p: Point,
    store: &FeatureStore,
    distance_targets: &BTreeSet<String>,
    location_node: &str,
) -> Result<LocationFacts, RelationError> {
    for target in distance_targets {
        if !store.contains(target) {
            return Err(RelationError::UnknownFeature(target.clone()));
        }
    }
    let mut facts = LocationFacts::new(location_node, p);
    for iri in store.candidates(p) {
        let f = store.feature(&iri).expect("candidate IRIs come from the index");
        // a point feature cannot contain anything; only polygonal targets
        // participate in within
        if f.geometry.is_polygonal()
            && sf_within_point(p, &f.geometry).expect("within over a polygonal geometry")
        {
            facts.within.insert(iri);
        }
    }
    for target in distance_targets {
        let f = store.feature(target).expect("targets checked above");
        facts
            .distances_km
            .insert(target.clone(), distance_point_geometry_km(p, &f.geometry));
    }
    Ok(facts)
}

/// Union `facts` into the request's fact set. Idempotent; fact sets only
/// grow.
pub fn apply_relations(
    request: &TransmissionRequest,
    facts: &LocationFacts,
) -> Result<TransmissionRequest, RelationError> {
    if request.facts.location_node != facts.location_node {
        return Err(RelationError::NodeMismatch {
            expected: request.facts.location_node.clone(),
            found: facts.location_node.clone(),
        });
    }
    let mut out = request.clone();
    out.facts.within.extend(facts.within.iter().cloned());
    for (k, v) in &facts.distances_km {
        out.facts.distances_km.insert(k.clone(), *v);
    }
    Ok(out)
}

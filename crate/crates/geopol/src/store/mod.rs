//! Provenance-tracked feature store, persisted as a sorted N-Triples
//! subset.
//!
//! Each feature carries `geo:Feature`/`prov:Location` typing, an
//! `rdfs:label`, a WKT geometry node, and a derivation chain back to its
//! source record and dataset entity. Ingest timestamps are injected by the
//! caller so equal inputs serialize byte-identically.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::geometry::{bbox, emit_wkt, parse_wkt, BBox, Geometry, GeometryError, Point};
use crate::shapefile::{RawDataset, ShapeType, SkipEvent};

mod ntriples;

pub use ntriples::{vocab, Object, Triple};

use ntriples::{iri_char_error, parse_line, render_object};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("duplicate feature IRI {0}")]
    DuplicateFeatureIri(String),
    #[error("invalid base IRI {iri:?}: {reason}")]
    InvalidBaseIri { iri: String, reason: String },
    #[error("invalid feature IRI {iri:?}: {reason}")]
    InvalidFeatureIri { iri: String, reason: String },
    #[error("dataset {dataset} record {record}: {source}")]
    InvalidGeometry {
        dataset: String,
        record: u32,
        source: GeometryError,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("feature {0} has no asWKT geometry")]
    MissingGeometry(String),
    #[error("feature {feature}: {detail}")]
    MissingProvenance { feature: String, detail: String },
    #[error("unknown feature {0}")]
    UnknownFeature(String),
    #[error("bad timestamp: {0}")]
    BadTimestamp(String),
}

/// An RFC 3339 instant kept verbatim, so timestamps survive store
/// round-trips byte-exactly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Timestamp(String);

impl Timestamp {
    pub fn parse(s: &str) -> Result<Timestamp, StoreError> {
        chrono::DateTime::parse_from_rfc3339(s)
            .map_err(|e| StoreError::BadTimestamp(format!("{s:?} is not RFC 3339: {e}")))?;
        Ok(Timestamp(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub iri: String,
    pub legal_name: String,
    pub geometry: Geometry,
    /// Base IRI of the dataset this feature came from.
    pub dataset: String,
    /// 1-based record number in the source .shp.
    pub source_record: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetInfo {
    pub iri: String,
    /// Source file name, shown as the dataset entity's label.
    pub label: String,
    pub activity: String,
    pub started_at: Timestamp,
    /// Records excluded during ingest, kept for provenance.
    pub skipped: Vec<SkipEvent>,
}

/// One dataset to ingest: parsed records plus the IRI namespace and source
/// label to mint features under.
#[derive(Debug, Clone)]
pub struct DatasetInput {
    pub raw: RawDataset,
    pub base_iri: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProvRecord {
    pub entity: String,
    pub derived_from: String,
    pub generated_by: String,
    pub at: Timestamp,
}

/// Derivation chain from a feature back to its source file entity.
#[derive(Debug, Clone, PartialEq)]
pub struct ProvenanceChain {
    pub records: Vec<ProvRecord>,
}

#[derive(Debug, Clone)]
pub struct FeatureStore {
    features: BTreeMap<String, Feature>,
    datasets: BTreeMap<String, DatasetInfo>,
    /// Triples read from a store file that are not part of the fixed
    /// vocabulary; preserved verbatim on re-serialization.
    annotations: BTreeSet<Triple>,
    /// Flat (bbox, IRI) list sorted by IRI. Linear scan is fine at the
    /// dataset sizes involved; an R-tree is an extension point.
    index: Vec<(BBox, String)>,
}

impl PartialEq for FeatureStore {
    fn eq(&self, other: &FeatureStore) -> bool {
        self.features == other.features
            && self.datasets == other.datasets
            && self.annotations == other.annotations
    }
}

impl FeatureStore {
    pub fn feature(&self, iri: &str) -> Option<&Feature> {
        self.features.get(iri)
    }

    pub fn contains(&self, iri: &str) -> bool {
        self.features.contains_key(iri)
    }

    /// Features in IRI order.
    pub fn features(&self) -> impl Iterator<Item = &Feature> {
        self.features.values()
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    /// Datasets in base-IRI order.
    pub fn datasets(&self) -> impl Iterator<Item = &DatasetInfo> {
        self.datasets.values()
    }

    pub fn annotations(&self) -> impl Iterator<Item = &Triple> {
        self.annotations.iter()
    }

    /// IRIs of every feature whose bounding box contains `p`, sorted. A
    /// superset of the features actually containing `p`.
    pub fn candidates(&self, p: Point) -> Vec<String> {
        self.index
            .iter()
            .filter(|(b, _)| b.contains(p))
            .map(|(_, iri)| iri.clone())
            .collect()
    }
}

fn record_entity_iri(base: &str, record: u32) -> String {
    format!("{base}#record-{record}")
}

fn activity_iri(base: &str) -> String {
    format!("{base}#etl")
}

fn geometry_node_iri(feature: &str) -> String {
    format!("{feature}/geom")
}

fn validate_base_iri(base: &str) -> Result<(), StoreError> {
    let fail = |reason: String| StoreError::InvalidBaseIri {
        iri: base.to_string(),
        reason,
    };
    if let Some(why) = iri_char_error(base) {
        return Err(fail(why));
    }
    let scheme = base.split(':').next().unwrap_or("");
    let absolute = !scheme.is_empty()
        && scheme.len() < base.len()
        && scheme.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && scheme
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "+-.".contains(c));
    if !absolute {
        return Err(fail("not an absolute IRI (no scheme)".into()));
    }
    if base.contains('#') {
        return Err(fail(
            "must not contain '#' (reserved for record and activity entities)".into(),
        ));
    }
    Ok(())
}

fn build_index(features: &BTreeMap<String, Feature>) -> Vec<(BBox, String)> {
    features
        .values()
        .map(|f| (bbox(&f.geometry), f.iri.clone()))
        .collect()
}

/// Ingest raw datasets into a store. Feature IRI = base IRI + record id;
/// each dataset gets one ETL activity stamped with `at`.
pub fn build_store(
    inputs: Vec<DatasetInput>,
    at: &Timestamp,
) -> Result<FeatureStore, StoreError> {
    let mut features: BTreeMap<String, Feature> = BTreeMap::new();
    let mut datasets: BTreeMap<String, DatasetInfo> = BTreeMap::new();
    for input in inputs {
        validate_base_iri(&input.base_iri)?;
        let base = input.base_iri;
        if datasets.contains_key(&base) {
            return Err(StoreError::InvalidBaseIri {
                iri: base,
                reason: "duplicate dataset base IRI".into(),
            });
        }
        for entry in &input.raw.entries {
            let iri = format!("{base}{}", entry.id);
            if entry.id.contains('#') {
                return Err(StoreError::InvalidFeatureIri {
                    iri,
                    reason: "feature id must not contain '#'".into(),
                });
            }
            if let Some(why) = iri_char_error(&iri) {
                return Err(StoreError::InvalidFeatureIri { iri, reason: why });
            }
            let geometry = raw_geometry(input.raw.shape_type, &entry.shape.parts).map_err(
                |source| StoreError::InvalidGeometry {
                    dataset: base.clone(),
                    record: entry.record_number,
                    source,
                },
            )?;
            let feature = Feature {
                iri: iri.clone(),
                legal_name: entry.legal_name.clone(),
                geometry,
                dataset: base.clone(),
                source_record: entry.record_number,
            };
            if features.insert(iri.clone(), feature).is_some() {
                return Err(StoreError::DuplicateFeatureIri(iri));
            }
        }
        datasets.insert(
            base.clone(),
            DatasetInfo {
                iri: base,
                label: input.label,
                activity: String::new(), // filled below from the base
                started_at: at.clone(),
                skipped: input.raw.skipped,
            },
        );
    }
    for info in datasets.values_mut() {
        info.activity = activity_iri(&info.iri);
    }
    // geometry nodes live at <feature>/geom; a feature claiming that IRI
    // would collide on serialization
    for iri in features.keys() {
        if features.contains_key(&geometry_node_iri(iri)) {
            return Err(StoreError::DuplicateFeatureIri(geometry_node_iri(iri)));
        }
    }
    let index = build_index(&features);
    Ok(FeatureStore {
        features,
        datasets,
        annotations: BTreeSet::new(),
        index,
    })
}

fn raw_geometry(
    shape_type: ShapeType,
    parts: &[Vec<(f64, f64)>],
) -> Result<Geometry, GeometryError> {
    match shape_type {
        ShapeType::Point => {
            let (lon, lat) = parts[0][0];
            Ok(Geometry::Point(Point::new(lon, lat)?))
        }
        ShapeType::Polygon => crate::geometry::polygons_from_parts(parts),
    }
}

fn structural_triples(store: &FeatureStore) -> BTreeSet<Triple> {
    let mut triples: BTreeSet<Triple> = store.annotations.clone();
    for ds in store.datasets.values() {
        triples.insert(Triple::new(
            &ds.iri,
            vocab::RDFS_LABEL,
            Object::plain(&ds.label),
        ));
        triples.insert(Triple::new(
            &ds.activity,
            vocab::PROV_STARTED_AT_TIME,
            Object::typed(ds.started_at.as_str(), vocab::XSD_DATE_TIME),
        ));
        for ev in &ds.skipped {
            let rec = record_entity_iri(&ds.iri, ev.record_number);
            triples.insert(Triple::new(
                &rec,
                vocab::PROV_WAS_DERIVED_FROM,
                Object::iri(&ds.iri),
            ));
            triples.insert(Triple::new(
                &rec,
                vocab::RDFS_COMMENT,
                Object::plain(format!("skipped: {}", ev.reason)),
            ));
        }
    }
    for f in store.features.values() {
        let geom = geometry_node_iri(&f.iri);
        let rec = record_entity_iri(&f.dataset, f.source_record);
        triples.insert(Triple::new(
            &f.iri,
            vocab::RDF_TYPE,
            Object::iri(vocab::GEO_FEATURE),
        ));
        triples.insert(Triple::new(
            &f.iri,
            vocab::RDF_TYPE,
            Object::iri(vocab::PROV_LOCATION),
        ));
        triples.insert(Triple::new(
            &f.iri,
            vocab::RDFS_LABEL,
            Object::plain(&f.legal_name),
        ));
        triples.insert(Triple::new(&f.iri, vocab::GEO_HAS_GEOMETRY, Object::iri(&geom)));
        triples.insert(Triple::new(
            &geom,
            vocab::GEO_AS_WKT,
            Object::typed(emit_wkt(&f.geometry), vocab::GEO_WKT_LITERAL),
        ));
        triples.insert(Triple::new(
            &f.iri,
            vocab::PROV_WAS_DERIVED_FROM,
            Object::iri(&rec),
        ));
        triples.insert(Triple::new(
            &rec,
            vocab::PROV_WAS_DERIVED_FROM,
            Object::iri(&f.dataset),
        ));
        triples.insert(Triple::new(
            &f.iri,
            vocab::PROV_WAS_GENERATED_BY,
            Object::iri(activity_iri(&f.dataset)),
        ));
    }
    triples
}

/// Serialize to N-Triples text, one triple per line, sorted by (subject,
/// predicate, object). Equal stores produce byte-identical text.
pub fn serialize_ntriples(store: &FeatureStore) -> String {
    let triples = structural_triples(store);
    let mut keyed: Vec<(&str, &str, String)> = triples
        .iter()
        .map(|t| {
            (
                t.subject.as_str(),
                t.predicate.as_str(),
                render_object(&t.object),
            )
        })
        .collect();
    keyed.sort();
    let mut out = String::new();
    for (s, p, o) in keyed {
        out.push_str(&format!("<{s}> <{p}> {o} .\n"));
    }
    out
}

/// Remaining (unconsumed) triples during load, indexed by subject and
/// predicate with source line numbers for error reporting.
struct TripleBag {
    by_sp: BTreeMap<(String, String), Vec<(Object, usize)>>,
}

impl TripleBag {
    fn take_matching(
        &mut self,
        s: &str,
        p: &str,
        keep: impl Fn(&Object) -> bool,
    ) -> Vec<(Object, usize)> {
        let key = (s.to_string(), p.to_string());
        let Some(list) = self.by_sp.get_mut(&key) else {
            return Vec::new();
        };
        let mut taken = Vec::new();
        list.retain(|(o, line)| {
            if keep(o) {
                taken.push((o.clone(), *line));
                false
            } else {
                true
            }
        });
        if list.is_empty() {
            self.by_sp.remove(&key);
        }
        taken
    }

    /// At most one matching triple; a second one is a syntax error.
    fn take_unique(
        &mut self,
        s: &str,
        p: &str,
        what: &str,
        keep: impl Fn(&Object) -> bool,
    ) -> Result<Option<(Object, usize)>, StoreError> {
        let mut found = self.take_matching(s, p, keep);
        if found.len() > 1 {
            return Err(StoreError::Syntax {
                line: found[1].1,
                message: format!("more than one {what} for <{s}>"),
            });
        }
        Ok(found.pop())
    }
}

fn is_iri(o: &Object) -> bool {
    matches!(o, Object::Iri(_))
}

fn is_plain(o: &Object) -> bool {
    matches!(o, Object::Literal { datatype: None, .. })
}

fn lexical(o: &Object) -> &str {
    match o {
        Object::Literal { lexical, .. } => lexical,
        Object::Iri(iri) => iri,
    }
}

/// Split a record entity IRI `{base}#record-{n}` into its parts.
fn split_record_entity(iri: &str) -> Option<(&str, u32)> {
    let (base, rest) = iri.split_once("#record-")?;
    rest.parse().ok().map(|n| (base, n))
}

/// Load a store from N-Triples text. The inverse of [`serialize_ntriples`]
/// on conforming output; unknown predicates are preserved as opaque
/// annotations.
pub fn load_ntriples(text: &str) -> Result<FeatureStore, StoreError> {
    let mut by_sp: BTreeMap<(String, String), Vec<(Object, usize)>> = BTreeMap::new();
    let mut seen: BTreeSet<Triple> = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(t) = parse_line(line, i + 1)? {
            if seen.insert(t.clone()) {
                by_sp
                    .entry((t.subject, t.predicate))
                    .or_default()
                    .push((t.object, i + 1));
            }
        }
    }
    let mut bag = TripleBag { by_sp };

    // datasets are announced by their ETL activity's start time
    let mut datasets: BTreeMap<String, DatasetInfo> = BTreeMap::new();
    let activity_subjects: Vec<String> = bag
        .by_sp
        .keys()
        .filter(|(s, p)| p == vocab::PROV_STARTED_AT_TIME && s.ends_with("#etl"))
        .map(|(s, _)| s.clone())
        .collect();
    for activity in activity_subjects {
        let base = activity[..activity.len() - "#etl".len()].to_string();
        let Some((at_obj, at_line)) = bag.take_unique(
            &activity,
            vocab::PROV_STARTED_AT_TIME,
            "prov:startedAtTime",
            |o| matches!(o, Object::Literal { datatype: Some(dt), .. } if dt == vocab::XSD_DATE_TIME),
        )?
        else {
            continue;
        };
        let started_at = Timestamp::parse(lexical(&at_obj)).map_err(|e| StoreError::Syntax {
            line: at_line,
            message: e.to_string(),
        })?;
        let label = bag
            .take_unique(&base, vocab::RDFS_LABEL, "rdfs:label", is_plain)?
            .map(|(o, _)| lexical(&o).to_string())
            .unwrap_or_default();
        datasets.insert(
            base.clone(),
            DatasetInfo {
                iri: base,
                label,
                activity,
                started_at,
                skipped: Vec::new(),
            },
        );
    }

    // features are announced by their geo:Feature typing
    let feature_iris: Vec<String> = bag
        .by_sp
        .iter()
        .filter(|((_, p), objects)| {
            p == vocab::RDF_TYPE
                && objects
                    .iter()
                    .any(|(o, _)| matches!(o, Object::Iri(iri) if iri == vocab::GEO_FEATURE))
        })
        .map(|((s, _), _)| s.clone())
        .collect();
    let mut features: BTreeMap<String, Feature> = BTreeMap::new();
    for f in feature_iris {
        bag.take_matching(&f, vocab::RDF_TYPE, |o| {
            matches!(o, Object::Iri(iri) if iri == vocab::GEO_FEATURE || iri == vocab::PROV_LOCATION)
        });
        let legal_name = bag
            .take_unique(&f, vocab::RDFS_LABEL, "rdfs:label", is_plain)?
            .map(|(o, _)| lexical(&o).to_string())
            .unwrap_or_default();
        let Some((geom_obj, _)) =
            bag.take_unique(&f, vocab::GEO_HAS_GEOMETRY, "geo:hasGeometry", is_iri)?
        else {
            return Err(StoreError::MissingGeometry(f));
        };
        let geom_node = lexical(&geom_obj).to_string();
        let Some((wkt_obj, wkt_line)) = bag.take_unique(
            &geom_node,
            vocab::GEO_AS_WKT,
            "geo:asWKT",
            |o| matches!(o, Object::Literal { datatype: Some(dt), .. } if dt == vocab::GEO_WKT_LITERAL),
        )?
        else {
            return Err(StoreError::MissingGeometry(f));
        };
        let geometry = parse_wkt(lexical(&wkt_obj)).map_err(|e| StoreError::Syntax {
            line: wkt_line,
            message: format!("bad WKT literal: {e}"),
        })?;
        let Some((rec_obj, _)) = bag.take_unique(
            &f,
            vocab::PROV_WAS_DERIVED_FROM,
            "prov:wasDerivedFrom",
            is_iri,
        )?
        else {
            return Err(StoreError::MissingProvenance {
                feature: f,
                detail: "no prov:wasDerivedFrom link".into(),
            });
        };
        let rec = lexical(&rec_obj).to_string();
        let Some((dataset, source_record)) = split_record_entity(&rec) else {
            return Err(StoreError::MissingProvenance {
                feature: f,
                detail: format!("<{rec}> is not a record entity"),
            });
        };
        let dataset = dataset.to_string();
        if !datasets.contains_key(&dataset) {
            return Err(StoreError::MissingProvenance {
                feature: f,
                detail: format!("dataset <{dataset}> has no ETL activity"),
            });
        }
        bag.take_matching(&rec, vocab::PROV_WAS_DERIVED_FROM, |o| {
            matches!(o, Object::Iri(iri) if *iri == dataset)
        });
        let Some((act_obj, _)) = bag.take_unique(
            &f,
            vocab::PROV_WAS_GENERATED_BY,
            "prov:wasGeneratedBy",
            is_iri,
        )?
        else {
            return Err(StoreError::MissingProvenance {
                feature: f,
                detail: "no prov:wasGeneratedBy link".into(),
            });
        };
        if lexical(&act_obj) != activity_iri(&dataset) {
            return Err(StoreError::MissingProvenance {
                feature: f,
                detail: format!(
                    "generated by <{}>, expected the dataset activity",
                    lexical(&act_obj)
                ),
            });
        }
        features.insert(
            f.clone(),
            Feature {
                iri: f,
                legal_name,
                geometry,
                dataset,
                source_record,
            },
        );
    }

    // skip events: comments on record entities of known datasets
    let comment_subjects: Vec<(String, String, u32)> = bag
        .by_sp
        .keys()
        .filter(|(_, p)| p == vocab::RDFS_COMMENT)
        .filter_map(|(s, _)| {
            let (base, n) = split_record_entity(s)?;
            datasets
                .contains_key(base)
                .then(|| (s.clone(), base.to_string(), n))
        })
        .collect();
    let mut skipped: BTreeMap<String, BTreeMap<u32, String>> = BTreeMap::new();
    for (rec, base, n) in comment_subjects {
        let taken = bag.take_matching(&rec, vocab::RDFS_COMMENT, |o| {
            is_plain(o) && lexical(o).starts_with("skipped: ")
        });
        if taken.is_empty() {
            continue;
        }
        let reason = lexical(&taken[0].0)["skipped: ".len()..].to_string();
        skipped.entry(base.clone()).or_default().insert(n, reason);
        bag.take_matching(&rec, vocab::PROV_WAS_DERIVED_FROM, |o| {
            matches!(o, Object::Iri(iri) if *iri == base)
        });
    }
    for (base, events) in skipped {
        if let Some(info) = datasets.get_mut(&base) {
            info.skipped = events
                .into_iter()
                .map(|(record_number, reason)| SkipEvent {
                    record_number,
                    reason,
                })
                .collect();
        }
    }

    let annotations: BTreeSet<Triple> = bag
        .by_sp
        .into_iter()
        .flat_map(|((s, p), objects)| {
            objects
                .into_iter()
                .map(move |(o, _)| Triple::new(s.clone(), p.clone(), o))
        })
        .collect();
    let index = build_index(&features);
    Ok(FeatureStore {
        features,
        datasets,
        annotations,
        index,
    })
}

/// Derivation chain for one feature: feature → source record → dataset
/// entity, with the generating activity and its timestamp on each step.
pub fn provenance_trace(
    store: &FeatureStore,
    feature_iri: &str,
) -> Result<ProvenanceChain, StoreError> {
    let f = store
        .feature(feature_iri)
        .ok_or_else(|| StoreError::UnknownFeature(feature_iri.to_string()))?;
    let info = store
        .datasets
        .get(&f.dataset)
        .ok_or_else(|| StoreError::UnknownFeature(f.dataset.clone()))?;
    let rec = record_entity_iri(&f.dataset, f.source_record);
    Ok(ProvenanceChain {
        records: vec![
            ProvRecord {
                entity: f.iri.clone(),
                derived_from: rec.clone(),
                generated_by: info.activity.clone(),
                at: info.started_at.clone(),
            },
            ProvRecord {
                entity: rec,
                derived_from: info.iri.clone(),
                generated_by: info.activity.clone(),
                at: info.started_at.clone(),
            },
        ],
    })
}

/// Free-function form of [`FeatureStore::candidates`].
pub fn candidates(store: &FeatureStore, p: Point) -> Vec<String> {
    store.candidates(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sf_within_point;
    use crate::shapefile::{fixture, load_dataset, FieldMapping, RawEntry, RawShape};

    fn ts() -> Timestamp {
        Timestamp::parse("2024-01-01T00:00:00Z").unwrap()
    }

    fn mapping(id: &str, name: &str) -> FieldMapping {
        FieldMapping {
            id_field: id.into(),
            name_field: name.into(),
        }
    }

    fn states_input() -> DatasetInput {
        DatasetInput {
            raw: load_dataset(
                &fixture("states_mini.shp"),
                &fixture("states_mini.dbf"),
                &mapping("GEOID", "NAME"),
            )
            .unwrap(),
            base_iri: "http://example.org/states/".into(),
            label: "states_mini.shp".into(),
        }
    }

    fn sites_input() -> DatasetInput {
        DatasetInput {
            raw: load_dataset(
                &fixture("sites_mini.shp"),
                &fixture("sites_mini.dbf"),
                &mapping("SITEID", "FULLNAME"),
            )
            .unwrap(),
            base_iri: "http://example.org/sites/".into(),
            label: "sites_mini.shp".into(),
        }
    }

    fn fixture_store() -> FeatureStore {
        build_store(vec![states_input(), sites_input()], &ts()).unwrap()
    }

    #[test]
    fn builds_fixture_store() {
        let store = fixture_store();
        assert_eq!(store.feature_count(), 5);
        for iri in [
            "http://example.org/states/A1",
            "http://example.org/states/B2",
            "http://example.org/states/C3",
            "http://example.org/sites/FAIRBANKS",
            "http://example.org/sites/CAMPPARKS",
        ] {
            assert!(store.contains(iri), "missing {iri}");
        }
        let a1 = store.feature("http://example.org/states/A1").unwrap();
        assert_eq!(a1.legal_name, "State A");
        assert_eq!(a1.source_record, 1);
        assert!(sf_within_point(Point { lon: 0.5, lat: 0.5 }, &a1.geometry).unwrap());
    }

    #[test]
    fn serialization_contains_vocabulary_lines() {
        let raw = RawDataset {
            shape_type: ShapeType::Point,
            entries: vec![RawEntry {
                record_number: 1,
                id: "F1".into(),
                legal_name: "Site One".into(),
                shape: RawShape {
                    record_number: 1,
                    is_null: false,
                    parts: vec![vec![(0.5, 0.5)]],
                },
            }],
            skipped: vec![],
        };
        let store = build_store(
            vec![DatasetInput {
                raw,
                base_iri: "http://example.org/sites/".into(),
                label: "sites.shp".into(),
            }],
            &ts(),
        )
        .unwrap();
        let text = serialize_ntriples(&store);
        assert!(text.contains(
            "<http://example.org/sites/F1> \
             <http://www.opengis.net/ont/geosparql#hasGeometry> \
             <http://example.org/sites/F1/geom> ."
        ));
        assert!(text.contains(
            "<http://example.org/sites/F1/geom> \
             <http://www.opengis.net/ont/geosparql#asWKT> \
             \"POINT(0.5 0.5)\"^^<http://www.opengis.net/ont/geosparql#wktLiteral> ."
        ));
    }

    #[test]
    fn empty_store_serializes_to_empty_text() {
        let store = build_store(vec![], &ts()).unwrap();
        assert_eq!(serialize_ntriples(&store), "");
    }

    #[test]
    fn serialization_is_deterministic() {
        let a = serialize_ntriples(&fixture_store());
        let b = serialize_ntriples(&fixture_store());
        assert_eq!(a, b);
    }

    #[test]
    fn load_round_trips_the_fixture_store() {
        let store = fixture_store();
        let text = serialize_ntriples(&store);
        let back = load_ntriples(&text).unwrap();
        assert_eq!(back, store);
        assert_eq!(serialize_ntriples(&back), text);
    }

    #[test]
    fn skip_events_survive_the_round_trip() {
        let input = DatasetInput {
            raw: load_dataset(
                &fixture("mixed_mini.shp"),
                &fixture("mixed_mini.dbf"),
                &mapping("GEOID", "NAME"),
            )
            .unwrap(),
            base_iri: "http://example.org/mixed/".into(),
            label: "mixed_mini.shp".into(),
        };
        let store = build_store(vec![input], &ts()).unwrap();
        let text = serialize_ntriples(&store);
        assert!(text.contains("\"skipped: null shape\""));
        assert!(text.contains("\"skipped: empty geometry\""));
        let back = load_ntriples(&text).unwrap();
        assert_eq!(back, store);
        let info = back.datasets().next().unwrap();
        assert_eq!(info.skipped.len(), 2);
        assert_eq!(info.skipped[0].record_number, 2);
    }

    #[test]
    fn unknown_predicates_are_preserved() {
        let store = fixture_store();
        let mut text = serialize_ntriples(&store);
        let extra = "<http://example.org/states/A1> <http://example.org/vocab#nickname> \"The First State\" .";
        text.push_str(extra);
        text.push('\n');
        let back = load_ntriples(&text).unwrap();
        assert_eq!(back.annotations().count(), 1);
        assert!(serialize_ntriples(&back).contains(extra));
    }

    #[test]
    fn line_without_terminal_dot_is_a_syntax_error() {
        let text = "<a:s> <a:p> <a:o>\n";
        assert!(matches!(
            load_ntriples(text),
            Err(StoreError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn feature_without_geometry_is_rejected() {
        let store = fixture_store();
        let text: String = serialize_ntriples(&store)
            .lines()
            .filter(|l| !l.contains("asWKT"))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(matches!(
            load_ntriples(&text),
            Err(StoreError::MissingGeometry(_))
        ));
    }

    #[test]
    fn feature_without_provenance_is_rejected() {
        let store = fixture_store();
        let text: String = serialize_ntriples(&store)
            .lines()
            .filter(|l| !(l.contains("wasDerivedFrom") && l.contains("/A1>")))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(matches!(
            load_ntriples(&text),
            Err(StoreError::MissingProvenance { .. })
        ));
    }

    #[test]
    fn provenance_chain_reaches_the_source_file() {
        let store = fixture_store();
        let chain = provenance_trace(&store, "http://example.org/states/A1").unwrap();
        assert_eq!(chain.records.len(), 2);
        assert_eq!(chain.records[0].entity, "http://example.org/states/A1");
        assert_eq!(
            chain.records[0].derived_from,
            "http://example.org/states/#record-1"
        );
        assert_eq!(
            chain.records[0].generated_by,
            "http://example.org/states/#etl"
        );
        assert_eq!(chain.records[1].derived_from, "http://example.org/states/");
        assert_eq!(chain.records[1].at, ts());

        assert!(matches!(
            provenance_trace(&store, "http://example.org/states/ZZ"),
            Err(StoreError::UnknownFeature(_))
        ));
    }

    #[test]
    fn provenance_survives_round_trip() {
        let store = fixture_store();
        let before = provenance_trace(&store, "http://example.org/sites/FAIRBANKS").unwrap();
        let back = load_ntriples(&serialize_ntriples(&store)).unwrap();
        let after = provenance_trace(&back, "http://example.org/sites/FAIRBANKS").unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn candidates_cover_containing_features() {
        let store = fixture_store();
        let c = store.candidates(Point { lon: 0.5, lat: 0.5 });
        assert!(c.contains(&"http://example.org/states/A1".to_string()));
        assert!(c.contains(&"http://example.org/sites/FAIRBANKS".to_string()));
        assert!(store.candidates(Point { lon: 50.0, lat: 50.0 }).is_empty());
        // sorted output
        let mut sorted = c.clone();
        sorted.sort();
        assert_eq!(c, sorted);
    }

    #[test]
    fn duplicate_feature_iri_is_rejected() {
        let mut a = states_input();
        let b = DatasetInput {
            base_iri: a.base_iri.clone(),
            ..states_input()
        };
        a.base_iri = "http://example.org/states/".into();
        assert!(matches!(
            build_store(vec![a, b], &ts()),
            Err(StoreError::InvalidBaseIri { .. })
        ));
        // same ids under one base via two entries
        let mut dup = states_input();
        let clone = dup.raw.entries[0].clone();
        dup.raw.entries.push(clone);
        assert!(matches!(
            build_store(vec![dup], &ts()),
            Err(StoreError::DuplicateFeatureIri(_))
        ));
    }

    #[test]
    fn bad_base_iris_are_rejected() {
        for bad in ["relative/path/", "http://x/a#b/", "has space:x/"] {
            let input = DatasetInput {
                base_iri: bad.into(),
                ..states_input()
            };
            assert!(
                matches!(
                    build_store(vec![input], &ts()),
                    Err(StoreError::InvalidBaseIri { .. })
                ),
                "accepted {bad:?}"
            );
        }
    }

    #[test]
    fn bad_timestamps_are_rejected() {
        assert!(matches!(
            Timestamp::parse("not-a-time"),
            Err(StoreError::BadTimestamp(_))
        ));
        assert!(matches!(
            Timestamp::parse("2024-13-40T99:00:00Z"),
            Err(StoreError::BadTimestamp(_))
        ));
        assert_eq!(ts().as_str(), "2024-01-01T00:00:00Z");
    }

    #[test]
    fn point_dataset_round_trips() {
        let input = DatasetInput {
            raw: load_dataset(
                &fixture("towers_mini.shp"),
                &fixture("towers_mini.dbf"),
                &mapping("SITEID", "FULLNAME"),
            )
            .unwrap(),
            base_iri: "http://example.org/towers/".into(),
            label: "towers_mini.shp".into(),
        };
        let store = build_store(vec![input], &ts()).unwrap();
        let back = load_ntriples(&serialize_ntriples(&store)).unwrap();
        assert_eq!(back, store);
        let twr = back.feature("http://example.org/towers/TWR1").unwrap();
        assert_eq!(twr.geometry, Geometry::Point(Point { lon: 0.5, lat: 0.5 }));
    }
}

//! Shared fixtures for unit tests: the miniature two-dataset store and
//! the policy document exercising it.

use crate::policy::{parse_policy_doc, PolicySet};
use crate::shapefile::{fixture, load_dataset, FieldMapping};
use crate::store::{build_store, DatasetInput, FeatureStore, Timestamp};

pub(crate) const STATES_BASE: &str = "http://example.org/states/";
pub(crate) const SITES_BASE: &str = "http://example.org/sites/";

pub(crate) const FIXTURE_POLICY: &str = include_str!("../fixtures/policy_mini.pol");

pub(crate) fn fixture_input(name: &str, base_iri: &str, id: &str, label_field: &str) -> DatasetInput {
    DatasetInput {
        raw: load_dataset(
            &fixture(&format!("{name}.shp")),
            &fixture(&format!("{name}.dbf")),
            &FieldMapping {
                id_field: id.into(),
                name_field: label_field.into(),
            },
        )
        .unwrap(),
        base_iri: base_iri.into(),
        label: format!("{name}.shp"),
    }
}

pub(crate) fn fixture_store() -> FeatureStore {
    build_store(
        vec![
            fixture_input("states_mini", STATES_BASE, "GEOID", "NAME"),
            fixture_input("sites_mini", SITES_BASE, "SITEID", "FULLNAME"),
        ],
        &Timestamp::parse("2024-01-01T00:00:00Z").unwrap(),
    )
    .unwrap()
}

pub(crate) fn fixture_policy() -> PolicySet {
    parse_policy_doc(FIXTURE_POLICY).unwrap()
}

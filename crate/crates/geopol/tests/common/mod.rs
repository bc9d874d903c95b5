//! Shared fixtures, oracles, and generators for the integration suites.
//!
//! Everything here is test scaffolding: independent re-derivations of the
//! library's answers (winding-number containment, brute-force fixed points)
//! plus byte-level writers so parsers can be exercised against files we
//! control completely.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use geopol::geometry::Point;
use geopol::policy::{
    parse_policy_doc, ClassDef, ClassExpr, PolicySet,
};
use geopol::relations::LocationFacts;
use geopol::shapefile::{load_dataset, FieldMapping, RawDataset, RawEntry, RawShape, ShapeType, SkipEvent};
use geopol::store::{build_store, DatasetInput, FeatureStore, Timestamp};

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn fixture_bytes(name: &str) -> Vec<u8> {
    fs::read(fixture_path(name)).unwrap_or_else(|e| panic!("read fixture {name}: {e}"))
}

pub fn fixture_text(name: &str) -> String {
    fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("read fixture {name}: {e}"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The two-dataset store every scenario test starts from, built through the
/// public ETL path rather than loaded from the frozen N-Triples golden.
pub fn fixture_store() -> FeatureStore {
    let states = load_dataset(
        &fixture_bytes("states_mini.shp"),
        &fixture_bytes("states_mini.dbf"),
        &FieldMapping {
            id_field: "GEOID".into(),
            name_field: "NAME".into(),
        },
    )
    .expect("states fixture loads");
    let sites = load_dataset(
        &fixture_bytes("sites_mini.shp"),
        &fixture_bytes("sites_mini.dbf"),
        &FieldMapping {
            id_field: "SITEID".into(),
            name_field: "FULLNAME".into(),
        },
    )
    .expect("sites fixture loads");
    build_store(
        vec![
            DatasetInput {
                raw: states,
                base_iri: "http://example.org/states/".into(),
                label: "states_mini.shp".into(),
            },
            DatasetInput {
                raw: sites,
                base_iri: "http://example.org/sites/".into(),
                label: "sites_mini.shp".into(),
            },
        ],
        &Timestamp::parse("2024-01-01T00:00:00Z").expect("fixture timestamp"),
    )
    .expect("fixture store builds")
}

pub fn fixture_policy() -> PolicySet {
    parse_policy_doc(&fixture_text("policy_mini.pol")).expect("fixture policy parses")
}

// ---------------------------------------------------------------------------
// Planar winding-number oracle. A deliberately different containment
// algorithm from the library's even-odd crossing test; on simple rings the
// two must agree everywhere off the boundary.

fn is_left(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1)
}

/// Winding number of a closed ring (`first == last`) around `p`.
/// Nonzero means inside.
pub fn winding_number(p: (f64, f64), ring: &[(f64, f64)]) -> i32 {
    let mut wn = 0i32;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.1 <= p.1 {
            if b.1 > p.1 && is_left(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b.1 <= p.1 && is_left(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Containment in a polygon given as one outer ring and zero or more holes.
pub fn oracle_point_in(p: (f64, f64), outer: &[(f64, f64)], holes: &[Vec<(f64, f64)>]) -> bool {
    winding_number(p, outer) != 0 && holes.iter().all(|h| winding_number(p, h) == 0)
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Planar distance in degrees from `p` to the nearest ring segment. Used to
/// discard sample points too close to a boundary for the oracles to be
/// meaningful.
pub fn min_boundary_distance_deg(p: (f64, f64), rings: &[&[(f64, f64)]]) -> f64 {
    rings
        .iter()
        .flat_map(|ring| ring.windows(2))
        .map(|w| point_segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------
// Random geometry. Star polygons (vertices at increasing angles around a
// center) are simple by construction, so even-odd and winding containment
// are well defined on them.

/// Closed star-shaped ring around `(cx, cy)` with radii in `[r_lo, r_hi]`
/// degrees. `clockwise` selects the vertex order.
pub fn star_ring(
    rng: &mut ChaCha8Rng,
    cx: f64,
    cy: f64,
    r_lo: f64,
    r_hi: f64,
    n: usize,
    clockwise: bool,
) -> Vec<(f64, f64)> {
    assert!(n >= 3 && r_lo > 0.0 && r_lo <= r_hi);
    let mut ring: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            // jitter keeps angles strictly increasing with a guaranteed gap
            let theta = std::f64::consts::TAU * (i as f64 + rng.gen_range(0.05..0.95)) / n as f64;
            let r = rng.gen_range(r_lo..=r_hi);
            (cx + r * theta.cos(), cy + r * theta.sin())
        })
        .collect();
    if clockwise {
        ring.reverse();
    }
    let first = ring[0];
    ring.push(first);
    ring
}

/// Outer ring plus an optional concentric hole, both closed, shapefile
/// orientation (outer clockwise, hole counter-clockwise). Hole radii stay
/// strictly below the outer minimum so nesting is guaranteed.
pub fn random_polygon_parts(rng: &mut ChaCha8Rng) -> Vec<Vec<(f64, f64)>> {
    let cx = rng.gen_range(-150.0..150.0);
    let cy = rng.gen_range(-70.0..70.0);
    let r = rng.gen_range(0.5..5.0);
    let n = rng.gen_range(3..12);
    let mut parts = vec![star_ring(rng, cx, cy, 0.5 * r, r, n, true)];
    if rng.gen_bool(0.4) {
        let hole_n = rng.gen_range(3..8);
        parts.push(star_ring(rng, cx, cy, 0.05 * r, 0.3 * r, hole_n, false));
    }
    parts
}

// ---------------------------------------------------------------------------
// Random stores, built from synthetic raw datasets through the public
// `build_store` path.

const NAME_POOL: &[&str] = &[
    "Plain Name",
    "Quoted \"Name\"",
    "Back\\slash Base",
    "Tab\tSeparated",
    "Line\nBreak Reserve",
    "Ünïcode RäNge",
];

pub fn random_store(rng: &mut ChaCha8Rng) -> FeatureStore {
    let n_datasets = rng.gen_range(1..=3);
    let mut inputs = Vec::new();
    for d in 0..n_datasets {
        let polygonal = rng.gen_bool(0.7);
        let shape_type = if polygonal {
            ShapeType::Polygon
        } else {
            ShapeType::Point
        };
        let mut entries = Vec::new();
        let mut skipped = Vec::new();
        let n_records = rng.gen_range(1..=5);
        for r in 1..=n_records {
            if rng.gen_bool(0.2) {
                let reason = ["null shape", "empty geometry", "empty id"][rng.gen_range(0..3)];
                skipped.push(SkipEvent {
                    record_number: r,
                    reason: reason.into(),
                });
                continue;
            }
            let parts = if polygonal {
                random_polygon_parts(rng)
            } else {
                vec![vec![(rng.gen_range(-170.0..170.0), rng.gen_range(-80.0..80.0))]]
            };
            entries.push(RawEntry {
                record_number: r,
                id: format!("f{r}-{}", rng.gen_range(100..1000)),
                legal_name: NAME_POOL[rng.gen_range(0..NAME_POOL.len())].to_string(),
                shape: RawShape {
                    record_number: r,
                    is_null: false,
                    parts,
                },
            });
        }
        inputs.push(DatasetInput {
            raw: RawDataset {
                shape_type,
                entries,
                skipped,
            },
            base_iri: format!("http://example.org/d{d}/"),
            label: format!("d{d}.shp"),
        });
    }
    let at = ["2024-01-01T00:00:00Z", "2023-06-15T12:30:45+02:00", "2025-12-31T23:59:59Z"]
        [rng.gen_range(0..3)];
    build_store(inputs, &Timestamp::parse(at).expect("pool timestamp"))
        .expect("random store builds")
}

// ---------------------------------------------------------------------------
// Random policy sets and the brute-force classification oracle.

/// Classes are `C0..C{n-1}`; `ClassRef` and declared superclasses only point
/// at lower indices, so every generated set is acyclic.
pub fn random_policy_set(rng: &mut ChaCha8Rng, n_classes: usize, features: &[String]) -> PolicySet {
    fn expr(rng: &mut ChaCha8Rng, depth: usize, class_idx: usize, features: &[String]) -> ClassExpr {
        if depth == 0 || rng.gen_bool(0.5) {
            let feature = features[rng.gen_range(0..features.len())].clone();
            return match rng.gen_range(0..10) {
                0..=4 => ClassExpr::Within(feature),
                5..=7 => ClassExpr::DistanceLE(feature, rng.gen_range(0.0..100.0)),
                _ if class_idx > 0 => ClassExpr::ClassRef(format!("C{}", rng.gen_range(0..class_idx))),
                _ => ClassExpr::Within(feature),
            };
        }
        let children = (0..rng.gen_range(2..=3))
            .map(|_| expr(rng, depth - 1, class_idx, features))
            .collect();
        if rng.gen_bool(0.5) {
            ClassExpr::And(children)
        } else {
            ClassExpr::Or(children)
        }
    }

    let mut classes = BTreeMap::new();
    for i in 0..n_classes {
        let iri = format!("C{i}");
        let mut declared_superclasses = BTreeSet::new();
        if i > 0 && rng.gen_bool(0.3) {
            declared_superclasses.insert(format!("C{}", rng.gen_range(0..i)));
        }
        classes.insert(
            iri.clone(),
            ClassDef {
                iri,
                equivalent_to: {
                    let depth = rng.gen_range(0..=2);
                    expr(rng, depth, i, features)
                },
                declared_superclasses,
            },
        );
    }
    PolicySet {
        classes,
        provisions: Vec::new(),
    }
}

pub fn random_facts(rng: &mut ChaCha8Rng, features: &[String]) -> LocationFacts {
    let mut facts = LocationFacts::new("urn:test:location", Point::new(0.0, 0.0).expect("origin"));
    for f in features {
        if rng.gen_bool(0.5) {
            facts.within.insert(f.clone());
        }
        if rng.gen_bool(0.6) {
            facts.distances_km.insert(f.clone(), rng.gen_range(0.0..120.0));
        }
    }
    facts
}

/// Total evaluation, the semantics `classify` uses: a missing distance fact
/// makes that atom false instead of erroring the whole expression.
fn eval_total(e: &ClassExpr, facts: &LocationFacts, memberships: &BTreeSet<String>) -> bool {
    match e {
        ClassExpr::Within(f) => facts.within.contains(f),
        ClassExpr::DistanceLE(f, t) => {
            facts.distances_km.get(f).is_some_and(|d| d <= t)
        }
        ClassExpr::ClassRef(c) => memberships.contains(c),
        ClassExpr::And(es) => es.iter().all(|e| eval_total(e, facts, memberships)),
        ClassExpr::Or(es) => es.iter().any(|e| eval_total(e, facts, memberships)),
    }
}

/// Brute-force least fixed point: enumerate all `2^n` candidate membership
/// sets, keep the closed ones (every satisfied definition and every declared
/// superclass already present), and intersect them. For a monotone operator
/// that intersection is the least fixed point.
pub fn classify_oracle(facts: &LocationFacts, ps: &PolicySet) -> BTreeSet<String> {
    let names: Vec<&String> = ps.classes.keys().collect();
    let n = names.len();
    assert!(n <= 16, "oracle enumerates 2^n sets");
    let mut least: Option<BTreeSet<String>> = None;
    for mask in 0u32..(1 << n) {
        let set: BTreeSet<String> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| names[i].clone())
            .collect();
        let closed = ps.classes.values().all(|def| {
            let must_hold = eval_total(&def.equivalent_to, facts, &set);
            let def_ok = !must_hold || set.contains(&def.iri);
            let supers_ok = !set.contains(&def.iri)
                || def.declared_superclasses.iter().all(|s| set.contains(s));
            def_ok && supers_ok
        });
        if closed {
            least = Some(match least {
                None => set,
                Some(acc) => acc.intersection(&set).cloned().collect(),
            });
        }
    }
    least.expect("the full set is always closed")
}

// ---------------------------------------------------------------------------
// Test-only .shp writer, the mirror image of the parser. Round-tripping
// generated files through `parse_shp` checks both directions at once.

pub enum ShpRec {
    Null,
    Point(f64, f64),
    /// Closed rings; offsets and counts are derived.
    Polygon(Vec<Vec<(f64, f64)>>),
}

pub fn write_shp(shape_type: i32, records: &[ShpRec]) -> Vec<u8> {
    fn put_i32_be(out: &mut Vec<u8>, v: i32) {
        out.extend_from_slice(&v.to_be_bytes());
    }
    fn put_i32_le(out: &mut Vec<u8>, v: i32) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fn put_f64_le(out: &mut Vec<u8>, v: f64) {
        out.extend_from_slice(&v.to_le_bytes());
    }

    let mut body = Vec::new();
    let mut bbox = [f64::MAX, f64::MAX, f64::MIN, f64::MIN];
    let mut saw_point = false;
    for (i, rec) in records.iter().enumerate() {
        let mut content = Vec::new();
        match rec {
            ShpRec::Null => put_i32_le(&mut content, 0),
            ShpRec::Point(x, y) => {
                put_i32_le(&mut content, 1);
                put_f64_le(&mut content, *x);
                put_f64_le(&mut content, *y);
                saw_point = true;
                bbox = grow(bbox, (*x, *y));
            }
            ShpRec::Polygon(parts) => {
                put_i32_le(&mut content, 5);
                let mut rec_box = [f64::MAX, f64::MAX, f64::MIN, f64::MIN];
                for p in parts.iter().flatten() {
                    rec_box = grow(rec_box, *p);
                    bbox = grow(bbox, *p);
                    saw_point = true;
                }
                for v in rec_box {
                    put_f64_le(&mut content, v);
                }
                put_i32_le(&mut content, parts.len() as i32);
                let total: usize = parts.iter().map(Vec::len).sum();
                put_i32_le(&mut content, total as i32);
                let mut offset = 0i32;
                for part in parts {
                    put_i32_le(&mut content, offset);
                    offset += part.len() as i32;
                }
                for (x, y) in parts.iter().flatten() {
                    put_f64_le(&mut content, *x);
                    put_f64_le(&mut content, *y);
                }
            }
        }
        put_i32_be(&mut body, i as i32 + 1);
        put_i32_be(&mut body, (content.len() / 2) as i32);
        body.extend_from_slice(&content);
    }

    if !saw_point {
        bbox = [0.0; 4];
    }
    let mut out = Vec::new();
    put_i32_be(&mut out, 9994);
    out.extend_from_slice(&[0u8; 20]);
    put_i32_be(&mut out, ((100 + body.len()) / 2) as i32);
    put_i32_le(&mut out, 1000);
    put_i32_le(&mut out, shape_type);
    for v in bbox {
        put_f64_le(&mut out, v);
    }
    out.extend_from_slice(&[0u8; 32]);
    out.extend_from_slice(&body);
    out
}

fn grow(b: [f64; 4], p: (f64, f64)) -> [f64; 4] {
    [b[0].min(p.0), b[1].min(p.1), b[2].max(p.0), b[3].max(p.1)]
}

// ---------------------------------------------------------------------------
// Byte and text mutators for the robustness suites.

/// Flip, delete, or splice a few bytes. The result may still be valid; the
/// parsers just must classify it without panicking.
pub fn mutate(bytes: &[u8], seed: u64) -> Vec<u8> {
    let mut r = rng(seed);
    let mut out = bytes.to_vec();
    for _ in 0..r.gen_range(1..=4) {
        if out.is_empty() {
            break;
        }
        let i = r.gen_range(0..out.len());
        match r.gen_range(0..3) {
            0 => out[i] ^= 1 << r.gen_range(0..8),
            1 => {
                out.remove(i);
            }
            _ => out.insert(i, r.gen()),
        }
    }
    out
}

pub fn mutate_text(text: &str, seed: u64) -> String {
    // mutate bytes, then re-validate UTF-8 lossily so text parsers see text
    String::from_utf8_lossy(&mutate(text.as_bytes(), seed)).into_owned()
}

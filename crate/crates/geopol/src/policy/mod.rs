//! Policy location classes and provisions.
//!
//! Classes are negation-free expressions over spatial facts: feature
//! containment, distance thresholds, references to other classes, and
//! and/or combinations. Classification runs the expressions to a least
//! fixed point, so membership is monotone in the facts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::relations::LocationFacts;
use crate::store::FeatureStore;

mod parser;

pub use parser::parse_policy_doc;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("cyclic class definition: {0}")]
    CyclicDefinition(String),
    #[error("class {class} references undeclared class {referenced}")]
    DanglingClassRef { class: String, referenced: String },
    #[error("provision {provision} targets undeclared class {class}")]
    DanglingProvisionClass { provision: String, class: String },
    #[error("duplicate class {0}")]
    DuplicateClass(String),
    #[error("duplicate provision {0}")]
    DuplicateProvision(String),
    #[error("no distance fact for feature {0}")]
    MissingDistanceFact(String),
}

impl PolicyError {
    /// Stable machine-readable code, used in validation reports.
    pub fn code(&self) -> &'static str {
        match self {
            PolicyError::Syntax { .. } => "SyntaxError",
            PolicyError::CyclicDefinition(_) => "CyclicDefinition",
            PolicyError::DanglingClassRef { .. } => "DanglingClassRef",
            PolicyError::DanglingProvisionClass { .. } => "DanglingProvisionClass",
            PolicyError::DuplicateClass(_) => "DuplicateClass",
            PolicyError::DuplicateProvision(_) => "DuplicateProvision",
            PolicyError::MissingDistanceFact(_) => "MissingDistanceFact",
        }
    }
}

/// Negation-free location class expression.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassExpr {
    Within(String),
    DistanceLE(String, f64),
    ClassRef(String),
    And(Vec<ClassExpr>),
    Or(Vec<ClassExpr>),
}

impl ClassExpr {
    /// Feature IRIs under DistanceLE, recursively.
    fn collect_distance_features(&self, out: &mut BTreeSet<String>) {
        match self {
            ClassExpr::DistanceLE(f, _) => {
                out.insert(f.clone());
            }
            ClassExpr::And(es) | ClassExpr::Or(es) => {
                for e in es {
                    e.collect_distance_features(out);
                }
            }
            ClassExpr::Within(_) | ClassExpr::ClassRef(_) => {}
        }
    }

    fn collect_within_features(&self, out: &mut BTreeSet<String>) {
        match self {
            ClassExpr::Within(f) => {
                out.insert(f.clone());
            }
            ClassExpr::And(es) | ClassExpr::Or(es) => {
                for e in es {
                    e.collect_within_features(out);
                }
            }
            ClassExpr::DistanceLE(..) | ClassExpr::ClassRef(_) => {}
        }
    }

    fn collect_class_refs(&self, out: &mut BTreeSet<String>) {
        match self {
            ClassExpr::ClassRef(c) => {
                out.insert(c.clone());
            }
            ClassExpr::And(es) | ClassExpr::Or(es) => {
                for e in es {
                    e.collect_class_refs(out);
                }
            }
            ClassExpr::Within(_) | ClassExpr::DistanceLE(..) => {}
        }
    }
}

impl fmt::Display for ClassExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassExpr::Within(iri) => write!(f, "within <{iri}>"),
            ClassExpr::DistanceLE(iri, km) => write!(f, "distance <{iri}> <= {km} km"),
            ClassExpr::ClassRef(iri) => write!(f, "ref <{iri}>"),
            ClassExpr::And(es) => {
                let parts: Vec<String> = es.iter().map(|e| format!("({e})")).collect();
                write!(f, "{}", parts.join(" and "))
            }
            ClassExpr::Or(es) => {
                let parts: Vec<String> = es.iter().map(|e| format!("({e})")).collect();
                write!(f, "{}", parts.join(" or "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDef {
    pub iri: String,
    pub equivalent_to: ClassExpr,
    pub declared_superclasses: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effect {
    Permit,
    Deny,
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Effect::Permit => "permit",
            Effect::Deny => "deny",
        })
    }
}

/// Closed frequency interval in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub low_mhz: f64,
    pub high_mhz: f64,
}

impl Band {
    pub fn overlaps(&self, other: &Band) -> bool {
        self.low_mhz <= other.high_mhz && other.low_mhz <= self.high_mhz
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{} MHz", self.low_mhz, self.high_mhz)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provision {
    pub id: String,
    pub policy_id: String,
    pub location_class: String,
    pub band: Option<Band>,
    pub effect: Effect,
    pub obligation: Option<String>,
}

impl Provision {
    /// `policy/provision` key used in reports and decisions.
    pub fn key(&self) -> String {
        format!("{}/{}", self.policy_id, self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolicySet {
    pub classes: BTreeMap<String, ClassDef>,
    pub provisions: Vec<Provision>,
}

impl PolicySet {
    /// Features referenced by DistanceLE constraints anywhere in the set;
    /// the pipeline computes distances for exactly these.
    pub fn distance_targets(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for def in self.classes.values() {
            def.equivalent_to.collect_distance_features(&mut out);
        }
        out
    }

    fn within_features(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for def in self.classes.values() {
            def.equivalent_to.collect_within_features(&mut out);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueCode {
    CyclicDefinition,
    DanglingClassRef,
    DanglingProvisionClass,
    DuplicateProvision,
    UnknownWithinFeature,
    UnknownDistanceFeature,
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            IssueCode::CyclicDefinition => "CyclicDefinition",
            IssueCode::DanglingClassRef => "DanglingClassRef",
            IssueCode::DanglingProvisionClass => "DanglingProvisionClass",
            IssueCode::DuplicateProvision => "DuplicateProvision",
            IssueCode::UnknownWithinFeature => "UnknownWithinFeature",
            IssueCode::UnknownDistanceFeature => "UnknownDistanceFeature",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub code: IssueCode,
    pub message: String,
}

/// Validation outcome: errors make the set unusable for evaluation,
/// warnings do not.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn has_errors(&self) -> bool {
        !self.errors.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.errors {
            writeln!(f, "error: {}: {}", issue.code, issue.message)?;
        }
        for issue in &self.warnings {
            writeln!(f, "warning: {}: {}", issue.code, issue.message)?;
        }
        if self.errors.is_empty() && self.warnings.is_empty() {
            writeln!(f, "ok: no issues")?;
        }
        Ok(())
    }
}

/// Depth-first cycle search over ClassRef edges. Returns a rendered cycle
/// path like `A -> B -> A` if one exists.
fn find_cycle(classes: &BTreeMap<String, ClassDef>) -> Option<String> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        InProgress,
        Done,
    }
    fn visit(
        c: &str,
        classes: &BTreeMap<String, ClassDef>,
        marks: &mut BTreeMap<String, Mark>,
        path: &mut Vec<String>,
    ) -> Option<String> {
        match marks.get(c) {
            Some(Mark::Done) => return None,
            Some(Mark::InProgress) => {
                let start = path.iter().position(|p| p == c).unwrap_or(0);
                let mut cycle: Vec<&str> = path[start..].iter().map(String::as_str).collect();
                cycle.push(c);
                return Some(cycle.join(" -> "));
            }
            None => {}
        }
        marks.insert(c.to_string(), Mark::InProgress);
        path.push(c.to_string());
        if let Some(def) = classes.get(c) {
            let mut refs = BTreeSet::new();
            def.equivalent_to.collect_class_refs(&mut refs);
            for r in refs {
                if let Some(found) = visit(&r, classes, marks, path) {
                    return Some(found);
                }
            }
        }
        path.pop();
        marks.insert(c.to_string(), Mark::Done);
        None
    }
    let mut marks = BTreeMap::new();
    for c in classes.keys() {
        let mut path = Vec::new();
        if let Some(found) = visit(c, classes, &mut marks, &mut path) {
            return Some(found);
        }
    }
    None
}

/// (class, referenced) pairs where the reference or declared superclass
/// names no declared class.
fn dangling_class_refs(ps: &PolicySet) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for def in ps.classes.values() {
        let mut refs = BTreeSet::new();
        def.equivalent_to.collect_class_refs(&mut refs);
        refs.extend(def.declared_superclasses.iter().cloned());
        for r in refs {
            if !ps.classes.contains_key(&r) {
                out.push((def.iri.clone(), r));
            }
        }
    }
    out
}

/// (provision key, class) pairs where the target class is undeclared.
fn dangling_provision_classes(ps: &PolicySet) -> Vec<(String, String)> {
    ps.provisions
        .iter()
        .filter(|p| !ps.classes.contains_key(&p.location_class))
        .map(|p| (p.key(), p.location_class.clone()))
        .collect()
}

fn duplicate_provision_keys(ps: &PolicySet) -> Vec<String> {
    let mut seen = BTreeSet::new();
    ps.provisions
        .iter()
        .map(Provision::key)
        .filter(|k| !seen.insert(k.clone()))
        .collect()
}

/// First store-independent defect, as a typed error. The parser rejects
/// documents through this.
pub(crate) fn first_structural_error(ps: &PolicySet) -> Option<PolicyError> {
    if let Some(cycle) = find_cycle(&ps.classes) {
        return Some(PolicyError::CyclicDefinition(cycle));
    }
    if let Some((class, referenced)) = dangling_class_refs(ps).into_iter().next() {
        return Some(PolicyError::DanglingClassRef { class, referenced });
    }
    if let Some(key) = duplicate_provision_keys(ps).into_iter().next() {
        return Some(PolicyError::DuplicateProvision(key));
    }
    if let Some((provision, class)) = dangling_provision_classes(ps).into_iter().next() {
        return Some(PolicyError::DanglingProvisionClass { provision, class });
    }
    None
}

/// Structural checks that need no store: cycles, dangling references,
/// duplicate provisions.
pub(crate) fn structural_issues(ps: &PolicySet) -> Vec<Issue> {
    let mut issues = Vec::new();
    if let Some(cycle) = find_cycle(&ps.classes) {
        issues.push(Issue {
            code: IssueCode::CyclicDefinition,
            message: cycle,
        });
    }
    for (class, referenced) in dangling_class_refs(ps) {
        issues.push(Issue {
            code: IssueCode::DanglingClassRef,
            message: format!("class <{class}> references undeclared class <{referenced}>"),
        });
    }
    for key in duplicate_provision_keys(ps) {
        issues.push(Issue {
            code: IssueCode::DuplicateProvision,
            message: format!("provision {key} declared twice"),
        });
    }
    for (provision, class) in dangling_provision_classes(ps) {
        issues.push(Issue {
            code: IssueCode::DanglingProvisionClass,
            message: format!("provision {provision} targets undeclared class <{class}>"),
        });
    }
    issues
}

/// Check a policy set against a store. Within over an absent feature is a
/// warning (it evaluates false; data may load later); DistanceLE over an
/// absent feature is an error, because evaluation cannot compute the
/// distance at all.
pub fn validate_policy_set(ps: &PolicySet, store: &FeatureStore) -> ValidationReport {
    let mut report = ValidationReport {
        errors: structural_issues(ps),
        warnings: Vec::new(),
    };
    for f in ps.within_features() {
        if !store.contains(&f) {
            report.warnings.push(Issue {
                code: IssueCode::UnknownWithinFeature,
                message: format!("within target <{f}> is not in the store"),
            });
        }
    }
    for f in ps.distance_targets() {
        if !store.contains(&f) {
            report.errors.push(Issue {
                code: IssueCode::UnknownDistanceFeature,
                message: format!("distance target <{f}> is not in the store"),
            });
        }
    }
    report
}

/// One spatial fact cited as evidence for a class membership.
#[derive(Debug, Clone, PartialEq)]
pub enum SupportAtom {
    Within(String),
    Distance {
        feature: String,
        km: f64,
        threshold_km: f64,
    },
}

impl fmt::Display for SupportAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupportAtom::Within(iri) => write!(f, "within <{iri}>"),
            SupportAtom::Distance {
                feature,
                km,
                threshold_km,
            } => write!(f, "distance to <{feature}> is {km:.6} km <= {threshold_km} km"),
        }
    }
}

/// Evaluate an expression strictly: a DistanceLE over a feature with no
/// computed distance is an error, signalling a misconfigured pipeline.
pub fn eval_class_expr(
    e: &ClassExpr,
    facts: &LocationFacts,
    memberships: &BTreeSet<String>,
) -> Result<bool, PolicyError> {
    match e {
        ClassExpr::Within(f) => Ok(facts.within.contains(f)),
        ClassExpr::DistanceLE(f, t) => match facts.distances_km.get(f) {
            Some(km) => Ok(km <= t),
            None => Err(PolicyError::MissingDistanceFact(f.clone())),
        },
        ClassExpr::ClassRef(c) => Ok(memberships.contains(c)),
        ClassExpr::And(es) => {
            for e in es {
                if !eval_class_expr(e, facts, memberships)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        ClassExpr::Or(es) => {
            for e in es {
                if eval_class_expr(e, facts, memberships)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

/// Evidence for a true expression: the relation atoms of the branch that
/// fired, with class references expanded to the cited class's own
/// evidence. `None` means the expression is false. A missing distance fact
/// counts as false, keeping classification total and monotone.
fn support_for(
    e: &ClassExpr,
    facts: &LocationFacts,
    memberships: &BTreeSet<String>,
    support: &BTreeMap<String, Vec<SupportAtom>>,
) -> Option<Vec<SupportAtom>> {
    match e {
        ClassExpr::Within(f) => facts
            .within
            .contains(f)
            .then(|| vec![SupportAtom::Within(f.clone())]),
        ClassExpr::DistanceLE(f, t) => {
            let km = *facts.distances_km.get(f)?;
            (km <= *t).then(|| {
                vec![SupportAtom::Distance {
                    feature: f.clone(),
                    km,
                    threshold_km: *t,
                }]
            })
        }
        ClassExpr::ClassRef(c) => memberships
            .contains(c)
            .then(|| support.get(c).cloned().unwrap_or_default()),
        ClassExpr::And(es) => {
            let mut atoms = Vec::new();
            for e in es {
                atoms.extend(support_for(e, facts, memberships, support)?);
            }
            Some(atoms)
        }
        ClassExpr::Or(es) => es
            .iter()
            .find_map(|e| support_for(e, facts, memberships, support)),
    }
}

/// Classification result with the evidence per class and the number of
/// passes that grew the membership set. The final pass that merely
/// confirms stability is not counted, so `iterations <= |classes|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub memberships: BTreeSet<String>,
    pub support: BTreeMap<String, Vec<SupportAtom>>,
    pub iterations: usize,
}

/// Least fixed point with evidence: start empty, add every class whose
/// expression holds under the current memberships, close over declared
/// superclasses, repeat until stable. Converges in at most `|classes|`
/// iterations because memberships only grow.
pub fn classify_with_support(facts: &LocationFacts, ps: &PolicySet) -> Classification {
    let mut memberships: BTreeSet<String> = BTreeSet::new();
    let mut support: BTreeMap<String, Vec<SupportAtom>> = BTreeMap::new();
    let mut iterations = 0;
    loop {
        let mut changed = false;
        for def in ps.classes.values() {
            if memberships.contains(&def.iri) {
                continue;
            }
            if let Some(atoms) = support_for(&def.equivalent_to, facts, &memberships, &support) {
                memberships.insert(def.iri.clone());
                support.insert(def.iri.clone(), atoms);
                changed = true;
            }
        }
        // close over declared superclasses; evidence flows up unchanged
        let mut worklist: Vec<String> = memberships.iter().cloned().collect();
        while let Some(c) = worklist.pop() {
            let supers = match ps.classes.get(&c) {
                Some(def) => def.declared_superclasses.clone(),
                None => continue,
            };
            for s in supers {
                if !memberships.contains(&s) {
                    let atoms = support.get(&c).cloned().unwrap_or_default();
                    memberships.insert(s.clone());
                    support.insert(s.clone(), atoms);
                    worklist.push(s);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
        iterations += 1;
    }
    Classification {
        memberships,
        support,
        iterations,
    }
}

/// Membership set only; see [`classify_with_support`].
pub fn classify(facts: &LocationFacts, ps: &PolicySet) -> BTreeSet<String> {
    classify_with_support(facts, ps).memberships
}

//! The i40c Administrative Shell vocabulary, the IEC CDD skeleton, predicate
//! canonicalization, validation rules, multilingual labels and shell
//! descriptors.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use chrono::NaiveDate;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::graph::Graph;
use crate::query::{PatternTerm, QueryAst, QueryForm, TriplePattern};
use crate::term::{ns, Iri, Term, Triple};
use crate::turtle::parse_turtle;

/// The built-in vocabulary document.
pub const VOCABULARY_TTL: &str = include_str!("../vocab/i40c.ttl");

/// Variant spellings found in published shell data, and their canonical IRIs.
pub const PREDICATE_ALIASES: &[(&str, &str)] = &[
    (
        "http://purl.org/eis/i40c/hasTechFuncionality",
        "http://purl.org/eis/i40c/hasTechnicalFunctionality",
    ),
    (
        "http://purl.org/eis/i40c/hasTechnicalFuncionality",
        "http://purl.org/eis/i40c/hasTechnicalFunctionality",
    ),
    (
        "http://purl.org/eis/i40c/BrakingResistance",
        "http://purl.org/eis/i40c/brakingResistance",
    ),
    (
        "http://purl.org/eis/i40c/Outputfrequency",
        "http://purl.org/eis/i40c/outputFrequency",
    ),
];

/// Properties accepted on typed nodes without being declared by the vocabulary.
const ANNOTATION_PROPERTIES: &[&str] = &[
    ns::RDF_TYPE,
    ns::RDFS_LABEL,
    ns::RDFS_COMMENT,
    "http://www.w3.org/2000/01/rdf-schema#seeAlso",
    "http://purl.org/dc/terms/identifier",
    "http://www.w3.org/2004/02/skos/core#closeMatch",
];

const RDF_PROPERTY: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#Property";
const RDFS_DOMAIN: &str = "http://www.w3.org/2000/01/rdf-schema#domain";
const RDFS_RANGE: &str = "http://www.w3.org/2000/01/rdf-schema#range";
const RDFS_LITERAL: &str = "http://www.w3.org/2000/01/rdf-schema#Literal";
const OWL_ONTOLOGY: &str = "http://www.w3.org/2002/07/owl#Ontology";
const OWL_VERSION_INFO: &str = "http://www.w3.org/2002/07/owl#versionInfo";
const SKOS_CLOSE_MATCH: &str = "http://www.w3.org/2004/02/skos/core#closeMatch";
const DCTERMS_IDENTIFIER: &str = "http://purl.org/dc/terms/identifier";

pub(crate) fn i40c(local: &str) -> Term {
    Term::named(&format!("{}{local}", ns::I40C))
}

/// Returns the i40c vocabulary and IEC skeleton as a graph.
pub fn builtin_vocabulary() -> Graph {
    parse_turtle(VOCABULARY_TTL).expect("embedded vocabulary is valid Turtle")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabError {
    #[error("subclass hierarchy has a cycle through {0}")]
    Cycle(Iri),
    #[error("property {property} has undeclared {position} {class}")]
    UndeclaredClass {
        property: Iri,
        position: &'static str,
        class: Iri,
    },
    #[error("property {0} lacks a domain or range")]
    IncompleteProperty(Iri),
    #[error("vocabulary has no ontology node with a version")]
    MissingVersion,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PropertyDef {
    pub iri: Iri,
    pub domain: Iri,
    /// A declared class or a datatype IRI.
    pub range: Iri,
}

/// Immutable, checked view of a vocabulary graph.
#[derive(Debug, Clone)]
pub struct VocabularyDefinition {
    pub version: String,
    pub classes: BTreeSet<Iri>,
    pub properties: BTreeMap<Iri, PropertyDef>,
    pub subclass_edges: BTreeSet<(Iri, Iri)>,
    pub labels: BTreeMap<(Iri, String), String>,
    graph: Graph,
}

fn is_standard_datatype(iri: &Iri) -> bool {
    iri.as_str().starts_with(ns::XSD)
        || iri.as_str() == ns::RDF_LANG_STRING
        || iri.as_str() == RDFS_LITERAL
}

impl VocabularyDefinition {
    /// The built-in vocabulary, constructed once.
    pub fn builtin() -> &'static VocabularyDefinition {
        static BUILTIN: OnceLock<VocabularyDefinition> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            VocabularyDefinition::from_graph(builtin_vocabulary())
                .expect("embedded vocabulary is consistent")
        })
    }

    pub fn from_graph(graph: Graph) -> Result<Self, VocabError> {
        let rdf_type = Term::named(ns::RDF_TYPE);
        let iris = |it: Box<dyn Iterator<Item = &Term> + '_>| -> Vec<Iri> {
            it.filter_map(|t| t.as_iri().cloned()).collect()
        };

        let classes: BTreeSet<Iri> = iris(Box::new(
            graph.subjects(&rdf_type, &Term::named(ns::RDFS_CLASS)),
        ))
        .into_iter()
        .collect();

        let subclass_edges: BTreeSet<(Iri, Iri)> = graph
            .match_pattern(None, Some(&Term::named(ns::RDFS_SUBCLASS_OF)), None)
            .filter_map(|t| Some((t.subject().as_iri()?.clone(), t.object().as_iri()?.clone())))
            .collect();

        let mut properties = BTreeMap::new();
        for p in iris(Box::new(
            graph.subjects(&rdf_type, &Term::named(RDF_PROPERTY)),
        )) {
            let subject = Term::Iri(p.clone());
            let first = |pred: &str| {
                graph
                    .objects(&subject, &Term::named(pred))
                    .find_map(|t| t.as_iri().cloned())
            };
            let (Some(domain), Some(range)) = (first(RDFS_DOMAIN), first(RDFS_RANGE)) else {
                return Err(VocabError::IncompleteProperty(p));
            };
            if !classes.contains(&domain) {
                return Err(VocabError::UndeclaredClass {
                    property: p,
                    position: "domain",
                    class: domain,
                });
            }
            if !classes.contains(&range) && !is_standard_datatype(&range) {
                return Err(VocabError::UndeclaredClass {
                    property: p,
                    position: "range",
                    class: range,
                });
            }
            properties.insert(
                p.clone(),
                PropertyDef {
                    iri: p,
                    domain,
                    range,
                },
            );
        }

        let mut labels = BTreeMap::new();
        for t in graph.match_pattern(None, Some(&Term::named(ns::RDFS_LABEL)), None) {
            if let (Some(s), Some(l)) = (t.subject().as_iri(), t.object().as_literal()) {
                labels.insert(
                    (s.clone(), l.language().unwrap_or_default().to_owned()),
                    l.lexical().to_owned(),
                );
            }
        }

        let version = graph
            .subjects(&rdf_type, &Term::named(OWL_ONTOLOGY))
            .flat_map(|o| graph.objects(o, &Term::named(OWL_VERSION_INFO)))
            .find_map(|v| v.as_literal().map(|l| l.lexical().to_owned()))
            .ok_or(VocabError::MissingVersion)?;

        let vocab = Self {
            version,
            classes,
            properties,
            subclass_edges,
            labels,
            graph,
        };
        if let Some(node) = vocab.find_cycle() {
            return Err(VocabError::Cycle(node));
        }
        Ok(vocab)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    fn find_cycle(&self) -> Option<Iri> {
        let mut children: BTreeMap<&Iri, Vec<&Iri>> = BTreeMap::new();
        for (sub, sup) in &self.subclass_edges {
            children.entry(sub).or_default().push(sup);
        }
        // Kahn's algorithm over the subclass edges.
        let mut indegree: BTreeMap<&Iri, usize> = BTreeMap::new();
        for (sub, sup) in &self.subclass_edges {
            indegree.entry(sub).or_default();
            *indegree.entry(sup).or_default() += 1;
        }
        let mut queue: VecDeque<&Iri> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(n, _)| *n)
            .collect();
        let mut visited = 0;
        while let Some(n) = queue.pop_front() {
            visited += 1;
            for next in children.get(n).into_iter().flatten() {
                let d = indegree.get_mut(next).expect("edge target is indexed");
                *d -= 1;
                if *d == 0 {
                    queue.push_back(next);
                }
            }
        }
        (visited < indegree.len()).then(|| {
            indegree
                .into_iter()
                .find(|(_, d)| *d > 0)
                .map(|(n, _)| n.clone())
                .expect("an unvisited node remains")
        })
    }

    /// `class` and all of its superclasses.
    pub fn superclasses(&self, class: &Iri) -> BTreeSet<Iri> {
        superclasses(&self.subclass_edges, class)
    }

    pub fn is_subclass_of(&self, sub: &Iri, sup: &Iri) -> bool {
        self.superclasses(sub).contains(sup)
    }

    /// Declared property or one of the standard annotation properties.
    pub fn knows_property(&self, p: &Iri) -> bool {
        self.properties.contains_key(p) || ANNOTATION_PROPERTIES.contains(&p.as_str())
    }

    pub fn label(&self, class: &Iri, lang: &str) -> Option<&str> {
        self.labels
            .get(&(class.clone(), lang.to_ascii_lowercase()))
            .map(String::as_str)
    }
}

fn superclasses(edges: &BTreeSet<(Iri, Iri)>, class: &Iri) -> BTreeSet<Iri> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![class.clone()];
    while let Some(c) = stack.pop() {
        if !seen.insert(c.clone()) {
            continue;
        }
        stack.extend(
            edges
                .iter()
                .filter(|(sub, _)| *sub == c)
                .map(|(_, sup)| sup.clone()),
        );
    }
    seen
}

/// Class membership using `rdf:type` plus `rdfs:subClassOf` from both the
/// vocabulary and the data graph.
struct TypeIndex<'a> {
    graph: &'a Graph,
    edges: BTreeSet<(Iri, Iri)>,
}

impl<'a> TypeIndex<'a> {
    fn new(graph: &'a Graph, vocab: &VocabularyDefinition) -> Self {
        let mut edges = vocab.subclass_edges.clone();
        edges.extend(
            graph
                .match_pattern(None, Some(&Term::named(ns::RDFS_SUBCLASS_OF)), None)
                .filter_map(|t| {
                    Some((t.subject().as_iri()?.clone(), t.object().as_iri()?.clone()))
                }),
        );
        Self { graph, edges }
    }

    fn is_a(&self, node: &Term, class: &Iri) -> bool {
        self.graph
            .objects(node, &Term::named(ns::RDF_TYPE))
            .filter_map(Term::as_iri)
            .any(|t| superclasses(&self.edges, t).contains(class))
    }

    fn instances(&self, class: &Iri) -> BTreeSet<Term> {
        self.graph
            .match_pattern(None, Some(&Term::named(ns::RDF_TYPE)), None)
            .filter(|t| {
                t.object()
                    .as_iri()
                    .is_some_and(|c| superclasses(&self.edges, c).contains(class))
            })
            .map(|t| t.subject().clone())
            .collect()
    }
}

/// One predicate rewritten by [`canonicalize`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rewrite {
    pub subject: Term,
    pub from: Iri,
    pub to: Iri,
    pub object: Term,
}

impl fmt::Display for Rewrite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} -> {}", self.subject, self.from, self.to)
    }
}

pub fn canonical_predicate(p: &Iri) -> Option<Iri> {
    PREDICATE_ALIASES
        .iter()
        .find(|(alias, _)| *alias == p.as_str())
        .map(|(_, canonical)| Iri::new(*canonical).expect("alias table holds absolute IRIs"))
}

/// Rewrites variant predicate spellings to their canonical IRIs.
pub fn canonicalize(graph: &Graph) -> (Graph, Vec<Rewrite>) {
    let mut out = Graph::with_prefixes(graph.prefixes().clone());
    let mut rewrites = Vec::new();
    for t in graph.iter() {
        let canonical = t.predicate().as_iri().and_then(canonical_predicate);
        match canonical {
            Some(to) => {
                let (s, p, o) = t.into_parts();
                let from = p.as_iri().expect("predicate is an IRI").clone();
                rewrites.push(Rewrite {
                    subject: s.clone(),
                    from,
                    to: to.clone(),
                    object: o.clone(),
                });
                out.insert(Triple::new(s, Term::Iri(to), o).expect("kinds unchanged"));
            }
            None => {
                out.insert(t);
            }
        }
    }
    (out, rewrites)
}

/// Applies the same alias table to the predicate positions of a query.
pub fn canonicalize_query(query: &QueryAst) -> (QueryAst, Vec<(Iri, Iri)>) {
    let mut rewrites = Vec::new();
    let mut fix = |patterns: &[TriplePattern]| -> Vec<TriplePattern> {
        patterns
            .iter()
            .map(|p| {
                let mut p = p.clone();
                if let PatternTerm::Term(Term::Iri(iri)) = &p.predicate {
                    if let Some(to) = canonical_predicate(iri) {
                        rewrites.push((iri.clone(), to.clone()));
                        p.predicate = PatternTerm::Term(Term::Iri(to));
                    }
                }
                p
            })
            .collect()
    };
    let form = match &query.form {
        QueryForm::Select { projection } => QueryForm::Select {
            projection: projection.clone(),
        },
        QueryForm::Construct { template } => QueryForm::Construct {
            template: fix(template),
        },
    };
    let pattern = fix(&query.pattern);
    (
        QueryAst {
            prefixes: query.prefixes.clone(),
            form,
            pattern,
        },
        rewrites,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Severity {
    Violation,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Violation => "Violation",
            Severity::Warning => "Warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Finding {
    pub severity: Severity,
    pub rule_id: String,
    pub focus: Term,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}: {}",
            self.severity, self.rule_id, self.focus, self.message
        )
    }
}

/// Findings sorted by rule, then focus node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn violations(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Violation)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Warning)
    }

    pub fn conforms(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "conforms": self.conforms(),
            "findings": self.findings.iter().map(|f| json!({
                "severity": f.severity,
                "rule": f.rule_id,
                "focus": f.focus.to_string(),
                "message": f.message,
            })).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        write!(
            f,
            "{} violation(s), {} warning(s)",
            self.violations().count(),
            self.warnings().count()
        )
    }
}

/// `YYYY-MM-DD` with an optional `Z` or `±hh:mm` zone, naming a real day.
fn is_xsd_date(s: &str) -> bool {
    let (date, zone) = match s
        .find(['Z', '+'])
        .or_else(|| s.rfind('-').filter(|&i| i > 7))
    {
        Some(i) if s.len() - i == 1 || s.len() - i == 6 => s.split_at(i),
        _ => (s, ""),
    };
    let zone_ok = match zone {
        "" | "Z" => true,
        z => {
            let b = z.as_bytes();
            matches!(b[0], b'+' | b'-')
                && b[1..3].iter().all(u8::is_ascii_digit)
                && b[3] == b':'
                && b[4..6].iter().all(u8::is_ascii_digit)
                && z[1..3].parse::<u8>().is_ok_and(|h| h <= 14)
                && z[4..6].parse::<u8>().is_ok_and(|m| m < 60)
        }
    };
    let shape_ok = date.len() == 10
        && date.bytes().enumerate().all(|(i, b)| {
            if i == 4 || i == 7 {
                b == b'-'
            } else {
                b.is_ascii_digit()
            }
        });
    zone_ok && shape_ok && NaiveDate::parse_from_str(date, "%Y-%m-%d").is_ok()
}

/// Applies the shell rules:
///
/// | rule | severity | check |
/// |------|----------|-------|
/// | R1 | Violation | a shell has exactly one `i40c:surround`, to an `i40c:Object` |
/// | R2 | Violation | an object is named by an absolute http(s) IRI |
/// | R3 | Violation | an object has `i40c:hasId` or `dcterms:identifier` |
/// | R4 | Warning | objects and shells have a language-tagged `rdfs:label` |
/// | R5 | Warning | those labels cover fewer than two languages |
/// | R6 | Violation | `i40c:hasDate` values typed `xsd:date` are valid dates |
/// | R7 | Warning | typed nodes use predicates the vocabulary does not declare |
/// | R8 | Warning | `i40c:image` values are literals rather than IRIs |
pub fn validate(data: &Graph, vocab: &VocabularyDefinition) -> ValidationReport {
    let types = TypeIndex::new(data, vocab);
    let shell_class = i40c("AdministrativeShell").as_iri().cloned().expect("iri");
    let object_class = i40c("Object").as_iri().cloned().expect("iri");
    let label = Term::named(ns::RDFS_LABEL);
    let mut findings = Vec::new();
    let mut push = |severity, rule: &str, focus: &Term, message: String| {
        findings.push(Finding {
            severity,
            rule_id: rule.to_owned(),
            focus: focus.clone(),
            message,
        })
    };

    let shells = types.instances(&shell_class);
    let objects = types.instances(&object_class);

    for shell in &shells {
        let surrounded: Vec<&Term> = data.objects(shell, &i40c("surround")).collect();
        match surrounded.as_slice() {
            [] => push(
                Severity::Violation,
                "R1",
                shell,
                "shell has no i40c:surround".into(),
            ),
            [one] if !types.is_a(one, &object_class) => push(
                Severity::Violation,
                "R1",
                shell,
                format!("surrounded node {one} is not typed i40c:Object"),
            ),
            [_] => {}
            many => push(
                Severity::Violation,
                "R1",
                shell,
                format!(
                    "shell has {} i40c:surround values, expected one",
                    many.len()
                ),
            ),
        }
    }

    for object in &objects {
        if !object.as_iri().is_some_and(Iri::is_http) {
            push(
                Severity::Violation,
                "R2",
                object,
                "object must be identified by an absolute http(s) IRI".into(),
            );
        }
        let has_id = data.objects(object, &i40c("hasId")).next().is_some()
            || data
                .objects(object, &Term::named(DCTERMS_IDENTIFIER))
                .next()
                .is_some();
        if !has_id {
            push(
                Severity::Violation,
                "R3",
                object,
                "object has neither i40c:hasId nor dcterms:identifier".into(),
            );
        }
    }

    for node in shells.iter().chain(objects.iter()).collect::<BTreeSet<_>>() {
        let languages: BTreeSet<&str> = data
            .objects(node, &label)
            .filter_map(|l| l.as_literal()?.language())
            .collect();
        if languages.is_empty() {
            push(
                Severity::Warning,
                "R4",
                node,
                "no language-tagged rdfs:label".into(),
            );
        }
        if languages.len() < 2 {
            push(
                Severity::Warning,
                "R5",
                node,
                format!(
                    "labels in {} language(s), expected at least 2",
                    languages.len()
                ),
            );
        }
    }

    for t in data.match_pattern(None, Some(&i40c("hasDate")), None) {
        if let Some(lit) = t.object().as_literal() {
            if lit.datatype().as_str() == ns::XSD_DATE && !is_xsd_date(lit.lexical()) {
                push(
                    Severity::Violation,
                    "R6",
                    t.subject(),
                    format!("{:?} is not a valid xsd:date", lit.lexical()),
                );
            }
        }
    }

    let rdf_type = Term::named(ns::RDF_TYPE);
    let typed: Vec<&Term> = data
        .subject_terms()
        .filter(|s| data.objects(s, &rdf_type).next().is_some())
        .collect();
    for node in typed {
        for p in data.predicates_of(node) {
            let iri = p.as_iri().expect("predicates are IRIs");
            if !vocab.knows_property(iri) {
                push(
                    Severity::Warning,
                    "R7",
                    node,
                    format!("predicate {iri} is not defined by the vocabulary"),
                );
            }
        }
    }

    for t in data.match_pattern(None, Some(&i40c("image")), None) {
        if t.object().is_literal() {
            push(
                Severity::Warning,
                "R8",
                t.subject(),
                "i40c:image value is a literal; an IRI is recommended".into(),
            );
        }
    }

    findings.sort_by(|a, b| {
        (&a.rule_id, &a.focus, &a.message).cmp(&(&b.rule_id, &b.focus, &b.message))
    });
    ValidationReport { findings }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LabelFallback {
    /// A label in the requested language.
    Exact,
    /// No label in the requested language; the English one was used.
    English,
    /// Neither; the first label found was used.
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    pub value: String,
    pub language: Option<String>,
    pub fallback: LabelFallback,
}

/// The `rdfs:label` of `resource` in `lang`, falling back to English and then
/// to any label.
pub fn get_label(graph: &Graph, resource: &Term, lang: &str) -> Option<Label> {
    let lang = lang.to_ascii_lowercase();
    let labels: Vec<_> = graph
        .objects(resource, &Term::named(ns::RDFS_LABEL))
        .filter_map(Term::as_literal)
        .collect();
    let pick = |wanted: &str, fallback| {
        labels
            .iter()
            .find(|l| l.language() == Some(wanted))
            .map(|l| Label {
                value: l.lexical().to_owned(),
                language: l.language().map(str::to_owned),
                fallback,
            })
    };
    pick(&lang, LabelFallback::Exact)
        .or_else(|| pick("en", LabelFallback::English))
        .or_else(|| {
            labels.first().map(|l| Label {
                value: l.lexical().to_owned(),
                language: l.language().map(str::to_owned),
                fallback: LabelFallback::Any,
            })
        })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShellDescriptor {
    pub shell: Iri,
    pub object: Iri,
    pub technical_functionality: Option<Iri>,
    pub technical_data: Option<Iri>,
    pub identifier: String,
    /// The shell's labels keyed by language; untagged labels use `""`.
    pub labels: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DescriptorError {
    #[error("{0} is not an i40c:AdministrativeShell")]
    NotAShell(Iri),
    #[error("shell {shell} is invalid ({} violation(s))", findings.len())]
    InvalidShell { shell: Iri, findings: Vec<Finding> },
}

/// Extracts the descriptor of one shell by following `i40c:surround`,
/// `i40c:hasTechnicalFunctionality`, `i40c:hasTechnicalData` and
/// `i40c:hasId`.
pub fn descriptor_of(
    graph: &Graph,
    vocab: &VocabularyDefinition,
    shell: &Iri,
) -> Result<ShellDescriptor, DescriptorError> {
    let types = TypeIndex::new(graph, vocab);
    let shell_term = Term::Iri(shell.clone());
    let shell_class = i40c("AdministrativeShell").as_iri().cloned().expect("iri");
    if !types.is_a(&shell_term, &shell_class) {
        return Err(DescriptorError::NotAShell(shell.clone()));
    }

    let surrounded: BTreeSet<&Term> = graph.objects(&shell_term, &i40c("surround")).collect();
    let findings: Vec<Finding> = validate(graph, vocab)
        .violations()
        .filter(|f| f.focus == shell_term || surrounded.contains(&f.focus))
        .cloned()
        .collect();
    if !findings.is_empty() {
        return Err(DescriptorError::InvalidShell {
            shell: shell.clone(),
            findings,
        });
    }

    let object_term = *surrounded.iter().next().expect("R1 guarantees one object");
    let object = object_term.as_iri().cloned().expect("R2 guarantees an IRI");
    let first_iri = |node: &Term, p: &str| {
        graph
            .objects(node, &i40c(p))
            .find_map(|t| t.as_iri().cloned())
    };
    let identifier = graph
        .objects(object_term, &i40c("hasId"))
        .chain(graph.objects(object_term, &Term::named(DCTERMS_IDENTIFIER)))
        .find_map(|t| t.as_literal().map(|l| l.lexical().to_owned()))
        .or_else(|| {
            graph
                .objects(object_term, &i40c("hasId"))
                .chain(graph.objects(object_term, &Term::named(DCTERMS_IDENTIFIER)))
                .next()
                .map(|t| t.to_string())
        })
        .expect("R3 guarantees an identifier");
    let labels = graph
        .objects(&shell_term, &Term::named(ns::RDFS_LABEL))
        .filter_map(Term::as_literal)
        .map(|l| {
            (
                l.language().unwrap_or_default().to_owned(),
                l.lexical().to_owned(),
            )
        })
        .collect();

    Ok(ShellDescriptor {
        shell: shell.clone(),
        technical_functionality: first_iri(&shell_term, "hasTechnicalFunctionality"),
        technical_data: first_iri(object_term, "hasTechnicalData")
            .or_else(|| first_iri(&shell_term, "hasTechnicalData")),
        object,
        identifier,
        labels,
    })
}

/// Alignment links between i40c and the IEC skeleton.
pub fn alignment_links(vocab: &VocabularyDefinition) -> Vec<(Iri, Iri)> {
    vocab
        .graph()
        .match_pattern(None, Some(&Term::named(SKOS_CLOSE_MATCH)), None)
        .filter_map(|t| Some((t.subject().as_iri()?.clone(), t.object().as_iri()?.clone())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_contains_required_terms() {
        let v = VocabularyDefinition::builtin();
        for c in [
            "AdministrativeShell",
            "Object",
            "TechnicalFunctionality",
            "Platform",
            "Manifest",
            "Data",
            "TechnicalData",
            "Component",
            "Actuator",
        ] {
            assert!(
                v.classes.contains(i40c(c).as_iri().unwrap()),
                "missing class {c}"
            );
        }
        for p in [
            "surround",
            "hasTechnicalFunctionality",
            "hasId",
            "hasPhase",
            "hasTechnicalData",
            "image",
            "hasVersion",
            "hasDate",
            "functionBlockUrl",
            "brakingResistance",
            "outputFrequency",
            "display",
            "isPartOf",
        ] {
            assert!(
                v.properties.contains_key(i40c(p).as_iri().unwrap()),
                "missing property {p}"
            );
        }
        assert_eq!(v.version, "1.0.0");
    }

    #[test]
    fn every_class_has_english_and_german_labels() {
        let v = VocabularyDefinition::builtin();
        for c in &v.classes {
            assert!(v.label(c, "en").is_some(), "{c} lacks en");
            assert!(v.label(c, "de").is_some(), "{c} lacks de");
        }
    }

    #[test]
    fn iec_skeleton_has_four_roots() {
        let v = VocabularyDefinition::builtin();
        let iec: Vec<&Iri> = v
            .classes
            .iter()
            .filter(|c| c.as_str().starts_with(ns::IEC))
            .collect();
        let roots: BTreeSet<&str> = iec
            .iter()
            .filter(|c| {
                !v.subclass_edges
                    .iter()
                    .any(|(sub, sup)| sub == **c && sup.as_str().starts_with(ns::IEC))
            })
            .map(|c| &c.as_str()[ns::IEC.len()..])
            .collect();
        assert_eq!(
            roots,
            BTreeSet::from(["Component", "Feature", "Geometry", "Material"])
        );
        for (sub, sup) in &v.subclass_edges {
            let sub_iec = sub.as_str().starts_with(ns::IEC);
            let sup_iec = sup.as_str().starts_with(ns::IEC);
            assert_eq!(sub_iec, sup_iec, "cross-namespace subclass {sub} -> {sup}");
        }
        let links = alignment_links(v);
        assert_eq!(
            links,
            vec![(
                i40c("Object").as_iri().unwrap().clone(),
                Iri::new(format!("{}Component", ns::IEC)).unwrap()
            )]
        );
    }

    #[test]
    fn cycles_are_rejected() {
        let mut g = builtin_vocabulary();
        g.insert(
            Triple::new(
                i40c("Object"),
                Term::named(ns::RDFS_SUBCLASS_OF),
                i40c("Actuator"),
            )
            .unwrap(),
        );
        assert!(matches!(
            VocabularyDefinition::from_graph(g),
            Err(VocabError::Cycle(_))
        ));
    }

    #[test]
    fn undeclared_domain_is_rejected() {
        let mut g = builtin_vocabulary();
        g.insert(
            Triple::new(
                i40c("hasThing"),
                Term::named(ns::RDF_TYPE),
                Term::named(RDF_PROPERTY),
            )
            .unwrap(),
        );
        assert!(matches!(
            VocabularyDefinition::from_graph(g.clone()),
            Err(VocabError::IncompleteProperty(_))
        ));
        g.insert(Triple::new(i40c("hasThing"), Term::named(RDFS_DOMAIN), i40c("Nope")).unwrap());
        g.insert(Triple::new(i40c("hasThing"), Term::named(RDFS_RANGE), i40c("Object")).unwrap());
        assert!(matches!(
            VocabularyDefinition::from_graph(g),
            Err(VocabError::UndeclaredClass {
                position: "domain",
                ..
            })
        ));
    }

    #[test]
    fn subclass_reasoning() {
        let v = VocabularyDefinition::builtin();
        let actuator = i40c("Actuator").as_iri().unwrap().clone();
        assert!(v.is_subclass_of(&actuator, i40c("Object").as_iri().unwrap()));
        assert!(v.is_subclass_of(&actuator, &actuator));
        assert!(!v.is_subclass_of(i40c("Object").as_iri().unwrap(), &actuator));
    }

    #[test]
    fn xsd_dates() {
        for ok in [
            "2015-11-02",
            "2016-02-29",
            "2015-11-02Z",
            "2015-11-02+01:00",
            "2015-11-02-05:00",
        ] {
            assert!(is_xsd_date(ok), "{ok}");
        }
        for bad in [
            "2015-13-02",
            "2015-02-29",
            "2015-11-2",
            "02.11.2015",
            "",
            "2015-11-02+1:00",
            "2015-11-02T00:00",
        ] {
            assert!(!is_xsd_date(bad), "{bad}");
        }
    }

    #[test]
    fn get_label_on_unlabelled_resource() {
        assert_eq!(get_label(&Graph::new(), &i40c("x"), "de"), None);
    }
}

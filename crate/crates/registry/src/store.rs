use std::collections::BTreeSet;
use std::io;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use i40sh_core::query::{eval, parse_query, QueryResult};
use i40sh_core::vocab::{Finding, Severity};
use i40sh_core::{
    canonicalize, canonicalize_query, descriptor_of, get_label, ns, parse_turtle, serialize_turtle,
    validate, DiagnosticCode, Graph, Iri, ParseDiagnostic, Term, ValidationReport,
    VocabularyDefinition,
};
use serde::Serialize;
use thiserror::Error;

const SHELL_CLASS: &str = "http://purl.org/eis/i40c/AdministrativeShell";

#[derive(Debug, Error)]
pub enum RegisterError {
    #[error("document does not parse ({} diagnostic(s))", .0.len())]
    Parse(Vec<ParseDiagnostic>),
    #[error("document was rejected ({} violation(s))", .0.violations().count())]
    Rejected(ValidationReport),
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("query does not parse ({} diagnostic(s))", .0.len())]
    Parse(Vec<ParseDiagnostic>),
    #[error("{}", .0[0].message)]
    Unsupported(Vec<ParseDiagnostic>),
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("cannot read snapshot: {0}")]
    Io(#[from] io::Error),
    #[error("snapshot does not parse: {}", .0.first().map(ToString::to_string).unwrap_or_default())]
    Parse(Vec<ParseDiagnostic>),
    #[error("snapshot does not validate:\n{0}")]
    Invalid(ValidationReport),
}

#[derive(Debug, Clone)]
pub struct Registered {
    /// Shells named by the document, sorted.
    pub shells: Vec<Iri>,
    /// Warnings about subjects of the document.
    pub warnings: Vec<Finding>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShellEntry {
    pub shell: String,
    pub identifier: Option<String>,
    pub label: Option<String>,
}

/// The store plus everything derived from it, replaced as a unit.
#[derive(Debug, Default)]
struct Snapshot {
    graph: Graph,
    external: BTreeSet<Iri>,
}

/// In-memory shell registry. Readers work on an immutable snapshot;
/// registrations serialize through a single writer.
#[derive(Debug)]
pub struct Registry {
    base_iri: Iri,
    vocab: &'static VocabularyDefinition,
    current: RwLock<Arc<Snapshot>>,
    writer: Mutex<()>,
}

fn shells_in(graph: &Graph) -> BTreeSet<Iri> {
    graph
        .subjects(&Term::named(ns::RDF_TYPE), &Term::named(SHELL_CLASS))
        .filter_map(|t| t.as_iri().cloned())
        .collect()
}

impl Registry {
    pub fn new(base_iri: Iri) -> Self {
        Self {
            base_iri,
            vocab: VocabularyDefinition::builtin(),
            current: RwLock::new(Arc::default()),
            writer: Mutex::new(()),
        }
    }

    /// Starts from a Turtle snapshot; the snapshot must validate.
    pub fn from_snapshot(base_iri: Iri, path: &Path) -> Result<Self, SnapshotError> {
        let registry = Self::new(base_iri);
        let text = std::fs::read_to_string(path)?;
        let (graph, _) = canonicalize(&parse_turtle(&text).map_err(SnapshotError::Parse)?);
        let report = validate(&graph, registry.vocab);
        if !report.conforms() {
            return Err(SnapshotError::Invalid(report));
        }
        registry.swap(graph);
        Ok(registry)
    }

    /// Writes the store as Turtle, replacing `path` only once the new file is
    /// complete.
    pub fn save_snapshot(&self, path: &Path) -> io::Result<()> {
        let text = serialize_turtle(&self.snapshot().graph);
        let tmp = path.with_extension("ttl.tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(tmp, path)
    }

    pub fn base_iri(&self) -> &Iri {
        &self.base_iri
    }

    pub fn vocabulary(&self) -> &'static VocabularyDefinition {
        self.vocab
    }

    fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().expect("store lock poisoned").clone()
    }

    fn swap(&self, graph: Graph) {
        let external = shells_in(&graph)
            .into_iter()
            .filter(|s| !s.as_str().starts_with(self.base_iri.as_str()))
            .collect();
        *self.current.write().expect("store lock poisoned") =
            Arc::new(Snapshot { graph, external });
    }

    pub fn store(&self) -> Graph {
        self.snapshot().graph.clone()
    }

    pub fn len(&self) -> usize {
        self.snapshot().graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Registered shells outside the base namespace.
    pub fn external_shells(&self) -> BTreeSet<Iri> {
        self.snapshot().external.clone()
    }

    /// Parses, canonicalizes and validates a Turtle document, then stores it.
    /// Every subject of the document has its previous description replaced.
    /// The store is left untouched when the result would not validate.
    pub fn register(&self, body: &str) -> Result<Registered, RegisterError> {
        let doc = parse_turtle(body).map_err(RegisterError::Parse)?;
        let (doc, rewrites) = canonicalize(&doc);
        let shells: Vec<Iri> = shells_in(&doc).into_iter().collect();
        if shells.is_empty() {
            let focus = doc
                .subject_terms()
                .next()
                .cloned()
                .unwrap_or_else(|| Term::Iri(self.base_iri.clone()));
            return Err(RegisterError::Rejected(ValidationReport {
                findings: vec![Finding {
                    severity: Severity::Violation,
                    rule_id: "REG1".into(),
                    focus,
                    message: "document contains no i40c:AdministrativeShell".into(),
                }],
            }));
        }

        let _guard = self.writer.lock().expect("writer lock poisoned");
        let current = self.snapshot();
        let mut candidate = current.graph.clone();
        for subject in doc.subject_terms() {
            for t in candidate.concise_bounded_description(subject).iter() {
                candidate.remove(&t);
            }
        }
        let candidate = candidate.merge(&doc);

        let subjects: BTreeSet<&Term> = doc.subject_terms().collect();
        let report = validate(&candidate, self.vocab);
        let relevant =
            |f: &Finding| f.severity == Severity::Violation || subjects.contains(&f.focus);
        let findings: Vec<Finding> = report.findings.into_iter().filter(relevant).collect();
        let report = ValidationReport { findings };
        if !report.conforms() {
            tracing::info!(
                violations = report.violations().count(),
                "registration rejected"
            );
            return Err(RegisterError::Rejected(report));
        }

        tracing::info!(
            shells = shells.len(),
            triples = doc.len(),
            rewrites = rewrites.len(),
            "registered"
        );
        self.swap(candidate);
        Ok(Registered {
            shells,
            warnings: report.findings,
        })
    }

    /// The concise bounded description of `resource`, or `None` when the store
    /// has nothing about it.
    pub fn dereference(&self, resource: &Iri) -> Option<Graph> {
        let snapshot = self.snapshot();
        let cbd = snapshot
            .graph
            .concise_bounded_description(&Term::Iri(resource.clone()));
        if cbd.is_empty() {
            return None;
        }
        let mut out = Graph::with_prefixes(snapshot.graph.prefixes().clone());
        out.extend(cbd.iter());
        Some(out)
    }

    /// Evaluates a query against the current store, after canonicalizing its
    /// predicates.
    pub fn query(&self, text: &str) -> Result<QueryResult, QueryError> {
        let ast = parse_query(text).map_err(|d| {
            let (unsupported, other): (Vec<_>, Vec<_>) = d
                .into_iter()
                .partition(|d| d.code == DiagnosticCode::UnsupportedKeyword);
            if unsupported.is_empty() {
                QueryError::Parse(other)
            } else {
                QueryError::Unsupported(unsupported)
            }
        })?;
        let (ast, _) = canonicalize_query(&ast);
        Ok(eval(&self.snapshot().graph, &ast))
    }

    /// One entry per shell, sorted by IRI, labelled in English where possible.
    pub fn list_shells(&self) -> Vec<ShellEntry> {
        let snapshot = self.snapshot();
        let graph = &snapshot.graph;
        shells_in(graph)
            .into_iter()
            .map(|shell| {
                let term = Term::Iri(shell.clone());
                ShellEntry {
                    identifier: descriptor_of(graph, self.vocab, &shell)
                        .ok()
                        .map(|d| d.identifier),
                    label: get_label(graph, &term, "en").map(|l| l.value),
                    shell: shell.into_string(),
                }
            })
            .collect()
    }
}

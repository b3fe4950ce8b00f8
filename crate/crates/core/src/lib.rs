//! Semantic Administrative Shell engine: an indexed RDF graph, a Turtle
//! reader/writer, the i40c vocabulary with validation, a basic-graph-pattern
//! query evaluator and CSV ingestion.

pub mod graph;
pub mod ingest;
pub mod query;
pub mod syntax;
pub mod term;
pub mod turtle;
pub mod vocab;

pub use graph::{merge, Graph, PrefixError, PrefixMap};
pub use ingest::{
    ingest_csv, parse_mapping, IngestError, Ingested, MappingError, MappingSpec, RowNodes,
};
pub use syntax::{DiagnosticCode, ParseDiagnostic};
pub use term::{ns, BlankNode, Iri, Literal, Term, TermError, Triple};
pub use turtle::{parse_turtle, serialize_turtle};
pub use vocab::{
    canonicalize, canonicalize_query, descriptor_of, get_label, validate, Finding, Severity,
    ShellDescriptor, ValidationReport, VocabularyDefinition,
};

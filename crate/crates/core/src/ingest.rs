//! CSV to shell RDF through a small line-oriented mapping format.
//!
//! ```text
//! # comments start with '#'
//! prefix ex = http://example.org/
//! subject = http://purl.org/eis/i40c/Object{id}
//! type = i40c:Component
//! key = id
//! shell = http://purl.org/eis/i40c/Shell{id}
//! id = i40c:hasId
//! name = rdfs:label @en
//! released = i40c:hasDate ^^xsd:date
//! datasheet = i40c:image <http://example.org/img/{datasheet}>
//! ```
//!
//! `key` defaults to the first placeholder of the subject template. `shell`
//! is optional; when present each row also gets an `i40c:AdministrativeShell`
//! that surrounds the row subject. `rdf`, `rdfs`, `xsd`, `dcterms` and
//! `i40c` are predeclared prefixes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use thiserror::Error;

use crate::graph::{Graph, PrefixMap};
use crate::term::{ns, Iri, Literal, Term, Triple};

/// Everything but RFC 3986 unreserved characters.
const RESERVED: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Column(String),
}

/// An IRI with `{column}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    source: String,
    segments: Vec<Segment>,
}

impl Template {
    pub fn parse(source: &str) -> Result<Self, String> {
        let mut segments = Vec::new();
        let mut rest = source;
        while let Some(open) = rest.find(['{', '}']) {
            if rest.as_bytes()[open] == b'}' {
                return Err(format!("unbalanced '}}' in template {source:?}"));
            }
            if open > 0 {
                segments.push(Segment::Text(rest[..open].to_owned()));
            }
            let close = rest[open..]
                .find('}')
                .ok_or_else(|| format!("unclosed '{{' in template {source:?}"))?
                + open;
            let name = &rest[open + 1..close];
            if name.is_empty() || name.contains('{') {
                return Err(format!("bad placeholder in template {source:?}"));
            }
            segments.push(Segment::Column(name.to_owned()));
            rest = &rest[close + 1..];
        }
        if !rest.is_empty() {
            segments.push(Segment::Text(rest.to_owned()));
        }
        let template = Self {
            source: source.to_owned(),
            segments,
        };
        // The fixed parts alone must already look like an absolute IRI.
        Iri::new(
            template
                .fill(|_| Some("x".into()))
                .expect("all placeholders filled"),
        )
        .map_err(|e| format!("template {source:?} is not an IRI template: {e}"))?;
        Ok(template)
    }

    pub fn columns(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Column(c) => Some(c.as_str()),
            Segment::Text(_) => None,
        })
    }

    fn fill(&self, mut value: impl FnMut(&str) -> Option<String>) -> Option<String> {
        let mut out = String::new();
        for s in &self.segments {
            match s {
                Segment::Text(t) => out.push_str(t),
                Segment::Column(c) => {
                    out.extend(utf8_percent_encode(&value(c)?, RESERVED));
                }
            }
        }
        Some(out)
    }

    /// Fills placeholders from `row`; `None` when a referenced cell is empty.
    pub fn instantiate(&self, row: &BTreeMap<&str, &str>) -> Option<String> {
        self.fill(|c| {
            row.get(c)
                .filter(|v| !v.is_empty())
                .map(|v| (*v).to_owned())
        })
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueKind {
    String,
    Lang(String),
    Typed(Iri),
    IriTemplate(Template),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnRule {
    pub column: String,
    pub predicate: Iri,
    pub kind: ValueKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingSpec {
    pub subject_template: Template,
    pub type_assertion: Iri,
    pub key_column: String,
    pub shell_template: Option<Template>,
    pub column_rules: Vec<ColumnRule>,
    pub prefixes: PrefixMap,
}

impl MappingSpec {
    /// Every column the spec reads, in first-use order.
    pub fn referenced_columns(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let templates = std::iter::once(&self.subject_template)
            .chain(&self.shell_template)
            .chain(self.column_rules.iter().filter_map(|r| match &r.kind {
                ValueKind::IriTemplate(t) => Some(t),
                _ => None,
            }));
        std::iter::once(self.key_column.as_str())
            .chain(templates.flat_map(Template::columns))
            .chain(self.column_rules.iter().map(|r| r.column.as_str()))
            .filter(|c| seen.insert(*c))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("mapping line {line}: {message}")]
pub struct MappingError {
    pub line: usize,
    pub message: String,
}

fn default_prefixes() -> PrefixMap {
    let mut p = PrefixMap::new();
    for (label, iri) in [
        ("rdf", ns::RDF),
        ("rdfs", ns::RDFS),
        ("xsd", ns::XSD),
        ("dcterms", ns::DCTERMS),
        ("i40c", ns::I40C),
    ] {
        p.insert(
            label,
            Iri::new(iri).expect("namespace constants are absolute"),
        );
    }
    p
}

fn resolve(token: &str, prefixes: &PrefixMap) -> Result<Iri, String> {
    if let Some(body) = token.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
        return Iri::new(body).map_err(|e| e.to_string());
    }
    match prefixes.expand(token) {
        Ok(Term::Iri(iri)) => Ok(iri),
        Ok(_) => unreachable!("prefix expansion yields IRIs"),
        Err(_) if token.contains("://") => Iri::new(token).map_err(|e| e.to_string()),
        Err(e) => Err(e.to_string()),
    }
}

fn column_name(lhs: &str) -> Option<String> {
    if let Some(q) = lhs.strip_prefix('"').and_then(|t| t.strip_suffix('"')) {
        return (!q.is_empty()).then(|| q.to_owned());
    }
    (!lhs.is_empty() && !lhs.contains(char::is_whitespace)).then(|| lhs.to_owned())
}

/// Parses the mapping format. Column names that collide with a header keyword
/// can be written in double quotes.
pub fn parse_mapping(text: &str) -> Result<MappingSpec, MappingError> {
    let mut prefixes = default_prefixes();
    let mut subject = None;
    let mut type_assertion = None;
    let mut key = None;
    let mut shell = None;
    let mut rules: Vec<(usize, String, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| MappingError { line, message };
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((lhs, rhs)) = trimmed.split_once('=') else {
            return Err(err(format!("unknown directive {trimmed:?}")));
        };
        let (lhs, rhs) = (lhs.trim(), rhs.trim());
        if rhs.is_empty() {
            return Err(err(format!("missing value for {lhs:?}")));
        }
        let set = |slot: &mut Option<(usize, String)>| {
            if slot.is_some() {
                return Err(err(format!("{lhs} is declared twice")));
            }
            *slot = Some((line, rhs.to_owned()));
            Ok(())
        };
        match lhs {
            "subject" => set(&mut subject)?,
            "type" => set(&mut type_assertion)?,
            "key" => set(&mut key)?,
            "shell" => set(&mut shell)?,
            _ => {
                if let Some(label) = lhs.strip_prefix("prefix ") {
                    let label = label.trim();
                    let ns = rhs.trim_start_matches('<').trim_end_matches('>');
                    let ns = Iri::new(ns).map_err(|e| err(e.to_string()))?;
                    if label.contains(char::is_whitespace) {
                        return Err(err(format!("bad prefix label {label:?}")));
                    }
                    prefixes.insert(label, ns);
                } else if let Some(column) = column_name(lhs) {
                    rules.push((line, column, rhs.to_owned()));
                } else {
                    return Err(err(format!("unknown directive {lhs:?}")));
                }
            }
        }
    }

    let (subject_line, subject) = subject.ok_or(MappingError {
        line: 0,
        message: "missing subject template".into(),
    })?;
    let subject_template = Template::parse(&subject).map_err(|message| MappingError {
        line: subject_line,
        message,
    })?;
    let (type_line, type_token) = type_assertion.ok_or(MappingError {
        line: 0,
        message: "missing type assertion".into(),
    })?;
    let type_assertion = resolve(&type_token, &prefixes).map_err(|message| MappingError {
        line: type_line,
        message,
    })?;
    let shell_template = shell
        .map(|(line, t)| Template::parse(&t).map_err(|message| MappingError { line, message }))
        .transpose()?;

    let mut column_rules = Vec::new();
    let mut seen: BTreeMap<(String, Iri), usize> = BTreeMap::new();
    for (line, column, rhs) in rules {
        let err = |message: String| MappingError { line, message };
        let mut parts = rhs.split_whitespace();
        let predicate = resolve(parts.next().expect("rhs is non-empty"), &prefixes).map_err(err)?;
        let kind = match parts.next() {
            None => ValueKind::String,
            Some(tag) if tag.starts_with('@') => {
                let lit = Literal::lang("", &tag[1..]).map_err(|e| err(e.to_string()))?;
                ValueKind::Lang(lit.language().expect("tagged").to_owned())
            }
            Some(dt) if dt.starts_with("^^") => {
                let dt = resolve(&dt[2..], &prefixes).map_err(err)?;
                Literal::typed("", dt.clone()).map_err(|e| err(e.to_string()))?;
                ValueKind::Typed(dt)
            }
            Some(t) if t.starts_with('<') && t.ends_with('>') => {
                ValueKind::IriTemplate(Template::parse(&t[1..t.len() - 1]).map_err(err)?)
            }
            Some(other) => return Err(err(format!("unknown value kind {other:?}"))),
        };
        if let Some(extra) = parts.next() {
            return Err(err(format!("unexpected {extra:?} after value kind")));
        }
        if let Some(first) = seen.insert((column.clone(), predicate.clone()), line) {
            return Err(err(format!(
                "column {column:?} is already mapped to {predicate} on line {first}"
            )));
        }
        column_rules.push(ColumnRule {
            column,
            predicate,
            kind,
        });
    }

    let key_column = match key {
        Some((_, k)) => column_name(&k).ok_or(MappingError {
            line: 0,
            message: format!("bad key column {k:?}"),
        })?,
        None => subject_template
            .columns()
            .next()
            .ok_or(MappingError {
                line: subject_line,
                message: "subject template has no placeholder and no key is declared".into(),
            })?
            .to_owned(),
    };

    let declared: BTreeSet<&str> = column_rules
        .iter()
        .map(|r| r.column.as_str())
        .chain([key_column.as_str()])
        .collect();
    if let Some(c) = subject_template.columns().find(|c| !declared.contains(c)) {
        return Err(MappingError {
            line: subject_line,
            message: format!("subject template uses undeclared column {c:?}"),
        });
    }

    Ok(MappingSpec {
        subject_template,
        type_assertion,
        key_column,
        shell_template,
        column_rules,
        prefixes,
    })
}

/// A skipped row or cell; `row` is the 1-based data row (the header is row 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDiagnostic {
    pub row: usize,
    pub message: String,
}

impl fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: {}", self.row, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("CSV header is missing column(s): {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("CSV error: {0}")]
    Csv(String),
}

impl From<csv::Error> for IngestError {
    fn from(e: csv::Error) -> Self {
        IngestError::Csv(e.to_string())
    }
}

/// The nodes minted for one row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowNodes {
    pub subject: Iri,
    /// Absent without a `shell` template.
    pub shell: Option<Iri>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub graph: Graph,
    pub diagnostics: Vec<RowDiagnostic>,
    /// One entry per ingested row, in row order.
    pub rows: Vec<RowNodes>,
}

/// Reads comma-separated, double-quoted, UTF-8 CSV with a header row.
pub fn ingest_csv(input: impl Read, spec: &MappingSpec) -> Result<Ingested, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let missing: Vec<String> = spec
        .referenced_columns()
        .into_iter()
        .filter(|c| !headers.iter().any(|h| h == c))
        .map(str::to_owned)
        .collect();
    if !missing.is_empty() {
        return Err(IngestError::MissingColumns(missing));
    }

    let mut out = Ingested {
        graph: Graph::with_prefixes(spec.prefixes.clone()),
        diagnostics: Vec::new(),
        rows: Vec::new(),
    };
    let rdf_type = Term::named(ns::RDF_TYPE);
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1;
        let record = record?;
        let row: BTreeMap<&str, &str> = headers
            .iter()
            .map(String::as_str)
            .zip(record.iter())
            .collect();
        let mut diag = |message: String| {
            out.diagnostics.push(RowDiagnostic {
                row: row_no,
                message,
            })
        };
        if row[spec.key_column.as_str()].is_empty() {
            diag(format!(
                "key column {:?} is empty; row skipped",
                spec.key_column
            ));
            continue;
        }
        let Some(subject) = spec.subject_template.instantiate(&row) else {
            diag("subject template refers to an empty cell; row skipped".into());
            continue;
        };
        let subject = match Iri::new(subject) {
            Ok(iri) => iri,
            Err(e) => {
                diag(format!("subject is not an IRI: {e}; row skipped"));
                continue;
            }
        };
        let s = Term::Iri(subject.clone());
        let mut triples = vec![(rdf_type.clone(), Term::Iri(spec.type_assertion.clone()))];
        for rule in &spec.column_rules {
            let cell = row[rule.column.as_str()];
            if cell.is_empty() {
                continue;
            }
            let object = match &rule.kind {
                ValueKind::String => Term::Literal(Literal::string(cell)),
                ValueKind::Lang(tag) => {
                    Term::Literal(Literal::lang(cell, tag).expect("tag checked by parse_mapping"))
                }
                ValueKind::Typed(dt) => Term::Literal(
                    Literal::typed(cell, dt.clone()).expect("datatype checked by parse_mapping"),
                ),
                ValueKind::IriTemplate(t) => match t.instantiate(&row).map(Iri::new) {
                    Some(Ok(iri)) => Term::Iri(iri),
                    Some(Err(e)) => {
                        diag(format!("column {:?}: {e}; cell skipped", rule.column));
                        continue;
                    }
                    None => {
                        diag(format!(
                            "column {:?}: template refers to an empty cell; cell skipped",
                            rule.column
                        ));
                        continue;
                    }
                },
            };
            triples.push((Term::Iri(rule.predicate.clone()), object));
        }
        let mut shell_node = None;
        if let Some(template) = &spec.shell_template {
            match template.instantiate(&row).map(Iri::new) {
                Some(Ok(shell)) => {
                    let sh = Term::Iri(shell.clone());
                    out.graph.insert(Triple::from_parts_unchecked(
                        sh.clone(),
                        rdf_type.clone(),
                        crate::vocab::i40c("AdministrativeShell"),
                    ));
                    out.graph.insert(Triple::from_parts_unchecked(
                        sh,
                        crate::vocab::i40c("surround"),
                        s.clone(),
                    ));
                    shell_node = Some(shell);
                }
                Some(Err(e)) => diag(format!("shell is not an IRI: {e}")),
                None => diag("shell template refers to an empty cell".into()),
            }
        }
        for (p, o) in triples {
            out.graph
                .insert(Triple::from_parts_unchecked(s.clone(), p, o));
        }
        out.rows.push(RowNodes {
            subject,
            shell: shell_node,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MOTOR: &str = "\
subject = http://purl.org/eis/i40c/Object{id}
type = i40c:Object
id = i40c:hasId ^^xsd:string
name = rdfs:label @en
phase = i40c:hasPhase @en
";

    #[test]
    fn two_rules() {
        let spec = parse_mapping(
            "subject = http://purl.org/eis/i40c/Object{id}\ntype = i40c:Object\nid = i40c:hasId\nname = rdfs:label @en\n",
        )
        .unwrap();
        assert_eq!(spec.column_rules.len(), 2);
        assert_eq!(spec.key_column, "id");
        assert_eq!(spec.column_rules[1].kind, ValueKind::Lang("en".into()));
    }

    #[test]
    fn duplicate_pair_names_line() {
        let e = parse_mapping(
            "subject = http://x.org/{id}\ntype = i40c:Object\nid = i40c:hasId\n\nid = i40c:hasId\n",
        )
        .unwrap_err();
        assert_eq!(e.line, 5);
        assert!(e.message.contains("line 3"), "{e}");
    }

    #[test]
    fn unknown_directive() {
        let e = parse_mapping("subject = http://x.org/{id}\nbase http://x.org/\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_mapping("frobnicate the id = i40c:hasId\n").unwrap_err();
        assert!(e.message.contains("unknown directive"));
    }

    #[test]
    fn undeclared_template_column() {
        let e = parse_mapping(
            "subject = http://x.org/{id}/{other}\ntype = i40c:Object\nid = i40c:hasId\n",
        )
        .unwrap_err();
        assert!(e.message.contains("other"), "{e}");
        assert_eq!(e.line, 1);
    }

    #[test]
    fn quoted_column_names() {
        let spec = parse_mapping(
            "subject = http://x.org/{id}\ntype = i40c:Object\nid = i40c:hasId\n\"type\" = rdfs:comment\n",
        )
        .unwrap();
        assert_eq!(spec.column_rules[1].column, "type");
    }

    #[test]
    fn motor_row_values() {
        let spec = parse_mapping(MOTOR).unwrap();
        let csv = "id,name,phase\n1501325,Motor control...,Single-phase\n";
        let out = ingest_csv(csv.as_bytes(), &spec).unwrap();
        assert_eq!(out.graph.len(), 4);
        assert!(out.diagnostics.is_empty());
        let expected = crate::parse_turtle(
            "@prefix i40c: <http://purl.org/eis/i40c/> .
             @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
             @prefix xsd: <http://www.w3.org/2001/XMLSchema#> .
             i40c:Object1501325 a i40c:Object ;
                 rdfs:label \"Motor control...\"@en ;
                 i40c:hasId \"1501325\"^^xsd:string ;
                 i40c:hasPhase \"Single-phase\"@en .",
        )
        .unwrap();
        assert_eq!(out.graph, expected);
    }

    #[test]
    fn empty_input_and_empty_keys() {
        let spec = parse_mapping(MOTOR).unwrap();
        let out = ingest_csv("id,name,phase\n".as_bytes(), &spec).unwrap();
        assert!(out.graph.is_empty());
        assert!(out.diagnostics.is_empty());

        let csv = "id,name,phase\n1,a,\n,b,x\n3,,y\n";
        let out = ingest_csv(csv.as_bytes(), &spec).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert_eq!(out.diagnostics.len(), 1);
        assert_eq!(out.diagnostics[0].row, 2);
        // empty cells are skipped silently
        assert_eq!(out.graph.len(), 3 + 3);
    }

    #[test]
    fn header_mismatch_lists_missing_columns() {
        let spec = parse_mapping(MOTOR).unwrap();
        let e = ingest_csv("id,label\n1,x\n".as_bytes(), &spec).unwrap_err();
        assert_eq!(
            e,
            IngestError::MissingColumns(vec!["name".into(), "phase".into()])
        );
    }

    #[test]
    fn reserved_characters_are_percent_encoded() {
        let spec = parse_mapping(MOTOR).unwrap();
        let out = ingest_csv("id,name,phase\na b/c?d#é,x,y\n".as_bytes(), &spec).unwrap();
        assert_eq!(
            out.rows[0].subject.as_str(),
            "http://purl.org/eis/i40c/Objecta%20b%2Fc%3Fd%23%C3%A9"
        );
    }

    #[test]
    fn shells_and_iri_templates() {
        let spec = parse_mapping(
            "subject = http://purl.org/eis/i40c/Object{id}
shell = http://purl.org/eis/i40c/Shell{id}
type = i40c:Component
id = i40c:hasId
img = i40c:image <http://example.org/img/{img}>
",
        )
        .unwrap();
        let out = ingest_csv("id,img\n7,m.jpg\n".as_bytes(), &spec).unwrap();
        assert_eq!(
            out.rows[0].shell.as_ref().map(Iri::as_str),
            Some("http://purl.org/eis/i40c/Shell7")
        );
        assert_eq!(out.graph.len(), 5);
        let report = crate::validate(&out.graph, crate::VocabularyDefinition::builtin());
        assert!(report.conforms(), "{report}");
    }
}

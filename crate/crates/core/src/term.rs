//! RDF terms and triples.
//!
//! Terms validate themselves at construction time, so every [`Triple`] that
//! exists is well formed: the predicate is an IRI and the subject is never a
//! literal.

use std::fmt;

use thiserror::Error;

pub mod ns {
    pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
    pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
    pub const DCTERMS: &str = "http://purl.org/dc/terms/";
    pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
    pub const SKOS: &str = "http://www.w3.org/2004/02/skos/core#";
    pub const I40C: &str = "http://purl.org/eis/i40c/";
    pub const IEC: &str = "http://purl.org/eis/iec-cdd/";

    pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
    pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
    pub const XSD_DATE: &str = "http://www.w3.org/2001/XMLSchema#date";
    pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
    pub const RDFS_COMMENT: &str = "http://www.w3.org/2000/01/rdf-schema#comment";
    pub const RDFS_SUBCLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
    pub const RDFS_CLASS: &str = "http://www.w3.org/2000/01/rdf-schema#Class";
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("IRI {0:?} is not absolute")]
    RelativeIri(String),
    #[error("IRI {0:?} contains a forbidden character")]
    BadIriChar(String),
    #[error("blank node label {0:?} is not valid")]
    BadBlankLabel(String),
    #[error("language tag {0:?} is not valid")]
    BadLanguageTag(String),
    #[error("language-tagged strings must carry a language tag")]
    MissingLanguage,
    #[error("subject of a triple cannot be a literal")]
    LiteralSubject,
    #[error("predicate of a triple must be an IRI")]
    NonIriPredicate,
}

/// An absolute IRI.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(String);

impl Iri {
    pub fn new(iri: impl Into<String>) -> Result<Self, TermError> {
        let iri = iri.into();
        if iri
            .chars()
            .any(|c| c.is_control() || c.is_whitespace() || "<>\"{}|^`\\".contains(c))
        {
            return Err(TermError::BadIriChar(iri));
        }
        if !has_scheme(&iri) {
            return Err(TermError::RelativeIri(iri));
        }
        Ok(Self(iri))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    /// True for `http:` and `https:` IRIs (scheme compared case-insensitively).
    pub fn is_http(&self) -> bool {
        let scheme = self.0.split(':').next().unwrap_or_default();
        (scheme.eq_ignore_ascii_case("http") || scheme.eq_ignore_ascii_case("https"))
            && self.0[scheme.len()..].starts_with("://")
    }
}

fn has_scheme(s: &str) -> bool {
    let Some(colon) = s.find(':') else {
        return false;
    };
    let scheme = &s[..colon];
    let mut chars = scheme.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

/// A document-scoped blank node label (without the `_:` prefix).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlankNode(String);

impl BlankNode {
    pub fn new(label: impl Into<String>) -> Result<Self, TermError> {
        let label = label.into();
        if !is_blank_label(&label) {
            return Err(TermError::BadBlankLabel(label));
        }
        Ok(Self(label))
    }

    pub fn label(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_blank_label(label: &str) -> bool {
    let mut chars = label.chars();
    matches!(chars.next(), Some(c) if c.is_alphanumeric() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !label.ends_with('.')
}

impl fmt::Display for BlankNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_:{}", self.0)
    }
}

/// An RDF literal. Equality is lexical: `"1.0"` and `"1.00"` differ.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    lexical: String,
    datatype: Iri,
    language: Option<String>,
}

impl Literal {
    /// A plain string, datatype `xsd:string`.
    pub fn string(lexical: impl Into<String>) -> Self {
        Self {
            lexical: lexical.into(),
            datatype: Iri(ns::XSD_STRING.to_owned()),
            language: None,
        }
    }

    /// A language-tagged string. The tag is stored lowercase.
    pub fn lang(lexical: impl Into<String>, tag: &str) -> Result<Self, TermError> {
        if !is_language_tag(tag) {
            return Err(TermError::BadLanguageTag(tag.to_owned()));
        }
        Ok(Self {
            lexical: lexical.into(),
            datatype: Iri(ns::RDF_LANG_STRING.to_owned()),
            language: Some(tag.to_ascii_lowercase()),
        })
    }

    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Result<Self, TermError> {
        if datatype.as_str() == ns::RDF_LANG_STRING {
            return Err(TermError::MissingLanguage);
        }
        Ok(Self {
            lexical: lexical.into(),
            datatype,
            language: None,
        })
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> &Iri {
        &self.datatype
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }

    pub fn is_plain_string(&self) -> bool {
        self.language.is_none() && self.datatype.as_str() == ns::XSD_STRING
    }
}

pub(crate) fn is_language_tag(tag: &str) -> bool {
    let mut parts = tag.split('-');
    let first = parts.next().unwrap_or_default();
    !first.is_empty()
        && first.len() <= 8
        && first.chars().all(|c| c.is_ascii_alphabetic())
        && parts
            .all(|p| !p.is_empty() && p.len() <= 8 && p.chars().all(|c| c.is_ascii_alphanumeric()))
}

/// Writes `s` as the body of a double-quoted Turtle/N-Triples string.
pub(crate) fn write_escaped(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\r' => f.write_str("\\r")?,
            '\t' => f.write_str("\\t")?,
            c if c.is_control() => write!(f, "\\u{:04X}", c as u32)?,
            c => f.write_char(c)?,
        }
    }
    Ok(())
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("\"")?;
        write_escaped(f, &self.lexical)?;
        f.write_str("\"")?;
        match &self.language {
            Some(lang) => write!(f, "@{lang}"),
            None if self.is_plain_string() => Ok(()),
            None => write!(f, "^^{}", self.datatype),
        }
    }
}

/// IRI, blank node or literal. Displays in N-Triples form.
///
/// Ordering is by kind (IRI, blank node, literal) and then by fields; every
/// index and result list in the crate iterates in this order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Iri),
    BlankNode(BlankNode),
    Literal(Literal),
}

impl Term {
    pub fn iri(iri: impl Into<String>) -> Result<Self, TermError> {
        Iri::new(iri).map(Term::Iri)
    }

    pub fn blank(label: impl Into<String>) -> Result<Self, TermError> {
        BlankNode::new(label).map(Term::BlankNode)
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            _ => None,
        }
    }

    pub fn as_blank(&self) -> Option<&BlankNode> {
        match self {
            Term::BlankNode(b) => Some(b),
            _ => None,
        }
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Term::BlankNode(_))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    /// Shorthand for IRIs known to be valid, such as vocabulary constants.
    ///
    /// Panics if `iri` is not absolute.
    pub fn named(iri: &str) -> Self {
        Term::Iri(Iri::new(iri).expect("constant IRI must be absolute"))
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<BlankNode> for Term {
    fn from(b: BlankNode) -> Self {
        Term::BlankNode(b)
    }
}

impl From<Literal> for Term {
    fn from(l: Literal) -> Self {
        Term::Literal(l)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(i) => i.fmt(f),
            Term::BlankNode(b) => b.fmt(f),
            Term::Literal(l) => l.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    subject: Term,
    predicate: Term,
    object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Self, TermError> {
        if subject.is_literal() {
            return Err(TermError::LiteralSubject);
        }
        if !predicate.is_iri() {
            return Err(TermError::NonIriPredicate);
        }
        Ok(Self {
            subject,
            predicate,
            object,
        })
    }

    pub(crate) fn from_parts_unchecked(subject: Term, predicate: Term, object: Term) -> Self {
        debug_assert!(!subject.is_literal() && predicate.is_iri());
        Self {
            subject,
            predicate,
            object,
        }
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> &Term {
        &self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }

    pub fn into_parts(self) -> (Term, Term, Term) {
        (self.subject, self.predicate, self.object)
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_must_be_absolute() {
        assert!(Iri::new("http://purl.org/eis/i40c/Actuator").is_ok());
        assert!(Iri::new("urn:x:1").is_ok());
        assert_eq!(
            Iri::new("Actuator"),
            Err(TermError::RelativeIri("Actuator".into()))
        );
        assert!(Iri::new("1http://x").is_err());
        assert!(Iri::new("http://a b").is_err());
    }

    #[test]
    fn http_detection() {
        assert!(Iri::new("http://x/y").unwrap().is_http());
        assert!(Iri::new("HTTPS://x/y").unwrap().is_http());
        assert!(!Iri::new("urn:http://x").unwrap().is_http());
        assert!(!Iri::new("ftp://x").unwrap().is_http());
    }

    #[test]
    fn language_tags_normalize_to_lowercase() {
        let a = Literal::lang("Aktor", "DE").unwrap();
        let b = Literal::lang("Aktor", "de").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.language(), Some("de"));
        assert_eq!(a.datatype().as_str(), ns::RDF_LANG_STRING);
        assert!(Literal::lang("x", "en-GB").is_ok());
        assert!(Literal::lang("x", "").is_err());
        assert!(Literal::lang("x", "e n").is_err());
    }

    #[test]
    fn untyped_literal_is_xsd_string() {
        let typed = Literal::typed("AdminShell1", Iri::new(ns::XSD_STRING).unwrap()).unwrap();
        assert_eq!(Literal::string("AdminShell1"), typed);
        assert!(Literal::typed("x", Iri::new(ns::RDF_LANG_STRING).unwrap()).is_err());
    }

    #[test]
    fn literal_equality_is_lexical() {
        let dec = Iri::new(format!("{}decimal", ns::XSD)).unwrap();
        assert_ne!(
            Literal::typed("1.0", dec.clone()).unwrap(),
            Literal::typed("1.00", dec).unwrap()
        );
    }

    #[test]
    fn triple_well_formedness() {
        let s = Term::named("http://x/s");
        let lit = Term::Literal(Literal::string("v"));
        assert_eq!(
            Triple::new(lit.clone(), s.clone(), s.clone()),
            Err(TermError::LiteralSubject)
        );
        assert_eq!(
            Triple::new(s.clone(), Term::blank("b").unwrap(), lit.clone()),
            Err(TermError::NonIriPredicate)
        );
        assert!(Triple::new(Term::blank("b").unwrap(), s, lit).is_ok());
    }

    #[test]
    fn display_escapes() {
        let lit = Literal::string("a\"b\nc\\");
        assert_eq!(lit.to_string(), r#""a\"b\nc\\""#);
        let date = Literal::typed("2015-11-02", Iri::new(ns::XSD_DATE).unwrap()).unwrap();
        assert_eq!(
            date.to_string(),
            "\"2015-11-02\"^^<http://www.w3.org/2001/XMLSchema#date>"
        );
    }
}

//! Reader and writer for the Turtle subset used by shell documents.
//!
//! Supported: `@prefix`/`PREFIX` directives, `a`, predicate lists with `;`,
//! object lists with `,`, IRIs, prefixed names, plain, language-tagged and
//! typed string literals, `_:label` and `[]` blank nodes, `#` comments.
//! Collections, nested property lists and numeric/boolean shorthand are not.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::graph::{Graph, PrefixMap};
use crate::syntax::{
    finish_literal, prefix_body, resolve_iri, resolve_pname, tokenize, unexpected, Cursor,
    DiagnosticCode, Mode, ParseDiagnostic, Tok,
};
use crate::term::{ns, write_escaped, Iri, Literal, Term, Triple};

/// Parses a Turtle document. On failure returns every diagnostic found,
/// recovering at statement boundaries, and no graph.
pub fn parse_turtle(text: &str) -> Result<Graph, Vec<ParseDiagnostic>> {
    let (tokens, mut diagnostics, end) = tokenize(text, Mode::Turtle);
    let mut cur = Cursor::new(tokens, end);
    cur.reserve_blank_labels();
    let mut graph = Graph::new();

    while !cur.at_end() {
        let start = cur.i;
        if let Err(d) = statement(&mut cur, &mut graph) {
            let ended_on_dot = cur.i > start && cur.tokens[cur.i - 1].tok == Tok::Dot;
            if !ended_on_dot {
                cur.skip_statement();
            }
            // Lexical errors inside the statement were already reported.
            if !cur.tokens[start..cur.i]
                .iter()
                .any(|t| t.tok == Tok::Invalid)
            {
                diagnostics.push(d);
            }
        }
    }

    if diagnostics.is_empty() {
        Ok(graph)
    } else {
        diagnostics.sort_by_key(|d| (d.line, d.column));
        Err(diagnostics)
    }
}

fn statement(cur: &mut Cursor, graph: &mut Graph) -> Result<(), ParseDiagnostic> {
    let first = cur
        .peek()
        .cloned()
        .expect("caller checked for end of input");
    match &first.tok {
        Tok::AtPrefix => {
            cur.i += 1;
            prefix_body(cur, graph.prefixes_mut(), true)
        }
        Tok::Word(w) if w.eq_ignore_ascii_case("prefix") => {
            cur.i += 1;
            prefix_body(cur, graph.prefixes_mut(), false)
        }
        _ => {
            let mut triples = Vec::new();
            let subject = subject(cur, graph.prefixes())?;
            predicate_object_list(cur, graph.prefixes(), &subject, &mut triples)?;
            match cur.next() {
                Some(t) if t.tok == Tok::Dot => {}
                Some(t) => return Err(unexpected(&t, "';', ',' or '.'")),
                None => {
                    return Err(first.pos.diag(
                        DiagnosticCode::UnterminatedStatement,
                        "statement is missing its final '.'",
                    ))
                }
            }
            graph.extend(triples);
            Ok(())
        }
    }
}

fn subject(cur: &mut Cursor, prefixes: &PrefixMap) -> Result<Term, ParseDiagnostic> {
    let t = cur.next().expect("caller checked for end of input");
    match &t.tok {
        Tok::IriRef(body) => resolve_iri(body, t.pos).map(Term::Iri),
        Tok::PName(p, l) => resolve_pname(prefixes, p, l, t.pos).map(Term::Iri),
        Tok::Blank(label) => Ok(Term::blank(label.clone()).expect("lexer validated label")),
        Tok::Anon => Ok(cur.fresh_blank()),
        Tok::Str(_) => Err(t.pos.diag(
            DiagnosticCode::UnexpectedToken,
            "a literal cannot be a subject",
        )),
        _ => Err(unexpected(&t, "subject")),
    }
}

fn verb(cur: &mut Cursor, prefixes: &PrefixMap) -> Result<Term, ParseDiagnostic> {
    let t = next_or_unterminated(cur, "predicate")?;
    match &t.tok {
        Tok::Word(w) if w == "a" => Ok(Term::named(ns::RDF_TYPE)),
        Tok::IriRef(body) => resolve_iri(body, t.pos).map(Term::Iri),
        Tok::PName(p, l) => resolve_pname(prefixes, p, l, t.pos).map(Term::Iri),
        _ => Err(unexpected(&t, "predicate")),
    }
}

fn object(cur: &mut Cursor, prefixes: &PrefixMap) -> Result<Term, ParseDiagnostic> {
    let t = next_or_unterminated(cur, "object")?;
    match &t.tok {
        Tok::IriRef(body) => resolve_iri(body, t.pos).map(Term::Iri),
        Tok::PName(p, l) => resolve_pname(prefixes, p, l, t.pos).map(Term::Iri),
        Tok::Blank(label) => Ok(Term::blank(label.clone()).expect("lexer validated label")),
        Tok::Anon => Ok(cur.fresh_blank()),
        Tok::Str(s) => finish_literal(cur, prefixes, s.clone()).map(Term::Literal),
        _ => Err(unexpected(&t, "object")),
    }
}

fn next_or_unterminated(
    cur: &mut Cursor,
    what: &str,
) -> Result<crate::syntax::Token, ParseDiagnostic> {
    cur.next().ok_or_else(|| {
        cur.end.diag(
            DiagnosticCode::UnterminatedStatement,
            format!("input ended, expected {what}"),
        )
    })
}

fn predicate_object_list(
    cur: &mut Cursor,
    prefixes: &PrefixMap,
    subject: &Term,
    out: &mut Vec<Triple>,
) -> Result<(), ParseDiagnostic> {
    loop {
        let predicate = verb(cur, prefixes)?;
        loop {
            let o = object(cur, prefixes)?;
            out.push(
                Triple::new(subject.clone(), predicate.clone(), o)
                    .expect("subject and predicate kinds are checked by the grammar"),
            );
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
        if !cur.eat(&Tok::Semicolon) {
            return Ok(());
        }
        // Repeated or trailing ';' is allowed.
        while cur.eat(&Tok::Semicolon) {}
        if cur.peek().is_none_or(|t| t.tok == Tok::Dot) {
            return Ok(());
        }
    }
}

/// Renders one term for Turtle output, compacting IRIs where possible.
pub(crate) fn render_term(term: &Term, prefixes: &PrefixMap) -> String {
    match term {
        Term::Iri(iri) => render_iri(iri, prefixes),
        Term::BlankNode(b) => b.to_string(),
        Term::Literal(lit) => render_literal(lit, prefixes),
    }
}

fn render_iri(iri: &Iri, prefixes: &PrefixMap) -> String {
    prefixes.compact(iri).unwrap_or_else(|| iri.to_string())
}

fn render_literal(lit: &Literal, prefixes: &PrefixMap) -> String {
    let mut s = String::from("\"");
    write_escaped(&mut s, lit.lexical()).expect("writing to a String cannot fail");
    s.push('"');
    if let Some(lang) = lit.language() {
        let _ = write!(s, "@{lang}");
    } else if !lit.is_plain_string() {
        s.push_str("^^");
        s.push_str(&render_iri(lit.datatype(), prefixes));
    }
    s
}

/// Serializes `graph`: the prefix block sorted by label, then one block per
/// subject in lexicographic order, `a` first, other predicates and objects
/// sorted by their rendered text.
pub fn serialize_turtle(graph: &Graph) -> String {
    let prefixes = graph.prefixes();
    let mut out = String::new();
    for (label, ns) in prefixes.iter() {
        let _ = writeln!(out, "@prefix {label}: {ns} .");
    }

    let rdf_type = Term::named(ns::RDF_TYPE);
    let mut subjects: BTreeMap<String, &Term> = BTreeMap::new();
    for s in graph.subject_terms() {
        subjects.insert(render_term(s, prefixes), s);
    }

    for (rendered_subject, subject) in subjects {
        let mut predicates: Vec<(bool, String, Vec<String>)> = graph
            .predicates_of(subject)
            .map(|p| {
                let is_type = *p == rdf_type;
                let name = if is_type {
                    "a".to_owned()
                } else {
                    render_term(p, prefixes)
                };
                let mut objects: Vec<String> = graph
                    .objects(subject, p)
                    .map(|o| render_term(o, prefixes))
                    .collect();
                objects.sort();
                (!is_type, name, objects)
            })
            .collect();
        predicates.sort();

        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&rendered_subject);
        let last = predicates.len() - 1;
        for (k, (_, name, objects)) in predicates.iter().enumerate() {
            out.push_str(if k == 0 { " " } else { "    " });
            out.push_str(name);
            out.push(' ');
            out.push_str(&objects.join(" , "));
            out.push_str(if k == last { " .\n" } else { " ;\n" });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i40c(local: &str) -> Term {
        Term::named(&format!("{}{local}", ns::I40C))
    }

    #[test]
    fn empty_document() {
        assert!(parse_turtle("").unwrap().is_empty());
        assert!(parse_turtle("  # only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn basic_statement_forms() {
        let g = parse_turtle(
            "@prefix i40c: <http://purl.org/eis/i40c/> .\n\
             PREFIX x: <http://x/>\n\
             i40c:a a i40c:B , i40c:C ; x:p \"v\"@EN ; x:q _:n ;; .\n\
             _:n x:r [] .\n",
        )
        .unwrap();
        assert_eq!(g.len(), 5);
        let en = Term::Literal(Literal::lang("v", "en").unwrap());
        assert_eq!(
            g.objects(&i40c("a"), &Term::named("http://x/p")).next(),
            Some(&en)
        );
    }

    #[test]
    fn one_diagnostic_per_bad_statement() {
        let src = "@prefix i40c: <http://purl.org/eis/i40c/> .\n\
                   i40c:a i40c:p foo:b .\n\
                   i40c:a i40c:p i40c:c .\n\
                   i40c:a i40c:p \"x\"^^bar:t .\n";
        let diags = parse_turtle(src).unwrap_err();
        assert_eq!(diags.len(), 2);
        assert_eq!(diags[0].code, DiagnosticCode::UnknownPrefix);
        assert_eq!((diags[0].line, diags[0].column), (2, 15));
        assert_eq!(diags[1].line, 4);
    }

    #[test]
    fn unterminated_statement() {
        let diags = parse_turtle("<http://x/a> <http://x/p> <http://x/b>").unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagnosticCode::UnterminatedStatement);
        assert_eq!((diags[0].line, diags[0].column), (1, 1));
    }

    #[test]
    fn relative_iri_is_rejected() {
        let diags = parse_turtle("<a> <http://x/p> <http://x/b> .").unwrap_err();
        assert_eq!(diags[0].code, DiagnosticCode::BadIri);
    }

    #[test]
    fn literal_subject_is_rejected() {
        let diags = parse_turtle("\"s\" <http://x/p> <http://x/b> .").unwrap_err();
        assert_eq!(diags[0].code, DiagnosticCode::UnexpectedToken);
    }

    #[test]
    fn anon_labels_avoid_explicit_ones() {
        let g = parse_turtle("[] <http://x/p> _:anon0 .").unwrap();
        assert_eq!(g.blank_labels().len(), 2);
    }

    #[test]
    fn serialize_only_prefix() {
        let mut g = Graph::new();
        g.prefixes_mut().insert("i40c", Iri::new(ns::I40C).unwrap());
        assert_eq!(
            serialize_turtle(&g),
            "@prefix i40c: <http://purl.org/eis/i40c/> .\n"
        );
    }

    #[test]
    fn serialize_escaping_round_trip() {
        let mut g = Graph::new();
        g.insert(
            Triple::new(
                i40c("s"),
                i40c("p"),
                Term::Literal(Literal::string("a\"b\nc")),
            )
            .unwrap(),
        );
        let text = serialize_turtle(&g);
        assert!(text.contains(r#""a\"b\nc""#));
        assert_eq!(parse_turtle(&text).unwrap(), g);
    }

    #[test]
    fn serialize_layout() {
        let g = parse_turtle(
            "@prefix i40c: <http://purl.org/eis/i40c/> .\n\
             @prefix xsd: <http://www.w3.org/2001/XMLSchema#> .\n\
             i40c:b i40c:z \"2\" ; a i40c:T ; i40c:d \"2015-11-02\"^^xsd:date .\n\
             i40c:a i40c:p i40c:y , i40c:x .\n",
        )
        .unwrap();
        let expected = "@prefix i40c: <http://purl.org/eis/i40c/> .\n\
                        @prefix xsd: <http://www.w3.org/2001/XMLSchema#> .\n\
                        \n\
                        i40c:a i40c:p i40c:x , i40c:y .\n\
                        \n\
                        i40c:b a i40c:T ;\n    \
                        i40c:d \"2015-11-02\"^^xsd:date ;\n    \
                        i40c:z \"2\" .\n";
        assert_eq!(serialize_turtle(&g), expected);
    }
}

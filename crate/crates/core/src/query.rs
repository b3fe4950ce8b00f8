//! SELECT and CONSTRUCT queries over basic graph patterns.
//!
//! Literal matching follows RDF term equality, including the language tag:
//! `"Single-phase"` does not match `"Single-phase"@en`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{json, Map, Value};

use crate::graph::{Graph, PrefixMap};
use crate::syntax::{
    finish_literal, prefix_body, resolve_iri, resolve_pname, tokenize, unexpected, Cursor,
    DiagnosticCode, Mode, ParseDiagnostic, Pos, Tok,
};
use crate::term::{ns, Term, Triple};

/// Keywords of SPARQL 1.1 that this evaluator deliberately rejects.
const UNSUPPORTED: &[&str] = &[
    "OPTIONAL", "FILTER", "UNION", "MINUS", "BIND", "VALUES", "SERVICE", "GRAPH", "FROM", "NAMED",
    "LIMIT", "OFFSET", "ORDER", "GROUP", "HAVING", "REDUCED", "ASK", "DESCRIBE", "BASE", "INSERT",
    "DELETE", "LOAD", "CLEAR", "DROP", "CREATE", "WITH", "USING",
];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// Blank nodes in a WHERE clause act as variables that are never projected.
    pub fn is_anonymous(&self) -> bool {
        self.0.starts_with("_:")
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PatternTerm {
    Var(Variable),
    Term(Term),
}

impl PatternTerm {
    pub fn var(name: &str) -> Self {
        PatternTerm::Var(Variable::new(name))
    }

    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }

    fn resolve<'a>(&'a self, binding: &'a BindingSet) -> Option<&'a Term> {
        match self {
            PatternTerm::Term(t) => Some(t),
            PatternTerm::Var(v) => binding.get(v.name()),
        }
    }
}

impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        PatternTerm::Term(t)
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Var(v) => v.fmt(f),
            PatternTerm::Term(t) => t.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(
        subject: impl Into<PatternTerm>,
        predicate: impl Into<PatternTerm>,
        object: impl Into<PatternTerm>,
    ) -> Self {
        Self {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }

    pub fn positions(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.positions().into_iter().filter_map(PatternTerm::as_var)
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryForm {
    Select { projection: Vec<Variable> },
    Construct { template: Vec<TriplePattern> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryAst {
    pub prefixes: PrefixMap,
    pub form: QueryForm,
    pub pattern: Vec<TriplePattern>,
}

/// One solution: variable name to term.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BindingSet(BTreeMap<String, Term>);

impl BindingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn insert(&mut self, var: impl Into<String>, term: Term) -> Option<Term> {
        self.0.insert(var.into(), term)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Term)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(String, Term)> for BindingSet {
    fn from_iter<I: IntoIterator<Item = (String, Term)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Parses the supported query subset. Unsupported SPARQL keywords produce an
/// [`DiagnosticCode::UnsupportedKeyword`] diagnostic naming the keyword.
pub fn parse_query(text: &str) -> Result<QueryAst, Vec<ParseDiagnostic>> {
    let (tokens, lexical, end) = tokenize(text, Mode::Query);
    let unsupported: Vec<ParseDiagnostic> = tokens
        .iter()
        .filter_map(|t| match &t.tok {
            Tok::Word(w) if UNSUPPORTED.contains(&w.to_ascii_uppercase().as_str()) => {
                Some(t.pos.diag(
                    DiagnosticCode::UnsupportedKeyword,
                    format!("unsupported keyword {}", w.to_ascii_uppercase()),
                ))
            }
            _ => None,
        })
        .collect();
    if !unsupported.is_empty() {
        return Err(unsupported);
    }
    if !lexical.is_empty() {
        return Err(lexical);
    }
    let mut cur = Cursor::new(tokens, end);
    query(&mut cur).map_err(|d| vec![d])
}

fn is_word(t: Option<&crate::syntax::Token>, word: &str) -> bool {
    matches!(t, Some(tok) if matches!(&tok.tok, Tok::Word(w) if w.eq_ignore_ascii_case(word)))
}

fn query(cur: &mut Cursor) -> Result<QueryAst, ParseDiagnostic> {
    let mut prefixes = PrefixMap::new();
    loop {
        if cur.eat(&Tok::AtPrefix) {
            prefix_body(cur, &mut prefixes, true)?;
        } else if is_word(cur.peek(), "prefix") {
            cur.i += 1;
            prefix_body(cur, &mut prefixes, false)?;
        } else {
            break;
        }
    }

    let form_tok = cur.next().ok_or_else(|| {
        cur.end.diag(
            DiagnosticCode::UnterminatedStatement,
            "expected SELECT or CONSTRUCT",
        )
    })?;
    let mut projection: Option<(Vec<(Variable, Pos)>, bool)> = None;
    let mut template = None;
    match &form_tok.tok {
        Tok::Word(w) if w.eq_ignore_ascii_case("select") => {
            if is_word(cur.peek(), "distinct") {
                // Solutions are always distinct.
                cur.i += 1;
            }
            if cur.eat(&Tok::Star) {
                projection = Some((Vec::new(), true));
            } else {
                let mut vars = Vec::new();
                while let Some(t) = cur.peek() {
                    let Tok::Var(name) = &t.tok else { break };
                    vars.push((Variable::new(name.clone()), t.pos));
                    cur.i += 1;
                }
                if vars.is_empty() {
                    let pos = cur.pos();
                    return Err(match cur.peek() {
                        Some(t) => unexpected(t, "projected variable or '*'"),
                        None => pos.diag(
                            DiagnosticCode::UnterminatedStatement,
                            "expected projected variable or '*'",
                        ),
                    });
                }
                projection = Some((vars, false));
            }
        }
        Tok::Word(w) if w.eq_ignore_ascii_case("construct") => {
            template = Some(group(cur, &prefixes, false)?);
        }
        _ => return Err(unexpected(&form_tok, "SELECT or CONSTRUCT")),
    }

    if is_word(cur.peek(), "where") {
        cur.i += 1;
    }
    let pattern = group(cur, &prefixes, true)?;
    if let Some(t) = cur.peek() {
        return Err(unexpected(t, "end of query"));
    }

    let in_where: BTreeSet<&Variable> = pattern.iter().flat_map(|p| p.variables()).collect();
    let form = match (projection, template) {
        (Some((_, true)), _) => {
            let mut seen = BTreeSet::new();
            let projection = pattern
                .iter()
                .flat_map(|p| p.variables())
                .filter(|v| !v.is_anonymous() && seen.insert((*v).clone()))
                .cloned()
                .collect();
            QueryForm::Select { projection }
        }
        (Some((vars, false)), _) => {
            for (v, pos) in &vars {
                if !in_where.contains(v) {
                    return Err(pos.diag(
                        DiagnosticCode::UnexpectedToken,
                        format!("variable {v} does not occur in WHERE"),
                    ));
                }
            }
            QueryForm::Select {
                projection: vars.into_iter().map(|(v, _)| v).collect(),
            }
        }
        (None, Some(template)) => {
            for p in &template {
                if let Some(v) = p.variables().find(|v| !in_where.contains(v)) {
                    return Err(form_tok.pos.diag(
                        DiagnosticCode::UnexpectedToken,
                        format!("template variable {v} does not occur in WHERE"),
                    ));
                }
            }
            QueryForm::Construct { template }
        }
        (None, None) => unreachable!("one query form is always parsed"),
    };
    Ok(QueryAst {
        prefixes,
        form,
        pattern,
    })
}

/// `{ triples }`. In a WHERE group blank nodes become anonymous variables.
fn group(
    cur: &mut Cursor,
    prefixes: &PrefixMap,
    is_where: bool,
) -> Result<Vec<TriplePattern>, ParseDiagnostic> {
    cur.expect(&Tok::LBrace, "'{'")?;
    let mut out = Vec::new();
    loop {
        if cur.eat(&Tok::RBrace) {
            return Ok(out);
        }
        let subject = pattern_term(cur, prefixes, is_where, "subject")?;
        loop {
            let predicate = pattern_term(cur, prefixes, is_where, "predicate")?;
            if let PatternTerm::Term(t) = &predicate {
                if !t.is_iri() {
                    return Err(cur.tokens[cur.i - 1].pos.diag(
                        DiagnosticCode::UnexpectedToken,
                        "predicate must be an IRI or variable",
                    ));
                }
            }
            loop {
                let object = pattern_term(cur, prefixes, is_where, "object")?;
                out.push(TriplePattern {
                    subject: subject.clone(),
                    predicate: predicate.clone(),
                    object,
                });
                if !cur.eat(&Tok::Comma) {
                    break;
                }
            }
            if !cur.eat(&Tok::Semicolon) {
                break;
            }
            while cur.eat(&Tok::Semicolon) {}
            if cur
                .peek()
                .is_none_or(|t| matches!(t.tok, Tok::Dot | Tok::RBrace))
            {
                break;
            }
        }
        if cur.eat(&Tok::Dot) {
            continue;
        }
        match cur.peek() {
            Some(t) if t.tok == Tok::RBrace => continue,
            Some(t) => return Err(unexpected(t, "'.', ';', ',' or '}'")),
            None => {
                return Err(cur.end.diag(
                    DiagnosticCode::UnterminatedStatement,
                    "input ended, expected '}'",
                ))
            }
        }
    }
}

fn pattern_term(
    cur: &mut Cursor,
    prefixes: &PrefixMap,
    is_where: bool,
    what: &str,
) -> Result<PatternTerm, ParseDiagnostic> {
    let t = cur.next().ok_or_else(|| {
        cur.end.diag(
            DiagnosticCode::UnterminatedStatement,
            format!("input ended, expected {what}"),
        )
    })?;
    Ok(match &t.tok {
        Tok::Var(v) => PatternTerm::var(v),
        Tok::Word(w) if w == "a" && what == "predicate" => {
            PatternTerm::Term(Term::named(ns::RDF_TYPE))
        }
        Tok::IriRef(body) => PatternTerm::Term(Term::Iri(resolve_iri(body, t.pos)?)),
        Tok::PName(p, l) => PatternTerm::Term(Term::Iri(resolve_pname(prefixes, p, l, t.pos)?)),
        Tok::Blank(label) if is_where => PatternTerm::Var(Variable::new(format!("_:{label}"))),
        Tok::Blank(label) => {
            PatternTerm::Term(Term::blank(label.clone()).expect("lexer validated label"))
        }
        Tok::Anon if is_where => {
            let fresh = cur.fresh_blank();
            PatternTerm::Var(Variable::new(fresh.to_string()))
        }
        Tok::Anon => PatternTerm::Term(cur.fresh_blank()),
        Tok::Str(s) => PatternTerm::Term(Term::Literal(finish_literal(cur, prefixes, s.clone())?)),
        _ => return Err(unexpected(&t, what)),
    })
}

/// Extends `binding` with the positions of `triple` matched against `pattern`.
/// Fails when a variable repeated within the pattern would bind two terms.
fn extend(binding: &BindingSet, pattern: &TriplePattern, triple: &Triple) -> Option<BindingSet> {
    let mut out = binding.clone();
    for (pos, term) in
        pattern
            .positions()
            .into_iter()
            .zip([triple.subject(), triple.predicate(), triple.object()])
    {
        if let PatternTerm::Var(v) = pos {
            match out.get(v.name()) {
                Some(existing) if existing != term => return None,
                Some(_) => {}
                None => {
                    out.insert(v.name(), term.clone());
                }
            }
        }
    }
    Some(out)
}

/// All solutions of the conjunctive pattern, sorted.
///
/// Patterns are joined greedily: at each step the remaining pattern with the
/// most positions bound (constants plus variables bound by earlier steps) goes
/// next, ties broken by text order.
pub fn eval_bgp(graph: &Graph, patterns: &[TriplePattern]) -> Vec<BindingSet> {
    let mut solutions = vec![BindingSet::new()];
    let mut remaining: Vec<&TriplePattern> = patterns.iter().collect();
    let mut bound: BTreeSet<&Variable> = BTreeSet::new();

    while !remaining.is_empty() && !solutions.is_empty() {
        let score = |p: &TriplePattern| {
            p.positions()
                .iter()
                .filter(|t| match t {
                    PatternTerm::Term(_) => true,
                    PatternTerm::Var(v) => bound.contains(v),
                })
                .count()
        };
        let (idx, _) = remaining
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| score(a).cmp(&score(b)).then(j.cmp(i)))
            .expect("remaining is not empty");
        let pattern = remaining.remove(idx);

        let mut next = Vec::new();
        for binding in &solutions {
            let s = pattern.subject.resolve(binding);
            let p = pattern.predicate.resolve(binding);
            let o = pattern.object.resolve(binding);
            for triple in graph.match_pattern(s, p, o) {
                if let Some(extended) = extend(binding, pattern, &triple) {
                    next.push(extended);
                }
            }
        }
        solutions = next;
        bound.extend(pattern.variables());
    }
    solutions.sort();
    solutions.dedup();
    solutions
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectResult {
    pub vars: Vec<Variable>,
    pub rows: Vec<BindingSet>,
}

impl SelectResult {
    /// `{"vars": [...], "rows": [{var: {"type", "value", "lang"?, "datatype"?}}]}`
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (var, term) in row.iter() {
                    obj.insert(var.to_owned(), term_json(term));
                }
                Value::Object(obj)
            })
            .collect();
        json!({
            "vars": self.vars.iter().map(Variable::name).collect::<Vec<_>>(),
            "rows": rows,
        })
    }
}

pub fn term_json(term: &Term) -> Value {
    match term {
        Term::Iri(i) => json!({"type": "iri", "value": i.as_str()}),
        Term::BlankNode(b) => json!({"type": "bnode", "value": b.label()}),
        Term::Literal(l) => {
            let mut obj = Map::new();
            obj.insert("type".into(), json!("literal"));
            obj.insert("value".into(), json!(l.lexical()));
            if let Some(lang) = l.language() {
                obj.insert("lang".into(), json!(lang));
            } else if !l.is_plain_string() {
                obj.insert("datatype".into(), json!(l.datatype().as_str()));
            }
            Value::Object(obj)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryResult {
    Solutions(SelectResult),
    Graph(Graph),
}

pub fn eval(graph: &Graph, query: &QueryAst) -> QueryResult {
    let solutions = eval_bgp(graph, &query.pattern);
    match &query.form {
        QueryForm::Select { projection } => {
            let rows: BTreeSet<BindingSet> = solutions
                .iter()
                .map(|s| {
                    projection
                        .iter()
                        .filter_map(|v| s.get(v.name()).map(|t| (v.name().to_owned(), t.clone())))
                        .collect()
                })
                .collect();
            QueryResult::Solutions(SelectResult {
                vars: projection.clone(),
                rows: rows.into_iter().collect(),
            })
        }
        QueryForm::Construct { template } => {
            let mut prefixes = query.prefixes.clone();
            prefixes.merge_missing(graph.prefixes());
            let mut out = Graph::with_prefixes(prefixes);
            for (i, solution) in solutions.iter().enumerate() {
                for pattern in template {
                    if let Some(t) = instantiate(pattern, solution, i) {
                        out.insert(t);
                    }
                }
            }
            QueryResult::Graph(out)
        }
    }
}

/// Template blank nodes are fresh per solution. Returns `None` for unbound
/// variables and for results that are not valid triples.
fn instantiate(pattern: &TriplePattern, solution: &BindingSet, index: usize) -> Option<Triple> {
    let term = |p: &PatternTerm| -> Option<Term> {
        match p {
            PatternTerm::Var(v) => solution.get(v.name()).cloned(),
            PatternTerm::Term(Term::BlankNode(b)) => {
                Term::blank(format!("c{index}x{}", b.label())).ok()
            }
            PatternTerm::Term(t) => Some(t.clone()),
        }
    };
    Triple::new(
        term(&pattern.subject)?,
        term(&pattern.predicate)?,
        term(&pattern.object)?,
    )
    .ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Literal;
    use crate::turtle::parse_turtle;

    const I40C: &str = "PREFIX i40c: <http://purl.org/eis/i40c/>\n";

    #[test]
    fn select_one_pattern() {
        let q = parse_query(&format!("{I40C}SELECT ?x WHERE {{ ?x a i40c:Object . }}")).unwrap();
        assert_eq!(q.pattern.len(), 1);
        assert!(matches!(q.form, QueryForm::Select { ref projection } if projection.len() == 1));
    }

    #[test]
    fn optional_is_unsupported() {
        let d = parse_query(&format!(
            "{I40C}SELECT ?x WHERE {{ ?x a i40c:Object . OPTIONAL {{ ?x i40c:hasId ?id }} }}"
        ))
        .unwrap_err();
        assert_eq!(d[0].code, DiagnosticCode::UnsupportedKeyword);
        assert_eq!(d[0].message, "unsupported keyword OPTIONAL");
        assert_eq!((d[0].line, d[0].column), (2, 38));
    }

    #[test]
    fn projection_must_occur_in_where() {
        let d = parse_query(&format!("{I40C}SELECT ?y WHERE {{ ?x a i40c:Object }}")).unwrap_err();
        assert_eq!(d[0].code, DiagnosticCode::UnexpectedToken);
        assert_eq!((d[0].line, d[0].column), (2, 8));
    }

    #[test]
    fn select_star_and_distinct() {
        let q = parse_query("SELECT DISTINCT * { ?s ?p ?o . _:b ?p ?s }").unwrap();
        let QueryForm::Select { projection } = q.form else {
            panic!()
        };
        let names: Vec<_> = projection.iter().map(Variable::name).collect();
        assert_eq!(names, ["s", "p", "o"]);
    }

    #[test]
    fn unknown_prefix_and_unterminated_group() {
        let d = parse_query("SELECT ?x WHERE { ?x a x:Y }").unwrap_err();
        assert_eq!(d[0].code, DiagnosticCode::UnknownPrefix);
        let d = parse_query("SELECT ?x WHERE { ?x ?p ?o").unwrap_err();
        assert_eq!(d[0].code, DiagnosticCode::UnterminatedStatement);
    }

    #[test]
    fn empty_pattern_is_join_identity() {
        let g = parse_turtle("<http://x/a> <http://x/p> <http://x/b> .").unwrap();
        assert_eq!(eval_bgp(&g, &[]), vec![BindingSet::new()]);
    }

    #[test]
    fn repeated_variable_must_agree() {
        let g = parse_turtle(
            "<http://x/a> <http://x/p> <http://x/a> . <http://x/a> <http://x/p> <http://x/b> .",
        )
        .unwrap();
        let pat = TriplePattern::new(
            PatternTerm::var("x"),
            Term::named("http://x/p"),
            PatternTerm::var("x"),
        );
        assert_eq!(eval_bgp(&g, &[pat]).len(), 1);
    }

    #[test]
    fn language_tag_is_part_of_equality() {
        let g = parse_turtle("<http://x/a> <http://x/p> \"Single-phase\"@en .").unwrap();
        let plain = TriplePattern::new(
            PatternTerm::var("s"),
            Term::named("http://x/p"),
            Term::Literal(Literal::string("Single-phase")),
        );
        assert!(eval_bgp(&g, &[plain]).is_empty());
    }

    #[test]
    fn construct_skips_literal_subjects_and_fresh_blanks() {
        let g = parse_turtle("<http://x/a> <http://x/p> \"v\" . <http://x/b> <http://x/p> \"w\" .")
            .unwrap();
        let q = parse_query(
            "CONSTRUCT { ?o <http://x/q> ?s . _:n <http://x/r> ?s } WHERE { ?s <http://x/p> ?o }",
        )
        .unwrap();
        let QueryResult::Graph(out) = eval(&g, &q) else {
            panic!()
        };
        assert_eq!(out.len(), 2);
        assert_eq!(out.blank_labels().len(), 2);
    }

    #[test]
    fn select_json_shape() {
        let g = parse_turtle(
            "<http://x/a> <http://x/p> \"v\"@de . <http://x/a> <http://x/q> \"2015-11-02\"^^<http://www.w3.org/2001/XMLSchema#date> .",
        )
        .unwrap();
        let q =
            parse_query("SELECT ?s ?v ?d WHERE { ?s <http://x/p> ?v ; <http://x/q> ?d }").unwrap();
        let QueryResult::Solutions(res) = eval(&g, &q) else {
            panic!()
        };
        assert_eq!(
            res.to_json(),
            json!({
                "vars": ["s", "v", "d"],
                "rows": [{
                    "s": {"type": "iri", "value": "http://x/a"},
                    "v": {"type": "literal", "value": "v", "lang": "de"},
                    "d": {"type": "literal", "value": "2015-11-02", "datatype": "http://www.w3.org/2001/XMLSchema#date"},
                }]
            })
        );
    }
}

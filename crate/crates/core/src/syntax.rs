//! Tokenizer and diagnostics shared by the Turtle and query readers.

use std::fmt;

use serde::Serialize;

use crate::graph::{is_local_name, is_prefix_label, PrefixMap};
use crate::term::{is_blank_label, is_language_tag, Iri, Literal, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum DiagnosticCode {
    UnknownPrefix,
    #[serde(rename = "BadIRI")]
    BadIri,
    BadLiteral,
    UnexpectedToken,
    UnterminatedStatement,
    UnsupportedKeyword,
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DiagnosticCode::UnknownPrefix => "UnknownPrefix",
            DiagnosticCode::BadIri => "BadIRI",
            DiagnosticCode::BadLiteral => "BadLiteral",
            DiagnosticCode::UnexpectedToken => "UnexpectedToken",
            DiagnosticCode::UnterminatedStatement => "UnterminatedStatement",
            DiagnosticCode::UnsupportedKeyword => "UnsupportedKeyword",
        };
        f.write_str(name)
    }
}

/// A positioned syntax error. Line and column are 1-based; columns count
/// characters, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub code: DiagnosticCode,
    pub message: String,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}",
            self.line, self.column, self.code, self.message
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl Pos {
    pub(crate) fn diag(self, code: DiagnosticCode, message: impl Into<String>) -> ParseDiagnostic {
        ParseDiagnostic {
            line: self.line,
            column: self.column,
            code,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    IriRef(String),
    PName(String, String),
    Blank(String),
    Anon,
    Str(String),
    LangTag(String),
    Carets,
    Dot,
    Semicolon,
    Comma,
    AtPrefix,
    Word(String),
    Var(String),
    LBrace,
    RBrace,
    Star,
    /// Placeholder for a lexical error that was already reported.
    Invalid,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::IriRef(i) => format!("<{i}>"),
            Tok::PName(p, l) => format!("{p}:{l}"),
            Tok::Blank(b) => format!("_:{b}"),
            Tok::Anon => "[]".into(),
            Tok::Str(_) => "string literal".into(),
            Tok::LangTag(t) => format!("@{t}"),
            Tok::Carets => "^^".into(),
            Tok::Dot => "'.'".into(),
            Tok::Semicolon => "';'".into(),
            Tok::Comma => "','".into(),
            Tok::AtPrefix => "@prefix".into(),
            Tok::Word(w) => format!("'{w}'"),
            Tok::Var(v) => format!("?{v}"),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::Star => "'*'".into(),
            Tok::Invalid => "invalid token".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    Turtle,
    Query,
}

struct Lexer {
    chars: Vec<char>,
    i: usize,
    line: usize,
    column: usize,
    mode: Mode,
    tokens: Vec<Token>,
    diagnostics: Vec<ParseDiagnostic>,
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.')
}

/// Tokenizes `src`. Lexical errors are reported once and leave a
/// [`Tok::Invalid`] in the stream so the parser can recover without
/// repeating them.
pub(crate) fn tokenize(src: &str, mode: Mode) -> (Vec<Token>, Vec<ParseDiagnostic>, Pos) {
    let mut lx = Lexer {
        chars: src.chars().collect(),
        i: 0,
        line: 1,
        column: 1,
        mode,
        tokens: Vec::new(),
        diagnostics: Vec::new(),
    };
    lx.run();
    let last = lx.last_char_pos();
    (lx.tokens, lx.diagnostics, last)
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.i + off).copied()
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    /// Position of the final character, used for errors at end of input.
    fn last_char_pos(&self) -> Pos {
        let mut line = 1;
        let mut column = 1;
        let n = self.chars.len();
        for (k, c) in self.chars.iter().enumerate() {
            if k + 1 == n {
                break;
            }
            if *c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
        }
        Pos { line, column }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn push(&mut self, tok: Tok, pos: Pos) {
        self.tokens.push(Token { tok, pos });
    }

    fn error(&mut self, pos: Pos, code: DiagnosticCode, msg: impl Into<String>) {
        self.diagnostics.push(pos.diag(code, msg));
        self.push(Tok::Invalid, pos);
    }

    fn run(&mut self) {
        while let Some(c) = self.peek() {
            let pos = self.pos();
            match c {
                c if c.is_whitespace() => {
                    self.bump();
                }
                '#' => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                '<' => self.iri_ref(pos),
                '"' | '\'' => self.string(pos, c),
                '@' => self.at_word(pos),
                '^' => {
                    self.bump();
                    if self.peek() == Some('^') {
                        self.bump();
                        self.push(Tok::Carets, pos);
                    } else {
                        self.error(pos, DiagnosticCode::UnexpectedToken, "expected '^^'");
                    }
                }
                '.' => {
                    self.bump();
                    self.push(Tok::Dot, pos);
                }
                ';' => {
                    self.bump();
                    self.push(Tok::Semicolon, pos);
                }
                ',' => {
                    self.bump();
                    self.push(Tok::Comma, pos);
                }
                '[' => {
                    self.bump();
                    while self.peek().is_some_and(char::is_whitespace) {
                        self.bump();
                    }
                    if self.peek() == Some(']') {
                        self.bump();
                        self.push(Tok::Anon, pos);
                    } else {
                        self.error(
                            pos,
                            DiagnosticCode::UnexpectedToken,
                            "only the empty blank node '[]' is supported",
                        );
                    }
                }
                '{' if self.mode == Mode::Query => {
                    self.bump();
                    self.push(Tok::LBrace, pos);
                }
                '}' if self.mode == Mode::Query => {
                    self.bump();
                    self.push(Tok::RBrace, pos);
                }
                '*' if self.mode == Mode::Query => {
                    self.bump();
                    self.push(Tok::Star, pos);
                }
                '?' | '$' if self.mode == Mode::Query => self.variable(pos),
                '_' if self.peek_at(1) == Some(':') => self.blank(pos),
                ':' => self.name(pos),
                c if c.is_alphabetic() => self.name(pos),
                c if c.is_ascii_digit() || c == '+' || c == '-' => {
                    self.skip_run();
                    self.error(
                        pos,
                        DiagnosticCode::BadLiteral,
                        "numeric and boolean shorthand literals are not supported",
                    );
                }
                c => {
                    self.bump();
                    self.error(
                        pos,
                        DiagnosticCode::UnexpectedToken,
                        format!("unexpected character {c:?}"),
                    );
                }
            }
        }
    }

    fn skip_run(&mut self) {
        self.bump();
        self.name_run();
    }

    fn iri_ref(&mut self, pos: Pos) {
        self.bump();
        let mut body = String::new();
        loop {
            match self.peek() {
                Some('>') => {
                    self.bump();
                    break;
                }
                Some(c) if c.is_whitespace() || "<\"{}|^`\\".contains(c) || c.is_control() => {
                    self.error(pos, DiagnosticCode::BadIri, "unterminated or malformed IRI");
                    return;
                }
                Some(c) => {
                    body.push(c);
                    self.bump();
                }
                None => {
                    self.error(pos, DiagnosticCode::BadIri, "unterminated IRI");
                    return;
                }
            }
        }
        self.push(Tok::IriRef(body), pos);
    }

    fn string(&mut self, pos: Pos, quote: char) {
        self.bump();
        let long = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if long {
            self.bump();
            self.bump();
        }
        let mut value = String::new();
        loop {
            let Some(c) = self.peek() else {
                self.error(
                    pos,
                    DiagnosticCode::BadLiteral,
                    "unterminated string literal",
                );
                return;
            };
            if c == quote {
                if !long {
                    self.bump();
                    break;
                }
                if self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote) {
                    self.bump();
                    self.bump();
                    self.bump();
                    break;
                }
                value.push(c);
                self.bump();
                continue;
            }
            if (c == '\n' || c == '\r') && !long {
                self.error(
                    pos,
                    DiagnosticCode::BadLiteral,
                    "line break in string literal",
                );
                return;
            }
            if c == '\\' {
                self.bump();
                match self.escape() {
                    Some(ch) => value.push(ch),
                    None => {
                        self.error(pos, DiagnosticCode::BadLiteral, "invalid escape sequence");
                        return;
                    }
                }
                continue;
            }
            value.push(c);
            self.bump();
        }
        self.push(Tok::Str(value), pos);
    }

    fn escape(&mut self) -> Option<char> {
        let c = self.bump()?;
        Some(match c {
            't' => '\t',
            'b' => '\u{8}',
            'n' => '\n',
            'r' => '\r',
            'f' => '\u{c}',
            '"' => '"',
            '\'' => '\'',
            '\\' => '\\',
            'u' | 'U' => {
                let n = if c == 'u' { 4 } else { 8 };
                let mut code = 0u32;
                for _ in 0..n {
                    let d = self.peek()?.to_digit(16)?;
                    self.bump();
                    code = code * 16 + d;
                }
                char::from_u32(code)?
            }
            _ => return None,
        })
    }

    fn at_word(&mut self, pos: Pos) {
        self.bump();
        let mut word = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '-' {
                word.push(c);
                self.bump();
            } else {
                break;
            }
        }
        match word.as_str() {
            "prefix" => self.push(Tok::AtPrefix, pos),
            "base" => self.error(
                pos,
                DiagnosticCode::UnexpectedToken,
                "@base is not supported",
            ),
            w if is_language_tag(w) => self.push(Tok::LangTag(w.to_owned()), pos),
            w => self.error(
                pos,
                DiagnosticCode::BadLiteral,
                format!("invalid language tag {w:?}"),
            ),
        }
    }

    fn variable(&mut self, pos: Pos) {
        self.bump();
        let mut name = String::new();
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' {
                name.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if name.is_empty() {
            self.error(pos, DiagnosticCode::UnexpectedToken, "empty variable name");
        } else {
            self.push(Tok::Var(name), pos);
        }
    }

    /// Scans a run of name characters, leaving any trailing dots unconsumed.
    fn name_run(&mut self) -> String {
        let start = self.i;
        let mut end = start;
        while self.chars.get(end).copied().is_some_and(is_name_char) {
            end += 1;
        }
        while end > start && self.chars[end - 1] == '.' {
            end -= 1;
        }
        let run: String = self.chars[start..end].iter().collect();
        for _ in start..end {
            self.bump();
        }
        run
    }

    fn blank(&mut self, pos: Pos) {
        self.bump();
        self.bump();
        let label = self.name_run();
        if is_blank_label(&label) {
            self.push(Tok::Blank(label), pos);
        } else {
            self.error(
                pos,
                DiagnosticCode::UnexpectedToken,
                format!("invalid blank node label {label:?}"),
            );
        }
    }

    fn name(&mut self, pos: Pos) {
        let prefix = if self.peek() == Some(':') {
            String::new()
        } else {
            self.name_run()
        };
        if self.peek() != Some(':') {
            self.push(Tok::Word(prefix), pos);
            return;
        }
        self.bump();
        let local = self.name_run();
        if !is_prefix_label(&prefix) || !is_local_name(&local) {
            self.error(
                pos,
                DiagnosticCode::UnexpectedToken,
                format!("invalid prefixed name {prefix}:{local}"),
            );
            return;
        }
        self.push(Tok::PName(prefix, local), pos);
    }
}

/// Cursor over a token list with the term-level helpers both readers share.
pub(crate) struct Cursor {
    pub tokens: Vec<Token>,
    pub i: usize,
    pub end: Pos,
    anon_labels: Vec<String>,
    next_anon: usize,
}

impl Cursor {
    pub fn new(tokens: Vec<Token>, end: Pos) -> Self {
        Self {
            tokens,
            i: 0,
            end,
            anon_labels: Vec::new(),
            next_anon: 0,
        }
    }

    /// Labels given to `[]` nodes must not collide with explicit `_:` labels
    /// anywhere in the document.
    pub fn reserve_blank_labels(&mut self) {
        self.anon_labels = self
            .tokens
            .iter()
            .filter_map(|t| match &t.tok {
                Tok::Blank(l) => Some(l.clone()),
                _ => None,
            })
            .collect();
    }

    pub fn fresh_blank(&mut self) -> Term {
        loop {
            let label = format!("anon{}", self.next_anon);
            self.next_anon += 1;
            if !self.anon_labels.contains(&label) {
                return Term::blank(label).expect("generated label is valid");
            }
        }
    }

    pub fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.i)
    }

    pub fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.i).cloned();
        if t.is_some() {
            self.i += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        self.i >= self.tokens.len()
    }

    pub fn pos(&self) -> Pos {
        self.peek().map_or(self.end, |t| t.pos)
    }

    /// Consumes the next token if it equals `tok`.
    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek().is_some_and(|t| &t.tok == tok) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok, what: &str) -> Result<Pos, ParseDiagnostic> {
        match self.next() {
            Some(t) if &t.tok == tok => Ok(t.pos),
            Some(t) => Err(unexpected(&t, what)),
            None => Err(self.end.diag(
                DiagnosticCode::UnterminatedStatement,
                format!("input ended, expected {what}"),
            )),
        }
    }

    /// Skips past the next `.` (or to the end), for statement-level recovery.
    pub fn skip_statement(&mut self) {
        while let Some(t) = self.next() {
            if t.tok == Tok::Dot {
                break;
            }
        }
    }
}

pub(crate) fn unexpected(t: &Token, expected: &str) -> ParseDiagnostic {
    match t.tok {
        Tok::Invalid => t.pos.diag(DiagnosticCode::UnexpectedToken, "invalid token"),
        _ => t.pos.diag(
            DiagnosticCode::UnexpectedToken,
            format!("unexpected {}, expected {expected}", t.tok.describe()),
        ),
    }
}

pub(crate) fn resolve_iri(body: &str, pos: Pos) -> Result<Iri, ParseDiagnostic> {
    Iri::new(body).map_err(|e| pos.diag(DiagnosticCode::BadIri, e.to_string()))
}

pub(crate) fn resolve_pname(
    prefixes: &PrefixMap,
    prefix: &str,
    local: &str,
    pos: Pos,
) -> Result<Iri, ParseDiagnostic> {
    match prefixes.get(prefix) {
        None => Err(pos.diag(
            DiagnosticCode::UnknownPrefix,
            format!("prefix '{prefix}:' is not declared"),
        )),
        Some(ns) => resolve_iri(&format!("{}{}", ns.as_str(), local), pos),
    }
}

/// Reads a literal whose opening string token has been consumed.
pub(crate) fn finish_literal(
    cur: &mut Cursor,
    prefixes: &PrefixMap,
    lexical: String,
) -> Result<Literal, ParseDiagnostic> {
    match cur.peek().map(|t| t.tok.clone()) {
        Some(Tok::LangTag(tag)) => {
            let pos = cur.pos();
            cur.i += 1;
            Literal::lang(lexical, &tag)
                .map_err(|e| pos.diag(DiagnosticCode::BadLiteral, e.to_string()))
        }
        Some(Tok::Carets) => {
            cur.i += 1;
            let t = cur.next().ok_or_else(|| {
                cur.end.diag(
                    DiagnosticCode::UnterminatedStatement,
                    "input ended, expected datatype IRI",
                )
            })?;
            let dt = match &t.tok {
                Tok::IriRef(body) => resolve_iri(body, t.pos)?,
                Tok::PName(p, l) => resolve_pname(prefixes, p, l, t.pos)?,
                _ => return Err(unexpected(&t, "datatype IRI")),
            };
            Literal::typed(lexical, dt)
                .map_err(|e| t.pos.diag(DiagnosticCode::BadLiteral, e.to_string()))
        }
        _ => Ok(Literal::string(lexical)),
    }
}

/// Reads an `@prefix label: <iri> .` or `PREFIX label: <iri>` body after the
/// keyword, binding it into `prefixes`.
pub(crate) fn prefix_body(
    cur: &mut Cursor,
    prefixes: &mut PrefixMap,
    dotted: bool,
) -> Result<(), ParseDiagnostic> {
    let label_tok = cur.next().ok_or_else(|| {
        cur.end.diag(
            DiagnosticCode::UnterminatedStatement,
            "input ended, expected prefix label",
        )
    })?;
    let label = match &label_tok.tok {
        Tok::PName(p, l) if l.is_empty() => p.clone(),
        _ => return Err(unexpected(&label_tok, "prefix label ending in ':'")),
    };
    let iri_tok = cur.next().ok_or_else(|| {
        cur.end.diag(
            DiagnosticCode::UnterminatedStatement,
            "input ended, expected namespace IRI",
        )
    })?;
    let ns = match &iri_tok.tok {
        Tok::IriRef(body) => resolve_iri(body, iri_tok.pos)?,
        _ => return Err(unexpected(&iri_tok, "namespace IRI")),
    };
    if dotted {
        cur.expect(&Tok::Dot, "'.' after @prefix")?;
    }
    prefixes.insert(label, ns);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str, mode: Mode) -> Vec<Tok> {
        let (t, d, _) = tokenize(src, mode);
        assert!(d.is_empty(), "{d:?}");
        t.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn trailing_dot_is_not_part_of_names() {
        assert_eq!(
            toks("i40c:Component.", Mode::Turtle),
            vec![Tok::PName("i40c".into(), "Component".into()), Tok::Dot]
        );
        assert_eq!(
            toks("?name.", Mode::Query),
            vec![Tok::Var("name".into()), Tok::Dot]
        );
        assert_eq!(
            toks("\"x\"@en;", Mode::Turtle),
            vec![
                Tok::Str("x".into()),
                Tok::LangTag("en".into()),
                Tok::Semicolon
            ]
        );
    }

    #[test]
    fn positions_are_one_based_characters() {
        let (t, _, _) = tokenize("\n  äb:c", Mode::Turtle);
        assert_eq!(t[0].pos, Pos { line: 2, column: 3 });
    }

    #[test]
    fn escapes_decode() {
        assert_eq!(
            toks(r#""a\"b\ncé""#, Mode::Turtle),
            vec![Tok::Str("a\"b\nc\u{e9}".into())]
        );
        assert_eq!(
            toks("\"\"\"two\nlines\"\"\"", Mode::Turtle),
            vec![Tok::Str("two\nlines".into())]
        );
    }

    #[test]
    fn lexical_errors_are_positioned() {
        let (t, d, _) = tokenize("x:y \"open", Mode::Turtle);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagnosticCode::BadLiteral);
        assert_eq!((d[0].line, d[0].column), (1, 5));
        assert_eq!(t.last().unwrap().tok, Tok::Invalid);
    }

    #[test]
    fn variables_only_in_query_mode() {
        let (_, d, _) = tokenize("?x", Mode::Turtle);
        assert_eq!(d[0].code, DiagnosticCode::UnexpectedToken);
    }
}

//! Indexed triple sets and prefix maps.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::term::{BlankNode, Iri, Term, Triple};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrefixError {
    #[error("unknown prefix {0:?}")]
    UnknownPrefix(String),
    #[error("{0:?} is not a prefixed name")]
    NotPrefixed(String),
    #[error("expansion of {0:?} is not a valid IRI")]
    BadExpansion(String),
}

/// Prefix label to namespace IRI bindings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrefixMap {
    bindings: BTreeMap<String, Iri>,
}

impl PrefixMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds `label`, replacing an existing binding. Returns the old namespace.
    pub fn insert(&mut self, label: impl Into<String>, namespace: Iri) -> Option<Iri> {
        self.bindings.insert(label.into(), namespace)
    }

    pub fn get(&self, label: &str) -> Option<&Iri> {
        self.bindings.get(label)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Iri)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Expands `prefix:local` against the declared bindings.
    pub fn expand(&self, qname: &str) -> Result<Term, PrefixError> {
        let (prefix, local) = qname
            .split_once(':')
            .ok_or_else(|| PrefixError::NotPrefixed(qname.to_owned()))?;
        self.expand_parts(prefix, local)
    }

    pub fn expand_parts(&self, prefix: &str, local: &str) -> Result<Term, PrefixError> {
        let ns = self
            .bindings
            .get(prefix)
            .ok_or_else(|| PrefixError::UnknownPrefix(prefix.to_owned()))?;
        Iri::new(format!("{}{}", ns.as_str(), local))
            .map(Term::Iri)
            .map_err(|_| PrefixError::BadExpansion(format!("{prefix}:{local}")))
    }

    /// Shrinks `iri` to `prefix:local` using the longest matching namespace,
    /// when the remainder is a valid local name.
    pub fn compact(&self, iri: &Iri) -> Option<String> {
        self.bindings
            .iter()
            .filter_map(|(label, ns)| {
                let local = iri.as_str().strip_prefix(ns.as_str())?;
                is_local_name(local).then_some((ns.as_str().len(), label, local))
            })
            .max_by_key(|(len, label, _)| (*len, std::cmp::Reverse(*label)))
            .map(|(_, label, local)| format!("{label}:{local}"))
    }

    /// Adds every binding of `other` whose label is not already bound here.
    pub fn merge_missing(&mut self, other: &PrefixMap) {
        for (label, ns) in &other.bindings {
            self.bindings
                .entry(label.clone())
                .or_insert_with(|| ns.clone());
        }
    }
}

pub(crate) fn is_prefix_label(label: &str) -> bool {
    if label.is_empty() {
        return true;
    }
    let mut chars = label.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic())
        && chars.all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !label.ends_with('.')
}

/// The local-name subset accepted by the Turtle reader.
pub(crate) fn is_local_name(local: &str) -> bool {
    if local.is_empty() {
        return true;
    }
    let mut chars = local.chars();
    matches!(chars.next(), Some(c) if c.is_alphanumeric() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !local.ends_with('.')
}

type Index = BTreeMap<Term, BTreeMap<Term, BTreeSet<Term>>>;

fn index_insert(index: &mut Index, a: &Term, b: &Term, c: &Term) -> bool {
    index
        .entry(a.clone())
        .or_default()
        .entry(b.clone())
        .or_default()
        .insert(c.clone())
}

fn index_remove(index: &mut Index, a: &Term, b: &Term, c: &Term) -> bool {
    let Some(level1) = index.get_mut(a) else {
        return false;
    };
    let Some(level2) = level1.get_mut(b) else {
        return false;
    };
    let removed = level2.remove(c);
    if level2.is_empty() {
        level1.remove(b);
    }
    if level1.is_empty() {
        index.remove(a);
    }
    removed
}

fn index_len(index: &Index) -> usize {
    index
        .values()
        .flat_map(|m| m.values())
        .map(BTreeSet::len)
        .sum()
}

/// A set of triples indexed three ways (S-P-O, P-O-S, O-S-P), plus the prefix
/// bindings of the document it came from.
///
/// `Graph` is plain owned data: wrap it in a lock for shared mutable access.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    spo: Index,
    pos: Index,
    osp: Index,
    len: usize,
    prefixes: PrefixMap,
}

impl PartialEq for Graph {
    /// Triple-set equality; prefix bindings are presentation and are ignored.
    fn eq(&self, other: &Self) -> bool {
        self.spo == other.spo
    }
}

impl Eq for Graph {}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_prefixes(prefixes: PrefixMap) -> Self {
        Self {
            prefixes,
            ..Self::default()
        }
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    pub fn prefixes_mut(&mut self) -> &mut PrefixMap {
        &mut self.prefixes
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Returns true iff the triple was not already present.
    pub fn insert(&mut self, t: Triple) -> bool {
        let (s, p, o) = (t.subject(), t.predicate(), t.object());
        if !index_insert(&mut self.spo, s, p, o) {
            return false;
        }
        index_insert(&mut self.pos, p, o, s);
        index_insert(&mut self.osp, o, s, p);
        self.len += 1;
        true
    }

    /// Returns true iff the triple was present.
    pub fn remove(&mut self, t: &Triple) -> bool {
        let (s, p, o) = (t.subject(), t.predicate(), t.object());
        if !index_remove(&mut self.spo, s, p, o) {
            return false;
        }
        index_remove(&mut self.pos, p, o, s);
        index_remove(&mut self.osp, o, s, p);
        self.len -= 1;
        true
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.spo
            .get(t.subject())
            .and_then(|m| m.get(t.predicate()))
            .is_some_and(|objs| objs.contains(t.object()))
    }

    pub fn extend(&mut self, triples: impl IntoIterator<Item = Triple>) {
        for t in triples {
            self.insert(t);
        }
    }

    /// All triples in S-P-O order.
    pub fn iter(&self) -> impl Iterator<Item = Triple> + '_ {
        self.spo.iter().flat_map(|(s, m)| {
            m.iter().flat_map(move |(p, objs)| {
                objs.iter()
                    .map(move |o| Triple::from_parts_unchecked(s.clone(), p.clone(), o.clone()))
            })
        })
    }

    /// Triples matching every bound position, in the order of the index whose
    /// leading positions are bound.
    pub fn match_pattern<'a>(
        &'a self,
        s: Option<&'a Term>,
        p: Option<&'a Term>,
        o: Option<&'a Term>,
    ) -> Box<dyn Iterator<Item = Triple> + 'a> {
        let mk = Triple::from_parts_unchecked;
        match (s, p, o) {
            (Some(s), Some(p), Some(o)) => {
                let hit = self
                    .spo
                    .get(s)
                    .and_then(|m| m.get(p))
                    .is_some_and(|objs| objs.contains(o));
                Box::new(hit.then(|| mk(s.clone(), p.clone(), o.clone())).into_iter())
            }
            (Some(s), Some(p), None) => Box::new(
                self.spo
                    .get(s)
                    .and_then(|m| m.get(p))
                    .into_iter()
                    .flatten()
                    .map(move |o| mk(s.clone(), p.clone(), o.clone())),
            ),
            (Some(s), None, Some(o)) => Box::new(
                self.osp
                    .get(o)
                    .and_then(|m| m.get(s))
                    .into_iter()
                    .flatten()
                    .map(move |p| mk(s.clone(), p.clone(), o.clone())),
            ),
            (Some(s), None, None) => Box::new(self.spo.get(s).into_iter().flat_map(move |m| {
                m.iter().flat_map(move |(p, objs)| {
                    objs.iter()
                        .map(move |o| mk(s.clone(), p.clone(), o.clone()))
                })
            })),
            (None, Some(p), Some(o)) => Box::new(
                self.pos
                    .get(p)
                    .and_then(|m| m.get(o))
                    .into_iter()
                    .flatten()
                    .map(move |s| mk(s.clone(), p.clone(), o.clone())),
            ),
            (None, Some(p), None) => Box::new(self.pos.get(p).into_iter().flat_map(move |m| {
                m.iter().flat_map(move |(o, subjs)| {
                    subjs
                        .iter()
                        .map(move |s| mk(s.clone(), p.clone(), o.clone()))
                })
            })),
            (None, None, Some(o)) => Box::new(self.osp.get(o).into_iter().flat_map(move |m| {
                m.iter().flat_map(move |(s, preds)| {
                    preds
                        .iter()
                        .map(move |p| mk(s.clone(), p.clone(), o.clone()))
                })
            })),
            (None, None, None) => Box::new(self.iter()),
        }
    }

    /// Number of triples matching the pattern, without materializing them.
    pub fn count_pattern(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> usize {
        match (s, p, o) {
            (None, None, None) => self.len,
            (Some(s), None, None) => self
                .spo
                .get(s)
                .map_or(0, |m| m.values().map(BTreeSet::len).sum()),
            (None, Some(p), None) => self
                .pos
                .get(p)
                .map_or(0, |m| m.values().map(BTreeSet::len).sum()),
            (None, None, Some(o)) => self
                .osp
                .get(o)
                .map_or(0, |m| m.values().map(BTreeSet::len).sum()),
            _ => self.match_pattern(s, p, o).count(),
        }
    }

    /// Objects of `(s, p, ?)`.
    pub fn objects<'a>(&'a self, s: &Term, p: &Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.spo.get(s).and_then(|m| m.get(p)).into_iter().flatten()
    }

    /// Subjects of `(?, p, o)`.
    pub fn subjects<'a>(&'a self, p: &Term, o: &Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.pos.get(p).and_then(|m| m.get(o)).into_iter().flatten()
    }

    /// Distinct subject terms in order.
    pub fn subject_terms(&self) -> impl Iterator<Item = &Term> {
        self.spo.keys()
    }

    /// Distinct predicates used with `s`.
    pub fn predicates_of<'a>(&'a self, s: &Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.spo.get(s).into_iter().flat_map(|m| m.keys())
    }

    pub fn has_subject(&self, s: &Term) -> bool {
        self.spo.contains_key(s)
    }

    /// Every distinct term appearing in any position.
    pub fn terms(&self) -> BTreeSet<&Term> {
        self.spo
            .keys()
            .chain(self.pos.keys())
            .chain(self.osp.keys())
            .collect()
    }

    pub fn blank_labels(&self) -> BTreeSet<String> {
        self.terms()
            .into_iter()
            .filter_map(|t| t.as_blank().map(|b| b.label().to_owned()))
            .collect()
    }

    /// True when the three indexes hold exactly the same triple set.
    pub fn indexes_agree(&self) -> bool {
        if index_len(&self.spo) != self.len
            || index_len(&self.pos) != self.len
            || index_len(&self.osp) != self.len
        {
            return false;
        }
        self.iter().all(|t| {
            let (s, p, o) = (t.subject(), t.predicate(), t.object());
            self.pos
                .get(p)
                .and_then(|m| m.get(o))
                .is_some_and(|x| x.contains(s))
                && self
                    .osp
                    .get(o)
                    .and_then(|m| m.get(s))
                    .is_some_and(|x| x.contains(p))
        })
    }

    /// The concise bounded description of `resource`: every triple with it as
    /// subject, closed over blank-node objects.
    pub fn concise_bounded_description(&self, resource: &Term) -> Graph {
        let mut out = Graph::with_prefixes(self.prefixes.clone());
        let mut pending = vec![resource.clone()];
        let mut seen = BTreeSet::new();
        while let Some(node) = pending.pop() {
            if !seen.insert(node.clone()) {
                continue;
            }
            for t in self.match_pattern(Some(&node), None, None) {
                if t.object().is_blank() {
                    pending.push(t.object().clone());
                }
                out.insert(t);
            }
        }
        out
    }

    /// Set union of `self` and `other`. Blank nodes of `other` whose labels
    /// occur in `self` are renamed with a fresh counter; prefix bindings of
    /// `self` win on conflict.
    pub fn merge(&self, other: &Graph) -> Graph {
        let mut out = self.clone();
        out.prefixes.merge_missing(&other.prefixes);
        let ours = self.blank_labels();
        let theirs = other.blank_labels();
        let mut renames: BTreeMap<String, BlankNode> = BTreeMap::new();
        let mut counter = 0usize;
        for label in theirs.iter().filter(|l| ours.contains(*l)) {
            let fresh = loop {
                let candidate = format!("b{counter}");
                counter += 1;
                if !ours.contains(&candidate) && !theirs.contains(&candidate) {
                    break candidate;
                }
            };
            renames.insert(
                label.clone(),
                BlankNode::new(fresh).expect("generated label is valid"),
            );
        }
        let rename = |t: &Term| match t {
            Term::BlankNode(b) => renames
                .get(b.label())
                .map_or_else(|| t.clone(), |r| Term::BlankNode(r.clone())),
            _ => t.clone(),
        };
        for t in other.iter() {
            out.insert(Triple::from_parts_unchecked(
                rename(t.subject()),
                t.predicate().clone(),
                rename(t.object()),
            ));
        }
        out
    }

    /// Equality up to a bijective renaming of blank nodes.
    pub fn is_isomorphic(&self, other: &Graph) -> bool {
        isomorphic(self, other)
    }
}

pub fn merge(a: &Graph, b: &Graph) -> Graph {
    a.merge(b)
}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut g = Graph::new();
        g.extend(iter);
        g
    }
}

/// Per-blank-node description used to prune candidate pairings.
fn blank_signature(g: &Graph, node: &Term) -> Vec<(u8, Term, Option<Term>)> {
    let mut sig = Vec::new();
    for t in g.match_pattern(Some(node), None, None) {
        let other = (!t.object().is_blank()).then(|| t.object().clone());
        sig.push((0, t.predicate().clone(), other));
    }
    for t in g.match_pattern(None, None, Some(node)) {
        let other = (!t.subject().is_blank()).then(|| t.subject().clone());
        sig.push((1, t.predicate().clone(), other));
    }
    sig.sort();
    sig
}

fn isomorphic(a: &Graph, b: &Graph) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let ground = |t: &Triple| !t.subject().is_blank() && !t.object().is_blank();
    if !a.iter().filter(ground).all(|t| b.contains(&t)) {
        return false;
    }
    let a_blanks: Vec<Term> = a
        .terms()
        .into_iter()
        .filter(|t| t.is_blank())
        .cloned()
        .collect();
    let b_blanks: Vec<Term> = b
        .terms()
        .into_iter()
        .filter(|t| t.is_blank())
        .cloned()
        .collect();
    if a_blanks.len() != b_blanks.len() {
        return false;
    }
    if a_blanks.is_empty() {
        return true;
    }
    let a_sigs: Vec<_> = a_blanks.iter().map(|n| blank_signature(a, n)).collect();
    let b_sigs: Vec<_> = b_blanks.iter().map(|n| blank_signature(b, n)).collect();
    let blank_triples: Vec<Triple> = a.iter().filter(|t| !ground(t)).collect();

    let mut mapping: BTreeMap<Term, Term> = BTreeMap::new();
    let mut used = vec![false; b_blanks.len()];

    fn consistent(b: &Graph, triples: &[Triple], mapping: &BTreeMap<Term, Term>) -> bool {
        triples.iter().all(|t| {
            let map = |x: &Term| {
                if x.is_blank() {
                    mapping.get(x).cloned()
                } else {
                    Some(x.clone())
                }
            };
            match (map(t.subject()), map(t.object())) {
                (Some(s), Some(o)) => {
                    b.contains(&Triple::from_parts_unchecked(s, t.predicate().clone(), o))
                }
                _ => true,
            }
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        i: usize,
        a_blanks: &[Term],
        b_blanks: &[Term],
        a_sigs: &[Vec<(u8, Term, Option<Term>)>],
        b_sigs: &[Vec<(u8, Term, Option<Term>)>],
        used: &mut [bool],
        mapping: &mut BTreeMap<Term, Term>,
        b: &Graph,
        triples: &[Triple],
    ) -> bool {
        if i == a_blanks.len() {
            return true;
        }
        for j in 0..b_blanks.len() {
            if used[j] || a_sigs[i] != b_sigs[j] {
                continue;
            }
            used[j] = true;
            mapping.insert(a_blanks[i].clone(), b_blanks[j].clone());
            if consistent(b, triples, mapping)
                && search(
                    i + 1,
                    a_blanks,
                    b_blanks,
                    a_sigs,
                    b_sigs,
                    used,
                    mapping,
                    b,
                    triples,
                )
            {
                return true;
            }
            mapping.remove(&a_blanks[i]);
            used[j] = false;
        }
        false
    }

    search(
        0,
        &a_blanks,
        &b_blanks,
        &a_sigs,
        &b_sigs,
        &mut used,
        &mut mapping,
        b,
        &blank_triples,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{ns, Literal};

    fn iri(s: &str) -> Term {
        Term::named(s)
    }

    fn i40c(local: &str) -> Term {
        iri(&format!("{}{local}", ns::I40C))
    }

    fn t(s: Term, p: Term, o: Term) -> Triple {
        Triple::new(s, p, o).unwrap()
    }

    #[test]
    fn insert_into_empty_and_twice() {
        let mut g = Graph::new();
        let triple = t(i40c("Object1"), iri(ns::RDF_TYPE), i40c("Object"));
        assert!(g.insert(triple.clone()));
        assert!(!g.insert(triple));
        assert_eq!(g.len(), 1);
        assert!(g.indexes_agree());
    }

    #[test]
    fn remove_restores_state() {
        let mut g = Graph::new();
        g.insert(t(i40c("a"), i40c("p"), i40c("b")));
        let before = g.clone();
        let extra = t(i40c("a"), i40c("q"), Term::Literal(Literal::string("x")));
        g.insert(extra.clone());
        assert!(g.remove(&extra));
        assert!(!g.remove(&extra));
        assert_eq!(g.spo, before.spo);
        assert_eq!(g.pos, before.pos);
        assert_eq!(g.osp, before.osp);
        assert_eq!(g.len(), before.len());
    }

    #[test]
    fn match_on_empty_graph() {
        let g = Graph::new();
        assert_eq!(g.match_pattern(None, None, None).count(), 0);
    }

    #[test]
    fn match_uses_every_index_shape() {
        let mut g = Graph::new();
        g.insert(t(i40c("a"), i40c("p"), i40c("b")));
        g.insert(t(i40c("a"), i40c("q"), i40c("b")));
        g.insert(t(i40c("c"), i40c("p"), i40c("b")));
        let (a, p, b) = (i40c("a"), i40c("p"), i40c("b"));
        assert_eq!(g.match_pattern(Some(&a), None, Some(&b)).count(), 2);
        assert_eq!(g.match_pattern(None, Some(&p), Some(&b)).count(), 2);
        assert_eq!(g.match_pattern(None, None, Some(&b)).count(), 3);
        assert_eq!(g.match_pattern(Some(&a), Some(&p), Some(&b)).count(), 1);
        assert_eq!(g.count_pattern(None, Some(&p), None), 2);
    }

    #[test]
    fn expand_examples() {
        let mut pm = PrefixMap::new();
        pm.insert("i40c", Iri::new(ns::I40C).unwrap());
        assert_eq!(
            pm.expand("i40c:Actuator").unwrap(),
            iri("http://purl.org/eis/i40c/Actuator")
        );
        assert_eq!(
            PrefixMap::new().expand("i40c:Actuator"),
            Err(PrefixError::UnknownPrefix("i40c".into()))
        );
        let mut rdf = PrefixMap::new();
        rdf.insert("rdf", Iri::new(ns::RDF).unwrap());
        assert_eq!(rdf.expand("rdf:type").unwrap(), iri(ns::RDF_TYPE));
    }

    #[test]
    fn compact_prefers_longest_namespace() {
        let mut pm = PrefixMap::new();
        pm.insert("a", Iri::new("http://x/").unwrap());
        pm.insert("b", Iri::new("http://x/y/").unwrap());
        let target = Iri::new("http://x/y/z").unwrap();
        assert_eq!(pm.compact(&target).as_deref(), Some("b:z"));
        assert_eq!(pm.compact(&Iri::new("http://x/y/z/w").unwrap()), None);
    }

    #[test]
    fn merge_identity_and_blank_renaming() {
        let mut a = Graph::new();
        a.insert(t(Term::blank("b1").unwrap(), i40c("p"), i40c("x")));
        assert_eq!(a.merge(&Graph::new()), a);

        let mut b = Graph::new();
        b.insert(t(Term::blank("b1").unwrap(), i40c("p"), i40c("y")));
        let m = a.merge(&b);
        assert_eq!(m.len(), 2);
        assert_eq!(m.blank_labels().len(), 2);
    }

    #[test]
    fn merge_prefixes_left_wins() {
        let mut a = Graph::new();
        a.prefixes_mut().insert("x", Iri::new("http://a/").unwrap());
        let mut b = Graph::new();
        b.prefixes_mut().insert("x", Iri::new("http://b/").unwrap());
        b.prefixes_mut().insert("y", Iri::new("http://y/").unwrap());
        let m = a.merge(&b);
        assert_eq!(m.prefixes().get("x").unwrap().as_str(), "http://a/");
        assert_eq!(m.prefixes().get("y").unwrap().as_str(), "http://y/");
    }

    #[test]
    fn cbd_follows_blank_objects_only() {
        let mut g = Graph::new();
        let b = Term::blank("n").unwrap();
        g.insert(t(i40c("r"), i40c("p"), b.clone()));
        g.insert(t(b.clone(), i40c("q"), i40c("other")));
        g.insert(t(i40c("r"), i40c("p"), i40c("other")));
        g.insert(t(i40c("other"), i40c("q"), i40c("z")));
        let cbd = g.concise_bounded_description(&i40c("r"));
        assert_eq!(cbd.len(), 3);
        assert!(!cbd.has_subject(&i40c("other")));
    }

    #[test]
    fn isomorphism_ignores_blank_labels() {
        let mut a = Graph::new();
        a.insert(t(
            Term::blank("x").unwrap(),
            i40c("p"),
            Term::blank("y").unwrap(),
        ));
        a.insert(t(Term::blank("y").unwrap(), i40c("p"), i40c("end")));
        let mut b = Graph::new();
        b.insert(t(
            Term::blank("q").unwrap(),
            i40c("p"),
            Term::blank("r").unwrap(),
        ));
        b.insert(t(Term::blank("r").unwrap(), i40c("p"), i40c("end")));
        assert!(a.is_isomorphic(&b));
        let mut c = Graph::new();
        c.insert(t(
            Term::blank("q").unwrap(),
            i40c("p"),
            Term::blank("r").unwrap(),
        ));
        c.insert(t(Term::blank("q").unwrap(), i40c("p"), i40c("end")));
        assert!(!a.is_isomorphic(&c));
    }
}

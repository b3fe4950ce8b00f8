//! Shared by the core integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::PathBuf;

use i40sh_core::query::{PatternTerm, TriplePattern};
use i40sh_core::{parse_turtle, Graph, Literal, Term, Triple};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn load(name: &str) -> Graph {
    parse_turtle(&fixture(name)).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

pub fn i40c(local: &str) -> Term {
    Term::named(&format!("http://purl.org/eis/i40c/{local}"))
}

pub fn triple(s: Term, p: Term, o: Term) -> Triple {
    Triple::new(s, p, o).unwrap()
}

/// Small pools so that random patterns actually join.
pub struct Pools {
    pub nodes: Vec<Term>,
    pub predicates: Vec<Term>,
    pub literals: Vec<Term>,
}

impl Default for Pools {
    fn default() -> Self {
        Self {
            nodes: vec![
                Term::named("http://ex.org/a"),
                Term::named("http://ex.org/b"),
                Term::named("http://ex.org/c"),
                Term::blank("n0").unwrap(),
            ],
            predicates: vec![
                Term::named("http://ex.org/p"),
                Term::named("http://ex.org/q"),
            ],
            literals: vec![
                Term::Literal(Literal::string("x")),
                Term::Literal(Literal::lang("x", "en").unwrap()),
            ],
        }
    }
}

pub fn random_graph(rng: &mut impl Rng, pools: &Pools, max: usize) -> Graph {
    let n = rng.gen_range(0..=max);
    let mut g = Graph::new();
    for _ in 0..n {
        let s = pools.nodes.choose(rng).unwrap().clone();
        let p = pools.predicates.choose(rng).unwrap().clone();
        let o = if rng.gen_bool(0.3) {
            pools.literals.choose(rng).unwrap().clone()
        } else {
            pools.nodes.choose(rng).unwrap().clone()
        };
        g.insert(triple(s, p, o));
    }
    g
}

const VARS: [&str; 4] = ["w", "x", "y", "z"];

fn random_position(rng: &mut impl Rng, constants: &[Term]) -> PatternTerm {
    if rng.gen_bool(0.6) {
        PatternTerm::var(VARS.choose(rng).unwrap())
    } else {
        PatternTerm::Term(constants.choose(rng).unwrap().clone())
    }
}

pub fn random_bgp(rng: &mut impl Rng, pools: &Pools, max: usize) -> Vec<TriplePattern> {
    let objects: Vec<Term> = pools.nodes.iter().chain(&pools.literals).cloned().collect();
    (0..rng.gen_range(1..=max))
        .map(|_| TriplePattern {
            subject: random_position(rng, &pools.nodes),
            predicate: random_position(rng, &pools.predicates),
            object: random_position(rng, &objects),
        })
        .collect()
}

/// Tries every assignment of the pattern variables to terms of the graph.
pub fn brute_force(graph: &Graph, patterns: &[TriplePattern]) -> BTreeSet<BTreeMap<String, Term>> {
    let triples: HashSet<(Term, Term, Term)> = graph.iter().map(Triple::into_parts).collect();
    let mut domain: BTreeSet<Term> = BTreeSet::new();
    for (s, p, o) in &triples {
        domain.extend([s.clone(), p.clone(), o.clone()]);
    }
    let domain: Vec<Term> = domain.into_iter().collect();
    let vars: Vec<String> = patterns
        .iter()
        .flat_map(|p| p.variables().map(|v| v.name().to_owned()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut out = BTreeSet::new();
    if !vars.is_empty() && domain.is_empty() {
        return out;
    }
    let mut counter = vec![0usize; vars.len()];
    loop {
        let assignment: BTreeMap<String, Term> = vars
            .iter()
            .cloned()
            .zip(counter.iter().map(|&i| domain[i].clone()))
            .collect();
        let value = |p: &PatternTerm| match p {
            PatternTerm::Term(t) => t.clone(),
            PatternTerm::Var(v) => assignment[v.name()].clone(),
        };
        if patterns
            .iter()
            .all(|p| triples.contains(&(value(&p.subject), value(&p.predicate), value(&p.object))))
        {
            out.insert(assignment.clone());
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == counter.len() {
                return out;
            }
            counter[i] += 1;
            if counter[i] < domain.len() {
                break;
            }
            counter[i] = 0;
            i += 1;
        }
    }
}

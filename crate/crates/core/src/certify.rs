//! Word properties and the rule system that derives them from registered facts.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::catalog::CatalogEntry;
use crate::numeric::Tolerances;
use crate::word::{contains_consecutive, contains_subsequence, normalize, sample_rank, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    Dominant,
    Surjective,
    Open,
    Birational,
    Irreducible,
}

impl Property {
    pub const ALL: [Property; 5] = [
        Property::Dominant,
        Property::Surjective,
        Property::Open,
        Property::Birational,
        Property::Irreducible,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.to_string() == s.to_ascii_lowercase())
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::Dominant => "dominant",
            Property::Surjective => "surjective",
            Property::Open => "open",
            Property::Birational => "birational",
            Property::Irreducible => "irreducible",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Holds,
    Fails,
    Unknown,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Holds => "holds",
            Polarity::Fails => "fails",
            Polarity::Unknown => "unknown",
        })
    }
}

/// Which words a registered fact speaks about.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "detail")]
pub enum Scope {
    /// Exactly the certificate's word.
    Exact,
    /// Every word whose letters all occur in the certificate's word.
    EveryWord,
    /// The word, with the property taken relative to a closed subset of `G`.
    /// Rules never consume such facts.
    OntoSubvariety(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// A word containing a dominant/surjective (any containment) or open
    /// (consecutive containment) word has the same property.
    SubwordPropagation,
    /// Collapsing runs of a subgroup letter preserves dominance, surjectivity,
    /// openness and irreducibility in both directions.
    RepetitionCollapse,
    /// `vv` is surjective when `v` is dominant.
    SquareOfDominant,
    /// `u^(dim G + 1)` is open when `u` is dominant.
    PowerOpen,
    /// `s x y t` is irreducible when `x` is open and `y` is birational.
    SandwichIrreducible,
    /// Words containing `u^(dim G + 2)` are irreducible when `u` is birational.
    MainTheoremBound,
    /// irreducible => surjective => dominant; open => dominant;
    /// birational => dominant.
    Implication,
}

impl Rule {
    pub fn citation(self) -> &'static str {
        match self {
            Rule::SubwordPropagation => "properties pass to words containing a witness",
            Rule::RepetitionCollapse => "runs of a subgroup letter collapse to one letter",
            Rule::SquareOfDominant => "ww is surjective for dominant w",
            Rule::PowerOpen => "u^(dim G + 1) is open for dominant u",
            Rule::SandwichIrreducible => "s w u t is irreducible for open w and birational u",
            Rule::MainTheoremBound => "u^(dim G + 2) is irreducible for birational u",
            Rule::Implication => "definitions: irreducible => surjective => dominant, open => dominant, birational => dominant",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::SubwordPropagation => "subword-propagation",
            Rule::RepetitionCollapse => "repetition-collapse",
            Rule::SquareOfDominant => "square-of-dominant",
            Rule::PowerOpen => "power-open",
            Rule::SandwichIrreducible => "sandwich-irreducible",
            Rule::MainTheoremBound => "main-theorem-bound",
            Rule::Implication => "implication",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Evidence {
    Registered { citation: String },
    Rule { rule: Rule, citation: String, premises: Vec<PropertyCertificate> },
    /// Jacobian ranks at seeded random points. Never consumed by rules.
    Numerical { seed: u64, sample_count: usize, max_rank: usize, group_dim: usize },
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyCertificate {
    pub word: Word,
    pub property: Property,
    pub polarity: Polarity,
    pub scope: Scope,
    pub evidence: Evidence,
}

impl PropertyCertificate {
    pub fn registered(word: Word, property: Property, polarity: Polarity, citation: &str) -> Self {
        Self {
            word,
            property,
            polarity,
            scope: Scope::Exact,
            evidence: Evidence::Registered { citation: citation.to_owned() },
        }
    }

    /// A registered `holds` fact relative to the closed subset `onto`.
    pub fn registered_onto(word: Word, property: Property, onto: &str, citation: &str) -> Self {
        Self {
            scope: Scope::OntoSubvariety(onto.to_owned()),
            ..Self::registered(word, property, Polarity::Holds, citation)
        }
    }

    /// A registered fact about every word over the letters of `letters`.
    pub fn registered_every(
        letters: Word,
        property: Property,
        polarity: Polarity,
        citation: &str,
    ) -> Self {
        Self { scope: Scope::EveryWord, ..Self::registered(letters, property, polarity, citation) }
    }

    pub fn unknown(word: Word, property: Property) -> Self {
        Self { word, property, polarity: Polarity::Unknown, scope: Scope::Exact, evidence: Evidence::None }
    }

    fn rule(word: Word, property: Property, polarity: Polarity, rule: Rule, premises: Vec<Self>) -> Self {
        Self {
            word,
            property,
            polarity,
            scope: Scope::Exact,
            evidence: Evidence::Rule { rule, citation: rule.citation().to_owned(), premises },
        }
    }

    pub fn holds(&self) -> bool {
        self.polarity == Polarity::Holds
    }

    /// Whether this fact, read as registered, speaks about `w`.
    fn covers(&self, w: &Word) -> bool {
        match self.scope {
            Scope::Exact => &self.word == w,
            Scope::EveryWord => w.letters().iter().all(|l| self.word.letters().contains(l)),
            Scope::OntoSubvariety(_) => false,
        }
    }

    /// The evidence tree, one line per certificate, indented by depth.
    pub fn chain(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.chain_into(0, &mut out);
        out
    }

    fn chain_into(&self, depth: usize, out: &mut Vec<String>) {
        let pad = "  ".repeat(depth);
        let head = format!("{pad}{} {} {}", self.word, self.property, self.polarity);
        match &self.evidence {
            Evidence::Registered { citation } => {
                let scope = match &self.scope {
                    Scope::Exact => String::new(),
                    Scope::EveryWord => format!(" (every word over {{{}}})", letters_of(&self.word)),
                    Scope::OntoSubvariety(z) => format!(" (onto {z})"),
                };
                out.push(format!("{head}{scope} [registered: {citation}]"));
            }
            Evidence::Rule { rule, premises, .. } => {
                out.push(format!("{head} [{rule}]"));
                for p in premises {
                    p.chain_into(depth + 1, out);
                }
            }
            Evidence::Numerical { seed, sample_count, max_rank, group_dim } => out.push(format!(
                "{head} [numerical: max Jacobian rank {max_rank} of {group_dim} over {sample_count} samples, seed {seed}]"
            )),
            Evidence::None => out.push(format!("{head} [no rule applies]")),
        }
    }
}

fn letters_of(w: &Word) -> String {
    let v: Vec<&str> = w.letters().iter().map(|l| l.as_str()).collect();
    v.join(", ")
}

/// The strongest certificate for `(w, property)` derivable from `registry`.
///
/// `holds` is searched before `fails`. At the top level a rule derivation is
/// preferred over a registered fact for `w` itself, so the returned chain
/// shows why the fact is true; premises prefer registered facts.
pub fn certify(
    entry: &CatalogEntry,
    w: &Word,
    property: Property,
    registry: &[PropertyCertificate],
) -> PropertyCertificate {
    let mut prover = Prover::new(entry, registry);
    if let Some(c) = prover.holds(w, property, true) {
        return c;
    }
    if let Some(c) = prover.fails(w, property) {
        return c;
    }
    PropertyCertificate::unknown(w.clone(), property)
}

/// [`certify`], falling back to sampled Jacobian ranks for dominance when the
/// rules are inconclusive.
pub fn certify_with_sampling(
    entry: &CatalogEntry,
    w: &Word,
    property: Property,
    registry: &[PropertyCertificate],
    trials: usize,
    seed: u64,
    tol: &Tolerances,
) -> PropertyCertificate {
    let cert = certify(entry, w, property, registry);
    if cert.polarity != Polarity::Unknown || property != Property::Dominant {
        return cert;
    }
    let Ok((max_rank, samples)) = sample_rank(entry, w, trials, seed, tol) else {
        return cert;
    };
    let dim = entry.group.dim;
    PropertyCertificate {
        polarity: if max_rank == dim { Polarity::Holds } else { Polarity::Fails },
        evidence: Evidence::Numerical { seed, sample_count: samples.len(), max_rank, group_dim: dim },
        ..cert
    }
}

const MAX_DEPTH: usize = 24;

struct Prover<'a> {
    entry: &'a CatalogEntry,
    registry: Vec<&'a PropertyCertificate>,
    /// Registered words and their normal forms: the only words used as
    /// witnesses inside containment rules.
    base: Vec<Word>,
    active: HashSet<(Word, Property, bool)>,
}

impl<'a> Prover<'a> {
    fn new(entry: &'a CatalogEntry, registry: &'a [PropertyCertificate]) -> Self {
        let registry: Vec<&PropertyCertificate> = registry
            .iter()
            .filter(|c| {
                !matches!(c.scope, Scope::OntoSubvariety(_))
                    && c.polarity != Polarity::Unknown
                    && c.word.letters().iter().all(|l| entry.letter(l).is_ok())
            })
            .collect();
        let mut base: Vec<Word> = Vec::new();
        for c in &registry {
            if c.scope != Scope::Exact {
                continue;
            }
            let mut push = |w: Word| {
                if !base.contains(&w) {
                    base.push(w);
                }
            };
            push(c.word.clone());
            if let Ok(n) = normalize(entry, &c.word) {
                push(n);
            }
        }
        base.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Self { entry, registry, base, active: HashSet::new() }
    }

    fn dim(&self) -> usize {
        self.entry.group.dim
    }

    fn lookup(&self, w: &Word, p: Property, polarity: Polarity) -> Option<PropertyCertificate> {
        self.registry
            .iter()
            .find(|c| c.property == p && c.polarity == polarity && c.covers(w))
            .map(|c| PropertyCertificate { word: w.clone(), ..(*c).clone() })
    }

    fn normal(&self, w: &Word) -> Option<Word> {
        normalize(self.entry, w).ok()
    }

    fn holds(&mut self, w: &Word, p: Property, top: bool) -> Option<PropertyCertificate> {
        let key = (w.clone(), p, true);
        if self.active.len() >= MAX_DEPTH || self.active.contains(&key) {
            return None;
        }
        if !top {
            if let Some(c) = self.lookup(w, p, Polarity::Holds) {
                return Some(c);
            }
        }
        self.active.insert(key.clone());
        let derived = self.derive_holds(w, p);
        self.active.remove(&key);
        derived.or_else(|| self.lookup(w, p, Polarity::Holds))
    }

    fn derive_holds(&mut self, w: &Word, p: Property) -> Option<PropertyCertificate> {
        use Property::*;
        let found = match p {
            Dominant => self
                .implied_by(w, &[Surjective, Open, Birational])
                .or_else(|| self.subword_holds(w, p)),
            Surjective => self
                .square_of_dominant(w)
                .or_else(|| self.subword_holds(w, p))
                .or_else(|| self.implied_by(w, &[Irreducible])),
            Open => self.power_open(w).or_else(|| self.subword_holds(w, p)),
            Birational => None,
            Irreducible => self.power_bound(w).or_else(|| self.sandwich(w)),
        };
        found.or_else(|| self.collapse(w, p, Polarity::Holds))
    }

    fn implied_by(&mut self, w: &Word, stronger: &[Property]) -> Option<PropertyCertificate> {
        let target = match stronger {
            [Property::Irreducible] => Property::Surjective,
            _ => Property::Dominant,
        };
        for &q in stronger {
            if let Some(c) = self.holds(w, q, false) {
                return Some(PropertyCertificate::rule(
                    w.clone(),
                    target,
                    Polarity::Holds,
                    Rule::Implication,
                    vec![c],
                ));
            }
        }
        None
    }

    /// Witnesses for containment: base words, their squares (for surjectivity)
    /// and their `dim G + 1` powers (for openness).
    fn witnesses(&self, p: Property) -> Vec<Word> {
        let mut out = self.base.clone();
        match p {
            Property::Surjective => out.extend(self.base.iter().map(|b| b.power(2))),
            Property::Open => out.extend(self.base.iter().map(|b| b.power(self.dim() + 1))),
            _ => {}
        }
        out
    }

    fn subword_holds(&mut self, w: &Word, p: Property) -> Option<PropertyCertificate> {
        for u in self.witnesses(p) {
            if &u == w || u.len() > w.len() {
                continue;
            }
            let contained = match p {
                Property::Open => contains_consecutive(w, &u),
                _ => contains_subsequence(w, &u),
            };
            if !contained {
                continue;
            }
            if let Some(c) = self.holds(&u, p, false) {
                return Some(PropertyCertificate::rule(
                    w.clone(),
                    p,
                    Polarity::Holds,
                    Rule::SubwordPropagation,
                    vec![c],
                ));
            }
        }
        None
    }

    fn square_of_dominant(&mut self, w: &Word) -> Option<PropertyCertificate> {
        let half = w.len() / 2;
        if !w.len().is_multiple_of(2) || half == 0 {
            return None;
        }
        let v = w.slice(0, half)?;
        if v.power(2) != *w {
            return None;
        }
        let c = self.holds(&v, Property::Dominant, false)?;
        Some(PropertyCertificate::rule(
            w.clone(),
            Property::Surjective,
            Polarity::Holds,
            Rule::SquareOfDominant,
            vec![c],
        ))
    }

    fn power_open(&mut self, w: &Word) -> Option<PropertyCertificate> {
        let k = self.dim() + 1;
        if !w.len().is_multiple_of(k) {
            return None;
        }
        let u = w.slice(0, w.len() / k)?;
        if u.power(k) != *w {
            return None;
        }
        let c = self.holds(&u, Property::Dominant, false)?;
        Some(PropertyCertificate::rule(w.clone(), Property::Open, Polarity::Holds, Rule::PowerOpen, vec![c]))
    }

    /// Locates `normalize(core)` inside `normalize(w)`. Returns the word
    /// `s' core t'` (same normal form as `w`) when found.
    fn embed(&self, w: &Word, core: &Word) -> Option<Word> {
        if contains_consecutive(w, core) {
            return Some(w.clone());
        }
        let nw = self.normal(w)?;
        let nc = self.normal(core)?;
        let (wl, cl) = (nw.letters(), nc.letters());
        if cl.len() > wl.len() {
            return None;
        }
        let start = (0..=wl.len() - cl.len()).find(|&s| &wl[s..s + cl.len()] == cl)?;
        let mut letters = wl[..start].to_vec();
        letters.extend_from_slice(core.letters());
        letters.extend_from_slice(&wl[start + cl.len()..]);
        Word::new(letters).ok()
    }

    /// Wraps a certificate for `w_star` into one for `w` by collapse when the
    /// two words differ.
    fn via_collapse(&self, w: &Word, w_star: Word, c: PropertyCertificate) -> PropertyCertificate {
        if &w_star == w {
            c
        } else {
            PropertyCertificate::rule(w.clone(), c.property, c.polarity, Rule::RepetitionCollapse, vec![c])
        }
    }

    fn power_bound(&mut self, w: &Word) -> Option<PropertyCertificate> {
        let k = self.dim() + 1;
        for b in self.base.clone() {
            let Some(w_star) = self.embed(w, &b.power(k + 1)) else { continue };
            let Some(bir) = self.holds(&b, Property::Birational, false) else { continue };
            let Some(open) = self.holds(&b.power(k), Property::Open, false) else { continue };
            let c = PropertyCertificate::rule(
                w_star.clone(),
                Property::Irreducible,
                Polarity::Holds,
                Rule::MainTheoremBound,
                vec![open, bir],
            );
            return Some(self.via_collapse(w, w_star, c));
        }
        None
    }

    fn sandwich(&mut self, w: &Word) -> Option<PropertyCertificate> {
        let opens = self.witnesses(Property::Open);
        let birationals: Vec<Word> = self.base.clone();
        for y in &birationals {
            for x in &opens {
                let core = x.concat(y);
                let Some(w_star) = self.embed(w, &core) else { continue };
                let Some(bir) = self.holds(y, Property::Birational, false) else { continue };
                let Some(open) = self.holds(x, Property::Open, false) else { continue };
                let c = PropertyCertificate::rule(
                    w_star.clone(),
                    Property::Irreducible,
                    Polarity::Holds,
                    Rule::SandwichIrreducible,
                    vec![open, bir],
                );
                return Some(self.via_collapse(w, w_star, c));
            }
        }
        None
    }

    /// Transfers `(p, polarity)` between words with the same normal form.
    fn collapse(&mut self, w: &Word, p: Property, polarity: Polarity) -> Option<PropertyCertificate> {
        if p == Property::Birational {
            return None;
        }
        let nw = self.normal(w)?;
        let mut sources: Vec<Word> = Vec::new();
        if nw != *w {
            sources.push(nw.clone());
        }
        for b in self.base.clone() {
            if b != *w && !sources.contains(&b) && self.normal(&b).as_ref() == Some(&nw) {
                sources.push(b);
            }
        }
        for s in sources {
            let c = match polarity {
                Polarity::Holds => self.holds(&s, p, false),
                _ => self.fails_inner(&s, p),
            };
            if let Some(c) = c {
                return Some(PropertyCertificate::rule(
                    w.clone(),
                    p,
                    polarity,
                    Rule::RepetitionCollapse,
                    vec![c],
                ));
            }
        }
        None
    }

    fn fails(&mut self, w: &Word, p: Property) -> Option<PropertyCertificate> {
        self.fails_inner(w, p)
    }

    fn fails_inner(&mut self, w: &Word, p: Property) -> Option<PropertyCertificate> {
        let key = (w.clone(), p, false);
        if self.active.len() >= MAX_DEPTH || self.active.contains(&key) {
            return None;
        }
        if let Some(c) = self.lookup(w, p, Polarity::Fails) {
            return Some(c);
        }
        self.active.insert(key.clone());
        let weaker: &[Property] = match p {
            Property::Dominant => &[],
            Property::Irreducible => &[Property::Surjective, Property::Dominant],
            _ => &[Property::Dominant],
        };
        let mut found = None;
        for &q in weaker {
            if let Some(c) = self.fails_inner(w, q) {
                found = Some(PropertyCertificate::rule(
                    w.clone(),
                    p,
                    Polarity::Fails,
                    Rule::Implication,
                    vec![c],
                ));
                break;
            }
        }
        let found = found.or_else(|| self.collapse(w, p, Polarity::Fails));
        self.active.remove(&key);
        found
    }
}

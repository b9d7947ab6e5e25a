//! Integer polynomials in the Plücker variables `p_ij`, `i < j`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::Label;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("variable p_{{{0},{1}}} needs two distinct positive labels")]
    BadVariable(Label, Label),
    #[error("zero coefficient in stored term")]
    ZeroCoefficient,
    #[error("coefficient overflow")]
    Overflow,
}

/// The variable `p_ij`, always stored with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PluckerVar {
    i: Label,
    j: Label,
}

impl PluckerVar {
    /// Orders the two labels; fails on equal or zero labels.
    pub fn new(a: Label, b: Label) -> Result<Self, PolyError> {
        if a == b || a == 0 || b == 0 {
            return Err(PolyError::BadVariable(a, b));
        }
        Ok(PluckerVar {
            i: a.min(b),
            j: a.max(b),
        })
    }

    pub fn i(&self) -> Label {
        self.i
    }

    pub fn j(&self) -> Label {
        self.j
    }

    pub fn contains(&self, label: Label) -> bool {
        self.i == label || self.j == label
    }

    /// Short form `p14`, with a comma once a label has two digits.
    pub fn compact(&self) -> String {
        if self.j < 10 {
            format!("p{}{}", self.i, self.j)
        } else {
            format!("p{},{}", self.i, self.j)
        }
    }
}

impl fmt::Display for PluckerVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p_{{{},{}}}", self.i, self.j)
    }
}

/// Shorthand for tests and fixed examples; panics on a bad pair.
pub fn p(a: Label, b: Label) -> PluckerVar {
    PluckerVar::new(a, b).expect("distinct positive labels")
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub coeff: i64,
    vars: Vec<PluckerVar>,
}

impl Monomial {
    pub fn new(coeff: i64, mut vars: Vec<PluckerVar>) -> Self {
        vars.sort_unstable();
        Monomial { coeff, vars }
    }

    pub fn unit(vars: Vec<PluckerVar>) -> Self {
        Self::new(1, vars)
    }

    pub fn vars(&self) -> &[PluckerVar] {
        &self.vars
    }

    pub fn degree(&self) -> usize {
        self.vars.len()
    }

    pub fn multiplicity(&self, var: PluckerVar) -> usize {
        self.vars.iter().filter(|&&v| v == var).count()
    }

    /// Same variables, coefficient one.
    pub fn support(&self) -> Monomial {
        Monomial {
            coeff: 1,
            vars: self.vars.clone(),
        }
    }

    /// Replaces one occurrence of each variable in `from` with `to`.
    /// Returns `None` when `from` does not divide the monomial.
    pub fn exchange(&self, from: &[PluckerVar], to: &[PluckerVar]) -> Option<Monomial> {
        let mut vars = self.vars.clone();
        for v in from {
            let pos = vars.iter().position(|w| w == v)?;
            vars.remove(pos);
        }
        vars.extend_from_slice(to);
        Some(Monomial::new(self.coeff, vars))
    }

    pub fn compact(&self) -> String {
        let body: String = self.vars.iter().map(PluckerVar::compact).collect();
        match self.coeff {
            1 => body,
            -1 => format!("-{body}"),
            c => format!("{c}{body}"),
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.coeff {
            1 => {}
            -1 => write!(f, "-")?,
            c => write!(f, "{c}")?,
        }
        if self.vars.is_empty() {
            return write!(f, "{}", self.coeff.abs());
        }
        for v in &self.vars {
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Canonical sparse polynomial: terms keyed by their sorted variable list,
/// no zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SparsePoly {
    terms: BTreeMap<Vec<PluckerVar>, i64>,
}

impl SparsePoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms<I: IntoIterator<Item = Monomial>>(terms: I) -> Self {
        let mut out = Self::zero();
        for m in terms {
            out.add_term(m.coeff, m.vars);
        }
        out
    }

    fn add_term(&mut self, coeff: i64, vars: Vec<PluckerVar>) {
        if coeff == 0 {
            return;
        }
        let entry = self.terms.entry(vars).or_insert(0);
        *entry = entry.checked_add(coeff).expect("coefficient overflow");
        if *entry == 0 {
            self.terms.retain(|_, c| *c != 0);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.terms.iter().map(|(v, &c)| Monomial {
            coeff: c,
            vars: v.clone(),
        })
    }

    pub fn coefficient(&self, vars: &[PluckerVar]) -> i64 {
        let mut key = vars.to_vec();
        key.sort_unstable();
        self.terms.get(&key).copied().unwrap_or(0)
    }

    /// True when the variable multiset of `m` is a term, whatever its coefficient.
    pub fn contains_support(&self, m: &Monomial) -> bool {
        self.terms.contains_key(&m.vars)
    }

    pub fn scale(&self, factor: i64) -> SparsePoly {
        SparsePoly::from_terms(self.terms().map(|m| Monomial {
            coeff: m.coeff * factor,
            vars: m.vars,
        }))
    }

    /// True when `self = ±other`.
    pub fn equal_up_to_sign(&self, other: &SparsePoly) -> bool {
        self == other || *self == -other.clone()
    }

    /// Substitutes integer values for the variables.
    pub fn evaluate<F: FnMut(PluckerVar) -> BigInt>(&self, mut value: F) -> BigInt {
        let mut cache: BTreeMap<PluckerVar, BigInt> = BTreeMap::new();
        let mut total = BigInt::zero();
        for (vars, &c) in &self.terms {
            let mut term = BigInt::from(c);
            for v in vars {
                let x = cache.entry(*v).or_insert_with(|| value(*v));
                term *= &*x;
            }
            total += term;
        }
        total
    }

    /// Evaluates at the upper triangle of a skew-symmetric matrix, indexed
    /// from zero so that `p_ij` reads `matrix[i-1][j-1]`.
    pub fn evaluate_skew(&self, matrix: &[Vec<i64>]) -> BigInt {
        self.evaluate(|v| BigInt::from(matrix[v.i - 1][v.j - 1]))
    }

    /// Splits `self = g * var + h` where no term of `h` contains `var`.
    pub fn factor_out(&self, var: PluckerVar) -> (SparsePoly, SparsePoly) {
        let mut g = SparsePoly::zero();
        let mut h = SparsePoly::zero();
        for m in self.terms() {
            match m.vars.iter().position(|&w| w == var) {
                Some(pos) => {
                    let mut vars = m.vars;
                    vars.remove(pos);
                    g.add_term(m.coeff, vars);
                }
                None => h.add_term(m.coeff, m.vars),
            }
        }
        (g, h)
    }

    /// All variables that occur, sorted.
    pub fn variables(&self) -> Vec<PluckerVar> {
        let mut out: Vec<PluckerVar> = self.terms.keys().flatten().copied().collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn to_json(&self) -> PolyJson {
        PolyJson {
            terms: self
                .terms()
                .map(|m| TermJson {
                    c: m.coeff,
                    vars: m.vars.iter().map(|v| [v.i, v.j]).collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &PolyJson) -> Result<Self, PolyError> {
        let mut terms = Vec::with_capacity(json.terms.len());
        for t in &json.terms {
            if t.c == 0 {
                return Err(PolyError::ZeroCoefficient);
            }
            let vars = t
                .vars
                .iter()
                .map(|&[a, b]| PluckerVar::new(a, b))
                .collect::<Result<Vec<_>, _>>()?;
            terms.push(Monomial::new(t.c, vars));
        }
        Ok(Self::from_terms(terms))
    }

    /// `p14p25p36 - p14p26p35` style, as the literature writes it.
    pub fn compact(&self) -> String {
        let mut out = String::new();
        for (idx, m) in self.terms().enumerate() {
            let body: String = m.vars.iter().map(PluckerVar::compact).collect();
            let mag = m.coeff.unsigned_abs();
            let coeff = if mag == 1 { String::new() } else { mag.to_string() };
            match (idx, m.coeff < 0) {
                (0, false) => {}
                (0, true) => out.push('-'),
                (_, false) => out.push_str(" + "),
                (_, true) => out.push_str(" - "),
            }
            out.push_str(&coeff);
            out.push_str(&body);
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

impl From<Monomial> for SparsePoly {
    fn from(m: Monomial) -> Self {
        SparsePoly::from_terms([m])
    }
}

impl fmt::Display for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (idx, m) in self.terms().enumerate() {
            let sign = if m.coeff < 0 { '-' } else { '+' };
            if idx > 0 {
                write!(f, " ")?;
            }
            write!(f, "{sign}")?;
            if m.coeff.unsigned_abs() != 1 {
                write!(f, "{}", m.coeff.unsigned_abs())?;
            }
            for v in &m.vars {
                write!(f, "{v}")?;
            }
            if m.vars.is_empty() && m.coeff.unsigned_abs() == 1 {
                write!(f, "1")?;
            }
        }
        Ok(())
    }
}

impl Neg for SparsePoly {
    type Output = SparsePoly;
    fn neg(mut self) -> SparsePoly {
        for c in self.terms.values_mut() {
            *c = -*c;
        }
        self
    }
}

impl Add for &SparsePoly {
    type Output = SparsePoly;
    fn add(self, rhs: &SparsePoly) -> SparsePoly {
        let mut out = self.clone();
        for (v, &c) in &rhs.terms {
            out.add_term(c, v.clone());
        }
        out
    }
}

impl Sub for &SparsePoly {
    type Output = SparsePoly;
    fn sub(self, rhs: &SparsePoly) -> SparsePoly {
        self + &(-rhs.clone())
    }
}

impl Mul for &SparsePoly {
    type Output = SparsePoly;
    fn mul(self, rhs: &SparsePoly) -> SparsePoly {
        let mut out = SparsePoly::zero();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &rhs.terms {
                let mut vars = a.clone();
                vars.extend_from_slice(b);
                vars.sort_unstable();
                out.add_term(ca.checked_mul(cb).expect("coefficient overflow"), vars);
            }
        }
        out
    }
}

/// `{terms:[{c, vars:[[i,j],...]}]}`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyJson {
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub c: i64,
    pub vars: Vec<[Label; 2]>,
}

/// Parses the compact form, e.g. `"p14p25 - 2p1,10p3,4"`. Labels are single
/// digits unless separated by a comma.
pub fn parse_compact(text: &str) -> Option<SparsePoly> {
    let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut terms = Vec::new();
    let mut rest = cleaned.as_str();
    while !rest.is_empty() {
        let mut sign = 1i64;
        if let Some(r) = rest.strip_prefix('+') {
            rest = r;
        } else if let Some(r) = rest.strip_prefix('-') {
            sign = -1;
            rest = r;
        }
        let end = rest[1..].find(['+', '-']).map_or(rest.len(), |i| i + 1);
        let (term, tail) = rest.split_at(end);
        rest = tail;
        let digits: String = term.chars().take_while(|c| c.is_ascii_digit()).collect();
        let coeff: i64 = if digits.is_empty() { 1 } else { digits.parse().ok()? };
        let mut vars = Vec::new();
        for chunk in term[digits.len()..].split('p').skip(1) {
            let (a, b) = match chunk.split_once(',') {
                Some((a, b)) => (a.parse().ok()?, b.parse().ok()?),
                None if chunk.len() == 2 => (
                    chunk[..1].parse().ok()?,
                    chunk[1..].parse().ok()?,
                ),
                None => return None,
            };
            vars.push(PluckerVar::new(a, b).ok()?);
        }
        terms.push(Monomial::new(sign * coeff, vars));
    }
    Some(SparsePoly::from_terms(terms))
}

/// Constant one, useful as a product seed.
pub fn one() -> SparsePoly {
    SparsePoly::from_terms([Monomial::new(1, Vec::new())])
}

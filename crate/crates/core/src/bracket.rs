//! Formal rational combinations of manifold models, the alternating bracket
//! over surgery subsets, and exact evaluation of polynomial invariants built
//! from the additive symbols lambda_{k,i}.
//!
//! Models are multisets of primitive summands, so only connected-sum
//! surgeries are represented; that is all the degree-1 and product identities
//! exercised here require.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::homology::{bigint_valuation, GroupPresentation, Order};
use crate::linking::is_prime;
use crate::matrix::{format_fraction, parse_fraction};

#[derive(Debug, Error)]
pub enum BracketError {
    #[error("no evaluation entry for symbol {symbol} on label {label}")]
    MissingEntry { symbol: String, label: String },
    #[error("model {0} has infinite first homology")]
    InfiniteOrder(String),
    #[error("normalizer of {0} evaluated to zero")]
    ZeroNormalizer(String),
    #[error("invalid formal sum json: {0}")]
    Json(String),
}

/// A primitive connected summand: either a concrete rational homology
/// sphere payload or an abstract generator tag g_{k,i} evaluated through
/// delta-normalized tables.
#[derive(Clone, Debug)]
pub enum Primitive {
    Concrete {
        label: String,
        h1: GroupPresentation,
    },
    Abstract {
        k: usize,
        i: String,
    },
}

impl Primitive {
    pub fn concrete(label: &str, h1: GroupPresentation) -> Self {
        Primitive::Concrete {
            label: label.to_string(),
            h1,
        }
    }

    /// The model M_p with H_1 = Z_p.
    pub fn m_p(p: u64) -> Self {
        Primitive::concrete(&format!("M_{p}"), GroupPresentation::cyclic(p, "t"))
    }

    /// Abstract generator tag; degree-1 tags are written g<p>, higher
    /// degrees g<k>_<i>.
    pub fn abstract_gen(k: usize, i: &str) -> Self {
        Primitive::Abstract {
            k,
            i: i.to_string(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Primitive::Concrete { label, .. } => label.clone(),
            Primitive::Abstract { k: 1, i } => format!("g{i}"),
            Primitive::Abstract { k, i } => format!("g{k}_{i}"),
        }
    }
}

// identity of a primitive is its label; payloads are assumed consistent
// per label within a computation
impl PartialEq for Primitive {
    fn eq(&self, other: &Self) -> bool {
        self.label() == other.label()
    }
}
impl Eq for Primitive {}
impl PartialOrd for Primitive {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Primitive {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.label().cmp(&other.label())
    }
}

/// Multiset of primitive summands; the empty multiset is S^3 and connected
/// sum is multiset union.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ManifoldModel {
    summands: Vec<Primitive>,
}

impl ManifoldModel {
    pub fn s3() -> Self {
        ManifoldModel {
            summands: Vec::new(),
        }
    }

    pub fn from_summands(mut summands: Vec<Primitive>) -> Self {
        summands.sort();
        ManifoldModel { summands }
    }

    pub fn summands(&self) -> &[Primitive] {
        &self.summands
    }

    pub fn connected_sum(&self, p: &Primitive) -> ManifoldModel {
        let mut s = self.summands.clone();
        s.push(p.clone());
        s.sort();
        ManifoldModel { summands: s }
    }

    pub fn connected_sum_model(&self, other: &ManifoldModel) -> ManifoldModel {
        let mut s = self.summands.clone();
        s.extend(other.summands.iter().cloned());
        s.sort();
        ManifoldModel { summands: s }
    }

    pub fn key(&self) -> Vec<String> {
        self.summands.iter().map(Primitive::label).collect()
    }
}

impl fmt::Display for ManifoldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.summands.is_empty() {
            write!(f, "S3")
        } else {
            write!(f, "{}", self.key().join("#"))
        }
    }
}

/// Finite rational combination of models; no zero coefficients stored.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FormalSum {
    terms: BTreeMap<ManifoldModel, BigRational>,
}

impl FormalSum {
    pub fn zero() -> Self {
        FormalSum::default()
    }

    pub fn from_model(m: ManifoldModel) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(m, BigRational::one());
        FormalSum { terms }
    }

    pub fn terms(&self) -> &BTreeMap<ManifoldModel, BigRational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: ManifoldModel, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m.clone()).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &FormalSum) -> FormalSum {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &FormalSum) -> FormalSum {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, c: &BigRational) -> FormalSum {
        if c.is_zero() {
            return FormalSum::zero();
        }
        FormalSum {
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v * c))
                .collect(),
        }
    }

    /// Bilinear extension of connected sum.
    pub fn cs_product(&self, other: &FormalSum) -> FormalSum {
        let mut out = FormalSum::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.connected_sum_model(mb), ca * cb);
            }
        }
        out
    }

    pub fn cs_power(&self, e: u32) -> FormalSum {
        let mut out = FormalSum::from_model(ManifoldModel::s3());
        for _ in 0..e {
            out = out.cs_product(self);
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "terms": self.terms.iter().map(|(m, c)| json!({
                "model": m.key(),
                "coeff": format_fraction(c),
            })).collect::<Vec<_>>(),
        })
    }

    /// Reads a sum whose model labels are abstract tags (g<p> or g<k>_<i>)
    /// or M_<p> concrete lens models.
    pub fn from_json(v: &Value) -> Result<Self, BracketError> {
        let terms = v
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| BracketError::Json("missing terms".into()))?;
        let mut out = FormalSum::zero();
        for t in terms {
            let labels = t
                .get("model")
                .and_then(Value::as_array)
                .ok_or_else(|| BracketError::Json("missing model".into()))?;
            let summands = labels
                .iter()
                .map(|l| {
                    l.as_str()
                        .ok_or_else(|| BracketError::Json("label must be a string".into()))
                        .and_then(parse_label)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let coeff = t
                .get("coeff")
                .and_then(Value::as_str)
                .ok_or_else(|| BracketError::Json("missing coeff".into()))?;
            let coeff = parse_fraction(coeff)
                .ok_or_else(|| BracketError::Json(format!("bad coefficient {coeff:?}")))?;
            out.add_term(ManifoldModel::from_summands(summands), coeff);
        }
        Ok(out)
    }
}

/// Parses a primitive label: "g5" (abstract degree-1 tag for the prime 5),
/// "g4_c0" (abstract degree-4 tag), or "M_7" (concrete Z_7 model).
pub fn parse_label(s: &str) -> Result<Primitive, BracketError> {
    if let Some(rest) = s.strip_prefix("M_") {
        let p: u64 = rest
            .parse()
            .map_err(|_| BracketError::Json(format!("bad label {s:?}")))?;
        return Ok(Primitive::m_p(p));
    }
    let rest = s
        .strip_prefix('g')
        .ok_or_else(|| BracketError::Json(format!("bad label {s:?}")))?;
    match rest.split_once('_') {
        Some((k, i)) => {
            let k: usize = k
                .parse()
                .map_err(|_| BracketError::Json(format!("bad label {s:?}")))?;
            Ok(Primitive::abstract_gen(k, i))
        }
        None => {
            rest.parse::<u64>()
                .map_err(|_| BracketError::Json(format!("bad label {s:?}")))?;
            Ok(Primitive::abstract_gen(1, rest))
        }
    }
}

/// A surgery to adjoin: at this model level, a connected summand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurgeryDatum {
    pub summand: Primitive,
}

impl SurgeryDatum {
    pub fn new(summand: Primitive) -> Self {
        SurgeryDatum { summand }
    }
}

/// [M; data] = sum over subsets I of the data of (-1)^|I| M # (summands in I).
pub fn bracket(base: &ManifoldModel, data: &[SurgeryDatum]) -> FormalSum {
    let n = data.len();
    let mut out = FormalSum::zero();
    for mask in 0u64..(1 << n) {
        let mut model = base.clone();
        for (i, d) in data.iter().enumerate() {
            if mask & (1 << i) != 0 {
                model = model.connected_sum(&d.summand);
            }
        }
        let sign = if mask.count_ones() % 2 == 0 {
            BigRational::one()
        } else {
            -BigRational::one()
        };
        out.add_term(model, sign);
    }
    out
}

/// Primitive invariant symbol lambda_{k,i}; nu_p is lambda_{1,p}.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Symbol {
    pub k: usize,
    pub i: String,
}

impl Symbol {
    pub fn new(k: usize, i: &str) -> Self {
        Symbol {
            k,
            i: i.to_string(),
        }
    }

    pub fn nu(p: u64) -> Self {
        Symbol::new(1, &p.to_string())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.k == 1 {
            write!(f, "nu_{}", self.i)
        } else {
            write!(f, "lambda_{}_{}", self.k, self.i)
        }
    }
}

pub type Monomial = BTreeMap<Symbol, u32>;

/// Polynomial with rational coefficients in the primitive symbols.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct InvariantExpr {
    terms: BTreeMap<Monomial, BigRational>,
}

impl InvariantExpr {
    pub fn zero() -> Self {
        InvariantExpr::default()
    }

    pub fn constant(c: BigRational) -> Self {
        let mut e = InvariantExpr::zero();
        e.add_monomial(Monomial::new(), c);
        e
    }

    pub fn from_monomial(m: Monomial, c: BigRational) -> Self {
        let mut e = InvariantExpr::zero();
        e.add_monomial(m, c);
        e
    }

    pub fn symbol(s: Symbol) -> Self {
        let mut m = Monomial::new();
        m.insert(s, 1);
        let mut e = InvariantExpr::zero();
        e.add_monomial(m, BigRational::one());
        e
    }

    pub fn nu(p: u64) -> Self {
        InvariantExpr::symbol(Symbol::nu(p))
    }

    fn add_monomial(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m.clone()).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &InvariantExpr) -> InvariantExpr {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_monomial(m.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> InvariantExpr {
        let mut out = InvariantExpr::zero();
        for (m, v) in &self.terms {
            out.add_monomial(m.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &InvariantExpr) -> InvariantExpr {
        let mut out = InvariantExpr::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut m = ma.clone();
                for (s, e) in mb {
                    *m.entry(s.clone()).or_insert(0) += e;
                }
                out.add_monomial(m, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> InvariantExpr {
        let mut out = InvariantExpr::constant(BigRational::one());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, BigRational> {
        &self.terms
    }

    /// Weighted degree: max over monomials of the sum of symbol degrees
    /// times exponents.
    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|m| m.iter().map(|(s, e)| s.k * *e as usize).sum())
            .max()
            .unwrap_or(0)
    }

    /// True if the expression is a sum of single symbols (an additive
    /// invariant vanishing on S^3).
    pub fn is_additive(&self) -> bool {
        self.terms
            .keys()
            .all(|m| m.len() == 1 && m.values().all(|&e| e == 1))
    }
}

/// Evaluation tables for symbols on primitive labels. Abstract tags default
/// to the delta normalization lambda_{k,i}(g_{l,j}) = [k=l][i=j]; concrete
/// payloads evaluate nu_p by p-adic valuation of |H_1|.
#[derive(Clone, Debug, Default)]
pub struct EvalContext {
    overrides: BTreeMap<(Symbol, String), BigRational>,
}

impl EvalContext {
    pub fn new() -> Self {
        EvalContext::default()
    }

    pub fn with_entry(mut self, sym: Symbol, label: &str, value: BigRational) -> Self {
        self.overrides.insert((sym, label.to_string()), value);
        self
    }

    fn symbol_on_primitive(
        &self,
        sym: &Symbol,
        prim: &Primitive,
    ) -> Result<BigRational, BracketError> {
        if let Some(v) = self.overrides.get(&(sym.clone(), prim.label())) {
            return Ok(v.clone());
        }
        match prim {
            Primitive::Abstract { k, i } => {
                if *k == sym.k && *i == sym.i {
                    Ok(BigRational::one())
                } else {
                    Ok(BigRational::zero())
                }
            }
            Primitive::Concrete { label, h1 } => {
                if sym.k == 1 {
                    if let Ok(p) = sym.i.parse::<u64>() {
                        if is_prime(p) {
                            return match h1.order() {
                                Order::Finite(n) => Ok(BigRational::from(BigInt::from(
                                    bigint_valuation(&n, p),
                                ))),
                                Order::Infinite => {
                                    Err(BracketError::InfiniteOrder(label.clone()))
                                }
                            };
                        }
                    }
                }
                Err(BracketError::MissingEntry {
                    symbol: sym.to_string(),
                    label: label.clone(),
                })
            }
        }
    }

    /// Symbols are additive over connected summands.
    pub fn symbol_on_model(
        &self,
        sym: &Symbol,
        model: &ManifoldModel,
    ) -> Result<BigRational, BracketError> {
        let mut acc = BigRational::zero();
        for p in model.summands() {
            acc += self.symbol_on_primitive(sym, p)?;
        }
        Ok(acc)
    }

    pub fn expr_on_model(
        &self,
        e: &InvariantExpr,
        model: &ManifoldModel,
    ) -> Result<BigRational, BracketError> {
        let mut acc = BigRational::zero();
        for (mono, coeff) in e.terms() {
            let mut prod = coeff.clone();
            for (sym, exp) in mono {
                let v = self.symbol_on_model(sym, model)?;
                for _ in 0..*exp {
                    prod *= &v;
                }
                if prod.is_zero() {
                    break;
                }
            }
            acc += prod;
        }
        Ok(acc)
    }

    pub fn evaluate(
        &self,
        e: &InvariantExpr,
        s: &FormalSum,
    ) -> Result<BigRational, BracketError> {
        let mut acc = BigRational::zero();
        for (model, coeff) in s.terms() {
            acc += coeff * self.expr_on_model(e, model)?;
        }
        Ok(acc)
    }
}

/// Checks the subset-sum product identity
/// lm([M; data]) = sum over J of l([M; J]) m([M(J); data \ J]) exactly.
pub fn verify_product_identity(
    lambda: &InvariantExpr,
    mu: &InvariantExpr,
    base: &ManifoldModel,
    data: &[SurgeryDatum],
    ctx: &EvalContext,
) -> Result<bool, BracketError> {
    let lhs = ctx.evaluate(&lambda.mul(mu), &bracket(base, data))?;
    let n = data.len();
    let mut rhs = BigRational::zero();
    for mask in 0u64..(1 << n) {
        let mut inside = Vec::new();
        let mut outside = Vec::new();
        for (i, d) in data.iter().enumerate() {
            if mask & (1 << i) != 0 {
                inside.push(d.clone());
            } else {
                outside.push(d.clone());
            }
        }
        let mut surged = base.clone();
        for d in &inside {
            surged = surged.connected_sum(&d.summand);
        }
        rhs += ctx.evaluate(lambda, &bracket(base, &inside))?
            * ctx.evaluate(mu, &bracket(&surged, &outside))?;
    }
    Ok(lhs == rhs)
}

/// Surjection-sum formula for a product of additive invariants on a
/// connected sum of brackets: the product evaluates as a sum over all
/// surjections of the factor set onto the bracket set.
pub fn verify_surjection_identity(
    lambdas: &[InvariantExpr],
    brackets: &[FormalSum],
    ctx: &EvalContext,
) -> Result<bool, BracketError> {
    let p = lambdas.len();
    let q = brackets.len();
    let mut product = InvariantExpr::constant(BigRational::one());
    for l in lambdas {
        product = product.mul(l);
    }
    let mut cs = FormalSum::from_model(ManifoldModel::s3());
    for b in brackets {
        cs = cs.cs_product(b);
    }
    let lhs = ctx.evaluate(&product, &cs)?;
    let mut rhs = BigRational::zero();
    let mut assignment = vec![0usize; p];
    loop {
        // check surjectivity of this map {1..p} -> {1..q}
        let mut hit = vec![false; q];
        for &a in &assignment {
            hit[a] = true;
        }
        if hit.iter().all(|&h| h) {
            let mut term = BigRational::one();
            for (l, b) in brackets.iter().enumerate() {
                let mut factor = InvariantExpr::constant(BigRational::one());
                for (i, lam) in lambdas.iter().enumerate() {
                    if assignment[i] == l {
                        factor = factor.mul(lam);
                    }
                }
                term *= ctx.evaluate(&factor, b)?;
            }
            rhs += term;
        }
        // next assignment in lexicographic order
        let mut pos = 0;
        loop {
            if pos == p {
                return Ok(lhs == rhs);
            }
            assignment[pos] += 1;
            if assignment[pos] < q {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

/// Relation (*): M#N - S^3 agrees with (M - S^3) + (N - S^3) up to degree 1,
/// checked by evaluating every nu_p with p dividing the orders involved.
pub fn star_relation_check(a: &ManifoldModel, b: &ManifoldModel) -> Result<bool, BracketError> {
    let ctx = EvalContext::new();
    let s3 = FormalSum::from_model(ManifoldModel::s3());
    let lhs = FormalSum::from_model(a.connected_sum_model(b)).sub(&s3);
    let rhs = FormalSum::from_model(a.clone())
        .sub(&s3)
        .add(&FormalSum::from_model(b.clone()).sub(&s3));
    let diff = lhs.sub(&rhs);
    let mut primes = vec![2u64, 3];
    for model in [a, b] {
        for prim in model.summands() {
            if let Primitive::Concrete { label, h1 } = prim {
                match h1.order() {
                    Order::Finite(n) => {
                        let mut n = n.abs();
                        let mut p = BigInt::from(2u64);
                        while &p * &p <= n {
                            if (&n % &p).is_zero() {
                                primes.push(p.to_string().parse().unwrap());
                                while (&n % &p).is_zero() {
                                    n /= &p;
                                }
                            }
                            p += 1;
                        }
                        if n > BigInt::one() {
                            primes.push(n.to_string().parse().unwrap());
                        }
                    }
                    Order::Infinite => return Err(BracketError::InfiniteOrder(label.clone())),
                }
            }
        }
    }
    primes.sort_unstable();
    primes.dedup();
    for p in primes {
        if !ctx.evaluate(&InvariantExpr::nu(p), &diff)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64) -> BigRational {
        BigRational::from(BigInt::from(n))
    }

    fn g(p: u64) -> SurgeryDatum {
        SurgeryDatum::new(Primitive::abstract_gen(1, &p.to_string()))
    }

    #[test]
    fn empty_bracket_is_base() {
        let b = bracket(&ManifoldModel::s3(), &[]);
        assert_eq!(b.terms().len(), 1);
        assert_eq!(b.terms()[&ManifoldModel::s3()], rat(1));
    }

    #[test]
    fn two_term_expansion() {
        let b = bracket(&ManifoldModel::s3(), &[g(2)]);
        assert_eq!(b.terms().len(), 2);
        assert_eq!(b.terms()[&ManifoldModel::s3()], rat(1));
        let mp = ManifoldModel::from_summands(vec![Primitive::abstract_gen(1, "2")]);
        assert_eq!(b.terms()[&mp], rat(-1));
    }

    #[test]
    fn four_term_signs() {
        let b = bracket(&ManifoldModel::s3(), &[g(2), g(3)]);
        assert_eq!(b.terms().len(), 4);
        let signs: Vec<i64> = b
            .terms()
            .iter()
            .map(|(m, c)| {
                assert!(c.is_integer());
                let s: i64 = c.to_integer().to_string().parse().unwrap();
                s * (1 - 2 * (m.summands().len() as i64 % 2))
            })
            .collect();
        // sign is (-1)^{number of adjoined summands} for every term
        assert!(signs.iter().all(|&s| s == 1));
    }

    #[test]
    fn bracket_recursion() {
        let data = [g(2), g(3)];
        let extra = g(5);
        let base = ManifoldModel::s3();
        let lhs = bracket(&base, &[data.as_slice(), &[extra.clone()]].concat());
        let rhs = bracket(&base, &data)
            .sub(&bracket(&base.connected_sum(&extra.summand), &data));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn nu_p_on_single_bracket() {
        let ctx = EvalContext::new();
        let b = bracket(&ManifoldModel::s3(), &[g(2)]);
        assert_eq!(ctx.evaluate(&InvariantExpr::nu(2), &b).unwrap(), rat(-1));
    }

    #[test]
    fn product_on_double_bracket() {
        let ctx = EvalContext::new();
        let b = bracket(&ManifoldModel::s3(), &[g(2), g(3)]);
        let e = InvariantExpr::nu(2).mul(&InvariantExpr::nu(3));
        assert_eq!(ctx.evaluate(&e, &b).unwrap(), rat(1));
    }

    #[test]
    fn vanishing_above_degree() {
        let ctx = EvalContext::new();
        // degree-1 invariant on a 2-datum bracket
        let b2 = bracket(&ManifoldModel::s3(), &[g(2), g(2)]);
        assert!(ctx.evaluate(&InvariantExpr::nu(2), &b2).unwrap().is_zero());
        // degree-2 invariant on a 3-datum bracket
        let b3 = bracket(&ManifoldModel::s3(), &[g(2), g(3), g(2)]);
        let e = InvariantExpr::nu(2).mul(&InvariantExpr::nu(3));
        assert!(ctx.evaluate(&e, &b3).unwrap().is_zero());
    }

    #[test]
    fn concrete_and_abstract_paths_agree() {
        let ctx = EvalContext::new();
        for p in [2u64, 3, 5] {
            let concrete = ManifoldModel::from_summands(vec![Primitive::m_p(p)]);
            let abstr = ManifoldModel::from_summands(vec![Primitive::abstract_gen(
                1,
                &p.to_string(),
            )]);
            let nu = InvariantExpr::nu(p);
            assert_eq!(ctx.expr_on_model(&nu, &concrete).unwrap(), rat(1));
            assert_eq!(ctx.expr_on_model(&nu, &abstr).unwrap(), rat(1));
        }
        // valuation path sees higher torsion
        let m8 = ManifoldModel::from_summands(vec![Primitive::concrete(
            "M_8",
            GroupPresentation::cyclic(8, "t"),
        )]);
        assert_eq!(
            ctx.expr_on_model(&InvariantExpr::nu(2), &m8).unwrap(),
            rat(3)
        );
    }

    #[test]
    fn missing_entry_is_reported() {
        let ctx = EvalContext::new();
        let m = ManifoldModel::from_summands(vec![Primitive::m_p(5)]);
        let e = InvariantExpr::symbol(Symbol::new(2, "c0"));
        match ctx.expr_on_model(&e, &m) {
            Err(BracketError::MissingEntry { symbol, label }) => {
                assert!(symbol.contains('2'));
                assert_eq!(label, "M_5");
            }
            other => panic!("expected missing entry, got {other:?}"),
        }
    }

    #[test]
    fn table_override_takes_precedence() {
        let ctx = EvalContext::new().with_entry(Symbol::nu(2), "g2", rat(7));
        let m = ManifoldModel::from_summands(vec![Primitive::abstract_gen(1, "2")]);
        assert_eq!(ctx.expr_on_model(&InvariantExpr::nu(2), &m).unwrap(), rat(7));
    }

    #[test]
    fn product_identity_small_cases() {
        let ctx = EvalContext::new();
        let nu2 = InvariantExpr::nu(2);
        let nu3 = InvariantExpr::nu(3);
        let s3 = ManifoldModel::s3();
        assert!(verify_product_identity(&nu2, &nu2, &s3, &[g(2), g(2)], &ctx).unwrap());
        assert!(verify_product_identity(&nu2, &nu3, &s3, &[g(2), g(3)], &ctx).unwrap());
        assert!(verify_product_identity(&nu2, &nu3, &s3, &[g(2)], &ctx).unwrap());
        // size deg+deg+1 forces both sides to vanish
        let b = bracket(&s3, &[g(2), g(2), g(2)]);
        assert!(ctx.evaluate(&nu2.mul(&nu2), &b).unwrap().is_zero());
    }

    #[test]
    fn surjection_identity_permutation_case() {
        let ctx = EvalContext::new();
        // p = q = 2 distinct additive invariants: the surjection sum is the
        // permutation sum
        let lambdas = [InvariantExpr::nu(2), InvariantExpr::nu(3)];
        let brackets = [
            bracket(&ManifoldModel::s3(), &[g(2)]),
            bracket(&ManifoldModel::s3(), &[g(3)]),
        ];
        assert!(verify_surjection_identity(&lambdas, &brackets, &ctx).unwrap());
        // p < q vanishes
        let one = [InvariantExpr::nu(2)];
        assert!(verify_surjection_identity(&one, &brackets, &ctx).unwrap());
        let cs = brackets[0].cs_product(&brackets[1]);
        assert!(ctx.evaluate(&InvariantExpr::nu(2), &cs).unwrap().is_zero());
    }

    #[test]
    fn star_relation_cases() {
        let m2 = ManifoldModel::from_summands(vec![Primitive::m_p(2)]);
        let m3 = ManifoldModel::from_summands(vec![Primitive::m_p(3)]);
        assert!(star_relation_check(&m2, &m3).unwrap());
        assert!(star_relation_check(&ManifoldModel::s3(), &m3).unwrap());
        let big = ManifoldModel::from_summands(vec![
            Primitive::concrete("L_25", GroupPresentation::cyclic(25, "t")),
            Primitive::m_p(2),
        ]);
        assert!(star_relation_check(&big, &m2).unwrap());
    }

    #[test]
    fn formal_sum_json_round_trip() {
        let b = bracket(&ManifoldModel::s3(), &[g(2), g(3)]);
        let back = FormalSum::from_json(&b.to_json()).unwrap();
        assert_eq!(b, back);
    }

    proptest! {
        #[test]
        fn evaluate_is_linear(
            ps in proptest::collection::vec(prop_oneof![Just(2u64), Just(3), Just(5)], 0..3),
            qs in proptest::collection::vec(prop_oneof![Just(2u64), Just(3), Just(5)], 0..3),
            c in -4i64..5,
        ) {
            let ctx = EvalContext::new();
            let data_p: Vec<SurgeryDatum> = ps.iter().map(|&p| g(p)).collect();
            let data_q: Vec<SurgeryDatum> = qs.iter().map(|&p| g(p)).collect();
            let x = bracket(&ManifoldModel::s3(), &data_p);
            let y = bracket(&ManifoldModel::s3(), &data_q).scale(&rat(c));
            let e = InvariantExpr::nu(2).add(&InvariantExpr::nu(3).mul(&InvariantExpr::nu(5)));
            let both = ctx.evaluate(&e, &x.add(&y)).unwrap();
            let split = ctx.evaluate(&e, &x).unwrap() + ctx.evaluate(&e, &y).unwrap();
            prop_assert_eq!(both, split);
        }

        #[test]
        fn bracket_recursion_holds(
            ps in proptest::collection::vec(prop_oneof![Just(2u64), Just(3), Just(5)], 0..4),
            extra in prop_oneof![Just(2u64), Just(3), Just(5)],
        ) {
            let data: Vec<SurgeryDatum> = ps.iter().map(|&p| g(p)).collect();
            let d = g(extra);
            let base = ManifoldModel::s3();
            let mut all = data.clone();
            all.push(d.clone());
            let lhs = bracket(&base, &all);
            let rhs = bracket(&base, &data)
                .sub(&bracket(&base.connected_sum(&d.summand), &data));
            prop_assert_eq!(lhs, rhs);
        }
    }
}

//! Index sets C_n and T_n, products of basis invariants, the dual system
//! G_{k,i}^{(n)}, the coproduct on the invariant algebra, and the dimension
//! identity tying |T_n| to the augmented diagram spaces.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::augmented::{dim_augmented, PrimeSupport};
use crate::bracket::{
    BracketError, EvalContext, FormalSum, InvariantExpr, ManifoldModel, Monomial, Primitive,
    Symbol,
};
use crate::jacobi;

#[derive(Debug, Error)]
pub enum HopfError {
    #[error("universe has no index data for degree {0}")]
    MissingDegree(usize),
    #[error("normalizer of {0} evaluated to zero")]
    ZeroNormalizer(String),
    #[error(transparent)]
    Eval(#[from] BracketError),
}

/// Ordered index labels per degree: C_1 is a finite set of primes, C_{2m}
/// carries one opaque token per connected diagram basis element of degree m,
/// and C_n is empty for odd n > 1. The total order on indices is
/// lexicographic on (degree, position).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexUniverse {
    c: BTreeMap<usize, Vec<String>>,
    max_degree: usize,
}

impl IndexUniverse {
    /// Universe over a prime support with even levels sized by the
    /// connected diagram dimensions; tokens follow the canonical-key order
    /// of the connected basis.
    pub fn build(max_degree: usize, support: &PrimeSupport) -> Self {
        let mut c = BTreeMap::new();
        c.insert(
            1,
            support.primes().iter().map(|p| p.to_string()).collect(),
        );
        let mut m = 1;
        while 2 * m <= max_degree {
            let count = jacobi::connected_dim(m);
            c.insert(2 * m, (0..count).map(|i| format!("c{i}")).collect());
            m += 1;
        }
        IndexUniverse { c, max_degree }
    }

    /// Universe with explicitly sized levels; labels are synthetic tokens.
    /// Intended for unit tests that must not depend on diagram enumeration.
    pub fn with_sizes(max_degree: usize, primes: &[u64], even_sizes: &[(usize, usize)]) -> Self {
        let mut c = BTreeMap::new();
        c.insert(1, primes.iter().map(|p| p.to_string()).collect());
        for &(k, count) in even_sizes {
            assert!(k > 1 && k % 2 == 0);
            c.insert(k, (0..count).map(|i| format!("c{i}")).collect());
        }
        IndexUniverse { c, max_degree }
    }

    pub fn labels(&self, k: usize) -> &[String] {
        self.c.get(&k).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// All (degree, label) pairs with degree < n, in the total order.
    fn flattened_below(&self, n: usize) -> Vec<(usize, String)> {
        let mut out = Vec::new();
        for (&k, labels) in &self.c {
            if k >= n {
                break;
            }
            for l in labels {
                out.push((k, l.clone()));
            }
        }
        out
    }
}

/// Strictly increasing factor list (degree, label, multiplicity) with
/// positive multiplicities; total degree is the weighted sum.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct MultiIndex {
    factors: Vec<(usize, String, u32)>,
}

impl MultiIndex {
    pub fn new(factors: Vec<(usize, String, u32)>) -> Self {
        debug_assert!(factors.iter().all(|f| f.2 > 0));
        debug_assert!(factors
            .windows(2)
            .all(|w| (w[0].0, &w[0].1) < (w[1].0, &w[1].1)));
        MultiIndex { factors }
    }

    pub fn factors(&self) -> &[(usize, String, u32)] {
        &self.factors
    }

    pub fn degree(&self) -> usize {
        self.factors.iter().map(|(k, _, e)| k * *e as usize).sum()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(k, i, e)| format!("({k},{i})^{e}"))
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// Element of T_n: either an additive index in C_n or a product multi-index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TnIndex {
    Additive(String),
    Product(MultiIndex),
}

impl fmt::Display for TnIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TnIndex::Additive(l) => write!(f, "{l}"),
            TnIndex::Product(mi) => write!(f, "{mi}"),
        }
    }
}

/// T_n = C_n together with all multi-indices of total degree n built from
/// strictly smaller degrees.
pub fn enumerate_tn(n: usize, u: &IndexUniverse) -> Vec<TnIndex> {
    let mut out: Vec<TnIndex> = u
        .labels(n)
        .iter()
        .map(|l| TnIndex::Additive(l.clone()))
        .collect();
    let pool = u.flattened_below(n);
    let mut factors: Vec<(usize, String, u32)> = Vec::new();
    fn rec(
        pool: &[(usize, String)],
        start: usize,
        remaining: usize,
        factors: &mut Vec<(usize, String, u32)>,
        out: &mut Vec<TnIndex>,
    ) {
        if remaining == 0 {
            if !factors.is_empty() {
                out.push(TnIndex::Product(MultiIndex::new(factors.clone())));
            }
            return;
        }
        for idx in start..pool.len() {
            let (k, label) = &pool[idx];
            let max_e = remaining / k;
            for e in 1..=max_e as u32 {
                factors.push((*k, label.clone(), e));
                rec(pool, idx + 1, remaining - k * e as usize, factors, out);
                factors.pop();
            }
        }
    }
    rec(&pool, 0, n, &mut factors, &mut out);
    out
}

/// The invariant attached to an index: the basis symbol for an additive
/// index of degree k, the corresponding monomial for a product index.
pub fn lambda_of(k: usize, idx: &TnIndex) -> InvariantExpr {
    match idx {
        TnIndex::Additive(label) => InvariantExpr::symbol(Symbol::new(k, label)),
        TnIndex::Product(mi) => {
            let mut mono = Monomial::new();
            for (kt, it, e) in mi.factors() {
                mono.insert(Symbol::new(*kt, it), *e);
            }
            InvariantExpr::from_monomial(mono, BigRational::one())
        }
    }
}

/// T_n(i): the product indices whose evaluation can see G_{k,i}. For an
/// additive i in C_k these are the pure powers (k,i)^{n/k}; for a product
/// index they share the factor list with componentwise larger
/// multiplicities.
pub fn tn_of(n: usize, k: usize, idx: &TnIndex) -> Vec<MultiIndex> {
    match idx {
        TnIndex::Additive(label) => {
            if k < n && n % k == 0 {
                let e = (n / k) as u32;
                vec![MultiIndex::new(vec![(k, label.clone(), e)])]
            } else {
                Vec::new()
            }
        }
        TnIndex::Product(mi) => {
            let base: usize = mi.degree();
            if n < base {
                return Vec::new();
            }
            let extra = n - base;
            // distribute the extra degree over the factors in multiples of
            // their degrees
            let mut out = Vec::new();
            let mut bumps: Vec<u32> = vec![0; mi.factors().len()];
            fn rec(
                mi: &MultiIndex,
                pos: usize,
                extra: usize,
                bumps: &mut Vec<u32>,
                out: &mut Vec<MultiIndex>,
            ) {
                if pos == mi.factors().len() {
                    if extra == 0 {
                        let factors = mi
                            .factors()
                            .iter()
                            .zip(bumps.iter())
                            .map(|((k, i, e), b)| (*k, i.clone(), e + b))
                            .collect();
                        out.push(MultiIndex::new(factors));
                    }
                    return;
                }
                let k = mi.factors()[pos].0;
                let mut add = 0;
                while add * k <= extra {
                    bumps[pos] = add as u32;
                    rec(mi, pos + 1, extra - add * k, bumps, out);
                    add += 1;
                }
                bumps[pos] = 0;
            }
            rec(mi, 0, extra, &mut bumps, &mut out);
            // every candidate must itself be a valid element of T_n^pi,
            // which only additionally requires each degree < n
            out.retain(|c| c.factors().iter().all(|(kt, _, _)| *kt < n));
            out
        }
    }
}

/// The generator attached to an additive index: the model of the surgered
/// sphere minus the sphere itself.
fn additive_generator(k: usize, label: &str) -> FormalSum {
    let model = ManifoldModel::from_summands(vec![Primitive::abstract_gen(k, label)]);
    FormalSum::from_model(model).sub(&FormalSum::from_model(ManifoldModel::s3()))
}

/// Connected-sum product of the level-k generators prescribed by a product
/// index, before normalization.
pub fn g_tilde(mi: &MultiIndex) -> FormalSum {
    let mut out = FormalSum::from_model(ManifoldModel::s3());
    for (k, i, e) in mi.factors() {
        out = out.cs_product(&additive_generator(*k, i).cs_power(*e));
    }
    out
}

/// The full dual family G_{k,i}^{(n)} for 0 < k <= n, i in T_k.
pub struct DualSystem {
    pub n: usize,
    pub indices: Vec<(usize, TnIndex)>,
    pub values: BTreeMap<(usize, TnIndex), FormalSum>,
}

pub fn dual_system(n: usize, u: &IndexUniverse) -> Result<DualSystem, HopfError> {
    let ctx = EvalContext::new();
    let mut indices: Vec<(usize, TnIndex)> = Vec::new();
    let mut values: BTreeMap<(usize, TnIndex), FormalSum> = BTreeMap::new();
    for m in 1..=n {
        // level-m generators
        let level: Vec<TnIndex> = enumerate_tn(m, u);
        let mut level_values: BTreeMap<TnIndex, FormalSum> = BTreeMap::new();
        for idx in &level {
            let value = match idx {
                TnIndex::Additive(label) => additive_generator(m, label),
                TnIndex::Product(mi) => {
                    let tilde = g_tilde(mi);
                    let normalizer = ctx.evaluate(&lambda_of(m, idx), &tilde)?;
                    if normalizer.is_zero() {
                        return Err(HopfError::ZeroNormalizer(idx.to_string()));
                    }
                    tilde.scale(&normalizer.recip())
                }
            };
            level_values.insert(idx.clone(), value);
        }
        // corrections to all lower levels, computed from the pre-update
        // snapshot
        let mut updates: Vec<((usize, TnIndex), FormalSum)> = Vec::new();
        for ((k, idx), val) in &values {
            let mut corrected = val.clone();
            for iota in tn_of(m, *k, idx) {
                let t = TnIndex::Product(iota);
                let coeff = ctx.evaluate(&lambda_of(m, &t), val)?;
                if !coeff.is_zero() {
                    corrected = corrected.sub(&level_values[&t].scale(&coeff));
                }
            }
            updates.push(((*k, idx.clone()), corrected));
        }
        for (key, val) in updates {
            values.insert(key, val);
        }
        for (idx, val) in level_values {
            indices.push((m, idx.clone()));
            values.insert((m, idx), val);
        }
    }
    Ok(DualSystem { n, indices, values })
}

/// Evaluation matrix [lambda_{l,j}(G_{k,i}^{(n)})] over all indices of
/// degree at most n, rows indexed by invariants and columns by generators.
pub fn duality_matrix(sys: &DualSystem) -> Result<Vec<Vec<BigRational>>, HopfError> {
    let ctx = EvalContext::new();
    let mut rows = Vec::new();
    for (l, j) in &sys.indices {
        let lam = lambda_of(*l, j);
        let mut row = Vec::new();
        for key in &sys.indices {
            row.push(ctx.evaluate(&lam, &sys.values[key])?);
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn duality_is_identity(m: &[Vec<BigRational>]) -> bool {
    m.iter().enumerate().all(|(i, row)| {
        row.iter().enumerate().all(|(j, v)| {
            if i == j {
                v.is_one()
            } else {
                v.is_zero()
            }
        })
    })
}

/// Tensor-square expression: rational combination of monomial pairs.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TensorExpr {
    terms: BTreeMap<(Monomial, Monomial), BigRational>,
}

impl TensorExpr {
    pub fn terms(&self) -> &BTreeMap<(Monomial, Monomial), BigRational> {
        &self.terms
    }

    fn add(&mut self, left: Monomial, right: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let key = (left, right);
        let entry = self.terms.entry(key.clone()).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn swap(&self) -> TensorExpr {
        let mut out = TensorExpr::default();
        for ((l, r), c) in &self.terms {
            out.add(r.clone(), l.clone(), c.clone());
        }
        out
    }
}

fn binom_rat(n: u32, k: u32) -> BigRational {
    BigRational::from(binomial(BigInt::from(n), BigInt::from(k)))
}

/// Coproduct on a monomial prod lambda_t^{e_t}: the full binomial expansion
/// sum over 0 <= h <= e of prod binom(e_t, h_t) lambda^h (x) lambda^{e-h}.
/// Extended linearly to polynomials.
pub fn coproduct(e: &InvariantExpr) -> TensorExpr {
    let mut out = TensorExpr::default();
    for (mono, coeff) in e.terms() {
        let symbols: Vec<(&Symbol, u32)> = mono.iter().map(|(s, e)| (s, *e)).collect();
        let mut split = vec![0u32; symbols.len()];
        loop {
            let mut left = Monomial::new();
            let mut right = Monomial::new();
            let mut c = coeff.clone();
            for (t, &(sym, e)) in symbols.iter().enumerate() {
                let h = split[t];
                c *= binom_rat(e, h);
                if h > 0 {
                    left.insert(sym.clone(), h);
                }
                if e - h > 0 {
                    right.insert(sym.clone(), e - h);
                }
            }
            out.add(left, right, c);
            // advance the split vector
            let mut pos = 0;
            loop {
                if pos == symbols.len() {
                    return out;
                }
                split[pos] += 1;
                if split[pos] <= symbols[pos].1 {
                    break;
                }
                split[pos] = 0;
                pos += 1;
            }
            if symbols.is_empty() {
                break;
            }
        }
    }
    out
}

type TripleTerms = BTreeMap<(Monomial, Monomial, Monomial), BigRational>;

fn add_triple(map: &mut TripleTerms, key: (Monomial, Monomial, Monomial), c: BigRational) {
    if c.is_zero() {
        return;
    }
    let entry = map.entry(key.clone()).or_insert_with(BigRational::zero);
    *entry += c;
    if entry.is_zero() {
        map.remove(&key);
    }
}

/// (Delta (x) id) Delta = (id (x) Delta) Delta, checked exactly.
pub fn coassociative(e: &InvariantExpr) -> bool {
    let d = coproduct(e);
    let mut left: TripleTerms = BTreeMap::new();
    let mut right: TripleTerms = BTreeMap::new();
    for ((a, b), c) in d.terms() {
        let da = coproduct(&InvariantExpr::from_monomial(a.clone(), BigRational::one()));
        for ((a1, a2), ca) in da.terms() {
            add_triple(&mut left, (a1.clone(), a2.clone(), b.clone()), c * ca);
        }
        let db = coproduct(&InvariantExpr::from_monomial(b.clone(), BigRational::one()));
        for ((b1, b2), cb) in db.terms() {
            add_triple(&mut right, (a.clone(), b1.clone(), b2.clone()), c * cb);
        }
    }
    left == right
}

pub fn cocommutative(e: &InvariantExpr) -> bool {
    let d = coproduct(e);
    d == d.swap()
}

/// Evaluates a tensor expression on a pair of models.
pub fn eval_tensor(
    ctx: &EvalContext,
    t: &TensorExpr,
    m1: &ManifoldModel,
    m2: &ManifoldModel,
) -> Result<BigRational, HopfError> {
    let mut acc = BigRational::zero();
    for ((l, r), c) in t.terms() {
        let le = InvariantExpr::from_monomial(l.clone(), BigRational::one());
        let re = InvariantExpr::from_monomial(r.clone(), BigRational::one());
        acc += c * ctx.expr_on_model(&le, m1)? * ctx.expr_on_model(&re, m2)?;
    }
    Ok(acc)
}

/// Splits a polynomial into its linear part (a sum of single symbols, the
/// primitive part for the coproduct) and everything else.
pub fn primitive_decompose(e: &InvariantExpr) -> (InvariantExpr, InvariantExpr) {
    let mut additive = InvariantExpr::zero();
    let mut product = InvariantExpr::zero();
    for (mono, c) in e.terms() {
        let single = mono.len() == 1 && mono.values().all(|&x| x == 1);
        let part = InvariantExpr::from_monomial(mono.clone(), c.clone());
        if single {
            additive = additive.add(&part);
        } else {
            product = product.add(&part);
        }
    }
    (additive, product)
}

/// |T_n| against the augmented diagram dimension over the same prime
/// support; the universe must have been built from that support.
pub fn dim_check(n: usize, support: &PrimeSupport) -> (BigInt, BigInt) {
    let u = IndexUniverse::build(n, support);
    let tn = BigInt::from(enumerate_tn(n, &u).len());
    (tn, dim_augmented(n, support))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    fn rat(n: i64) -> BigRational {
        BigRational::from(BigInt::from(n))
    }

    fn small_universe() -> IndexUniverse {
        // C_1 = {2,3}, C_2 = {c0}, C_4 = {c0}
        IndexUniverse::with_sizes(5, &[2, 3], &[(2, 1), (4, 1)])
    }

    #[test]
    fn t1_is_the_primes() {
        let u = IndexUniverse::with_sizes(1, &[2, 3, 5], &[]);
        let t1 = enumerate_tn(1, &u);
        assert_eq!(t1.len(), 3);
        assert!(t1.iter().all(|i| matches!(i, TnIndex::Additive(_))));
    }

    #[test]
    fn t2_counts() {
        let u = IndexUniverse::with_sizes(2, &[2, 3], &[(2, 1)]);
        let t2 = enumerate_tn(2, &u);
        // one additive token plus the pairs 2^2, 3^2, 2*3
        assert_eq!(t2.len(), 4);
        let products = t2
            .iter()
            .filter(|i| matches!(i, TnIndex::Product(_)))
            .count();
        assert_eq!(products, 3);
    }

    #[test]
    fn lambda_of_examples() {
        let nu2 = lambda_of(1, &TnIndex::Additive("2".into()));
        assert_eq!(nu2, InvariantExpr::nu(2));
        let sq = lambda_of(
            2,
            &TnIndex::Product(MultiIndex::new(vec![(1, "2".into(), 2)])),
        );
        assert_eq!(sq, InvariantExpr::nu(2).pow(2));
        let mixed = lambda_of(
            2,
            &TnIndex::Product(MultiIndex::new(vec![
                (1, "2".into(), 1),
                (1, "3".into(), 1),
            ])),
        );
        assert_eq!(mixed, InvariantExpr::nu(2).mul(&InvariantExpr::nu(3)));
    }

    #[test]
    fn normalizer_of_square_is_two() {
        let mi = MultiIndex::new(vec![(1, "2".into(), 2)]);
        let tilde = g_tilde(&mi);
        let ctx = EvalContext::new();
        let norm = ctx
            .evaluate(&lambda_of(2, &TnIndex::Product(mi)), &tilde)
            .unwrap();
        assert_eq!(norm, rat(2));
    }

    #[test]
    fn support_of_g_tilde_evaluations() {
        // lambda_{n,kappa}(g_tilde(iota)) is nonzero exactly on T_n(iota)
        let ctx = EvalContext::new();
        let u = small_universe();
        let iota = MultiIndex::new(vec![(1, "2".into(), 2)]);
        let tilde = g_tilde(&iota);
        for n in 2..=4usize {
            let expected = tn_of(n, 2, &TnIndex::Product(iota.clone()));
            for kappa in enumerate_tn(n, &u) {
                let v = ctx.evaluate(&lambda_of(n, &kappa), &tilde).unwrap();
                let in_support = match &kappa {
                    TnIndex::Product(mi) => expected.contains(mi),
                    TnIndex::Additive(_) => false,
                };
                assert_eq!(!v.is_zero(), in_support, "n={n} kappa={kappa}");
            }
        }
    }

    #[test]
    fn tn_of_additive_is_pure_powers() {
        let idx = TnIndex::Additive("2".into());
        assert_eq!(
            tn_of(3, 1, &idx),
            vec![MultiIndex::new(vec![(1, "2".into(), 3)])]
        );
        assert!(tn_of(3, 2, &TnIndex::Additive("c0".into())).is_empty());
        assert_eq!(
            tn_of(4, 2, &TnIndex::Additive("c0".into())),
            vec![MultiIndex::new(vec![(2, "c0".into(), 2)])]
        );
    }

    #[test]
    fn degree_one_dual_system() {
        let u = IndexUniverse::with_sizes(1, &[2, 3], &[]);
        let sys = dual_system(1, &u).unwrap();
        let g2 = &sys.values[&(1, TnIndex::Additive("2".into()))];
        assert_eq!(g2.terms().len(), 2);
        let ctx = EvalContext::new();
        assert_eq!(ctx.evaluate(&InvariantExpr::nu(2), g2).unwrap(), rat(1));
        assert_eq!(ctx.evaluate(&InvariantExpr::nu(3), g2).unwrap(), rat(0));
    }

    #[test]
    fn duality_small() {
        let u = small_universe();
        for n in 1..=3 {
            let sys = dual_system(n, &u).unwrap();
            let m = duality_matrix(&sys).unwrap();
            assert!(duality_is_identity(&m), "duality fails at n={n}");
        }
    }

    #[test]
    fn dim_identity_small() {
        let support = PrimeSupport::new(&[2, 3]).unwrap();
        for n in 1..=6usize {
            let (tn, aug) = dim_check(n, &support);
            assert_eq!(tn, aug, "mismatch at n={n}");
        }
    }

    #[test]
    fn coproduct_of_primitive() {
        let d = coproduct(&InvariantExpr::nu(2));
        assert_eq!(d.terms().len(), 2);
        let one = Monomial::new();
        let mut nu = Monomial::new();
        nu.insert(Symbol::nu(2), 1);
        assert_eq!(d.terms()[&(nu.clone(), one.clone())], rat(1));
        assert_eq!(d.terms()[&(one, nu)], rat(1));
    }

    #[test]
    fn coproduct_of_square() {
        let d = coproduct(&InvariantExpr::nu(2).pow(2));
        let mut nu = Monomial::new();
        nu.insert(Symbol::nu(2), 1);
        assert_eq!(d.terms()[&(nu.clone(), nu)], rat(2));
        assert_eq!(d.terms().len(), 3);
    }

    #[test]
    fn coproduct_axioms_small() {
        let exprs = [
            InvariantExpr::nu(2),
            InvariantExpr::nu(2).pow(2),
            InvariantExpr::nu(2).mul(&InvariantExpr::nu(3)),
            InvariantExpr::nu(2).pow(2).mul(&InvariantExpr::nu(3)),
        ];
        for e in &exprs {
            assert!(coassociative(e));
            assert!(cocommutative(e));
        }
    }

    #[test]
    fn decompose_and_recombine() {
        let e = InvariantExpr::nu(2).pow(2).add(&InvariantExpr::nu(2));
        let (a, p) = primitive_decompose(&e);
        assert_eq!(a, InvariantExpr::nu(2));
        assert_eq!(p, InvariantExpr::nu(2).pow(2));
        assert_eq!(a.add(&p), e);
        // the additive part is primitive
        let d = coproduct(&a);
        assert_eq!(d.terms().len(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn coproduct_matches_connected_sum(
            e2 in 0u32..3, e3 in 0u32..3,
            s1 in proptest::collection::vec(prop_oneof![Just(2u64), Just(3)], 0..3),
            s2 in proptest::collection::vec(prop_oneof![Just(2u64), Just(3)], 0..3),
        ) {
            let expr = InvariantExpr::nu(2).pow(e2).mul(&InvariantExpr::nu(3).pow(e3));
            let m1 = ManifoldModel::from_summands(
                s1.iter().map(|&p| Primitive::abstract_gen(1, &p.to_string())).collect());
            let m2 = ManifoldModel::from_summands(
                s2.iter().map(|&p| Primitive::abstract_gen(1, &p.to_string())).collect());
            let ctx = EvalContext::new();
            let direct = ctx.expr_on_model(&expr, &m1.connected_sum_model(&m2)).unwrap();
            let viatensor = eval_tensor(&ctx, &coproduct(&expr), &m1, &m2).unwrap();
            prop_assert_eq!(direct, viatensor);
        }

        #[test]
        fn tn_counts_match_generating_function(n in 1usize..7) {
            // independent count: coefficient of x^n in the product of
            // 1/(1-x^k)^{|C_k|} over the universe levels
            let u = small_universe();
            let mut coeffs = vec![0i64; n + 1];
            coeffs[0] = 1;
            for (k, count) in [(1usize, 2usize), (2, 1), (4, 1)] {
                for _ in 0..count {
                    for d in k..=n {
                        coeffs[d] += coeffs[d - k];
                    }
                }
            }
            let tn = enumerate_tn(n, &u).len();
            prop_assert_eq!(tn as i64, coeffs[n].to_i64().unwrap());
        }
    }
}

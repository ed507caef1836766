//! Nondegenerate symmetric Q/Z-valued bilinear forms on finite abelian
//! groups: construction on cyclic generators, orthogonal sum, prime-power
//! normalization, p-adic valuations and the induced 2-equivalence class,
//! small-case isomorphism testing, and import from surgery framing matrices.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::matrix::{determinant, format_fraction, parse_fraction, smith_normal_form, IntMatrix};

/// Brute-force searches (nondegeneracy, isomorphism) refuse groups larger
/// than this.
pub const BRUTE_FORCE_BOUND: u64 = 1 << 10;

#[derive(Debug, Error)]
pub enum LinkingError {
    #[error("gram matrix is not symmetric")]
    NotSymmetric,
    #[error("entry ({0},{1}) times the generator order is not an integer")]
    NotIntegral(usize, usize),
    #[error("form is degenerate")]
    Degenerate,
    #[error("generator order {0} is not valid (must be at least 2)")]
    BadOrder(u64),
    #[error("group of size {0} exceeds the brute-force bound {BRUTE_FORCE_BOUND}")]
    CapacityExceeded(BigInt),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{0} is not an odd prime; the 2-adic generators are separate")]
    NotOddPrime(u64),
    #[error("framing matrix is singular, not a rational homology sphere presentation")]
    SingularFraming,
    #[error("framing matrix must be square and symmetric")]
    BadFraming,
    #[error("gram matrix shape does not match the generator count")]
    Shape,
    #[error("invalid linking json: {0}")]
    Json(String),
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn mod_one(q: &BigRational) -> BigRational {
    let f = q.floor();
    q - f
}

/// A finite abelian group with generator orders d_1..d_r and a symmetric
/// Q/Z-valued pairing given by its Gram matrix on the generators, entries
/// reduced to [0,1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Linking {
    orders: Vec<u64>,
    gram: Vec<Vec<BigRational>>,
}

impl Linking {
    /// Validates symmetry, integrality d_i*gram[i][j] in Z, and (for groups
    /// within the brute-force bound) nondegeneracy.
    pub fn new(orders: Vec<u64>, gram: Vec<Vec<BigRational>>) -> Result<Self, LinkingError> {
        let r = orders.len();
        if let Some(&d) = orders.iter().find(|&&d| d < 2) {
            return Err(LinkingError::BadOrder(d));
        }
        if gram.len() != r || gram.iter().any(|row| row.len() != r) {
            return Err(LinkingError::Shape);
        }
        let gram: Vec<Vec<BigRational>> = gram
            .iter()
            .map(|row| row.iter().map(mod_one).collect())
            .collect();
        for i in 0..r {
            for j in 0..r {
                if gram[i][j] != gram[j][i] {
                    return Err(LinkingError::NotSymmetric);
                }
                let prod = &gram[i][j] * BigRational::from_integer(BigInt::from(orders[i]));
                if !prod.is_integer() {
                    return Err(LinkingError::NotIntegral(i, j));
                }
            }
        }
        let l = Linking { orders, gram };
        if l.order() <= BigInt::from(BRUTE_FORCE_BOUND) && !l.check_nondegenerate() {
            return Err(LinkingError::Degenerate);
        }
        Ok(l)
    }

    /// The trivial linking on the trivial group, the unit for orthogonal sum.
    pub fn trivial() -> Self {
        Linking {
            orders: Vec::new(),
            gram: Vec::new(),
        }
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn gram(&self) -> &[Vec<BigRational>] {
        &self.gram
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    /// |H|, the group order.
    pub fn order(&self) -> BigInt {
        self.orders
            .iter()
            .fold(BigInt::one(), |acc, &d| acc * BigInt::from(d))
    }

    /// Pairing of two elements given in generator coordinates, mod 1.
    pub fn pair(&self, a: &[u64], b: &[u64]) -> BigRational {
        let mut acc = BigRational::zero();
        for i in 0..self.rank() {
            if a[i] == 0 {
                continue;
            }
            for j in 0..self.rank() {
                if b[j] == 0 {
                    continue;
                }
                acc += &self.gram[i][j]
                    * BigRational::from_integer(BigInt::from(a[i]) * BigInt::from(b[j]));
            }
        }
        mod_one(&acc)
    }

    fn elements(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        let r = self.rank();
        let total: u64 = self.orders.iter().product();
        (0..total).map(move |mut x| {
            let mut e = vec![0u64; r];
            for i in 0..r {
                e[i] = x % self.orders[i];
                x /= self.orders[i];
            }
            e
        })
    }

    /// No nonzero element pairs to zero with every generator.
    fn check_nondegenerate(&self) -> bool {
        let r = self.rank();
        self.elements().all(|e| {
            e.iter().all(|&x| x == 0)
                || (0..r).any(|j| {
                    let mut unit = vec![0u64; r];
                    unit[j] = 1;
                    !self.pair(&e, &unit).is_zero()
                })
        })
    }

    pub fn to_json(&self) -> Value {
        let gram: Vec<Value> = self
            .gram
            .iter()
            .map(|row| Value::Array(row.iter().map(|q| json!(format_fraction(q))).collect()))
            .collect();
        json!({ "orders": self.orders, "gram": gram })
    }

    pub fn from_json(v: &Value) -> Result<Self, LinkingError> {
        let obj = v
            .as_object()
            .ok_or_else(|| LinkingError::Json("expected object".into()))?;
        let orders = obj
            .get("orders")
            .and_then(Value::as_array)
            .ok_or_else(|| LinkingError::Json("missing orders".into()))?
            .iter()
            .map(|x| x.as_u64().ok_or_else(|| LinkingError::Json("bad order".into())))
            .collect::<Result<Vec<_>, _>>()?;
        let gram = obj
            .get("gram")
            .and_then(Value::as_array)
            .ok_or_else(|| LinkingError::Json("missing gram".into()))?
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| LinkingError::Json("gram row must be an array".into()))?
                    .iter()
                    .map(|e| {
                        let s = e
                            .as_str()
                            .ok_or_else(|| LinkingError::Json("gram entry must be a string".into()))?;
                        parse_fraction(s)
                            .ok_or_else(|| LinkingError::Json(format!("bad fraction {s:?}")))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Linking::new(orders, gram)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WallKind {
    A,
    B,
}

/// Cyclic generator of order p^k for odd p: the form 1/p^k for kind A, or
/// x/p^k with x the smallest positive non-residue modulo p^k for kind B.
pub fn wall_generator(kind: WallKind, p: u64, k: u32) -> Result<Linking, LinkingError> {
    if !is_prime(p) {
        return Err(LinkingError::NotPrime(p));
    }
    if p == 2 {
        return Err(LinkingError::NotOddPrime(p));
    }
    if k == 0 {
        return Err(LinkingError::BadOrder(1));
    }
    let q = p.checked_pow(k).expect("order fits in u64");
    let num = match kind {
        WallKind::A => 1,
        WallKind::B => smallest_non_residue(q),
    };
    let gram = vec![vec![BigRational::new(BigInt::from(num), BigInt::from(q))]];
    Linking::new(vec![q], gram)
}

/// Smallest positive x that is not a square modulo m, by exhaustion.
fn smallest_non_residue(m: u64) -> u64 {
    let mut squares = vec![false; m as usize];
    for x in 0..m {
        squares[((x * x) % m) as usize] = true;
    }
    (1..m)
        .find(|&x| !squares[x as usize])
        .expect("non-residues exist modulo odd prime powers")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MirandaKind {
    A,
    B,
    C,
    D,
    E,
    F,
}

/// 2-adic generators: four cyclic forms on Z_{2^k} and two forms of rank 2
/// on Z_{2^k} x Z_{2^k}. The cyclic Gram values 1, 3, 5, 7 over 2^k and the
/// rank-2 matrices [[0,1],[1,0]] and [[2,1],[1,2]] over 2^k are one standard
/// choice of representatives; for small k some coincide after reduction
/// mod 1, which is harmless since only valuation-level consequences are
/// asserted downstream.
pub fn miranda_generator(kind: MirandaKind, k: u32) -> Result<Linking, LinkingError> {
    if k == 0 {
        return Err(LinkingError::BadOrder(1));
    }
    let q = 2u64.checked_pow(k).expect("order fits in u64");
    let frac = |num: i64| BigRational::new(BigInt::from(num), BigInt::from(q));
    match kind {
        MirandaKind::A => Linking::new(vec![q], vec![vec![frac(1)]]),
        MirandaKind::B => Linking::new(vec![q], vec![vec![frac(3)]]),
        MirandaKind::C => Linking::new(vec![q], vec![vec![frac(5)]]),
        MirandaKind::D => Linking::new(vec![q], vec![vec![frac(7)]]),
        MirandaKind::E => Linking::new(
            vec![q, q],
            vec![
                vec![frac(0), frac(1)],
                vec![frac(1), frac(0)],
            ],
        ),
        MirandaKind::F => Linking::new(
            vec![q, q],
            vec![
                vec![frac(2), frac(1)],
                vec![frac(1), frac(2)],
            ],
        ),
    }
}

/// Block-diagonal sum; orders concatenate and |H| multiplies.
pub fn orthogonal_sum(a: &Linking, b: &Linking) -> Linking {
    let ra = a.rank();
    let rb = b.rank();
    let mut orders = a.orders.clone();
    orders.extend_from_slice(&b.orders);
    let mut gram = vec![vec![BigRational::zero(); ra + rb]; ra + rb];
    for i in 0..ra {
        for j in 0..ra {
            gram[i][j] = a.gram[i][j].clone();
        }
    }
    for i in 0..rb {
        for j in 0..rb {
            gram[ra + i][ra + j] = b.gram[i][j].clone();
        }
    }
    Linking { orders, gram }
}

/// Sum of n copies.
pub fn multiple(n: usize, l: &Linking) -> Linking {
    let mut acc = Linking::trivial();
    for _ in 0..n {
        acc = orthogonal_sum(&acc, l);
    }
    acc
}

/// p-adic valuation of the group order.
pub fn nu_p(l: &Linking, p: u64) -> u32 {
    l.orders.iter().map(|&d| valuation(d, p)).sum()
}

fn valuation(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// The 2-equivalence class of a linking, recorded as its complete system of
/// invariants: the p-adic valuations of |H| for each prime dividing |H|.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TwoEquivClass {
    pub valuations: BTreeMap<u64, u32>,
}

pub fn two_equivalence_class(l: &Linking) -> TwoEquivClass {
    let mut valuations = BTreeMap::new();
    for &d in &l.orders {
        let mut n = d;
        let mut p = 2;
        while n > 1 {
            if n % p == 0 {
                *valuations.entry(p).or_insert(0) += valuation(n, p);
                while n % p == 0 {
                    n /= p;
                }
            }
            p += 1;
        }
    }
    TwoEquivClass { valuations }
}

/// Splits every cyclic factor into prime-power summands; the pairing between
/// summands of coprime order vanishes automatically, so the result is an
/// orthogonal sum of prime-power cyclic pieces, sorted by (prime, order).
pub fn normalize(l: &Linking) -> Linking {
    // new generator t = (i, p^a, m) is m * e_i with order p^a
    let mut gens: Vec<(usize, u64, u64)> = Vec::new();
    for (i, &d) in l.orders.iter().enumerate() {
        let mut n = d;
        let mut p = 2;
        while n > 1 {
            if n % p == 0 {
                let v = valuation(n, p);
                let q = p.pow(v);
                gens.push((i, q, d / q));
                while n % p == 0 {
                    n /= p;
                }
            }
            p += 1;
        }
    }
    gens.sort_by_key(|&(_, q, _)| {
        let p = (2..).find(|&p| q % p == 0).unwrap();
        (p, q)
    });
    let r = gens.len();
    let mut gram = vec![vec![BigRational::zero(); r]; r];
    for s in 0..r {
        for t in 0..r {
            let (i, _, mi) = gens[s];
            let (j, _, mj) = gens[t];
            let v = mod_one(
                &(&l.gram[i][j] * BigRational::from_integer(BigInt::from(mi) * BigInt::from(mj))),
            );
            gram[s][t] = v;
        }
    }
    // coprime blocks decouple
    for s in 0..r {
        for t in 0..r {
            let gs = gens[s].1;
            let gt = gens[t].1;
            if gs.gcd(&gt) == 1 {
                debug_assert!(gram[s][t].is_zero());
            }
        }
    }
    let orders = gens.iter().map(|&(_, q, _)| q).collect();
    Linking {
        orders,
        gram,
    }
}

/// Exhaustive isomorphism test for groups within the brute-force bound:
/// searches for generator images that induce a pairing-preserving group
/// isomorphism, pruning on element order and partial Gram agreement.
pub fn is_isomorphic(a: &Linking, b: &Linking) -> Result<bool, LinkingError> {
    let size = a.order();
    if size != b.order() {
        return Ok(false);
    }
    if size > BigInt::from(BRUTE_FORCE_BOUND) {
        return Err(LinkingError::CapacityExceeded(size));
    }
    // group isomorphism requires equal multisets of prime-power factors
    let factors = |l: &Linking| {
        let mut f: Vec<u64> = normalize(l).orders.to_vec();
        f.sort_unstable();
        f
    };
    if factors(a) != factors(b) {
        return Ok(false);
    }
    let elems: Vec<Vec<u64>> = b.elements().collect();
    let ra = a.rank();
    let add = |x: &[u64], y: &[u64]| -> Vec<u64> {
        x.iter()
            .zip(y)
            .zip(&b.orders)
            .map(|((&xi, &yi), &d)| (xi + yi) % d)
            .collect()
    };
    let elem_order = |x: &[u64]| -> u64 {
        x.iter()
            .zip(&b.orders)
            .map(|(&xi, &d)| {
                if xi == 0 {
                    1
                } else {
                    d / d.gcd(&xi)
                }
            })
            .fold(1u64, |acc, o| acc.lcm(&o))
    };
    fn search(
        a: &Linking,
        b: &Linking,
        elems: &[Vec<u64>],
        images: &mut Vec<Vec<u64>>,
        add: &dyn Fn(&[u64], &[u64]) -> Vec<u64>,
        elem_order: &dyn Fn(&[u64]) -> u64,
    ) -> bool {
        let i = images.len();
        if i == a.rank() {
            // surjectivity: the images must generate all of b
            let mut span: Vec<Vec<u64>> = vec![vec![0; b.rank()]];
            for img in images.iter() {
                let mut next = span.clone();
                for base in &span {
                    let mut acc = base.clone();
                    loop {
                        acc = add(&acc, img);
                        if &acc == base {
                            break;
                        }
                        if !next.contains(&acc) {
                            next.push(acc.clone());
                        }
                    }
                }
                span = next;
            }
            return span.len() == elems.len();
        }
        for cand in elems {
            if elem_order(cand) != a.orders[i] {
                continue;
            }
            let ok = (0..=i).all(|j| {
                let x = if j == i { cand } else { &images[j] };
                let mut unit_i = vec![0u64; a.rank()];
                unit_i[i] = 1;
                let mut unit_j = vec![0u64; a.rank()];
                unit_j[j] = 1;
                b.pair(cand, x) == a.pair(&unit_i, &unit_j)
            });
            if !ok {
                continue;
            }
            images.push(cand.clone());
            if search(a, b, elems, images, add, elem_order) {
                return true;
            }
            images.pop();
        }
        false
    }
    let mut images = Vec::with_capacity(ra);
    Ok(search(a, b, &elems, &mut images, &add, &elem_order))
}

/// Linking form of the rational homology sphere presented by surgery on an
/// algebraically split framed link with symmetric nonsingular framing matrix
/// L: the group is coker(L) with orders from the Smith normal form, and the
/// pairing on the cokernel generators is -L^{-1} in that basis, mod 1. The
/// overall sign is a convention; only convention-independent outputs feed
/// the rest of the calculus.
pub fn from_framing_matrix(l: &IntMatrix) -> Result<Linking, LinkingError> {
    if !l.is_square() || !l.is_symmetric() {
        return Err(LinkingError::BadFraming);
    }
    if determinant(l).is_zero() {
        return Err(LinkingError::SingularFraming);
    }
    let snf = smith_normal_form(l);
    let w = snf.u.unimodular_inverse();
    let linv = l
        .to_rational()
        .inverse()
        .expect("nonsingular by the determinant check");
    let wr = w.to_rational();
    let full = wr.transpose().mul(&linv).mul(&wr);
    let keep: Vec<usize> = snf
        .d
        .iter()
        .enumerate()
        .filter(|(_, x)| x.abs() > BigInt::one())
        .map(|(i, _)| i)
        .collect();
    let orders: Vec<u64> = keep
        .iter()
        .map(|&i| {
            snf.d[i]
                .abs()
                .to_u64()
                .expect("generator order fits in u64")
        })
        .collect();
    let gram: Vec<Vec<BigRational>> = keep
        .iter()
        .map(|&i| {
            keep.iter()
                .map(|&j| mod_one(&-full.get(i, j)))
                .collect()
        })
        .collect();
    Linking::new(orders, gram)
}

//! Augmented diagrams: a Jacobi diagram together with prime-weighted
//! vertices. The degree counts all vertices, trivalent and weighted alike.
//! Spaces are always taken relative to an explicit finite prime support.

use num_bigint::BigInt;
use num_traits::One;
use serde_json::{json, Value};
use thiserror::Error;

use crate::jacobi::{self, CanonicalKey, Diagram};
use crate::linking::is_prime;

#[derive(Debug, Error)]
pub enum AugmentedError {
    #[error("weight {0} is not prime")]
    NotPrime(u64),
    #[error("support entries must be distinct ascending primes")]
    BadSupport,
    #[error("invalid augmented diagram json: {0}")]
    Json(String),
}

/// Finite ascending list of distinct primes standing in for the infinite
/// index set of weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeSupport {
    primes: Vec<u64>,
}

impl PrimeSupport {
    pub fn new(primes: &[u64]) -> Result<Self, AugmentedError> {
        for w in primes.windows(2) {
            if w[0] >= w[1] {
                return Err(AugmentedError::BadSupport);
            }
        }
        for &p in primes {
            if !is_prime(p) {
                return Err(AugmentedError::NotPrime(p));
            }
        }
        Ok(PrimeSupport {
            primes: primes.to_vec(),
        })
    }

    pub fn empty() -> Self {
        PrimeSupport { primes: Vec::new() }
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }
}

/// Jacobi diagram of degree k plus a sorted multiset of prime weights; the
/// weighted vertices are inert under AS/IHX.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct AugmentedDiagram {
    jacobi: CanonicalKey,
    weights: Vec<u64>,
}

impl AugmentedDiagram {
    pub fn new(jacobi: CanonicalKey, mut weights: Vec<u64>) -> Result<Self, AugmentedError> {
        for &w in &weights {
            if !is_prime(w) {
                return Err(AugmentedError::NotPrime(w));
            }
        }
        weights.sort_unstable();
        Ok(AugmentedDiagram { jacobi, weights })
    }

    pub fn jacobi(&self) -> &CanonicalKey {
        &self.jacobi
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    /// Total vertex count: trivalent vertices of the diagram part plus one
    /// per weight.
    pub fn degree(&self) -> usize {
        2 * self.jacobi.degree() + self.weights.len()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "jacobi": self.jacobi.to_diagram().to_json(),
            "weights": self.weights,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, AugmentedError> {
        let obj = v
            .as_object()
            .ok_or_else(|| AugmentedError::Json("expected object".into()))?;
        let dj = obj
            .get("jacobi")
            .ok_or_else(|| AugmentedError::Json("missing jacobi".into()))?;
        let diagram =
            Diagram::from_json(dj).map_err(|e| AugmentedError::Json(e.to_string()))?;
        let (canon, _sign) = jacobi::canonicalize(&diagram);
        let weights = obj
            .get("weights")
            .and_then(Value::as_array)
            .ok_or_else(|| AugmentedError::Json("missing weights".into()))?
            .iter()
            .map(|w| {
                w.as_u64()
                    .ok_or_else(|| AugmentedError::Json("weight must be an integer".into()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        AugmentedDiagram::new(canon.key, weights)
    }
}

/// Number of size-r multisets from an m-element set, C(m+r-1, r).
pub fn multiset_count(m: usize, r: usize) -> BigInt {
    if r == 0 {
        return BigInt::one();
    }
    if m == 0 {
        return BigInt::from(0);
    }
    let mut acc = BigInt::one();
    for t in 0..r {
        acc = acc * BigInt::from(m + t) / BigInt::from(t + 1);
    }
    acc
}

/// dim of the degree-n augmented space over support P: sum over k with
/// 2k <= n of dim A_k times the number of weight multisets of size n-2k.
pub fn dim_augmented(n: usize, support: &PrimeSupport) -> BigInt {
    let mut total = BigInt::from(0);
    for k in 0..=(n / 2) {
        total += BigInt::from(jacobi::dim(k)) * multiset_count(support.len(), n - 2 * k);
    }
    total
}

/// One augmented diagram per (basis element of A_k, weight multiset) pair.
pub fn enumerate_augmented(n: usize, support: &PrimeSupport) -> Vec<AugmentedDiagram> {
    let mut out = Vec::new();
    for k in 0..=(n / 2) {
        let r = n - 2 * k;
        for key in jacobi::space(k).basis() {
            for weights in weight_multisets(support.primes(), r) {
                out.push(AugmentedDiagram {
                    jacobi: key.clone(),
                    weights,
                });
            }
        }
    }
    out
}

fn weight_multisets(primes: &[u64], r: usize) -> Vec<Vec<u64>> {
    if r == 0 {
        return vec![Vec::new()];
    }
    if primes.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    // nondecreasing sequences of length r over the ascending prime list
    let mut current = Vec::with_capacity(r);
    fn rec(primes: &[u64], r: usize, start: usize, current: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if current.len() == r {
            out.push(current.clone());
            return;
        }
        for i in start..primes.len() {
            current.push(primes[i]);
            rec(primes, r, i, current, out);
            current.pop();
        }
    }
    rec(primes, r, 0, &mut current, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::{canonicalize, disjoint_union, Diagram, DiagramVector};
    use num_traits::Zero;

    fn p235() -> PrimeSupport {
        PrimeSupport::new(&[2, 3, 5]).unwrap()
    }

    fn theta_key() -> CanonicalKey {
        canonicalize(&Diagram::theta()).0.key
    }

    #[test]
    fn degrees_count_all_vertices() {
        let theta = AugmentedDiagram::new(theta_key(), vec![]).unwrap();
        assert_eq!(theta.degree(), 2);
        let single = AugmentedDiagram::new(
            canonicalize(&Diagram::empty()).0.key,
            vec![2],
        )
        .unwrap();
        assert_eq!(single.degree(), 1);
    }

    #[test]
    fn large_configuration_degree() {
        // a theta together with an 8-vertex diagram and weights {2,5,5}
        let mut v = DiagramVector::from_diagram(&Diagram::theta());
        for _ in 0..4 {
            v = disjoint_union(&v, &DiagramVector::from_diagram(&Diagram::theta()));
        }
        let key = v.terms().keys().next().unwrap().clone();
        assert_eq!(key.degree(), 5);
        let a = AugmentedDiagram::new(key, vec![2, 5, 5]).unwrap();
        assert_eq!(a.degree(), 13);
    }

    #[test]
    fn rejects_composite_weights() {
        assert!(matches!(
            AugmentedDiagram::new(theta_key(), vec![4]),
            Err(AugmentedError::NotPrime(4))
        ));
        assert!(PrimeSupport::new(&[2, 3, 9]).is_err());
        assert!(PrimeSupport::new(&[3, 2]).is_err());
    }

    #[test]
    fn small_dimensions() {
        assert_eq!(dim_augmented(0, &p235()), BigInt::from(1));
        assert_eq!(dim_augmented(0, &PrimeSupport::empty()), BigInt::from(1));
        assert_eq!(dim_augmented(1, &p235()), BigInt::from(3));
        // one theta class plus C(3+2-1, 2) = 6 weight pairs
        assert_eq!(dim_augmented(2, &p235()), BigInt::from(7));
    }

    #[test]
    fn empty_support_collapses_to_jacobi() {
        let empty = PrimeSupport::empty();
        for n in 0..=8usize {
            let d = dim_augmented(n, &empty);
            if n % 2 == 0 {
                assert_eq!(d, BigInt::from(jacobi::dim(n / 2)));
            } else {
                assert!(d.is_zero());
            }
        }
    }

    #[test]
    fn monotone_in_support_size() {
        let supports = [
            PrimeSupport::empty(),
            PrimeSupport::new(&[2]).unwrap(),
            PrimeSupport::new(&[2, 3]).unwrap(),
            p235(),
        ];
        for n in 0..=6usize {
            for w in supports.windows(2) {
                assert!(dim_augmented(n, &w[0]) <= dim_augmented(n, &w[1]));
            }
        }
    }

    #[test]
    fn enumeration_matches_dimension() {
        for n in 0..=5usize {
            for support in [PrimeSupport::new(&[2]).unwrap(), p235()] {
                let list = enumerate_augmented(n, &support);
                assert_eq!(BigInt::from(list.len()), dim_augmented(n, &support));
                let mut sorted = list.clone();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted.len(), list.len(), "duplicates at n={n}");
                for a in &list {
                    assert_eq!(a.degree(), n);
                }
            }
        }
    }

    #[test]
    fn singleton_enumeration() {
        let list = enumerate_augmented(1, &PrimeSupport::new(&[2]).unwrap());
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].weights(), &[2]);
        assert_eq!(list[0].jacobi().degree(), 0);
        assert_eq!(enumerate_augmented(2, &PrimeSupport::new(&[2, 3]).unwrap()).len(), 4);
    }

    #[test]
    fn json_round_trip() {
        let a = AugmentedDiagram::new(theta_key(), vec![5, 2, 5]).unwrap();
        let back = AugmentedDiagram::from_json(&a.to_json()).unwrap();
        assert_eq!(a, back);
        assert_eq!(back.weights(), &[2, 5, 5]);
    }
}

//! First-homology models of surgery pieces: integer presentations, gluing
//! along boundary surfaces at the homology level, Lagrangian elementary
//! divisors of rational homology handlebodies, d-torus models and the
//! associated valuation mu_p.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::matrix::{smith_normal_form, IntMatrix};

#[derive(Debug, Error)]
pub enum HomologyError {
    #[error("pieces have different genus ({0} vs {1})")]
    GenusMismatch(usize, usize),
    #[error("identification matrix is not symplectic")]
    NotSymplectic,
    #[error("identification matrix must be {0}x{0}")]
    BadIdentification(usize),
    #[error("boundary image vector length does not match the generator count")]
    Shape,
    #[error("piece is not a rational homology handlebody: free rank {0}, genus {1}")]
    NotHandlebody(usize, usize),
    #[error("boundary-to-free-part map has rank {0}, expected the genus {1}")]
    LagrangianRank(usize, usize),
    #[error("mu_p needs a genus-1 piece, got genus {0}")]
    NotGenusOne(usize),
    #[error("invalid presentation json: {0}")]
    Json(String),
}

/// Finitely generated abelian group given by named generators and integer
/// relation rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupPresentation {
    generator_names: Vec<String>,
    relations: IntMatrix,
}

/// Order of a finitely generated abelian group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Order {
    Finite(BigInt),
    Infinite,
}

impl Order {
    pub fn finite(&self) -> Option<&BigInt> {
        match self {
            Order::Finite(n) => Some(n),
            Order::Infinite => None,
        }
    }
}

impl GroupPresentation {
    pub fn new(generator_names: Vec<String>, relations: IntMatrix) -> Result<Self, HomologyError> {
        if relations.cols() != generator_names.len() {
            return Err(HomologyError::Shape);
        }
        Ok(GroupPresentation {
            generator_names,
            relations,
        })
    }

    pub fn trivial() -> Self {
        GroupPresentation {
            generator_names: Vec::new(),
            relations: IntMatrix::zeros(0, 0),
        }
    }

    /// Z_d on one generator.
    pub fn cyclic(d: u64, name: &str) -> Self {
        GroupPresentation {
            generator_names: vec![name.to_string()],
            relations: IntMatrix::from_rows(&[vec![BigInt::from(d)]]),
        }
    }

    /// Z^r with named generators and no relations.
    pub fn free(names: &[&str]) -> Self {
        GroupPresentation {
            generator_names: names.iter().map(|s| s.to_string()).collect(),
            relations: IntMatrix::zeros(0, names.len()),
        }
    }

    pub fn generator_names(&self) -> &[String] {
        &self.generator_names
    }

    pub fn relations(&self) -> &IntMatrix {
        &self.relations
    }

    pub fn generator_count(&self) -> usize {
        self.generator_names.len()
    }

    /// Nontrivial torsion invariant factors, in divisibility order, plus the
    /// free rank. Computed from the Smith normal form of the transposed
    /// relation matrix (columns of the transpose span the relation subgroup).
    pub fn invariants(&self) -> (Vec<BigInt>, usize) {
        let snf = smith_normal_form(&self.relations.transpose());
        let torsion: Vec<BigInt> = snf
            .d
            .iter()
            .filter(|x| !x.is_zero() && x.abs() > BigInt::one())
            .map(|x| x.abs())
            .collect();
        let free_rank = self.generator_count() - snf.rank();
        (torsion, free_rank)
    }

    pub fn order(&self) -> Order {
        let (torsion, free_rank) = self.invariants();
        if free_rank > 0 {
            Order::Infinite
        } else {
            Order::Finite(torsion.into_iter().product())
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.order(), Order::Finite(_))
    }

    /// Block direct sum; the homology of a connected sum. Duplicate names are
    /// disambiguated with a numeric suffix.
    pub fn connected_sum(&self, other: &GroupPresentation) -> GroupPresentation {
        let mut names = self.generator_names.clone();
        for n in &other.generator_names {
            let mut candidate = n.clone();
            let mut k = 1;
            while names.contains(&candidate) {
                candidate = format!("{n}_{k}");
                k += 1;
            }
            names.push(candidate);
        }
        let (ra, ca) = (self.relations.rows(), self.relations.cols());
        let (rb, cb) = (other.relations.rows(), other.relations.cols());
        let mut triplets = Vec::new();
        for i in 0..ra {
            for j in 0..ca {
                let v = self.relations.get(i, j);
                if !v.is_zero() {
                    triplets.push((i, j, v));
                }
            }
        }
        for i in 0..rb {
            for j in 0..cb {
                let v = other.relations.get(i, j);
                if !v.is_zero() {
                    triplets.push((ra + i, ca + j, v));
                }
            }
        }
        GroupPresentation {
            generator_names: names,
            relations: IntMatrix::from_triplets(ra + rb, ca + cb, &triplets)
                .expect("block sum triplets are unique"),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "generators": self.generator_names,
            "relations": rows_json(&self.relations),
        })
    }
}

fn rows_json(m: &IntMatrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| {
                Value::Array(
                    (0..m.cols())
                        .map(|j| json!(m.get(i, j).to_string()))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn rows_from_json(v: &Value, cols: usize) -> Result<Vec<Vec<BigInt>>, HomologyError> {
    v.as_array()
        .ok_or_else(|| HomologyError::Json("expected array of rows".into()))?
        .iter()
        .map(|row| {
            let r = row
                .as_array()
                .ok_or_else(|| HomologyError::Json("row must be an array".into()))?;
            if r.len() != cols {
                return Err(HomologyError::Json(format!(
                    "row length {} does not match generator count {}",
                    r.len(),
                    cols
                )));
            }
            r.iter()
                .map(|e| match e {
                    Value::Number(n) => n
                        .as_i64()
                        .map(BigInt::from)
                        .ok_or_else(|| HomologyError::Json("bad integer".into())),
                    Value::String(s) => s
                        .parse::<BigInt>()
                        .map_err(|_| HomologyError::Json(format!("bad integer {s:?}"))),
                    _ => Err(HomologyError::Json("entry must be integer or string".into())),
                })
                .collect()
        })
        .collect()
}

/// A compact piece with one boundary surface of genus g (possibly a union of
/// tori counted by total genus), carrying the images in its first homology
/// of a fixed symplectic basis alpha_1..alpha_g, beta_1..beta_g of the
/// boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PieceWithBoundary {
    pub h1: GroupPresentation,
    genus: usize,
    alpha: Vec<Vec<BigInt>>,
    beta: Vec<Vec<BigInt>>,
}

impl PieceWithBoundary {
    pub fn new(
        h1: GroupPresentation,
        alpha: Vec<Vec<BigInt>>,
        beta: Vec<Vec<BigInt>>,
    ) -> Result<Self, HomologyError> {
        if alpha.len() != beta.len() {
            return Err(HomologyError::Shape);
        }
        let g = alpha.len();
        let ng = h1.generator_count();
        if alpha.iter().chain(&beta).any(|v| v.len() != ng) {
            return Err(HomologyError::Shape);
        }
        Ok(PieceWithBoundary {
            h1,
            genus: g,
            alpha,
            beta,
        })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn alpha(&self) -> &[Vec<BigInt>] {
        &self.alpha
    }

    pub fn beta(&self) -> &[Vec<BigInt>] {
        &self.beta
    }

    /// Solid torus: H_1 = Z on the core, the meridian alpha bounds a disk,
    /// the longitude beta is the core.
    pub fn solid_torus() -> Self {
        PieceWithBoundary {
            h1: GroupPresentation::free(&["l"]),
            genus: 1,
            alpha: vec![vec![BigInt::zero()]],
            beta: vec![vec![BigInt::one()]],
        }
    }

    /// d-torus model: H_1 = Z_d a + Z g, with boundary alpha mapping to a
    /// and beta to d*g.
    pub fn d_torus(d: u64) -> Self {
        let h1 = GroupPresentation {
            generator_names: vec!["a".into(), "g".into()],
            relations: IntMatrix::from_rows(&[vec![BigInt::from(d), BigInt::zero()]]),
        };
        PieceWithBoundary {
            h1,
            genus: 1,
            alpha: vec![vec![BigInt::one(), BigInt::zero()]],
            beta: vec![vec![BigInt::zero(), BigInt::from(d)]],
        }
    }

    /// Unknot exterior: H_1 = Z on the meridian m; the preferred longitude
    /// alpha bounds a Seifert disk, beta is the meridian.
    pub fn unknot_exterior() -> Self {
        PieceWithBoundary {
            h1: GroupPresentation::free(&["m"]),
            genus: 1,
            alpha: vec![vec![BigInt::zero()]],
            beta: vec![vec![BigInt::one()]],
        }
    }

    /// Hopf link exterior: H_1 = Z m1 + Z m2; on boundary torus i the
    /// preferred longitude alpha_i is homologous to the other meridian and
    /// beta_i is m_i. Total genus 2 (two torus boundary components).
    pub fn hopf_link_exterior() -> Self {
        let z = BigInt::zero;
        let o = BigInt::one;
        PieceWithBoundary {
            h1: GroupPresentation::free(&["m1", "m2"]),
            genus: 2,
            alpha: vec![vec![z(), o()], vec![o(), z()]],
            beta: vec![vec![o(), z()], vec![z(), o()]],
        }
    }

    /// Exterior of a split two-component unlink: both preferred longitudes
    /// bound, beta_i is m_i. Total genus 2.
    pub fn split_unlink_exterior() -> Self {
        let z = BigInt::zero;
        let o = BigInt::one;
        PieceWithBoundary {
            h1: GroupPresentation::free(&["m1", "m2"]),
            genus: 2,
            alpha: vec![vec![z(), z()], vec![z(), z()]],
            beta: vec![vec![o(), z()], vec![z(), o()]],
        }
    }

    /// Standard genus-g handlebody: alpha_i bound disks, beta_i map to the
    /// free basis.
    pub fn handlebody(g: usize) -> Self {
        let names: Vec<String> = (0..g).map(|i| format!("x{i}")).collect();
        let h1 = GroupPresentation {
            generator_names: names,
            relations: IntMatrix::zeros(0, g),
        };
        let unit = |i: usize| {
            (0..g)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect::<Vec<_>>()
        };
        PieceWithBoundary {
            h1,
            genus: g,
            alpha: vec![vec![BigInt::zero(); g]; g],
            beta: (0..g).map(unit).collect(),
        }
    }

    /// Solid torus connect-summed with a lens-space-like piece carrying
    /// Z_d torsion away from the boundary.
    pub fn solid_torus_with_torsion(d: u64) -> Self {
        let h1 = GroupPresentation {
            generator_names: vec!["l".into(), "t".into()],
            relations: IntMatrix::from_rows(&[vec![BigInt::zero(), BigInt::from(d)]]),
        };
        PieceWithBoundary {
            h1,
            genus: 1,
            alpha: vec![vec![BigInt::zero(), BigInt::zero()]],
            beta: vec![vec![BigInt::one(), BigInt::zero()]],
        }
    }

    /// Joins two pieces into one with the concatenated boundary data; used
    /// to express multi-torus replacements as a single gluing.
    pub fn disjoint_union(&self, other: &PieceWithBoundary) -> PieceWithBoundary {
        let h1 = self.h1.connected_sum(&other.h1);
        let (ca, cb) = (self.h1.generator_count(), other.h1.generator_count());
        let pad_a = |v: &Vec<BigInt>| {
            let mut w = v.clone();
            w.extend(std::iter::repeat_with(BigInt::zero).take(cb));
            w
        };
        let pad_b = |v: &Vec<BigInt>| {
            let mut w: Vec<BigInt> = std::iter::repeat_with(BigInt::zero).take(ca).collect();
            w.extend_from_slice(v);
            w
        };
        PieceWithBoundary {
            h1,
            genus: self.genus + other.genus,
            alpha: self
                .alpha
                .iter()
                .map(pad_a)
                .chain(other.alpha.iter().map(pad_b))
                .collect(),
            beta: self
                .beta
                .iter()
                .map(pad_a)
                .chain(other.beta.iter().map(pad_b))
                .collect(),
        }
    }

    /// Image in H_1 of the c-th basis curve (alpha_c for c < g, else
    /// beta_{c-g}).
    fn curve_image(&self, c: usize) -> &Vec<BigInt> {
        if c < self.genus {
            &self.alpha[c]
        } else {
            &self.beta[c - self.genus]
        }
    }

    pub fn to_json(&self) -> Value {
        let vecs = |vs: &[Vec<BigInt>]| {
            Value::Array(
                vs.iter()
                    .map(|v| {
                        Value::Array(v.iter().map(|x| json!(x.to_string())).collect())
                    })
                    .collect(),
            )
        };
        json!({
            "generators": self.h1.generator_names,
            "relations": rows_json(&self.h1.relations),
            "boundary": { "alpha": vecs(&self.alpha), "beta": vecs(&self.beta) },
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, HomologyError> {
        let obj = v
            .as_object()
            .ok_or_else(|| HomologyError::Json("expected object".into()))?;
        let names: Vec<String> = obj
            .get("generators")
            .and_then(Value::as_array)
            .ok_or_else(|| HomologyError::Json("missing generators".into()))?
            .iter()
            .map(|s| {
                s.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| HomologyError::Json("generator name must be a string".into()))
            })
            .collect::<Result<_, _>>()?;
        let cols = names.len();
        let rel_rows = rows_from_json(
            obj.get("relations")
                .ok_or_else(|| HomologyError::Json("missing relations".into()))?,
            cols,
        )?;
        let relations = if rel_rows.is_empty() {
            IntMatrix::zeros(0, cols)
        } else {
            IntMatrix::from_rows(&rel_rows)
        };
        let boundary = obj
            .get("boundary")
            .and_then(Value::as_object)
            .ok_or_else(|| HomologyError::Json("missing boundary".into()))?;
        let alpha = rows_from_json(
            boundary
                .get("alpha")
                .ok_or_else(|| HomologyError::Json("missing boundary.alpha".into()))?,
            cols,
        )?;
        let beta = rows_from_json(
            boundary
                .get("beta")
                .ok_or_else(|| HomologyError::Json("missing boundary.beta".into()))?,
            cols,
        )?;
        PieceWithBoundary::new(GroupPresentation::new(names, relations)?, alpha, beta)
    }
}

/// The identification alpha_i -> -beta_i, beta_i -> alpha_i on each torus,
/// the standard way to glue a replacement piece so that its alpha curve
/// meets the meridian once.
pub fn standard_surgery_identification(g: usize) -> IntMatrix {
    let mut tri = Vec::new();
    for i in 0..g {
        // column i (alpha_i) maps to -beta_i; column g+i (beta_i) to alpha_i
        tri.push((g + i, i, -BigInt::one()));
        tri.push((i, g + i, BigInt::one()));
    }
    IntMatrix::from_triplets(2 * g, 2 * g, &tri).expect("unique triplets")
}

fn symplectic_form(g: usize) -> IntMatrix {
    let mut tri = Vec::new();
    for i in 0..g {
        tri.push((i, g + i, BigInt::one()));
        tri.push((g + i, i, -BigInt::one()));
    }
    IntMatrix::from_triplets(2 * g, 2 * g, &tri).expect("unique triplets")
}

/// Mayer-Vietoris at the H_1 level: the quotient of H_1(a) + H_1(b) by the
/// relations equating the image of each boundary basis curve of a with the
/// image of its identification in b. The identification matrix expresses
/// a's basis curves in b's basis (columns) and must preserve the
/// intersection form.
pub fn glue(
    a: &PieceWithBoundary,
    b: &PieceWithBoundary,
    identification: &IntMatrix,
) -> Result<GroupPresentation, HomologyError> {
    if a.genus != b.genus {
        return Err(HomologyError::GenusMismatch(a.genus, b.genus));
    }
    let g = a.genus;
    if identification.rows() != 2 * g || identification.cols() != 2 * g {
        return Err(HomologyError::BadIdentification(2 * g));
    }
    let j = symplectic_form(g);
    if identification.transpose().mul(&j).mul(identification) != j {
        return Err(HomologyError::NotSymplectic);
    }
    let merged = a.h1.connected_sum(&b.h1);
    let (ca, cb) = (a.h1.generator_count(), b.h1.generator_count());
    let base = merged.relations.clone();
    let mut rows: Vec<Vec<BigInt>> = (0..base.rows())
        .map(|i| (0..base.cols()).map(|j2| base.get(i, j2)).collect())
        .collect();
    for c in 0..2 * g {
        let mut row = vec![BigInt::zero(); ca + cb];
        for (k, v) in a.curve_image(c).iter().enumerate() {
            row[k] = v.clone();
        }
        for i in 0..2 * g {
            let coeff = identification.get(i, c);
            if coeff.is_zero() {
                continue;
            }
            for (k, v) in b.curve_image(i).iter().enumerate() {
                row[ca + k] -= &coeff * v;
            }
        }
        rows.push(row);
    }
    GroupPresentation::new(
        merged.generator_names.clone(),
        IntMatrix::from_rows(&rows),
    )
}

/// Elementary divisors d_1..d_g of the map from the boundary to the free
/// part of H_1, together with the torsion invariant factors of H_1. Defined
/// for rational homology handlebodies: the free rank must equal the genus
/// and the boundary map must have full rank g.
pub fn lagrangian_invariants(
    m: &PieceWithBoundary,
) -> Result<(Vec<BigInt>, Vec<BigInt>), HomologyError> {
    let g = m.genus;
    let snf = smith_normal_form(&m.h1.relations.transpose());
    let ng = m.h1.generator_count();
    let (torsion, free_rank) = m.h1.invariants();
    if free_rank != g {
        return Err(HomologyError::NotHandlebody(free_rank, g));
    }
    // coordinates y = U x split H_1 into cyclic and free summands; free
    // positions are those with invariant factor 0 (or beyond the diagonal)
    let free_positions: Vec<usize> = (0..ng)
        .filter(|&i| i >= snf.d.len() || snf.d[i].is_zero())
        .collect();
    debug_assert_eq!(free_positions.len(), g);
    let mut cols: Vec<Vec<BigInt>> = Vec::new();
    for c in 0..2 * g {
        let x = m.curve_image(c);
        let y: Vec<BigInt> = free_positions
            .iter()
            .map(|&i| {
                (0..ng)
                    .map(|k| snf.u.get(i, k) * &x[k])
                    .sum::<BigInt>()
            })
            .collect();
        cols.push(y);
    }
    let rows: Vec<Vec<BigInt>> = (0..g)
        .map(|i| cols.iter().map(|c| c[i].clone()).collect())
        .collect();
    let bmap = IntMatrix::from_rows(&rows);
    let bsnf = smith_normal_form(&bmap);
    let d: Vec<BigInt> = bsnf.nonzero_factors();
    if d.len() != g {
        return Err(HomologyError::LagrangianRank(d.len(), g));
    }
    Ok((d, torsion))
}

/// mu_p of a genus-1 rational homology torus: the p-adic valuation of
/// d(T) times the torsion order.
pub fn mu_p(t: &PieceWithBoundary, p: u64) -> Result<u32, HomologyError> {
    if t.genus != 1 {
        return Err(HomologyError::NotGenusOne(t.genus));
    }
    let (d, torsion) = lagrangian_invariants(t)?;
    let total: BigInt = d.into_iter().product::<BigInt>()
        * torsion.into_iter().product::<BigInt>();
    Ok(bigint_valuation(&total, p))
}

pub fn bigint_valuation(n: &BigInt, p: u64) -> u32 {
    assert!(!n.is_zero(), "valuation of zero");
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    while (&n % &p).is_zero() {
        n /= &p;
        v += 1;
    }
    v
}

/// Convenience: |H_1| as a u64 when finite and small.
pub fn small_order(g: &GroupPresentation) -> Option<u64> {
    g.order().finite().and_then(|n| n.to_u64())
}

//! Exact integer and rational matrices: Smith normal form over Z and
//! reduced row echelon form over Q, with arbitrary-precision arithmetic.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

/// Matrices with at most this fill ratio are kept in triplet form.
pub const DENSITY_THRESHOLD: f64 = 0.25;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("duplicate triplet entry at ({0},{1})")]
    DuplicateTriplet(usize, usize),
    #[error("entry ({0},{1}) outside {2}x{3} matrix")]
    OutOfBounds(usize, usize, usize, usize),
    #[error("invalid matrix json: {0}")]
    Json(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Store<T> {
    Dense(Vec<T>),
    Sparse(BTreeMap<(usize, usize), T>),
}

/// Dense or sparse matrix of arbitrary-precision integers. Equality is by
/// shape and entries, independent of the storage mode.
#[derive(Clone, Debug)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    store: Store<BigInt>,
}

impl PartialEq for IntMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && (0..self.rows)
                .all(|i| (0..self.cols).all(|j| self.get(i, j) == other.get(i, j)))
    }
}

impl Eq for IntMatrix {}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            store: Store::Sparse(BTreeMap::new()),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BTreeMap::new();
        for i in 0..n {
            m.insert((i, i), BigInt::one());
        }
        IntMatrix {
            rows: n,
            cols: n,
            store: Store::Sparse(m),
        }
    }

    pub fn from_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data = rows
            .iter()
            .flat_map(|row| row.iter().cloned().map(Into::into))
            .collect();
        IntMatrix {
            rows: r,
            cols: c,
            store: Store::Dense(data),
        }
    }

    /// Builds from (row, col, value) triplets; duplicate keys are rejected.
    /// The result stays in triplet form below [`DENSITY_THRESHOLD`].
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, BigInt)],
    ) -> Result<Self, MatrixError> {
        let mut map = BTreeMap::new();
        for (i, j, v) in triplets {
            if *i >= rows || *j >= cols {
                return Err(MatrixError::OutOfBounds(*i, *j, rows, cols));
            }
            if map.insert((*i, *j), v.clone()).is_some() {
                return Err(MatrixError::DuplicateTriplet(*i, *j));
            }
        }
        map.retain(|_, v| !v.is_zero());
        let nnz = map.len();
        let m = IntMatrix {
            rows,
            cols,
            store: Store::Sparse(map),
        };
        if rows * cols > 0 && (nnz as f64) > DENSITY_THRESHOLD * (rows * cols) as f64 {
            Ok(m.densified())
        } else {
            Ok(m)
        }
    }

    fn densified(&self) -> Self {
        match &self.store {
            Store::Dense(_) => self.clone(),
            Store::Sparse(map) => {
                let mut data = vec![BigInt::zero(); self.rows * self.cols];
                for (&(i, j), v) in map {
                    data[i * self.cols + j] = v.clone();
                }
                IntMatrix {
                    rows: self.rows,
                    cols: self.cols,
                    store: Store::Dense(data),
                }
            }
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> BigInt {
        assert!(i < self.rows && j < self.cols);
        match &self.store {
            Store::Dense(d) => d[i * self.cols + j].clone(),
            Store::Sparse(m) => m.get(&(i, j)).cloned().unwrap_or_else(BigInt::zero),
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut data = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        IntMatrix {
            rows: self.cols,
            cols: self.rows,
            store: Store::Dense(data),
        }
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut data = vec![BigInt::zero(); self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        data[i * other.cols + j] += &a * b;
                    }
                }
            }
        }
        IntMatrix {
            rows: self.rows,
            cols: other.cols,
            store: Store::Dense(data),
        }
    }

    pub fn to_rational(&self) -> RatMatrix {
        let mut data = Vec::with_capacity(self.rows * self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                data.push(BigRational::from_integer(self.get(i, j)));
            }
        }
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            store: Store::Dense(data),
        }
    }

    /// Inverse of a unimodular integer matrix, as an integer matrix.
    pub fn unimodular_inverse(&self) -> IntMatrix {
        assert!(self.is_square());
        let inv = self
            .to_rational()
            .inverse()
            .expect("unimodular matrix must be invertible");
        let mut data = Vec::with_capacity(self.rows * self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let e = inv.get(i, j);
                assert!(e.is_integer(), "matrix is not unimodular");
                data.push(e.to_integer());
            }
        }
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            store: Store::Dense(data),
        }
    }

    pub fn to_json(&self) -> Value {
        let mut entries = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self.get(i, j);
                if !v.is_zero() {
                    entries.push(json!([i, j, v.to_string()]));
                }
            }
        }
        json!({ "rows": self.rows, "cols": self.cols, "entries": entries })
    }

    pub fn from_json(v: &Value) -> Result<Self, MatrixError> {
        let (rows, cols, entries) = parse_matrix_json(v)?;
        let triplets = entries
            .into_iter()
            .map(|(i, j, s)| {
                let q = parse_fraction(&s)
                    .ok_or_else(|| MatrixError::Json(format!("bad entry {s:?}")))?;
                if !q.is_integer() {
                    return Err(MatrixError::Json(format!(
                        "non-integer entry {s:?} in integer matrix"
                    )));
                }
                Ok((i, j, q.to_integer()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        IntMatrix::from_triplets(rows, cols, &triplets)
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Dense or sparse matrix of reduced fractions. Equality is by shape and
/// entries, independent of the storage mode.
#[derive(Clone, Debug)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    store: Store<BigRational>,
}

impl PartialEq for RatMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && (0..self.rows)
                .all(|i| (0..self.cols).all(|j| self.get(i, j) == other.get(i, j)))
    }
}

impl Eq for RatMatrix {}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            store: Store::Sparse(BTreeMap::new()),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BTreeMap::new();
        for i in 0..n {
            m.insert((i, i), BigRational::one());
        }
        RatMatrix {
            rows: n,
            cols: n,
            store: Store::Sparse(m),
        }
    }

    pub fn from_rows(rows: &[Vec<BigRational>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data = rows.iter().flat_map(|row| row.iter().cloned()).collect();
        RatMatrix {
            rows: r,
            cols: c,
            store: Store::Dense(data),
        }
    }

    pub fn from_int_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Self {
        IntMatrix::from_rows(rows).to_rational()
    }

    /// Sparse rows keyed by column; rows with all-zero entries may be omitted
    /// only if `rows` accounts for them explicitly.
    pub fn from_sparse_rows(
        rows: usize,
        cols: usize,
        sparse: &[BTreeMap<usize, BigRational>],
    ) -> Self {
        assert!(sparse.len() == rows);
        let mut map = BTreeMap::new();
        for (i, row) in sparse.iter().enumerate() {
            for (&j, v) in row {
                assert!(j < cols);
                if !v.is_zero() {
                    map.insert((i, j), v.clone());
                }
            }
        }
        let nnz = map.len();
        let m = RatMatrix {
            rows,
            cols,
            store: Store::Sparse(map),
        };
        if rows * cols > 0 && (nnz as f64) > DENSITY_THRESHOLD * (rows * cols) as f64 {
            m.densified()
        } else {
            m
        }
    }

    fn densified(&self) -> Self {
        match &self.store {
            Store::Dense(_) => self.clone(),
            Store::Sparse(map) => {
                let mut data = vec![BigRational::zero(); self.rows * self.cols];
                for (&(i, j), v) in map {
                    data[i * self.cols + j] = v.clone();
                }
                RatMatrix {
                    rows: self.rows,
                    cols: self.cols,
                    store: Store::Dense(data),
                }
            }
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> BigRational {
        assert!(i < self.rows && j < self.cols);
        match &self.store {
            Store::Dense(d) => d[i * self.cols + j].clone(),
            Store::Sparse(m) => m.get(&(i, j)).cloned().unwrap_or_else(BigRational::zero),
        }
    }

    pub fn row_sparse(&self, i: usize) -> BTreeMap<usize, BigRational> {
        let mut row = BTreeMap::new();
        match &self.store {
            Store::Dense(d) => {
                for j in 0..self.cols {
                    let v = &d[i * self.cols + j];
                    if !v.is_zero() {
                        row.insert(j, v.clone());
                    }
                }
            }
            Store::Sparse(m) => {
                for (&(r, j), v) in m.range((i, 0)..(i, self.cols)) {
                    debug_assert_eq!(r, i);
                    row.insert(j, v.clone());
                }
            }
        }
        row
    }

    pub fn transpose(&self) -> RatMatrix {
        let mut data = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        RatMatrix {
            rows: self.cols,
            cols: self.rows,
            store: Store::Dense(data),
        }
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut data = vec![BigRational::zero(); self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        data[i * other.cols + j] += &a * b;
                    }
                }
            }
        }
        RatMatrix {
            rows: self.rows,
            cols: other.cols,
            store: Store::Dense(data),
        }
    }

    /// Exact inverse via Gauss-Jordan; `None` for singular input.
    pub fn inverse(&self) -> Option<RatMatrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut a: Vec<Vec<BigRational>> = (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j)).collect())
            .collect();
        let mut inv: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            BigRational::one()
                        } else {
                            BigRational::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let p = a[col][col].clone();
            for j in 0..n {
                a[col][j] /= &p;
                inv[col][j] /= &p;
            }
            for r in 0..n {
                if r != col && !a[r][col].is_zero() {
                    let f = a[r][col].clone();
                    for j in 0..n {
                        let av = a[col][j].clone();
                        let iv = inv[col][j].clone();
                        a[r][j] -= &f * av;
                        inv[r][j] -= &f * iv;
                    }
                }
            }
        }
        Some(RatMatrix::from_rows(&inv))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Clears denominators row by row, yielding an integer matrix with the
    /// same row space over Q.
    pub fn integerized(&self) -> IntMatrix {
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut lcm = BigInt::one();
            for j in 0..self.cols {
                lcm = num_integer::lcm(lcm, self.get(i, j).denom().clone());
            }
            let row: Vec<BigInt> = (0..self.cols)
                .map(|j| {
                    let q = self.get(i, j) * BigRational::from_integer(lcm.clone());
                    q.to_integer()
                })
                .collect();
            out.push(row);
        }
        IntMatrix::from_rows(&out)
    }

    pub fn to_json(&self) -> Value {
        let mut entries = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self.get(i, j);
                if !v.is_zero() {
                    entries.push(json!([i, j, format_fraction(&v)]));
                }
            }
        }
        json!({ "rows": self.rows, "cols": self.cols, "entries": entries })
    }

    pub fn from_json(v: &Value) -> Result<Self, MatrixError> {
        let (rows, cols, entries) = parse_matrix_json(v)?;
        let mut sparse = vec![BTreeMap::new(); rows];
        for (i, j, s) in entries {
            if i >= rows || j >= cols {
                return Err(MatrixError::OutOfBounds(i, j, rows, cols));
            }
            let q = parse_fraction(&s)
                .ok_or_else(|| MatrixError::Json(format!("bad entry {s:?}")))?;
            if sparse[i].insert(j, q).is_some() {
                return Err(MatrixError::DuplicateTriplet(i, j));
            }
        }
        Ok(RatMatrix::from_sparse_rows(rows, cols, &sparse))
    }
}

fn parse_matrix_json(v: &Value) -> Result<(usize, usize, Vec<(usize, usize, String)>), MatrixError> {
    let obj = v
        .as_object()
        .ok_or_else(|| MatrixError::Json("expected object".into()))?;
    let rows = obj
        .get("rows")
        .and_then(Value::as_u64)
        .ok_or_else(|| MatrixError::Json("missing rows".into()))? as usize;
    let cols = obj
        .get("cols")
        .and_then(Value::as_u64)
        .ok_or_else(|| MatrixError::Json("missing cols".into()))? as usize;
    let entries = obj
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| MatrixError::Json("missing entries".into()))?;
    let mut out = Vec::with_capacity(entries.len());
    for e in entries {
        let t = e
            .as_array()
            .filter(|t| t.len() == 3)
            .ok_or_else(|| MatrixError::Json("entry must be [i,j,value]".into()))?;
        let i = t[0]
            .as_u64()
            .ok_or_else(|| MatrixError::Json("bad row index".into()))? as usize;
        let j = t[1]
            .as_u64()
            .ok_or_else(|| MatrixError::Json("bad col index".into()))? as usize;
        let s = match &t[2] {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            _ => return Err(MatrixError::Json("entry value must be a string".into())),
        };
        out.push((i, j, s));
    }
    Ok((rows, cols, out))
}

/// Parses "a/b" or "a" into a reduced fraction.
pub fn parse_fraction(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).ok()?;
        let d = BigInt::from_str(den.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        Some(BigRational::new(n, d))
    } else {
        BigInt::from_str(s).ok().map(BigRational::from_integer)
    }
}

/// "num/den" with the denominator always written, "0/1" for zero.
pub fn format_fraction(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Smith normal form data: `u * a * v = diag(d)` with `u`, `v` unimodular
/// and the nonzero entries of `d` forming a divisibility chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithDecomposition {
    pub d: Vec<BigInt>,
    pub u: IntMatrix,
    pub v: IntMatrix,
    sign_u: i8,
    sign_v: i8,
}

impl SmithDecomposition {
    /// det(U) * det(V), each in {-1, +1}.
    pub fn transform_sign(&self) -> i8 {
        self.sign_u * self.sign_v
    }

    /// Nonzero invariant factors, in chain order.
    pub fn nonzero_factors(&self) -> Vec<BigInt> {
        self.d.iter().filter(|x| !x.is_zero()).cloned().collect()
    }

    pub fn rank(&self) -> usize {
        self.d.iter().filter(|x| !x.is_zero()).count()
    }
}

struct SnfState {
    b: Vec<Vec<BigInt>>,
    u: Vec<Vec<BigInt>>,
    v: Vec<Vec<BigInt>>,
    sign_u: i8,
    sign_v: i8,
}

impl SnfState {
    fn swap_rows(&mut self, i: usize, j: usize) {
        if i != j {
            self.b.swap(i, j);
            self.u.swap(i, j);
            self.sign_u = -self.sign_u;
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i != j {
            for row in self.b.iter_mut() {
                row.swap(i, j);
            }
            for row in self.v.iter_mut() {
                row.swap(i, j);
            }
            self.sign_v = -self.sign_v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for x in self.b[i].iter_mut() {
            *x = -x.clone();
        }
        for x in self.u[i].iter_mut() {
            *x = -x.clone();
        }
        self.sign_u = -self.sign_u;
    }

    /// row_i += q * row_j
    fn add_row(&mut self, i: usize, j: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for col in 0..self.b[i].len() {
            let t = q * &self.b[j][col];
            self.b[i][col] += t;
        }
        for col in 0..self.u[i].len() {
            let t = q * &self.u[j][col];
            self.u[i][col] += t;
        }
    }

    /// col_i += q * col_j
    fn add_col(&mut self, i: usize, j: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for row in self.b.iter_mut() {
            let t = q * &row[j];
            row[i] += t;
        }
        for row in self.v.iter_mut() {
            let t = q * &row[j];
            row[i] += t;
        }
    }
}

/// Smith normal form with minimal-absolute-value pivoting (ties broken by
/// lowest row, then column index), so the output is deterministic.
pub fn smith_normal_form(m: &IntMatrix) -> SmithDecomposition {
    let (rows, cols) = (m.rows(), m.cols());
    let mut st = SnfState {
        b: (0..rows)
            .map(|i| (0..cols).map(|j| m.get(i, j)).collect())
            .collect(),
        u: (0..rows)
            .map(|i| {
                (0..rows)
                    .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                    .collect()
            })
            .collect(),
        v: (0..cols)
            .map(|i| {
                (0..cols)
                    .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                    .collect()
            })
            .collect(),
        sign_u: 1,
        sign_v: 1,
    };

    let t = rows.min(cols);
    for k in 0..t {
        'pivot: loop {
            // minimal absolute value pivot in the trailing submatrix
            let mut best: Option<(usize, usize)> = None;
            for i in k..rows {
                for j in k..cols {
                    if st.b[i][j].is_zero() {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((bi, bj)) => st.b[i][j].abs() < st.b[bi][bj].abs(),
                    };
                    if better {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                break 'pivot; // trailing submatrix is zero
            };
            st.swap_rows(k, pi);
            st.swap_cols(k, pj);
            if st.b[k][k].is_negative() {
                st.negate_row(k);
            }

            let mut clean = true;
            for i in k + 1..rows {
                if !st.b[i][k].is_zero() {
                    let q = -(&st.b[i][k] / &st.b[k][k]);
                    st.add_row(i, k, &q);
                    if !st.b[i][k].is_zero() {
                        clean = false;
                    }
                }
            }
            if !clean {
                continue 'pivot;
            }
            for j in k + 1..cols {
                if !st.b[k][j].is_zero() {
                    let q = -(&st.b[k][j] / &st.b[k][k]);
                    st.add_col(j, k, &q);
                    if !st.b[k][j].is_zero() {
                        clean = false;
                    }
                }
            }
            if !clean {
                continue 'pivot;
            }

            // enforce divisibility of the remaining submatrix by the pivot
            let p = st.b[k][k].clone();
            let mut offending = None;
            'scan: for i in k + 1..rows {
                for j in k + 1..cols {
                    if !(&st.b[i][j] % &p).is_zero() {
                        offending = Some(i);
                        break 'scan;
                    }
                }
            }
            match offending {
                Some(i) => {
                    st.add_row(k, i, &BigInt::one());
                    continue 'pivot;
                }
                None => break 'pivot,
            }
        }
    }

    let d: Vec<BigInt> = (0..t).map(|k| st.b[k][k].clone()).collect();
    SmithDecomposition {
        d,
        u: IntMatrix::from_rows(&st.u),
        v: IntMatrix::from_rows(&st.v),
        sign_u: st.sign_u,
        sign_v: st.sign_v,
    }
}

/// Exact determinant of a square matrix via the Smith normal form.
pub fn determinant(m: &IntMatrix) -> BigInt {
    assert!(m.is_square(), "determinant of non-square matrix");
    let snf = smith_normal_form(m);
    let mut det = BigInt::one();
    for x in &snf.d {
        det *= x;
    }
    if snf.transform_sign() < 0 {
        -det
    } else {
        det
    }
}

/// Unique reduced row echelon form over Q, its rank and pivot columns.
/// Elimination runs on sparse rows, which suits relation matrices.
pub fn rank_and_rref(m: &RatMatrix) -> (usize, RatMatrix, Vec<usize>) {
    let mut rows: Vec<BTreeMap<usize, BigRational>> =
        (0..m.rows()).map(|i| m.row_sparse(i)).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..m.cols() {
        let Some(pr) = (r..rows.len()).find(|&i| rows[i].contains_key(&col)) else {
            continue;
        };
        rows.swap(r, pr);
        let lead = rows[r][&col].clone();
        if !lead.is_one() {
            for v in rows[r].values_mut() {
                *v /= &lead;
            }
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            if let Some(f) = row.get(&col).cloned() {
                for (&j, pv) in &pivot_row {
                    let delta = &f * pv;
                    let e = row.entry(j).or_insert_with(BigRational::zero);
                    *e -= delta;
                    if e.is_zero() {
                        row.remove(&j);
                    }
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    let rref = RatMatrix::from_sparse_rows(m.rows(), m.cols(), &rows);
    (r, rref, pivots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag_from(snf: &SmithDecomposition, rows: usize, cols: usize) -> IntMatrix {
        let mut tri = Vec::new();
        for (k, x) in snf.d.iter().enumerate() {
            if !x.is_zero() {
                tri.push((k, k, x.clone()));
            }
        }
        IntMatrix::from_triplets(rows, cols, &tri).unwrap()
    }

    fn check_snf(m: &IntMatrix) -> SmithDecomposition {
        let snf = smith_normal_form(m);
        // reconstruction
        let prod = snf.u.mul(m).mul(&snf.v);
        assert_eq!(prod, diag_from(&snf, m.rows(), m.cols()));
        // divisibility chain
        let nz = snf.nonzero_factors();
        for w in nz.windows(2) {
            assert!((&w[1] % &w[0]).is_zero(), "chain broken: {:?}", snf.d);
        }
        // unimodular transforms
        assert_eq!(determinant(&snf.u).abs(), BigInt::one());
        assert_eq!(determinant(&snf.v).abs(), BigInt::one());
        snf
    }

    #[test]
    fn snf_diag_2_3() {
        let m = IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]);
        let snf = check_snf(&m);
        assert_eq!(snf.d, vec![BigInt::from(1), BigInt::from(6)]);
    }

    #[test]
    fn snf_zero_matrix() {
        let m = IntMatrix::zeros(2, 2);
        let snf = smith_normal_form(&m);
        assert_eq!(snf.d, vec![BigInt::zero(), BigInt::zero()]);
        assert_eq!(snf.u, IntMatrix::identity(2));
        assert_eq!(snf.v, IntMatrix::identity(2));
    }

    #[test]
    fn snf_identity() {
        let m = IntMatrix::identity(2);
        let snf = check_snf(&m);
        assert_eq!(snf.d, vec![BigInt::one(), BigInt::one()]);
    }

    #[test]
    fn rref_proportional_rows() {
        let m = RatMatrix::from_int_rows(&[vec![1, 2], vec![2, 4]]);
        let (rank, _, pivots) = rank_and_rref(&m);
        assert_eq!(rank, 1);
        assert_eq!(pivots, vec![0]);
    }

    #[test]
    fn rref_identity() {
        for n in 1..5 {
            let m = RatMatrix::identity(n);
            let (rank, rref, _) = rank_and_rref(&m);
            assert_eq!(rank, n);
            assert_eq!(rref, RatMatrix::identity(n));
        }
    }

    #[test]
    fn determinant_signs() {
        let m = IntMatrix::from_rows(&[vec![0, 1], vec![1, 0]]);
        assert_eq!(determinant(&m), BigInt::from(-1));
        let m = IntMatrix::from_rows(&[vec![2, 1], vec![1, 1]]);
        assert_eq!(determinant(&m), BigInt::from(1));
        let m = IntMatrix::from_rows(&[vec![3, 1], vec![5, 2]]);
        assert_eq!(determinant(&m), BigInt::from(1));
        let m = IntMatrix::from_rows(&[vec![1, 2], vec![3, 4]]);
        assert_eq!(determinant(&m), BigInt::from(-2));
    }

    /// Independent fraction-free (Bareiss) elimination, used as a rank oracle.
    fn bareiss_rank(m: &IntMatrix) -> usize {
        let (r, c) = (m.rows(), m.cols());
        let mut a: Vec<Vec<BigInt>> = (0..r)
            .map(|i| (0..c).map(|j| m.get(i, j)).collect())
            .collect();
        let mut prev = BigInt::one();
        let mut rank = 0;
        for col in 0..c {
            let Some(p) = (rank..r).find(|&i| !a[i][col].is_zero()) else {
                continue;
            };
            a.swap(rank, p);
            for i in rank + 1..r {
                for j in col + 1..c {
                    let t = &a[rank][col] * &a[i][j] - &a[i][col] * &a[rank][j];
                    a[i][j] = &t / &prev;
                }
                a[i][col] = BigInt::zero();
            }
            prev = a[rank][col].clone();
            rank += 1;
            if rank == r {
                break;
            }
        }
        rank
    }

    #[test]
    fn matrix_json_round_trip() {
        let m = IntMatrix::from_rows(&[vec![1, 0, -7], vec![0, 12345678901234567890i128.into(), 0]]);
        let back = IntMatrix::from_json(&m.to_json()).unwrap();
        assert_eq!(m.densified(), back.densified());

        let q = RatMatrix::from_rows(&[vec![
            BigRational::new(BigInt::from(2), BigInt::from(-6)),
            BigRational::zero(),
        ]]);
        let back = RatMatrix::from_json(&q.to_json()).unwrap();
        assert_eq!(q.get(0, 0), back.get(0, 0));
        assert_eq!(format_fraction(&q.get(0, 0)), "-1/3");
    }

    proptest! {
        #[test]
        fn snf_random_matrices(entries in proptest::collection::vec(-9i64..10, 1..20),
                               rows in 1usize..5) {
            let cols = (entries.len() + rows - 1) / rows;
            let mut data = entries.clone();
            data.resize(rows * cols, 0);
            let m = IntMatrix::from_rows(
                &data.chunks(cols).map(|ch| ch.to_vec()).collect::<Vec<_>>());
            let snf = check_snf(&m);
            // rank over Q equals number of nonzero invariant factors
            let (rank, _, _) = rank_and_rref(&m.to_rational());
            prop_assert_eq!(rank, snf.rank());
            prop_assert_eq!(rank, bareiss_rank(&m));
        }

        #[test]
        fn det_matches_product_of_factors(entries in proptest::collection::vec(-6i64..7, 9)) {
            let m = IntMatrix::from_rows(
                &entries.chunks(3).map(|ch| ch.to_vec()).collect::<Vec<_>>());
            // cross-check against cofactor expansion
            let e = |i: usize, j: usize| m.get(i, j);
            let cof = e(0,0) * (e(1,1)*e(2,2) - e(1,2)*e(2,1))
                - e(0,1) * (e(1,0)*e(2,2) - e(1,2)*e(2,0))
                + e(0,2) * (e(1,0)*e(2,1) - e(1,1)*e(2,0));
            prop_assert_eq!(determinant(&m), cof);
        }

        #[test]
        fn fraction_round_trip(n in -1000i64..1000, d in 1i64..1000) {
            let q = BigRational::new(BigInt::from(n), BigInt::from(d));
            let s = format_fraction(&q);
            prop_assert_eq!(parse_fraction(&s).unwrap(), q);
        }
    }
}

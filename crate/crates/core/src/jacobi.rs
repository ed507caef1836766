//! Trivalent diagrams with oriented vertices, canonical labeling with
//! antisymmetry sign tracking, the local three-term edge relations, and the
//! resulting quotient spaces with their connected parts.
//!
//! A diagram of degree n has 2n vertices and 6n half-edges. Half-edge h
//! belongs to vertex h/3 at slot h%3; the slot order 0,1,2 is the
//! counterclockwise cyclic order at the vertex. The pairing of half-edges
//! into edges is a fixed-point-free involution `sigma`. Loops (both
//! half-edges at one vertex) and multiple edges are allowed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::matrix::{rank_and_rref, RatMatrix};

#[derive(Debug, Error)]
pub enum DiagramError {
    #[error("half-edge pairing is not a fixed-point-free involution")]
    BadMatching,
    #[error("half-edge count {0} is not a multiple of 6")]
    BadSize(usize),
    #[error("invalid diagram json: {0}")]
    Json(String),
}

/// A trivalent diagram given by its half-edge involution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagram {
    n: usize,
    sigma: Vec<usize>,
}

impl Diagram {
    pub fn new(sigma: Vec<usize>) -> Result<Self, DiagramError> {
        if sigma.len() % 6 != 0 {
            return Err(DiagramError::BadSize(sigma.len()));
        }
        let m = sigma.len();
        for h in 0..m {
            let p = sigma[h];
            if p >= m || p == h || sigma[p] != h {
                return Err(DiagramError::BadMatching);
            }
        }
        Ok(Diagram {
            n: m / 6,
            sigma,
        })
    }

    /// The empty diagram of degree 0, the unit for disjoint union.
    pub fn empty() -> Self {
        Diagram {
            n: 0,
            sigma: Vec::new(),
        }
    }

    /// Two vertices joined by three parallel edges, slot to equal slot.
    pub fn theta() -> Self {
        Diagram {
            n: 1,
            sigma: vec![3, 4, 5, 0, 1, 2],
        }
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        2 * self.n
    }

    pub fn half_edge_count(&self) -> usize {
        6 * self.n
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn vertex_of(h: usize) -> usize {
        h / 3
    }

    /// True when the underlying multigraph is connected (vacuously true for
    /// at most one vertex).
    pub fn is_connected(&self) -> bool {
        let v = self.vertex_count();
        if v <= 1 {
            return true;
        }
        let mut seen = vec![false; v];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for s in 0..3 {
                let w = Self::vertex_of(self.sigma[3 * u + s]);
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == v
    }

    pub fn to_json(&self) -> Value {
        let vertices: Vec<Value> = (0..self.vertex_count())
            .map(|v| json!([3 * v, 3 * v + 1, 3 * v + 2]))
            .collect();
        let mut edges = Vec::new();
        for h in 0..self.half_edge_count() {
            if h < self.sigma[h] {
                edges.push(json!([h, self.sigma[h]]));
            }
        }
        json!({ "degree": self.n, "vertices": vertices, "edges": edges })
    }

    /// Accepts arbitrary distinct half-edge identifiers; the order of the
    /// triple at each vertex is the cyclic order.
    pub fn from_json(v: &Value) -> Result<Self, DiagramError> {
        let obj = v
            .as_object()
            .ok_or_else(|| DiagramError::Json("expected object".into()))?;
        let vertices = obj
            .get("vertices")
            .and_then(Value::as_array)
            .ok_or_else(|| DiagramError::Json("missing vertices".into()))?;
        let edges = obj
            .get("edges")
            .and_then(Value::as_array)
            .ok_or_else(|| DiagramError::Json("missing edges".into()))?;
        let mut id_to_slot: BTreeMap<u64, usize> = BTreeMap::new();
        for (vi, triple) in vertices.iter().enumerate() {
            let t = triple
                .as_array()
                .filter(|t| t.len() == 3)
                .ok_or_else(|| DiagramError::Json("vertex must be a triple".into()))?;
            for (s, idv) in t.iter().enumerate() {
                let id = idv
                    .as_u64()
                    .ok_or_else(|| DiagramError::Json("bad half-edge id".into()))?;
                if id_to_slot.insert(id, 3 * vi + s).is_some() {
                    return Err(DiagramError::Json(format!("duplicate half-edge id {id}")));
                }
            }
        }
        let m = 3 * vertices.len();
        let mut sigma = vec![usize::MAX; m];
        for pair in edges {
            let p = pair
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| DiagramError::Json("edge must be a pair".into()))?;
            let a = p[0]
                .as_u64()
                .ok_or_else(|| DiagramError::Json("bad half-edge id".into()))?;
            let b = p[1]
                .as_u64()
                .ok_or_else(|| DiagramError::Json("bad half-edge id".into()))?;
            let (ha, hb) = (
                *id_to_slot
                    .get(&a)
                    .ok_or_else(|| DiagramError::Json(format!("unknown half-edge {a}")))?,
                *id_to_slot
                    .get(&b)
                    .ok_or_else(|| DiagramError::Json(format!("unknown half-edge {b}")))?,
            );
            if ha == hb || sigma[ha] != usize::MAX || sigma[hb] != usize::MAX {
                return Err(DiagramError::Json("edges do not form a matching".into()));
            }
            sigma[ha] = hb;
            sigma[hb] = ha;
        }
        if sigma.iter().any(|&x| x == usize::MAX) {
            return Err(DiagramError::Json("unmatched half-edge".into()));
        }
        Diagram::new(sigma)
    }
}

/// Canonical byte key: one block per connected component, blocks sorted
/// lexicographically. Each block is the component's vertex count followed by
/// the lexicographically minimal relabeled involution of the component over
/// all vertex orders and per-vertex slot symmetries. Equal keys mean
/// orientation-preserving isomorphic diagrams. The empty diagram has the
/// empty key.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey(Vec<u8>);

impl CanonicalKey {
    pub fn bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        if s.len() % 2 != 0 {
            return None;
        }
        let bytes = (0..s.len() / 2)
            .map(|i| u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok())
            .collect::<Option<Vec<u8>>>()?;
        Some(CanonicalKey(bytes))
    }

    /// Reconstructs the canonical representative diagram.
    pub fn to_diagram(&self) -> Diagram {
        let mut sigma = Vec::new();
        let mut i = 0;
        while i < self.0.len() {
            let span = 3 * self.0[i] as usize;
            let base = sigma.len();
            sigma.extend(self.0[i + 1..i + 1 + span].iter().map(|&b| b as usize + base));
            i += 1 + span;
        }
        Diagram::new(sigma).expect("canonical key stores a valid involution")
    }

    /// Degree of the encoded diagram: half its total vertex count.
    pub fn degree(&self) -> usize {
        let mut vertices = 0usize;
        let mut i = 0;
        while i < self.0.len() {
            vertices += self.0[i] as usize;
            i += 1 + 3 * self.0[i] as usize;
        }
        vertices / 2
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignClass {
    /// +D and -D are distinct classes; the diagram survives in the quotient.
    PlusMinusDistinct,
    /// Some self-isomorphism reverses an odd number of vertex orientations,
    /// so antisymmetry forces the class to zero.
    SelfNegating,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalDiagram {
    pub key: CanonicalKey,
    pub sign_class: SignClass,
}

/// Slot permutations of the dihedral group on one vertex: three rotations
/// (orientation preserving) then three reflections (orientation reversing).
const DIHEDRAL: [[usize; 3]; 6] = [
    [0, 1, 2],
    [1, 2, 0],
    [2, 0, 1],
    [0, 2, 1],
    [2, 1, 0],
    [1, 0, 2],
];

struct CanonSearch<'a> {
    d: &'a Diagram,
    // phi[old half-edge] = new half-edge, usize::MAX when unassigned
    phi: Vec<usize>,
    assigned_vertex: Vec<bool>,
    new_sigma: Vec<usize>,
    best: Option<Vec<usize>>,
    parities: [bool; 2],
}

impl<'a> CanonSearch<'a> {
    /// Assigns old vertices to positions 0,1,2,... depth-first, each with one
    /// of the six slot symmetries, keeping the lexicographically least
    /// relabeled involution. Vertices after the first of each connected
    /// component must neighbor an already placed vertex; this restricted
    /// order set is closed under isomorphism, so the minimum over it is
    /// still a class invariant, and the set of parities attained by
    /// minimizing maps detects odd self-isomorphisms exactly.
    fn run(d: &'a Diagram) -> (Vec<usize>, [bool; 2]) {
        let m = d.half_edge_count();
        let mut s = CanonSearch {
            d,
            phi: vec![usize::MAX; m],
            assigned_vertex: vec![false; d.vertex_count()],
            new_sigma: vec![usize::MAX; m],
            best: None,
            parities: [false; 2],
        };
        s.descend(0, 0);
        (s.best.unwrap_or_default(), s.parities)
    }

    fn descend(&mut self, pos: usize, parity: usize) {
        let nv = self.d.vertex_count();
        if pos == nv {
            let candidate = &self.new_sigma;
            match &self.best {
                Some(b) if candidate > b => {}
                Some(b) if candidate == b => self.parities[parity] = true,
                _ => {
                    self.best = Some(candidate.clone());
                    self.parities = [false; 2];
                    self.parities[parity] = true;
                }
            }
            return;
        }
        // prefer vertices adjacent to the placed set; when none exist (start
        // of a new connected component) every unassigned vertex is a candidate
        let unassigned: Vec<usize> = (0..nv).filter(|&v| !self.assigned_vertex[v]).collect();
        let neighbors: Vec<usize> = unassigned
            .iter()
            .copied()
            .filter(|&v| {
                (0..3).any(|s| {
                    let w = Diagram::vertex_of(self.d.sigma[3 * v + s]);
                    self.assigned_vertex[w]
                })
            })
            .collect();
        let candidates = if neighbors.is_empty() {
            unassigned
        } else {
            neighbors
        };
        for v in candidates {
            for (gi, g) in DIHEDRAL.iter().enumerate() {
                let flip = usize::from(gi >= 3);
                self.place(pos, v, g);
                if !self.pruned(pos) {
                    self.descend(pos + 1, (parity + flip) % 2);
                }
                self.unplace(v);
            }
        }
    }

    fn place(&mut self, pos: usize, v: usize, g: &[usize; 3]) {
        self.assigned_vertex[v] = true;
        for s in 0..3 {
            self.phi[3 * v + s] = 3 * pos + g[s];
        }
        for s in 0..3 {
            let h = 3 * v + s;
            let p = self.d.sigma[h];
            if self.phi[p] != usize::MAX {
                let (a, b) = (self.phi[h], self.phi[p]);
                self.new_sigma[a] = b;
                self.new_sigma[b] = a;
            }
        }
    }

    fn unplace(&mut self, v: usize) {
        for s in 0..3 {
            let h = 3 * v + s;
            let p = self.d.sigma[h];
            if self.phi[p] != usize::MAX {
                let (a, b) = (self.phi[h], self.phi[p]);
                self.new_sigma[a] = usize::MAX;
                self.new_sigma[b] = usize::MAX;
            }
        }
        for s in 0..3 {
            self.phi[3 * v + s] = usize::MAX;
        }
        self.assigned_vertex[v] = false;
    }

    /// Compares the partial relabeled involution against the current best;
    /// prunes when no completion can reach the minimum. An entry whose
    /// partner is still unplaced will end up at least 3*(pos+1), the first
    /// label of the next position, which often decides the comparison early.
    fn pruned(&self, pos: usize) -> bool {
        let Some(best) = &self.best else {
            return false;
        };
        let floor = 3 * (pos + 1);
        for h in 0..floor {
            let e = self.new_sigma[h];
            if e == usize::MAX {
                return best[h] < floor;
            }
            match e.cmp(&best[h]) {
                std::cmp::Ordering::Less => return false,
                std::cmp::Ordering::Greater => return true,
                std::cmp::Ordering::Equal => {}
            }
        }
        false
    }
}

/// Connected components as sorted vertex lists, sorted by least vertex.
fn components(d: &Diagram) -> Vec<Vec<usize>> {
    let nv = d.vertex_count();
    let mut seen = vec![false; nv];
    let mut comps = Vec::new();
    for start in 0..nv {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for s in 0..3 {
                let w = Diagram::vertex_of(d.sigma()[3 * u + s]);
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Canonical form with antisymmetry sign. Returns the class and a sign in
/// {+1, -1, 0}: the input equals sign times the canonical representative,
/// with 0 meaning the class is self-negating (hence zero in the quotient).
///
/// Components are canonicalized independently: any self-isomorphism of the
/// whole diagram permutes isomorphic components (an orientation-preserving
/// move) and acts on each component, so the sign data is the product over
/// components and self-negation happens iff some component self-negates.
pub fn canonicalize(d: &Diagram) -> (CanonicalDiagram, i8) {
    let mut blocks: Vec<Vec<u8>> = Vec::new();
    let mut self_negating = false;
    let mut sign: i8 = 1;
    for comp in components(d) {
        // extract the component with order-preserving relabeling
        let mut old_to_new = BTreeMap::new();
        for (new_v, &old_v) in comp.iter().enumerate() {
            for s in 0..3 {
                old_to_new.insert(3 * old_v + s, 3 * new_v + s);
            }
        }
        let sigma: Vec<usize> = comp
            .iter()
            .flat_map(|&v| (0..3).map(move |s| 3 * v + s))
            .map(|h| old_to_new[&d.sigma()[h]])
            .collect();
        let sub = Diagram {
            n: sigma.len() / 6,
            sigma,
        };
        let (min_sigma, parities) = CanonSearch::run(&sub);
        if parities[0] && parities[1] {
            self_negating = true;
        } else if parities[1] {
            sign = -sign;
        }
        let mut block = Vec::with_capacity(1 + min_sigma.len());
        block.push(sub.vertex_count() as u8);
        block.extend(min_sigma.iter().map(|&x| x as u8));
        blocks.push(block);
    }
    blocks.sort_unstable();
    let key = CanonicalKey(blocks.concat());
    if self_negating {
        (
            CanonicalDiagram {
                key,
                sign_class: SignClass::SelfNegating,
            },
            0,
        )
    } else {
        (
            CanonicalDiagram {
                key,
                sign_class: SignClass::PlusMinusDistinct,
            },
            sign,
        )
    }
}

/// One representative per orientation-preserving isomorphism class of
/// trivalent diagrams with 2n vertices, self-negating classes included and
/// flagged. Memoized process-wide; generation dominates runtime at degree 4.
pub fn enumerate_diagrams(n: usize) -> Vec<CanonicalDiagram> {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, Arc<Vec<CanonicalDiagram>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&n) {
        return v.as_ref().clone();
    }
    let built = Arc::new(enumerate_diagrams_uncached(n));
    let out = cache
        .lock()
        .unwrap()
        .entry(n)
        .or_insert_with(|| built.clone())
        .clone();
    out.as_ref().clone()
}

/// Walks partial involutions, breaking the symmetry of completely untouched
/// vertices (only the least one, at its first slot, is offered as a
/// partner), then dedupes by canonical key.
fn enumerate_diagrams_uncached(n: usize) -> Vec<CanonicalDiagram> {
    if n == 0 {
        return vec![CanonicalDiagram {
            key: CanonicalKey(Vec::new()),
            sign_class: SignClass::PlusMinusDistinct,
        }];
    }
    let m = 6 * n;
    let mut sigma = vec![usize::MAX; m];
    let mut found: BTreeMap<CanonicalKey, SignClass> = BTreeMap::new();
    fn rec(sigma: &mut Vec<usize>, found: &mut BTreeMap<CanonicalKey, SignClass>) {
        let m = sigma.len();
        let Some(h) = (0..m).find(|&h| sigma[h] == usize::MAX) else {
            let d = Diagram::new(sigma.clone()).expect("generator emits involutions");
            let (c, _) = canonicalize(&d);
            found.insert(c.key, c.sign_class);
            return;
        };
        fn fresh(sigma: &[usize], v: usize) -> bool {
            (0..3).all(|s| sigma[3 * v + s] == usize::MAX)
        }
        let first_fresh = (0..m / 3).find(|&v| v != h / 3 && fresh(sigma, v));
        for hp in h + 1..m {
            if sigma[hp] != usize::MAX {
                continue;
            }
            let v = hp / 3;
            if v != h / 3 && fresh(sigma, v) {
                // fresh vertices are interchangeable and their slots
                // rotate freely; one canonical choice suffices
                if Some(v) != first_fresh || hp % 3 != 0 {
                    continue;
                }
            }
            sigma[h] = hp;
            sigma[hp] = h;
            rec(sigma, found);
            sigma[h] = usize::MAX;
            sigma[hp] = usize::MAX;
        }
    }
    rec(&mut sigma, &mut found);
    found
        .into_iter()
        .map(|(key, sign_class)| CanonicalDiagram { key, sign_class })
        .collect()
}

/// Formal rational combination of canonical diagram classes. Self-negating
/// keys and zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DiagramVector {
    terms: BTreeMap<CanonicalKey, BigRational>,
}

impl DiagramVector {
    pub fn zero() -> Self {
        DiagramVector::default()
    }

    pub fn from_diagram(d: &Diagram) -> Self {
        let (c, sign) = canonicalize(d);
        let mut v = DiagramVector::zero();
        v.add_term(&c.key, sign, &BigRational::one());
        v
    }

    fn add_term(&mut self, key: &CanonicalKey, sign: i8, coeff: &BigRational) {
        if sign == 0 || coeff.is_zero() {
            return;
        }
        let mut c = coeff.clone();
        if sign < 0 {
            c = -c;
        }
        let e = self
            .terms
            .entry(key.clone())
            .or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(key);
        }
    }

    pub fn add_assign(&mut self, other: &DiagramVector) {
        for (k, c) in &other.terms {
            self.add_term(k, 1, c);
        }
    }

    pub fn scale(&self, c: &BigRational) -> DiagramVector {
        if c.is_zero() {
            return DiagramVector::zero();
        }
        DiagramVector {
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    pub fn neg(&self) -> DiagramVector {
        DiagramVector {
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.clone(), -v.clone()))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<CanonicalKey, BigRational> {
        &self.terms
    }
}

/// Bilinear juxtaposition of diagrams; degrees add and the empty diagram is
/// the unit.
pub fn disjoint_union(a: &DiagramVector, b: &DiagramVector) -> DiagramVector {
    let mut out = DiagramVector::zero();
    for (ka, ca) in &a.terms {
        let da = ka.to_diagram();
        for (kb, cb) in &b.terms {
            let db = kb.to_diagram();
            let offset = da.half_edge_count();
            let mut sigma = da.sigma().to_vec();
            sigma.extend(db.sigma().iter().map(|&h| h + offset));
            let d = Diagram::new(sigma).expect("juxtaposition preserves the involution");
            let (c, sign) = canonicalize(&d);
            out.add_term(&c.key, sign, &(ca * cb));
        }
    }
    out
}

/// The local relation at an edge joining distinct vertices. With the edge's
/// half-edge e at a vertex followed counterclockwise by legs a, b at one end
/// and c, d at the other, the relation asserts
///   [e,a,b | e,c,d] + [e,b,c | e,a,d] - [e,a,c | e,b,d] = 0,
/// the diagrammatic Jacobi identity for the structure tensor attached to
/// counterclockwise-oriented vertices. Signs of the three terms are folded
/// into canonical form via antisymmetry.
fn edge_relation(d: &Diagram, h_u: usize) -> DiagramVector {
    let h_w = d.sigma()[h_u];
    debug_assert_ne!(Diagram::vertex_of(h_u), Diagram::vertex_of(h_w));
    let (u, su) = (h_u / 3, h_u % 3);
    let (w, sw) = (h_w / 3, h_w % 3);
    let a = 3 * u + (su + 1) % 3;
    let b = 3 * u + (su + 2) % 3;
    let c = 3 * w + (sw + 1) % 3;
    // the fourth leg at 3w + (sw + 2) % 3 keeps its position in all terms

    // rewire the four leg positions by conjugating sigma with a permutation
    let rewired = |perm: &[(usize, usize)]| -> Diagram {
        let m = d.half_edge_count();
        let mut p: Vec<usize> = (0..m).collect();
        for &(pos, leg) in perm {
            p[pos] = leg;
        }
        let mut pinv = vec![0usize; m];
        for (i, &x) in p.iter().enumerate() {
            pinv[x] = i;
        }
        let sigma: Vec<usize> = (0..m).map(|h| pinv[d.sigma()[p[h]]]).collect();
        Diagram::new(sigma).expect("conjugation preserves the involution")
    };

    let mut rel = DiagramVector::from_diagram(d);
    // second term: position a gets leg b, b gets c, c gets a
    let h = rewired(&[(a, b), (b, c), (c, a)]);
    rel.add_assign(&DiagramVector::from_diagram(&h));
    // third term, negated: positions b and c swap their legs
    let x = rewired(&[(b, c), (c, b)]);
    rel.add_assign(&DiagramVector::from_diagram(&x).neg());
    rel
}

/// All local edge relations in degree n: every isomorphism class (including
/// self-negating ones, whose own term vanishes but whose rewirings need
/// not), every half-edge whose edge joins two distinct vertices.
pub fn ihx_relations(n: usize) -> Vec<DiagramVector> {
    let mut out = Vec::new();
    for c in enumerate_diagrams(n) {
        let d = c.key.to_diagram();
        for h in 0..d.half_edge_count() {
            if Diagram::vertex_of(h) != Diagram::vertex_of(d.sigma()[h]) {
                let r = edge_relation(&d, h);
                if !r.is_zero() {
                    out.push(r);
                }
            }
        }
    }
    out
}

/// The degree-n diagram space: spanning classes, relation span in reduced
/// echelon form, and the quotient dimension.
#[derive(Clone, Debug)]
pub struct DiagramSpace {
    degree: usize,
    spanning: Vec<CanonicalKey>,
    relation_rank: usize,
    /// reduced echelon rows of the relation span, sparse over spanning indices
    rref_rows: Vec<BTreeMap<usize, BigRational>>,
    pivot_columns: Vec<usize>,
}

impl DiagramSpace {
    fn build(n: usize) -> DiagramSpace {
        let spanning: Vec<CanonicalKey> = enumerate_diagrams(n)
            .into_iter()
            .filter(|c| c.sign_class == SignClass::PlusMinusDistinct)
            .map(|c| c.key)
            .collect();
        let index: BTreeMap<&CanonicalKey, usize> =
            spanning.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let relations = ihx_relations(n);
        let rows: Vec<BTreeMap<usize, BigRational>> = relations
            .iter()
            .map(|r| {
                r.terms()
                    .iter()
                    .map(|(k, c)| (index[k], c.clone()))
                    .collect()
            })
            .collect();
        let mat = RatMatrix::from_sparse_rows(rows.len(), spanning.len(), &rows);
        let (rank, rref, pivots) = rank_and_rref(&mat);
        let rref_rows = (0..rank).map(|i| rref.row_sparse(i)).collect();
        DiagramSpace {
            degree: n,
            spanning,
            relation_rank: rank,
            rref_rows,
            pivot_columns: pivots,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn spanning_diagrams(&self) -> &[CanonicalKey] {
        &self.spanning
    }

    pub fn quotient_dim(&self) -> usize {
        self.spanning.len() - self.relation_rank
    }

    /// Canonical keys of the quotient basis: the non-pivot spanning classes.
    pub fn basis(&self) -> Vec<CanonicalKey> {
        let pivots: BTreeSet<usize> = self.pivot_columns.iter().copied().collect();
        self.spanning
            .iter()
            .enumerate()
            .filter(|(i, _)| !pivots.contains(i))
            .map(|(_, k)| k.clone())
            .collect()
    }

    fn key_index(&self, key: &CanonicalKey) -> Option<usize> {
        self.spanning.binary_search(key).ok()
    }

    /// Reduces a vector to quotient normal form by eliminating pivot
    /// coordinates against the relation span. Idempotent; kills every
    /// relation vector exactly.
    pub fn quotient_projection(&self, v: &DiagramVector) -> DiagramVector {
        let mut coords: BTreeMap<usize, BigRational> = BTreeMap::new();
        for (k, c) in v.terms() {
            let i = self
                .key_index(k)
                .expect("vector key must be a degree-matched spanning class");
            coords.insert(i, c.clone());
        }
        for (row, &pc) in self.rref_rows.iter().zip(&self.pivot_columns) {
            if let Some(c) = coords.get(&pc).cloned() {
                for (&j, rv) in row {
                    let e = coords.entry(j).or_insert_with(BigRational::zero);
                    *e -= &c * rv;
                    if e.is_zero() {
                        coords.remove(&j);
                    }
                }
            }
        }
        DiagramVector {
            terms: coords
                .into_iter()
                .map(|(i, c)| (self.spanning[i].clone(), c))
                .collect(),
        }
    }

    /// Dimension of the image of the connected classes in the quotient.
    pub fn connected_dim(&self) -> usize {
        self.connected_basis().len()
    }

    /// A maximal independent family of connected classes in the quotient,
    /// greedily selected in canonical key order.
    pub fn connected_basis(&self) -> Vec<CanonicalKey> {
        // rows of an elimination basis, keyed by leading coordinate
        let mut elim: BTreeMap<usize, BTreeMap<usize, BigRational>> = BTreeMap::new();
        let mut basis = Vec::new();
        for key in &self.spanning {
            if !key.to_diagram().is_connected() {
                continue;
            }
            let mut unit = DiagramVector::zero();
            unit.add_term(key, 1, &BigRational::one());
            let proj = self.quotient_projection(&unit);
            let mut row: BTreeMap<usize, BigRational> = proj
                .terms()
                .iter()
                .map(|(k, c)| (self.key_index(k).unwrap(), c.clone()))
                .collect();
            while let Some((&lead, lv)) = row.iter().next().map(|(k, v)| (k, v.clone())) {
                let Some(prev) = elim.get(&lead) else {
                    break;
                };
                let f = lv / prev[&lead].clone();
                for (&j, pv) in prev.clone().iter() {
                    let e = row.entry(j).or_insert_with(BigRational::zero);
                    *e -= &f * pv;
                    if e.is_zero() {
                        row.remove(&j);
                    }
                }
            }
            if let Some((&lead, _)) = row.iter().next() {
                elim.insert(lead, row);
                basis.push(key.clone());
            }
        }
        basis
    }
}

/// The quotient space in degree n, memoized process-wide since relation
/// generation dominates runtime at higher degrees.
pub fn space(n: usize) -> Arc<DiagramSpace> {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, Arc<DiagramSpace>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(s) = cache.lock().unwrap().get(&n) {
        return s.clone();
    }
    let built = Arc::new(DiagramSpace::build(n));
    cache
        .lock()
        .unwrap()
        .entry(n)
        .or_insert_with(|| built.clone())
        .clone()
}

/// Dimension of the degree-n quotient space.
pub fn dim(n: usize) -> usize {
    space(n).quotient_dim()
}

/// Dimension of the connected part of the degree-n quotient space.
pub fn connected_dim(n: usize) -> usize {
    space(n).connected_dim()
}

/// Number of multisets of connected classes with degrees summing to n,
/// given the connected dimensions c[k] for k = 1..=max. This is the
/// coefficient of x^n in prod_k (1-x^k)^(-c[k]), computed by dynamic
/// programming; an independent reconstruction of dim from connected dims.
pub fn multiset_dim_from_connected(n: usize, connected: &[usize]) -> BigInt {
    let mut coeffs: Vec<BigInt> = vec![BigInt::zero(); n + 1];
    coeffs[0] = BigInt::one();
    for (k, &ck) in connected.iter().enumerate().map(|(i, c)| (i + 1, c)) {
        for _ in 0..ck {
            // multiply by 1/(1-x^k): running sums with stride k
            for i in k..=n {
                let prev = coeffs[i - k].clone();
                coeffs[i] += prev;
            }
        }
    }
    coeffs[n].clone()
}

//! Exact sparse linear algebra over prime fields `F_p`.
//!
//! Vectors are sorted lists of `(index, value)` pairs with no stored zeros.
//! Matrices are stored column-major, since almost every matrix in this crate
//! is the matrix of a differential applied to basis vectors.
//!
//! Elimination always picks the first nonzero coordinate as pivot, so every
//! echelon form produced here depends only on the input, never on timing or
//! thread count.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by the linear algebra layer.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("{0} is not a prime in [2, 2^31)")]
    InvalidPrime(u64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no solution")]
    NoSolution,
    #[error("zero has no inverse")]
    ZeroInverse,
}

/// A prime field `F_p` with `2 <= p < 2^31`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldPrime {
    p: u32,
}

impl FieldPrime {
    /// Validates `p` by trial division.
    pub fn new(p: u64) -> Result<Self, LinalgError> {
        if !(2..(1u64 << 31)).contains(&p) || !is_prime(p) {
            return Err(LinalgError::InvalidPrime(p));
        }
        Ok(FieldPrime { p: p as u32 })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Reduces a signed integer into `[0, p)`.
    pub fn from_i64(&self, x: i64) -> u32 {
        x.rem_euclid(self.p as i64) as u32
    }

    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a as u64 + b as u64;
        (s % self.p as u64) as u32
    }

    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        let mut base = a % self.p;
        let mut acc = 1 % self.p;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: u32) -> Result<u32, LinalgError> {
        if a.is_multiple_of(self.p) {
            return Err(LinalgError::ZeroInverse);
        }
        Ok(self.pow(a, self.p as u64 - 2))
    }

    /// `(-1)^e` as a field element.
    pub fn sign(&self, e: i64) -> u32 {
        if e.rem_euclid(2) == 0 {
            1 % self.p
        } else {
            self.p - 1
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Sparse vector: strictly increasing indices, nonzero values.
pub type SparseVec = Vec<(usize, u32)>;

/// `a*x + y` on sparse vectors.
pub fn axpy(f: FieldPrime, a: u32, x: &[(usize, u32)], y: &[(usize, u32)]) -> SparseVec {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        if j == y.len() || (i < x.len() && x[i].0 < y[j].0) {
            let v = f.mul(a, x[i].1);
            if v != 0 {
                out.push((x[i].0, v));
            }
            i += 1;
        } else if i == x.len() || y[j].0 < x[i].0 {
            out.push(y[j]);
            j += 1;
        } else {
            let v = f.add(f.mul(a, x[i].1), y[j].1);
            if v != 0 {
                out.push((x[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Scales a sparse vector.
pub fn scale(f: FieldPrime, a: u32, x: &[(usize, u32)]) -> SparseVec {
    if a.is_multiple_of(f.p()) {
        return Vec::new();
    }
    x.iter().map(|&(i, v)| (i, f.mul(a, v))).collect()
}

/// Builds a sparse vector from unsorted, possibly repeated entries.
pub fn collect_sparse(f: FieldPrime, mut entries: Vec<(usize, u32)>) -> SparseVec {
    entries.sort_unstable_by_key(|e| e.0);
    let mut out: SparseVec = Vec::with_capacity(entries.len());
    for (i, v) in entries {
        match out.last_mut() {
            Some(last) if last.0 == i => last.1 = f.add(last.1, v),
            _ => out.push((i, v % f.p())),
        }
    }
    out.retain(|e| e.1 != 0);
    out
}

/// Sparse matrix over `F_p`, column-major, no stored zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeFieldMatrix {
    field: FieldPrime,
    nrows: usize,
    ncols: usize,
    cols: Vec<SparseVec>,
}

impl PrimeFieldMatrix {
    pub fn zeros(field: FieldPrime, nrows: usize, ncols: usize) -> Self {
        PrimeFieldMatrix { field, nrows, ncols, cols: vec![Vec::new(); ncols] }
    }

    pub fn identity(field: FieldPrime, n: usize) -> Self {
        let cols = (0..n).map(|i| vec![(i, 1 % field.p())]).collect();
        PrimeFieldMatrix { field, nrows: n, ncols: n, cols }
    }

    /// Builds a matrix from its columns; entries are normalized.
    pub fn from_columns(field: FieldPrime, nrows: usize, cols: Vec<SparseVec>) -> Self {
        let cols: Vec<SparseVec> = cols.into_iter().map(|c| collect_sparse(field, c)).collect();
        debug_assert!(cols.iter().all(|c| c.last().is_none_or(|e| e.0 < nrows)));
        PrimeFieldMatrix { field, nrows, ncols: cols.len(), cols }
    }

    /// Builds a matrix from dense rows of signed integers.
    pub fn from_dense(field: FieldPrime, rows: &[Vec<i64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut cols = vec![Vec::new(); ncols];
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged dense matrix");
            for (j, &x) in row.iter().enumerate() {
                let v = field.from_i64(x);
                if v != 0 {
                    cols[j].push((i, v));
                }
            }
        }
        PrimeFieldMatrix { field, nrows, ncols, cols }
    }

    pub fn field(&self) -> FieldPrime {
        self.field
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn col(&self, j: usize) -> &SparseVec {
        &self.cols[j]
    }

    pub fn columns(&self) -> &[SparseVec] {
        &self.cols
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(|c| c.len()).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        match self.cols[j].binary_search_by_key(&i, |e| e.0) {
            Ok(k) => self.cols[j][k].1,
            Err(_) => 0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(|c| c.is_empty())
    }

    pub fn to_dense(&self) -> Vec<Vec<u32>> {
        let mut d = vec![vec![0; self.ncols]; self.nrows];
        for (j, c) in self.cols.iter().enumerate() {
            for &(i, v) in c {
                d[i][j] = v;
            }
        }
        d
    }

    pub fn mul_vec(&self, x: &[(usize, u32)]) -> SparseVec {
        let f = self.field;
        let mut acc = Vec::new();
        for &(j, a) in x {
            for &(i, v) in &self.cols[j] {
                acc.push((i, f.mul(a, v)));
            }
        }
        collect_sparse(f, acc)
    }

    /// Matrix product `self * rhs`.
    pub fn compose(&self, rhs: &PrimeFieldMatrix) -> Result<PrimeFieldMatrix, LinalgError> {
        if self.ncols != rhs.nrows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.nrows, self.ncols, rhs.nrows, rhs.ncols
            )));
        }
        let cols = rhs.cols.iter().map(|c| self.mul_vec(c)).collect();
        Ok(PrimeFieldMatrix { field: self.field, nrows: self.nrows, ncols: rhs.ncols, cols })
    }

    pub fn add(&self, rhs: &PrimeFieldMatrix) -> Result<PrimeFieldMatrix, LinalgError> {
        self.add_scaled(1, rhs)
    }

    /// `self + a * rhs`.
    pub fn add_scaled(&self, a: u32, rhs: &PrimeFieldMatrix) -> Result<PrimeFieldMatrix, LinalgError> {
        if self.nrows != rhs.nrows || self.ncols != rhs.ncols {
            return Err(LinalgError::DimensionMismatch("matrix sum".into()));
        }
        let cols = self
            .cols
            .iter()
            .zip(&rhs.cols)
            .map(|(x, y)| axpy(self.field, a, y, x))
            .collect();
        Ok(PrimeFieldMatrix { field: self.field, nrows: self.nrows, ncols: self.ncols, cols })
    }

    pub fn scaled(&self, a: u32) -> PrimeFieldMatrix {
        let cols = self.cols.iter().map(|c| scale(self.field, a, c)).collect();
        PrimeFieldMatrix { field: self.field, nrows: self.nrows, ncols: self.ncols, cols }
    }

    pub fn transpose(&self) -> PrimeFieldMatrix {
        let mut cols = vec![Vec::new(); self.nrows];
        for (j, c) in self.cols.iter().enumerate() {
            for &(i, v) in c {
                cols[i].push((j, v));
            }
        }
        PrimeFieldMatrix { field: self.field, nrows: self.ncols, ncols: self.nrows, cols }
    }

    /// Kronecker product with the left factor major: entry
    /// `(i*rows(B)+k, j*cols(B)+l) = A[i][j] * B[k][l]`.
    pub fn kronecker(&self, b: &PrimeFieldMatrix) -> PrimeFieldMatrix {
        let f = self.field;
        let mut cols = Vec::with_capacity(self.ncols * b.ncols);
        for ca in &self.cols {
            for cb in &b.cols {
                let mut c = Vec::with_capacity(ca.len() * cb.len());
                for &(i, x) in ca {
                    for &(k, y) in cb {
                        c.push((i * b.nrows + k, f.mul(x, y)));
                    }
                }
                cols.push(c);
            }
        }
        PrimeFieldMatrix { field: f, nrows: self.nrows * b.nrows, ncols: self.ncols * b.ncols, cols }
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> PrimeFieldMatrix {
        let cols = keep.iter().map(|&j| self.cols[j].clone()).collect();
        PrimeFieldMatrix { field: self.field, nrows: self.nrows, ncols: keep.len(), cols }
    }

    /// Keeps the listed rows, renumbered in the given order.
    pub fn select_rows(&self, keep: &[usize]) -> PrimeFieldMatrix {
        let mut map = vec![usize::MAX; self.nrows];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let cols = self
            .cols
            .iter()
            .map(|c| {
                let mut v: SparseVec =
                    c.iter().filter(|e| map[e.0] != usize::MAX).map(|e| (map[e.0], e.1)).collect();
                v.sort_unstable_by_key(|e| e.0);
                v
            })
            .collect();
        PrimeFieldMatrix { field: self.field, nrows: keep.len(), ncols: self.ncols, cols }
    }

    /// Horizontal concatenation `[self | rhs]`.
    pub fn hstack(&self, rhs: &PrimeFieldMatrix) -> Result<PrimeFieldMatrix, LinalgError> {
        if self.nrows != rhs.nrows {
            return Err(LinalgError::DimensionMismatch("hstack".into()));
        }
        let mut cols = self.cols.clone();
        cols.extend(rhs.cols.iter().cloned());
        Ok(PrimeFieldMatrix { field: self.field, nrows: self.nrows, ncols: cols.len(), cols })
    }

    pub fn rank(&self) -> usize {
        let mut e = Eliminator::new(self.field, self.nrows);
        for c in &self.cols {
            e.insert(c.clone());
        }
        e.rank()
    }
}

/// Incremental column elimination with first-nonzero pivots.
///
/// Stored vectors are normalized so that their pivot coefficient is 1. When
/// `track` is on, every stored vector also carries the combination of
/// inserted vectors it came from, which yields kernels.
#[derive(Debug, Clone)]
pub struct Eliminator {
    field: FieldPrime,
    dim: usize,
    pivot_slot: Vec<u32>,
    rows: Vec<SparseVec>,
    combos: Vec<SparseVec>,
    pivots: Vec<usize>,
    track: bool,
    inserted: usize,
    kernel: Vec<SparseVec>,
}

const NO_PIVOT: u32 = u32::MAX;

impl Eliminator {
    pub fn new(field: FieldPrime, dim: usize) -> Self {
        Eliminator {
            field,
            dim,
            pivot_slot: vec![NO_PIVOT; dim],
            rows: Vec::new(),
            combos: Vec::new(),
            pivots: Vec::new(),
            track: false,
            inserted: 0,
            kernel: Vec::new(),
        }
    }

    /// Like [`Eliminator::new`] but records combinations and the kernel.
    pub fn tracking(field: FieldPrime, dim: usize) -> Self {
        let mut e = Self::new(field, dim);
        e.track = true;
        e
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Pivot coordinates in insertion order.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn has_pivot(&self, i: usize) -> bool {
        self.pivot_slot[i] != NO_PIVOT
    }

    /// Kernel vectors (in the coordinates of inserted vectors); tracking only.
    pub fn kernel(&self) -> &[SparseVec] {
        &self.kernel
    }

    /// Reduces `v` against the stored vectors. Returns the remainder (zero
    /// exactly when `v` lies in the span) and, when tracking, the
    /// combination of stored combos that was subtracted.
    fn reduce_inner(&self, v: &[(usize, u32)], want_combo: bool) -> (SparseVec, SparseVec) {
        let f = self.field;
        if v.is_empty() {
            return (Vec::new(), Vec::new());
        }
        if v.len() < 48 {
            return self.reduce_small(v, want_combo);
        }
        let mut work: std::collections::HashMap<usize, u32> = v.iter().copied().collect();
        let mut heap: BinaryHeap<Reverse<usize>> = v.iter().map(|e| Reverse(e.0)).collect();
        let mut used: Vec<(usize, u32)> = Vec::new();
        let mut rem = Vec::new();
        while let Some(Reverse(i)) = heap.pop() {
            while heap.peek() == Some(&Reverse(i)) {
                heap.pop();
            }
            let c = match work.get(&i) {
                Some(&c) if c != 0 => c,
                _ => continue,
            };
            let slot = self.pivot_slot[i];
            if slot == NO_PIVOT {
                rem.push((i, c));
                continue;
            }
            let a = f.neg(c);
            for &(k, x) in &self.rows[slot as usize] {
                let e = work.entry(k).or_insert(0);
                let before = *e;
                *e = f.add(*e, f.mul(a, x));
                if before == 0 && k != i {
                    heap.push(Reverse(k));
                }
            }
            if want_combo {
                used.push((slot as usize, a));
            }
        }
        (rem, used)
    }

    fn reduce_small(&self, v: &[(usize, u32)], want_combo: bool) -> (SparseVec, SparseVec) {
        let f = self.field;
        let mut cur: SparseVec = v.to_vec();
        let mut rem = Vec::new();
        let mut used = Vec::new();
        let mut start = 0;
        while start < cur.len() {
            let (i, c) = cur[start];
            let slot = self.pivot_slot[i];
            if slot == NO_PIVOT {
                rem.push((i, c));
                start += 1;
                continue;
            }
            let a = f.neg(c);
            cur = axpy(f, a, &self.rows[slot as usize], &cur[start..]);
            start = 0;
            if want_combo {
                used.push((slot as usize, a));
            }
        }
        (rem, used)
    }

    /// Remainder of `v` modulo the span (first-nonzero reduction).
    pub fn reduce(&self, v: &[(usize, u32)]) -> SparseVec {
        self.reduce_inner(v, false).0
    }

    pub fn contains(&self, v: &[(usize, u32)]) -> bool {
        self.reduce(v).is_empty()
    }

    /// Expresses `v` as a combination of the inserted vectors, if possible.
    /// Requires tracking.
    pub fn express(&self, v: &[(usize, u32)]) -> Option<SparseVec> {
        assert!(self.track, "express requires a tracking eliminator");
        let (rem, used) = self.reduce_inner(v, true);
        if !rem.is_empty() {
            return None;
        }
        let f = self.field;
        let mut acc = Vec::new();
        for (slot, a) in used {
            for &(k, x) in &self.combos[slot] {
                acc.push((k, f.mul(f.neg(a), x)));
            }
        }
        Some(collect_sparse(f, acc))
    }

    /// Inserts `v`; returns the new pivot coordinate if the rank grew.
    pub fn insert(&mut self, v: SparseVec) -> Option<usize> {
        let f = self.field;
        let idx = self.inserted;
        self.inserted += 1;
        let (rem, used) = self.reduce_inner(&v, self.track);
        let combo = if self.track {
            let mut acc = vec![(idx, 1 % f.p())];
            for (slot, a) in used {
                for &(k, x) in &self.combos[slot] {
                    acc.push((k, f.mul(a, x)));
                }
            }
            collect_sparse(f, acc)
        } else {
            Vec::new()
        };
        if rem.is_empty() {
            if self.track {
                self.kernel.push(combo);
            }
            return None;
        }
        let (piv, lead) = rem[0];
        let inv = f.inv(lead).expect("nonzero pivot");
        let row = scale(f, inv, &rem);
        self.pivot_slot[piv] = self.rows.len() as u32;
        self.rows.push(row);
        if self.track {
            self.combos.push(scale(f, inv, &combo));
        }
        self.pivots.push(piv);
        Some(piv)
    }

    /// Stored basis vectors (pivot-normalized, not fully reduced).
    pub fn basis(&self) -> &[SparseVec] {
        &self.rows
    }
}

/// Result of [`rref`].
#[derive(Debug, Clone)]
pub struct Rref {
    pub rank: usize,
    /// Input columns that contributed a new pivot.
    pub pivot_columns: Vec<usize>,
    /// Basis of the kernel (vectors in the source space).
    pub kernel: Vec<SparseVec>,
    /// Column space.
    pub image: Subspace,
}

/// Column echelon reduction of `m`.
pub fn rref(m: &PrimeFieldMatrix) -> Rref {
    let mut e = Eliminator::tracking(m.field(), m.nrows());
    let mut pivot_columns = Vec::new();
    for (j, c) in m.columns().iter().enumerate() {
        if e.insert(c.clone()).is_some() {
            pivot_columns.push(j);
        }
    }
    let kernel = e.kernel().to_vec();
    let image = Subspace::from_vectors(m.field(), m.nrows(), m.columns().iter().cloned());
    Rref { rank: e.rank(), pivot_columns, kernel, image }
}

/// Solves `m x = b`, returning one preimage.
pub fn solve(m: &PrimeFieldMatrix, b: &[(usize, u32)]) -> Result<SparseVec, LinalgError> {
    let mut e = Eliminator::tracking(m.field(), m.nrows());
    for c in m.columns() {
        e.insert(c.clone());
    }
    e.express(b).ok_or(LinalgError::NoSolution)
}

/// A subspace of `F_p^n`, stored as a fully reduced echelon basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    field: FieldPrime,
    ambient: usize,
    /// Basis vectors sorted by pivot; each pivot coordinate vanishes in the
    /// other basis vectors.
    basis: Vec<SparseVec>,
}

impl Subspace {
    pub fn zero(field: FieldPrime, ambient: usize) -> Self {
        Subspace { field, ambient, basis: Vec::new() }
    }

    pub fn full(field: FieldPrime, ambient: usize) -> Self {
        Subspace { field, ambient, basis: (0..ambient).map(|i| vec![(i, 1 % field.p())]).collect() }
    }

    /// Span of coordinate vectors.
    pub fn coordinate(field: FieldPrime, ambient: usize, coords: impl IntoIterator<Item = usize>) -> Self {
        let mut basis: Vec<SparseVec> = coords.into_iter().map(|i| vec![(i, 1 % field.p())]).collect();
        basis.sort();
        basis.dedup();
        Subspace { field, ambient, basis }
    }

    pub fn from_vectors(field: FieldPrime, ambient: usize, vs: impl IntoIterator<Item = SparseVec>) -> Self {
        let mut e = Eliminator::new(field, ambient);
        for v in vs {
            e.insert(v);
        }
        Self::from_eliminator(&e)
    }

    fn from_eliminator(e: &Eliminator) -> Self {
        let f = e.field;
        let mut rows: Vec<SparseVec> = e.basis().to_vec();
        rows.sort_by_key(|r| r[0].0);
        // back substitution, last pivot first
        let pivots: Vec<usize> = rows.iter().map(|r| r[0].0).collect();
        for k in (0..rows.len()).rev() {
            let pk = pivots[k];
            for j in 0..k {
                if let Ok(pos) = rows[j].binary_search_by_key(&pk, |x| x.0) {
                    let c = rows[j][pos].1;
                    let r = axpy(f, f.neg(c), &rows[k], &rows[j]);
                    rows[j] = r;
                }
            }
        }
        Subspace { field: f, ambient: e.dim, basis: rows }
    }

    pub fn field(&self) -> FieldPrime {
        self.field
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[SparseVec] {
        &self.basis
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.basis.iter().map(|r| r[0].0).collect()
    }

    /// Canonical representative of `v` modulo this subspace: zero at every
    /// pivot coordinate.
    pub fn normal_form(&self, v: &[(usize, u32)]) -> SparseVec {
        let f = self.field;
        let mut cur = v.to_vec();
        for r in &self.basis {
            let p = r[0].0;
            if let Ok(pos) = cur.binary_search_by_key(&p, |x| x.0) {
                let c = cur[pos].1;
                cur = axpy(f, f.neg(c), r, &cur);
            }
        }
        cur
    }

    pub fn contains(&self, v: &[(usize, u32)]) -> bool {
        self.normal_form(v).is_empty()
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.basis.iter().all(|v| self.contains(v))
    }

    /// Coordinates of `v` in this basis, if `v` lies in the subspace.
    pub fn coordinates(&self, v: &[(usize, u32)]) -> Option<Vec<u32>> {
        let coords: Vec<u32> = self
            .basis
            .iter()
            .map(|r| match v.binary_search_by_key(&r[0].0, |x| x.0) {
                Ok(pos) => v[pos].1,
                Err(_) => 0,
            })
            .collect();
        let f = self.field;
        let mut acc = Vec::new();
        for (r, &c) in self.basis.iter().zip(&coords) {
            for &(i, x) in r {
                acc.push((i, f.mul(c, x)));
            }
        }
        (collect_sparse(f, acc) == collect_sparse(f, v.to_vec())).then_some(coords)
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        Subspace::from_vectors(self.field, self.ambient, self.basis.iter().chain(&other.basis).cloned())
    }

    /// Intersection via the kernel of `[A | -B]`.
    pub fn intersect(&self, other: &Subspace) -> Subspace {
        let f = self.field;
        let mut e = Eliminator::tracking(f, self.ambient);
        for v in &self.basis {
            e.insert(v.clone());
        }
        for v in &other.basis {
            e.insert(v.clone());
        }
        let na = self.basis.len();
        let vs = e.kernel().iter().map(|k| {
            let mut acc = Vec::new();
            for &(j, c) in k.iter().filter(|x| x.0 < na) {
                for &(i, x) in &self.basis[j] {
                    acc.push((i, f.mul(c, x)));
                }
            }
            collect_sparse(f, acc)
        });
        Subspace::from_vectors(f, self.ambient, vs)
    }

    /// Coordinates not used as pivots; their unit vectors span a complement.
    pub fn complement_coordinates(&self) -> Vec<usize> {
        let mut is_piv = vec![false; self.ambient];
        for r in &self.basis {
            is_piv[r[0].0] = true;
        }
        (0..self.ambient).filter(|&i| !is_piv[i]).collect()
    }

    /// Basis of `self / sub` given by unit vectors on complement coordinates
    /// of `sub` that are needed to span `self`. Returns representatives.
    pub fn quotient_basis(&self, sub: &Subspace) -> Vec<SparseVec> {
        let mut e = Eliminator::new(self.field, self.ambient);
        for v in &sub.basis {
            e.insert(v.clone());
        }
        let mut reps = Vec::new();
        for v in &self.basis {
            if e.insert(v.clone()).is_some() {
                reps.push(v.clone());
            }
        }
        reps
    }

    /// Image of this subspace under `m`.
    pub fn image_under(&self, m: &PrimeFieldMatrix) -> Subspace {
        Subspace::from_vectors(self.field, m.nrows(), self.basis.iter().map(|v| m.mul_vec(v)))
    }
}

/// Preimage `m^{-1}(target)` as a subspace of the source.
pub fn preimage(m: &PrimeFieldMatrix, target: &Subspace) -> Subspace {
    let f = m.field();
    // kernel of the composite source -> ambient / target
    let comp = target.complement_coordinates();
    let mut pos = vec![usize::MAX; m.nrows()];
    for (k, &i) in comp.iter().enumerate() {
        pos[i] = k;
    }
    let cols: Vec<SparseVec> = m
        .columns()
        .iter()
        .map(|c| {
            let nf = target.normal_form(c);
            nf.into_iter().map(|(i, v)| (pos[i], v)).collect()
        })
        .collect();
    let q = PrimeFieldMatrix::from_columns(f, comp.len(), cols);
    let r = rref(&q);
    Subspace::from_vectors(f, m.ncols(), r.kernel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3() -> FieldPrime {
        FieldPrime::new(3).unwrap()
    }

    #[test]
    fn rejects_composites_and_bounds() {
        assert_eq!(FieldPrime::new(4), Err(LinalgError::InvalidPrime(4)));
        assert!(FieldPrime::new(1).is_err());
        assert!(FieldPrime::new(1 << 31).is_err());
        assert!(FieldPrime::new(2147483647).is_ok());
    }

    #[test]
    fn rref_of_rank_one_matrix() {
        let m = PrimeFieldMatrix::from_dense(f3(), &[vec![1, 2], vec![2, 1]]);
        let r = rref(&m);
        assert_eq!(r.rank, 1);
        assert_eq!(r.kernel.len(), 1);
        assert!(m.mul_vec(&r.kernel[0]).is_empty());
        // kernel spanned by (1,1)
        let k = &r.kernel[0];
        assert_eq!(k.len(), 2);
        assert_eq!(k[0].1, k[1].1);
    }

    #[test]
    fn solve_zero_matrix_has_no_solution() {
        let m = PrimeFieldMatrix::zeros(f3(), 1, 1);
        assert_eq!(solve(&m, &[(0, 1)]), Err(LinalgError::NoSolution));
    }

    #[test]
    fn solve_returns_preimage() {
        let f = FieldPrime::new(5).unwrap();
        let m = PrimeFieldMatrix::from_dense(f, &[vec![1, 2, 0], vec![0, 1, 3]]);
        let b = vec![(0, 4), (1, 2)];
        let x = solve(&m, &b).unwrap();
        assert_eq!(m.mul_vec(&x), b);
    }

    #[test]
    fn kronecker_left_major() {
        let f = f3();
        let a = PrimeFieldMatrix::from_dense(f, &[vec![1, 2]]);
        let b = PrimeFieldMatrix::from_dense(f, &[vec![1], vec![1]]);
        let k = a.kronecker(&b);
        assert_eq!(k.to_dense(), vec![vec![1, 2], vec![1, 2]]);
    }

    #[test]
    fn subspace_intersection_and_sum() {
        let f = f3();
        let a = Subspace::from_vectors(f, 3, [vec![(0, 1), (1, 1)], vec![(2, 1)]]);
        let b = Subspace::from_vectors(f, 3, [vec![(1, 1)], vec![(0, 1), (2, 2)]]);
        let i = a.intersect(&b);
        assert_eq!(i.dim(), 1);
        assert!(a.contains_subspace(&i) && b.contains_subspace(&i));
        assert_eq!(a.sum(&b).dim(), 3);
    }

    #[test]
    fn preimage_of_zero_is_kernel() {
        let f = f3();
        let m = PrimeFieldMatrix::from_dense(f, &[vec![1, 1, 0], vec![0, 0, 1]]);
        let k = preimage(&m, &Subspace::zero(f, 2));
        assert_eq!(k.dim(), 1);
        assert!(k.basis().iter().all(|v| m.mul_vec(v).is_empty()));
    }

    #[test]
    fn large_vectors_use_heap_reduction() {
        let f = FieldPrime::new(7).unwrap();
        let n = 200;
        let mut e = Eliminator::tracking(f, n);
        let v1: SparseVec = (0..n).map(|i| (i, (i % 6 + 1) as u32)).collect();
        let v2: SparseVec = (0..n).map(|i| (i, ((i * 3) % 6 + 1) as u32)).collect();
        let v3 = axpy(f, 2, &v1, &scale(f, 3, &v2));
        e.insert(v1);
        e.insert(v2);
        assert!(e.insert(v3).is_none());
        assert_eq!(e.rank(), 2);
        assert_eq!(e.kernel().len(), 1);
        assert_eq!(e.kernel()[0], vec![(0, 5), (1, 4), (2, 1)]);
    }
}

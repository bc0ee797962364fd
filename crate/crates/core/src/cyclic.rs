//! Finite-dimensional DG algebras, their cyclic modules `A♮`, edgewise
//! subdivision and Hochschild-with-coefficients objects.
//!
//! Level `n` of a cyclic module is its value at `[n+1]`: for `A♮` this is
//! `A^{⊗(n+1)}`, with tensor basis indices written in base `dim A`, factor 0
//! most significant. Two representations coexist:
//!
//! * [`CyclicBasis`] describes a module lazily on basis vectors; faces are
//!   computed on demand and the rotation must be a signed permutation. This
//!   is what the large lattice computations use.
//! * [`CyclicModuleData`] stores every map as a matrix up to a maximal
//!   level and is what the relation checker and the small explicit
//!   lattices consume.
//!
//! Relations (with `t` rotating the last factor to the front):
//! `d_i d_j = d_{j-1} d_i` for `i < j`, `d_i t = t d_{i-1}` for
//! `1 <= i <= n`, `d_0 t = d_n` and `t^{l(n+1)} = 1`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf_linalg::{collect_sparse, FieldPrime, LinalgError, PrimeFieldMatrix, SparseVec};

/// Sparse vector indexed by possibly huge tensor indices.
pub type SparseVec64 = Vec<(u64, u32)>;

/// Sums duplicate entries and drops zeros, sorted by index.
pub fn collect64(f: FieldPrime, entries: impl IntoIterator<Item = (u64, u32)>) -> SparseVec64 {
    let mut map: HashMap<u64, u32> = HashMap::new();
    for (i, v) in entries {
        let e = map.entry(i).or_insert(0);
        *e = f.add(*e, v);
    }
    let mut out: SparseVec64 = map.into_iter().filter(|&(_, v)| v != 0).collect();
    out.sort_unstable_by_key(|e| e.0);
    out
}

/// One violated axiom instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    Associativity(usize, usize, usize),
    LeftUnit(usize),
    RightUnit(usize),
    Leibniz(usize, usize),
    DifferentialSquare(usize),
    ProductDegree(usize, usize),
    DifferentialDegree(usize),
    UnitDegree,
    BimoduleLeft(usize, usize, usize),
    BimoduleRight(usize, usize, usize),
    BimoduleMiddle(usize, usize, usize),
    BimoduleUnit(usize),
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Associativity(a, b, c) => write!(f, "({a}·{b})·{c} ≠ {a}·({b}·{c})"),
            Violation::LeftUnit(a) => write!(f, "1·{a} ≠ {a}"),
            Violation::RightUnit(a) => write!(f, "{a}·1 ≠ {a}"),
            Violation::Leibniz(a, b) => write!(f, "Leibniz rule fails on ({a}, {b})"),
            Violation::DifferentialSquare(a) => write!(f, "d²({a}) ≠ 0"),
            Violation::ProductDegree(a, b) => write!(f, "{a}·{b} is not homogeneous of degree |{a}|+|{b}|"),
            Violation::DifferentialDegree(a) => write!(f, "d({a}) is not of degree |{a}|-1"),
            Violation::UnitDegree => write!(f, "unit is not in degree 0"),
            Violation::BimoduleLeft(a, b, m) => write!(f, "({a}·{b})·m{m} ≠ {a}·({b}·m{m})"),
            Violation::BimoduleRight(m, a, b) => write!(f, "(m{m}·{a})·{b} ≠ m{m}·({a}·{b})"),
            Violation::BimoduleMiddle(a, m, b) => write!(f, "({a}·m{m})·{b} ≠ {a}·(m{m}·{b})"),
            Violation::BimoduleUnit(m) => write!(f, "unit does not act trivially on m{m}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CyclicError {
    #[error("invalid algebra: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Axioms(Vec<Violation>),
    #[error("malformed presentation: {0}")]
    Malformed(String),
    #[error("size budget exceeded: level {level} needs {dim} basis vectors (budget {budget})")]
    Budget { level: usize, dim: u64, budget: u64 },
    #[error("source depth {have} is below the required {need}")]
    Depth { have: usize, need: usize },
    #[error("rotation at level {0} is not a signed permutation")]
    NotSignedPermutation(usize),
    #[error("algebra file: {0}")]
    File(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A finite-dimensional unital DG algebra over `F_p`, homologically graded,
/// given by structure constants on a homogeneous basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraPresentation {
    field: FieldPrime,
    labels: Vec<String>,
    degrees: Vec<i64>,
    /// `mult[i][j] = e_i · e_j`.
    mult: Vec<Vec<SparseVec>>,
    unit: SparseVec,
    /// `diff.col(i) = d(e_i)`.
    diff: PrimeFieldMatrix,
}

impl AlgebraPresentation {
    /// Builds and validates a presentation; every violated axiom instance
    /// is reported.
    pub fn new(
        field: FieldPrime,
        labels: Vec<String>,
        degrees: Vec<i64>,
        mult: Vec<Vec<SparseVec>>,
        unit: SparseVec,
        diff: PrimeFieldMatrix,
    ) -> Result<Self, CyclicError> {
        let d = labels.len();
        if degrees.len() != d || mult.len() != d || mult.iter().any(|r| r.len() != d) {
            return Err(CyclicError::Malformed("basis, degrees and structure constants disagree in size".into()));
        }
        if diff.nrows() != d || diff.ncols() != d {
            return Err(CyclicError::Malformed("differential must be a square matrix on the basis".into()));
        }
        let bad_index = mult.iter().flatten().flatten().chain(unit.iter()).any(|&(k, _)| k >= d);
        if bad_index {
            return Err(CyclicError::Malformed("structure constant index out of range".into()));
        }
        let norm = |v: &SparseVec| collect_sparse(field, v.clone());
        let mult = mult.iter().map(|r| r.iter().map(norm).collect()).collect();
        let a = AlgebraPresentation { field, labels, degrees, mult, unit: norm(&unit), diff };
        let violations = a.violations();
        if violations.is_empty() {
            Ok(a)
        } else {
            Err(CyclicError::Axioms(violations))
        }
    }

    fn violations(&self) -> Vec<Violation> {
        let f = self.field;
        let d = self.dim();
        let mut out = Vec::new();
        if self.unit.iter().any(|&(k, _)| self.degrees[k] != 0) {
            out.push(Violation::UnitDegree);
        }
        for i in 0..d {
            for j in 0..d {
                if self.mult[i][j].iter().any(|&(k, _)| self.degrees[k] != self.degrees[i] + self.degrees[j]) {
                    out.push(Violation::ProductDegree(i, j));
                }
            }
            if self.diff.col(i).iter().any(|&(k, _)| self.degrees[k] != self.degrees[i] - 1) {
                out.push(Violation::DifferentialDegree(i));
            }
        }
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let l = self.mul(&self.mul(&[(i, 1)], &[(j, 1)]), &[(k, 1)]);
                    let r = self.mul(&[(i, 1)], &self.mul(&[(j, 1)], &[(k, 1)]));
                    if l != r {
                        out.push(Violation::Associativity(i, j, k));
                    }
                }
            }
        }
        for i in 0..d {
            if self.mul(&self.unit, &[(i, 1)]) != vec![(i, 1)] {
                out.push(Violation::LeftUnit(i));
            }
            if self.mul(&[(i, 1)], &self.unit) != vec![(i, 1)] {
                out.push(Violation::RightUnit(i));
            }
            if !self.diff.mul_vec(self.diff.col(i)).is_empty() {
                out.push(Violation::DifferentialSquare(i));
            }
        }
        for i in 0..d {
            for j in 0..d {
                let lhs = self.diff.mul_vec(&self.mult[i][j]);
                let mut rhs = self.mul(self.diff.col(i), &[(j, 1)]);
                let s = f.sign(self.degrees[i]);
                rhs.extend(self.mul(&[(i, 1)], self.diff.col(j)).into_iter().map(|(k, v)| (k, f.mul(s, v))));
                if lhs != collect_sparse(f, rhs) {
                    out.push(Violation::Leibniz(i, j));
                }
            }
        }
        out
    }

    /// Product of two elements.
    pub fn mul(&self, x: &[(usize, u32)], y: &[(usize, u32)]) -> SparseVec {
        let f = self.field;
        let mut acc = Vec::new();
        for &(i, a) in x {
            for &(j, b) in y {
                let ab = f.mul(a, b);
                acc.extend(self.mult[i][j].iter().map(|&(k, c)| (k, f.mul(ab, c))));
            }
        }
        collect_sparse(f, acc)
    }

    pub fn field(&self) -> FieldPrime {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[i64] {
        &self.degrees
    }

    pub fn product_of(&self, i: usize, j: usize) -> &SparseVec {
        &self.mult[i][j]
    }

    pub fn unit(&self) -> &SparseVec {
        &self.unit
    }

    pub fn diff(&self) -> &PrimeFieldMatrix {
        &self.diff
    }

    pub fn is_commutative(&self) -> bool {
        let f = self.field;
        (0..self.dim()).all(|i| {
            (0..self.dim()).all(|j| {
                let s = f.sign(self.degrees[i] * self.degrees[j]);
                let swapped: SparseVec = self.mult[j][i].iter().map(|&(k, v)| (k, f.mul(s, v))).collect();
                self.mult[i][j] == swapped
            })
        })
    }

    pub fn is_dg(&self) -> bool {
        self.degrees.iter().any(|&g| g != 0) || !self.diff.is_zero()
    }

    /// Structure matrix of left multiplication by `e_i`.
    pub fn left_mult(&self, i: usize) -> PrimeFieldMatrix {
        let cols = (0..self.dim()).map(|j| self.mult[i][j].clone()).collect();
        PrimeFieldMatrix::from_columns(self.field, self.dim(), cols)
    }

    /// Structure matrix of right multiplication by `e_i`.
    pub fn right_mult(&self, i: usize) -> PrimeFieldMatrix {
        let cols = (0..self.dim()).map(|j| self.mult[j][i].clone()).collect();
        PrimeFieldMatrix::from_columns(self.field, self.dim(), cols)
    }
}

fn ungraded(
    field: FieldPrime,
    labels: Vec<String>,
    mult: Vec<Vec<SparseVec>>,
    unit: SparseVec,
) -> Result<AlgebraPresentation, CyclicError> {
    let d = labels.len();
    AlgebraPresentation::new(field, labels, vec![0; d], mult, unit, PrimeFieldMatrix::zeros(field, d, d))
}

/// The ground field.
pub fn ground_field(field: FieldPrime) -> AlgebraPresentation {
    ungraded(field, vec!["1".into()], vec![vec![vec![(0, 1)]]], vec![(0, 1)]).expect("valid")
}

/// `M_k(F_p)` with basis `E_{ij}` at index `i·k + j`.
pub fn matrix_algebra(field: FieldPrime, k: usize) -> AlgebraPresentation {
    let idx = |i: usize, j: usize| i * k + j;
    let mut labels = Vec::new();
    for i in 0..k {
        for j in 0..k {
            labels.push(format!("E{}{}", i + 1, j + 1));
        }
    }
    let mut mult = vec![vec![Vec::new(); k * k]; k * k];
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                mult[idx(i, j)][idx(j, l)] = vec![(idx(i, l), 1)];
            }
        }
    }
    let unit = (0..k).map(|i| (idx(i, i), 1)).collect();
    ungraded(field, labels, mult, unit).expect("valid")
}

/// Direct product `A × B`; the basis of `A` comes first.
pub fn product(a: &AlgebraPresentation, b: &AlgebraPresentation) -> Result<AlgebraPresentation, CyclicError> {
    if a.field != b.field {
        return Err(CyclicError::Malformed("factors over different fields".into()));
    }
    let (da, db) = (a.dim(), b.dim());
    let n = da + db;
    let mut labels: Vec<String> = a.labels.iter().map(|l| format!("{l}⊕0")).collect();
    labels.extend(b.labels.iter().map(|l| format!("0⊕{l}")));
    let mut degrees = a.degrees.clone();
    degrees.extend(&b.degrees);
    let mut mult = vec![vec![Vec::new(); n]; n];
    for (row, src) in mult.iter_mut().zip(&a.mult) {
        row[..da].clone_from_slice(src);
    }
    for i in 0..db {
        for j in 0..db {
            mult[da + i][da + j] = b.mult[i][j].iter().map(|&(k, v)| (da + k, v)).collect();
        }
    }
    let mut unit = a.unit.clone();
    unit.extend(b.unit.iter().map(|&(k, v)| (da + k, v)));
    let mut cols: Vec<SparseVec> = a.diff.columns().to_vec();
    cols.extend(b.diff.columns().iter().map(|c| c.iter().map(|&(k, v)| (da + k, v)).collect()));
    let diff = PrimeFieldMatrix::from_columns(a.field, n, cols);
    AlgebraPresentation::new(a.field, labels, degrees, mult, unit, diff)
}

/// Group algebra `F_p[Z/m]` with basis `g^i`.
pub fn group_algebra(field: FieldPrime, m: usize) -> AlgebraPresentation {
    let labels = (0..m).map(|i| format!("g{i}")).collect();
    let mult = (0..m).map(|i| (0..m).map(|j| vec![((i + j) % m, 1)]).collect()).collect();
    ungraded(field, labels, mult, vec![(0, 1)]).expect("valid")
}

/// `F_p[x]/x^n` with basis `x^i`.
pub fn truncated_poly(field: FieldPrime, n: usize) -> AlgebraPresentation {
    let labels = (0..n).map(|i| format!("x{i}")).collect();
    let mult = (0..n)
        .map(|i| (0..n).map(|j| if i + j < n { vec![(i + j, 1)] } else { Vec::new() }).collect())
        .collect();
    ungraded(field, labels, mult, vec![(0, 1)]).expect("valid")
}

/// Exterior algebra on one generator `x` of degree 1 with zero differential.
pub fn exterior_dg(field: FieldPrime) -> AlgebraPresentation {
    AlgebraPresentation::new(
        field,
        vec!["1".into(), "x".into()],
        vec![0, 1],
        vec![vec![vec![(0, 1)], vec![(1, 1)]], vec![vec![(1, 1)], Vec::new()]],
        vec![(0, 1)],
        PrimeFieldMatrix::zeros(field, 2, 2),
    )
    .expect("valid")
}

/// A basis reference in an algebra file: either a position or a label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BasisRef {
    Index(usize),
    Label(String),
}

/// On-disk algebra description (JSON). Either `builder` or the explicit
/// fields must be given.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraFile {
    pub p: u64,
    #[serde(default)]
    pub builder: Option<String>,
    #[serde(default)]
    pub basis: Vec<String>,
    #[serde(default)]
    pub degrees: HashMap<String, i64>,
    #[serde(default)]
    pub unit: Vec<(BasisRef, i64)>,
    #[serde(default)]
    pub mul: Vec<(BasisRef, BasisRef, BasisRef, i64)>,
    #[serde(default)]
    pub diff: Vec<(BasisRef, BasisRef, i64)>,
}

impl AlgebraFile {
    pub fn parse(text: &str) -> Result<Self, CyclicError> {
        serde_json::from_str(text)
            .map_err(|e| CyclicError::File(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn to_presentation(&self) -> Result<AlgebraPresentation, CyclicError> {
        let field = FieldPrime::new(self.p)?;
        if let Some(b) = &self.builder {
            return build_from_shorthand(field, b);
        }
        let d = self.basis.len();
        let resolve = |r: &BasisRef| -> Result<usize, CyclicError> {
            match r {
                BasisRef::Index(i) if *i < d => Ok(*i),
                BasisRef::Index(i) => Err(CyclicError::File(format!("basis index {i} out of range"))),
                BasisRef::Label(l) => self
                    .basis
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| CyclicError::File(format!("unknown basis label {l:?}"))),
            }
        };
        for k in self.degrees.keys() {
            if !self.basis.contains(k) {
                return Err(CyclicError::File(format!("degree given for unknown label {k:?}")));
            }
        }
        let degrees = self.basis.iter().map(|l| *self.degrees.get(l).unwrap_or(&0)).collect();
        let mut mult = vec![vec![Vec::new(); d]; d];
        for (i, j, k, c) in &self.mul {
            mult[resolve(i)?][resolve(j)?].push((resolve(k)?, field.from_i64(*c)));
        }
        let mut unit = Vec::new();
        for (k, c) in &self.unit {
            unit.push((resolve(k)?, field.from_i64(*c)));
        }
        let mut cols = vec![Vec::new(); d];
        for (i, k, c) in &self.diff {
            cols[resolve(i)?].push((resolve(k)?, field.from_i64(*c)));
        }
        let cols = cols.into_iter().map(|c| collect_sparse(field, c)).collect();
        let diff = PrimeFieldMatrix::from_columns(field, d, cols);
        AlgebraPresentation::new(field, self.basis.clone(), degrees, mult, unit, diff)
    }
}

/// Builders by name: `field`, `matrix:k`, `truncpoly:n`, `group:m`,
/// `exterior`, `product:<a>,<b>`.
pub fn build_from_shorthand(field: FieldPrime, s: &str) -> Result<AlgebraPresentation, CyclicError> {
    let (name, arg) = s.split_once(':').unwrap_or((s, ""));
    let num = || -> Result<usize, CyclicError> {
        arg.parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| CyclicError::File(format!("builder {name:?} needs a positive integer argument")))
    };
    match name {
        "field" => Ok(ground_field(field)),
        "matrix" => Ok(matrix_algebra(field, num()?)),
        "truncpoly" => Ok(truncated_poly(field, num()?)),
        "group" => Ok(group_algebra(field, num()?)),
        "exterior" => Ok(exterior_dg(field)),
        "product" => {
            let (a, b) = split_top_level(arg)
                .ok_or_else(|| CyclicError::File("product needs two comma-separated builders".into()))?;
            product(&build_from_shorthand(field, a)?, &build_from_shorthand(field, b)?)
        }
        other => Err(CyclicError::File(format!("unknown builder {other:?}"))),
    }
}

fn split_top_level(s: &str) -> Option<(&str, &str)> {
    let mut depth = 0usize;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => return Some((s[..i].trim(), s[i + 1..].trim())),
            _ => {}
        }
    }
    None
}

/// A bimodule over an ungraded algebra, by left and right action matrices
/// of the basis elements.
#[derive(Debug, Clone)]
pub struct BimodulePresentation {
    algebra: AlgebraPresentation,
    dim: usize,
    left: Vec<PrimeFieldMatrix>,
    right: Vec<PrimeFieldMatrix>,
}

impl BimodulePresentation {
    pub fn new(
        algebra: AlgebraPresentation,
        dim: usize,
        left: Vec<PrimeFieldMatrix>,
        right: Vec<PrimeFieldMatrix>,
    ) -> Result<Self, CyclicError> {
        if algebra.is_dg() {
            return Err(CyclicError::Malformed("bimodules are supported over ungraded algebras only".into()));
        }
        let d = algebra.dim();
        if left.len() != d || right.len() != d {
            return Err(CyclicError::Malformed("one action matrix per basis element".into()));
        }
        let m = BimodulePresentation { algebra, dim, left, right };
        let mut v = Vec::new();
        let combo = |ms: &[PrimeFieldMatrix], x: &SparseVec| -> PrimeFieldMatrix {
            let mut acc = PrimeFieldMatrix::zeros(m.algebra.field(), dim, dim);
            for &(k, c) in x {
                acc = acc.add_scaled(c, &ms[k]).expect("shape");
            }
            acc
        };
        let lu = combo(&m.left, m.algebra.unit());
        let ru = combo(&m.right, m.algebra.unit());
        let id = PrimeFieldMatrix::identity(m.algebra.field(), dim);
        for a in 0..d {
            for b in 0..d {
                let ab = m.algebra.product_of(a, b).clone();
                let l_ab = combo(&m.left, &ab);
                let r_ab = combo(&m.right, &ab);
                // left action: (ab)m = a(bm); right: m(ab) = (ma)b
                let l_comp = m.left[a].compose(&m.left[b])?;
                let r_comp = m.right[b].compose(&m.right[a])?;
                let mid_l = m.right[b].compose(&m.left[a])?;
                let mid_r = m.left[a].compose(&m.right[b])?;
                for j in 0..dim {
                    if l_ab.col(j) != l_comp.col(j) {
                        v.push(Violation::BimoduleLeft(a, b, j));
                    }
                    if r_ab.col(j) != r_comp.col(j) {
                        v.push(Violation::BimoduleRight(j, a, b));
                    }
                    if mid_l.col(j) != mid_r.col(j) {
                        v.push(Violation::BimoduleMiddle(a, j, b));
                    }
                }
            }
        }
        for j in 0..dim {
            if lu.col(j) != id.col(j) || ru.col(j) != id.col(j) {
                v.push(Violation::BimoduleUnit(j));
            }
        }
        if v.is_empty() {
            Ok(m)
        } else {
            Err(CyclicError::Axioms(v))
        }
    }

    /// `A` as a bimodule over itself.
    pub fn diagonal(a: &AlgebraPresentation) -> Result<Self, CyclicError> {
        let d = a.dim();
        let left = (0..d).map(|i| a.left_mult(i)).collect();
        let right = (0..d).map(|i| a.right_mult(i)).collect();
        BimodulePresentation::new(a.clone(), d, left, right)
    }

    /// The free bimodule `A ⊗ A` with `a·(x⊗y)·b = ax ⊗ yb`.
    pub fn free(a: &AlgebraPresentation) -> Result<Self, CyclicError> {
        let d = a.dim();
        let f = a.field();
        let id = PrimeFieldMatrix::identity(f, d);
        let left = (0..d).map(|i| a.left_mult(i).kronecker(&id)).collect();
        let right = (0..d).map(|i| id.kronecker(&a.right_mult(i))).collect();
        BimodulePresentation::new(a.clone(), d * d, left, right)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn algebra(&self) -> &AlgebraPresentation {
        &self.algebra
    }
}

/// A cyclic module described on basis vectors. Level `n` (the value at
/// `[n+1]`) has `dim(n)` basis vectors; the rotation is a signed
/// permutation of order dividing `level·(n+1)`.
pub trait CyclicBasis: Sync {
    fn field(&self) -> FieldPrime;
    fn level(&self) -> usize;
    /// Largest level that can be evaluated.
    fn max_level(&self) -> usize;
    fn dim(&self, n: usize) -> u64;
    /// Internal (homological) degree of a basis vector.
    fn degree(&self, n: usize, x: u64) -> i64;
    /// `d_i(x)` for `0 <= i <= n`, `n >= 1`.
    fn face(&self, n: usize, i: usize, x: u64) -> SparseVec64;
    /// `t(x) = sign · t_index`.
    fn rotate(&self, n: usize, x: u64) -> (u64, u32);
    /// Internal differential, lowering the internal degree by one.
    fn internal_d(&self, n: usize, x: u64) -> SparseVec64;
    /// Whether the internal differential vanishes identically.
    fn internal_d_is_zero(&self) -> bool;
    /// Basis vectors `x` with `t^k x = ±x`; `k` divides `level·(n+1)`.
    fn periodic_vectors(&self, n: usize, k: usize) -> Vec<u64> {
        (0..self.dim(n))
            .filter(|&x| {
                let mut y = x;
                for _ in 0..k {
                    y = self.rotate(n, y).0;
                }
                y == x
            })
            .collect()
    }
}

/// Applies a face to a sparse vector.
pub fn face_vec(e: &dyn CyclicBasis, n: usize, i: usize, v: &[(u64, u32)]) -> SparseVec64 {
    let f = e.field();
    collect64(f, v.iter().flat_map(|&(x, a)| e.face(n, i, x).into_iter().map(move |(y, c)| (y, f.mul(a, c)))))
}

/// `A♮` of a DG algebra, lazily.
#[derive(Debug, Clone)]
pub struct AnatBasis {
    algebra: AlgebraPresentation,
    max_level: usize,
}

impl AnatBasis {
    pub fn new(algebra: AlgebraPresentation) -> Self {
        let d = algebra.dim().max(2) as f64;
        let max_level = ((63.0 / d.log2()).floor() as usize).saturating_sub(1);
        AnatBasis { algebra, max_level }
    }

    pub fn algebra(&self) -> &AlgebraPresentation {
        &self.algebra
    }

    fn digits(&self, n: usize, mut x: u64) -> Vec<usize> {
        let d = self.algebra.dim() as u64;
        let mut out = vec![0; n + 1];
        for k in (0..=n).rev() {
            out[k] = (x % d) as usize;
            x /= d;
        }
        out
    }

    fn encode(&self, digits: &[usize]) -> u64 {
        let d = self.algebra.dim() as u64;
        digits.iter().fold(0u64, |acc, &a| acc * d + a as u64)
    }
}

impl CyclicBasis for AnatBasis {
    fn field(&self) -> FieldPrime {
        self.algebra.field()
    }

    fn level(&self) -> usize {
        1
    }

    fn max_level(&self) -> usize {
        self.max_level
    }

    fn dim(&self, n: usize) -> u64 {
        (self.algebra.dim() as u64).pow(n as u32 + 1)
    }

    fn degree(&self, n: usize, x: u64) -> i64 {
        self.digits(n, x).iter().map(|&a| self.algebra.degree(a)).sum()
    }

    fn face(&self, n: usize, i: usize, x: u64) -> SparseVec64 {
        assert!(n >= 1 && i <= n, "face d_{i} at level {n}");
        let f = self.field();
        let a = self.digits(n, x);
        let mut out = Vec::new();
        if i < n {
            for &(k, c) in self.algebra.product_of(a[i], a[i + 1]) {
                let mut b = Vec::with_capacity(n);
                b.extend_from_slice(&a[..i]);
                b.push(k);
                b.extend_from_slice(&a[i + 2..]);
                out.push((self.encode(&b), c));
            }
        } else {
            let rest: i64 = a[..n].iter().map(|&j| self.algebra.degree(j)).sum();
            let s = f.sign(self.algebra.degree(a[n]) * rest);
            for &(k, c) in self.algebra.product_of(a[n], a[0]) {
                let mut b = Vec::with_capacity(n);
                b.push(k);
                b.extend_from_slice(&a[1..n]);
                out.push((self.encode(&b), f.mul(s, c)));
            }
        }
        out
    }

    fn rotate(&self, n: usize, x: u64) -> (u64, u32) {
        let f = self.field();
        let a = self.digits(n, x);
        let rest: i64 = a[..n].iter().map(|&j| self.algebra.degree(j)).sum();
        let s = f.sign(self.algebra.degree(a[n]) * rest);
        let mut b = Vec::with_capacity(n + 1);
        b.push(a[n]);
        b.extend_from_slice(&a[..n]);
        (self.encode(&b), s)
    }

    fn internal_d(&self, n: usize, x: u64) -> SparseVec64 {
        let f = self.field();
        let a = self.digits(n, x);
        let mut out = Vec::new();
        let mut before = 0i64;
        for k in 0..=n {
            let s = f.sign(before);
            for &(j, c) in self.algebra.diff().col(a[k]) {
                let mut b = a.clone();
                b[k] = j;
                out.push((self.encode(&b), f.mul(s, c)));
            }
            before += self.algebra.degree(a[k]);
        }
        collect64(f, out)
    }

    fn internal_d_is_zero(&self) -> bool {
        self.algebra.diff().is_zero()
    }

    fn periodic_vectors(&self, n: usize, k: usize) -> Vec<u64> {
        assert!((n + 1).is_multiple_of(k), "period {k} does not divide {}", n + 1);
        let d = self.algebra.dim() as u64;
        let reps = (n + 1) / k;
        (0..d.pow(k as u32))
            .map(|block| {
                let mut x = 0u64;
                for _ in 0..reps {
                    x = x * d.pow(k as u32) + block;
                }
                x
            })
            .collect()
    }
}

/// Edgewise subdivision `i_l*` of a level-1 cyclic module: level `n` is the
/// source level `l(n+1)-1`, face `d_i` is the composite
/// `d_i d_{i+(n+1)} ⋯ d_{i+(l-1)(n+1)}` (highest index applied first) and
/// the rotation is the source rotation.
pub struct EdgewiseBasis<'a> {
    source: &'a dyn CyclicBasis,
    l: usize,
}

impl<'a> EdgewiseBasis<'a> {
    pub fn new(source: &'a dyn CyclicBasis, l: usize) -> Result<Self, CyclicError> {
        if source.level() != 1 || l == 0 {
            return Err(CyclicError::Malformed("edgewise subdivision needs a level-1 source and l >= 1".into()));
        }
        Ok(EdgewiseBasis { source, l })
    }

    fn src_level(&self, n: usize) -> usize {
        self.l * (n + 1) - 1
    }
}

impl CyclicBasis for EdgewiseBasis<'_> {
    fn field(&self) -> FieldPrime {
        self.source.field()
    }

    fn level(&self) -> usize {
        self.l
    }

    fn max_level(&self) -> usize {
        (self.source.max_level() + 1) / self.l - 1
    }

    fn dim(&self, n: usize) -> u64 {
        self.source.dim(self.src_level(n))
    }

    fn degree(&self, n: usize, x: u64) -> i64 {
        self.source.degree(self.src_level(n), x)
    }

    fn face(&self, n: usize, i: usize, x: u64) -> SparseVec64 {
        let mut level = self.src_level(n);
        let mut v: SparseVec64 = vec![(x, 1)];
        for j in (0..self.l).rev() {
            v = face_vec(self.source, level, i + j * (n + 1), &v);
            level -= 1;
        }
        v
    }

    fn rotate(&self, n: usize, x: u64) -> (u64, u32) {
        self.source.rotate(self.src_level(n), x)
    }

    fn internal_d(&self, n: usize, x: u64) -> SparseVec64 {
        self.source.internal_d(self.src_level(n), x)
    }

    fn internal_d_is_zero(&self) -> bool {
        self.source.internal_d_is_zero()
    }

    fn periodic_vectors(&self, n: usize, k: usize) -> Vec<u64> {
        self.source.periodic_vectors(self.src_level(n), k)
    }
}

/// Matrices of one level of a cyclic module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelData {
    pub degrees: Vec<i64>,
    /// `faces[i] = d_i : E_n -> E_{n-1}`; empty at level 0.
    pub faces: Vec<PrimeFieldMatrix>,
    pub rotation: PrimeFieldMatrix,
    pub internal_d: PrimeFieldMatrix,
}

/// A cyclic module of level `l` stored explicitly for levels `0..=N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicModuleData {
    field: FieldPrime,
    level: usize,
    levels: Vec<LevelData>,
}

/// Default bound on the basis size of a single materialized level.
pub const DEFAULT_BUDGET: u64 = 1 << 20;

impl CyclicModuleData {
    pub fn new(field: FieldPrime, level: usize, levels: Vec<LevelData>) -> Self {
        CyclicModuleData { field, level, levels }
    }

    /// Evaluates a lazily described module on levels `0..=n_max`.
    pub fn materialize(e: &dyn CyclicBasis, n_max: usize, budget: u64) -> Result<Self, CyclicError> {
        if n_max > e.max_level() {
            return Err(CyclicError::Depth { have: e.max_level(), need: n_max });
        }
        let f = e.field();
        let mut levels = Vec::new();
        for n in 0..=n_max {
            let dim = e.dim(n);
            if dim > budget {
                return Err(CyclicError::Budget { level: n, dim, budget });
            }
            let dim = dim as usize;
            let below = if n == 0 { 0 } else { e.dim(n - 1) as usize };
            let to_cols = |v: SparseVec64| -> SparseVec { v.into_iter().map(|(i, c)| (i as usize, c)).collect() };
            let faces = if n == 0 {
                Vec::new()
            } else {
                (0..=n)
                    .map(|i| {
                        let cols = (0..dim as u64).map(|x| to_cols(e.face(n, i, x))).collect();
                        PrimeFieldMatrix::from_columns(f, below, cols)
                    })
                    .collect()
            };
            let rot_cols = (0..dim as u64)
                .map(|x| {
                    let (y, s) = e.rotate(n, x);
                    vec![(y as usize, s)]
                })
                .collect();
            let d_cols = (0..dim as u64).map(|x| to_cols(e.internal_d(n, x))).collect();
            levels.push(LevelData {
                degrees: (0..dim as u64).map(|x| e.degree(n, x)).collect(),
                faces,
                rotation: PrimeFieldMatrix::from_columns(f, dim, rot_cols),
                internal_d: PrimeFieldMatrix::from_columns(f, dim, d_cols),
            });
        }
        Ok(CyclicModuleData { field: f, level: e.level(), levels })
    }

    pub fn field(&self) -> FieldPrime {
        self.field
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level_data(&self, n: usize) -> &LevelData {
        &self.levels[n]
    }

    pub fn dim(&self, n: usize) -> usize {
        self.levels[n].degrees.len()
    }

    /// Order of the automorphism group at level `n`.
    pub fn group_order(&self, n: usize) -> usize {
        self.level * (n + 1)
    }

    /// `b = Σ_{i<=n} (-1)^i d_i` at level `n`.
    pub fn b(&self, n: usize) -> PrimeFieldMatrix {
        self.alternating_faces(n, n + 1)
    }

    /// `b' = Σ_{i<n} (-1)^i d_i` at level `n`.
    pub fn b_prime(&self, n: usize) -> PrimeFieldMatrix {
        self.alternating_faces(n, n)
    }

    fn alternating_faces(&self, n: usize, count: usize) -> PrimeFieldMatrix {
        let f = self.field;
        let below = if n == 0 { 0 } else { self.dim(n - 1) };
        let mut acc = PrimeFieldMatrix::zeros(f, below, self.dim(n));
        if n == 0 {
            return acc;
        }
        for (i, d) in self.levels[n].faces.iter().enumerate().take(count) {
            acc = acc.add_scaled(f.sign(i as i64), d).expect("shape");
        }
        acc
    }

    /// `σ† = (-1)^n t`. For odd `l` this is `(-1)^{l(n+1)+1} t`; for even `l`
    /// only the sign `(-1)^n` makes `b(1-σ†) = (1-σ†)b'` hold.
    pub fn sigma_dagger(&self, n: usize) -> PrimeFieldMatrix {
        self.levels[n].rotation.scaled(self.field.sign(n as i64))
    }

    /// `N† = Σ_j (σ†)^j` over the group at level `n`.
    pub fn norm_dagger(&self, n: usize) -> PrimeFieldMatrix {
        crate::tate::norm_operator(&self.sigma_dagger(n), self.group_order(n))
    }

    /// Restriction to `Δ^o × pt_l`: faces with `σ = t^{n+1}` per level.
    pub fn restrict_j(&self) -> SimplicialGroupData {
        let levels = (0..self.levels.len())
            .map(|n| {
                let t = &self.levels[n].rotation;
                let mut sigma = PrimeFieldMatrix::identity(self.field, self.dim(n));
                for _ in 0..=n {
                    sigma = t.compose(&sigma).expect("square");
                }
                SimplicialLevel {
                    faces: self.levels[n].faces.clone(),
                    sigma,
                    internal_d: self.levels[n].internal_d.clone(),
                }
            })
            .collect();
        SimplicialGroupData { field: self.field, order: self.level, levels }
    }

    /// Explicit edgewise subdivision of a level-1 module.
    pub fn edgewise(&self, l: usize, n_max: usize) -> Result<CyclicModuleData, CyclicError> {
        if self.level != 1 {
            return Err(CyclicError::Malformed("edgewise subdivision needs a level-1 source".into()));
        }
        let need = l * (n_max + 1) - 1;
        if need > self.max_level() {
            return Err(CyclicError::Depth { have: self.max_level(), need });
        }
        let mut levels = Vec::new();
        for n in 0..=n_max {
            let top = l * (n + 1) - 1;
            let faces = if n == 0 {
                Vec::new()
            } else {
                (0..=n)
                    .map(|i| {
                        let mut m = PrimeFieldMatrix::identity(self.field, self.dim(top));
                        let mut level = top;
                        for j in (0..l).rev() {
                            m = self.levels[level].faces[i + j * (n + 1)].compose(&m).expect("shape");
                            level -= 1;
                        }
                        m
                    })
                    .collect()
            };
            levels.push(LevelData {
                degrees: self.levels[top].degrees.clone(),
                faces,
                rotation: self.levels[top].rotation.clone(),
                internal_d: self.levels[top].internal_d.clone(),
            });
        }
        Ok(CyclicModuleData { field: self.field, level: l, levels })
    }
}

/// Outcome of [`check_cyclic_relations`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl RelationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

/// Checks every cyclic-module identity on all stored levels, including the
/// internal differential's compatibility and `b(1-σ†) = (1-σ†)b'`.
pub fn check_cyclic_relations(e: &CyclicModuleData) -> RelationReport {
    let f = e.field;
    let mut r = RelationReport::default();
    let one_minus = |m: &PrimeFieldMatrix| PrimeFieldMatrix::identity(f, m.ncols()).add_scaled(f.neg(1), m).expect("square");
    for n in 0..=e.max_level() {
        let lv = &e.levels[n];
        let t = &lv.rotation;
        let dim = e.dim(n);
        // t^{l(n+1)} = id
        let mut pw = PrimeFieldMatrix::identity(f, dim);
        for _ in 0..e.group_order(n) {
            pw = t.compose(&pw).expect("square");
        }
        r.check(pw == PrimeFieldMatrix::identity(f, dim), || format!("t^{} ≠ 1 at level {n}", e.group_order(n)));
        let deg = &lv.degrees;
        r.check(
            (0..dim).all(|x| t.col(x).iter().all(|&(y, _)| deg[y] == deg[x])),
            || format!("t does not preserve degrees at level {n}"),
        );
        let d = &lv.internal_d;
        r.check(d.compose(d).map(|m| m.is_zero()).unwrap_or(false), || format!("δ² ≠ 0 at level {n}"));
        r.check(
            (0..dim).all(|x| d.col(x).iter().all(|&(y, _)| deg[y] == deg[x] - 1)),
            || format!("δ is not of degree -1 at level {n}"),
        );
        r.check(d.compose(t).ok() == t.compose(d).ok(), || format!("δ t ≠ t δ at level {n}"));
        if n == 0 {
            continue;
        }
        let below = &e.levels[n - 1];
        let tb = &below.rotation;
        for i in 0..=n {
            let di = &lv.faces[i];
            r.check(
                di.compose(d).ok() == below.internal_d.compose(di).ok(),
                || format!("δ d_{i} ≠ d_{i} δ at level {n}"),
            );
            r.check(
                (0..dim).all(|x| di.col(x).iter().all(|&(y, _)| below.degrees[y] == deg[x])),
                || format!("d_{i} does not preserve degrees at level {n}"),
            );
            if i >= 1 {
                let lhs = di.compose(t).expect("shape");
                let rhs = tb.compose(&lv.faces[i - 1]).expect("shape");
                r.check(lhs == rhs, || format!("d_{i} t ≠ t d_{} at level {n}", i - 1));
            } else {
                let lhs = di.compose(t).expect("shape");
                r.check(lhs == lv.faces[n], || format!("d_0 t ≠ d_{n} at level {n}"));
            }
        }
        if n >= 2 {
            let lower = &e.levels[n - 1];
            for j in 0..=n {
                for i in 0..j {
                    let lhs = lower.faces[i].compose(&lv.faces[j]).expect("shape");
                    let rhs = lower.faces[j - 1].compose(&lv.faces[i]).expect("shape");
                    r.check(lhs == rhs, || format!("d_{i} d_{j} ≠ d_{} d_{i} at level {n}", j - 1));
                }
            }
        }
        let lhs = e.b(n).compose(&one_minus(&e.sigma_dagger(n))).expect("shape");
        let rhs = one_minus(&e.sigma_dagger(n - 1)).compose(&e.b_prime(n)).expect("shape");
        r.check(lhs == rhs, || format!("b(1-σ†) ≠ (1-σ†)b' at level {n}"));
        let lhs = e.b_prime(n).compose(&e.norm_dagger(n)).expect("shape");
        let rhs = e.norm_dagger(n - 1).compose(&e.b(n)).expect("shape");
        r.check(lhs == rhs, || format!("b' N† ≠ N† b at level {n}"));
    }
    r
}

/// Extra degeneracy `s(a_0 ⊗ ⋯ ⊗ a_n) = 1 ⊗ a_0 ⊗ ⋯ ⊗ a_n` of `A♮`, from
/// level `n` to level `n+1`. Satisfies `b's + sb' = 1`.
pub fn extra_degeneracy(a: &AlgebraPresentation, n: usize) -> PrimeFieldMatrix {
    let f = a.field();
    let d = a.dim() as u64;
    let shift = d.pow(n as u32 + 1);
    let cols = (0..shift)
        .map(|x| a.unit().iter().map(|&(k, c)| ((k as u64 * shift + x) as usize, c)).collect())
        .collect();
    PrimeFieldMatrix::from_columns(f, (shift * d) as usize, cols)
}

/// Connes' operator `B = (1-σ†) s N† : A♮_n -> A♮_{n+1}`; needs `n < max_level`.
pub fn connes_b(a: &AlgebraPresentation, e: &CyclicModuleData, n: usize) -> PrimeFieldMatrix {
    let f = e.field();
    let up = e.sigma_dagger(n + 1);
    let one_minus = PrimeFieldMatrix::identity(f, up.ncols()).add_scaled(f.neg(1), &up).expect("square");
    let sn = extra_degeneracy(a, n).compose(&e.norm_dagger(n)).expect("shape");
    one_minus.compose(&sn).expect("shape")
}

/// Checks the mixed-complex identities of `(A♮, b + (-1)^n δ, B)`:
/// `b's + sb' = 1`, `B² = 0`, `bB + Bb = 0` and `δB = Bδ`.
pub fn check_mixed_relations(a: &AlgebraPresentation, e: &CyclicModuleData) -> RelationReport {
    let f = e.field();
    let mut r = RelationReport::default();
    let top = e.max_level();
    let bs: Vec<PrimeFieldMatrix> = (0..top).map(|n| connes_b(a, e, n)).collect();
    for n in 0..top {
        let s = extra_degeneracy(a, n);
        let mut lhs = e.b_prime(n + 1).compose(&s).expect("shape");
        if n >= 1 {
            let below = extra_degeneracy(a, n - 1).compose(&e.b_prime(n)).expect("shape");
            lhs = lhs.add(&below).expect("shape");
        }
        r.check(lhs == PrimeFieldMatrix::identity(f, e.dim(n)), || format!("b's + sb' ≠ 1 at level {n}"));
        if n + 1 < top {
            r.check(bs[n + 1].compose(&bs[n]).map(|m| m.is_zero()).unwrap_or(false), || format!("B² ≠ 0 at level {n}"));
        }
        let mut anti = e.b(n + 1).compose(&bs[n]).expect("shape");
        if n >= 1 {
            anti = anti.add(&bs[n - 1].compose(&e.b(n)).expect("shape")).expect("shape");
        }
        r.check(anti.is_zero(), || format!("bB + Bb ≠ 0 at level {n}"));
        let db = e.level_data(n + 1).internal_d.compose(&bs[n]).expect("shape");
        let bd = bs[n].compose(&e.level_data(n).internal_d).expect("shape");
        r.check(db == bd, || format!("δB ≠ Bδ at level {n}"));
    }
    r
}

/// `A♮` materialized on levels `0..=n_max`.
pub fn build_anat(a: &AlgebraPresentation, n_max: usize) -> Result<CyclicModuleData, CyclicError> {
    CyclicModuleData::materialize(&AnatBasis::new(a.clone()), n_max, DEFAULT_BUDGET)
}

/// One level of a simplicial object with a commuting `Z/l`-action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialLevel {
    pub faces: Vec<PrimeFieldMatrix>,
    pub sigma: PrimeFieldMatrix,
    pub internal_d: PrimeFieldMatrix,
}

/// Faces and a `Z/order` action per level; degeneracies are not stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialGroupData {
    pub field: FieldPrime,
    pub order: usize,
    pub levels: Vec<SimplicialLevel>,
}

impl SimplicialGroupData {
    pub fn dim(&self, n: usize) -> usize {
        self.levels[n].sigma.ncols()
    }

    /// `b = Σ (-1)^i d_i` at level `n`.
    pub fn b(&self, n: usize) -> PrimeFieldMatrix {
        let f = self.field;
        let below = if n == 0 { 0 } else { self.dim(n - 1) };
        let mut acc = PrimeFieldMatrix::zeros(f, below, self.dim(n));
        for (i, d) in self.levels[n].faces.iter().enumerate() {
            acc = acc.add_scaled(f.sign(i as i64), d).expect("shape");
        }
        acc
    }

    /// Checks `σ^order = 1`, face identities and that `σ` commutes with
    /// faces.
    pub fn check(&self) -> RelationReport {
        let mut r = RelationReport::default();
        for n in 0..self.levels.len() {
            let lv = &self.levels[n];
            let mut pw = PrimeFieldMatrix::identity(self.field, self.dim(n));
            for _ in 0..self.order {
                pw = lv.sigma.compose(&pw).expect("square");
            }
            r.check(pw == PrimeFieldMatrix::identity(self.field, self.dim(n)), || format!("σ^{} ≠ 1 at level {n}", self.order));
            if n == 0 {
                continue;
            }
            for (i, d) in lv.faces.iter().enumerate() {
                let lhs = d.compose(&lv.sigma).expect("shape");
                let rhs = self.levels[n - 1].sigma.compose(d).expect("shape");
                r.check(lhs == rhs, || format!("σ does not commute with d_{i} at level {n}"));
            }
            if n >= 2 {
                for j in 0..=n {
                    for i in 0..j {
                        let lhs = self.levels[n - 1].faces[i].compose(&lv.faces[j]).expect("shape");
                        let rhs = self.levels[n - 1].faces[j - 1].compose(&lv.faces[i]).expect("shape");
                        r.check(lhs == rhs, || format!("d_{i} d_{j} ≠ d_{} d_{i} at level {n}", j - 1));
                    }
                }
            }
        }
        r
    }

    /// The complex `(E_n, b)` on levels `0..=n_max` as a chain complex.
    pub fn hochschild_complex(&self) -> crate::complex::ChainComplex {
        let dims = (0..self.levels.len()).map(|n| self.dim(n)).collect();
        let diffs = (0..self.levels.len()).map(|n| self.b(n)).collect();
        crate::complex::ChainComplex::new(self.field, 0, dims, diffs).expect("b² = 0")
    }
}

/// `(M^{⊗l}_σ / A^{⊗l})♮` on levels `0..=n_max`: level `n` is
/// `M^{⊗l} ⊗ (A^{⊗l})^{⊗n}` with the standard Hochschild faces, the right
/// action of `A^{⊗l}` on `M^{⊗l}` twisted by the cyclic permutation `σ`,
/// and `σ` acting diagonally.
pub fn hoch_coeff(m: &BimodulePresentation, l: usize, n_max: usize) -> Result<SimplicialGroupData, CyclicError> {
    if l == 0 {
        return Err(CyclicError::Malformed("l must be positive".into()));
    }
    let a = m.algebra();
    let f = a.field();
    let da = a.dim();
    let dm = m.dim();
    let al = da.pow(l as u32);
    let ml = dm.pow(l as u32);
    let budget = DEFAULT_BUDGET as u128;
    if (ml as u128) * (al as u128).pow(n_max as u32) > budget {
        return Err(CyclicError::Budget { level: n_max, dim: u64::MAX, budget: DEFAULT_BUDGET });
    }
    // σ on an l-fold tensor of a space of dim q: (x_0, …, x_{l-1}) -> (x_{l-1}, x_0, …)
    let perm_l = |q: usize| -> PrimeFieldMatrix {
        let cols = (0..q.pow(l as u32))
            .map(|x| {
                let mut dig = vec![0; l];
                let mut y = x;
                for k in (0..l).rev() {
                    dig[k] = y % q;
                    y /= q;
                }
                dig.rotate_right(1);
                vec![(dig.iter().fold(0, |acc, &d| acc * q + d), 1)]
            })
            .collect();
        PrimeFieldMatrix::from_columns(f, q.pow(l as u32), cols)
    };
    let kron_all = |ms: &[PrimeFieldMatrix]| -> PrimeFieldMatrix {
        let mut acc = PrimeFieldMatrix::identity(f, 1);
        for x in ms {
            acc = acc.kronecker(x);
        }
        acc
    };
    // left/right actions of basis tensors of A^{⊗l} on M^{⊗l}
    let digits = |x: usize, q: usize| -> Vec<usize> {
        let mut dig = vec![0; l];
        let mut y = x;
        for k in (0..l).rev() {
            dig[k] = y % q;
            y /= q;
        }
        dig
    };
    let left_l: Vec<PrimeFieldMatrix> =
        (0..al).map(|x| kron_all(&digits(x, da).iter().map(|&i| m.left[i].clone()).collect::<Vec<_>>())).collect();
    let right_plain: Vec<PrimeFieldMatrix> =
        (0..al).map(|x| kron_all(&digits(x, da).iter().map(|&i| m.right[i].clone()).collect::<Vec<_>>())).collect();
    let sig_a = perm_l(da);
    // twisted right action: m · a = m σ(a)
    let right_l: Vec<PrimeFieldMatrix> = (0..al)
        .map(|x| {
            let mut acc = PrimeFieldMatrix::zeros(f, ml, ml);
            for &(y, c) in sig_a.col(x) {
                acc = acc.add_scaled(c, &right_plain[y]).expect("shape");
            }
            acc
        })
        .collect();
    let mult_l: Vec<Vec<SparseVec>> = (0..al)
        .map(|x| {
            (0..al)
                .map(|y| {
                    let (dx, dy) = (digits(x, da), digits(y, da));
                    let mut acc: Vec<(usize, u32)> = vec![(0, 1)];
                    for k in 0..l {
                        let prod = a.product_of(dx[k], dy[k]);
                        let mut next = Vec::new();
                        for &(i, c) in &acc {
                            for &(j, e) in prod {
                                next.push((i * da + j, f.mul(c, e)));
                            }
                        }
                        acc = next;
                    }
                    collect_sparse(f, acc)
                })
                .collect()
        })
        .collect();
    let sig_m = perm_l(dm);
    let mut levels = Vec::new();
    for n in 0..=n_max {
        let dim = ml * al.pow(n as u32);
        let below = if n == 0 { 0 } else { ml * al.pow(n as u32 - 1) };
        // basis: m-index major, then a_1 … a_n
        let split = |x: usize| -> (usize, Vec<usize>) {
            let mut y = x;
            let mut av = vec![0; n];
            for k in (0..n).rev() {
                av[k] = y % al;
                y /= al;
            }
            (y, av)
        };
        let join = |mi: usize, av: &[usize]| av.iter().fold(mi, |acc, &a| acc * al + a);
        let faces = if n == 0 {
            Vec::new()
        } else {
            (0..=n)
                .map(|i| {
                    let cols = (0..dim)
                        .map(|x| {
                            let (mi, av) = split(x);
                            let mut out = Vec::new();
                            if i == 0 {
                                for &(mj, c) in right_l[av[0]].col(mi) {
                                    out.push((join(mj, &av[1..]), c));
                                }
                            } else if i < n {
                                for &(k, c) in &mult_l[av[i - 1]][av[i]] {
                                    let mut bv = av[..i - 1].to_vec();
                                    bv.push(k);
                                    bv.extend_from_slice(&av[i + 1..]);
                                    out.push((join(mi, &bv), c));
                                }
                            } else {
                                for &(mj, c) in left_l[av[n - 1]].col(mi) {
                                    out.push((join(mj, &av[..n - 1]), c));
                                }
                            }
                            collect_sparse(f, out)
                        })
                        .collect();
                    PrimeFieldMatrix::from_columns(f, below, cols)
                })
                .collect()
        };
        let mut blocks = vec![sig_m.clone()];
        blocks.extend(std::iter::repeat_n(sig_a.clone(), n));
        let sigma = kron_all(&blocks);
        levels.push(SimplicialLevel { faces, sigma, internal_d: PrimeFieldMatrix::zeros(f, dim, dim) });
    }
    Ok(SimplicialGroupData { field: f, order: l, levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3() -> FieldPrime {
        FieldPrime::new(3).unwrap()
    }

    #[test]
    fn builders_are_valid() {
        let f = f3();
        assert_eq!(matrix_algebra(f, 2).dim(), 4);
        assert_eq!(matrix_algebra(f, 2).unit(), &vec![(0, 1), (3, 1)]);
        let p = product(&ground_field(f), &ground_field(f)).unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.product_of(0, 1), &Vec::<(usize, u32)>::new());
        assert!(truncated_poly(f, 2).is_commutative());
        assert!(!matrix_algebra(f, 2).is_commutative());
        let e = exterior_dg(f);
        assert!(e.is_dg() && e.is_commutative());
        assert_eq!(group_algebra(f, 3).dim(), 3);
    }

    #[test]
    fn planted_nonassociativity_names_the_triple() {
        let f = f3();
        // x·x = 1 but x·(x·x) ≠ (x·x)·x is impossible in 2 dims with unit; use x·1 = 2x
        let mult = vec![vec![vec![(0, 1)], vec![(1, 1)]], vec![vec![(1, 2)], vec![(1, 1)]]];
        let err = ungraded(f, vec!["1".into(), "x".into()], mult, vec![(0, 1)]).unwrap_err();
        match err {
            CyclicError::Axioms(v) => {
                assert!(v.contains(&Violation::RightUnit(1)));
                assert!(v.iter().any(|x| matches!(x, Violation::Associativity(..))));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ground_field_anat_is_trivial() {
        let e = build_anat(&ground_field(f3()), 4).unwrap();
        for n in 0..=4 {
            assert_eq!(e.dim(n), 1);
            assert_eq!(e.level_data(n).rotation, PrimeFieldMatrix::identity(f3(), 1));
            for d in &e.level_data(n).faces {
                assert_eq!(d, &PrimeFieldMatrix::identity(f3(), 1));
            }
        }
        assert!(check_cyclic_relations(&e).passed());
    }

    #[test]
    fn dual_numbers_anat_dims_and_relations() {
        let e = build_anat(&truncated_poly(f3(), 2), 3).unwrap();
        for n in 0..=3 {
            assert_eq!(e.dim(n), 1 << (n + 1));
        }
        let r = check_cyclic_relations(&e);
        assert!(r.passed(), "{:?}", r.failures);
    }

    #[test]
    fn connes_operator_on_corpus() {
        for f in [f3(), FieldPrime::new(2).unwrap(), FieldPrime::new(5).unwrap()] {
            for a in [ground_field(f), truncated_poly(f, 2), matrix_algebra(f, 2), group_algebra(f, 3), exterior_dg(f)] {
                let e = build_anat(&a, 4).unwrap();
                let r = check_mixed_relations(&a, &e);
                assert!(r.passed(), "{:?}", r.failures);
            }
        }
    }

    #[test]
    fn exterior_rotation_sign() {
        let e = build_anat(&exterior_dg(f3()), 3).unwrap();
        // x⊗x has index 3 at level 1
        let t = &e.level_data(1).rotation;
        assert_eq!(t.col(3), &vec![(3, 2)]);
        let t2 = t.compose(t).unwrap();
        assert_eq!(t2, PrimeFieldMatrix::identity(f3(), 4));
        let r = check_cyclic_relations(&e);
        assert!(r.passed(), "{:?}", r.failures);
    }

    #[test]
    fn matrix_and_group_algebras_pass_relations() {
        for a in [matrix_algebra(f3(), 2), group_algebra(f3(), 3)] {
            let e = build_anat(&a, 3).unwrap();
            let r = check_cyclic_relations(&e);
            assert!(r.passed(), "{:?}", r.failures);
        }
    }

    #[test]
    fn edgewise_of_ground_field_and_dual_numbers() {
        let f = f3();
        let e = build_anat(&ground_field(f), 8).unwrap().edgewise(3, 2).unwrap();
        assert_eq!(e.level(), 3);
        assert!(check_cyclic_relations(&e).passed());
        let dual = build_anat(&truncated_poly(f, 2), 5).unwrap();
        let sub = dual.edgewise(3, 1).unwrap();
        assert_eq!(sub.dim(1), 1 << 6);
        let r = check_cyclic_relations(&sub);
        assert!(r.passed(), "{:?}", r.failures);
    }

    #[test]
    fn lazy_edgewise_matches_explicit() {
        let f = f3();
        let a = truncated_poly(f, 2);
        let src = AnatBasis::new(a.clone());
        let lazy = EdgewiseBasis::new(&src, 3).unwrap();
        let m = CyclicModuleData::materialize(&lazy, 1, DEFAULT_BUDGET).unwrap();
        let explicit = build_anat(&a, 5).unwrap().edgewise(3, 1).unwrap();
        assert_eq!(m, explicit);
    }

    #[test]
    fn restriction_gives_block_rotation() {
        let f = f3();
        let a = truncated_poly(f, 2);
        let e = build_anat(&a, 5).unwrap().edgewise(3, 1).unwrap();
        let j = e.restrict_j();
        assert!(j.check().passed());
        // level 1: (A^{⊗2})^{⊗3}, σ moves the last block of two factors to the front
        let q = 4;
        let cols = (0..q * q * q)
            .map(|x| {
                let (b0, b1, b2) = (x / (q * q), (x / q) % q, x % q);
                vec![(b2 * q * q + b0 * q + b1, 1)]
            })
            .collect();
        assert_eq!(j.levels[1].sigma, PrimeFieldMatrix::from_columns(f, 64, cols));
    }

    #[test]
    fn level_one_restriction_is_trivial_action() {
        let e = build_anat(&truncated_poly(f3(), 2), 3).unwrap();
        let j = e.restrict_j();
        for n in 0..=3 {
            assert_eq!(j.levels[n].sigma, PrimeFieldMatrix::identity(f3(), e.dim(n)));
        }
    }

    #[test]
    fn hoch_coeff_diagonal_matches_anat() {
        let a = truncated_poly(f3(), 2);
        let m = BimodulePresentation::diagonal(&a).unwrap();
        let h = hoch_coeff(&m, 1, 3).unwrap();
        let j = build_anat(&a, 3).unwrap().restrict_j();
        assert_eq!(h, j);
    }

    #[test]
    fn hoch_coeff_ground_field_is_one_dimensional() {
        let a = ground_field(f3());
        let m = BimodulePresentation::diagonal(&a).unwrap();
        for l in 1..=3 {
            let h = hoch_coeff(&m, l, 3).unwrap();
            assert!((0..=3).all(|n| h.dim(n) == 1));
            assert!(h.check().passed());
        }
    }

    #[test]
    fn free_bimodule_is_acyclic_above_zero() {
        let a = truncated_poly(f3(), 2);
        let m = BimodulePresentation::free(&a).unwrap();
        let c = hoch_coeff(&m, 1, 4).unwrap().hochschild_complex();
        assert_eq!(c.homology_dim(0), 2);
        for n in 1..=3 {
            assert_eq!(c.homology_dim(n), 0);
        }
    }

    #[test]
    fn algebra_file_round_trip() {
        let text = r#"{"p": 3, "basis": ["1", "x"], "unit": [["1", 1]],
            "mul": [["1","1","1",1], ["1","x","x",1], ["x","1","x",1]]}"#;
        let a = AlgebraFile::parse(text).unwrap().to_presentation().unwrap();
        let t = truncated_poly(f3(), 2);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(a.product_of(i, j), t.product_of(i, j));
            }
        }
        assert_eq!(a.unit(), t.unit());
        let err = AlgebraFile::parse("{\"p\": 3,\n \"bogus\": 1}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let m = AlgebraFile { p: 3, builder: Some("product:matrix:2,field".into()), ..Default::default() };
        assert_eq!(m.to_presentation().unwrap().dim(), 5);
    }
}

//! Group homology, Tate homology and the periodic expansions of complexes
//! of modules over a finite cyclic group, with the sign-twisted and
//! extended-group variants.
//!
//! The two-term complex `K(E)` has `E` in `K`-degree 0 and 1, with
//! `id - σ : K_1 ⊗ E -> K_0 ⊗ E` and the norm `N = Σ σ^j` as `B`. The
//! expansions of [`build_k`] then give:
//!
//! | kind | expansion | name |
//! |------|-----------|------|
//! | `Homology` | `Exp` | `C_•` |
//! | `Tate` | `Per` | `Č_•` |
//! | `Cotate` | `PerBar` | `Č̄_•` |
//! | `Poly` | `Poly` | `C̃_•` |

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{periodic_expand, ChainComplex, ComplexError, ExpansionKind, MixedComplex};
use crate::gf_linalg::{preimage, FieldPrime, PrimeFieldMatrix, SparseVec, Subspace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TateError {
    #[error("sigma does not have order dividing {0}")]
    Order(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("group order {got} where {expected} is required")]
    WrongOrder { expected: usize, got: usize },
    #[error("{sub} does not divide {ambient}")]
    Divisibility { sub: usize, ambient: usize },
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

/// A module over `Z/n` given by the action of the generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicGroupModule {
    order: usize,
    sigma: PrimeFieldMatrix,
}

fn matrix_pow(m: &PrimeFieldMatrix, e: usize) -> PrimeFieldMatrix {
    let mut acc = PrimeFieldMatrix::identity(m.field(), m.ncols());
    let mut base = m.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = base.compose(&acc).expect("square");
        }
        base = base.compose(&base).expect("square");
        e >>= 1;
    }
    acc
}

/// `Σ_{j<n} σ^j`.
pub fn norm_operator(sigma: &PrimeFieldMatrix, n: usize) -> PrimeFieldMatrix {
    let mut acc = PrimeFieldMatrix::zeros(sigma.field(), sigma.nrows(), sigma.ncols());
    let mut pw = PrimeFieldMatrix::identity(sigma.field(), sigma.ncols());
    for _ in 0..n {
        acc = acc.add(&pw).expect("square");
        pw = sigma.compose(&pw).expect("square");
    }
    acc
}

fn one_minus(sigma: &PrimeFieldMatrix) -> PrimeFieldMatrix {
    let f = sigma.field();
    PrimeFieldMatrix::identity(f, sigma.ncols()).add_scaled(f.neg(1), sigma).expect("square")
}

impl CyclicGroupModule {
    pub fn new(order: usize, sigma: PrimeFieldMatrix) -> Result<Self, TateError> {
        if sigma.nrows() != sigma.ncols() {
            return Err(TateError::Dimension("sigma must be square".into()));
        }
        if order == 0 || matrix_pow(&sigma, order) != PrimeFieldMatrix::identity(sigma.field(), sigma.ncols()) {
            return Err(TateError::Order(order));
        }
        Ok(CyclicGroupModule { order, sigma })
    }

    pub fn trivial(field: FieldPrime, order: usize, dim: usize) -> Self {
        CyclicGroupModule { order, sigma: PrimeFieldMatrix::identity(field, dim) }
    }

    /// The regular representation `F_p[Z/n]`, `σ e_j = e_{j+1}`.
    pub fn regular(field: FieldPrime, order: usize) -> Self {
        let cols = (0..order).map(|j| vec![((j + 1) % order, 1)]).collect();
        CyclicGroupModule { order, sigma: PrimeFieldMatrix::from_columns(field, order, cols) }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.sigma.ncols()
    }

    pub fn sigma(&self) -> &PrimeFieldMatrix {
        &self.sigma
    }

    pub fn field(&self) -> FieldPrime {
        self.sigma.field()
    }

    /// `E ⊗ k̃`, where `σ` acts on `k̃` by a single Jordan block of size 2.
    /// The first `dim` coordinates are the submodule `E ⊗ e_1`.
    pub fn tilde(&self) -> CyclicGroupModule {
        let d = self.dim();
        let mut cols: Vec<SparseVec> = Vec::new();
        for j in 0..d {
            cols.push(self.sigma.col(j).clone());
        }
        for j in 0..d {
            let s = self.sigma.col(j);
            let mut c: SparseVec = s.clone();
            c.extend(s.iter().map(|&(i, v)| (i + d, v)));
            cols.push(c);
        }
        CyclicGroupModule { order: self.order, sigma: PrimeFieldMatrix::from_columns(self.field(), 2 * d, cols) }
    }
}

/// A complex of `Z/n`-modules.
#[derive(Debug, Clone)]
pub struct CyclicGroupComplex {
    order: usize,
    complex: ChainComplex,
    /// `sigmas[k]` acts on degree `lo + k`.
    sigmas: Vec<PrimeFieldMatrix>,
}

impl CyclicGroupComplex {
    pub fn new(order: usize, complex: ChainComplex, sigmas: Vec<PrimeFieldMatrix>) -> Result<Self, TateError> {
        if sigmas.len() as i64 != complex.hi() - complex.lo() + 1 {
            return Err(TateError::Dimension("one sigma per degree".into()));
        }
        let e = CyclicGroupComplex { order, complex, sigmas };
        for n in e.complex.lo()..=e.complex.hi() {
            let s = e.sigma(n);
            CyclicGroupModule::new(order, s.clone())?;
            let d = e.complex.d(n);
            let lhs = e.sigma(n - 1).compose(&d).map_err(ComplexError::from)?;
            let rhs = d.compose(&s).map_err(ComplexError::from)?;
            if lhs != rhs {
                return Err(TateError::Dimension(format!("sigma does not commute with d in degree {n}")));
            }
        }
        Ok(e)
    }

    /// A single module in degree `n`.
    pub fn from_module(m: &CyclicGroupModule, n: i64) -> Self {
        CyclicGroupComplex {
            order: m.order,
            complex: ChainComplex::concentrated(m.field(), n, m.dim()),
            sigmas: vec![m.sigma.clone()],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn complex(&self) -> &ChainComplex {
        &self.complex
    }

    pub fn field(&self) -> FieldPrime {
        self.complex.field()
    }

    pub fn sigma(&self, n: i64) -> PrimeFieldMatrix {
        let k = n - self.complex.lo();
        if k >= 0 && (k as usize) < self.sigmas.len() {
            self.sigmas[k as usize].clone()
        } else {
            PrimeFieldMatrix::identity(self.field(), 0)
        }
    }

    pub fn module(&self, n: i64) -> CyclicGroupModule {
        CyclicGroupModule { order: self.order, sigma: self.sigma(n) }
    }

    /// The sign twist `σ† = (-1)^{n+1} σ` for group order `n`.
    pub fn twisted(&self) -> Self {
        let f = self.field();
        let s = f.sign(self.order as i64 + 1);
        CyclicGroupComplex {
            order: self.order,
            complex: self.complex.clone(),
            sigmas: self.sigmas.iter().map(|m| m.scaled(s)).collect(),
        }
    }
}

/// The four complexes computing group and Tate homology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TateKind {
    Homology,
    Tate,
    Cotate,
    Poly,
}

impl TateKind {
    pub fn expansion(self) -> ExpansionKind {
        match self {
            TateKind::Homology => ExpansionKind::Exp,
            TateKind::Tate => ExpansionKind::Per,
            TateKind::Cotate => ExpansionKind::PerBar,
            TateKind::Poly => ExpansionKind::Poly,
        }
    }
}

/// `K(E)`: degree `n` is `E_n` (the `K_0` part) followed by `E_{n-1}`
/// (the `K_1` part).
pub fn build_k(e: &CyclicGroupComplex) -> MixedComplex {
    let c = e.complex();
    let f = c.field();
    let lo = c.lo();
    let hi = c.hi() + 1;
    let dims: Vec<usize> = (lo..=hi).map(|n| c.dim(n) + c.dim(n - 1)).collect();
    let mut diffs = Vec::new();
    let mut bs = Vec::new();
    for n in lo..=hi {
        let (a0, a1) = (c.dim(n), c.dim(n - 1));
        let (t0, t1) = (c.dim(n - 1), c.dim(n - 2));
        let rows = if n == lo { 0 } else { t0 + t1 };
        let d0 = c.d(n);
        let d1 = c.d(n - 1);
        let oms = one_minus(&e.sigma(n - 1));
        let mut cols: Vec<SparseVec> = Vec::new();
        for j in 0..a0 {
            cols.push(if n == lo { Vec::new() } else { d0.col(j).clone() });
        }
        for j in 0..a1 {
            if n == lo {
                cols.push(Vec::new());
                continue;
            }
            let mut col = oms.col(j).clone();
            col.extend(d1.col(j).iter().map(|&(i, v)| (i + t0, f.neg(v))));
            cols.push(col);
        }
        diffs.push(PrimeFieldMatrix::from_columns(f, rows, cols));
        // B: K_0 ⊗ E_n -> K_1 ⊗ E_n inside degree n+1, whose K_0 part is E_{n+1}
        let nm = norm_operator(&e.sigma(n), e.order());
        let up0 = if n == hi { 0 } else { c.dim(n + 1) };
        let up_rows = if n == hi { 0 } else { up0 + a0 };
        let mut bcols: Vec<SparseVec> = Vec::new();
        for j in 0..a0 {
            bcols.push(if n == hi { Vec::new() } else { nm.col(j).iter().map(|&(i, v)| (i + up0, v)).collect() });
        }
        for _ in 0..a1 {
            bcols.push(Vec::new());
        }
        bs.push(PrimeFieldMatrix::from_columns(f, up_rows, bcols));
    }
    let base = ChainComplex::new(f, lo, dims, diffs).expect("K(E) is a complex");
    MixedComplex::new(base, bs).expect("K(E) is a mixed complex")
}

/// Homology dims of the chosen expansion of `K(E)` (or of `K(E)_{σ†}`).
pub fn tate_dims(e: &CyclicGroupComplex, kind: TateKind, twisted: bool, degrees: std::ops::RangeInclusive<i64>) -> Vec<usize> {
    let e = if twisted { e.twisted() } else { e.clone() };
    let k = build_k(&e);
    let (lo, hi) = (*degrees.start(), *degrees.end());
    let c = periodic_expand(&k, kind.expansion(), lo - 1, hi + 1);
    degrees.map(|n| c.homology_dim(n)).collect()
}

/// `Ȟ_odd = ker(1-σ)/im N` and `Ȟ_even = ker N / im(1-σ)` as (cycles,
/// boundaries) pairs.
pub fn tate_spaces(m: &CyclicGroupModule) -> ((Subspace, Subspace), (Subspace, Subspace)) {
    let f = m.field();
    let d = m.dim();
    let oms = one_minus(m.sigma());
    let nm = norm_operator(m.sigma(), m.order());
    let zero = Subspace::zero(f, d);
    let full = Subspace::full(f, d);
    let odd = (preimage(&oms, &zero), full.image_under(&nm));
    let even = (preimage(&nm, &zero), full.image_under(&oms));
    (odd, even)
}

/// The connecting maps of `0 -> E -> E ⊗ k̃ -> E -> 0` on Tate homology.
#[derive(Debug, Clone)]
pub struct EpsilonMaps {
    /// `Ȟ_odd -> Ȟ_even`, in the representative bases below.
    pub eps_odd: PrimeFieldMatrix,
    /// `Ȟ_even -> Ȟ_odd`.
    pub eps_even: PrimeFieldMatrix,
    pub odd_basis: Vec<SparseVec>,
    pub even_basis: Vec<SparseVec>,
}

/// Connecting maps for a module over `Z/p`.
pub fn epsilon_maps(m: &CyclicGroupModule) -> Result<EpsilonMaps, TateError> {
    let p = m.field().p() as usize;
    if m.order() != p {
        return Err(TateError::WrongOrder { expected: p, got: m.order() });
    }
    let f = m.field();
    let d = m.dim();
    let ((zo, bo), (ze, be)) = tate_spaces(m);
    let odd_basis = zo.quotient_basis(&bo);
    let even_basis = ze.quotient_basis(&be);
    let t = m.tilde();
    let oms_t = one_minus(t.sigma());
    let nm_t = norm_operator(t.sigma(), p);
    // lift x to x ⊗ e_2, apply the Tate differential, read off the E ⊗ e_1 part
    let connect = |op: &PrimeFieldMatrix, x: &SparseVec| -> SparseVec {
        let lifted: SparseVec = x.iter().map(|&(i, v)| (i + d, v)).collect();
        let y = op.mul_vec(&lifted);
        debug_assert!(y.iter().all(|&(i, _)| i < d));
        y
    };
    let coords = |z: &Subspace, b: &Subspace, basis: &[SparseVec], v: &SparseVec| -> SparseVec {
        let q = crate::complex::quotient_coordinates(f, b, basis);
        debug_assert!(z.contains(v));
        q(v).expect("connecting map lands in cycles")
    };
    let eps_odd_cols = odd_basis.iter().map(|x| coords(&ze, &be, &even_basis, &connect(&oms_t, x))).collect();
    let eps_even_cols = even_basis.iter().map(|x| coords(&zo, &bo, &odd_basis, &connect(&nm_t, x))).collect();
    Ok(EpsilonMaps {
        eps_odd: PrimeFieldMatrix::from_columns(f, even_basis.len(), eps_odd_cols),
        eps_even: PrimeFieldMatrix::from_columns(f, odd_basis.len(), eps_even_cols),
        odd_basis,
        even_basis,
    })
}

/// `I(E) = Ȟ_odd(Z/p, E)` for a module.
pub fn i_dim(m: &CyclicGroupModule) -> usize {
    let ((z, b), _) = tate_spaces(m);
    z.dim() - b.dim()
}

/// Per-degree tightness data for a complex over `Z/p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TightnessReport {
    /// `(degree, eps_odd is an isomorphism, dim I(E_i))`.
    pub degrees: Vec<(i64, bool, usize)>,
    /// `I(E_i) = 0` whenever `p ∤ i`.
    pub support_ok: bool,
    pub tight: bool,
}

pub fn is_tight(e: &CyclicGroupComplex) -> Result<TightnessReport, TateError> {
    let p = e.field().p() as i64;
    let mut degrees = Vec::new();
    let mut support_ok = true;
    let mut all_tight = true;
    for n in e.complex().lo()..=e.complex().hi() {
        let m = e.module(n);
        let eps = epsilon_maps(&m)?;
        let iso = eps.eps_odd.nrows() == eps.eps_odd.ncols() && eps.eps_odd.rank() == eps.eps_odd.ncols();
        let idim = i_dim(&m);
        if idim > 0 && n.rem_euclid(p) != 0 {
            support_ok = false;
        }
        all_tight &= iso;
        degrees.push((n, iso, idim));
    }
    Ok(TightnessReport { degrees, support_ok, tight: support_ok && all_tight })
}

/// Tate dims of a `Z/n`-module computed with the two-term complex of the
/// ambient group `Z/m` restricted to `Z/n`.
pub fn extended_tate_dims(
    sub_order: usize,
    ambient_order: usize,
    m: &CyclicGroupModule,
    degrees: std::ops::RangeInclusive<i64>,
) -> Result<Vec<usize>, TateError> {
    if sub_order == 0 || !ambient_order.is_multiple_of(sub_order) {
        return Err(TateError::Divisibility { sub: sub_order, ambient: ambient_order });
    }
    if m.order() != sub_order {
        return Err(TateError::WrongOrder { expected: sub_order, got: m.order() });
    }
    let f = m.field();
    let r = ambient_order / sub_order;
    let d = m.dim();
    // (Z[C'] ⊗ E)_C has basis τ^j ⊗ e, j < r, with τ^r ⊗ e = 1 ⊗ σ^{-1} e
    let sigma_inv = matrix_pow(m.sigma(), sub_order - 1);
    let mut cols = Vec::new();
    for j in 0..r {
        for k in 0..d {
            if j + 1 < r {
                cols.push(vec![((j + 1) * d + k, 1)]);
            } else {
                cols.push(sigma_inv.col(k).clone());
            }
        }
    }
    let tau = PrimeFieldMatrix::from_columns(f, r * d, cols);
    let one_minus_tau = one_minus(&tau);
    let nm = norm_operator(&tau, ambient_order);
    let dims_per = r * d;
    // Per(K'(E)): degree i carries one copy, d_i = 1 - τ (i odd), N (i even)
    let (lo, hi) = (*degrees.start() - 1, *degrees.end() + 1);
    let diffs = (lo..=hi)
        .map(|i| {
            if i == lo {
                PrimeFieldMatrix::zeros(f, 0, dims_per)
            } else if i.rem_euclid(2) == 1 {
                one_minus_tau.clone()
            } else {
                nm.clone()
            }
        })
        .collect();
    let c = ChainComplex::new(f, lo, vec![dims_per; (hi - lo + 1) as usize], diffs)?;
    Ok(degrees.map(|n| c.homology_dim(n)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3() -> FieldPrime {
        FieldPrime::new(3).unwrap()
    }

    #[test]
    fn trivial_module_has_tate_dim_one_everywhere() {
        let e = CyclicGroupComplex::from_module(&CyclicGroupModule::trivial(f3(), 3, 1), 0);
        assert_eq!(tate_dims(&e, TateKind::Tate, false, -4..=4), vec![1; 9]);
    }

    #[test]
    fn homology_of_trivial_module_is_one_upward() {
        let e = CyclicGroupComplex::from_module(&CyclicGroupModule::trivial(f3(), 3, 1), 0);
        assert_eq!(tate_dims(&e, TateKind::Homology, false, -2..=4), vec![0, 0, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn free_module_is_tate_acyclic() {
        let e = CyclicGroupComplex::from_module(&CyclicGroupModule::regular(f3(), 3), 0);
        for kind in [TateKind::Tate, TateKind::Cotate, TateKind::Poly] {
            assert_eq!(tate_dims(&e, kind, false, -3..=3), vec![0; 7]);
        }
    }

    #[test]
    fn order_prime_to_p_is_tate_acyclic() {
        let e = CyclicGroupComplex::from_module(&CyclicGroupModule::trivial(f3(), 2, 1), 0);
        assert_eq!(tate_dims(&e, TateKind::Tate, false, -3..=3), vec![0; 7]);
        assert_eq!(tate_dims(&e, TateKind::Tate, true, -3..=3), vec![0; 7]);
    }

    #[test]
    fn trivial_module_k_has_zero_structure_maps() {
        let e = CyclicGroupComplex::from_module(&CyclicGroupModule::trivial(f3(), 3, 1), 0);
        let k = build_k(&e);
        assert!(k.base().d(1).is_zero());
        assert!(k.b(0).is_zero());
    }

    #[test]
    fn rejects_wrong_order() {
        let s = CyclicGroupModule::regular(f3(), 3).sigma().clone();
        assert_eq!(CyclicGroupModule::new(2, s).unwrap_err(), TateError::Order(2));
    }

    #[test]
    fn epsilon_of_trivial_module() {
        let eps = epsilon_maps(&CyclicGroupModule::trivial(f3(), 3, 1)).unwrap();
        assert_eq!(eps.eps_odd.to_dense(), vec![vec![2]]);
        assert!(eps.eps_even.is_zero());
    }

    #[test]
    fn epsilon_of_free_module_is_empty() {
        let eps = epsilon_maps(&CyclicGroupModule::regular(f3(), 3)).unwrap();
        assert_eq!((eps.eps_odd.nrows(), eps.eps_odd.ncols()), (0, 0));
    }

    #[test]
    fn tightness_of_trivial_and_free() {
        let t = CyclicGroupComplex::from_module(&CyclicGroupModule::trivial(f3(), 3, 1), 0);
        assert!(is_tight(&t).unwrap().tight);
        let shifted = CyclicGroupComplex::from_module(&CyclicGroupModule::trivial(f3(), 3, 1), 1);
        assert!(!is_tight(&shifted).unwrap().support_ok);
        let free = CyclicGroupComplex::from_module(&CyclicGroupModule::regular(f3(), 3), 2);
        assert!(is_tight(&free).unwrap().tight);
    }

    #[test]
    fn extended_complexes_match_plain_ones() {
        let m = CyclicGroupModule::trivial(f3(), 3, 1);
        assert_eq!(extended_tate_dims(3, 6, &m, -3..=3).unwrap(), vec![1; 7]);
        assert_eq!(extended_tate_dims(3, 3, &m, -3..=3).unwrap(), vec![1; 7]);
        let free = CyclicGroupModule::regular(f3(), 3);
        assert_eq!(extended_tate_dims(3, 9, &free, -3..=3).unwrap(), vec![0; 7]);
        assert!(matches!(extended_tate_dims(3, 8, &m, 0..=0), Err(TateError::Divisibility { .. })));
    }
}

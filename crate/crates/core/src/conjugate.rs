//! Frobenius twists, tensor powers over `Z/p`, the functor `I`, the map
//! `ψ : M -> I(M^{⊗p})` and the conjugate spectral sequence.
//!
//! Over `F_p` the Frobenius twist is the identity on vector spaces and on
//! matrices, so [`FrobeniusTwistTag`] only records that a table describes
//! a twisted object.
//!
//! `I(E)` of a tight complex of `Z/p`-modules is computed as `τ⁰/β⁰` of its
//! Tate complex `T` filtered by the `p`-th rescaling of the stupid
//! filtration. Cell `(c, j)` of `T` holds `E_j` in total degree `c + j`;
//! horizontal maps are `1 - σ` out of odd columns and `N` out of even ones,
//! vertical maps are `(-1)^c d`. Degree `i` of `I(E)` is then detected on the
//! cell `(i - p i, p i)`, where it is `Ȟ_even(E_{pi}) = ker N / im(1 - σ)`.

use std::collections::HashMap;
use std::ops::RangeInclusive;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{quotient_coordinates, PageCache, subquotient_complex, ChainComplex, ComplexError, FilteredComplex, TruncKind};
use crate::cyclic::{build_anat, AlgebraPresentation, CyclicError, CyclicModuleData, DEFAULT_BUDGET};
use crate::gf_linalg::{collect_sparse, solve, FieldPrime, LinalgError, PrimeFieldMatrix, SparseVec, Subspace};
use crate::periodic::{build_tsygan, hc_dims, hh_dims, CellOrder, PeriodicError};
use crate::tate::{i_dim, is_tight, norm_operator, tate_spaces, CyclicGroupComplex, TateError, TightnessReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConjugateError {
    #[error("not tight in degree {degree}: {reason}")]
    NotTight { degree: i64, reason: String },
    #[error("group order {got} where the characteristic {expected} is required")]
    WrongOrder { expected: usize, got: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error("level {level} has {dim} basis vectors, over the budget {budget}")]
    Budget { level: usize, dim: u64, budget: u64 },
    #[error(transparent)]
    Tate(#[from] TateError),
    #[error(transparent)]
    Cyclic(#[from] CyclicError),
    #[error(transparent)]
    Periodic(#[from] PeriodicError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Marks a table as describing a Frobenius twist `X^{(1)}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrobeniusTwistTag;

/// `M^{⊗p}` with the cyclic block permutation (Koszul signs included).
#[derive(Debug, Clone)]
pub struct TensorPower {
    p: usize,
    lo: i64,
    base: ChainComplex,
    group: CyclicGroupComplex,
    /// Degree of each basis vector of `M`, in global numbering.
    m_degree: Vec<i64>,
    /// First global index of each degree of `M`.
    m_offset: Vec<usize>,
    /// Per degree of the power: tuple -> local index.
    index: Vec<HashMap<Vec<usize>, usize>>,
}

impl TensorPower {
    pub fn new(m: &ChainComplex, p: usize) -> Result<Self, ConjugateError> {
        let f = m.field();
        let (lo, hi) = (m.lo(), m.hi());
        let mut m_degree = Vec::new();
        let mut m_offset = Vec::new();
        for n in lo..=hi {
            m_offset.push(m_degree.len());
            m_degree.extend(std::iter::repeat_n(n, m.dim(n)));
        }
        let total = m_degree.len();
        let (plo, phi) = (p as i64 * lo, p as i64 * hi);
        let width = (phi - plo + 1) as usize;
        let mut tuples: Vec<Vec<Vec<usize>>> = vec![Vec::new(); width];
        let mut index: Vec<HashMap<Vec<usize>, usize>> = vec![HashMap::new(); width];
        let count = total.checked_pow(p as u32).ok_or(ConjugateError::Budget {
            level: 0,
            dim: u64::MAX,
            budget: DEFAULT_BUDGET,
        })?;
        if count as u64 > DEFAULT_BUDGET {
            return Err(ConjugateError::Budget { level: 0, dim: count as u64, budget: DEFAULT_BUDGET });
        }
        let mut t = vec![0usize; p];
        for mut x in 0..count {
            for slot in t.iter_mut().rev() {
                *slot = x % total;
                x /= total;
            }
            let deg: i64 = t.iter().map(|&g| m_degree[g]).sum();
            let k = (deg - plo) as usize;
            index[k].insert(t.clone(), tuples[k].len());
            tuples[k].push(t.clone());
        }
        let dims: Vec<usize> = tuples.iter().map(|v| v.len()).collect();
        let mut diffs = Vec::new();
        let mut sigmas = Vec::new();
        for k in 0..width {
            let mut dcols = Vec::new();
            let mut scols = Vec::new();
            for tup in &tuples[k] {
                // σ moves the last factor to the front
                let last = tup[p - 1];
                let rest: i64 = tup[..p - 1].iter().map(|&g| m_degree[g]).sum();
                let mut rot = vec![last];
                rot.extend_from_slice(&tup[..p - 1]);
                scols.push(vec![(index[k][&rot], f.sign(m_degree[last] * rest))]);
                if k == 0 {
                    dcols.push(Vec::new());
                    continue;
                }
                let mut col = Vec::new();
                let mut before = 0i64;
                for pos in 0..p {
                    let g = tup[pos];
                    let n = m_degree[g];
                    let local = g - m_offset[(n - lo) as usize];
                    for &(i, v) in m.d(n).col(local) {
                        let mut nt = tup.clone();
                        nt[pos] = m_offset[(n - 1 - lo) as usize] + i;
                        col.push((index[k - 1][&nt], f.mul(v, f.sign(before))));
                    }
                    before += n;
                }
                dcols.push(collect_sparse(f, col));
            }
            let below = if k == 0 { 0 } else { dims[k - 1] };
            diffs.push(PrimeFieldMatrix::from_columns(f, below, dcols));
            sigmas.push(PrimeFieldMatrix::from_columns(f, dims[k], scols));
        }
        let base = ChainComplex::new(f, plo, dims, diffs)?;
        let group = CyclicGroupComplex::new(p, base.clone(), sigmas)?;
        Ok(TensorPower { p, lo, base, group, m_degree, m_offset, index })
    }

    pub fn group(&self) -> &CyclicGroupComplex {
        &self.group
    }

    pub fn complex(&self) -> &ChainComplex {
        &self.base
    }

    /// `x^{⊗p}` for `x ∈ M_d` given in local coordinates; lands in degree `pd`.
    pub fn power(&self, d: i64, x: &[(usize, u32)]) -> SparseVec {
        let f = self.base.field();
        let off = self.m_offset[(d - self.lo) as usize];
        let k = (self.p as i64 * d - self.base.lo()) as usize;
        let mut out = Vec::new();
        let s = x.len();
        if s == 0 {
            return out;
        }
        let mut pos = vec![0usize; self.p];
        loop {
            let tup: Vec<usize> = pos.iter().map(|&i| off + x[i].0).collect();
            let c = pos.iter().fold(1u32, |acc, &i| f.mul(acc, x[i].1));
            out.push((self.index[k][&tup], c));
            let mut j = self.p;
            loop {
                if j == 0 {
                    return collect_sparse(f, out);
                }
                j -= 1;
                pos[j] += 1;
                if pos[j] < s {
                    break;
                }
                pos[j] = 0;
            }
        }
    }

    /// `g^{⊗p} : M^{⊗p} -> M'^{⊗p}` in degree `n` for a degreewise map `g`
    /// given by `maps[d - lo]`.
    pub fn map_power(&self, target: &TensorPower, maps: &[PrimeFieldMatrix], n: i64) -> PrimeFieldMatrix {
        let f = self.base.field();
        let k = (n - self.base.lo()) as usize;
        let kt = (n - target.base.lo()) as usize;
        let lo = self.lo;
        let mut inv: Vec<(usize, &Vec<usize>)> = self.index[k].iter().map(|(t, &i)| (i, t)).collect();
        inv.sort();
        let cols = inv
            .into_iter()
            .map(|(_, tup)| {
                let mut acc: Vec<(Vec<usize>, u32)> = vec![(Vec::new(), 1)];
                for &g in tup {
                    let d = self.m_degree[g];
                    let local = g - self.m_offset[(d - lo) as usize];
                    let toff = target.m_offset[(d - lo) as usize];
                    let col = maps[(d - lo) as usize].col(local);
                    let mut next = Vec::new();
                    for (t, c) in &acc {
                        for &(i, v) in col {
                            let mut nt = t.clone();
                            nt.push(toff + i);
                            next.push((nt, f.mul(*c, v)));
                        }
                    }
                    acc = next;
                }
                collect_sparse(f, acc.into_iter().map(|(t, c)| (target.index[kt][&t], c)).collect())
            })
            .collect();
        PrimeFieldMatrix::from_columns(f, target.base.dim(n), cols)
    }
}

/// Where `I(E)_i` is read off: `Ȟ_even(E_{pi})` and the change of basis to
/// the basis of `I(E)_i`.
#[derive(Debug, Clone)]
struct Lead {
    /// Representatives of a basis of `ker N / im(1-σ)` in `E_{pi}`.
    classes: Vec<SparseVec>,
    image: Subspace,
    /// Coordinates in `classes` -> coordinates in `I(E)_i`, and back.
    to_i: PrimeFieldMatrix,
    from_i: PrimeFieldMatrix,
}

/// The complex `I(E)` of a tight complex over `Z/p`; `I(E)_i = I(E_{pi})`.
#[derive(Debug, Clone)]
pub struct IComplex {
    pub twist: FrobeniusTwistTag,
    complex: ChainComplex,
    leads: Vec<Lead>,
}

impl IComplex {
    pub fn complex(&self) -> &ChainComplex {
        &self.complex
    }

    pub fn dims(&self) -> Vec<(i64, usize)> {
        (self.complex.lo()..=self.complex.hi()).map(|i| (i, self.complex.dim(i))).collect()
    }

    /// Coordinates in `I(E)_i` of the class of `v ∈ ker N ⊂ E_{pi}`.
    pub fn classify(&self, i: i64, v: &[(usize, u32)]) -> Option<SparseVec> {
        if i < self.complex.lo() || i > self.complex.hi() {
            return None;
        }
        let lead = &self.leads[(i - self.complex.lo()) as usize];
        let f = self.complex.field();
        let coords = quotient_coordinates(f, &lead.image, &lead.classes)(v)?;
        Some(lead.to_i.mul_vec(&coords))
    }

    /// `I(g)_i : I(E)_i -> I(E')_i` for an equivariant map `g : E_{pi} -> E'_{pi}`.
    pub fn induced_map(&self, target: &IComplex, i: i64, g: &PrimeFieldMatrix) -> Option<PrimeFieldMatrix> {
        let f = self.complex.field();
        let lead = &self.leads[(i - self.complex.lo()) as usize];
        let cols = (0..lead.from_i.ncols())
            .map(|b| {
                let mut v = Vec::new();
                for &(c, x) in lead.from_i.col(b) {
                    v = crate::gf_linalg::axpy(f, x, &lead.classes[c], &v);
                }
                target.classify(i, &g.mul_vec(&v))
            })
            .collect::<Option<Vec<_>>>()?;
        Some(PrimeFieldMatrix::from_columns(f, target.complex.dim(i), cols))
    }

    /// Representatives in `E_{pi}` of the Tate classes spanning `I(E)_i`.
    pub fn class_basis(&self, i: i64) -> &[SparseVec] {
        &self.leads[(i - self.complex.lo()) as usize].classes
    }
}

fn check_tight(e: &CyclicGroupComplex) -> Result<TightnessReport, ConjugateError> {
    let p = e.field().p() as usize;
    if e.order() != p {
        return Err(ConjugateError::WrongOrder { expected: p, got: e.order() });
    }
    let report = is_tight(e)?;
    for &(n, iso, idim) in &report.degrees {
        if idim > 0 && n.rem_euclid(p as i64) != 0 {
            return Err(ConjugateError::NotTight { degree: n, reason: format!("I(E_{n}) has dim {idim} and {p} ∤ {n}") });
        }
        if !iso {
            let parity = if n % 2 == 0 { "even" } else { "odd" };
            return Err(ConjugateError::NotTight { degree: n, reason: format!("eps_odd is not an isomorphism ({parity} degree)") });
        }
    }
    Ok(report)
}

/// `I(E)` with its differential, for a tight complex `E` over `Z/p`.
pub fn i_complex(e: &CyclicGroupComplex) -> Result<IComplex, ConjugateError> {
    check_tight(e)?;
    let f = e.field();
    let p = f.p() as i64;
    let ec = e.complex();
    let (elo, ehi) = (ec.lo(), ec.hi());
    let ilo = elo.div_euclid(p) + i64::from(elo.rem_euclid(p) != 0);
    let ihi = ehi.div_euclid(p);
    if ilo > ihi {
        return Ok(IComplex { twist: FrobeniusTwistTag, complex: ChainComplex::zero(f, 0, 0), leads: vec![empty_lead(f)] });
    }
    // Tate total complex on degrees ilo-1..=ihi+1, cells ordered by j
    let (klo, khi) = (ilo - 1, ihi + 1);
    let mut off = Vec::new();
    let mut acc = 0;
    for j in elo..=ehi {
        off.push(acc);
        acc += ec.dim(j);
    }
    let width: usize = (elo..=ehi).map(|j| ec.dim(j)).sum();
    let horiz: Vec<[PrimeFieldMatrix; 2]> = (elo..=ehi)
        .map(|j| {
            let s = e.sigma(j);
            let n = norm_operator(&s, p as usize);
            let oms = PrimeFieldMatrix::identity(f, ec.dim(j)).add_scaled(f.neg(1), &s).expect("square");
            [n, oms]
        })
        .collect();
    let mut dims = Vec::new();
    let mut diffs = Vec::new();
    for k in klo..=khi {
        dims.push(width);
        if k == klo {
            diffs.push(PrimeFieldMatrix::zeros(f, 0, width));
            continue;
        }
        let mut cols = Vec::with_capacity(width);
        for j in elo..=ehi {
            let c = k - j;
            let jj = (j - elo) as usize;
            let h = &horiz[jj][c.rem_euclid(2) as usize];
            let dv = ec.d(j);
            let sign = f.sign(c);
            for b in 0..ec.dim(j) {
                let mut col: SparseVec = h.col(b).iter().map(|&(i, v)| (off[jj] + i, v)).collect();
                if j > elo {
                    col.extend(dv.col(b).iter().map(|&(i, v)| (off[jj - 1] + i, f.mul(sign, v))));
                }
                cols.push(collect_sparse(f, col));
            }
        }
        diffs.push(PrimeFieldMatrix::from_columns(f, width, cols));
    }
    let t = ChainComplex::new(f, klo, dims, diffs)?;
    let mut jdeg = Vec::with_capacity(width);
    for j in elo..=ehi {
        jdeg.extend(std::iter::repeat_n(j, ec.dim(j)));
    }
    let fc = FilteredComplex::from_basis_degrees(t.clone(), |_, b| (-jdeg[b]).div_euclid(p))?;
    let tau = fc.truncation_spaces(TruncKind::Tau, 0);
    let beta = fc.truncation_spaces(TruncKind::Beta, 0);
    let (q, reps) = subquotient_complex(&t, &tau, &beta);
    let mut dims = Vec::new();
    let mut diffs = Vec::new();
    let mut leads = Vec::new();
    for i in ilo..=ihi {
        let k = (i - klo) as usize;
        dims.push(q.dim(i));
        diffs.push(if i == ilo { PrimeFieldMatrix::zeros(f, 0, q.dim(i)) } else { q.d(i) });
        let j = p * i;
        let jj = (j - elo) as usize;
        let start = off[jj];
        let module = e.module(j);
        let (_, (ker_n, image)) = tate_spaces(&module);
        let classes = ker_n.quotient_basis(&image);
        let mut cols = Vec::new();
        let coords = quotient_coordinates(f, &image, &classes);
        for r in &reps[k] {
            let proj: SparseVec =
                r.iter().filter(|&&(x, _)| x >= start && x < start + ec.dim(j)).map(|&(x, v)| (x - start, v)).collect();
            cols.push(coords(&proj).ok_or_else(|| ConjugateError::NotTight {
                degree: j,
                reason: "leading term of an I-class is not a norm cycle".into(),
            })?);
        }
        drop(coords);
        let lead = PrimeFieldMatrix::from_columns(f, classes.len(), cols);
        if lead.nrows() != lead.ncols() || lead.rank() != lead.ncols() {
            return Err(ConjugateError::NotTight { degree: j, reason: "leading-term map is not bijective".into() });
        }
        let n = classes.len();
        let inv_cols = (0..n).map(|c| solve(&lead, &[(c, 1)])).collect::<Result<Vec<_>, _>>()?;
        leads.push(Lead { classes, image, to_i: PrimeFieldMatrix::from_columns(f, n, inv_cols), from_i: lead });
    }
    Ok(IComplex { twist: FrobeniusTwistTag, complex: ChainComplex::new(f, ilo, dims, diffs)?, leads })
}

fn empty_lead(f: FieldPrime) -> Lead {
    Lead {
        classes: Vec::new(),
        image: Subspace::zero(f, 0),
        to_i: PrimeFieldMatrix::zeros(f, 0, 0),
        from_i: PrimeFieldMatrix::zeros(f, 0, 0),
    }
}

/// Dimensions of `I(E)` per degree.
pub fn i_dims(e: &CyclicGroupComplex) -> Result<Vec<(i64, usize)>, ConjugateError> {
    Ok(i_complex(e)?.dims())
}

/// Outcome of [`psi_check`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsiReport {
    pub p: u32,
    pub tightness: TightnessReport,
    /// `(n, dim I_n)`.
    pub i_dims: Vec<(i64, usize)>,
    /// `dim I_n = dim Ȟ(E_{pn}) = dim M_n` in every degree.
    pub degree_law: bool,
    pub bijective: bool,
    pub additive: bool,
    /// A pair `(degree, x, y)` where `ψ(x+y) - ψ(x) - ψ(y) ∉ im(1-σ)`.
    pub additivity_witness: Option<(i64, SparseVec, SparseVec)>,
    /// The constant of the prime, from the contractible probe.
    pub constant: u32,
    /// `ψ̃∘d = a·d∘ψ̃` with that constant.
    pub commutes: bool,
}

impl PsiReport {
    pub fn passed(&self) -> bool {
        self.tightness.tight && self.degree_law && self.bijective && self.additive && self.commutes
    }
}

/// Matrices `Ψ_n : M_n -> I_n` of `ψ` on the basis of `M`.
pub fn psi_matrices(m: &ChainComplex, tp: &TensorPower, ic: &IComplex) -> Result<Vec<PrimeFieldMatrix>, ConjugateError> {
    let f = m.field();
    (m.lo()..=m.hi())
        .map(|n| {
            let cols = (0..m.dim(n))
                .map(|b| {
                    ic.classify(n, &tp.power(n, &[(b, 1)])).ok_or_else(|| ConjugateError::NotTight {
                        degree: n,
                        reason: "x^{⊗p} is not a norm cycle".into(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(PrimeFieldMatrix::from_columns(f, ic.complex().dim(n), cols))
        })
        .collect()
}

/// Result of fitting `ψ̃∘d = a·d∘ψ̃` on one complex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantFit {
    /// `None` when both sides vanish identically.
    pub a: Option<u32>,
    pub consistent: bool,
}

/// Fits the constant `a` on `M`, entry by entry over all degrees.
pub fn fit_constant(m: &ChainComplex) -> Result<ConstantFit, ConjugateError> {
    let f = m.field();
    let p = f.p() as usize;
    let tp = TensorPower::new(m, p)?;
    let ic = i_complex(tp.group())?;
    let psi = psi_matrices(m, &tp, &ic)?;
    let mut a: Option<u32> = None;
    let mut pairs = Vec::new();
    for n in m.lo() + 1..=m.hi() {
        let k = (n - m.lo()) as usize;
        let lhs = psi[k - 1].compose(&m.d(n))?;
        let rhs = ic.complex().d(n).compose(&psi[k])?;
        pairs.push((lhs, rhs));
    }
    for (lhs, rhs) in &pairs {
        for r in 0..lhs.nrows() {
            for c in 0..lhs.ncols() {
                let (x, y) = (lhs.get(r, c), rhs.get(r, c));
                if y != 0 && a.is_none() {
                    a = Some(f.mul(x, f.inv(y)?));
                }
            }
        }
    }
    let consistent = match a {
        None => pairs.iter().all(|(l, _)| l.is_zero()),
        Some(a) => pairs.iter().all(|(l, r)| *l == r.scaled(a)),
    };
    Ok(ConstantFit { a, consistent })
}

/// The contractible probe `F_p --λ--> F_p` in degrees `1 -> 0`.
pub fn probe_complex(f: FieldPrime, lambda: u32) -> ChainComplex {
    let d = PrimeFieldMatrix::from_columns(f, 1, vec![vec![(0, lambda)]]);
    ChainComplex::new(f, 0, vec![1, 1], vec![PrimeFieldMatrix::zeros(f, 0, 1), d]).expect("two-term complex")
}

/// The constant `a` of the prime `p`, computed once by the contractible
/// probe and cached.
pub fn frobenius_constant(f: FieldPrime) -> Result<u32, ConjugateError> {
    static CACHE: OnceLock<Mutex<HashMap<u32, u32>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&a) = cache.lock().expect("cache lock").get(&f.p()) {
        return Ok(a);
    }
    let fit = fit_constant(&probe_complex(f, 1))?;
    let a = match fit {
        ConstantFit { a: Some(a), consistent: true } => a,
        _ => return Err(ConjugateError::Unsupported(format!("the probe does not determine a for p = {}", f.p()))),
    };
    cache.lock().expect("cache lock").insert(f.p(), a);
    Ok(a)
}

/// Builds `M^{⊗p}`, checks tightness, `ψ` and the degree law, and checks
/// additivity on `samples` seeded random pairs per degree.
pub fn psi_check(m: &ChainComplex, seed: u64, samples: usize) -> Result<PsiReport, ConjugateError> {
    let f = m.field();
    let p = f.p() as usize;
    let tp = TensorPower::new(m, p)?;
    let tightness = is_tight(tp.group())?;
    let ic = i_complex(tp.group())?;
    let psi = psi_matrices(m, &tp, &ic)?;
    let mut degree_law = true;
    for n in m.lo()..=m.hi() {
        let module = tp.group().module(p as i64 * n);
        degree_law &= ic.complex().dim(n) == m.dim(n) && i_dim(&module) == m.dim(n);
    }
    for (j, _, idim) in &tightness.degrees {
        degree_law &= *idim == 0 || j.rem_euclid(p as i64) == 0;
    }
    let bijective = psi.iter().all(|x| x.nrows() == x.ncols() && x.rank() == x.ncols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut witness = None;
    'outer: for n in m.lo()..=m.hi() {
        let dim = m.dim(n);
        if dim == 0 {
            continue;
        }
        let (_, (_, image)) = tate_spaces(&tp.group().module(p as i64 * n));
        let rand_vec = |rng: &mut ChaCha8Rng| -> SparseVec {
            collect_sparse(f, (0..dim).map(|i| (i, rng.gen_range(0..f.p()))).collect())
        };
        for _ in 0..samples {
            let x = rand_vec(&mut rng);
            let y = rand_vec(&mut rng);
            let sum = crate::gf_linalg::axpy(f, 1, &x, &y);
            let lhs = tp.power(n, &sum);
            let mut rhs = tp.power(n, &x);
            rhs = crate::gf_linalg::axpy(f, 1, &rhs, &tp.power(n, &y));
            let diff = crate::gf_linalg::axpy(f, f.neg(1), &rhs, &lhs);
            if !image.contains(&diff) {
                witness = Some((n, x, y));
                break 'outer;
            }
        }
    }
    let constant = frobenius_constant(f)?;
    let mut commutes = true;
    for n in m.lo() + 1..=m.hi() {
        let k = (n - m.lo()) as usize;
        let lhs = psi[k - 1].compose(&m.d(n))?;
        let rhs = ic.complex().d(n).compose(&psi[k])?.scaled(constant);
        commutes &= lhs == rhs;
    }
    Ok(PsiReport {
        p: f.p(),
        tightness,
        i_dims: ic.dims(),
        degree_law,
        bijective,
        additive: witness.is_none(),
        additivity_witness: witness,
        constant,
        commutes,
    })
}

/// Tightness of one level of the edgewise subdivision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelTightness {
    pub level: usize,
    pub tight: bool,
    /// `(q, dim I(E_{pq}), dim of A♮ at this level in degree q)`.
    pub i_dims: Vec<(i64, usize, usize)>,
}

/// Outcome of [`adaptedness_check`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptednessReport {
    pub p: u32,
    pub twist: FrobeniusTwistTag,
    pub levels: Vec<LevelTightness>,
}

impl AdaptednessReport {
    pub fn passed(&self) -> bool {
        self.levels.iter().all(|l| l.tight && l.i_dims.iter().all(|&(_, a, b)| a == b))
    }

    /// Failing levels.
    pub fn failures(&self) -> Vec<usize> {
        self.levels.iter().filter(|l| !(l.tight && l.i_dims.iter().all(|&(_, a, b)| a == b))).map(|l| l.level).collect()
    }
}

/// Level `n` of a cyclic module of level `l` as a complex over `Z/l`,
/// generated by `t^{n+1}` and graded by internal degree.
pub fn level_as_group_complex(e: &CyclicModuleData, n: usize) -> Result<CyclicGroupComplex, ConjugateError> {
    let f = e.field();
    let data = e.level_data(n);
    let mut sigma = PrimeFieldMatrix::identity(f, e.dim(n));
    for _ in 0..=n {
        sigma = data.rotation.compose(&sigma)?;
    }
    let lo = data.degrees.iter().copied().min().unwrap_or(0);
    let hi = data.degrees.iter().copied().max().unwrap_or(0);
    let mut local = vec![0usize; e.dim(n)];
    let mut by_deg: Vec<Vec<usize>> = vec![Vec::new(); (hi - lo + 1) as usize];
    for (x, &q) in data.degrees.iter().enumerate() {
        let k = (q - lo) as usize;
        local[x] = by_deg[k].len();
        by_deg[k].push(x);
    }
    let dims: Vec<usize> = by_deg.iter().map(|v| v.len()).collect();
    let mut diffs = Vec::new();
    let mut sigmas = Vec::new();
    for (k, xs) in by_deg.iter().enumerate() {
        let below = if k == 0 { 0 } else { dims[k - 1] };
        let dcols = xs
            .iter()
            .map(|&x| if k == 0 { Vec::new() } else { data.internal_d.col(x).iter().map(|&(y, v)| (local[y], v)).collect() })
            .collect();
        diffs.push(PrimeFieldMatrix::from_columns(f, below, dcols));
        let scols = xs.iter().map(|&x| sigma.col(x).iter().map(|&(y, v)| (local[y], v)).collect()).collect();
        sigmas.push(PrimeFieldMatrix::from_columns(f, dims[k], scols));
    }
    let cx = ChainComplex::new(f, lo, dims, diffs)?;
    Ok(CyclicGroupComplex::new(e.level(), cx, sigmas)?)
}

/// Checks that `i_p^* A♮` is tight on levels `0..=n_max` and that `I`
/// preserves dimensions degreewise.
pub fn adaptedness_check(a: &AlgebraPresentation, n_max: usize) -> Result<AdaptednessReport, ConjugateError> {
    let f = a.field();
    let p = f.p() as usize;
    let depth = p * (n_max + 1) - 1;
    let top = (a.dim() as u64).checked_pow((depth + 1) as u32).unwrap_or(u64::MAX);
    if top > DEFAULT_BUDGET {
        return Err(ConjugateError::Budget { level: depth, dim: top, budget: DEFAULT_BUDGET });
    }
    let anat = build_anat(a, depth)?;
    let ew = anat.edgewise(p, n_max)?;
    let mut levels = Vec::new();
    for n in 0..=n_max {
        let g = level_as_group_complex(&ew, n)?;
        let tight = is_tight(&g)?.tight;
        let degs = &anat.level_data(n).degrees;
        let (qlo, qhi) = (
            degs.iter().copied().min().unwrap_or(0),
            degs.iter().copied().max().unwrap_or(0),
        );
        let i_dims = (qlo..=qhi)
            .map(|q| {
                let want = degs.iter().filter(|&&d| d == q).count();
                let pq = p as i64 * q;
                let have = if pq < g.complex().lo() || pq > g.complex().hi() { 0 } else { i_dim(&g.module(pq)) };
                (q, have, want)
            })
            .collect();
        levels.push(LevelTightness { level: n, tight, i_dims });
    }
    Ok(AdaptednessReport { p: f.p(), twist: FrobeniusTwistTag, levels })
}

/// One cell of the `E₁` table: conjugate column `k`, total degree `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct E1Cell {
    pub k: i64,
    pub n: i64,
    pub dim: usize,
    /// The `ε`-part (`p = 2` only).
    pub eps_dim: usize,
}

/// `E₁` of the conjugate spectral sequence over a window of columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct E1Table {
    pub p: u32,
    pub twist: FrobeniusTwistTag,
    pub window: (i64, i64),
    pub cells: Vec<E1Cell>,
    /// Per degree, the sum over the window.
    pub totals: Vec<(i64, usize)>,
}

/// `E₁(k, n) = HH_{n+2k}` for odd `p`. For `p = 2` the cell is
/// `HC_{n+2k}` with `ε`-part `HC_{n+2k+1}`.
pub fn conjugate_e1(
    a: &AlgebraPresentation,
    degrees: RangeInclusive<i64>,
    window: RangeInclusive<i64>,
) -> Result<E1Table, ConjugateError> {
    let f = a.field();
    let (lo, hi) = (*degrees.start(), *degrees.end());
    let (klo, khi) = (*window.start(), *window.end());
    let odd = f.p() != 2;
    let top = (hi + 2 * khi + i64::from(!odd)).max(0);
    let e = build_anat(a, top as usize + 1)?;
    let table = if odd { hh_dims(&e, 0..=top)? } else { hc_dims(&e, 0..=top)? };
    let at = |j: i64| if j < 0 { 0 } else { table[j as usize] };
    let mut cells = Vec::new();
    let mut totals = Vec::new();
    for n in lo..=hi {
        let mut total = 0;
        for k in klo..=khi {
            let dim = at(n + 2 * k);
            let eps_dim = if odd { 0 } else { at(n + 2 * k + 1) };
            total += dim + eps_dim;
            cells.push(E1Cell { k, n, dim, eps_dim });
        }
        totals.push((n, total));
    }
    Ok(E1Table { p: f.p(), twist: FrobeniusTwistTag, window: (klo, khi), cells, totals })
}

/// A page entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageCell {
    pub k: i64,
    pub n: i64,
    pub dim: usize,
    /// Whether the entry is unaffected by the row cutoff (meaningful on `E₁`).
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjugatePage {
    pub r: usize,
    pub cells: Vec<PageCell>,
}

impl ConjugatePage {
    pub fn get(&self, k: i64, n: i64) -> Option<&PageCell> {
        self.cells.iter().find(|c| c.k == k && c.n == n)
    }

    pub fn total(&self, n: i64) -> usize {
        self.cells.iter().filter(|c| c.n == n).map(|c| c.dim).sum()
    }
}

/// Pages of the conjugate spectral sequence on the rows `<= rows` of the
/// Tsygan lattice of `i_p^* A♮`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjugatePages {
    pub p: u32,
    pub rows: usize,
    pub degrees: (i64, i64),
    /// `E_1, E_2, …` up to the first page equal to `E_∞`.
    pub pages: Vec<ConjugatePage>,
    pub e_inf: ConjugatePage,
    /// `E₁(k, n) = E₁(k-1, n+2)` wherever both entries are exact.
    pub periodic: bool,
    /// Homology of the truncated complex, which `E_∞` sums to.
    pub homology: Vec<(i64, usize)>,
}

/// Conjugate filtration `V^k = τ^{2k-1}` of the rows `<= rows` of the
/// lattice of `i_p^* A♮`, where row `m` sits in standard filtration degree
/// `1 - m`. Column `k` of a page is `gr^{1-k}_V`, so that
/// `E₁(k, n) = HH_{n+2k}` on exact cells. Odd `p` and ungraded algebras only;
/// for `p = 2` see [`conjugate_e1`].
pub fn conjugate_pages(a: &AlgebraPresentation, rows: usize, degrees: RangeInclusive<i64>) -> Result<ConjugatePages, ConjugateError> {
    if a.degrees().iter().any(|&d| d != 0) {
        return Err(ConjugateError::Unsupported("conjugate pages are implemented for ungraded algebras".into()));
    }
    let f = a.field();
    let p = f.p() as usize;
    if p == 2 {
        return Err(ConjugateError::Unsupported("conjugate pages need an odd prime; use the E1 table for p = 2".into()));
    }
    let (lo, hi) = (*degrees.start(), *degrees.end());
    let depth = p * (rows + 1) - 1;
    let top = (a.dim() as u64).checked_pow((depth + 1) as u32).unwrap_or(u64::MAX);
    if top > DEFAULT_BUDGET / 16 {
        return Err(ConjugateError::Budget { level: depth, dim: top, budget: DEFAULT_BUDGET / 16 });
    }
    let anat = build_anat(a, depth)?;
    let ew = anat.edgewise(p, rows)?;
    let w = build_tsygan(&ew, (lo - 1 - rows as i64, hi + 2), rows)?;
    let base = w.total(lo - 1, hi + 1, CellOrder::Rows)?;
    let row_of: Vec<Vec<i64>> = (lo - 1..=hi + 1)
        .map(|n| {
            let mut out = Vec::new();
            for c in w.cells(n, CellOrder::Rows) {
                out.extend(std::iter::repeat_n(c.row as i64, w.cell_dim(c)));
            }
            out
        })
        .collect();
    let fc = FilteredComplex::from_basis_degrees(base.clone(), |n, j| 1 - row_of[(n - lo + 1) as usize][j])?;
    let (klo, khi) = ((lo - 2 - rows as i64).div_euclid(2), (hi + 3).div_euclid(2) + 1);
    let levels: Vec<Vec<Subspace>> = (klo..=khi).map(|k| fc.truncation_spaces(TruncKind::Tau, 2 * k - 1)).collect();
    let v = FilteredComplex::new(base.clone(), klo, levels)?;
    // gr^k_V computes HH_{n-2k+2}
    let label = |k: i64| 1 - k;
    let exact = |k: i64, n: i64| rows as i64 >= n + 3 - 2 * k;
    let mut cells = Vec::new();
    for n in lo..=hi {
        for k in klo..=khi {
            cells.push((k, n));
        }
    }
    let r_inf = khi - klo + 2;
    let mut cache = PageCache::new(&v);
    let e1: Vec<usize> = cells.iter().map(|&(k, n)| cache.page(1, k, n)).collect();
    // entries only shrink with r, so zero entries stay zero
    let inf: Vec<usize> =
        cells.iter().zip(&e1).map(|(&(k, n), &x)| if x == 0 { 0 } else { cache.page(r_inf, k, n) }).collect();
    let page = |r: i64, dims: &[usize]| ConjugatePage {
        r: r as usize,
        cells: cells.iter().zip(dims).map(|(&(k, n), &dim)| PageCell { k: label(k), n, dim, exact: exact(k, n) }).collect(),
    };
    let e_inf = page(r_inf, &inf);
    let mut pages = vec![page(1, &e1)];
    let mut current = e1;
    let mut r = 1;
    while current != inf {
        r += 1;
        current = cells
            .iter()
            .zip(current.iter().zip(&inf))
            .map(|(&(k, n), (&x, &y))| if x == y { x } else { cache.page(r, k, n) })
            .collect();
        pages.push(page(r, &current));
    }
    let e1 = &pages[0];
    let periodic = e1.cells.iter().filter(|c| c.exact).all(|c| match e1.get(c.k - 1, c.n + 2) {
        Some(d) if d.exact => d.dim == c.dim,
        _ => true,
    });
    let homology = (lo..=hi).map(|n| (n, base.homology_dim(n))).collect();
    Ok(ConjugatePages { p: f.p(), rows, degrees: (lo, hi), pages, e_inf, periodic, homology })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclic::{ground_field, matrix_algebra, product, truncated_poly};
    use crate::tate::CyclicGroupModule;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest, ProptestConfig, Strategy};

    fn f3() -> FieldPrime {
        FieldPrime::new(3).unwrap()
    }

    fn module_complex(f: FieldPrime, dim: usize) -> ChainComplex {
        ChainComplex::concentrated(f, 0, dim)
    }

    #[test]
    fn ground_field_power_is_tight_with_one_dimensional_i() {
        let r = psi_check(&module_complex(f3(), 1), 1, 4).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.i_dims, vec![(0, 1)]);
    }

    #[test]
    fn two_dimensional_module_gives_i_of_dim_two() {
        let f = f3();
        let tp = TensorPower::new(&module_complex(f, 2), 3).unwrap();
        assert_eq!(tp.complex().dim(0), 8);
        let r = psi_check(&module_complex(f, 2), 7, 8).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.i_dims, vec![(0, 2)]);
    }

    #[test]
    fn contractible_probe_is_acyclic_and_fixes_a() {
        let f = f3();
        let m = probe_complex(f, 1);
        let tp = TensorPower::new(&m, 3).unwrap();
        let ic = i_complex(tp.group()).unwrap();
        assert_eq!(ic.dims(), vec![(0, 1), (1, 1)]);
        assert_eq!(ic.complex().homology_dim(0), 0);
        assert_eq!(ic.complex().homology_dim(1), 0);
        let a = frobenius_constant(f).unwrap();
        assert_ne!(a, 0);
        assert_eq!(fit_constant(&probe_complex(f, 2)).unwrap(), ConstantFit { a: Some(a), consistent: true });
    }

    #[test]
    fn untight_input_is_rejected_with_degree() {
        let f = f3();
        // trivial action in degree 1 has nonzero Tate homology off multiples of 3
        let g = CyclicGroupComplex::from_module(&CyclicGroupModule::trivial(f, 3, 1), 1);
        assert!(matches!(i_complex(&g), Err(ConjugateError::NotTight { degree: 1, .. })));
    }

    #[test]
    fn adaptedness_of_small_algebras() {
        let f = f3();
        let r = adaptedness_check(&ground_field(f), 3).unwrap();
        assert!(r.passed(), "{r:?}");
        let r = adaptedness_check(&truncated_poly(f, 2), 2).unwrap();
        assert!(r.passed(), "{r:?}");
        let dims: Vec<usize> = r.levels.iter().map(|l| l.i_dims[0].1).collect();
        assert_eq!(dims, vec![2, 4, 8]);
        let r = adaptedness_check(&matrix_algebra(f, 2), 1).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn e1_tables() {
        let f = f3();
        let t = conjugate_e1(&ground_field(f), 0..=0, 0..=2).unwrap();
        let d: Vec<usize> = t.cells.iter().map(|c| c.dim).collect();
        assert_eq!(d, vec![1, 0, 0]);
        let t = conjugate_e1(&truncated_poly(f, 2), 0..=0, 0..=2).unwrap();
        assert_eq!(t.totals, vec![(0, 4)]);
        let m2 = conjugate_e1(&matrix_algebra(f, 2), -2..=2, -1..=1).unwrap();
        let k = conjugate_e1(&ground_field(f), -2..=2, -1..=1).unwrap();
        assert_eq!(m2.cells, k.cells);
    }

    #[test]
    fn pages_of_ground_field_degenerate() {
        let f = f3();
        let c = conjugate_pages(&ground_field(f), 4, -2..=2).unwrap();
        assert_eq!(c.pages.len(), 1, "{:?}", c.pages);
        assert!(c.periodic);
        let e1 = conjugate_e1(&ground_field(f), -2..=2, -3..=3).unwrap();
        for cell in c.pages[0].cells.iter().filter(|x| x.exact) {
            let want = e1.cells.iter().find(|x| x.k == cell.k && x.n == cell.n).map_or(0, |x| x.dim);
            assert_eq!(cell.dim, want, "{cell:?}");
        }
        let ff = conjugate_pages(&product(&ground_field(f), &ground_field(f)).unwrap(), 3, -1..=1).unwrap();
        for cell in ff.pages[0].cells.iter().filter(|c| c.exact) {
            let single = c.pages[0].get(cell.k, cell.n).unwrap();
            assert_eq!(cell.dim, 2 * single.dim);
        }
    }

    #[test]
    fn dual_number_pages_match_hochschild_on_exact_cells() {
        let f = f3();
        let c = conjugate_pages(&truncated_poly(f, 2), 2, -1..=1).unwrap();
        let e1 = conjugate_e1(&truncated_poly(f, 2), -1..=1, -3..=3).unwrap();
        let exact: Vec<_> = c.pages[0].cells.iter().filter(|x| x.exact).collect();
        assert!(!exact.is_empty());
        for cell in exact {
            let want = e1.cells.iter().find(|x| x.k == cell.k && x.n == cell.n).map_or(0, |x| x.dim);
            assert_eq!(cell.dim, want, "{cell:?}");
        }
        let sums: Vec<usize> = (-1..=1).map(|n| c.e_inf.total(n)).collect();
        assert_eq!(sums, c.homology.iter().map(|x| x.1).collect::<Vec<_>>());
        assert!(matches!(conjugate_pages(&ground_field(FieldPrime::new(2).unwrap()), 2, 0..=0), Err(ConjugateError::Unsupported(_))));
    }

    fn arb_matrix(p: u32, rows: usize, cols: usize) -> impl Strategy<Value = PrimeFieldMatrix> {
        proptest::collection::vec(0..p as i64, rows * cols).prop_map(move |xs| {
            let f = FieldPrime::new(p as u64).unwrap();
            let dense: Vec<Vec<i64>> = xs.chunks(cols).map(|r| r.to_vec()).collect();
            PrimeFieldMatrix::from_dense(f, &dense)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn psi_is_natural(a in 1usize..=3, b in 1usize..=3, seed in any::<u64>()) {
            let f = f3();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = PrimeFieldMatrix::from_columns(
                f,
                b,
                (0..a).map(|_| collect_sparse(f, (0..b).map(|i| (i, rng.gen_range(0..3))).collect())).collect(),
            );
            let (m, m2) = (module_complex(f, a), module_complex(f, b));
            let (tp, tp2) = (TensorPower::new(&m, 3).unwrap(), TensorPower::new(&m2, 3).unwrap());
            let (ic, ic2) = (i_complex(tp.group()).unwrap(), i_complex(tp2.group()).unwrap());
            let gp = tp.map_power(&tp2, std::slice::from_ref(&g), 0);
            let ig = ic.induced_map(&ic2, 0, &gp).unwrap();
            let psi = psi_matrices(&m, &tp, &ic).unwrap();
            let psi2 = psi_matrices(&m2, &tp2, &ic2).unwrap();
            prop_assert_eq!(ig.compose(&psi[0]).unwrap(), psi2[0].compose(&g).unwrap());
        }

        #[test]
        fn constant_depends_only_on_p(d in arb_matrix(3, 2, 2), lambda in 1u32..3) {
            let f = f3();
            let m = ChainComplex::new(f, 0, vec![2, 2], vec![PrimeFieldMatrix::zeros(f, 0, 2), d.clone()]).unwrap();
            let a = frobenius_constant(f).unwrap();
            let fit = fit_constant(&m).unwrap();
            prop_assert!(fit.consistent);
            if !d.is_zero() {
                prop_assert_eq!(fit.a, Some(a));
            }
            prop_assert_eq!(fit_constant(&probe_complex(f, lambda)).unwrap().a, Some(a));
        }

        #[test]
        fn tensor_powers_are_tight(dim in 1usize..=3, seed in any::<u64>()) {
            let r = psi_check(&module_complex(f3(), dim), seed, 4).unwrap();
            prop_assert!(r.tightness.tight);
            prop_assert!(r.additive);
            prop_assert!(r.bijective);
        }
    }
}

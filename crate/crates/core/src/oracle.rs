//! Brute-force reference computations.
//!
//! Everything here is built directly from structure constants and
//! [`crate::gf_linalg`]; nothing is shared with the lattice, Tate or
//! cyclic-module code so that agreement between the two is meaningful.

use thiserror::Error;

use crate::cyclic::AlgebraPresentation;
use crate::gf_linalg::{collect_sparse, preimage, FieldPrime, PrimeFieldMatrix, SparseVec, Subspace};

/// Largest total dimension of one degree an oracle will build.
pub const ORACLE_BUDGET: usize = 60_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("degree {degree} needs {dim} basis vectors, over the budget {budget}")]
    Budget { degree: i64, dim: usize, budget: usize },
    #[error("{0}")]
    Unsupported(String),
}

/// Structure constants copied out of a presentation.
struct Table {
    f: FieldPrime,
    dim: usize,
    deg: Vec<i64>,
    mult: Vec<Vec<SparseVec>>,
    diff: Vec<SparseVec>,
}

impl Table {
    fn of(a: &AlgebraPresentation) -> Table {
        let dim = a.dim();
        Table {
            f: a.field(),
            dim,
            deg: a.degrees().to_vec(),
            mult: (0..dim).map(|i| (0..dim).map(|j| a.product_of(i, j).clone()).collect()).collect(),
            diff: (0..dim).map(|i| a.diff().col(i).clone()).collect(),
        }
    }
}

fn encode(t: &[usize], base: usize) -> usize {
    t.iter().fold(0, |acc, &x| acc * base + x)
}

fn decode(mut x: usize, base: usize, len: usize) -> Vec<usize> {
    let mut t = vec![0; len];
    for slot in t.iter_mut().rev() {
        *slot = x % base;
        x /= base;
    }
    t
}

/// One basis element of a tensor power with a coefficient.
type Term = (Vec<usize>, u32);

/// `b` on one tuple with Koszul signs; `prime` drops the last face.
fn bar_faces(t: &Table, tup: &[usize], prime: bool) -> Vec<Term> {
    let f = t.f;
    let m = tup.len() - 1;
    let mut out = Vec::new();
    for i in 0..m {
        for &(k, c) in &t.mult[tup[i]][tup[i + 1]] {
            let mut nt = tup[..i].to_vec();
            nt.push(k);
            nt.extend_from_slice(&tup[i + 2..]);
            out.push((nt, f.mul(c, f.sign(i as i64))));
        }
    }
    if !prime && m > 0 {
        let last = tup[m];
        let rest: i64 = tup[..m].iter().map(|&x| t.deg[x]).sum();
        let s = f.mul(f.sign(m as i64), f.sign(t.deg[last] * rest));
        for &(k, c) in &t.mult[last][tup[0]] {
            let mut nt = vec![k];
            nt.extend_from_slice(&tup[1..m]);
            out.push((nt, f.mul(c, s)));
        }
    }
    out
}

/// Internal differential of a tuple with Koszul signs.
fn internal(t: &Table, tup: &[usize]) -> Vec<Term> {
    let f = t.f;
    let mut out = Vec::new();
    let mut before = 0;
    for (j, &x) in tup.iter().enumerate() {
        for &(k, c) in &t.diff[x] {
            let mut nt = tup.to_vec();
            nt[j] = k;
            out.push((nt, f.mul(c, f.sign(before))));
        }
        before += t.deg[x];
    }
    out
}

/// Basis of the Hochschild chains of total degree `n`: `(length, tuple code)`.
fn hochschild_basis(t: &Table, n: i64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if n < 0 {
        return out;
    }
    for s in 0..=n as usize {
        let count = t.dim.pow(s as u32 + 1);
        for code in 0..count {
            let tup = decode(code, t.dim, s + 1);
            let q: i64 = tup.iter().map(|&x| t.deg[x]).sum();
            if s as i64 + q == n {
                out.push((s, code));
            }
        }
    }
    out
}

/// Hochschild homology from the unreduced bar complex, degrees `0..=n_max`.
///
/// Internal degrees must be nonnegative so that each total degree is finite.
pub fn bar_hh_dims(a: &AlgebraPresentation, n_max: usize) -> Result<Vec<usize>, OracleError> {
    let t = Table::of(a);
    if t.deg.iter().any(|&d| d < 0) {
        return Err(OracleError::Unsupported("negative internal degrees".into()));
    }
    let top = n_max as i64 + 1;
    let worst = t.dim.checked_pow(top as u32 + 1).unwrap_or(usize::MAX);
    if worst > ORACLE_BUDGET {
        return Err(OracleError::Budget { degree: top, dim: worst, budget: ORACLE_BUDGET });
    }
    let bases: Vec<Vec<(usize, usize)>> = (0..=top).map(|n| hochschild_basis(&t, n)).collect();
    let index: Vec<std::collections::HashMap<(usize, usize), usize>> =
        bases.iter().map(|b| b.iter().enumerate().map(|(i, &k)| (k, i)).collect()).collect();
    let mut diffs = vec![PrimeFieldMatrix::zeros(t.f, 0, bases[0].len())];
    for n in 1..=top as usize {
        let cols = bases[n]
            .iter()
            .map(|&(s, code)| {
                let tup = decode(code, t.dim, s + 1);
                let mut col = Vec::new();
                for (nt, c) in bar_faces(&t, &tup, false) {
                    col.push((index[n - 1][&(nt.len() - 1, encode(&nt, t.dim))], c));
                }
                let sign = t.f.sign(s as i64);
                for (nt, c) in internal(&t, &tup) {
                    col.push((index[n - 1][&(s, encode(&nt, t.dim))], t.f.mul(sign, c)));
                }
                collect_sparse(t.f, col)
            })
            .collect();
        diffs.push(PrimeFieldMatrix::from_columns(t.f, bases[n - 1].len(), cols));
    }
    Ok((0..=n_max)
        .map(|n| {
            let z = bases[n].len() - diffs[n].rank();
            z - diffs[n + 1].rank()
        })
        .collect())
}

/// `HH` of `F_p[x]/x^k` from the 2-periodic resolution
/// `A ← A ← A ← …` with maps `0, k x^{k-1}, 0, k x^{k-1}, …`.
pub fn truncated_poly_hh_small(f: FieldPrime, k: usize, n_max: usize) -> Vec<usize> {
    let scalar = f.from_i64(k as i64);
    let cols = (0..k).map(|i| if i == 0 && scalar != 0 { vec![(k - 1, scalar)] } else { Vec::new() }).collect();
    let mult = PrimeFieldMatrix::from_columns(f, k, cols);
    let r = mult.rank();
    (0..=n_max)
        .map(|n| if n == 0 { k } else { k - r })
        .collect()
}

/// Group and Tate homology of `Z/n` acting on `F_p^d` through `sigma`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupHomology {
    /// `H_i` for `i = 0..=i_max`.
    pub group: Vec<usize>,
    /// `Ĥ_i` for `i = -i_max..=i_max`.
    pub tate: Vec<(i64, usize)>,
}

/// Homology of `P ⊗_{F[G]} M` for the free periodic resolution `P`,
/// realized as `(F[G] ⊗ M) / (xg ⊗ m - x ⊗ gm)`.
pub fn brute_group_homology(order: usize, sigma: &PrimeFieldMatrix, i_max: usize) -> GroupHomology {
    let f = sigma.field();
    let d = sigma.nrows();
    let n = order;
    let big = n * d;
    let at = |g: usize, m: usize| g * d + m;
    // relations xg ⊗ m - x ⊗ gm
    let mut rel = Vec::new();
    for x in 0..n {
        for m in 0..d {
            let mut v = vec![(at((x + 1) % n, m), 1)];
            v.extend(sigma.col(m).iter().map(|&(k, c)| (at(x, k), f.neg(c))));
            rel.push(collect_sparse(f, v));
        }
    }
    let relations = Subspace::from_vectors(f, big, rel);
    // right multiplication by 1 - g or by N on F[G], tensored with M
    let right = |elt: &[(usize, u32)]| -> PrimeFieldMatrix {
        let cols = (0..big)
            .map(|c| {
                let (x, m) = (c / d, c % d);
                collect_sparse(f, elt.iter().map(|&(g, v)| (at((x + g) % n, m), v)).collect())
            })
            .collect();
        PrimeFieldMatrix::from_columns(f, big, cols)
    };
    let one_minus = right(&collect_sparse(f, vec![(0, 1), (1 % n, f.neg(1))]));
    let norm = right(&(0..n).map(|g| (g, 1)).collect::<Vec<_>>());
    let quotient_homology = |into: &PrimeFieldMatrix, out: &PrimeFieldMatrix| -> usize {
        // ker(out) / im(into) on the quotient by the relations
        let cycles = preimage(out, &relations);
        let boundaries = Subspace::full(f, big).image_under(into).sum(&relations);
        cycles.dim() - boundaries.dim()
    };
    let zero = PrimeFieldMatrix::zeros(f, big, big);
    let odd = quotient_homology(&norm, &one_minus);
    let even = quotient_homology(&one_minus, &norm);
    let h0 = quotient_homology(&one_minus, &zero);
    let group = (0..=i_max).map(|i| if i == 0 { h0 } else if i % 2 == 1 { odd } else { even }).collect();
    let tate = (-(i_max as i64)..=i_max as i64).map(|i| (i, if i.rem_euclid(2) == 1 { odd } else { even })).collect();
    GroupHomology { group, tate }
}

/// Bounds on `HP-bar_n` from a window of the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowBounds {
    /// Classes born in the lower half of the rows that survive to the top.
    pub lower: usize,
    /// Classes born below the top row that survive to the top.
    pub upper: usize,
}

/// Basis of cell `(c, m)`: all tuples of length `m + 1`.
fn lattice_cell(t: &Table, c: i64, m: usize, col_lo: i64) -> Option<usize> {
    if c < col_lo {
        return None;
    }
    Some(t.dim.pow(m as u32 + 1))
}

/// Bounds on `HP-bar_n(A)` from one elimination on the sum-total complex of
/// rows `0..rows` and the `cols` columns ending at `n + 1`.
pub fn direct_hpbar_window(a: &AlgebraPresentation, n: i64, rows: usize, cols: usize) -> Result<WindowBounds, OracleError> {
    let t = Table::of(a);
    if t.deg.iter().any(|&d| d != 0) {
        return Err(OracleError::Unsupported("the window oracle handles ungraded algebras".into()));
    }
    if rows == 0 || cols == 0 {
        return Ok(WindowBounds { lower: 0, upper: 0 });
    }
    let f = t.f;
    let col_lo = n + 2 - cols as i64;
    // cells of degree k ordered by row: (row, column, offset)
    let layout = |k: i64| -> Vec<(usize, i64, usize, usize)> {
        let mut out = Vec::new();
        let mut off = 0;
        for m in 0..rows {
            let c = k - m as i64;
            if c > n + 1 {
                continue;
            }
            if let Some(dim) = lattice_cell(&t, c, m, col_lo) {
                out.push((m, c, off, dim));
                off += dim;
            }
        }
        out
    };
    let total = |l: &[(usize, i64, usize, usize)]| l.last().map_or(0, |x| x.2 + x.3);
    let lays: Vec<_> = (n - 1..=n + 1).map(layout).collect();
    for (i, l) in lays.iter().enumerate() {
        if total(l) > ORACLE_BUDGET {
            return Err(OracleError::Budget { degree: n - 1 + i as i64, dim: total(l), budget: ORACLE_BUDGET });
        }
    }
    let differential = |src: &[(usize, i64, usize, usize)], dst: &[(usize, i64, usize, usize)]| -> PrimeFieldMatrix {
        let find = |m: usize, c: i64| dst.iter().find(|x| x.0 == m && x.1 == c).map(|x| x.2);
        let mut columns = Vec::new();
        for &(m, c, _, dim) in src {
            for code in 0..dim {
                let tup = decode(code, t.dim, m + 1);
                let mut col = Vec::new();
                // vertical: b in even columns, -b' in odd ones
                if m > 0 {
                    if let Some(o) = find(m - 1, c) {
                        let odd = c.rem_euclid(2) == 1;
                        let s = if odd { f.neg(1) } else { 1 };
                        for (nt, v) in bar_faces(&t, &tup, odd) {
                            col.push((o + encode(&nt, t.dim), f.mul(s, v)));
                        }
                    }
                }
                // horizontal: 1 - t out of odd columns, N out of even ones
                if let Some(o) = find(m, c - 1) {
                    let mut rot = tup.clone();
                    let mut sign = 1;
                    let step = f.sign(m as i64);
                    let mut orbit = Vec::new();
                    for _ in 0..=m {
                        orbit.push((encode(&rot, t.dim), sign));
                        rot.rotate_right(1);
                        sign = f.mul(sign, step);
                    }
                    if c.rem_euclid(2) == 1 {
                        col.push((o + code, 1));
                        col.push((o + orbit[1 % orbit.len()].0, f.neg(orbit[1 % orbit.len()].1)));
                    } else {
                        col.extend(orbit.into_iter().map(|(x, v)| (o + x, v)));
                    }
                }
                columns.push(collect_sparse(f, col));
            }
        }
        PrimeFieldMatrix::from_columns(f, total(dst), columns)
    };
    let d_in = differential(&lays[2], &lays[1]);
    let d_out = differential(&lays[1], &lays[0]);
    let dim = total(&lays[1]);
    let cycles = preimage(&d_out, &Subspace::zero(f, total(&lays[0])));
    let boundaries = Subspace::full(f, total(&lays[2])).image_under(&d_in);
    let surviving = |s: usize| -> usize {
        let prefix: Vec<usize> = lays[1].iter().filter(|x| x.0 <= s).flat_map(|x| x.2..x.2 + x.3).collect();
        let born = cycles.intersect(&Subspace::coordinate(f, dim, prefix));
        born.sum(&boundaries).dim() - boundaries.dim()
    };
    Ok(WindowBounds { lower: surviving((rows - 1) / 2), upper: surviving(rows.saturating_sub(2)) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclic::{exterior_dg, ground_field, matrix_algebra, product, truncated_poly};

    fn f3() -> FieldPrime {
        FieldPrime::new(3).unwrap()
    }

    #[test]
    fn bar_complex_examples() {
        let f = f3();
        assert_eq!(bar_hh_dims(&ground_field(f), 3).unwrap(), vec![1, 0, 0, 0]);
        assert_eq!(bar_hh_dims(&truncated_poly(f, 2), 3).unwrap(), vec![2, 1, 1, 1]);
        assert_eq!(truncated_poly_hh_small(f, 2, 3), vec![2, 1, 1, 1]);
        let ff = product(&ground_field(f), &ground_field(f)).unwrap();
        assert_eq!(bar_hh_dims(&ff, 2).unwrap(), vec![2, 0, 0]);
        assert_eq!(bar_hh_dims(&matrix_algebra(f, 2), 2).unwrap(), vec![1, 0, 0]);
    }

    #[test]
    fn small_resolution_agrees_with_bar_complex() {
        for p in [2u64, 3, 5] {
            let f = FieldPrime::new(p).unwrap();
            for k in 2..=4 {
                assert_eq!(bar_hh_dims(&truncated_poly(f, k), 4).unwrap(), truncated_poly_hh_small(f, k, 4), "p={p} k={k}");
            }
        }
    }

    #[test]
    fn exterior_algebra_hochschild() {
        let f = f3();
        // HH of F_3[x]/x² with |x| = 1 is the divided-power-times-exterior pattern
        let dims = bar_hh_dims(&exterior_dg(f), 4).unwrap();
        assert_eq!(dims[0], 1);
        assert!(dims.iter().all(|&d| d > 0));
    }

    #[test]
    fn group_homology_examples() {
        let f = f3();
        let trivial = brute_group_homology(3, &PrimeFieldMatrix::identity(f, 1), 4);
        assert_eq!(trivial.group, vec![1; 5]);
        assert!(trivial.tate.iter().all(|&(_, d)| d == 1));
        let regular = PrimeFieldMatrix::from_columns(f, 3, (0..3).map(|i| vec![((i + 1) % 3, 1)]).collect());
        let r = brute_group_homology(3, &regular, 3);
        assert_eq!(r.group, vec![1, 0, 0, 0]);
        assert!(r.tate.iter().all(|&(_, d)| d == 0));
        let coprime = brute_group_homology(2, &PrimeFieldMatrix::identity(f, 1), 3);
        assert_eq!(coprime.group, vec![1, 0, 0, 0]);
        assert!(coprime.tate.iter().all(|&(_, d)| d == 0));
    }

    #[test]
    fn window_bounds() {
        let f = f3();
        assert_eq!(direct_hpbar_window(&ground_field(f), 0, 10, 8).unwrap(), WindowBounds { lower: 1, upper: 1 });
        assert_eq!(direct_hpbar_window(&ground_field(f), 1, 10, 8).unwrap(), WindowBounds { lower: 0, upper: 0 });
        assert_eq!(direct_hpbar_window(&ground_field(f), 0, 0, 8).unwrap(), WindowBounds { lower: 0, upper: 0 });
    }
}

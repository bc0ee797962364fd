//! Algebra ingestion, the test corpus and seeded random inputs.

use std::path::Path;

use cyclohom::complex::ChainComplex;
use cyclohom::cyclic::{build_from_shorthand, AlgebraFile, AlgebraPresentation};
use cyclohom::gf_linalg::{solve, FieldPrime, PrimeFieldMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::CliError;

/// Loads `--algebra`: an existing file is parsed as JSON, anything else is
/// a builder shorthand over `F_p` (default `p = 3`).
pub fn load_algebra(arg: Option<&str>, p: Option<u32>) -> Result<(AlgebraPresentation, String), CliError> {
    let arg = arg.unwrap_or("field");
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{arg}: {e}")))?;
        let file = AlgebraFile::parse(&text).map_err(|e| CliError::Input(format!("{arg}: {e}")))?;
        if let Some(p) = p {
            if u64::from(p) != file.p {
                return Err(CliError::Usage(format!("--p {p} conflicts with p = {} in {arg}", file.p)));
            }
        }
        let a = file.to_presentation().map_err(|e| CliError::Input(format!("{arg}: {e}")))?;
        return Ok((a, arg.to_string()));
    }
    if arg.ends_with(".json") {
        return Err(CliError::Input(format!("{arg}: no such file")));
    }
    let f = field(p.unwrap_or(3))?;
    let a = build_from_shorthand(f, arg).map_err(|e| CliError::Input(e.to_string()))?;
    Ok((a, arg.to_string()))
}

pub fn field(p: u32) -> Result<FieldPrime, CliError> {
    FieldPrime::new(u64::from(p)).map_err(|e| CliError::Usage(format!("--p {p}: {e}")))
}

/// The named corpus over `F_p`.
pub fn corpus(f: FieldPrime) -> Vec<(String, AlgebraPresentation)> {
    let p = f.p();
    [
        (format!("F_{p}"), "field"),
        (format!("F_{p}[x]/x^2"), "truncpoly:2"),
        (format!("F_{p}xF_{p}"), "product:field,field"),
        (format!("M_2(F_{p})"), "matrix:2"),
        (format!("F_{p}[Z/3]"), "group:3"),
        ("exterior_dg".to_string(), "exterior"),
    ]
    .into_iter()
    .map(|(name, s)| (name, build_from_shorthand(f, s).expect("corpus builders are valid")))
    .collect()
}

pub fn random_matrix(f: FieldPrime, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> PrimeFieldMatrix {
    let columns = (0..cols)
        .map(|_| (0..rows).map(|i| (i, rng.gen_range(0..f.p()))).filter(|&(_, c)| c != 0).collect())
        .collect();
    PrimeFieldMatrix::from_columns(f, rows, columns)
}

pub fn random_invertible(f: FieldPrime, n: usize, rng: &mut ChaCha8Rng) -> PrimeFieldMatrix {
    loop {
        let m = random_matrix(f, n, n, rng);
        if m.rank() == n {
            return m;
        }
    }
}

/// A module `F^a` in degree 0, or a complex `F^b -> F^a` in degrees `1 -> 0`
/// with a random differential.
pub fn random_complex(f: FieldPrime, a: usize, b: Option<usize>, rng: &mut ChaCha8Rng) -> ChainComplex {
    match b {
        None => ChainComplex::concentrated(f, 0, a),
        Some(b) => {
            let d = random_matrix(f, a, b, rng);
            ChainComplex::new(f, 0, vec![a, b], vec![PrimeFieldMatrix::zeros(f, 0, a), d]).expect("two-term complex")
        }
    }
}

/// `M` transported along random invertible matrices in each degree.
pub fn change_basis(m: &ChainComplex, rng: &mut ChaCha8Rng) -> ChainComplex {
    let f = m.field();
    let gs: Vec<PrimeFieldMatrix> = (m.lo()..=m.hi()).map(|n| random_invertible(f, m.dim(n), rng)).collect();
    let inv: Vec<PrimeFieldMatrix> = gs
        .iter()
        .map(|g| {
            let cols = (0..g.ncols()).map(|j| solve(g, &[(j, 1)]).expect("invertible")).collect();
            PrimeFieldMatrix::from_columns(f, g.nrows(), cols)
        })
        .collect();
    let dims = (m.lo()..=m.hi()).map(|n| m.dim(n)).collect();
    let diffs = (m.lo()..=m.hi())
        .map(|n| {
            let k = (n - m.lo()) as usize;
            if k == 0 {
                m.d(n)
            } else {
                gs[k - 1].compose(&m.d(n)).and_then(|x| x.compose(&inv[k])).expect("shape")
            }
        })
        .collect();
    ChainComplex::new(f, m.lo(), dims, diffs).expect("conjugate of a complex")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn builder_fallback_and_missing_file() {
        let (a, _) = load_algebra(Some("matrix:2"), Some(5)).unwrap();
        assert_eq!(a.dim(), 4);
        assert_eq!(a.field().p(), 5);
        assert!(matches!(load_algebra(Some("nope.json"), None), Err(CliError::Input(_))));
        assert!(matches!(load_algebra(Some("field"), Some(4)), Err(CliError::Usage(_))));
    }

    #[test]
    fn change_of_basis_keeps_homology() {
        let f = field(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_complex(f, 3, Some(2), &mut rng);
        let g = change_basis(&m, &mut rng);
        for n in 0..=1 {
            assert_eq!(m.homology_dim(n), g.homology_dim(n));
        }
    }
}

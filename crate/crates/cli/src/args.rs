//! Command-line syntax.

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "cyclohom", version, about = "Exact cyclic, periodic and co-periodic homology over prime fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Algebra file (JSON) or builder shorthand such as `matrix:2`.
    #[arg(long, global = true)]
    pub algebra: Option<String>,
    /// Degree range `lo..hi`.
    #[arg(long, global = true, value_parser = parse_range, allow_hyphen_values = true)]
    pub degrees: Option<(i64, i64)>,
    /// Row bound of the lattice window.
    #[arg(long, global = true)]
    pub rows: Option<usize>,
    /// Number of column stages of product towers.
    #[arg(long, global = true)]
    pub cols: Option<usize>,
    /// Consecutive isomorphic stages required by a certificate.
    #[arg(long = "stab-steps", global = true)]
    pub stab_steps: Option<usize>,
    /// Largest number of tower stages built.
    #[arg(long = "max-stages", global = true)]
    pub max_stages: Option<usize>,
    /// Prime for builder shorthands and group modules.
    #[arg(long, global = true)]
    pub p: Option<u32>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Seed of randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (falls back to CYCLOHOM_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Hochschild homology.
    Hh,
    /// Cyclic homology.
    Hc,
    /// Periodic cyclic homology (product totalization).
    Hp,
    /// Co-periodic cyclic homology.
    Hpbar,
    /// Polynomial periodic cyclic homology.
    Cp,
    /// Restricted periodic complexes.
    Restricted {
        #[arg(long, value_enum, default_value_t = Side::Both)]
        side: Side,
    },
    /// The five theories and the comparison maps between them.
    Compare,
    /// Group and Tate homology of a cyclic group module.
    Tate {
        /// `trivial:ORDER[:DIM]` or `regular:ORDER`.
        #[arg(long)]
        module: String,
        #[arg(long, value_enum, default_value_t = KindArg::All)]
        kind: KindArg,
        /// Twist the generator by a sign.
        #[arg(long)]
        twisted: bool,
    },
    /// Cyclic homology of the edgewise subdivision.
    Subdivide {
        #[arg(long, default_value_t = 3)]
        l: usize,
    },
    /// Tensor-power map on a seeded random module or two-term complex.
    Psi {
        /// `a` for a module, `a,b` for a complex `F^b -> F^a` in degrees 1 -> 0.
        #[arg(long, value_parser = parse_dims)]
        dims: (usize, Option<usize>),
    },
    /// E1 table of the conjugate spectral sequence.
    ConjE1 {
        /// Column range `lo..hi`.
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true, default_value = "0..2")]
        window: (i64, i64),
    },
    /// Pages of the conjugate spectral sequence.
    ConjPages,
    /// Runs a verification suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Cpf,
    Cpbarf,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Homology,
    Tate,
    Cotate,
    Poly,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Suite {
    Relations,
    Tate,
    Tensor,
    Morita,
    Comparison,
    Edgewise,
    Conjugate,
    Hochschild,
    Ground,
    Additivity,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Hh => "hh",
            Command::Hc => "hc",
            Command::Hp => "hp",
            Command::Hpbar => "hpbar",
            Command::Cp => "cp",
            Command::Restricted { .. } => "restricted",
            Command::Compare => "compare",
            Command::Tate { .. } => "tate",
            Command::Subdivide { .. } => "subdivide",
            Command::Psi { .. } => "psi",
            Command::ConjE1 { .. } => "conj-e1",
            Command::ConjPages => "conj-pages",
            Command::Verify { .. } => "verify",
        }
    }
}

/// Parses `lo..hi` (inclusive).
pub fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected lo..hi, got {s:?}"))?;
    let lo: i64 = a.trim().parse().map_err(|_| format!("bad lower bound {a:?}"))?;
    let hi: i64 = b.trim().parse().map_err(|_| format!("bad upper bound {b:?}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn parse_dims(s: &str) -> Result<(usize, Option<usize>), String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad dimension {t:?}"));
    match s.split_once(',') {
        Some((a, b)) => Ok((num(a)?, Some(num(b)?))),
        None => Ok((num(s)?, None)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("-2..2"), Ok((-2, 2)));
        assert_eq!(parse_range("0..0"), Ok((0, 0)));
        assert!(parse_range("3..1").is_err());
        assert!(parse_range("3").is_err());
    }

    #[test]
    fn negative_degree_flag_parses() {
        let cli = Cli::try_parse_from(["cyclohom", "hpbar", "--degrees", "-2..2", "--p", "5"]).unwrap();
        assert_eq!(cli.common.degrees, Some((-2, 2)));
        assert_eq!(cli.common.p, Some(5));
    }

    #[test]
    fn unknown_flag_is_rejected() {
        assert!(Cli::try_parse_from(["cyclohom", "hh", "--bogus"]).is_err());
    }
}

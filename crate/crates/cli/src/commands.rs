//! Computation commands.

use cyclohom::complex::{StabilizationPolicy, Stabilized};
use cyclohom::conjugate::{conjugate_e1, conjugate_pages, psi_check, ConjugatePage};
use cyclohom::cyclic::{build_anat, check_cyclic_relations, AlgebraPresentation, AnatBasis};
use cyclohom::oracle::brute_group_homology;
use cyclohom::periodic::{
    compare_5dia, cp_poly_dims, hc_dims, hh_dims, hp_dims, hpbar_dims, restricted_dims, RestrictedSide, WINDOW_BUDGET,
};
use cyclohom::tate::{tate_dims, CyclicGroupComplex, CyclicGroupModule, TateKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::args::{Cli, Command, KindArg, Side};
use crate::input::{field, load_algebra, random_complex};
use crate::report::{Body, Config, Entry, Row, Table};
use crate::suites::{run_suite, SuiteConfig};
use crate::CliError;

/// Row bound of sum totalizations unless `--rows` is given.
pub const DEFAULT_ROWS: usize = 14;
/// Column stages of product towers unless `--cols` is given.
pub const DEFAULT_COLS: usize = 12;

pub fn policy(steps: Option<usize>, max_stages: Option<usize>, base: StabilizationPolicy) -> StabilizationPolicy {
    StabilizationPolicy {
        steps: steps.unwrap_or(base.steps),
        max_stages: max_stages.unwrap_or(base.max_stages),
        lookahead: base.lookahead,
    }
}

pub fn exact_row(label: impl Into<String>, dims: &[usize]) -> Row {
    Row { label: label.into(), entries: dims.iter().map(|&dim| Entry::Exact { dim }).collect() }
}

/// Source depth and column stages for `hp` in degrees up to `hi`: depth
/// `hi + 2K - 1`, with `K` lowered until the top level fits the window
/// budget.
pub fn hp_depth(a: &AlgebraPresentation, hi: i64, cols: usize) -> Result<(usize, usize), CliError> {
    let fits = |depth: i64| (a.dim() as f64).powi(depth as i32 + 1) <= (WINDOW_BUDGET / 4) as f64;
    let mut k = cols as i64;
    while k >= 1 && !fits(hi + 2 * k - 1) {
        k -= 1;
    }
    if k < 1 || hi + 2 * k - 1 < 0 {
        return Err(CliError::Compute(format!("no column stage of degree {hi} fits the window budget")));
    }
    Ok(((hi + 2 * k - 1) as usize, k as usize))
}

pub fn hp_of(a: &AlgebraPresentation, lo: i64, hi: i64, cols: usize, pol: &StabilizationPolicy) -> Result<Vec<Stabilized>, CliError> {
    let (depth, _) = hp_depth(a, hi, cols)?;
    Ok(hp_dims(&build_anat(a, depth)?, lo..=hi, pol)?)
}

fn module_of(arg: &str, p: u32) -> Result<CyclicGroupModule, CliError> {
    let f = field(p)?;
    let parts: Vec<&str> = arg.split(':').collect();
    let num = |s: &str| s.parse::<usize>().ok().filter(|&n| n >= 1).ok_or_else(|| CliError::Usage(format!("bad number {s:?} in --module")));
    match parts.as_slice() {
        ["trivial", order] => Ok(CyclicGroupModule::trivial(f, num(order)?, 1)),
        ["trivial", order, dim] => Ok(CyclicGroupModule::trivial(f, num(order)?, num(dim)?)),
        ["regular", order] => Ok(CyclicGroupModule::regular(f, num(order)?)),
        _ => Err(CliError::Usage(format!("--module expects trivial:ORDER[:DIM] or regular:ORDER, got {arg:?}"))),
    }
}

fn pages_table(name: String, page: &ConjugatePage, lo: i64, hi: i64) -> Table {
    let mut t = Table::degrees(name, lo, hi);
    let mut ks: Vec<i64> = page.cells.iter().map(|c| c.k).collect();
    ks.sort_unstable();
    ks.dedup();
    for k in ks {
        let entries = (lo..=hi).map(|n| Entry::Exact { dim: page.get(k, n).map_or(0, |c| c.dim) }).collect();
        t.rows.push(Row { label: format!("k={k}"), entries });
    }
    t
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<(Config, Body), CliError> {
    let c = &cli.common;
    let pol = policy(c.stab_steps, c.max_stages, StabilizationPolicy::default());
    let mut config = Config {
        algebra: None,
        p: c.p,
        degrees: c.degrees,
        rows: c.rows,
        cols: c.cols,
        policy: pol,
        seed: c.seed,
    };
    let mut body = Body::default();
    let algebra = || -> Result<(AlgebraPresentation, String), CliError> { load_algebra(c.algebra.as_deref(), c.p) };
    let degrees = |d: (i64, i64)| c.degrees.unwrap_or(d);
    match &cli.command {
        Command::Hh | Command::Hc => {
            let (a, name) = algebra()?;
            let (lo, hi) = degrees((0, 3));
            let e = build_anat(&a, (hi.max(0) + 1) as usize)?;
            let (title, dims) = if matches!(cli.command, Command::Hh) {
                ("HH", hh_dims(&e, lo..=hi)?)
            } else {
                ("HC", hc_dims(&e, lo..=hi)?)
            };
            let mut t = Table::degrees(title, lo, hi);
            t.rows.push(exact_row(&name, &dims));
            body.tables.push(t);
            config.algebra = Some(name);
            config.degrees = Some((lo, hi));
        }
        Command::Hp => {
            let (a, name) = algebra()?;
            let (lo, hi) = degrees((-2, 2));
            let (_, k) = hp_depth(&a, hi, c.cols.unwrap_or(DEFAULT_COLS))?;
            let dims = hp_of(&a, lo, hi, k, &pol)?;
            let mut t = Table::degrees("HP", lo, hi);
            t.rows.push(body.stabilized_row(&name, &dims));
            body.tables.push(t);
            config.algebra = Some(name);
            config.degrees = Some((lo, hi));
            config.cols = Some(k);
        }
        Command::Hpbar | Command::Cp | Command::Restricted { .. } => {
            let (a, name) = algebra()?;
            let (lo, hi) = degrees((-2, 2));
            let rows = c.rows.unwrap_or(DEFAULT_ROWS);
            let basis = AnatBasis::new(a);
            let runs: Vec<(&str, Vec<Stabilized>)> = match &cli.command {
                Command::Hpbar => vec![("HP-bar", hpbar_dims(&basis, lo..=hi, &pol, rows)?)],
                Command::Cp => vec![("cp", cp_poly_dims(&basis, lo..=hi, &pol, rows)?)],
                Command::Restricted { side } => {
                    let mut out = Vec::new();
                    if matches!(side, Side::Cpf | Side::Both) {
                        out.push(("CPf", restricted_dims(&basis, RestrictedSide::CPf, lo..=hi, &pol, rows)?));
                    }
                    if matches!(side, Side::Cpbarf | Side::Both) {
                        out.push(("CPbarf", restricted_dims(&basis, RestrictedSide::CPbarf, lo..=hi, &pol, rows)?));
                    }
                    out
                }
                _ => unreachable!("matched above"),
            };
            for (title, dims) in runs {
                let mut t = Table::degrees(title, lo, hi);
                t.rows.push(body.stabilized_row(&name, &dims));
                body.tables.push(t);
            }
            config.algebra = Some(name);
            config.degrees = Some((lo, hi));
            config.rows = Some(rows);
        }
        Command::Compare => {
            let (a, name) = algebra()?;
            let (lo, hi) = degrees((-2, 2));
            let rows = c.rows.unwrap_or(DEFAULT_ROWS);
            let r = compare_5dia(&AnatBasis::new(a), lo..=hi, &pol, rows)?;
            let mut t = Table::degrees(format!("theories of {name}"), lo, hi);
            for (label, dims) in [("cp", &r.cp), ("CPf", &r.cpf), ("CPbarf", &r.cpbarf), ("HP", &r.hp), ("HP-bar", &r.hpbar)] {
                let row = body.stabilized_row(label, dims);
                t.rows.push(row);
            }
            body.tables.push(t);
            let mut ranks = Table::degrees("map ranks", lo, hi);
            for m in &r.maps {
                if let Some(dims) = m.ranks.iter().copied().collect::<Option<Vec<usize>>>() {
                    ranks.rows.push(exact_row(&m.name, &dims));
                }
                map_check(&mut body, &m.name, &m.iso, lo, &m.reason);
            }
            body.tables.push(ranks);
            config.algebra = Some(name);
            config.degrees = Some((lo, hi));
            config.rows = Some(rows);
        }
        Command::Tate { module, kind, twisted } => {
            let p = c.p.unwrap_or(3);
            let m = module_of(module, p)?;
            let (lo, hi) = degrees((-4, 4));
            let e = CyclicGroupComplex::from_module(&m, 0);
            let kinds: Vec<(TateKind, &str)> = match kind {
                KindArg::Homology => vec![(TateKind::Homology, "homology")],
                KindArg::Tate => vec![(TateKind::Tate, "Tate")],
                KindArg::Cotate => vec![(TateKind::Cotate, "cotate")],
                KindArg::Poly => vec![(TateKind::Poly, "polynomial")],
                KindArg::All => vec![
                    (TateKind::Homology, "homology"),
                    (TateKind::Tate, "Tate"),
                    (TateKind::Cotate, "cotate"),
                    (TateKind::Poly, "polynomial"),
                ],
            };
            let mut t = Table::degrees(format!("{module} over F_{p}"), lo, hi);
            let span = lo.unsigned_abs().max(hi.unsigned_abs()) as usize;
            let sigma = if *twisted { e.twisted().sigma(0) } else { m.sigma().clone() };
            let brute = brute_group_homology(m.order(), &sigma, span);
            let mut compared = 0;
            let mut detail = Vec::new();
            for (k, label) in kinds {
                let dims = tate_dims(&e, k, *twisted, lo..=hi);
                for (n, &d) in (lo..=hi).zip(&dims) {
                    let want = match k {
                        TateKind::Homology if n >= 0 => Some(brute.group[n as usize]),
                        TateKind::Homology => Some(0),
                        TateKind::Tate => brute.tate.iter().find(|x| x.0 == n).map(|x| x.1),
                        _ => None,
                    };
                    if let Some(w) = want {
                        compared += 1;
                        if w != d {
                            detail.push(format!("{label} degree {n}: {d}, oracle {w}"));
                        }
                    }
                }
                t.rows.push(exact_row(label, &dims));
            }
            body.tables.push(t);
            body.check("oracle group homology agrees", detail.is_empty(), compared, detail);
            config.p = Some(p);
            config.degrees = Some((lo, hi));
        }
        Command::Subdivide { l } => {
            let (a, name) = algebra()?;
            let (lo, hi) = degrees((0, 3));
            let top = (hi.max(0) + 1) as usize;
            let e = build_anat(&a, l * (top + 1) - 1)?;
            let ew = e.edgewise(*l, top)?;
            body.relations(format!("i_{l}^* {name}: cyclic relations"), &check_cyclic_relations(&ew));
            let base = hc_dims(&e, lo..=hi)?;
            let sub = hc_dims(&ew, lo..=hi)?;
            let mut t = Table::degrees("HC", lo, hi);
            t.rows.push(exact_row(&name, &base));
            t.rows.push(exact_row(format!("i_{l}^* {name}"), &sub));
            body.tables.push(t);
            body.check("HC of the subdivision equals HC", base == sub, base.len(), vec![]);
            config.algebra = Some(name);
            config.degrees = Some((lo, hi));
        }
        Command::Psi { dims } => {
            let p = c.p.unwrap_or(3);
            let f = field(p)?;
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
            let m = random_complex(f, dims.0, dims.1, &mut rng);
            let r = psi_check(&m, c.seed, 8)?;
            let (lo, hi) = (m.lo(), m.hi());
            let mut t = Table::degrees("dimensions", lo, hi);
            t.rows.push(exact_row("M", &(lo..=hi).map(|n| m.dim(n)).collect::<Vec<_>>()));
            let idim: Vec<usize> = (lo..=hi).map(|n| r.i_dims.iter().find(|x| x.0 == n).map_or(0, |x| x.1)).collect();
            t.rows.push(exact_row("I(M^p)", &idim));
            body.tables.push(t);
            body.check(format!("M^{{⊗{p}}} is tight"), r.tightness.tight, r.tightness.degrees.len(), vec![]);
            body.check("dim I_n = dim M_n", r.degree_law, idim.len(), vec![]);
            body.check("ψ is bijective onto I", r.bijective, idim.len(), vec![]);
            let witness = r.additivity_witness.iter().map(|(n, x, y)| format!("degree {n}: x = {x:?}, y = {y:?}")).collect();
            body.check("ψ is additive", r.additive, 8 * idim.len(), witness);
            body.check(format!("ψ̃∘d = a·d∘ψ̃ with a = {}", r.constant), r.commutes, idim.len().saturating_sub(1), vec![]);
            config.p = Some(p);
        }
        Command::ConjE1 { window } => {
            let (a, name) = algebra()?;
            let (lo, hi) = degrees((-2, 2));
            let e1 = conjugate_e1(&a, lo..=hi, window.0..=window.1)?;
            let mut t = Table::degrees(format!("E1 of {name}"), lo, hi);
            for k in window.0..=window.1 {
                let cell = |n: i64| e1.cells.iter().find(|x| x.k == k && x.n == n).copied();
                t.rows.push(exact_row(format!("k={k}"), &(lo..=hi).map(|n| cell(n).map_or(0, |x| x.dim)).collect::<Vec<_>>()));
                if e1.p == 2 {
                    let eps: Vec<usize> = (lo..=hi).map(|n| cell(n).map_or(0, |x| x.eps_dim)).collect();
                    t.rows.push(exact_row(format!("k={k} ε"), &eps));
                }
            }
            t.rows.push(exact_row("total", &e1.totals.iter().map(|x| x.1).collect::<Vec<_>>()));
            body.tables.push(t);
            config.algebra = Some(name);
            config.degrees = Some((lo, hi));
        }
        Command::ConjPages => {
            let (a, name) = algebra()?;
            let (lo, hi) = degrees((0, 0));
            let rows = c.rows.unwrap_or(2);
            let pages = conjugate_pages(&a, rows, lo..=hi)?;
            for page in &pages.pages {
                body.tables.push(pages_table(format!("E{} of {name}", page.r), page, lo, hi));
            }
            let mut t = pages_table(format!("E_inf of {name}"), &pages.e_inf, lo, hi);
            t.rows.push(exact_row("total", &(lo..=hi).map(|n| pages.e_inf.total(n)).collect::<Vec<_>>()));
            t.rows.push(exact_row("homology", &pages.homology.iter().map(|x| x.1).collect::<Vec<_>>()));
            body.tables.push(t);
            let sums = (lo..=hi).all(|n| Some(pages.e_inf.total(n)) == pages.homology.iter().find(|x| x.0 == n).map(|x| x.1));
            body.check("E_inf sums to the homology of the window", sums, (hi - lo + 1) as usize, vec![]);
            body.check("E1(k, n) = E1(k-1, n+2) on exact cells", pages.periodic, pages.e_inf.cells.len(), vec![]);
            config.algebra = Some(name);
            config.degrees = Some((lo, hi));
            config.rows = Some(rows);
        }
        Command::Verify { suite } => {
            let cfg = SuiteConfig {
                p: c.p,
                seed: c.seed,
                steps: c.stab_steps,
                max_stages: c.max_stages,
                rows: c.rows,
                cols: c.cols,
            };
            body = run_suite(*suite, &cfg)?;
        }
    }
    Ok((config, body))
}

/// Adds a check for one comparison map from its per-degree iso flags.
pub fn map_check(body: &mut Body, name: &str, iso: &[Option<bool>], lo: i64, reason: &str) {
    let title = format!("{name} is an isomorphism");
    let mut detail: Vec<String> = iso
        .iter()
        .enumerate()
        .filter_map(|(k, x)| match x {
            Some(true) => None,
            Some(false) => Some(format!("degree {}: not an isomorphism", lo + k as i64)),
            None => Some(format!("degree {}: undetermined", lo + k as i64)),
        })
        .collect();
    if !reason.is_empty() && !detail.is_empty() {
        detail.push(reason.to_string());
    }
    if iso.contains(&Some(false)) {
        body.check(title, false, iso.len(), detail);
    } else if iso.iter().any(Option::is_none) {
        body.undetermined(title, iso.len(), detail);
    } else {
        body.check(title, true, iso.len(), detail);
    }
}

//! Verification suites. Each suite fills a [`Body`] with dimension tables
//! and named checks; the acceptance tests read the same bodies.

use cyclohom::complex::{MixedComplex, StabilizationPolicy, Stabilized};
use cyclohom::conjugate::{adaptedness_check, conjugate_e1, conjugate_pages, fit_constant, frobenius_constant, psi_check};
use cyclohom::cyclic::{
    build_anat, build_from_shorthand, check_cyclic_relations, check_mixed_relations, AlgebraPresentation, AnatBasis,
};
use cyclohom::gf_linalg::{FieldPrime, PrimeFieldMatrix};
use cyclohom::oracle::{bar_hh_dims, brute_group_homology};
use cyclohom::periodic::{
    build_tsygan, compare_5dia, cp_poly_dims, hc_dims, hh_dims, hpbar_dims, restricted_dims, RestrictedSide,
};
use cyclohom::tate::{build_k, extended_tate_dims, tate_dims, CyclicGroupComplex, CyclicGroupModule, TateKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::Suite;
use crate::commands::{exact_row, hp_depth, hp_of, map_check, policy, DEFAULT_COLS, DEFAULT_ROWS};
use crate::input::{change_basis, corpus, field, random_complex, random_invertible};
use crate::report::{Body, Entry, Row, Table};
use crate::CliError;

/// Flags forwarded to a suite; `None` selects the suite's own default.
#[derive(Debug, Clone, Default)]
pub struct SuiteConfig {
    pub p: Option<u32>,
    pub seed: u64,
    pub steps: Option<usize>,
    pub max_stages: Option<usize>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
}

impl SuiteConfig {
    fn primes(&self, default: &[u32]) -> Vec<u32> {
        self.p.map_or_else(|| default.to_vec(), |p| vec![p])
    }

    fn field(&self) -> Result<FieldPrime, CliError> {
        field(self.p.unwrap_or(3))
    }

    fn policy(&self, base: StabilizationPolicy) -> StabilizationPolicy {
        policy(self.steps, self.max_stages, base)
    }
}

/// Random samples per prime in the tensor-power suite.
pub const TENSOR_SAMPLES: usize = 50;
/// Degrees of the periodic theories in the suites.
pub const PERIODIC_DEGREES: (i64, i64) = (-2, 2);

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<Body, CliError> {
    let mut body = Body::default();
    match suite {
        Suite::Relations => relations(cfg, &mut body)?,
        Suite::Tate => tate(cfg, &mut body)?,
        Suite::Tensor => tensor(cfg, &mut body)?,
        Suite::Morita => morita(cfg, &mut body)?,
        Suite::Comparison => comparison(cfg, &mut body)?,
        Suite::Edgewise => edgewise(cfg, &mut body)?,
        Suite::Conjugate => conjugate(cfg, &mut body)?,
        Suite::Hochschild => hochschild(cfg, &mut body)?,
        Suite::Ground => ground(cfg, &mut body)?,
        Suite::Additivity => additivity(cfg, &mut body)?,
    }
    Ok(body)
}

fn revalidate(name: String, k: &MixedComplex, body: &mut Body) {
    let base = k.base();
    let bs = (base.lo()..=base.hi()).map(|n| k.b(n)).collect();
    let ok = MixedComplex::new(base.clone(), bs);
    let detail = ok.as_ref().err().map(|e| vec![e.to_string()]).unwrap_or_default();
    body.check(name, ok.is_ok(), (base.hi() - base.lo() + 1) as usize, detail);
}

fn relations(cfg: &SuiteConfig, body: &mut Body) -> Result<(), CliError> {
    for p in cfg.primes(&[2, 3, 5]) {
        let f = field(p)?;
        for (name, a) in corpus(f) {
            let e = build_anat(&a, 5)?;
            body.relations(format!("{name}: cyclic module relations"), &check_cyclic_relations(&e));
            body.relations(format!("{name}: (b, B) mixed complex"), &check_mixed_relations(&a, &e));
            let w = build_tsygan(&e, (-2, 2), 5)?;
            body.relations(format!("{name}: lattice maps and d² = 0"), &w.check_invariants());
            for l in [2, 3] {
                let ew = e.edgewise(l, 6 / l - 1)?;
                body.relations(format!("{name}: i_{l}^* relations"), &check_cyclic_relations(&ew));
                body.relations(format!("{name}: i_{l}^* restricted to Δ^o"), &ew.restrict_j().check());
            }
        }
        for (label, m) in [
            (format!("trivial Z/{p}"), CyclicGroupModule::trivial(f, p as usize, 1)),
            (format!("regular Z/{p}"), CyclicGroupModule::regular(f, p as usize)),
            ("regular Z/6".to_string(), CyclicGroupModule::regular(f, 6)),
        ] {
            let e = CyclicGroupComplex::from_module(&m, 0);
            revalidate(format!("K({label}) over F_{p}"), &build_k(&e), body);
            revalidate(format!("K({label}) twisted over F_{p}"), &build_k(&e.twisted()), body);
        }
    }
    Ok(())
}

/// Jordan block of size `k` (an indecomposable `F_p[Z/p]`-module for
/// `k <= p`), conjugated by a random invertible matrix.
fn jordan_module(f: FieldPrime, order: usize, k: usize, rng: &mut ChaCha8Rng) -> CyclicGroupModule {
    let cols = (0..k).map(|j| if j + 1 < k { vec![(j, 1), (j + 1, 1)] } else { vec![(j, 1)] }).collect();
    let j = PrimeFieldMatrix::from_columns(f, k, cols);
    let g = random_invertible(f, k, rng);
    let g_inv_cols = (0..k).map(|c| cyclohom::gf_linalg::solve(&g, &[(c, 1)]).expect("invertible")).collect();
    let g_inv = PrimeFieldMatrix::from_columns(f, k, g_inv_cols);
    let sigma = g.compose(&j).and_then(|x| x.compose(&g_inv)).expect("square");
    CyclicGroupModule::new(order, sigma).expect("order divides p")
}

fn tate(cfg: &SuiteConfig, body: &mut Body) -> Result<(), CliError> {
    let (lo, hi) = (-4i64, 4i64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for p in cfg.primes(&[2, 3, 5]) {
        let f = field(p)?;
        let pu = p as usize;
        let tate_of = |m: &CyclicGroupModule, twisted: bool| {
            tate_dims(&CyclicGroupComplex::from_module(m, 0), TateKind::Tate, twisted, lo..=hi)
        };
        let mut t = Table::degrees(format!("Tate homology over F_{p}"), lo, hi);
        let trivial = tate_of(&CyclicGroupModule::trivial(f, pu, 1), false);
        t.rows.push(exact_row(format!("trivial Z/{p}"), &trivial));
        body.check(format!("F_{p}: Tate homology of trivial Z/{p} is 1 everywhere"), trivial.iter().all(|&d| d == 1), trivial.len(), vec![]);
        let mut free_ok = true;
        for order in [pu, 2 * pu] {
            let d = tate_of(&CyclicGroupModule::regular(f, order), false);
            free_ok &= d.iter().all(|&x| x == 0);
            t.rows.push(exact_row(format!("regular Z/{order}"), &d));
        }
        body.check(format!("F_{p}: free modules have zero Tate homology"), free_ok, 2, vec![]);
        let mut coprime_ok = true;
        let coprime: Vec<usize> = (2..=5usize).filter(|q| q % pu != 0).collect();
        for &order in &coprime {
            let d = tate_of(&CyclicGroupModule::trivial(f, order, 2), false);
            coprime_ok &= d.iter().all(|&x| x == 0);
            t.rows.push(exact_row(format!("trivial Z/{order} (dim 2)"), &d));
        }
        body.check(format!("F_{p}: groups of order prime to p have zero Tate homology"), coprime_ok, coprime.len(), vec![]);
        // modules for the extended and oracle comparisons
        let mut modules = vec![
            (format!("trivial Z/{p}"), CyclicGroupModule::trivial(f, pu, 1)),
            (format!("trivial Z/{p} (dim 2)"), CyclicGroupModule::trivial(f, pu, 2)),
            (format!("regular Z/{p}"), CyclicGroupModule::regular(f, pu)),
            (format!("regular Z/{}", 2 * pu), CyclicGroupModule::regular(f, 2 * pu)),
        ];
        for k in 1..=pu {
            modules.push((format!("Jordan block {k} of Z/{p}"), jordan_module(f, pu, k, &mut rng)));
        }
        for order in (2..=5usize).filter(|q| q % pu != 0) {
            modules.push((format!("trivial Z/{order}"), CyclicGroupModule::trivial(f, order, 1)));
        }
        let mut ext_detail = Vec::new();
        let mut ext_count = 0;
        for (label, m) in &modules {
            let plain = tate_of(m, false);
            for r in [2, 3] {
                let ext = extended_tate_dims(m.order(), r * m.order(), m, lo..=hi)?;
                ext_count += 1;
                if ext != plain {
                    ext_detail.push(format!("{label} in Z/{}: {ext:?} vs {plain:?}", r * m.order()));
                }
            }
        }
        body.check(format!("F_{p}: extended complexes match plain ones"), ext_detail.is_empty(), ext_count, ext_detail);
        let mut or_detail = Vec::new();
        let mut or_count = 0;
        for (label, m) in &modules {
            for twisted in [false, true] {
                let e = CyclicGroupComplex::from_module(m, 0);
                let sigma = if twisted { e.twisted().sigma(0) } else { m.sigma().clone() };
                let brute = brute_group_homology(m.order(), &sigma, hi as usize);
                let group = tate_dims(&e, TateKind::Homology, twisted, 0..=hi);
                let tate = tate_dims(&e, TateKind::Tate, twisted, lo..=hi);
                let want_tate: Vec<usize> = brute.tate.iter().map(|x| x.1).collect();
                or_count += group.len() + tate.len();
                if group != brute.group || tate != want_tate {
                    or_detail.push(format!(
                        "{label}{}: group {group:?} vs {:?}, Tate {tate:?} vs {want_tate:?}",
                        if twisted { " twisted" } else { "" },
                        brute.group
                    ));
                }
            }
        }
        body.check(format!("F_{p}: brute-force group homology agrees"), or_detail.is_empty(), or_count, or_detail);
        body.tables.push(t);
    }
    Ok(())
}

fn tensor(cfg: &SuiteConfig, body: &mut Body) -> Result<(), CliError> {
    for p in cfg.primes(&[3, 5]) {
        let f = field(p)?;
        let a = frobenius_constant(f)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(31).wrapping_add(u64::from(p)));
        let mut fails: [Vec<String>; 5] = Default::default();
        let mut fits = Vec::new();
        let mut basis_detail = Vec::new();
        for i in 0..TENSOR_SAMPLES {
            let m = if i % 2 == 0 {
                random_complex(f, rng.gen_range(1..=4), None, &mut rng)
            } else {
                let (x, y) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
                random_complex(f, x, Some(y), &mut rng)
            };
            let shape: Vec<usize> = (m.lo()..=m.hi()).map(|n| m.dim(n)).collect();
            let r = psi_check(&m, rng.gen(), 4)?;
            let flags = [r.tightness.tight, r.additive, r.bijective, r.degree_law, r.commutes];
            for (k, ok) in flags.iter().enumerate() {
                if !ok {
                    fails[k].push(format!("sample {i} with dims {shape:?}"));
                }
            }
            let fit = fit_constant(&m)?;
            let moved = fit_constant(&change_basis(&m, &mut rng))?;
            if fit.a != moved.a || !fit.consistent || !moved.consistent {
                basis_detail.push(format!("sample {i}: {:?} vs {:?}", fit, moved));
            }
            fits.extend(fit.a);
        }
        let names = [
            format!("F_{p}: M^{{⊗{p}}} is tight"),
            format!("F_{p}: ψ is additive"),
            format!("F_{p}: ψ is bijective onto I"),
            format!("F_{p}: I obeys the degree-×p law"),
            format!("F_{p}: ψ̃∘d = a·d∘ψ̃ with a = {a}"),
        ];
        for (name, detail) in names.into_iter().zip(fails) {
            body.check(name, detail.is_empty(), TENSOR_SAMPLES, detail);
        }
        body.check(format!("F_{p}: a is basis-independent"), basis_detail.is_empty(), TENSOR_SAMPLES, basis_detail);
        let others: Vec<String> = fits.iter().filter(|&&x| x != a).map(|x| format!("fitted a = {x}")).collect();
        body.check(
            format!("F_{p}: a = {a} for every M ({} fits)", fits.len()),
            others.is_empty() && !fits.is_empty(),
            fits.len(),
            others,
        );
    }
    Ok(())
}

/// Stabilized dims as optional values, for comparisons.
fn dims_of(s: &[Stabilized]) -> Option<Vec<usize>> {
    s.iter().map(Stabilized::dim).collect()
}

fn stabilized_equal(body: &mut Body, name: String, x: &[Stabilized], y: &[Stabilized]) -> bool {
    match (dims_of(x), dims_of(y)) {
        (Some(a), Some(b)) => body.check(name, a == b, a.len(), if a == b { vec![] } else { vec![format!("{a:?} vs {b:?}")] }),
        _ => {
            body.undetermined(name, x.len(), vec![format!("bounds {:?} and {:?}", bounds(x), bounds(y))]);
            false
        }
    }
}

fn bounds(s: &[Stabilized]) -> Vec<(usize, usize)> {
    s.iter().map(Stabilized::bounds).collect()
}

fn build(f: FieldPrime, s: &str) -> AlgebraPresentation {
    build_from_shorthand(f, s).expect("suite builders are valid")
}

fn morita(cfg: &SuiteConfig, body: &mut Body) -> Result<(), CliError> {
    let f = cfg.field()?;
    let p = f.p();
    let (lo, hi) = PERIODIC_DEGREES;
    let rows = cfg.rows.unwrap_or(11);
    let pol = cfg.policy(StabilizationPolicy { steps: 2, max_stages: 16, lookahead: 2 });
    let field_alg = build(f, "field");
    let matrices = build(f, "matrix:2");
    let mut hh = Table::degrees("HH", 0, 3);
    let mut bar = Table::degrees("HP-bar", lo, hi);
    let mut dims = Vec::new();
    for (label, a) in [(format!("F_{p}"), &field_alg), (format!("M_2(F_{p})"), &matrices)] {
        hh.rows.push(exact_row(&label, &hh_dims(&build_anat(a, 4)?, 0..=3)?));
        let d = hpbar_dims(&AnatBasis::new(a.clone()), lo..=hi, &pol, rows)?;
        bar.rows.push(body.stabilized_row(&label, &d));
        dims.push(d);
    }
    let same_hh = hh.rows[0].entries == hh.rows[1].entries;
    body.tables.push(hh);
    body.tables.push(bar);
    body.check(format!("HH(M_2(F_{p})) = HH(F_{p})"), same_hh, 4, vec![]);
    stabilized_equal(body, format!("HP-bar(M_2(F_{p})) = HP-bar(F_{p}), certified within rows {rows}"), &dims[1], &dims[0]);
    Ok(())
}

fn comparison(cfg: &SuiteConfig, body: &mut Body) -> Result<(), CliError> {
    let f = cfg.field()?;
    let (lo, hi) = PERIODIC_DEGREES;
    let rows = cfg.rows.unwrap_or(DEFAULT_ROWS);
    let pol = cfg.policy(StabilizationPolicy::default());
    for (name, a) in corpus(f) {
        let bounded = a.is_dg() || a.degrees().iter().any(|&d| d != 0);
        let r = compare_5dia(&AnatBasis::new(a), lo..=hi, &pol, rows)?;
        let mut t = Table::degrees(format!("theories of {name}"), lo, hi);
        for (label, dims) in [("cp", &r.cp), ("CPf", &r.cpf), ("CPbarf", &r.cpbarf), ("HP", &r.hp), ("HP-bar", &r.hpbar)] {
            let row = body.stabilized_row(label, dims);
            t.rows.push(row);
        }
        body.tables.push(t);
        let wanted: &[&str] = if bounded { &["r", "R"] } else { &["l", "r", "R"] };
        for m in r.maps.iter().filter(|m| wanted.contains(&m.name.as_str())) {
            map_check(body, &format!("{name}: {}", m.name), &m.iso, lo, &m.reason);
        }
    }
    Ok(())
}

fn ground(cfg: &SuiteConfig, body: &mut Body) -> Result<(), CliError> {
    let (lo, hi) = PERIODIC_DEGREES;
    let pol = cfg.policy(StabilizationPolicy::default());
    let cols = cfg.cols.unwrap_or(DEFAULT_COLS);
    let mut t = Table::degrees("HP of the ground field", lo, hi);
    for p in cfg.primes(&[2, 3, 5]) {
        let f = field(p)?;
        let a = build(f, "field");
        let d = hp_of(&a, lo, hi, cols, &pol)?;
        let want: Vec<usize> = (lo..=hi).map(|n| usize::from(n % 2 == 0)).collect();
        match dims_of(&d) {
            Some(x) => {
                body.check(format!("HP(F_{p}) is 1 in even and 0 in odd degrees"), x == want, x.len(), vec![]);
            }
            None => body.undetermined(format!("HP(F_{p}) is 1 in even and 0 in odd degrees"), d.len(), vec![]),
        }
        t.rows.push(body.stabilized_row(format!("F_{p}"), &d));
        // N† on even columns and 1-σ† on odd ones, per row
        let rows = 8;
        let e = build_anat(&a, rows)?;
        let w = build_tsygan(&e, (-2, 2), rows)?;
        let mut detail = Vec::new();
        let mut ok = true;
        for m in 0..=rows {
            let (norm, diff) = (w.horizontal(0, m).get(0, 0), w.horizontal(1, m).get(0, 0));
            let want = if m % 2 == 0 { (((m + 1) as u32) % p, 0) } else { (0, 2 % p) };
            ok &= (norm, diff) == want;
            detail.push(format!("row {m}: N† = {norm}, 1-σ† = {diff}"));
        }
        body.check(format!("F_{p}: lattice multipliers alternate (m+1, 0) and (0, 2)"), ok, rows + 1, detail);
    }
    body.tables.push(t);
    Ok(())
}

fn edgewise(cfg: &SuiteConfig, body: &mut Body) -> Result<(), CliError> {
    let f = cfg.field()?;
    let l = f.p() as usize;
    let top = 4;
    let mut t = Table::degrees("HC", 0, 3);
    for s in ["field", "truncpoly:2"] {
        let a = build(f, s);
        let name = if s == "field" { format!("F_{}", f.p()) } else { format!("F_{}[x]/x^2", f.p()) };
        let e = build_anat(&a, l * (top + 1) - 1)?;
        let ew = e.edgewise(l, top)?;
        body.relations(format!("i_{l}^* {name}: cyclic module relations"), &check_cyclic_relations(&ew));
        let base = hc_dims(&e, 0..=3)?;
        let sub = hc_dims(&ew, 0..=3)?;
        body.check(format!("HC(i_{l}^* {name}) = HC({name})"), base == sub, 4, vec![format!("{sub:?} vs {base:?}")]);
        t.rows.push(exact_row(&name, &base));
        t.rows.push(exact_row(format!("i_{l}^* {name}"), &sub));
    }
    body.tables.push(t);
    Ok(())
}

fn hochschild(cfg: &SuiteConfig, body: &mut Body) -> Result<(), CliError> {
    let mut t = Table::degrees("HH", 0, 4);
    for p in cfg.primes(&[2, 3, 5]) {
        for (name, a) in corpus(field(p)?) {
            let lattice = hh_dims(&build_anat(&a, 5)?, 0..=4)?;
            let bar = bar_hh_dims(&a, 4).map_err(|e| CliError::Compute(e.to_string()))?;
            body.check(format!("{name}: lattice HH = bar-complex HH"), lattice == bar, 5, vec![format!("{lattice:?} vs {bar:?}")]);
            t.rows.push(exact_row(&name, &lattice));
        }
    }
    body.tables.push(t);
    Ok(())
}

fn conjugate(cfg: &SuiteConfig, body: &mut Body) -> Result<(), CliError> {
    let f = cfg.field()?;
    let p = f.p();
    let (lo, hi) = PERIODIC_DEGREES;
    let window = (-1i64, 1i64);
    let rows = cfg.rows.unwrap_or(DEFAULT_ROWS);
    let pol = cfg.policy(StabilizationPolicy::default());
    let algebras = [
        (format!("F_{p}"), "field", true),
        (format!("F_{p}xF_{p}"), "product:field,field", true),
        (format!("M_2(F_{p})"), "matrix:2", true),
        (format!("F_{p}[x]/x^2"), "truncpoly:2", false),
    ];
    for (name, s, smooth) in algebras {
        let a = build(f, s);
        let ad = adaptedness_check(&a, if a.dim() <= 2 { 2 } else { 1 })?;
        let bad: Vec<String> = ad.failures().iter().map(|l| format!("level {l}")).collect();
        body.check(format!("{name}: i_{p}^* A♮ is {p}-adapted"), ad.passed(), ad.levels.len(), bad);
        let e1 = conjugate_e1(&a, lo..=hi, window.0..=window.1)?;
        let hp = hpbar_dims(&AnatBasis::new(a.clone()), lo..=hi, &pol, rows)?;
        let mut t = Table::degrees(format!("conjugate E1 of {name}"), lo, hi);
        for k in window.0..=window.1 {
            let dims: Vec<usize> = (lo..=hi)
                .map(|n| e1.cells.iter().find(|c| c.k == k && c.n == n).map_or(0, |c| c.dim + c.eps_dim))
                .collect();
            t.rows.push(exact_row(format!("k={k}"), &dims));
        }
        let totals: Vec<usize> = e1.totals.iter().map(|x| x.1).collect();
        t.rows.push(exact_row("window total", &totals));
        t.rows.push(body.stabilized_row("HP-bar", &hp));
        body.tables.push(t);
        let hp_dims = dims_of(&hp);
        let name_deg = if smooth {
            format!("{name}: E1 equals HP-bar degreewise")
        } else {
            format!("{name}: window E1 total >= HP-bar degreewise")
        };
        match &hp_dims {
            Some(d) => {
                let ok = if smooth { &totals == d } else { totals.iter().zip(d).all(|(x, y)| x >= y) };
                body.check(name_deg, ok, d.len(), vec![format!("E1 {totals:?}, HP-bar {d:?}")]);
            }
            None => body.undetermined(
                name_deg,
                totals.len(),
                vec![format!("E1 {totals:?}; HP-bar has no certificate, bounds {:?}", bounds(&hp))],
            ),
        }
        if !smooth && p != 2 {
            let pages = conjugate_pages(&a, 2, 0..=0)?;
            let inf = pages.e_inf.total(0);
            let trunc = pages.homology[0].1;
            body.check(
                format!("{name}: E_inf sums to the homology of the rows <= 2 window"),
                inf == trunc,
                1,
                vec![format!("E_inf total {inf}, window homology {trunc}")],
            );
            let title = format!("{name}: conjugate pages reach E_inf summing to HP-bar in degree 0");
            let pos = (0 - lo) as usize;
            match hp_dims.as_ref().map(|d| d[pos]) {
                Some(d) => {
                    body.check(title, inf == d, 1, vec![format!("E_inf total {inf}, HP-bar {d}, pages {}", pages.pages.len())]);
                }
                None => body.undetermined(
                    title,
                    1,
                    vec![format!("E_inf total {inf} on rows <= 2; HP-bar bounds {:?}", hp[pos].bounds())],
                ),
            }
        }
    }
    Ok(())
}

fn additivity(cfg: &SuiteConfig, body: &mut Body) -> Result<(), CliError> {
    let f = cfg.field()?;
    let p = f.p();
    let (lo, hi) = PERIODIC_DEGREES;
    let rows = cfg.rows.unwrap_or(DEFAULT_ROWS);
    let pol = cfg.policy(StabilizationPolicy::default());
    let single = build(f, "field");
    let double = build(f, "product:field,field");
    let (_, cols) = hp_depth(&double, hi, cfg.cols.unwrap_or(DEFAULT_COLS))?;
    let specs = [
        ("HH", (0, 4)),
        ("HC", (0, 4)),
        ("HP", (lo, hi)),
        ("HP-bar", (lo, hi)),
        ("cp", (lo, hi)),
        ("CPf", (lo, hi)),
        ("CPbarf", (lo, hi)),
        ("HC of the subdivision", (0, 3)),
        ("conjugate E1 total", (lo, hi)),
    ];
    let exact = |v: Vec<usize>| v.into_iter().map(|dim| Entry::Exact { dim }).collect::<Vec<_>>();
    let mut per_algebra: Vec<Vec<Vec<Entry>>> = Vec::new();
    for a in [&single, &double] {
        let e = build_anat(a, 5)?;
        let basis = AnatBasis::new(a.clone());
        let ew = build_anat(a, p as usize * 5 - 1)?.edgewise(p as usize, 4)?;
        let e1 = conjugate_e1(a, lo..=hi, -1..=1)?;
        let mut stab = |s: Vec<Stabilized>| s.iter().map(|x| body.entry(x)).collect::<Vec<_>>();
        per_algebra.push(vec![
            exact(hh_dims(&e, 0..=4)?),
            exact(hc_dims(&e, 0..=4)?),
            stab(hp_of(a, lo, hi, cols, &pol)?),
            stab(hpbar_dims(&basis, lo..=hi, &pol, rows)?),
            stab(cp_poly_dims(&basis, lo..=hi, &pol, rows)?),
            stab(restricted_dims(&basis, RestrictedSide::CPf, lo..=hi, &pol, rows)?),
            stab(restricted_dims(&basis, RestrictedSide::CPbarf, lo..=hi, &pol, rows)?),
            exact(hc_dims(&ew, 0..=3)?),
            exact(e1.totals.iter().map(|x| x.1).collect()),
        ]);
    }
    for (k, (name, (a, b))) in specs.into_iter().enumerate() {
        let (x, y) = (&per_algebra[0][k], &per_algebra[1][k]);
        let mut t = Table::degrees(name, a, b);
        t.rows.push(Row { label: format!("F_{p}"), entries: x.clone() });
        t.rows.push(Row { label: format!("F_{p}xF_{p}"), entries: y.clone() });
        body.tables.push(t);
        let title = format!("{name}(F_{p}xF_{p}) = 2·{name}(F_{p})");
        let pairs: Option<Vec<(usize, usize)>> = x.iter().zip(y).map(|(u, v)| Some((u.dim()?, v.dim()?))).collect();
        match pairs {
            Some(pairs) => {
                let ok = pairs.iter().all(|&(u, v)| v == 2 * u);
                body.check(title, ok, pairs.len(), if ok { vec![] } else { vec![format!("{pairs:?}")] });
            }
            None => body.undetermined(title, x.len(), vec![]),
        }
    }
    Ok(())
}

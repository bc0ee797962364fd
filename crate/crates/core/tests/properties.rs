use cyclohom::complex::{cone, ChainComplex, ChainMap};
use cyclohom::cyclic::{build_anat, build_from_shorthand, check_cyclic_relations, check_mixed_relations, product};
use cyclohom::gf_linalg::{solve, FieldPrime, PrimeFieldMatrix, Subspace};
use cyclohom::oracle::{bar_hh_dims, brute_group_homology};
use cyclohom::periodic::hh_dims;
use cyclohom::tate::{tate_dims, CyclicGroupComplex, CyclicGroupModule, TateKind};
use proptest::prelude::*;

fn field(p: u32) -> FieldPrime {
    FieldPrime::new(u64::from(p)).unwrap()
}

fn matrix(p: u32, rows: usize, cols: usize) -> impl Strategy<Value = PrimeFieldMatrix> {
    proptest::collection::vec(0..i64::from(p), rows * cols).prop_map(move |xs| {
        let dense: Vec<Vec<i64>> = if cols == 0 { vec![vec![]; rows] } else { xs.chunks(cols).map(<[i64]>::to_vec).collect() };
        PrimeFieldMatrix::from_dense(field(p), &dense)
    })
}

fn invertible(p: u32, n: usize) -> impl Strategy<Value = PrimeFieldMatrix> {
    matrix(p, n, n).prop_filter("invertible", move |m| m.rank() == n)
}

fn inverse(g: &PrimeFieldMatrix) -> PrimeFieldMatrix {
    let cols = (0..g.ncols()).map(|j| solve(g, &[(j, 1)]).unwrap()).collect();
    PrimeFieldMatrix::from_columns(g.field(), g.nrows(), cols)
}

/// `trivial` copies of the trivial module followed by `regular` copies of
/// the regular one.
fn block_module(f: FieldPrime, order: usize, trivial: usize, regular: usize) -> PrimeFieldMatrix {
    let dim = trivial + regular * order;
    let cols = (0..dim)
        .map(|j| {
            if j < trivial {
                vec![(j, 1)]
            } else {
                let (block, k) = ((j - trivial) / order, (j - trivial) % order);
                vec![(trivial + block * order + (k + 1) % order, 1)]
            }
        })
        .collect();
    PrimeFieldMatrix::from_columns(f, dim, cols)
}

fn two_term(p: u32) -> impl Strategy<Value = ChainComplex> {
    (1usize..=3, 1usize..=3).prop_flat_map(move |(a, b)| {
        matrix(p, a, b).prop_map(move |d| {
            ChainComplex::new(field(p), 0, vec![a, b], vec![PrimeFieldMatrix::zeros(field(p), 0, a), d]).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rank_is_transpose_invariant(m in matrix(5, 4, 6)) {
        prop_assert_eq!(m.rank(), m.transpose().rank());
    }

    #[test]
    fn rank_of_product_is_bounded(a in matrix(3, 4, 3), b in matrix(3, 3, 5)) {
        let ab = a.compose(&b).unwrap();
        prop_assert!(ab.rank() <= a.rank().min(b.rank()));
    }

    #[test]
    fn solve_recovers_consistent_systems(m in matrix(7, 5, 4), x in proptest::collection::vec(0u32..7, 4)) {
        let xs: Vec<(usize, u32)> = x.iter().copied().enumerate().filter(|&(_, c)| c != 0).collect();
        let b = m.mul_vec(&xs);
        let y = solve(&m, &b).unwrap();
        prop_assert_eq!(m.mul_vec(&y), b);
    }

    #[test]
    fn subspace_dimension_formula(u in matrix(3, 6, 3), v in matrix(3, 6, 4)) {
        let f = field(3);
        let (su, sv) = (
            Subspace::from_vectors(f, 6, u.columns().to_vec()),
            Subspace::from_vectors(f, 6, v.columns().to_vec()),
        );
        prop_assert_eq!(su.sum(&sv).dim() + su.intersect(&sv).dim(), su.dim() + sv.dim());
        prop_assert!(su.sum(&sv).contains_subspace(&su));
        prop_assert!(su.contains_subspace(&su.intersect(&sv)));
    }

    #[test]
    fn homology_has_the_euler_characteristic_of_the_chains(c in two_term(3)) {
        let chi: i64 = (c.lo()..=c.hi()).map(|n| if n % 2 == 0 { c.homology_dim(n) as i64 } else { -(c.homology_dim(n) as i64) }).sum();
        prop_assert_eq!(chi, c.euler_characteristic());
    }

    #[test]
    fn homology_is_additive_and_cones_of_identities_are_acyclic(c in two_term(5), d in two_term(5)) {
        let s = c.direct_sum(&d);
        for n in 0..=1 {
            prop_assert_eq!(s.homology_dim(n), c.homology_dim(n) + d.homology_dim(n));
        }
        let k = cone(&ChainMap::identity(&c));
        for n in k.lo()..=k.hi() {
            prop_assert_eq!(k.homology_dim(n), 0);
        }
    }

    #[test]
    fn tate_homology_counts_trivial_summands(
        p in prop_oneof![Just(2u32), Just(3), Just(5)],
        trivial in 0usize..=2,
        regular in 0usize..=2,
        seed in 0u32..1000,
    ) {
        let f = field(p);
        let order = p as usize;
        let sigma = block_module(f, order, trivial, regular);
        let dim = sigma.nrows();
        prop_assume!(dim > 0);
        // conjugate by a unitriangular change of basis derived from the seed
        let g = PrimeFieldMatrix::from_columns(
            f,
            dim,
            (0..dim).map(|j| {
                let mut col = vec![(j, 1)];
                if j + 1 < dim {
                    col.push((j + 1, seed % p));
                }
                col
            }).collect(),
        );
        let conj = g.compose(&sigma).unwrap().compose(&inverse(&g)).unwrap();
        let m = CyclicGroupModule::new(order, conj.clone()).unwrap();
        let dims = tate_dims(&CyclicGroupComplex::from_module(&m, 0), TateKind::Tate, false, -3..=3);
        prop_assert_eq!(&dims, &vec![trivial; 7]);
        let brute = brute_group_homology(order, &conj, 3);
        prop_assert_eq!(brute.tate.iter().map(|x| x.1).collect::<Vec<_>>(), dims);
    }

    #[test]
    fn tate_homology_is_two_periodic(g in invertible(3, 3), twisted in any::<bool>()) {
        let f = field(3);
        let sigma = block_module(f, 3, 0, 1);
        let conj = g.compose(&sigma).unwrap().compose(&inverse(&g)).unwrap();
        let m = CyclicGroupModule::new(3, conj).unwrap();
        let dims = tate_dims(&CyclicGroupComplex::from_module(&m, 0), TateKind::Tate, twisted, -4..=4);
        for i in 0..dims.len() - 2 {
            prop_assert_eq!(dims[i], dims[i + 2]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn algebra_cyclic_modules_satisfy_relations_and_match_the_bar_complex(
        p in prop_oneof![Just(2u32), Just(3), Just(5)],
        s in prop_oneof![Just("field"), Just("truncpoly:2"), Just("truncpoly:3"), Just("matrix:2"), Just("group:2"), Just("exterior")],
    ) {
        let a = build_from_shorthand(field(p), s).unwrap();
        let e = build_anat(&a, 3).unwrap();
        let r = check_cyclic_relations(&e);
        prop_assert!(r.passed(), "{:?}", r.failures);
        let r = check_mixed_relations(&a, &e);
        prop_assert!(r.passed(), "{:?}", r.failures);
        prop_assert_eq!(hh_dims(&e, 0..=2).unwrap(), bar_hh_dims(&a, 2).unwrap());
    }

    #[test]
    fn hochschild_homology_is_additive(
        p in prop_oneof![Just(3u32), Just(5)],
        s in prop_oneof![Just("field"), Just("truncpoly:2"), Just("group:2")],
        t in prop_oneof![Just("field"), Just("truncpoly:2")],
    ) {
        let (a, b) = (build_from_shorthand(field(p), s).unwrap(), build_from_shorthand(field(p), t).unwrap());
        let ab = product(&a, &b).unwrap();
        let hh = |x| hh_dims(&build_anat(x, 3).unwrap(), 0..=2).unwrap();
        let (x, y, z) = (hh(&a), hh(&b), hh(&ab));
        for n in 0..3 {
            prop_assert_eq!(z[n], x[n] + y[n]);
        }
    }
}

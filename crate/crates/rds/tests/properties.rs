//! Randomized structural invariants across the crate, checked with
//! proptest on small instances.

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_traits::Zero;
use proptest::prelude::*;
use rds::base::{BaseSystem, ExtensionRule, SymbolSequence};
use rds::interval::{q, IntervalUnion, Q};
use rds::maps::{IntervalMapCocycle, PiecewiseAffineMap};
use rds::matrix::{cocycle_product_exact, lyapunov_of_vector, lyapunov_spectrum, MatrixCocycle};
use rds::meta::{survivor_measures, RandomSignSet, Side};
use rds::pi::pi_binary_digits;
use rds::sft::{cylinder_count, decompose, enumerate_cylinders, RandomSFT};

fn window_sequence(window: Vec<u8>) -> SymbolSequence {
    SymbolSequence::new(
        2,
        0,
        window,
        ExtensionRule::Constant(1),
        ExtensionRule::Constant(1),
    )
    .unwrap()
}

fn example4_cocycle() -> MatrixCocycle {
    let (c, _) = rds::examples::example4();
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Shorter digit expansions are prefixes of longer ones.
    #[test]
    fn digit_prefix_determinism(n in 1usize..400, extra in 1usize..400) {
        let short = pi_binary_digits(n).unwrap();
        let long = pi_binary_digits(n + extra).unwrap();
        prop_assert_eq!(&short[..], &long[..n]);
    }

    /// Shifting by n then m reads the same symbols as shifting by n + m.
    #[test]
    fn shift_group_law(
        window in proptest::collection::vec(1u8..=2, 5..30),
        n in -10i64..10,
        m in -10i64..10,
        i in -5i64..5,
    ) {
        let omega = window_sequence(window);
        let a = omega.shifted(n).shifted(m).get(i).unwrap();
        let b = omega.shifted(n + m).get(i).unwrap();
        prop_assert_eq!(a, b);
    }

    /// Exact cocycle law: the (n + m)-step product splits at time n.
    #[test]
    fn cocycle_law_exact(
        window in proptest::collection::vec(1u8..=2, 12..20),
        n in 0i64..6,
        m in 0i64..6,
    ) {
        let c = example4_cocycle();
        let omega = window_sequence(window);
        let full = cocycle_product_exact(&c, &omega, n + m).unwrap();
        let left = cocycle_product_exact(&c, &omega, n).unwrap();
        let right = cocycle_product_exact(&c, &omega.shifted(n), m).unwrap();
        let k = c.dim();
        let mut prod = vec![vec![BigUint::zero(); k]; k];
        for i in 0..k {
            for l in 0..k {
                for j in 0..k {
                    prod[i][j] += &left[i][l] * &right[l][j];
                }
            }
        }
        prop_assert_eq!(full, prod);
    }

    /// Interval unions satisfy the inclusion-exclusion measure identity
    /// exactly in rational arithmetic.
    #[test]
    fn interval_measure_identity(
        a in proptest::collection::vec((0i64..40, 1i64..8), 1..4),
        b in proptest::collection::vec((0i64..40, 1i64..8), 1..4),
    ) {
        let mk = |parts: &[(i64, i64)]| {
            IntervalUnion::from_parts(
                parts.iter().map(|&(lo, len)| (q(lo, 40), q(lo + len, 40))).collect(),
            )
        };
        let (a, b) = (mk(&a), mk(&b));
        let lhs = a.union(&b).measure() + a.intersect(&b).measure();
        prop_assert_eq!(lhs, a.measure() + b.measure());
    }

    /// Any strictly positive start vector grows at the leading exponent.
    #[test]
    fn positive_vector_exponent_collapse(
        window in proptest::collection::vec(1u8..=2, 110..130),
        v in proptest::collection::vec(0.5f64..1.5, 4),
    ) {
        let c = example4_cocycle();
        let omega = window_sequence(window);
        let l1 = lyapunov_spectrum(&c, &omega, 100, 1).unwrap().exponent(0);
        let lv = lyapunov_of_vector(&c, &omega, &v, 100).unwrap();
        prop_assert!((lv - l1).abs() <= 2.0 / 100.0, "lv = {lv}, l1 = {l1}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Survivor measures never increase with the horizon. Depth stays
    /// small: the exact interval-union recursion doubles its parts per
    /// level.
    #[test]
    fn survivor_measures_monotone(hole_start in 1i64..7, hole_len in 1i64..3) {
        let c = IntervalMapCocycle::new(
            vec![
                PiecewiseAffineMap::doubling(Q::zero()),
                PiecewiseAffineMap::doubling(q(3, 5)),
            ],
            BaseSystem::full_shift(2),
            None,
        )
        .unwrap();
        let omega = rds::base::build_omega_star(rds::base::OmegaStar::Example2).unwrap();
        let hole = IntervalUnion::interval(q(hole_start, 10), q(hole_start + hole_len, 10));
        let hold = hole.complement();
        let sets = RandomSignSet::Intervals(vec![(hold, hole); 9]);
        let ms = survivor_measures(&c, &sets, Side::Plus, &omega, 8).unwrap();
        for w in ms.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }

    /// Matrix-sum cylinder counts equal direct enumeration on random
    /// adjacency pairs.
    #[test]
    fn cylinder_counts_match_enumeration(
        bits in proptest::collection::vec(proptest::bool::ANY, 32),
        window in proptest::collection::vec(1u8..=2, 12..16),
        n in 1i64..=10,
    ) {
        let dense = |offset: usize| {
            DMatrix::from_fn(4, 4, |i, j| {
                // Keep rows nonempty so the shift never empties.
                if i == j || bits[offset + 4 * i + j] { 1.0 } else { 0.0 }
            })
        };
        let c = MatrixCocycle::new(vec![dense(0), dense(16)], BaseSystem::full_shift(2)).unwrap();
        let sft = RandomSFT::new(c).unwrap();
        let omega = window_sequence(window);
        prop_assert_eq!(
            cylinder_count(&sft, &omega, n).unwrap(),
            enumerate_cylinders(&sft, &omega, n).unwrap()
        );
    }

    /// Structural decomposition invariants: B keeps only A-edges between
    /// consecutive plus-sets, and B' edges touch no B-edge endpoint.
    #[test]
    fn decomposition_edge_invariants(window in proptest::collection::vec(1u8..=2, 60..70)) {
        let c = example4_cocycle();
        let omega = window_sequence(window);
        let path = match rds::matrix::oseledets_vector(&c, &omega, 2, 15, 15, 20) {
            Ok(p) => p,
            // A random window can sit on a degenerate gap; nothing to check.
            Err(rds::error::RdsError::DegenerateSplitting(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let sft = RandomSFT::new(example4_cocycle()).unwrap();
        let (b, b2) = decompose(&sft, &omega, &path, 20).unwrap();
        for n in 0..20usize {
            let a = sft.cocycle.matrix_at(&omega, n as i64).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    if b.matrices[n][i][j] == 1 {
                        prop_assert_eq!(a[(i, j)], 1.0);
                        prop_assert!(b.index_sets[n].contains(&i));
                        prop_assert!(b.index_sets[n + 1].contains(&j));
                    }
                    if b2.matrices[n][i][j] == 1 {
                        prop_assert_eq!(a[(i, j)], 1.0);
                        prop_assert!(b.matrices[n][i].iter().all(|&x| x == 0));
                        prop_assert!((0..4).all(|r| b.matrices[n][r][j] == 0));
                    }
                }
            }
        }
    }
}

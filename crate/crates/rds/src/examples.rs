//! Concrete model systems used by the binary and the acceptance tests:
//! a pair of shifted doubling maps with null-pushforward observables,
//! and a pair of 4x4 adjacency matrices driven by the binary digit
//! sequence.

use crate::base::{build_omega_star, BaseSystem, OmegaStar, SymbolSequence};
use crate::interval::{q, IntervalUnion, Q};
use crate::maps::{IntervalMapCocycle, MarkovPartition, PiecewiseAffineMap};
use crate::matrix::MatrixCocycle;
use crate::step::StepFunction;
use nalgebra::DMatrix;
use num_traits::Zero;

/// Doubling-map pair T_i(x) = 2x + alpha_i mod 1 with alpha = (0, 3/5),
/// driven by the binary digit sequence, plus per-symbol g with
/// L_i g_i = 0 and the invariant density h = 1.
pub fn example2() -> (
    IntervalMapCocycle,
    SymbolSequence,
    Vec<StepFunction>,
    Vec<StepFunction>,
) {
    let base = BaseSystem::full_shift(2);
    let c = IntervalMapCocycle::new(
        vec![
            PiecewiseAffineMap::doubling(Q::zero()),
            PiecewiseAffineMap::doubling(q(3, 5)),
        ],
        base,
        Some(MarkovPartition::uniform(10)),
    )
    .unwrap();
    let omega = build_omega_star(OmegaStar::Example2).unwrap();
    // g_i is -1/2 on the half-interval starting at alpha_i and +1/2 on
    // the other half; the two preimages of any point under T_i then sit
    // on opposite signs, so L_i g_i = 0.
    let g0 = StepFunction::new(vec![q(0, 1), q(1, 2), q(1, 1)], vec![-0.5, 0.5]).unwrap();
    let g1 = StepFunction::new(
        vec![q(0, 1), q(1, 10), q(3, 5), q(1, 1)],
        vec![-0.5, 0.5, -0.5],
    )
    .unwrap();
    let h = vec![StepFunction::constant(1.0), StepFunction::constant(1.0)];
    (c, omega, vec![g0, g1], h)
}

/// The 4x4 adjacency pair driven by the binary digit sequence.
pub fn example4_matrices() -> (DMatrix<f64>, DMatrix<f64>) {
    let a0 = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 1.0, 0.0, 0.0, //
            1.0, 1.0, 0.0, 1.0, //
            0.0, 0.0, 1.0, 1.0, //
            1.0, 0.0, 1.0, 0.0,
        ],
    );
    let a1 = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 1.0, 0.0, 0.0, //
            1.0, 1.0, 1.0, 0.0, //
            0.0, 1.0, 1.0, 1.0, //
            0.0, 0.0, 1.0, 1.0,
        ],
    );
    (a0, a1)
}

pub fn example4() -> (MatrixCocycle, SymbolSequence) {
    let (a0, a1) = example4_matrices();
    let base = BaseSystem::full_shift(2);
    let c = MatrixCocycle::new(vec![a0, a1], base).unwrap();
    let omega = build_omega_star(OmegaStar::Example4).unwrap();
    (c, omega)
}

/// The digit-sequence alignment matching the printed symbol window of
/// the 4x4 example: position i reads binary digit 39 + i. The stated
/// 20-digit offset rule and this alignment disagree; the printed window
/// and the printed decomposition data are consistent with this one.
pub fn example4_printed_omega() -> SymbolSequence {
    SymbolSequence::new(
        2,
        0,
        vec![],
        crate::base::ExtensionRule::Constant(1),
        crate::base::ExtensionRule::PiBits { index_offset: 39 },
    )
    .unwrap()
}

/// Printed second-direction index sets at the first four orbit points,
/// 0-based: (plus, minus) pairs.
pub fn example4_printed_index_sets() -> Vec<(Vec<usize>, Vec<usize>)> {
    vec![
        (vec![0, 1], vec![2, 3]),
        (vec![1, 3], vec![0, 2]),
        (vec![0, 2], vec![1, 3]),
        (vec![0, 1], vec![2, 3]),
    ]
}

/// Printed second-direction sign sets of the six-map cocycle at the
/// first eight orbit points, as (plus, minus) half-open interval
/// unions in ninths.
pub fn example3_printed_sets() -> Vec<(IntervalUnion, IntervalUnion)> {
    let u = |parts: &[(i64, i64)]| {
        IntervalUnion::from_parts(parts.iter().map(|&(a, b)| (q(a, 9), q(b, 9))).collect())
    };
    let rows: [(&[(i64, i64)], &[(i64, i64)]); 8] = [
        (&[(0, 3)], &[(3, 9)]),
        (&[(3, 6)], &[(0, 3), (6, 9)]),
        (&[(6, 9)], &[(0, 6)]),
        (&[(0, 4)], &[(4, 9)]),
        (&[(6, 9)], &[(0, 6)]),
        (&[(0, 3)], &[(3, 9)]),
        (&[(3, 6)], &[(0, 3), (6, 9)]),
        (&[(0, 3)], &[(3, 9)]),
    ];
    rows.iter().map(|&(p, m)| (u(p), u(m))).collect()
}

/// Printed subshift matrices at the first three orbit points.
pub fn example4_printed_b() -> Vec<Vec<Vec<u8>>> {
    vec![
        vec![
            vec![0, 1, 0, 0],
            vec![0, 1, 0, 1],
            vec![0, 0, 0, 0],
            vec![0, 0, 0, 0],
        ],
        vec![
            vec![0, 0, 0, 0],
            vec![1, 0, 1, 0],
            vec![0, 0, 0, 0],
            vec![0, 0, 1, 0],
        ],
        vec![
            vec![1, 1, 0, 0],
            vec![0, 0, 0, 0],
            vec![0, 1, 0, 0],
            vec![0, 0, 0, 0],
        ],
    ]
}

/// Printed complementary-subshift matrices at the first three orbit
/// points.
pub fn example4_printed_b2() -> Vec<Vec<Vec<u8>>> {
    vec![
        vec![
            vec![0, 0, 0, 0],
            vec![0, 0, 0, 0],
            vec![0, 0, 1, 0],
            vec![1, 0, 1, 0],
        ],
        vec![
            vec![0, 1, 0, 0],
            vec![0, 0, 0, 0],
            vec![0, 1, 0, 1],
            vec![0, 0, 0, 0],
        ],
        vec![
            vec![0, 0, 0, 0],
            vec![0, 0, 1, 0],
            vec![0, 0, 0, 0],
            vec![0, 0, 1, 1],
        ],
    ]
}

#![allow(dead_code)]

use mcassm::array::{self, EffectiveChannel};
use mcassm::channel::{self, SynthProfile};
use mcassm::{CMatrix, Complex64};

pub fn reference() -> EffectiveChannel {
    array::effective_channel(&channel::reference_scenario(), 4).unwrap()
}

/// Effective channel of a seeded five-path synthetic link with four RF chains.
pub fn random_channel(seed: u64) -> EffectiveChannel {
    let s = channel::synth_scenario(5, seed, &SynthProfile::default()).unwrap();
    array::effective_channel(&s, 4).unwrap()
}

/// Diagonal effective channel with the given spectrum.
pub fn diagonal_channel(eigvals: &[f64]) -> EffectiveChannel {
    let n = eigvals.len();
    let g = CMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(eigvals[i].sqrt(), 0.0) } else { Complex64::new(0.0, 0.0) });
    EffectiveChannel::from_parts(g, CMatrix::identity(n, n), false).unwrap()
}

/// Squared distance between two whitened hypotheses straight from `G` and `W`.
pub fn ed_from_g(eff: &EffectiveChannel, w: &CMatrix, h1: (usize, usize), s1: Complex64, h2: (usize, usize), s2: Complex64) -> f64 {
    let a = &eff.g * w.row(h1.0).adjoint() * s1;
    let b = &eff.g * w.row(h2.0).adjoint() * s2;
    (a - b).norm_squared()
}

/// Exhaustive minimum over every ordered pair of distinct hypotheses.
pub fn brute_min_ed(eff: &EffectiveChannel, w: &CMatrix, symbols: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for l1 in 0..w.nrows() {
        for (m1, &s1) in symbols.iter().enumerate() {
            for l2 in 0..w.nrows() {
                for (m2, &s2) in symbols.iter().enumerate() {
                    if (l1, m1) != (l2, m2) {
                        best = best.min(ed_from_g(eff, w, (l1, m1), s1, (l2, m2), s2));
                    }
                }
            }
        }
    }
    best
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub type GridPair = ((i32, i32), (i32, i32));

/// Reference symbol-pair tables: (M, rectangular?, scale², pairs).
pub fn reference_sm_tables() -> Vec<(usize, bool, f64, Vec<GridPair>)> {
    let p = |a: (i32, i32), b: (i32, i32)| (a, b);
    vec![
        (8, true, 1.0 / 6.0, vec![p((1, 1), (1, 1)), p((1, 1), (3, 1))]),
        (16, false, 1.0 / 10.0, vec![p((1, 1), (1, 1)), p((1, 1), (3, 1))]),
        (
            32,
            true,
            1.0 / 26.0,
            vec![
                p((1, 1), (1, 1)), p((1, 1), (3, 1)), p((1, 1), (5, 1)), p((1, 1), (5, 3)),
                p((1, 1), (7, 1)), p((1, 1), (7, 3)), p((3, 1), (5, 1)), p((3, 1), (5, 3)),
                p((3, 1), (7, 1)), p((3, 1), (7, 3)), p((5, 1), (5, 3)), p((5, 1), (7, 1)),
                p((5, 1), (7, 3)), p((5, 3), (7, 1)), p((5, 3), (7, 3)), p((7, 1), (7, 3)),
            ],
        ),
        (
            64,
            false,
            1.0 / 42.0,
            vec![
                p((1, 1), (1, 1)), p((1, 1), (3, 1)), p((1, 1), (5, 1)), p((1, 1), (5, 3)),
                p((1, 1), (7, 1)), p((1, 1), (7, 3)), p((1, 1), (7, 5)), p((3, 1), (5, 1)),
                p((3, 1), (5, 3)), p((3, 1), (7, 1)), p((3, 1), (7, 3)), p((3, 1), (7, 5)),
                p((5, 1), (5, 3)), p((5, 1), (7, 1)), p((5, 1), (7, 3)), p((5, 1), (7, 5)),
                p((5, 3), (7, 1)), p((5, 3), (7, 3)), p((5, 3), (7, 5)), p((7, 1), (7, 3)),
                p((7, 1), (7, 5)), p((7, 3), (7, 5)),
            ],
        ),
    ]
}

/// Reference eigenvalues of the reference link.
pub const REFERENCE_LAMBDA: [f64; 4] = [410.05, 9.84, 1.41, 0.05];

/// Reference eigenbasis of the reference link, row-major.
pub const REFERENCE_U: [[f64; 4]; 4] = [
    [0.0697, -0.6370, 0.0568, 0.7656],
    [0.0275, 0.7688, -0.0187, 0.6386],
    [-0.3857, -0.0558, -0.9192, 0.0569],
    [-0.9196, -0.0019, 0.3892, 0.0533],
];

/// Reference achievable minimum distances for the five 16-QAM candidates, keyed by
/// ι₂/(λ₁/λ₂).
pub fn reference_candidate_distances() -> Vec<(f64, f64)> {
    let r2 = std::f64::consts::SQRT_2;
    vec![
        (3.0 / (r2 - 1.0).powi(2), 0.4497),
        (1.0 + 2.0 * r2, 0.8466),
        (1.0, 2.2520),
        (1.0 / (1.0 + 2.0 * r2), 2.9869),
        ((r2 - 1.0).powi(2) / 3.0, 5.5460),
    ]
}

//! Closed-form max-min distance design of the aggregation matrix `W`, plus the
//! conventional and generalized SSM baselines.
//!
//! The design works on eigen-subchannels of the effective channel. With power
//! ratios `ι = ξ²/ξ²(1)` and the beam-vector book `υ_l`, the squared distance
//! between hypotheses is `Σ_κ λ_κ ξ²(κ) |υ_{l1}(κ) s_{m1} − υ_{l2}(κ) s_{m2}|²`.
//! Every minimum distance is one of a finite set of affine forms `ε·ι / Σι`,
//! so the optimum sits where two of them intersect.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::array::EffectiveChannel;
use crate::constellation::{Constellation, Family};
use crate::{CMatrix, Complex64, Error, Result};

/// Eigenvalues below this fraction of `λ₁` are treated as absent subchannels.
pub const DEGENERATE_RATIO: f64 = 1e-9;
const PRUNE_TOL: f64 = 1e-12;
const DEDUP_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 1e-12;

/// Real beam vectors `υ_l`, one per beam-vector symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamVectorBook {
    vectors: Vec<Vec<f64>>,
    n_sa: usize,
}

impl BeamVectorBook {
    /// Validates a user-supplied book: unit norm, zero beyond `n_sa`.
    pub fn from_vectors(vectors: Vec<Vec<f64>>, n_sa: usize) -> Result<Self> {
        let n_s = vectors.first().map(Vec::len).ok_or_else(|| Error::invalid("empty beam-vector book"))?;
        if n_sa == 0 || n_sa > n_s {
            return Err(Error::invalid(format!("need 1 <= n_sa <= n_s, got n_sa = {n_sa}, n_s = {n_s}")));
        }
        if !vectors.len().is_power_of_two() {
            return Err(Error::invalid(format!("book size must be a power of two, got {}", vectors.len())));
        }
        for (l, v) in vectors.iter().enumerate() {
            if v.len() != n_s {
                return Err(Error::invalid(format!("beam vector {} has length {}, expected {n_s}", l + 1, v.len())));
            }
            let norm2: f64 = v.iter().map(|x| x * x).sum();
            if (norm2 - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("beam vector {} has squared norm {norm2}", l + 1)));
            }
            if v[n_sa..].iter().any(|&x| x != 0.0) {
                return Err(Error::invalid(format!("beam vector {} is nonzero beyond n_sa = {n_sa}", l + 1)));
            }
        }
        Ok(BeamVectorBook { vectors, n_sa })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn n_sa(&self) -> usize {
        self.n_sa
    }

    pub fn n_s(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vector(&self, l: usize) -> &[f64] {
        &self.vectors[l]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }
}

/// Built-in book for two active subchannels: `L` directions spread evenly over
/// a half-turn starting at π/4.
///
/// Angles are reduced modulo π, so the direction at π comes out as `[1, 0]`.
/// Negating a beam vector leaves every distance unchanged for the symmetric
/// constellations supported here.
pub fn design_upsilon(l: usize, n_sa: usize, n_s: usize) -> Result<BeamVectorBook> {
    if n_sa != 2 {
        return Err(Error::Unsupported(format!(
            "the built-in beam-vector book needs n_sa = 2 (got {n_sa}); supply a custom book"
        )));
    }
    if l == 0 || !l.is_power_of_two() {
        return Err(Error::invalid(format!("L must be a power of two, got {l}")));
    }
    if n_s < n_sa {
        return Err(Error::invalid(format!("n_sa = {n_sa} exceeds n_s = {n_s}")));
    }
    let vectors = (0..l)
        .map(|i| {
            let angle = (PI / 4.0 + i as f64 * PI / l as f64).rem_euclid(PI);
            let mut v = vec![0.0; n_s];
            v[0] = snap(angle.cos());
            v[1] = snap(angle.sin());
            v
        })
        .collect();
    BeamVectorBook::from_vectors(vectors, n_sa)
}

// cos(π/2) etc. come out as ~6e-17; make them exact zeros
fn snap(x: f64) -> f64 {
    if x.abs() < 1e-15 {
        0.0
    } else {
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairSign {
    Minus,
    Plus,
}

/// Where a distance candidate came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidateOrigin {
    /// Same beam vector, nearest symbols.
    Modulation { l: usize },
    /// Two beam vectors, symbol pair given on the odd-integer QAM grid (PSK: none).
    CrossBeam {
        l1: usize,
        l2: usize,
        sign: PairSign,
        levels: Option<((i32, i32), (i32, i32))>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub eps: Vec<f64>,
    pub origin: CandidateOrigin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSet {
    pub entries: Vec<Candidate>,
    pub n_sa: usize,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn modulation_part(&self) -> impl Iterator<Item = &Candidate> {
        self.entries.iter().filter(|c| matches!(c.origin, CandidateOrigin::Modulation { .. }))
    }

    pub fn cross_beam_part(&self) -> impl Iterator<Item = &Candidate> {
        self.entries.iter().filter(|c| matches!(c.origin, CandidateOrigin::CrossBeam { .. }))
    }

    /// `min_ε ε·ι / Σι`, the minimum squared distance for power ratios `ι`.
    pub fn evaluate(&self, iota: &[f64]) -> f64 {
        let total: f64 = iota.iter().sum();
        self.entries
            .iter()
            .map(|c| c.eps.iter().zip(iota).map(|(e, i)| e * i).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
            / total
    }
}

/// Enumerates every candidate minimum-distance vector for the book and spectrum.
pub fn build_candidates(book: &BeamVectorBook, eigvals: &[f64], constellation: &Constellation) -> Result<CandidateSet> {
    let n_sa = book.n_sa();
    if eigvals.len() < n_sa {
        return Err(Error::invalid(format!("{} eigenvalues given, n_sa = {n_sa}", eigvals.len())));
    }
    let lam = &eigvals[..n_sa];
    let m = constellation.order() as f64;
    let d1_scale = match constellation.family() {
        Family::Psk => 4.0 * (PI / m).sin().powi(2),
        Family::SquareQam => 6.0 / (m - 1.0),
        Family::RectQam => 24.0 / (5.0 * m - 4.0),
    };
    let mut entries = Vec::new();
    for l in 0..book.len() {
        let u = book.vector(l);
        entries.push(Candidate {
            eps: (0..n_sa).map(|k| d1_scale * lam[k] * u[k] * u[k]).collect(),
            origin: CandidateOrigin::Modulation { l: l + 1 },
        });
    }
    let pairs = match constellation.family() {
        Family::Psk => None,
        _ => Some(constellation.build_sm()?),
    };
    for l1 in 0..book.len() {
        for l2 in l1 + 1..book.len() {
            let (u1, u2) = (book.vector(l1), book.vector(l2));
            for sign in [PairSign::Minus, PairSign::Plus] {
                let sgn = if sign == PairSign::Minus { -1.0 } else { 1.0 };
                match &pairs {
                    None => entries.push(Candidate {
                        eps: (0..n_sa).map(|k| lam[k] * (u1[k] + sgn * u2[k]).powi(2)).collect(),
                        origin: CandidateOrigin::CrossBeam {
                            l1: l1 + 1,
                            l2: l2 + 1,
                            sign,
                            levels: None,
                        },
                    }),
                    Some(sm) => {
                        for (&(s1, s2), &levels) in sm.pairs.iter().zip(&sm.levels) {
                            entries.push(Candidate {
                                eps: (0..n_sa).map(|k| lam[k] * (s1 * u1[k] + s2 * (sgn * u2[k])).norm_sqr()).collect(),
                                origin: CandidateOrigin::CrossBeam {
                                    l1: l1 + 1,
                                    l2: l2 + 1,
                                    sign,
                                    levels: Some(levels),
                                },
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(CandidateSet { entries, n_sa })
}

fn same_vector(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()))
}

/// Drops duplicates and every entry that another entry undercuts in all coordinates.
pub fn prune_dominated(d0: &CandidateSet) -> CandidateSet {
    let mut unique: Vec<&Candidate> = Vec::new();
    for c in &d0.entries {
        if !unique.iter().any(|u| same_vector(&u.eps, &c.eps, PRUNE_TOL)) {
            unique.push(c);
        }
    }
    let kept = unique
        .iter()
        .enumerate()
        .filter(|&(i, c)| {
            !unique.iter().enumerate().any(|(j, other)| {
                j != i && other.eps.iter().zip(&c.eps).all(|(o, e)| *o <= e * (1.0 + PRUNE_TOL))
            })
        })
        .map(|(_, c)| (*c).clone())
        .collect();
    CandidateSet {
        entries: kept,
        n_sa: d0.n_sa,
    }
}

/// A power-ratio vector at which the listed candidates of `D` are equal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IotaCandidate {
    pub iota: Vec<f64>,
    /// Indices into the pruned set of the first subset that produced it.
    pub subset: Vec<usize>,
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k == 0 || k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Intersects every `n_sa`-subset of `D` and keeps the positive solutions.
pub fn solve_iota_candidates(d: &CandidateSet, n_sa: usize) -> Vec<IotaCandidate> {
    if n_sa == 1 {
        return vec![IotaCandidate {
            iota: vec![1.0],
            subset: vec![],
        }];
    }
    let mut found: Vec<IotaCandidate> = Vec::new();
    for subset in combinations(d.len(), n_sa) {
        let first = &d.entries[subset[0]].eps;
        let unknowns = n_sa - 1;
        let mut a = DMatrix::<f64>::zeros(unknowns, unknowns);
        let mut b = nalgebra::DVector::<f64>::zeros(unknowns);
        for (row, &other) in subset[1..].iter().enumerate() {
            let e = &d.entries[other].eps;
            for k in 1..n_sa {
                a[(row, k - 1)] = first[k] - e[k];
            }
            b[row] = e[0] - first[0];
        }
        let sv = a.clone().singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        if smax == 0.0 || smin <= 1e-12 * smax {
            continue;
        }
        let Some(x) = a.lu().solve(&b) else { continue };
        if !x.iter().all(|v| v.is_finite() && *v > 0.0) {
            continue;
        }
        let mut iota = vec![1.0];
        iota.extend(x.iter());
        if !found.iter().any(|f| same_vector(&f.iota, &iota, DEDUP_TOL)) {
            found.push(IotaCandidate { iota, subset });
        }
    }
    found.sort_by(|x, y| x.iota.partial_cmp(&y.iota).expect("finite ratios"));
    found
}

/// One row of the candidate table: a ratio vector and its achieved minimum distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateScore {
    pub iota: Vec<f64>,
    pub min_ed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub index: usize,
    pub iota: Vec<f64>,
    pub min_ed: f64,
    pub table: Vec<CandidateScore>,
}

/// Scores each candidate against the full `D₀` and returns the max-min one.
/// Ties go to the smallest `ι₂`, then lexicographic order.
pub fn select_optimum(candidates: &[IotaCandidate], d0: &CandidateSet) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::NoCandidate("no positive intersection of distance candidates".into()));
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&x, &y| candidates[x].iota.partial_cmp(&candidates[y].iota).expect("finite ratios"));
    let table: Vec<CandidateScore> = candidates
        .iter()
        .map(|c| CandidateScore {
            iota: c.iota.clone(),
            min_ed: d0.evaluate(&c.iota),
        })
        .collect();
    let best = table.iter().map(|s| s.min_ed).fold(f64::NEG_INFINITY, f64::max);
    let index = *order
        .iter()
        .find(|&&i| table[i].min_ed >= best - TIE_TOL * best.abs())
        .expect("maximum is attained");
    Ok(Selection {
        index,
        iota: table[index].iota.clone(),
        min_ed: table[index].min_ed,
        table,
    })
}

/// Power split and aggregation matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCADesign {
    pub iota: Vec<f64>,
    pub xi: Vec<f64>,
    /// `V(l, κ) = ξ(κ) υ_l(κ)`.
    #[serde(skip)]
    pub v: DMatrix<f64>,
    #[serde(skip)]
    pub w: CMatrix,
    pub min_ed: f64,
    pub book: BeamVectorBook,
}

impl MCADesign {
    pub fn l(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_sa(&self) -> usize {
        self.book.n_sa()
    }

    pub fn w_json(&self) -> Vec<Vec<[f64; 2]>> {
        crate::array::matrix_pairs(&self.w)
    }
}

/// Builds `ξ`, `V` and `W = V Uᴴ` for the ratio vector `iota`.
///
/// Row norms of `W` equal `‖V(l,:)‖ = sqrt(Σ ξ²(κ) υ_l(κ)²) <= 1`; they are one
/// only when every row sees the same power split.
pub fn assemble_design(
    iota: &[f64],
    book: &BeamVectorBook,
    effective: &EffectiveChannel,
    constellation: &Constellation,
) -> Result<MCADesign> {
    let n_sa = book.n_sa();
    let n_s = effective.n_s;
    if iota.len() != n_sa || book.n_s() != n_s {
        return Err(Error::invalid(format!(
            "ratio vector of length {} / book width {} do not match n_sa = {n_sa}, n_s = {n_s}",
            iota.len(),
            book.n_s()
        )));
    }
    if !iota.iter().all(|&x| x > 0.0 && x.is_finite()) {
        return Err(Error::invalid("power ratios must be positive"));
    }
    let total: f64 = iota.iter().sum();
    let mut xi = vec![0.0; n_s];
    for k in 0..n_sa {
        xi[k] = (iota[k] / total).sqrt();
    }
    let v = DMatrix::from_fn(book.len(), n_s, |l, k| xi[k] * book.vector(l)[k]);
    let w = v.map(|x| Complex64::new(x, 0.0)) * effective.eigvecs.adjoint();
    let d0 = build_candidates(book, &effective.eigvals, constellation)?;
    Ok(MCADesign {
        iota: iota.to_vec(),
        xi,
        v,
        w,
        min_ed: d0.evaluate(iota),
        book: book.clone(),
    })
}

/// Rejects spectra whose active subchannels carry no energy.
pub fn check_spectrum(eigvals: &[f64], n_sa: usize) -> Result<()> {
    if eigvals.len() < n_sa {
        return Err(Error::invalid(format!("n_sa = {n_sa} exceeds the {} available subchannels", eigvals.len())));
    }
    let top = eigvals[0];
    if !(top > 0.0) {
        return Err(Error::DegenerateChannel("effective channel has no energy".into()));
    }
    if let Some(k) = (0..n_sa).find(|&k| eigvals[k] < DEGENERATE_RATIO * top) {
        return Err(Error::DegenerateChannel(format!(
            "eigenvalue {} = {:e} is negligible against λ₁ = {top:e}; fewer than {n_sa} usable subchannels",
            k + 1,
            eigvals[k]
        )));
    }
    Ok(())
}

/// Full output of the design pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct Optimization {
    pub design: MCADesign,
    pub eigvals: Vec<f64>,
    pub d0_len: usize,
    pub pruned: CandidateSet,
    pub candidates: Vec<IotaCandidate>,
    pub selection: Selection,
}

/// Runs the whole design with the built-in book.
pub fn optimize(effective: &EffectiveChannel, constellation: &Constellation, l: usize, n_sa: usize) -> Result<Optimization> {
    let book = design_upsilon(l, n_sa, effective.n_s)?;
    optimize_with_book(effective, constellation, &book)
}

pub fn optimize_with_book(
    effective: &EffectiveChannel,
    constellation: &Constellation,
    book: &BeamVectorBook,
) -> Result<Optimization> {
    let n_sa = book.n_sa();
    check_spectrum(&effective.eigvals, n_sa)?;
    let d0 = build_candidates(book, &effective.eigvals, constellation)?;
    let pruned = prune_dominated(&d0);
    let candidates = solve_iota_candidates(&pruned, n_sa);
    let selection = select_optimum(&candidates, &d0)?;
    let design = assemble_design(&selection.iota, book, effective, constellation)?;
    log::debug!(
        "design: |D0| = {}, |D| = {}, {} intersections, iota = {:?}",
        d0.len(),
        pruned.len(),
        candidates.len(),
        selection.iota
    );
    Ok(Optimization {
        design,
        eigvals: effective.eigvals.clone(),
        d0_len: d0.len(),
        pruned,
        candidates,
        selection,
    })
}

/// Conventional SSM: one beam per multipath component.
pub fn baseline_ssm(n_s: usize) -> CMatrix {
    CMatrix::identity(n_s, n_s)
}

/// Generalized SSM with two of five components active per symbol (`L = 8`, `N_s = 5`).
pub fn baseline_gssm() -> CMatrix {
    const PATTERN: [[u8; 5]; 8] = [
        [1, 1, 0, 0, 0],
        [1, 0, 1, 0, 0],
        [1, 0, 0, 1, 0],
        [1, 0, 0, 0, 1],
        [0, 1, 1, 0, 0],
        [0, 1, 0, 1, 0],
        [0, 1, 0, 0, 1],
        [0, 0, 1, 1, 0],
    ];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(8, 5, |r, c| Complex64::new(PATTERN[r][c] as f64 * s, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Mca,
    Ssm,
    Gssm,
}

impl std::str::FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mca" => Ok(Baseline::Mca),
            "ssm" => Ok(Baseline::Ssm),
            "gssm" => Ok(Baseline::Gssm),
            other => Err(Error::invalid(format!("unknown baseline '{other}' (mca, ssm, gssm)"))),
        }
    }
}

/// Aggregation matrix chosen for a run, with the design when one was computed.
#[derive(Debug, Clone)]
pub struct Precoder {
    pub w: CMatrix,
    pub design: Option<MCADesign>,
    pub optimization: Option<Optimization>,
}

/// Builds the aggregation matrix for `baseline`. For SSM `L` must equal `N_s`;
/// for GSSM `(N_s, L) = (5, 8)`.
pub fn build_precoder(
    baseline: Baseline,
    effective: &EffectiveChannel,
    constellation: &Constellation,
    l: usize,
    n_sa: usize,
) -> Result<Precoder> {
    match baseline {
        Baseline::Mca => {
            let opt = optimize(effective, constellation, l, n_sa)?;
            Ok(Precoder {
                w: opt.design.w.clone(),
                design: Some(opt.design.clone()),
                optimization: Some(opt),
            })
        }
        Baseline::Ssm => {
            if l != effective.n_s {
                return Err(Error::invalid(format!("SSM needs L = N_s, got L = {l}, N_s = {}", effective.n_s)));
            }
            Ok(Precoder {
                w: baseline_ssm(l),
                design: None,
                optimization: None,
            })
        }
        Baseline::Gssm => {
            if (effective.n_s, l) != (5, 8) {
                return Err(Error::invalid(format!(
                    "GSSM needs N_s = 5 and L = 8, got N_s = {}, L = {l}",
                    effective.n_s
                )));
            }
            Ok(Precoder {
                w: baseline_gssm(),
                design: None,
                optimization: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{array, channel};

    const R2: f64 = std::f64::consts::SQRT_2;

    fn reference() -> EffectiveChannel {
        array::effective_channel(&channel::reference_scenario(), 4).unwrap()
    }

    fn set(vs: &[[f64; 2]]) -> CandidateSet {
        CandidateSet {
            entries: vs
                .iter()
                .enumerate()
                .map(|(i, v)| Candidate {
                    eps: v.to_vec(),
                    origin: CandidateOrigin::Modulation { l: i + 1 },
                })
                .collect(),
            n_sa: 2,
        }
    }

    fn contains(set: &CandidateSet, v: [f64; 2]) -> bool {
        set.entries.iter().any(|c| (c.eps[0] - v[0]).abs() < 1e-9 && (c.eps[1] - v[1]).abs() < 1e-9)
    }

    #[test]
    fn book_l2_and_l4() {
        let close = |a: &[f64], b: [f64; 4]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15);
        let b = design_upsilon(2, 2, 4).unwrap();
        assert!(close(b.vector(0), [1.0 / R2, 1.0 / R2, 0.0, 0.0]));
        assert!(close(b.vector(1), [-1.0 / R2, 1.0 / R2, 0.0, 0.0]));
        let b = design_upsilon(4, 2, 4).unwrap();
        assert_eq!(b.vector(1), &[0.0, 1.0, 0.0, 0.0][..]);
        assert_eq!(b.vector(3), &[1.0, 0.0, 0.0, 0.0][..]);
        for l in [1, 2, 4, 8, 16] {
            for v in design_upsilon(l, 2, 3).unwrap().vectors() {
                assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn book_rejects_other_active_counts() {
        assert!(matches!(design_upsilon(4, 3, 4), Err(Error::Unsupported(_))));
        assert!(design_upsilon(3, 2, 4).is_err());
        assert!(BeamVectorBook::from_vectors(vec![vec![0.6, 0.8, 0.1]], 2).is_err());
    }

    #[test]
    fn psk16_candidates() {
        let lam = [3.0, 2.0];
        let psk = Constellation::new(Family::Psk, 16).unwrap();
        let d0 = build_candidates(&design_upsilon(4, 2, 4).unwrap(), &lam, &psk).unwrap();
        let c = 2.0 - (2.0 + R2).sqrt();
        assert!(contains(&d0, [c * lam[0], 0.0]));
        assert!(contains(&d0, [0.0, c * lam[1]]));
        assert!(contains(&d0, [c / 2.0 * lam[0], c / 2.0 * lam[1]]));
        assert_eq!(d0.modulation_part().count(), 4);
        // [4λ₁,0] and [0,4λ₂] need antipodal beam vectors, which the book lacks;
        // both would be dominated anyway
        let t = (1.0 - 1.0 / R2).powi(2);
        for v in [[t * lam[0], 0.5 * lam[1]], [0.5 * lam[0], t * lam[1]]] {
            assert!(d0.cross_beam_part().any(|c| (c.eps[0] - v[0]).abs() < 1e-12 && (c.eps[1] - v[1]).abs() < 1e-12));
        }
    }

    #[test]
    fn qam16_modulation_candidates() {
        let lam = [5.0, 7.0];
        let qam = Constellation::new(Family::SquareQam, 16).unwrap();
        let d0 = build_candidates(&design_upsilon(4, 2, 4).unwrap(), &lam, &qam).unwrap();
        let d1 = CandidateSet {
            entries: d0.modulation_part().cloned().collect(),
            n_sa: 2,
        };
        for v in [[0.2 * lam[0], 0.2 * lam[1]], [0.4 * lam[0], 0.0], [0.0, 0.4 * lam[1]]] {
            assert!(contains(&d1, v));
        }
    }

    #[test]
    fn prune_trivial() {
        let p = prune_dominated(&set(&[[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]]));
        let got: Vec<_> = p.entries.iter().map(|c| c.eps.clone()).collect();
        assert_eq!(got, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let p = prune_dominated(&set(&[[1.0, 1.0], [1.0, 1.0]]));
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn example2_pruned_set() {
        let lam = [410.0, 9.8];
        let psk = Constellation::new(Family::Psk, 16).unwrap();
        let d = prune_dominated(&build_candidates(&design_upsilon(4, 2, 4).unwrap(), &lam, &psk).unwrap());
        assert_eq!(d.len(), 3);
        let c = 1.0 - ((2.0 + R2) / 4.0).sqrt();
        assert!(contains(&d, [c * lam[0], c * lam[1]]));
    }

    #[test]
    fn symmetric_intersection() {
        let c = solve_iota_candidates(&set(&[[1.0, 0.0], [0.0, 1.0]]), 2);
        assert_eq!(c.len(), 1);
        assert!((c[0].iota[1] - 1.0).abs() < 1e-15);
        let parallel = solve_iota_candidates(&set(&[[1.0, 1.0], [2.0, 2.0]]), 2);
        assert!(parallel.is_empty());
    }

    #[test]
    fn single_candidate_returned() {
        let d0 = set(&[[1.0, 0.0], [0.0, 1.0]]);
        let cands = vec![IotaCandidate {
            iota: vec![1.0, 3.0],
            subset: vec![0, 1],
        }];
        let s = select_optimum(&cands, &d0).unwrap();
        assert_eq!(s.iota, vec![1.0, 3.0]);
        assert!((s.min_ed - 0.25).abs() < 1e-15);
        assert!(select_optimum(&[], &d0).is_err());
    }

    #[test]
    fn ties_prefer_small_ratio() {
        let d0 = set(&[[1.0, 1.0]]);
        let cands = vec![
            IotaCandidate {
                iota: vec![1.0, 2.0],
                subset: vec![],
            },
            IotaCandidate {
                iota: vec![1.0, 0.5],
                subset: vec![],
            },
        ];
        assert_eq!(select_optimum(&cands, &d0).unwrap().iota, vec![1.0, 0.5]);
    }

    #[test]
    fn example2_optimum_and_power_split() {
        let eff = reference();
        let psk = Constellation::new(Family::Psk, 16).unwrap();
        let opt = optimize(&eff, &psk, 4, 2).unwrap();
        let (l1, l2) = (eff.eigvals[0], eff.eigvals[1]);
        assert!((opt.design.iota[1] / (l1 / l2) - 1.0).abs() < 1e-9);
        assert!((opt.design.xi[0].powi(2) - l2 / (l1 + l2)).abs() < 1e-12);
        assert!((opt.design.xi[1].powi(2) - l1 / (l1 + l2)).abs() < 1e-12);
    }

    #[test]
    fn equal_ratios_split_power_evenly() {
        let eff = reference();
        let qam = Constellation::new(Family::SquareQam, 16).unwrap();
        let d = assemble_design(&[1.0, 1.0], &design_upsilon(4, 2, 4).unwrap(), &eff, &qam).unwrap();
        assert!((d.xi[0].powi(2) - 0.5).abs() < 1e-15 && (d.xi[1].powi(2) - 0.5).abs() < 1e-15);
        assert_eq!(&d.xi[2..], &[0.0, 0.0]);
    }

    #[test]
    fn baselines() {
        let ssm = baseline_ssm(4);
        assert_eq!(ssm, CMatrix::identity(4, 4));
        let g = baseline_gssm();
        for r in 0..8 {
            assert!((g.row(r).norm() - 1.0).abs() < 1e-15);
        }
        assert!((g[(7, 3)].re - 1.0 / R2).abs() < 1e-15);
        let eff = reference();
        let psk = Constellation::new(Family::Psk, 16).unwrap();
        assert!(build_precoder(Baseline::Ssm, &eff, &psk, 8, 2).is_err());
        assert!(build_precoder(Baseline::Gssm, &eff, &psk, 8, 2).is_err());
    }

    #[test]
    fn degenerate_spectrum_rejected() {
        assert!(matches!(check_spectrum(&[1.0, 1e-12, 0.0], 2), Err(Error::DegenerateChannel(_))));
        assert!(check_spectrum(&[1.0, 1e-3], 2).is_ok());
    }

    #[test]
    fn combinations_enumerate() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(5, 3).len(), 10);
        assert_eq!(combinations(2, 3).len(), 0);
    }
}

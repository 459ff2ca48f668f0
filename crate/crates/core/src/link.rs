//! Bit mapping, transmission, reception and maximum-likelihood detection, and
//! the seeded Monte-Carlo bit error estimator.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::array::{self, EffectiveChannel};
use crate::channel::{self, ChannelScenario};
use crate::constellation::Constellation;
use crate::design::MCADesign;
use crate::{rng, CMatrix, CVector, Complex64, Error, Result};

/// `(l, m)` as zero-based indices.
pub type Hypothesis = (usize, usize);

/// Bits per transmitted symbol for a book of size `l` and order-`m` constellation.
pub fn bits_per_symbol(l: usize, m: usize) -> Result<u32> {
    let n = l * m;
    if l == 0 || m == 0 || !n.is_power_of_two() || n < 2 {
        return Err(Error::invalid(format!("L·M must be a power of two >= 2, got L = {l}, M = {m}")));
    }
    Ok(n.trailing_zeros())
}

/// First `log₂L` bits pick the beam vector (natural binary, MSB first), the rest
/// pick the symbol through its Gray label.
pub fn map_bits(bits: &[u8], l: usize, constellation: &Constellation) -> Result<Hypothesis> {
    let total = bits_per_symbol(l, constellation.order())? as usize;
    if bits.len() != total {
        return Err(Error::invalid(format!("expected {total} bits, got {}", bits.len())));
    }
    if let Some(b) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::invalid(format!("bit value {b} is not 0 or 1")));
    }
    let word = bits.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
    Ok(split_word(word, constellation))
}

pub fn unmap(h: Hypothesis, l: usize, constellation: &Constellation) -> Result<Vec<u8>> {
    let total = bits_per_symbol(l, constellation.order())?;
    let word = hypothesis_word(h, constellation);
    Ok((0..total).rev().map(|i| ((word >> i) & 1) as u8).collect())
}

/// Concatenated bit label of a hypothesis.
pub fn hypothesis_word((l, m): Hypothesis, constellation: &Constellation) -> u32 {
    ((l as u32) << constellation.bits_per_symbol()) | constellation.label(m)
}

fn split_word(word: u32, constellation: &Constellation) -> Hypothesis {
    let mb = constellation.bits_per_symbol();
    let l = (word >> mb) as usize;
    let m = constellation.index_of_label(word & ((1 << mb) - 1));
    (l, m)
}

/// Antenna-domain transmit vector `x = [W(l,:) A_t(1:N_s,:)]ᴴ s_m`.
pub fn transmit(h: Hypothesis, w: &CMatrix, scenario: &ChannelScenario, constellation: &Constellation) -> CVector {
    let (a_t, _) = array::steering_matrices(scenario);
    transmit_with(h, w, &a_t, constellation)
}

fn transmit_with(h: Hypothesis, w: &CMatrix, a_t: &CMatrix, constellation: &Constellation) -> CVector {
    let n_s = w.ncols();
    let beam = w.row(h.0) * a_t.rows(0, n_s);
    beam.adjoint() * constellation.symbol(h.1)
}

/// Noise-free whitened-domain image `G W(l,:)ᴴ s_m` of every hypothesis,
/// indexed by `l·M + m`.
#[derive(Debug, Clone)]
pub struct HypothesisTable {
    pub images: Vec<CVector>,
    pub l: usize,
    pub m: usize,
}

impl HypothesisTable {
    pub fn new(w: &CMatrix, effective: &EffectiveChannel, constellation: &Constellation) -> Result<Self> {
        if w.ncols() != effective.n_s {
            return Err(Error::invalid(format!(
                "aggregation matrix has {} columns, effective channel has N_s = {}",
                w.ncols(),
                effective.n_s
            )));
        }
        let (l, m) = (w.nrows(), constellation.order());
        let mut images = Vec::with_capacity(l * m);
        for li in 0..l {
            let beam = &effective.g * w.row(li).adjoint();
            for &s in constellation.symbols() {
                images.push(&beam * s);
            }
        }
        Ok(HypothesisTable { images, l, m })
    }

    pub fn image(&self, (l, m): Hypothesis) -> &CVector {
        &self.images[l * self.m + m]
    }
}

/// `z = √ρ G W(l,:)ᴴ s_m + noise`.
pub fn receive_whitened(
    h: Hypothesis,
    snr_linear: f64,
    w: &CMatrix,
    effective: &EffectiveChannel,
    constellation: &Constellation,
    noise: &CVector,
) -> CVector {
    &effective.g * w.row(h.0).adjoint() * (constellation.symbol(h.1) * snr_linear.sqrt()) + noise
}

/// Antenna-domain reception followed by RF combining and whitening:
/// `z = (Bᴴ)⁻¹ A_r(1:N_s,:) (√(ρ/N_t) H x + n_a)`.
pub fn receive_antenna(
    x: &CVector,
    snr_linear: f64,
    scenario: &ChannelScenario,
    effective: &EffectiveChannel,
    antenna_noise: &CVector,
) -> CVector {
    let h = channel::build_channel_matrix(scenario);
    let (_, a_r) = array::steering_matrices(scenario);
    let n_t = scenario.array.n_tx as f64;
    let y = h * x * Complex64::new((snr_linear / n_t).sqrt(), 0.0) + antenna_noise;
    effective.whiten(&(a_r.rows(0, effective.n_s) * y))
}

/// Exhaustive ML decision. Ties go to the smallest `l`, then `m`.
pub fn ml_detect(z: &CVector, table: &HypothesisTable, snr_linear: f64) -> Hypothesis {
    let idx = argmin_metric(z, table, snr_linear.sqrt());
    (idx / table.m, idx % table.m)
}

fn argmin_metric(z: &CVector, table: &HypothesisTable, amp: f64) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, img) in table.images.iter().enumerate() {
        let d: f64 = z.iter().zip(img.iter()).map(|(a, b)| (a - b * amp).norm_sqr()).sum();
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Per-subchannel detector working on the first `n_sa` eigen-coordinates.
///
/// The whitened vector is projected onto `p_κ = G q_κ / √λ_κ`, the left
/// singular vectors paired with the design's eigenvectors, which makes the
/// truncated metric equal to the full one up to a hypothesis-independent term.
#[derive(Debug, Clone)]
pub struct ReducedDetector {
    basis_h: CMatrix,
    /// `√λ_κ ξ(κ) υ_l(κ)` per `l` and `κ`.
    gains: Vec<Vec<f64>>,
    symbols: Vec<Complex64>,
}

impl ReducedDetector {
    pub fn new(design: &MCADesign, effective: &EffectiveChannel, constellation: &Constellation) -> Result<Self> {
        let n_sa = design.n_sa();
        let basis_h = effective.left_basis(n_sa)?.adjoint();
        let gains = (0..design.l())
            .map(|l| {
                (0..n_sa)
                    .map(|k| effective.eigvals[k].sqrt() * design.xi[k] * design.book.vector(l)[k])
                    .collect()
            })
            .collect();
        Ok(ReducedDetector {
            basis_h,
            gains,
            symbols: constellation.symbols().to_vec(),
        })
    }

    /// Eigen-coordinates of a whitened observation.
    pub fn project(&self, z: &CVector) -> CVector {
        &self.basis_h * z
    }

    pub fn metric(&self, y: &CVector, (l, m): Hypothesis, snr_linear: f64) -> f64 {
        let amp = snr_linear.sqrt();
        let s = self.symbols[m];
        y.iter().zip(&self.gains[l]).map(|(yk, g)| (yk - s * (amp * g)).norm_sqr()).sum()
    }

    pub fn detect(&self, z: &CVector, snr_linear: f64) -> Hypothesis {
        let y = self.project(z);
        let mut best = (f64::INFINITY, (0, 0));
        for l in 0..self.gains.len() {
            for m in 0..self.symbols.len() {
                let d = self.metric(&y, (l, m), snr_linear);
                if d < best.0 {
                    best = (d, (l, m));
                }
            }
        }
        best.1
    }
}

pub fn ml_detect_reduced(
    z: &CVector,
    design: &MCADesign,
    effective: &EffectiveChannel,
    constellation: &Constellation,
    snr_linear: f64,
) -> Result<Hypothesis> {
    Ok(ReducedDetector::new(design, effective, constellation)?.detect(z, snr_linear))
}

/// Standard complex Gaussian vector, unit variance per entry.
pub fn complex_noise<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Inclusive `start:step:stop` grid in dB.
pub fn snr_grid(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start || !start.is_finite() || !stop.is_finite() {
        return Err(Error::invalid(format!("bad SNR grid {start}:{step}:{stop}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}

/// Everything a Monte-Carlo run needs.
#[derive(Debug, Clone)]
pub struct LinkConfig {
    pub w: CMatrix,
    pub effective: EffectiveChannel,
    pub constellation: Constellation,
    pub snr_db: Vec<f64>,
    pub symbols_per_point: u64,
    pub seed: u64,
    /// Thread count; `None` uses the global pool.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimPoint {
    pub snr_db: f64,
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub ber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub points: Vec<SimPoint>,
    pub seed: u64,
}

const CHUNK: u64 = 4096;

/// Simulates the whitened link at every SNR point. Each symbol draws from its
/// own counter-keyed stream, so the result does not depend on the thread count.
pub fn run_monte_carlo(config: &LinkConfig) -> Result<SimResult> {
    if config.symbols_per_point == 0 {
        return Err(Error::invalid("symbol budget must be positive"));
    }
    let table = HypothesisTable::new(&config.w, &config.effective, &config.constellation)?;
    let bits = bits_per_symbol(table.l, table.m)?;
    let n_hyp = table.l * table.m;
    let words: Vec<u32> = (0..n_hyp)
        .map(|i| hypothesis_word((i / table.m, i % table.m), &config.constellation))
        .collect();
    let run = || -> Vec<SimPoint> {
        config
            .snr_db
            .iter()
            .enumerate()
            .map(|(pi, &snr_db)| {
                let amp = db_to_linear(snr_db).sqrt();
                let chunks = config.symbols_per_point.div_ceil(CHUNK);
                let errors: u64 = (0..chunks)
                    .into_par_iter()
                    .map(|c| {
                        let end = ((c + 1) * CHUNK).min(config.symbols_per_point);
                        let mut errs = 0u64;
                        for sym in c * CHUNK..end {
                            let mut r = rng::stream(config.seed, pi as u64, sym);
                            let word: u32 = r.random_range(0..(1u32 << bits));
                            let (l, m) = split_word(word, &config.constellation);
                            let sent = l * table.m + m;
                            let noise = complex_noise(&mut r, config.effective.n_s);
                            let z = &table.images[sent] * Complex64::new(amp, 0.0) + noise;
                            let got = argmin_metric(&z, &table, amp);
                            errs += (words[got] ^ words[sent]).count_ones() as u64;
                        }
                        errs
                    })
                    .sum();
                let sent = config.symbols_per_point * bits as u64;
                SimPoint {
                    snr_db,
                    bits_sent: sent,
                    bit_errors: errors,
                    ber: errors as f64 / sent as f64,
                }
            })
            .collect()
    };
    let points = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    Ok(SimResult {
        points,
        seed: config.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ArrayConfig, MultipathComponent};
    use crate::constellation::Family;
    use crate::design;

    fn psk16() -> Constellation {
        Constellation::new(Family::Psk, 16).unwrap()
    }

    fn example2() -> (EffectiveChannel, design::MCADesign) {
        let eff = array::effective_channel(&channel::reference_scenario(), 4).unwrap();
        let d = design::optimize(&eff, &psk16(), 4, 2).unwrap().design;
        (eff, d)
    }

    #[test]
    fn mapping_roundtrip() {
        let c = psk16();
        assert_eq!(map_bits(&[0; 6], 4, &c).unwrap(), (0, c.index_of_label(0)));
        for word in 0..64u32 {
            let bits: Vec<u8> = (0..6).rev().map(|i| ((word >> i) & 1) as u8).collect();
            let h = map_bits(&bits, 4, &c).unwrap();
            assert_eq!(unmap(h, 4, &c).unwrap(), bits);
        }
        assert!(map_bits(&[0; 5], 4, &c).is_err());
        assert!(bits_per_symbol(3, 16).is_err());
    }

    #[test]
    fn broadside_transmit_is_all_ones() {
        let array = ArrayConfig::new(8, 8, 0.5, 0.5).unwrap();
        let sc = ChannelScenario::new("t", vec![MultipathComponent::new(1.0, std::f64::consts::FRAC_PI_2, 1.0)], array).unwrap();
        let bpsk = Constellation::new(Family::Psk, 2).unwrap();
        let x = transmit((0, 0), &CMatrix::identity(1, 1), &sc, &bpsk);
        for v in x.iter() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn transmit_power_bounded() {
        let sc = channel::reference_scenario();
        let (eff, d) = example2();
        let c = psk16();
        for l in 0..4 {
            let x = transmit((l, 3), &d.w, &sc, &c);
            assert!(x.norm_squared() <= sc.array.n_tx as f64 * (1.0 + 1e-12));
        }
        let _ = eff;
    }

    #[test]
    fn noiseless_reception_and_zero_snr() {
        let (eff, d) = example2();
        let c = psk16();
        let zero = CVector::zeros(4);
        let z = receive_whitened((1, 2), 1.0, &d.w, &eff, &c, &zero);
        let expect = &eff.g * d.w.row(1).adjoint() * c.symbol(2);
        assert!((z - expect).norm() < 1e-12);
        let n = CVector::from_element(4, Complex64::new(0.3, -0.1));
        assert!((receive_whitened((1, 2), 0.0, &d.w, &eff, &c, &n) - &n).norm() < 1e-15);
    }

    #[test]
    fn noiseless_detection() {
        let (eff, d) = example2();
        let c = psk16();
        let table = HypothesisTable::new(&d.w, &eff, &c).unwrap();
        let rho = 10.0;
        let z = receive_whitened((1, 2), rho, &d.w, &eff, &c, &CVector::zeros(4));
        assert_eq!(ml_detect(&z, &table, rho), (1, 2));
        let c1 = |re: f64, im: f64| CVector::from_element(1, Complex64::new(re, im));
        let flat = HypothesisTable {
            images: vec![c1(0.0, 1.0), c1(1.0, 0.0), c1(-1.0, 0.0), c1(0.0, -1.0)],
            l: 2,
            m: 2,
        };
        assert_eq!(ml_detect(&CVector::zeros(1), &flat, rho), (0, 0));
        let z = receive_whitened((3, 0), rho, &d.w, &eff, &c, &CVector::zeros(4));
        assert_eq!(ml_detect_reduced(&z, &d, &eff, &c, rho).unwrap(), (3, 0));
    }

    #[test]
    fn antenna_and_whitened_paths_agree() {
        let sc = channel::reference_scenario();
        let (eff, d) = example2();
        let c = psk16();
        let x = transmit((0, 0), &d.w, &sc, &c);
        let rho = 3.0;
        let z_a = receive_antenna(&x, rho, &sc, &eff, &CVector::zeros(16));
        let z_w = receive_whitened((0, 0), rho, &d.w, &eff, &c, &CVector::zeros(4));
        assert!((z_a - z_w).norm() < 1e-9);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(snr_grid(0.0, 5.0, 20.0).unwrap(), vec![0.0, 5.0, 10.0, 15.0, 20.0]);
        assert_eq!(snr_grid(1.0, 0.1, 1.3).unwrap().len(), 4);
        assert!(snr_grid(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn high_snr_is_error_free() {
        let (eff, d) = example2();
        let cfg = LinkConfig {
            w: d.w.clone(),
            effective: eff,
            constellation: psk16(),
            snr_db: vec![60.0],
            symbols_per_point: 10_000,
            seed: 1,
            workers: None,
        };
        let r = run_monte_carlo(&cfg).unwrap();
        assert_eq!(r.points[0].bit_errors, 0);
        assert_eq!(r.points[0].bits_sent, 60_000);
    }
}

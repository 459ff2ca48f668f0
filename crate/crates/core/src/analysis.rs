//! Union upper bound on the bit error probability, exhaustive minimum-distance
//! evaluation, ratio sweeps and multi-link aggregation.

use rayon::prelude::*;
use serde::Serialize;

use crate::array::{self, EffectiveChannel};
use crate::channel::ChannelScenario;
use crate::constellation::Constellation;
use crate::design::{self, Baseline, BeamVectorBook};
use crate::link::{self, Hypothesis, HypothesisTable};
use crate::qfunc;
use crate::{CMatrix, Error, Result};

pub use crate::qfunc::pairwise_ep;

/// Smallest squared distance between distinct hypotheses and one pair attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinEd {
    pub value: f64,
    pub pair: (Hypothesis, Hypothesis),
}

/// Exhaustive `min ‖G W(l₁,:)ᴴ s_{m₁} − G W(l₂,:)ᴴ s_{m₂}‖²`.
pub fn exact_min_ed(w: &CMatrix, effective: &EffectiveChannel, constellation: &Constellation) -> Result<MinEd> {
    let table = HypothesisTable::new(w, effective, constellation)?;
    let n = table.images.len();
    if n < 2 {
        return Err(Error::invalid("need at least two hypotheses"));
    }
    let mut best = MinEd {
        value: f64::INFINITY,
        pair: ((0, 0), (0, 0)),
    };
    for i in 0..n {
        for j in i + 1..n {
            let d = (&table.images[i] - &table.images[j]).norm_squared();
            if d < best.value {
                best = MinEd {
                    value: d,
                    pair: ((i / table.m, i % table.m), (j / table.m, j % table.m)),
                };
            }
        }
    }
    Ok(best)
}

/// Precomputed distances and Hamming weights of every hypothesis pair.
#[derive(Debug, Clone)]
pub struct UubEvaluator {
    /// `(J, N)` per unordered pair.
    terms: Vec<(f64, u32)>,
    norm: f64,
}

impl UubEvaluator {
    pub fn new(w: &CMatrix, effective: &EffectiveChannel, constellation: &Constellation) -> Result<Self> {
        let table = HypothesisTable::new(w, effective, constellation)?;
        Ok(Self::from_table(&table, constellation))
    }

    pub fn from_table(table: &HypothesisTable, constellation: &Constellation) -> Self {
        let n = table.images.len();
        let words: Vec<u32> = (0..n)
            .map(|i| link::hypothesis_word((i / table.m, i % table.m), constellation))
            .collect();
        let mut terms = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let ed = (&table.images[i] - &table.images[j]).norm_squared();
                terms.push((ed, (words[i] ^ words[j]).count_ones()));
            }
        }
        let norm = if n > 1 { n as f64 * (n as f64).log2() } else { 0.0 };
        UubEvaluator { terms, norm }
    }

    /// Builds the evaluator directly from distances, for tests and custom models.
    pub fn from_terms(terms: Vec<(f64, u32)>, n_hypotheses: usize) -> Self {
        let n = n_hypotheses as f64;
        let norm = if n_hypotheses > 1 { n * n.log2() } else { 0.0 };
        UubEvaluator { terms, norm }
    }

    /// `ln` of the bound; `-inf` when there is nothing to confuse.
    pub fn ln_uub(&self, snr_linear: f64) -> f64 {
        if self.terms.is_empty() || self.norm == 0.0 {
            return f64::NEG_INFINITY;
        }
        let logs: Vec<f64> = self
            .terms
            .iter()
            .filter(|(_, n)| *n > 0)
            .map(|&(ed, n)| (2.0 * n as f64).ln() + qfunc::ln_pairwise_ep(ed, snr_linear))
            .collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return top;
        }
        top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln() - self.norm.ln()
    }

    pub fn uub(&self, snr_linear: f64) -> f64 {
        self.ln_uub(snr_linear).exp()
    }

    pub fn curve(&self, snr_db: &[f64]) -> Vec<f64> {
        snr_db.iter().map(|&s| self.uub(link::db_to_linear(s))).collect()
    }

    /// SNR in dB where the bound crosses `target`, by bisection within `[lo, hi]`.
    pub fn snr_at(&self, target: f64, lo: f64, hi: f64) -> Option<f64> {
        let ln_t = target.ln();
        let f = |db: f64| self.ln_uub(link::db_to_linear(db)) - ln_t;
        let (mut a, mut b) = (lo, hi);
        if f(a) < 0.0 || f(b) > 0.0 {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if f(mid) > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < 1e-10 {
                break;
            }
        }
        Some(0.5 * (a + b))
    }
}

/// Bound on the average bit error probability at one linear SNR.
pub fn uub_abep(w: &CMatrix, effective: &EffectiveChannel, constellation: &Constellation, snr_linear: f64) -> Result<f64> {
    Ok(UubEvaluator::new(w, effective, constellation)?.uub(snr_linear))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbepCurve {
    pub snr_db: Vec<f64>,
    pub uub: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulated: Option<Vec<f64>>,
    pub config_digest: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdPoint {
    pub iota2: f64,
    pub min_ed: f64,
}

/// Minimum distance of the design built from each `ι₂` in the grid.
pub fn ed_sweep(
    effective: &EffectiveChannel,
    book: &BeamVectorBook,
    constellation: &Constellation,
    iota2: &[f64],
) -> Result<Vec<EdPoint>> {
    if book.n_sa() != 2 {
        return Err(Error::Unsupported("ratio sweeps need n_sa = 2".into()));
    }
    iota2
        .par_iter()
        .map(|&r| {
            let d = design::assemble_design(&[1.0, r], book, effective, constellation)?;
            Ok(EdPoint {
                iota2: r,
                min_ed: exact_min_ed(&d.w, effective, constellation)?.value,
            })
        })
        .collect()
}

/// `n` points spaced evenly in log scale over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepConfig {
    pub n_s: usize,
    pub n_sa: usize,
    pub l: usize,
    pub constellation: Constellation,
    pub baseline: Baseline,
    pub snr_db: Vec<f64>,
    /// Bound value at which the crossing SNR is reported.
    pub target: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinkOutcome {
    pub link_id: String,
    pub eigvals: Vec<f64>,
    pub uub: Vec<f64>,
    pub snr_at_target: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub snr_db: Vec<f64>,
    pub links: Vec<LinkOutcome>,
    /// `(link_id, reason)` for links excluded from the aggregate.
    pub failed: Vec<(String, String)>,
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
}

/// Bound curve for one link.
pub fn evaluate_link(scenario: &ChannelScenario, cfg: &SweepConfig) -> Result<LinkOutcome> {
    let eff = array::effective_channel(scenario, cfg.n_s)?;
    let pre = design::build_precoder(cfg.baseline, &eff, &cfg.constellation, cfg.l, cfg.n_sa)?;
    let ev = UubEvaluator::new(&pre.w, &eff, &cfg.constellation)?;
    Ok(LinkOutcome {
        link_id: scenario.link_id.clone(),
        eigvals: eff.eigvals.clone(),
        uub: ev.curve(&cfg.snr_db),
        snr_at_target: ev.snr_at(cfg.target, -50.0, 150.0),
    })
}

/// Evaluates every link and averages the bound across the ones that succeed.
pub fn scenario_sweep(scenarios: &[ChannelScenario], cfg: &SweepConfig) -> Result<SweepResult> {
    if scenarios.is_empty() {
        return Err(Error::invalid("no links to sweep"));
    }
    let outcomes: Vec<Result<LinkOutcome>> = scenarios.par_iter().map(|s| evaluate_link(s, cfg)).collect();
    let mut links = Vec::new();
    let mut failed = Vec::new();
    for (s, o) in scenarios.iter().zip(outcomes) {
        match o {
            Ok(o) => links.push(o),
            Err(e) => {
                log::warn!("link {} excluded: {e}", s.link_id);
                failed.push((s.link_id.clone(), e.to_string()));
            }
        }
    }
    if links.is_empty() {
        return Err(Error::EmptyLink(format!("all {} links failed", scenarios.len())));
    }
    let k = cfg.snr_db.len();
    let column = |i: usize| links.iter().map(|o| o.uub[i]).collect::<Vec<_>>();
    let mean = (0..k).map(|i| column(i).iter().sum::<f64>() / links.len() as f64).collect();
    let median = (0..k).map(|i| median(column(i))).collect();
    Ok(SweepResult {
        snr_db: cfg.snr_db.clone(),
        links,
        failed,
        mean,
        median,
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel;
    use crate::constellation::Family;

    fn scalar_channel() -> EffectiveChannel {
        EffectiveChannel::from_parts(CMatrix::identity(1, 1), CMatrix::identity(1, 1), false).unwrap()
    }

    #[test]
    fn bpsk_scalar() {
        let eff = scalar_channel();
        let bpsk = Constellation::new(Family::Psk, 2).unwrap();
        let w = CMatrix::identity(1, 1);
        assert!((exact_min_ed(&w, &eff, &bpsk).unwrap().value - 4.0).abs() < 1e-15);
        for rho in [0.5, 2.0, 10.0] {
            let u = uub_abep(&w, &eff, &bpsk, rho).unwrap();
            assert!((u / qfunc::q((2.0 * rho).sqrt()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_error_set() {
        let ev = UubEvaluator::from_terms(vec![], 1);
        assert_eq!(ev.uub(10.0), 0.0);
    }

    #[test]
    fn deep_tail_stays_positive() {
        let ev = UubEvaluator::from_terms(vec![(4.0, 1)], 2);
        let u = ev.uub(db_to_lin(25.0));
        assert!(u > 0.0 && u < 1e-30);
    }

    fn db_to_lin(db: f64) -> f64 {
        link::db_to_linear(db)
    }

    #[test]
    fn curve_decreasing() {
        let eff = array::effective_channel(&channel::reference_scenario(), 4).unwrap();
        let psk = Constellation::new(Family::Psk, 16).unwrap();
        let d = design::optimize(&eff, &psk, 4, 2).unwrap().design;
        let c = UubEvaluator::new(&d.w, &eff, &psk).unwrap().curve(&[0.0, 5.0, 10.0]);
        assert!(c[0] > c[1] && c[1] > c[2]);
    }

    #[test]
    fn target_crossing() {
        let ev = UubEvaluator::from_terms(vec![(4.0, 1)], 2);
        let s = ev.snr_at(1e-4, -20.0, 40.0).unwrap();
        assert!((ev.uub(db_to_lin(s)) / 1e-4 - 1.0).abs() < 1e-6);
        assert!(ev.snr_at(1e-4, 30.0, 40.0).is_none());
    }

    #[test]
    fn single_point_sweep() {
        let eff = array::effective_channel(&channel::reference_scenario(), 4).unwrap();
        let qam = Constellation::new(Family::SquareQam, 16).unwrap();
        let book = design::design_upsilon(4, 2, 4).unwrap();
        assert_eq!(ed_sweep(&eff, &book, &qam, &[1.0]).unwrap().len(), 1);
    }

    #[test]
    fn log_grid_ends() {
        let g = log_grid(1e-2, 1e2, 5);
        assert!((g[0] - 1e-2).abs() < 1e-15 && (g[4] - 1e2).abs() < 1e-10 && (g[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aggregate_of_identical_links() {
        let s = channel::reference_scenario();
        let cfg = SweepConfig {
            n_s: 4,
            n_sa: 2,
            l: 4,
            constellation: Constellation::new(Family::SquareQam, 16).unwrap(),
            baseline: Baseline::Mca,
            snr_db: vec![0.0, 10.0],
            target: 1e-4,
        };
        let one = scenario_sweep(std::slice::from_ref(&s), &cfg).unwrap();
        let two = scenario_sweep(&[s.clone(), s], &cfg).unwrap();
        assert_eq!(one.mean, one.links[0].uub);
        for i in 0..2 {
            assert!((two.mean[i] - one.mean[i]).abs() <= 1e-15 * one.mean[i]);
        }
        assert!(scenario_sweep(&[], &cfg).is_err());
    }

    #[test]
    fn failing_links_are_excluded() {
        let array = channel::ArrayConfig::default();
        // one path leaves only one usable eigen-subchannel
        let bad = ChannelScenario::new("solo", vec![channel::MultipathComponent::new(1.0, 1.0, 1.2)], array).unwrap();
        let cfg = SweepConfig {
            n_s: 1,
            n_sa: 2,
            l: 4,
            constellation: Constellation::new(Family::Psk, 4).unwrap(),
            baseline: Baseline::Mca,
            snr_db: vec![0.0],
            target: 1e-4,
        };
        assert!(scenario_sweep(std::slice::from_ref(&bad), &cfg).is_err());
        let mut cfg4 = cfg.clone();
        cfg4.n_s = 4;
        let good = channel::reference_scenario();
        let r = scenario_sweep(&[good, bad], &cfg4).unwrap();
        assert_eq!(r.failed.len(), 1);
        assert_eq!(r.links.len(), 1);
    }
}

//! Sparse multipath MIMO channel: ULA steering vectors, per-component rank-one
//! matrices, the composite channel and per-link parameter records.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};

use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Uniform linear arrays at both link ends. Spacings are in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub d_tx: f64,
    pub d_rx: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig {
            n_tx: 16,
            n_rx: 16,
            d_tx: 0.5,
            d_rx: 0.5,
        }
    }
}

impl ArrayConfig {
    pub fn new(n_tx: usize, n_rx: usize, d_tx: f64, d_rx: f64) -> Result<Self> {
        let cfg = ArrayConfig {
            n_tx,
            n_rx,
            d_tx,
            d_rx,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(Error::invalid("antenna counts must be at least 1"));
        }
        if !(self.d_tx > 0.0 && self.d_rx > 0.0) || !self.d_tx.is_finite() || !self.d_rx.is_finite() {
            return Err(Error::invalid("element spacings must be positive and finite"));
        }
        Ok(())
    }
}

/// One propagation path: gain and departure/arrival angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultipathComponent {
    pub gain: Complex64,
    pub aod: f64,
    pub aoa: f64,
}

impl MultipathComponent {
    pub fn new(gain: f64, aod: f64, aoa: f64) -> Self {
        MultipathComponent {
            gain: Complex64::new(gain, 0.0),
            aod,
            aoa,
        }
    }

    fn is_finite(&self) -> bool {
        self.gain.re.is_finite() && self.gain.im.is_finite() && self.aod.is_finite() && self.aoa.is_finite()
    }
}

/// A single link: its multipath components (strongest first) and array geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScenario {
    pub link_id: String,
    pub components: Vec<MultipathComponent>,
    pub array: ArrayConfig,
}

impl ChannelScenario {
    /// Validates the inputs and sorts components by descending `|gain|`.
    pub fn new(link_id: impl Into<String>, mut components: Vec<MultipathComponent>, array: ArrayConfig) -> Result<Self> {
        let link_id = link_id.into();
        array.validate()?;
        if components.is_empty() {
            return Err(Error::EmptyLink(link_id));
        }
        if let Some(bad) = components.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("link {link_id}: component {bad} has a non-finite value")));
        }
        sort_by_magnitude(&mut components);
        Ok(ChannelScenario {
            link_id,
            components,
            array,
        })
    }

    pub fn n_paths(&self) -> usize {
        self.components.len()
    }

    pub fn with_array(mut self, array: ArrayConfig) -> Self {
        self.array = array;
        self
    }

    pub fn gains(&self) -> Vec<Complex64> {
        self.components.iter().map(|c| c.gain).collect()
    }
}

fn sort_by_magnitude(components: &mut [MultipathComponent]) {
    // stable, so equal magnitudes keep their input order
    components.sort_by(|a, b| b.gain.norm().total_cmp(&a.gain.norm()));
}

/// ULA response with centered element indexing.
///
/// Element `k` (1-based) is `exp(j 2π d (k - (1+n)/2) cos θ)`.
pub fn steering_vector(n_elems: usize, spacing_wl: f64, angle: f64) -> CVector {
    let center = (1.0 + n_elems as f64) / 2.0;
    let phase_step = 2.0 * PI * spacing_wl * angle.cos();
    CVector::from_iterator(
        n_elems,
        (1..=n_elems).map(|k| Complex64::from_polar(1.0, phase_step * (k as f64 - center))),
    )
}

/// `H = Σ β a_rᴴ a_t` with steering vectors treated as rows (`N_r × N_t`).
pub fn build_channel_matrix(scenario: &ChannelScenario) -> CMatrix {
    let arr = &scenario.array;
    let mut h = CMatrix::zeros(arr.n_rx, arr.n_tx);
    for c in &scenario.components {
        let a_t = steering_vector(arr.n_tx, arr.d_tx, c.aod);
        let a_r = steering_vector(arr.n_rx, arr.d_rx, c.aoa);
        // a_rᴴ a_t with row vectors is the outer product conj(a_r) a_tᵀ
        h += (a_r.conjugate() * a_t.transpose()) * c.gain;
    }
    h
}

/// Scales gains to unit Euclidean norm. Angles and order are untouched.
pub fn normalize_gains(components: &[MultipathComponent]) -> Result<Vec<MultipathComponent>> {
    let norm = components.iter().map(|c| c.gain.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateChannel("all multipath gains are zero".into()));
    }
    Ok(components
        .iter()
        .map(|c| MultipathComponent {
            gain: c.gain / norm,
            ..*c
        })
        .collect())
}

/// The five-component indoor link used throughout the worked examples,
/// on 16-element half-wavelength arrays.
pub fn reference_scenario() -> ChannelScenario {
    let rows = [
        (0.9356, 2.0, 2.0),
        (-0.2807, 2.05, 1.6),
        (0.1871, 1.2, 2.4),
        (-0.0936, 3.0, 2.45),
        (0.0468, 0.4, 2.8),
    ];
    let comps = rows
        .iter()
        .map(|&(b, t, r)| MultipathComponent::new(b, t, r))
        .collect();
    ChannelScenario::new("0", comps, ArrayConfig::default()).expect("reference scenario is valid")
}

/// Input formats accepted by [`load_link_records`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    /// `link_id,path_id,beta,theta_t_rad,theta_r_rad` with an optional
    /// trailing `beta_im` column for complex gains.
    Csv,
    /// `{"links": [{"link_id": .., "beta": [..], "theta_t": [..], "theta_r": [..]}]}`
    Json,
}

impl RecordFormat {
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => RecordFormat::Json,
            _ => RecordFormat::Csv,
        }
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    link_id: String,
    #[allow(dead_code)]
    path_id: Option<String>,
    beta: f64,
    theta_t_rad: f64,
    theta_r_rad: f64,
    #[serde(default)]
    beta_im: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LinkRecord {
    pub link_id: serde_json::Value,
    pub beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_im: Option<Vec<f64>>,
    pub theta_t: Vec<f64>,
    pub theta_r: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LinkRecordFile {
    pub links: Vec<LinkRecord>,
}

/// Parses per-link multipath records. One scenario per distinct `link_id`, in
/// order of first appearance; gains optionally normalized to unit norm.
pub fn load_link_records(
    source: impl Read,
    format: RecordFormat,
    array: ArrayConfig,
    normalize: bool,
) -> Result<Vec<ChannelScenario>> {
    let grouped = match format {
        RecordFormat::Csv => parse_csv(source)?,
        RecordFormat::Json => parse_json(source)?,
    };
    let scenarios = grouped
        .into_iter()
        .map(|(id, comps)| {
            if comps.is_empty() {
                return Err(Error::EmptyLink(id));
            }
            let comps = if normalize { normalize_gains(&comps)? } else { comps };
            ChannelScenario::new(id, comps, array)
        })
        .collect::<Result<Vec<_>>>()?;
    log::debug!("loaded {} distinct links", scenarios.len());
    Ok(scenarios)
}

fn parse_csv(source: impl Read) -> Result<Vec<(String, Vec<MultipathComponent>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(false)
        .from_reader(source);
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<MultipathComponent>> = HashMap::new();
    for (i, rec) in reader.deserialize::<CsvRow>().enumerate() {
        // header is row 1
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            msg: e.to_string(),
        })?;
        let comp = MultipathComponent {
            gain: Complex64::new(rec.beta, rec.beta_im.unwrap_or(0.0)),
            aod: rec.theta_t_rad,
            aoa: rec.theta_r_rad,
        };
        if !comp.is_finite() {
            return Err(Error::Parse {
                row,
                msg: "non-finite value".into(),
            });
        }
        groups
            .entry(rec.link_id.clone())
            .or_insert_with(|| {
                order.push(rec.link_id.clone());
                Vec::new()
            })
            .push(comp);
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let comps = groups.remove(&id).unwrap_or_default();
            (id, comps)
        })
        .collect())
}

fn parse_json(source: impl Read) -> Result<Vec<(String, Vec<MultipathComponent>)>> {
    let file: LinkRecordFile = serde_json::from_reader(source)?;
    let mut out: Vec<(String, Vec<MultipathComponent>)> = Vec::new();
    for (i, link) in file.links.into_iter().enumerate() {
        let id = match &link.link_id {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        let n = link.beta.len();
        let im_ok = link.beta_im.as_ref().is_none_or(|v| v.len() == n);
        if link.theta_t.len() != n || link.theta_r.len() != n || !im_ok {
            return Err(Error::Parse {
                row: i + 1,
                msg: format!("link {id}: beta/theta_t/theta_r lengths differ"),
            });
        }
        let comps = (0..n)
            .map(|k| MultipathComponent {
                gain: Complex64::new(link.beta[k], link.beta_im.as_ref().map_or(0.0, |v| v[k])),
                aod: link.theta_t[k],
                aoa: link.theta_r[k],
            })
            .collect();
        match out.iter_mut().find(|(lid, _)| *lid == id) {
            Some((_, existing)) => existing.extend::<Vec<_>>(comps),
            None => out.push((id, comps)),
        }
    }
    Ok(out)
}

/// Writes scenarios in the CSV record format.
pub fn write_link_records_csv(scenarios: &[ChannelScenario], out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let complex = scenarios
        .iter()
        .flat_map(|s| &s.components)
        .any(|c| c.gain.im != 0.0);
    let mut header = vec!["link_id", "path_id", "beta", "theta_t_rad", "theta_r_rad"];
    if complex {
        header.push("beta_im");
    }
    w.write_record(&header).map_err(csv_io)?;
    for s in scenarios {
        for (k, c) in s.components.iter().enumerate() {
            let mut row = vec![
                s.link_id.clone(),
                (k + 1).to_string(),
                format!("{:.17e}", c.gain.re),
                format!("{:.17e}", c.aod),
                format!("{:.17e}", c.aoa),
            ];
            if complex {
                row.push(format!("{:.17e}", c.gain.im));
            }
            w.write_record(&row).map_err(csv_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Parameters of the synthetic link generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthProfile {
    /// Ratio between consecutive path magnitudes.
    pub decay: f64,
    /// Multiplicative spread applied to each magnitude, uniform in `[1-j, 1+j]`.
    pub jitter: f64,
    pub array: ArrayConfig,
}

impl Default for SynthProfile {
    fn default() -> Self {
        SynthProfile {
            decay: 0.5,
            jitter: 0.3,
            array: ArrayConfig::default(),
        }
    }
}

/// Deterministic synthetic link: geometrically decaying signed gains with
/// random jitter, angles uniform on `(0, π)`, gains normalized to unit norm.
pub fn synth_scenario(n_paths: usize, seed: u64, profile: &SynthProfile) -> Result<ChannelScenario> {
    if n_paths == 0 {
        return Err(Error::invalid("synthetic scenario needs at least one path"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps: Vec<MultipathComponent> = (0..n_paths)
        .map(|k| {
            let spread = 1.0 + profile.jitter * (2.0 * rng.random::<f64>() - 1.0);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let mag = profile.decay.powi(k as i32) * spread.max(1e-6);
            let aod = PI * rng.sample::<f64, _>(Open01);
            let aoa = PI * rng.sample::<f64, _>(Open01);
            MultipathComponent::new(sign * mag, aod, aoa)
        })
        .collect();
    let comps = normalize_gains(&comps)?;
    ChannelScenario::new(format!("synth-{seed}"), comps, profile.array)
}

/// `count` synthetic links with seeds `base_seed, base_seed+1, ...`.
pub fn synth_ensemble(count: usize, n_paths: usize, base_seed: u64, profile: &SynthProfile) -> Result<Vec<ChannelScenario>> {
    (0..count as u64)
        .map(|i| synth_scenario(n_paths, base_seed.wrapping_add(i), profile))
        .collect()
}

//! PSK and QAM symbol sets with Gray labels, their minimum distances, and the
//! reduced QAM symbol-pair sets used to enumerate cross-beam distance candidates.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Psk,
    SquareQam,
    RectQam,
}

impl Family {
    pub fn is_qam(self) -> bool {
        !matches!(self, Family::Psk)
    }
}

/// Unit-average-energy constellation. `labels[m]` is the Gray label of `symbols[m]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constellation {
    family: Family,
    order: usize,
    symbols: Vec<Complex64>,
    labels: Vec<u32>,
    #[serde(skip)]
    by_label: Vec<usize>,
}

/// Integer grid geometry of a QAM constellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QamGrid {
    pub in_phase_levels: usize,
    pub quadrature_levels: usize,
    /// Factor mapping odd-integer grid points to unit average energy.
    pub scale: f64,
}

fn gray(i: usize) -> u32 {
    (i ^ (i >> 1)) as u32
}

impl Constellation {
    pub fn new(family: Family, order: usize) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(Error::invalid(format!("modulation order must be a power of two >= 2, got {order}")));
        }
        let bits = order.trailing_zeros();
        let (symbols, labels) = match family {
            Family::Psk => {
                let symbols = (0..order)
                    .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / order as f64))
                    .collect();
                (symbols, (0..order).map(gray).collect())
            }
            Family::SquareQam | Family::RectQam => {
                if family == Family::SquareQam && bits % 2 != 0 {
                    return Err(Error::invalid(format!("square QAM needs an even number of bits per symbol, M = {order}")));
                }
                if family == Family::RectQam && (bits % 2 == 0 || order < 8) {
                    return Err(Error::invalid(format!(
                        "rectangular QAM needs an odd number of bits per symbol and M >= 8, M = {order}"
                    )));
                }
                let grid = qam_grid(family, order);
                let q_bits = grid.quadrature_levels.trailing_zeros();
                let mut symbols = Vec::with_capacity(order);
                let mut labels = Vec::with_capacity(order);
                for i in 0..grid.in_phase_levels {
                    for q in 0..grid.quadrature_levels {
                        let re = 2.0 * i as f64 - (grid.in_phase_levels as f64 - 1.0);
                        let im = 2.0 * q as f64 - (grid.quadrature_levels as f64 - 1.0);
                        symbols.push(Complex64::new(re, im) * grid.scale);
                        labels.push((gray(i) << q_bits) | gray(q));
                    }
                }
                (symbols, labels)
            }
        };
        let mut by_label = vec![0; order];
        for (m, &lab) in labels.iter().enumerate() {
            by_label[lab as usize] = m;
        }
        Ok(Constellation {
            family,
            order,
            symbols,
            labels,
            by_label,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.order.trailing_zeros()
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn symbol(&self, m: usize) -> Complex64 {
        self.symbols[m]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, m: usize) -> u32 {
        self.labels[m]
    }

    /// Symbol index carrying `label`.
    pub fn index_of_label(&self, label: u32) -> usize {
        self.by_label[label as usize]
    }

    pub fn grid(&self) -> Option<QamGrid> {
        self.family.is_qam().then(|| qam_grid(self.family, self.order))
    }

    /// Closed-form minimum distance between distinct symbols.
    pub fn min_distance(&self) -> f64 {
        let m = self.order as f64;
        match self.family {
            Family::Psk => 2.0 * (PI / m).sin(),
            Family::SquareQam => (6.0 / (m - 1.0)).sqrt(),
            Family::RectQam => (24.0 / (5.0 * m - 4.0)).sqrt(),
        }
    }

    /// Short name as used on the command line, e.g. `psk16`, `qam16`, `qam8r`.
    pub fn name(&self) -> String {
        match self.family {
            Family::Psk => format!("psk{}", self.order),
            Family::SquareQam => format!("qam{}", self.order),
            Family::RectQam => format!("qam{}r", self.order),
        }
    }

    /// Reduced symbol-pair set for QAM. See [`SymbolPairSet`].
    pub fn build_sm(&self) -> Result<SymbolPairSet> {
        let grid = self.grid().ok_or_else(|| {
            Error::invalid("symbol-pair sets are only defined for QAM; PSK candidates use beam-vector sums directly")
        })?;
        // first-octant representatives: odd R, odd I <= R, and I < R except for 1+j
        let max_i = grid.quadrature_levels - 1;
        let mut points = Vec::new();
        for r in (1..grid.in_phase_levels).step_by(2) {
            for i in (1..=r.min(max_i)).step_by(2) {
                if i < r || r == 1 {
                    points.push((r as i32, i as i32));
                }
            }
        }
        let mut levels = vec![((1, 1), (1, 1))];
        for (a, &p) in points.iter().enumerate() {
            for &q in &points[a + 1..] {
                levels.push((p, q));
            }
        }
        let to_c = |(r, i): (i32, i32)| Complex64::new(r as f64, i as f64) * grid.scale;
        Ok(SymbolPairSet {
            pairs: levels.iter().map(|&(p, q)| (to_c(p), to_c(q))).collect(),
            levels,
            scale: grid.scale,
        })
    }
}

fn qam_grid(family: Family, order: usize) -> QamGrid {
    let m = order as f64;
    match family {
        Family::SquareQam => {
            let side = (order as f64).sqrt().round() as usize;
            QamGrid {
                in_phase_levels: side,
                quadrature_levels: side,
                scale: (3.0 / (2.0 * (m - 1.0))).sqrt(),
            }
        }
        Family::RectQam => QamGrid {
            in_phase_levels: (2.0 * m).sqrt().round() as usize,
            quadrature_levels: (m / 2.0).sqrt().round() as usize,
            scale: (6.0 / (5.0 * m - 4.0)).sqrt(),
        },
        Family::Psk => unreachable!("PSK has no grid"),
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Constellation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let parse = |digits: &str| {
            digits
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("unrecognized constellation '{s}'")))
        };
        if let Some(rest) = lower.strip_prefix("psk") {
            return Constellation::new(Family::Psk, parse(rest)?);
        }
        if let Some(rest) = lower.strip_prefix("qam") {
            return match rest.strip_suffix('r') {
                Some(digits) => Constellation::new(Family::RectQam, parse(digits)?),
                None => {
                    let m = parse(rest)?;
                    let family = if m.trailing_zeros() % 2 == 0 { Family::SquareQam } else { Family::RectQam };
                    Constellation::new(family, m)
                }
            };
        }
        Err(Error::invalid(format!("unrecognized constellation '{s}' (expected e.g. psk16, qam16, qam8r)")))
    }
}

/// Symbol pairs sufficient to generate every minimal cross-beam distance
/// candidate of a QAM constellation.
///
/// The set is every unordered pair of distinct first-octant grid points plus
/// the pair `(1+j, 1+j)`; the other octants follow by symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolPairSet {
    pub pairs: Vec<(Complex64, Complex64)>,
    /// Odd-integer grid coordinates `((R₁, I₁), (R₂, I₂))` of each pair.
    pub levels: Vec<((i32, i32), (i32, i32))>,
    pub scale: f64,
}

impl SymbolPairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

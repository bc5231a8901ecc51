//! Link data-rate arithmetic and power lookup against measured transmission
//! figures for a 1 Mbps dual-microphone baseline.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BudgetError {
    #[error("compression ratio must be >= 1 (got {0})")]
    RatioBelowOne(f64),
    #[error("duplicate power row for {transport} at cr {cr}")]
    DuplicateRow { transport: Transport, cr: f64 },
    #[error("power must be positive")]
    NonPositivePower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Transport {
    Wifi,
    Bluetooth,
}

impl fmt::Display for Transport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transport::Wifi => "wifi",
            Transport::Bluetooth => "bluetooth",
        })
    }
}

impl FromStr for Transport {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wifi" | "wi-fi" => Ok(Transport::Wifi),
            "bluetooth" | "ble" | "bt" => Ok(Transport::Bluetooth),
            other => Err(format!("unknown transport '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerRow {
    pub transport: Transport,
    /// 1.0 for uncompressed transmission.
    pub cr: f64,
    pub rate_bps: f64,
    pub power_mw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Measured,
    Interpolated,
    Unavailable,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Measured => "measured",
            Provenance::Interpolated => "interpolated",
            Provenance::Unavailable => "unavailable",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerEstimate {
    pub power_mw: Option<f64>,
    pub provenance: Provenance,
}

pub const BASELINE_RATE_BPS: f64 = 1e6;

/// Average power while streaming two PCG microphones.
pub const MEASURED_ROWS: [PowerRow; 5] = [
    PowerRow { transport: Transport::Wifi, cr: 1.0, rate_bps: 1e6, power_mw: 25.0 },
    PowerRow { transport: Transport::Wifi, cr: 10.0, rate_bps: 100e3, power_mw: 23.5 },
    PowerRow { transport: Transport::Wifi, cr: 30.0, rate_bps: 33e3, power_mw: 22.8 },
    PowerRow { transport: Transport::Bluetooth, cr: 10.0, rate_bps: 100e3, power_mw: 6.6 },
    PowerRow { transport: Transport::Bluetooth, cr: 30.0, rate_bps: 33e3, power_mw: 4.9 },
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkProfile {
    baseline_rate_bps: f64,
    rows: Vec<PowerRow>,
}

impl Default for LinkProfile {
    fn default() -> Self {
        Self {
            baseline_rate_bps: BASELINE_RATE_BPS,
            rows: MEASURED_ROWS.to_vec(),
        }
    }
}

impl LinkProfile {
    pub fn new(baseline_rate_bps: f64, rows: Vec<PowerRow>) -> Result<Self, BudgetError> {
        for (i, r) in rows.iter().enumerate() {
            if !(r.power_mw > 0.0) {
                return Err(BudgetError::NonPositivePower);
            }
            if rows[..i]
                .iter()
                .any(|o| o.transport == r.transport && o.cr == r.cr)
            {
                return Err(BudgetError::DuplicateRow {
                    transport: r.transport,
                    cr: r.cr,
                });
            }
        }
        Ok(Self {
            baseline_rate_bps,
            rows,
        })
    }

    pub fn baseline_rate_bps(&self) -> f64 {
        self.baseline_rate_bps
    }

    pub fn rows(&self) -> &[PowerRow] {
        &self.rows
    }

    /// Rows for one transport, sorted by compression ratio.
    pub fn rows_for(&self, transport: Transport) -> Vec<PowerRow> {
        let mut rows: Vec<PowerRow> = self
            .rows
            .iter()
            .copied()
            .filter(|r| r.transport == transport)
            .collect();
        rows.sort_by(|a, b| a.cr.total_cmp(&b.cr));
        rows
    }

    /// Exact row if one exists, otherwise linear interpolation in ln(cr)
    /// between the bracketing rows of the same transport. Outside the
    /// measured span the answer is unavailable rather than extrapolated.
    pub fn power_lookup(&self, transport: Transport, cr: f64) -> PowerEstimate {
        let rows = self.rows_for(transport);
        if let Some(r) = rows.iter().find(|r| r.cr == cr) {
            return PowerEstimate {
                power_mw: Some(r.power_mw),
                provenance: Provenance::Measured,
            };
        }
        for pair in rows.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if lo.cr < cr && cr < hi.cr {
                let t = (cr.ln() - lo.cr.ln()) / (hi.cr.ln() - lo.cr.ln());
                return PowerEstimate {
                    power_mw: Some(lo.power_mw + t * (hi.power_mw - lo.power_mw)),
                    provenance: Provenance::Interpolated,
                };
            }
        }
        PowerEstimate {
            power_mw: None,
            provenance: Provenance::Unavailable,
        }
    }
}

/// Baseline rate divided by the compression ratio.
pub fn effective_rate(baseline_rate_bps: f64, cr: f64) -> Result<f64, BudgetError> {
    if !(cr >= 1.0) {
        return Err(BudgetError::RatioBelowOne(cr));
    }
    Ok(baseline_rate_bps / cr)
}

/// Human-readable power line, e.g. `4.9 mW (measured)`.
pub fn format_power(estimate: &PowerEstimate) -> String {
    match estimate.power_mw {
        Some(p) => format!("{p:.1} mW ({})", estimate.provenance),
        None => "unavailable".to_string(),
    }
}

/// Rounds to `digits` significant figures.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mag = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits - 1 - mag);
    (x * scale).round() / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates() {
        assert_eq!(effective_rate(1e6, 10.0).unwrap(), 100e3);
        assert_eq!(round_sig(effective_rate(1e6, 30.0).unwrap(), 3), 33_300.0);
        assert_eq!(effective_rate(1e6, 1.0).unwrap(), 1e6);
        assert!(effective_rate(1e6, 0.5).is_err());
        assert!(effective_rate(1e6, f64::NAN).is_err());
    }

    #[test]
    fn measured_rows_exact() {
        let p = LinkProfile::default();
        let cases = [
            (Transport::Wifi, 1.0, 25.0),
            (Transport::Wifi, 10.0, 23.5),
            (Transport::Wifi, 30.0, 22.8),
            (Transport::Bluetooth, 10.0, 6.6),
            (Transport::Bluetooth, 30.0, 4.9),
        ];
        for (t, cr, mw) in cases {
            let e = p.power_lookup(t, cr);
            assert_eq!(e.power_mw, Some(mw));
            assert_eq!(e.provenance, Provenance::Measured);
        }
        assert_eq!(format_power(&p.power_lookup(Transport::Bluetooth, 30.0)), "4.9 mW (measured)");
    }

    #[test]
    fn interpolation_is_bracketed_and_flagged() {
        let p = LinkProfile::default();
        let e = p.power_lookup(Transport::Bluetooth, 20.0);
        assert_eq!(e.provenance, Provenance::Interpolated);
        let v = e.power_mw.unwrap();
        assert!(v > 4.9 && v < 6.6, "{v}");
        // ln-linear: t = ln 2 / ln 3
        let t = 2f64.ln() / 3f64.ln();
        assert!((v - (6.6 + t * (4.9 - 6.6))).abs() < 1e-12);
    }

    #[test]
    fn outside_hull_is_unavailable() {
        let p = LinkProfile::default();
        for (t, cr) in [(Transport::Bluetooth, 1.0), (Transport::Bluetooth, 40.0), (Transport::Wifi, 31.0)] {
            let e = p.power_lookup(t, cr);
            assert_eq!(e.provenance, Provenance::Unavailable);
            assert_eq!(e.power_mw, None);
            assert_eq!(format_power(&e), "unavailable");
        }
    }

    #[test]
    fn seed_rows_non_increasing_in_cr() {
        let p = LinkProfile::default();
        for t in [Transport::Wifi, Transport::Bluetooth] {
            let rows = p.rows_for(t);
            assert!(rows.windows(2).all(|w| w[1].power_mw <= w[0].power_mw));
        }
    }

    #[test]
    fn rates_match_measured_rows_to_table_precision() {
        for r in MEASURED_ROWS {
            let rate = effective_rate(BASELINE_RATE_BPS, r.cr).unwrap();
            // The table lists 33 kbps for 1 Mbps / 30.
            assert_eq!((rate / 1e3).round(), r.rate_bps / 1e3);
        }
    }

    #[test]
    fn profile_validation() {
        let dup = vec![MEASURED_ROWS[0], MEASURED_ROWS[0]];
        assert!(matches!(LinkProfile::new(1e6, dup), Err(BudgetError::DuplicateRow { .. })));
        let mut bad = MEASURED_ROWS[1];
        bad.power_mw = 0.0;
        assert_eq!(LinkProfile::new(1e6, vec![bad]), Err(BudgetError::NonPositivePower));
    }
}

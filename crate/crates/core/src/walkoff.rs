//! Beam-steering curves: the flux-ratio angle, curve smoothing and zero
//! crossings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::WalkoffCurve;

/// Near-zero minima of |η| below this are reported as tangencies.
pub const DEFAULT_TANGENCY_THRESHOLD_DEG: f64 = 0.1;

/// Walk-off angle in degrees, in (−90, 90), from the transverse and
/// parallel power flux and the matching normalizations.
pub fn walkoff_from_flux(p_perp: f64, p_par: f64, a_perp: f64, a_par: f64) -> Result<f64> {
    if !(a_perp > 0.0 && a_par > 0.0) {
        return Err(Error::invalid(
            "flux normalization",
            "a_perp and a_par must be positive",
        ));
    }
    if p_par == 0.0 {
        return Err(Error::NonPropagating);
    }
    Ok(((p_perp / a_perp) / (p_par / a_par)).atan().to_degrees())
}

/// Moving average over `2·half_width + 1` samples with half-sample
/// symmetric reflection at both ends, which keeps the curve mean.
pub fn smooth_curve(curve: &WalkoffCurve, half_width: usize) -> Result<WalkoffCurve> {
    let n = curve.len();
    if half_width == 0 || 2 * half_width >= n {
        return Err(Error::invalid(
            "smoothing half width",
            format!("{half_width} must be in 1..{}", n.div_ceil(2)),
        ));
    }
    let eta = curve.eta_deg();
    let at = |i: isize| -> f64 {
        let n = n as isize;
        let j = if i < 0 {
            -i - 1
        } else if i >= n {
            2 * n - 1 - i
        } else {
            i
        };
        eta[j as usize]
    };
    let w = half_width as isize;
    let norm = (2 * half_width + 1) as f64;
    let smoothed = (0..n as isize)
        .map(|i| (i - w..=i + w).map(at).sum::<f64>() / norm)
        .collect();
    WalkoffCurve::new(curve.theta_deg().to_vec(), smoothed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroCrossing {
    pub theta_deg: f64,
    pub slope_deg_per_deg: f64,
    pub uncertainty_deg: f64,
}

/// A near-zero minimum of |η| without a sign change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tangency {
    pub theta_deg: f64,
    pub eta_deg: f64,
}

/// Sign changes between samples, refined by linear interpolation. A run of
/// exact zeros between opposite signs counts once, at the run's middle.
pub fn find_zero_crossings(curve: &WalkoffCurve) -> Vec<ZeroCrossing> {
    let th = curve.theta_deg();
    let eta = curve.eta_deg();
    let n = eta.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < n {
        let (a, b) = (eta[i], eta[i + 1]);
        if a != 0.0 && b != 0.0 {
            if (a < 0.0) != (b < 0.0) {
                let h = th[i + 1] - th[i];
                let t = a / (a - b);
                out.push(ZeroCrossing {
                    theta_deg: th[i] + t * h,
                    slope_deg_per_deg: (b - a) / h,
                    uncertainty_deg: 0.5 * h,
                });
            }
            i += 1;
            continue;
        }
        if a != 0.0 && b == 0.0 {
            // Zero run starts at i + 1.
            let start = i + 1;
            let mut end = start;
            while end + 1 < n && eta[end + 1] == 0.0 {
                end += 1;
            }
            if end + 1 < n && (a < 0.0) != (eta[end + 1] < 0.0) {
                let (lo, hi) = (i, end + 1);
                out.push(ZeroCrossing {
                    theta_deg: 0.5 * (th[start] + th[end]),
                    slope_deg_per_deg: (eta[hi] - eta[lo]) / (th[hi] - th[lo]),
                    uncertainty_deg: 0.25 * (th[hi] - th[lo]),
                });
            }
            i = end + 1;
            continue;
        }
        i += 1;
    }
    out
}

/// Local minima of |η| below `threshold_deg` whose neighbours share a sign
/// (touching zero without crossing).
pub fn find_tangencies(curve: &WalkoffCurve, threshold_deg: f64) -> Vec<Tangency> {
    let th = curve.theta_deg();
    let eta = curve.eta_deg();
    let n = eta.len();
    let mut out = Vec::new();
    for i in 1..n - 1 {
        let (l, m, r) = (eta[i - 1], eta[i], eta[i + 1]);
        if m.abs() >= threshold_deg || m.abs() > l.abs() || m.abs() > r.abs() {
            continue;
        }
        // Ties on the left belong to the earlier sample.
        if m.abs() == l.abs() {
            continue;
        }
        let same_side = (l > 0.0 && r > 0.0) || (l < 0.0 && r < 0.0);
        let no_crossing = m == 0.0 || (m > 0.0) == (l > 0.0);
        if same_side && no_crossing {
            out.push(Tangency {
                theta_deg: th[i],
                eta_deg: m,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkoffReport {
    /// Smoothing half width applied before the search; 0 means raw data.
    pub half_width: usize,
    pub zeros: Vec<ZeroCrossing>,
    pub tangencies: Vec<Tangency>,
}

/// Optional smoothing followed by crossing and tangency search.
pub fn analyze(
    curve: &WalkoffCurve,
    half_width: usize,
    tangency_threshold_deg: f64,
) -> Result<(WalkoffReport, WalkoffCurve)> {
    let searched = if half_width == 0 {
        curve.clone()
    } else {
        smooth_curve(curve, half_width)?
    };
    let report = WalkoffReport {
        half_width,
        zeros: find_zero_crossings(&searched),
        tangencies: find_tangencies(&searched, tangency_threshold_deg),
    };
    Ok((report, searched))
}

//! Topograph analysis: scan-line flattening, three-point leveling, RMS
//! roughness and terrace step heights from a height histogram.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsq::{self, Bounds, Options, Problem};
use crate::spectra::AfmImage;

pub const DEFAULT_LINE_ORDER: usize = 1;
/// Lower limit on the histogram bin width.
pub const MIN_BIN_WIDTH_M: f64 = 10e-12;

/// Discrete orthonormal polynomial basis of degree `0..=order` on `n`
/// equally spaced samples (Gram–Schmidt on centered monomials).
fn orthonormal_basis(n: usize, order: usize) -> Vec<Vec<f64>> {
    let mid = (n as f64 - 1.0) / 2.0;
    let half = mid.max(1.0);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let mut v: Vec<f64> = (0..n)
            .map(|i| ((i as f64 - mid) / half).powi(k as i32))
            .collect();
        // Two passes keep the basis orthogonal to rounding level.
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }
    basis
}

/// Relative size of the row's polynomial component below which the row
/// counts as flat.
const FLAT_ROW_TOLERANCE: f64 = 1e-12;

/// Subtracts the least-squares polynomial of degree `order` (0, 1 or 2) from
/// every scan row.
pub fn remove_line_tilt(image: &AfmImage, order: usize) -> Result<AfmImage> {
    if order > 2 {
        return Err(Error::invalid(
            "line order",
            format!("{order} is not in 0..=2"),
        ));
    }
    let nx = image.nx();
    if nx < order + 1 {
        return Err(Error::invalid(
            "line order",
            format!("rows of {nx} samples cannot fit degree {order}"),
        ));
    }
    let basis = orthonormal_basis(nx, order);
    let mut out = Vec::with_capacity(nx * image.ny());
    for y in 0..image.ny() {
        let mut row = image.row(y).to_vec();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        let coeffs: Vec<f64> = basis
            .iter()
            .map(|q| row.iter().zip(q).map(|(a, b)| a * b).sum())
            .collect();
        // Rows already flat to rounding are left untouched so that a second
        // pass is an exact no-op.
        if coeffs.iter().any(|c| c.abs() > FLAT_ROW_TOLERANCE * norm) {
            for q in &basis {
                let c: f64 = row.iter().zip(q).map(|(a, b)| a * b).sum();
                row.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        out.extend(row);
    }
    Ok(image.with_heights(out))
}

/// Pixel coordinate `(x, y)`: column, row.
pub type Pixel = (usize, usize);

/// `z = offset + slope_x·x + slope_y·y`, in meters per pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub offset_m: f64,
    pub slope_x_m_per_px: f64,
    pub slope_y_m_per_px: f64,
}

impl Plane {
    pub fn at(&self, x: f64, y: f64) -> f64 {
        self.offset_m + self.slope_x_m_per_px * x + self.slope_y_m_per_px * y
    }
}

fn median3x3(image: &AfmImage, (x, y): Pixel) -> f64 {
    let mut v = Vec::with_capacity(9);
    for yy in y.saturating_sub(1)..=(y + 1).min(image.ny() - 1) {
        for xx in x.saturating_sub(1)..=(x + 1).min(image.nx() - 1) {
            v.push(image.at(xx, yy));
        }
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Plane through the 3×3 medians at three pixels.
pub fn plane_through(image: &AfmImage, points: [Pixel; 3]) -> Result<Plane> {
    for &(x, y) in &points {
        if x >= image.nx() || y >= image.ny() {
            return Err(Error::invalid(
                "leveling point",
                format!(
                    "({x}, {y}) lies outside the {}x{} image",
                    image.nx(),
                    image.ny()
                ),
            ));
        }
    }
    let [p1, p2, p3] = points.map(|(x, y)| (x as f64, y as f64));
    let [z1, z2, z3] = points.map(|p| median3x3(image, p));
    let (ax, ay) = (p2.0 - p1.0, p2.1 - p1.1);
    let (bx, by) = (p3.0 - p1.0, p3.1 - p1.1);
    let det = ax * by - ay * bx;
    if det == 0.0 {
        return Err(Error::invalid(
            "leveling points",
            "the three points are collinear",
        ));
    }
    let (dz2, dz3) = (z2 - z1, z3 - z1);
    let sx = (dz2 * by - dz3 * ay) / det;
    let sy = (ax * dz3 - bx * dz2) / det;
    Ok(Plane {
        offset_m: z1 - sx * p1.0 - sy * p1.1,
        slope_x_m_per_px: sx,
        slope_y_m_per_px: sy,
    })
}

/// Subtracts the plane through the 3×3 medians at `points`.
pub fn three_point_level(image: &AfmImage, points: [Pixel; 3]) -> Result<(AfmImage, Plane)> {
    let plane = plane_through(image, points)?;
    let nx = image.nx();
    let heights = image
        .heights_m()
        .iter()
        .enumerate()
        .map(|(i, h)| h - plane.at((i % nx) as f64, (i / nx) as f64))
        .collect();
    Ok((image.with_heights(heights), plane))
}

/// `sqrt(mean((h − mean h)²))`. Heights are taken relative to the first
/// pixel so a constant image gives exactly zero.
pub fn rms_roughness(image: &AfmImage) -> f64 {
    let h = image.heights_m();
    let h0 = h[0];
    let n = h.len() as f64;
    let mean = h.iter().map(|v| v - h0).sum::<f64>() / n;
    (h.iter().map(|v| (v - h0 - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin centers.
    pub centers_m: Vec<f64>,
    pub counts: Vec<f64>,
    pub bin_width_m: f64,
}

/// Height histogram with Freedman–Diaconis bins, no narrower than
/// [`MIN_BIN_WIDTH_M`].
pub fn height_histogram(image: &AfmImage) -> Histogram {
    let mut h = image.heights_m().to_vec();
    h.sort_by(f64::total_cmp);
    let n = h.len();
    let q = |p: f64| {
        let pos = p * (n - 1) as f64;
        let i = pos.floor() as usize;
        let t = pos - i as f64;
        if i + 1 < n {
            h[i] + t * (h[i + 1] - h[i])
        } else {
            h[i]
        }
    };
    let iqr = q(0.75) - q(0.25);
    let (lo, hi) = (h[0], h[n - 1]);
    let fd = 2.0 * iqr / (n as f64).cbrt();
    // Cap the bin count so a few wild outliers cannot explode memory.
    let width = fd.max(MIN_BIN_WIDTH_M).max((hi - lo) / 10_000.0);
    let nbins = (((hi - lo) / width).floor() as usize + 1).max(1);
    let mut counts = vec![0.0; nbins];
    for v in &h {
        let k = (((v - lo) / width) as usize).min(nbins - 1);
        counts[k] += 1.0;
    }
    Histogram {
        centers_m: (0..nbins).map(|k| lo + (k as f64 + 0.5) * width).collect(),
        counts,
        bin_width_m: width,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Mode {
    index: usize,
    height: f64,
    prominence: f64,
}

/// Local maxima of the smoothed histogram whose prominence clears both
/// counting noise and 2% of the tallest bin, most prominent first.
fn histogram_modes(counts: &[f64]) -> (Vec<f64>, Vec<Mode>) {
    let n = counts.len();
    let half = (n / 60).max(1);
    let width = (2 * half + 1) as f64;
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            counts[lo..hi].iter().sum::<f64>() / width
        })
        .collect();
    let top = smooth.iter().cloned().fold(0.0, f64::max);
    let mut modes = Vec::new();
    for k in 0..n {
        let left_ok = k == 0 || smooth[k] > smooth[k - 1];
        let right_ok = k + 1 == n || smooth[k] >= smooth[k + 1];
        if !(left_ok && right_ok) || smooth[k] <= 0.0 {
            continue;
        }
        let mut left_min = smooth[k];
        let mut j = k;
        while j > 0 {
            j -= 1;
            if smooth[j] > smooth[k] {
                break;
            }
            left_min = left_min.min(smooth[j]);
        }
        let mut right_min = smooth[k];
        let mut j = k;
        while j + 1 < n {
            j += 1;
            if smooth[j] > smooth[k] {
                break;
            }
            right_min = right_min.min(smooth[j]);
        }
        let prominence = smooth[k] - left_min.max(right_min);
        let threshold = (4.0 * (smooth[k] / width).sqrt()).max(0.02 * top);
        if prominence >= threshold {
            modes.push(Mode {
                index: k,
                height: smooth[k],
                prominence,
            });
        }
    }
    modes.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));
    (smooth, modes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepHeightResult {
    /// Gaussian centers, ascending.
    pub centers_m: Vec<f64>,
    pub center_errors_m: Vec<f64>,
    pub sigmas_m: Vec<f64>,
    /// Gaussian peak heights in histogram counts per bin.
    pub amplitudes: Vec<f64>,
    /// Consecutive center differences.
    pub step_heights_m: Vec<f64>,
    /// Root-sum-square of the adjacent center uncertainties.
    pub step_height_errors_m: Vec<f64>,
    pub mean_step_m: f64,
    pub mean_step_err_m: f64,
    /// Mean fitted Gaussian width, the width-based spread convention.
    pub mean_step_width_m: f64,
    pub bin_width_m: f64,
    pub n_iterations: usize,
}

/// Per Gaussian: `[amplitude, center, sigma]`, evaluated on bin centers.
struct MixtureProblem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    scales: Vec<f64>,
}

fn gaussians(p: &[f64], x: f64) -> f64 {
    p.chunks(3)
        .map(|g| g[0] * (-0.5 * ((x - g[1]) / g[2]).powi(2)).exp())
        .sum()
}

impl Problem for MixtureProblem<'_> {
    fn n_params(&self) -> usize {
        9
    }

    fn n_residuals(&self) -> usize {
        self.x.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for ((o, &x), &y) in out.iter_mut().zip(self.x).zip(self.y) {
            *o = gaussians(p, x) - y;
        }
    }

    fn scales(&self) -> Vec<f64> {
        self.scales.clone()
    }
}

/// Fits three Gaussians to the height histogram, seeded at its three most
/// prominent modes, and reports the two terrace steps.
pub fn fit_step_heights(image: &AfmImage) -> Result<StepHeightResult> {
    let hist = height_histogram(image);
    let (smooth, modes) = histogram_modes(&hist.counts);
    if modes.len() < 3 {
        return Err(Error::TooFewModes { found: modes.len() });
    }
    let mut seeds: Vec<Mode> = modes[..3].to_vec();
    seeds.sort_by_key(|m| m.index);
    let w = hist.bin_width_m;
    let spacing = (seeds[2].index - seeds[0].index) as f64 * w / 2.0;
    let sigma0 = (spacing / 3.0).max(w);
    if hist.counts.len() < 9 {
        return Err(Error::Degenerate(format!(
            "{} histogram bins cannot constrain three Gaussians",
            hist.counts.len()
        )));
    }
    let mut x0 = Vec::with_capacity(9);
    let mut bounds = Bounds::unbounded(9);
    let top = smooth.iter().cloned().fold(0.0, f64::max);
    for (k, m) in seeds.iter().enumerate() {
        x0.extend([m.height, hist.centers_m[m.index], sigma0]);
        bounds.lower[3 * k] = 0.0;
        bounds.lower[3 * k + 2] = 0.25 * w;
    }
    let problem = MixtureProblem {
        x: &hist.centers_m,
        y: &hist.counts,
        scales: [top, 10.0 * w, sigma0].repeat(3),
    };
    let out = lsq::minimize(&problem, &x0, &bounds, &Options::default())?;
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| out.params[3 * a + 1].total_cmp(&out.params[3 * b + 1]));
    let centers: Vec<f64> = order.iter().map(|&k| out.params[3 * k + 1]).collect();
    let center_errors: Vec<f64> = order.iter().map(|&k| out.errors[3 * k + 1]).collect();
    let sigmas: Vec<f64> = order.iter().map(|&k| out.params[3 * k + 2].abs()).collect();
    let amplitudes: Vec<f64> = order.iter().map(|&k| out.params[3 * k]).collect();
    if !(centers[0] < centers[1] && centers[1] < centers[2]) {
        return Err(Error::Degenerate(
            "fitted height populations coincide".into(),
        ));
    }
    let steps = vec![centers[1] - centers[0], centers[2] - centers[1]];
    let step_errors = vec![
        center_errors[0].hypot(center_errors[1]),
        center_errors[1].hypot(center_errors[2]),
    ];
    Ok(StepHeightResult {
        mean_step_m: 0.5 * (centers[2] - centers[0]),
        mean_step_err_m: 0.5 * center_errors[0].hypot(center_errors[2]),
        mean_step_width_m: sigmas.iter().sum::<f64>() / 3.0,
        centers_m: centers,
        center_errors_m: center_errors,
        sigmas_m: sigmas,
        amplitudes,
        step_heights_m: steps,
        step_height_errors_m: step_errors,
        bin_width_m: w,
        n_iterations: out.iterations,
    })
}

//! Tomograms with error bars from forward/backward histograms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::model::{histogram_to_tomogram, DecayModel, DetectorGeometry};
use super::simulate::HistogramSeries;
use crate::error::{Error, Result};
use crate::spin::Direction;

/// Bins whose forward plus backward count is below this are low-confidence.
pub const DEFAULT_COUNT_FLOOR: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationOptions {
    pub count_floor: u64,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        EstimationOptions {
            count_floor: DEFAULT_COUNT_FLOOR,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinEstimate {
    pub t_start: f64,
    pub t_end: f64,
    /// Raw forward plus backward counts.
    pub counts: u64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub sigma: f64,
    pub low_confidence: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisEstimate {
    pub axis: Direction,
    pub forward: usize,
    pub backward: usize,
    /// Fitted flat background per detector, counts per ns.
    pub background_rate: f64,
    pub bins: Vec<BinEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomogramEstimate {
    pub axes: Vec<AxisEstimate>,
}

impl TomogramEstimate {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "axis_theta",
            "axis_phi",
            "bin_start_ns",
            "bin_end_ns",
            "counts",
            "w_plus",
            "sigma",
            "low_confidence",
        ])?;
        for ax in &self.axes {
            for b in &ax.bins {
                wr.write_record([
                    ax.axis.theta().to_string(),
                    ax.axis.phi().to_string(),
                    b.t_start.to_string(),
                    b.t_end.to_string(),
                    b.counts.to_string(),
                    b.w_plus.to_string(),
                    b.sigma.to_string(),
                    b.low_confidence.to_string(),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// `∫ e^{−t/τ} dt` over `[t0, t1]`.
fn decay_integral(t0: f64, t1: f64, tau: f64) -> f64 {
    tau * ((-t0 / tau).exp() - (-t1 / tau).exp())
}

/// Weighted least squares for `y = S g + r h`, with `r` kept nonnegative.
fn fit_signal_and_background(y: &[f64], var: &[f64], g: &[f64], h: &[f64]) -> (f64, f64) {
    let (mut sgg, mut sgh, mut shh, mut sgy, mut shy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..y.len() {
        let w = 1.0 / var[k].max(1.0);
        sgg += w * g[k] * g[k];
        sgh += w * g[k] * h[k];
        shh += w * h[k] * h[k];
        sgy += w * g[k] * y[k];
        shy += w * h[k] * y[k];
    }
    let det = sgg * shh - sgh * sgh;
    if det > 1e-12 * sgg * shh {
        let s = (shh * sgy - sgh * shy) / det;
        let r = (sgg * shy - sgh * sgy) / det;
        if r >= 0.0 {
            return (s, r);
        }
    }
    (sgy / sgg, 0.0)
}

/// Estimate `w(±1/2, n)` per time bin along each antiparallel detector pair.
///
/// The efficiency-corrected pair sum does not depend on the polarization, so
/// it fixes the flat background rate. The background-subtracted asymmetry
/// `A = (x − y)/(x + y)` equals `a κ (P·n)` with `κ = (1 + cos α)/2` for cone
/// half-angle `α`, which gives `Γ̂ = 1 + A/κ` along the pair axis.
pub fn estimate_tomogram(
    hist: &HistogramSeries,
    geometry: &DetectorGeometry,
    model: &DecayModel,
    options: &EstimationOptions,
) -> Result<TomogramEstimate> {
    geometry.validate()?;
    model.validate()?;
    if hist.counts.len() != geometry.len() {
        return Err(Error::DimensionMismatch {
            expected: geometry.len(),
            found: hist.counts.len(),
        });
    }
    for (ax, det) in hist.axes.iter().zip(&geometry.detectors) {
        if (ax.unit() - det.axis.unit()).norm() > 1e-9 {
            return Err(Error::InconsistentSpec("histogram axes differ from the detector geometry".into()));
        }
    }
    if !(model.asymmetry > 0.0) {
        return Err(Error::OutOfRange("zero asymmetry carries no polarization information".into()));
    }
    let pairs = geometry.antiparallel_pairs();
    if pairs.is_empty() {
        return Err(Error::InconsistentSpec("no antiparallel detector pair".into()));
    }
    let n_bins = hist.n_bins();
    let edges = &hist.bin_edges;
    let tau = model.lifetime_ns;
    let g: Vec<f64> = (0..n_bins).map(|k| decay_integral(edges[k], edges[k + 1], tau)).collect();

    let mut any_confident = false;
    let mut axes = Vec::with_capacity(pairs.len());
    for (f, b) in pairs {
        let (df, db) = (&geometry.detectors[f], &geometry.detectors[b]);
        let (ef, eb) = (df.efficiency, db.efficiency);
        let kappa = 0.5 * (1.0 + df.half_angle.cos());
        let nf = &hist.counts[f];
        let nb = &hist.counts[b];

        let y: Vec<f64> = (0..n_bins).map(|k| nf[k] as f64 / ef + nb[k] as f64 / eb).collect();
        let var: Vec<f64> = (0..n_bins)
            .map(|k| nf[k] as f64 / (ef * ef) + nb[k] as f64 / (eb * eb))
            .collect();
        let h: Vec<f64> = (0..n_bins).map(|k| hist.bin_width(k) * (1.0 / ef + 1.0 / eb)).collect();
        let (_, rate) = fit_signal_and_background(&y, &var, &g, &h);

        let bins = (0..n_bins)
            .map(|k| {
                let bg = rate * hist.bin_width(k);
                let x = (nf[k] as f64 - bg) / ef;
                let yb = (nb[k] as f64 - bg) / eb;
                let vx = nf[k] as f64 / (ef * ef);
                let vy = nb[k] as f64 / (eb * eb);
                let counts = nf[k] + nb[k];
                let sum = x + yb;
                let mut low = counts < options.count_floor;
                let (w_plus, w_minus, sigma) = if sum > 0.0 {
                    let asym = (x - yb) / sum;
                    let var_a = 4.0 * (yb * yb * vx + x * x * vy) / sum.powi(4);
                    let gamma = 1.0 + asym / kappa;
                    let sigma = var_a.sqrt() / (2.0 * model.asymmetry * kappa);
                    match histogram_to_tomogram(gamma, model.asymmetry, model.species) {
                        Ok((p, m)) => (p, m, sigma),
                        Err(_) => {
                            // Shot noise can step past 0 or 1; report the raw value.
                            let d = model.species.sign() * (gamma - 1.0) / (2.0 * model.asymmetry);
                            (0.5 + d, 0.5 - d, sigma)
                        }
                    }
                } else {
                    low = true;
                    (f64::NAN, f64::NAN, f64::INFINITY)
                };
                any_confident |= !low;
                BinEstimate {
                    t_start: edges[k],
                    t_end: edges[k + 1],
                    counts,
                    w_plus,
                    w_minus,
                    sigma,
                    low_confidence: low,
                }
            })
            .collect();
        axes.push(AxisEstimate {
            axis: df.axis,
            forward: f,
            backward: b,
            background_rate: rate,
            bins,
        });
    }
    if !any_confident {
        return Err(Error::InsufficientData(format!(
            "every bin has fewer than {} counts",
            options.count_floor
        )));
    }
    Ok(TomogramEstimate { axes })
}

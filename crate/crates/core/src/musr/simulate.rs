//! Monte Carlo decay events and histogram files.

use std::f64::consts::TAU;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use super::model::{check_polarization, DecayModel, DetectorGeometry, MuonPolarization};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::spin::{gauss_legendre, Direction};

/// Muons per random stream. Fixed so results never depend on the thread count.
pub const CHUNK_SIZE: u64 = 65_536;

/// Default flat background as a fraction of the launched muons.
pub const DEFAULT_BACKGROUND: f64 = 0.01;

/// Edges `start, start+width, …` with a final partial bin ending at `end`.
pub fn uniform_edges(start: f64, end: f64, width: f64) -> Result<Vec<f64>> {
    if !(end > start) || !(width > 0.0) {
        return Err(Error::OutOfRange(format!("bins [{start}, {end}) of width {width}")));
    }
    let n = ((end - start) / width).ceil() as usize;
    let mut edges: Vec<f64> = (0..n).map(|k| start + k as f64 * width).collect();
    if end - edges[n - 1] <= 1e-9 * width {
        edges.pop();
    }
    edges.push(end);
    Ok(edges)
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::InconsistentSpec("need at least one time bin".into()));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InconsistentSpec("bin edges must increase strictly".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_muons: u64,
    pub seed: u64,
    /// Expected background counts as a fraction of `n_muons`, in [0, 1).
    pub background_fraction: f64,
    pub bin_edges: Vec<f64>,
}

impl SimulationConfig {
    pub fn new(n_muons: u64, seed: u64, bin_edges: Vec<f64>) -> Self {
        SimulationConfig {
            n_muons,
            seed,
            background_fraction: DEFAULT_BACKGROUND,
            bin_edges,
        }
    }

    pub fn with_background(mut self, b: f64) -> Self {
        self.background_fraction = b;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_muons == 0 {
            return Err(Error::OutOfRange("n_muons must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.background_fraction) {
            return Err(Error::OutOfRange(format!("background fraction {}", self.background_fraction)));
        }
        check_edges(&self.bin_edges)
    }
}

/// Run metadata written next to the histogram CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramMetadata {
    pub n_muons: u64,
    pub seed: u64,
    pub background_fraction: f64,
    pub asymmetry: f64,
    pub lifetime_ns: f64,
}

/// Per-detector positron counts in time bins.
#[derive(Clone, Debug, PartialEq)]
pub struct HistogramSeries {
    pub bin_edges: Vec<f64>,
    /// Detector axes in the order of `counts`.
    pub axes: Vec<Direction>,
    /// `counts[detector][bin]`.
    pub counts: Vec<Vec<u64>>,
    pub meta: HistogramMetadata,
}

#[derive(Debug, Deserialize, Serialize)]
struct CsvRow {
    detector_id: usize,
    axis_theta: f64,
    axis_phi: f64,
    bin_start_ns: f64,
    bin_end_ns: f64,
    counts: u64,
}

impl HistogramSeries {
    pub fn n_bins(&self) -> usize {
        self.bin_edges.len() - 1
    }

    pub fn bin_width(&self, k: usize) -> f64 {
        self.bin_edges[k + 1] - self.bin_edges[k]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for (d, (axis, row)) in self.axes.iter().zip(&self.counts).enumerate() {
            for (k, &n) in row.iter().enumerate() {
                wr.serialize(CsvRow {
                    detector_id: d,
                    axis_theta: axis.theta(),
                    axis_phi: axis.phi(),
                    bin_start_ns: self.bin_edges[k],
                    bin_end_ns: self.bin_edges[k + 1],
                    counts: n,
                })?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, meta: HistogramMetadata) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut rows: Vec<CsvRow> = Vec::new();
        for row in rd.deserialize() {
            rows.push(row?);
        }
        let n_det = rows.iter().map(|r| r.detector_id + 1).max().unwrap_or(0);
        if n_det == 0 {
            return Err(Error::Format("empty histogram file".into()));
        }
        let mut edges: Vec<f64> = rows.iter().filter(|r| r.detector_id == 0).map(|r| r.bin_start_ns).collect();
        if let Some(last) = rows.iter().filter(|r| r.detector_id == 0).map(|r| r.bin_end_ns).next_back() {
            edges.push(last);
        }
        check_edges(&edges).map_err(|e| Error::Format(e.to_string()))?;
        let n_bins = edges.len() - 1;
        let mut counts = vec![vec![None; n_bins]; n_det];
        let mut axes = vec![None; n_det];
        for r in &rows {
            let k = edges[..n_bins]
                .iter()
                .position(|&e| e == r.bin_start_ns)
                .filter(|&k| edges[k + 1] == r.bin_end_ns)
                .ok_or_else(|| Error::Format(format!("bin [{}, {}) of detector {}", r.bin_start_ns, r.bin_end_ns, r.detector_id)))?;
            if counts[r.detector_id][k].replace(r.counts).is_some() {
                return Err(Error::Format(format!("duplicate row for detector {} bin {k}", r.detector_id)));
            }
            axes[r.detector_id].get_or_insert(Direction::new(r.axis_theta, r.axis_phi));
        }
        let counts = counts
            .into_iter()
            .enumerate()
            .map(|(d, row)| {
                row.into_iter()
                    .collect::<Option<Vec<u64>>>()
                    .ok_or_else(|| Error::Format(format!("detector {d} is missing bins")))
            })
            .collect::<Result<_>>()?;
        let axes = axes
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Format("detector ids are not contiguous".into()))?;
        Ok(HistogramSeries {
            bin_edges: edges,
            axes,
            counts,
            meta,
        })
    }

    /// Writes `<stem>.csv` and `<stem>.json`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(stem.with_extension("csv"))?)?;
        std::fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&self.meta)?)?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let meta: HistogramMetadata = serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json"))?)?;
        HistogramSeries::read_csv(std::fs::File::open(stem.with_extension("csv"))?, meta)
    }
}

/// Unit vector with `cosθ' = u` about `axis`, azimuth `phi`.
fn around_axis(axis: &Vector3<f64>, u: f64, phi: f64) -> Vector3<f64> {
    let helper = if axis.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = axis.cross(&helper).normalize();
    let e2 = axis.cross(&e1);
    let s = (1.0 - u * u).max(0.0).sqrt();
    let (sp, cp) = phi.sin_cos();
    axis * u + (e1 * cp + e2 * sp) * s
}

/// Inverse CDF of `(1 + k u)/2` on [−1, 1].
fn sample_cos(k: f64, r: f64) -> f64 {
    // Root of k u²/4 + u/2 + (1/2 − k/4 − r) = 0 in the cancellation-free form.
    let c = 0.5 - 0.25 * k - r;
    let u = -2.0 * c / (0.5 + (0.25 - k * c).max(0.0).sqrt());
    u.clamp(-1.0, 1.0)
}

fn bin_of(edges: &[f64], t: f64) -> Option<usize> {
    if t < edges[0] || t >= edges[edges.len() - 1] {
        return None;
    }
    Some(edges.partition_point(|&e| e <= t) - 1)
}

/// Generate decays and background into a histogram.
///
/// Muon `i` uses stream `i / CHUNK_SIZE + 1` of a ChaCha8 generator keyed by
/// the seed and background uses stream 0, so the output is bit-identical for
/// every `exec`.
pub fn simulate_events<P: MuonPolarization + ?Sized>(
    pol: &P,
    geometry: &DetectorGeometry,
    model: &DecayModel,
    config: &SimulationConfig,
    exec: Exec,
) -> Result<HistogramSeries> {
    geometry.validate()?;
    model.validate()?;
    config.validate()?;
    let edges = &config.bin_edges;
    let n_bins = edges.len() - 1;
    let n_det = geometry.len();
    let a = model.signed_asymmetry();
    let lifetime = Exp::new(1.0 / model.lifetime_ns).map_err(|e| Error::OutOfRange(e.to_string()))?;
    let n_chunks = config.n_muons.div_ceil(CHUNK_SIZE) as usize;

    let partials: Vec<Result<Vec<u64>>> = exec.map_range(n_chunks, |chunk| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(chunk as u64 + 1);
        let mut counts = vec![0u64; n_det * n_bins];
        let lo = chunk as u64 * CHUNK_SIZE;
        let hi = (lo + CHUNK_SIZE).min(config.n_muons);
        for _ in lo..hi {
            let t = lifetime.sample(&mut rng);
            let (r_u, r_phi, r_eff): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
            let Some(k) = bin_of(edges, t) else { continue };
            let p = pol.polarization(t);
            check_polarization(&p)?;
            let norm = p.norm();
            let axis = if norm > 1e-15 { p / norm } else { Vector3::z() };
            let n = around_axis(&axis, sample_cos(a * norm, r_u), TAU * r_phi);
            if let Some(d) = geometry.detector_for(&n) {
                if r_eff < geometry.detectors[d].efficiency {
                    counts[d * n_bins + k] += 1;
                }
            }
        }
        Ok(counts)
    });

    let mut counts = vec![0u64; n_det * n_bins];
    for part in partials {
        for (c, x) in counts.iter_mut().zip(part?) {
            *c += x;
        }
    }

    if config.background_fraction > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(0);
        let mean = config.background_fraction * config.n_muons as f64;
        let poisson = Poisson::new(mean).map_err(|e| Error::OutOfRange(e.to_string()))?;
        let n_bg = poisson.sample(&mut rng) as u64;
        let (t0, t1) = (edges[0], edges[n_bins]);
        for _ in 0..n_bg {
            let t = rng.random_range(t0..t1);
            let d = rng.random_range(0..n_det);
            if let Some(k) = bin_of(edges, t) {
                counts[d * n_bins + k] += 1;
            }
        }
    }

    Ok(HistogramSeries {
        bin_edges: edges.clone(),
        axes: geometry.detectors.iter().map(|d| d.axis).collect(),
        counts: counts.chunks(n_bins).map(|c| c.to_vec()).collect(),
        meta: HistogramMetadata {
            n_muons: config.n_muons,
            seed: config.seed,
            background_fraction: config.background_fraction,
            asymmetry: model.asymmetry,
            lifetime_ns: model.lifetime_ns,
        },
    })
}

/// Gauss-Legendre nodes and weights on `[t0, t1]`, panels at most `panel` ns wide.
fn panels(t0: f64, t1: f64, panel: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(12);
    let n = ((t1 - t0) / panel).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;
    let mut out = Vec::with_capacity(n * x.len());
    for p in 0..n {
        let mid = t0 + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((mid + 0.5 * h * xi, 0.5 * h * wi));
        }
    }
    out
}

const PANEL_NS: f64 = 50.0;

/// Mean counts per detector and bin, with cones assumed disjoint.
pub fn expected_histogram<P: MuonPolarization + ?Sized>(
    pol: &P,
    geometry: &DetectorGeometry,
    model: &DecayModel,
    config: &SimulationConfig,
) -> Result<Vec<Vec<f64>>> {
    geometry.validate()?;
    model.validate()?;
    config.validate()?;
    let edges = &config.bin_edges;
    let n = config.n_muons as f64;
    let tau = model.lifetime_ns;
    let span = edges[edges.len() - 1] - edges[0];
    let bg_rate = config.background_fraction * n / (geometry.len() as f64 * span);
    let a = model.signed_asymmetry();
    let mut out = vec![vec![0.0; edges.len() - 1]; geometry.len()];
    for k in 0..edges.len() - 1 {
        let nodes = panels(edges[k], edges[k + 1], PANEL_NS);
        let samples: Vec<(f64, Vector3<f64>)> = nodes
            .iter()
            .map(|&(t, w)| (w * (-t / tau).exp() / tau, pol.polarization(t)))
            .collect();
        for (d, det) in geometry.detectors.iter().enumerate() {
            let signal: f64 = samples.iter().map(|(w, p)| w * det.acceptance(p, a)).sum();
            out[d][k] = n * det.efficiency * signal + bg_rate * (edges[k + 1] - edges[k]);
        }
    }
    Ok(out)
}

/// Decay-weighted average of `w(+1/2, n)` over each bin.
pub fn true_reduced_tomogram<P: MuonPolarization + ?Sized>(
    pol: &P,
    axis: &Direction,
    edges: &[f64],
    lifetime_ns: f64,
) -> Result<Vec<f64>> {
    check_edges(edges)?;
    Ok(edges
        .windows(2)
        .map(|w| {
            let nodes = panels(w[0], w[1], PANEL_NS);
            let (mut num, mut den) = (0.0, 0.0);
            for (t, wt) in nodes {
                let g = wt * (-t / lifetime_ns).exp();
                num += g * pol.polarization(t).dot(&axis.unit());
                den += g;
            }
            0.5 * (1.0 + num / den)
        })
        .collect())
}

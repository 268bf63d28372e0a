//! Frequency-domain analysis of complex transverse signals.
//!
//! The axis is angular frequency: a component `e^{+i nu t}` appears at `+nu`.
//! Amplitudes are normalized by the window sum, so a unit tone on a bin has
//! amplitude exactly one.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_SERIES_LEN: usize = 16;
pub const ZERO_PAD_FACTOR: usize = 4;
pub const DEFAULT_PEAK_THRESHOLD: f64 = 0.05;

/// Tapering window applied before the transform.
pub trait Window: Send + Sync {
    fn name(&self) -> &'static str;
    fn weights(&self, n: usize) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Rectangular;

impl Window for Rectangular {
    fn name(&self) -> &'static str {
        "rectangular"
    }

    fn weights(&self, n: usize) -> Vec<f64> {
        vec![1.0; n]
    }
}

/// Symmetric Hann window.
#[derive(Debug, Clone, Copy, Default)]
pub struct Hann;

impl Window for Hann {
    fn name(&self) -> &'static str {
        "hann"
    }

    fn weights(&self, n: usize) -> Vec<f64> {
        if n < 2 {
            return vec![1.0; n];
        }
        let m = (n - 1) as f64;
        (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / m).cos()).collect()
    }
}

/// Windows selectable by name.
#[derive(Clone)]
pub struct WindowRegistry {
    entries: BTreeMap<&'static str, Arc<dyn Window>>,
}

impl Default for WindowRegistry {
    fn default() -> Self {
        let mut r = Self { entries: BTreeMap::new() };
        r.register(Arc::new(Rectangular));
        r.register(Arc::new(Hann));
        r
    }
}

impl WindowRegistry {
    pub fn register(&mut self, w: Arc<dyn Window>) {
        self.entries.insert(w.name(), w);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Window>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::UnknownWindow(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    /// Strictly increasing, symmetric about zero.
    pub freqs: Vec<f64>,
    pub amps: Vec<f64>,
    pub window: &'static str,
    /// Axis spacing.
    pub bin_width: f64,
    /// Unpadded series length.
    pub series_len: usize,
}

impl Spectrum {
    pub fn max_amplitude(&self) -> f64 {
        self.amps.iter().copied().fold(0.0, f64::max)
    }
}

/// Two-sided amplitude spectrum of a uniformly sampled complex series.
///
/// The windowed series is zero-padded to `4 n + 1` samples; the odd length
/// keeps the axis symmetric about zero.
pub fn spectrum(series: &[Complex64], dt: f64, window: &dyn Window) -> Result<Spectrum> {
    let n = series.len();
    if n < MIN_SERIES_LEN {
        return Err(Error::SeriesTooShort { len: n, min: MIN_SERIES_LEN });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParams(format!("sample interval {dt} must be positive")));
    }
    let w = window.weights(n);
    let norm: f64 = w.iter().sum();
    let m = ZERO_PAD_FACTOR * n + 1;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (b, (x, wi)) in buf.iter_mut().zip(series.iter().zip(&w)) {
        *b = x * *wi;
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);

    let half = (m - 1) / 2;
    let bin_width = 2.0 * PI / (m as f64 * dt);
    let mut freqs = Vec::with_capacity(m);
    let mut amps = Vec::with_capacity(m);
    for j in 0..m {
        // Negative frequencies first: FFT index (half + 1 + j) mod m.
        let k = (half + 1 + j) % m;
        let signed = j as i64 - half as i64;
        freqs.push(signed as f64 * bin_width);
        amps.push(buf[k].norm() / norm);
    }
    Ok(Spectrum { freqs, amps, window: window.name(), bin_width, series_len: n })
}

/// Energies `(sum |w x|^2, sum |X|^2 / M)` of the windowed series in time and
/// frequency; equal up to rounding.
pub fn parseval_energies(series: &[Complex64], dt: f64, window: &dyn Window) -> Result<(f64, f64)> {
    let s = spectrum(series, dt, window)?;
    let w = window.weights(series.len());
    let norm: f64 = w.iter().sum();
    let time: f64 = series.iter().zip(&w).map(|(x, wi)| (x * wi).norm_sqr()).sum();
    let m = s.freqs.len() as f64;
    let freq: f64 = s.amps.iter().map(|a| (a * norm).powi(2)).sum::<f64>() / m;
    Ok((time, freq))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub freq: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
    pub threshold: f64,
}

impl PeakSet {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn strongest(&self) -> Option<Peak> {
        self.peaks.iter().copied().max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
    }
}

/// Strict local maxima above `rel_threshold` times the global maximum,
/// refined by a parabola through the three neighbouring bins.
pub fn find_peaks(spec: &Spectrum, rel_threshold: f64) -> Result<PeakSet> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::InvalidParams(format!("peak threshold {rel_threshold} not in (0, 1)")));
    }
    let a = &spec.amps;
    let floor = rel_threshold * spec.max_amplitude();
    let mut peaks = Vec::new();
    for i in 1..a.len().saturating_sub(1) {
        let (l, c, r) = (a[i - 1], a[i], a[i + 1]);
        if c > l && c > r && c > floor {
            let denom = l - 2.0 * c + r;
            let p = if denom != 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
            peaks.push(Peak { freq: spec.freqs[i] + p * spec.bin_width, amplitude: c - 0.25 * (l - r) * p });
        }
    }
    Ok(PeakSet { peaks, threshold: rel_threshold })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingAnalysis {
    pub spacings: Vec<f64>,
    pub mean_spacing: f64,
    pub max_rel_deviation: f64,
}

/// Adjacent spacings of frequency-sorted peaks and their largest relative
/// deviation from the mean.
pub fn spacing_analysis(peaks: &PeakSet) -> Result<SpacingAnalysis> {
    if peaks.len() < 2 {
        return Err(Error::TooFewPeaks(peaks.len()));
    }
    let mut f: Vec<f64> = peaks.peaks.iter().map(|p| p.freq).collect();
    f.sort_by(f64::total_cmp);
    let spacings: Vec<f64> = f.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
    let max_rel_deviation = spacings.iter().map(|s| ((s - mean) / mean).abs()).fold(0.0, f64::max);
    Ok(SpacingAnalysis { spacings, mean_spacing: mean, max_rel_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tones(freqs: &[f64], n: usize, dt: f64) -> Vec<Complex64> {
        (0..n)
            .map(|j| freqs.iter().map(|&f| Complex64::from_polar(1.0, f * j as f64 * dt)).sum())
            .collect()
    }

    fn peak_set(freqs: &[f64]) -> PeakSet {
        PeakSet { peaks: freqs.iter().map(|&freq| Peak { freq, amplitude: 1.0 }).collect(), threshold: 0.05 }
    }

    #[test]
    fn axis_is_symmetric_and_increasing() {
        let s = spectrum(&vec![Complex64::new(1.0, 0.0); 20], 0.1, &Hann).unwrap();
        assert_eq!(s.freqs.len(), 81);
        assert_eq!(s.freqs[40], 0.0);
        assert!(s.freqs.windows(2).all(|w| w[1] > w[0]));
        for i in 0..81 {
            assert_eq!(s.freqs[i], -s.freqs[80 - i]);
        }
    }

    #[test]
    fn single_tone_lands_at_positive_frequency() {
        let s = spectrum(&tones(&[0.3], 8000, 0.05), 0.05, &Hann).unwrap();
        let p = find_peaks(&s, 0.05).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p.peaks[0].freq - 0.3).abs() < 0.2 * s.bin_width);
        assert!((p.peaks[0].amplitude - 1.0).abs() < 0.02);
    }

    #[test]
    fn zero_series_has_no_peaks() {
        let s = spectrum(&vec![Complex64::new(0.0, 0.0); 64], 0.1, &Rectangular).unwrap();
        assert!(s.amps.iter().all(|&a| a == 0.0));
        assert!(find_peaks(&s, 0.05).unwrap().is_empty());
    }

    #[test]
    fn short_series_rejected() {
        let r = spectrum(&vec![Complex64::new(0.0, 0.0); 15], 0.1, &Hann);
        assert!(matches!(r, Err(Error::SeriesTooShort { len: 15, min: 16 })));
    }

    #[test]
    fn spacing_examples() {
        let a = spacing_analysis(&peak_set(&[0.0, 1.0, 2.0])).unwrap();
        assert_eq!((a.mean_spacing, a.max_rel_deviation), (1.0, 0.0));
        let a = spacing_analysis(&peak_set(&[0.0, 1.0, 2.1])).unwrap();
        assert!((a.mean_spacing - 1.05).abs() < 1e-12);
        assert!((a.max_rel_deviation - 0.05 / 1.05).abs() < 1e-12);
        let a = spacing_analysis(&peak_set(&[0.91, -0.80, 0.056])).unwrap();
        assert!((a.mean_spacing - 0.855).abs() < 1e-12);
        assert!((a.max_rel_deviation - 0.001 / 0.855).abs() < 1e-12);
        assert!(matches!(spacing_analysis(&peak_set(&[0.1])), Err(Error::TooFewPeaks(1))));
    }

    #[test]
    fn registry_lookup() {
        let r = WindowRegistry::default();
        assert_eq!(r.get("hann").unwrap().name(), "hann");
        assert_eq!(r.names().collect::<Vec<_>>(), vec!["hann", "rectangular"]);
        assert!(matches!(r.get("kaiser"), Err(Error::UnknownWindow(_))));
    }

    #[test]
    fn threshold_must_be_fractional() {
        let s = spectrum(&tones(&[0.3], 64, 0.1), 0.1, &Hann).unwrap();
        assert!(find_peaks(&s, 0.0).is_err());
        assert!(find_peaks(&s, 1.0).is_err());
    }
}

//! Dominant-frequency estimation for uniformly sampled real signals.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

// zero-padding factor; the padded spectrum is interpolated parabolically
const PAD: usize = 16;

/// Angular frequency (rad per unit of `step`) of the strongest non-DC
/// component of `values`. The mean is removed and a Hann window applied.
pub fn dominant_angular_frequency(values: &[f64], step: f64) -> Result<f64> {
    if values.len() < 8 {
        return Err(Error::Invalid(format!("need at least 8 samples, got {}", values.len())));
    }
    if !(step > 0.0) {
        return Err(Error::Invalid(format!("sample step must be positive, got {step}")));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let len = (n * PAD).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (k, v) in values.iter().enumerate() {
        let w = 0.5 - 0.5 * (std::f64::consts::TAU * k as f64 / (n - 1) as f64).cos();
        buf[k] = Complex64::new((v - mean) * w, 0.0);
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let power: Vec<f64> = buf[..len / 2].iter().map(|c| c.norm_sqr()).collect();
    let (peak, &top) = power
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Fit("empty spectrum".into()))?;
    if !(top > 0.0) {
        return Err(Error::Fit("signal is constant".into()));
    }
    let shift = if peak + 1 < power.len() {
        let (a, b, c) = (power[peak - 1].ln(), top.ln(), power[peak + 1].ln());
        let d = a - 2.0 * b + c;
        if d.abs() > 0.0 { (0.5 * (a - c) / d).clamp(-0.5, 0.5) } else { 0.0 }
    } else {
        0.0
    };
    Ok(std::f64::consts::TAU * (peak as f64 + shift) / (len as f64 * step))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_pure_tone() {
        let w = 17.77;
        let step = 0.01;
        let v: Vec<f64> = (0..1000).map(|k| 0.3 + (w * k as f64 * step + 0.4).cos()).collect();
        let est = dominant_angular_frequency(&v, step).unwrap();
        assert!((est / w - 1.0).abs() < 1e-3, "{est}");
    }

    #[test]
    fn rejects_constant_signal() {
        assert!(dominant_angular_frequency(&[1.0; 64], 0.1).is_err());
    }
}

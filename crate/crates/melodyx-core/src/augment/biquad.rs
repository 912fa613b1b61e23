//! Second-order IIR sections (RBJ cookbook designs).

use std::f64::consts::PI;

/// Normalized biquad coefficients (a0 = 1), processed in direct form II
/// transposed.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn normalize(a0: f64, a1: f64, a2: f64, b0: f64, b1: f64, b2: f64) -> Self {
        Biquad {
            b0: b0 / a0,
            b1: b1 / a0,
            b2: b2 / a0,
            a1: a1 / a0,
            a2: a2 / a0,
        }
    }

    /// Butterworth low-pass (Q = 1/sqrt(2)).
    pub fn low_pass(fs: f64, cutoff_hz: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / fs;
        let (sn, cs) = (w0.sin(), w0.cos());
        let alpha = sn / (2.0 * std::f64::consts::FRAC_1_SQRT_2);
        Biquad::normalize(
            1.0 + alpha,
            -2.0 * cs,
            1.0 - alpha,
            (1.0 - cs) / 2.0,
            1.0 - cs,
            (1.0 - cs) / 2.0,
        )
    }

    /// Butterworth high-pass (Q = 1/sqrt(2)).
    pub fn high_pass(fs: f64, cutoff_hz: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / fs;
        let (sn, cs) = (w0.sin(), w0.cos());
        let alpha = sn / (2.0 * std::f64::consts::FRAC_1_SQRT_2);
        Biquad::normalize(
            1.0 + alpha,
            -2.0 * cs,
            1.0 - alpha,
            (1.0 + cs) / 2.0,
            -(1.0 + cs),
            (1.0 + cs) / 2.0,
        )
    }

    /// Shelving filter boosting/cutting below the corner (slope 1).
    pub fn low_shelf(fs: f64, corner_hz: f64, gain_db: f64) -> Self {
        let a = 10f64.powf(gain_db / 40.0);
        let w0 = 2.0 * PI * corner_hz / fs;
        let (sn, cs) = (w0.sin(), w0.cos());
        let alpha = sn / 2.0 * std::f64::consts::SQRT_2;
        let sq = 2.0 * a.sqrt() * alpha;
        Biquad::normalize(
            (a + 1.0) + (a - 1.0) * cs + sq,
            -2.0 * ((a - 1.0) + (a + 1.0) * cs),
            (a + 1.0) + (a - 1.0) * cs - sq,
            a * ((a + 1.0) - (a - 1.0) * cs + sq),
            2.0 * a * ((a - 1.0) - (a + 1.0) * cs),
            a * ((a + 1.0) - (a - 1.0) * cs - sq),
        )
    }

    /// Shelving filter boosting/cutting above the corner (slope 1).
    pub fn high_shelf(fs: f64, corner_hz: f64, gain_db: f64) -> Self {
        let a = 10f64.powf(gain_db / 40.0);
        let w0 = 2.0 * PI * corner_hz / fs;
        let (sn, cs) = (w0.sin(), w0.cos());
        let alpha = sn / 2.0 * std::f64::consts::SQRT_2;
        let sq = 2.0 * a.sqrt() * alpha;
        Biquad::normalize(
            (a + 1.0) - (a - 1.0) * cs + sq,
            2.0 * ((a - 1.0) - (a + 1.0) * cs),
            (a + 1.0) - (a - 1.0) * cs - sq,
            a * ((a + 1.0) + (a - 1.0) * cs + sq),
            -2.0 * a * ((a - 1.0) + (a + 1.0) * cs),
            a * ((a + 1.0) + (a - 1.0) * cs - sq),
        )
    }

    /// Filter a buffer in place (f64 state, zero initial conditions).
    pub fn process(&self, x: &mut [f64]) {
        let mut s1 = 0.0f64;
        let mut s2 = 0.0f64;
        for v in x.iter_mut() {
            let y = self.b0 * *v + s1;
            s1 = self.b1 * *v - self.a1 * y + s2;
            s2 = self.b2 * *v - self.a2 * y;
            *v = y;
        }
    }

    /// Magnitude response at a frequency, for tests and inspection.
    pub fn magnitude_at(&self, fs: f64, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / fs;
        let z1 = (-w).cos();
        let z1i = (-w).sin();
        let z2 = (-2.0 * w).cos();
        let z2i = (-2.0 * w).sin();
        let num_re = self.b0 + self.b1 * z1 + self.b2 * z2;
        let num_im = self.b1 * z1i + self.b2 * z2i;
        let den_re = 1.0 + self.a1 * z1 + self.a2 * z2;
        let den_im = self.a1 * z1i + self.a2 * z2i;
        (num_re * num_re + num_im * num_im).sqrt() / (den_re * den_re + den_im * den_im).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_pass_magnitude_response() {
        let bq = Biquad::low_pass(8000.0, 1000.0);
        // Butterworth: -3 dB at the cutoff, steep rolloff above.
        assert!((bq.magnitude_at(8000.0, 1000.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.01);
        assert!(bq.magnitude_at(8000.0, 3000.0) < 0.1); // > 20 dB down
        assert!(bq.magnitude_at(8000.0, 100.0) > 0.99);
    }

    #[test]
    fn high_pass_magnitude_response() {
        let bq = Biquad::high_pass(8000.0, 400.0);
        assert!(bq.magnitude_at(8000.0, 40.0) < 0.02);
        assert!(bq.magnitude_at(8000.0, 2000.0) > 0.98);
    }

    #[test]
    fn shelves_hit_their_gain() {
        let boost = Biquad::low_shelf(8000.0, 300.0, 12.0);
        let g_low = 20.0 * boost.magnitude_at(8000.0, 30.0).log10();
        let g_high = 20.0 * boost.magnitude_at(8000.0, 3000.0).log10();
        assert!((g_low - 12.0).abs() < 0.5, "low shelf gain {g_low}");
        assert!(g_high.abs() < 0.5);

        let cut = Biquad::high_shelf(8000.0, 2000.0, -9.0);
        let g_hi = 20.0 * cut.magnitude_at(8000.0, 3800.0).log10();
        assert!((g_hi + 9.0).abs() < 0.6, "high shelf gain {g_hi}");
    }
}

//! Analytic input envelopes for the `z = 0` boundary.
//!
//! Spectra use the forward transform `X(w) = int x(t) exp(-i w t) dt`, the
//! same convention as the numeric spectra in [`crate::analysis`]. A carrier
//! `exp(-i w0 t)` therefore shows up at `w = -w0`.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::error::{GemError, Result};

/// Gaussian envelope whose intensity `|E|^2` has full width `fwhm_us`.
///
/// `E(t) = A exp(-2 ln2 (t - t0)^2 / fwhm^2) exp(-i detuning (t - t0))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPulse {
    pub t0_us: f64,
    pub fwhm_us: f64,
    pub amplitude: Complex64,
    pub detuning_rad_per_us: f64,
}

impl GaussianPulse {
    pub fn new(t0_us: f64, fwhm_us: f64, amplitude: Complex64, detuning_rad_per_us: f64) -> Self {
        Self {
            t0_us,
            fwhm_us,
            amplitude,
            detuning_rad_per_us,
        }
    }

    fn rate(&self) -> f64 {
        2.0 * LN_2 / (self.fwhm_us * self.fwhm_us)
    }

    fn atom(&self) -> GaussianAtom {
        GaussianAtom {
            amplitude: self.amplitude,
            t0: self.t0_us,
            rate: self.rate(),
            detuning: self.detuning_rad_per_us,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PulseSpec {
    Gaussian(GaussianPulse),
    /// `base(t) * (1 + mod_depth * cos(mod_freq * (t - t0)))`: a carrier and
    /// two sidebands at `+- mod_freq`.
    AmplitudeModulated {
        base: GaussianPulse,
        mod_freq_rad_per_us: f64,
        mod_depth: f64,
    },
    /// Pointwise sum of the parts. Parts may not themselves be composite.
    Composite(Vec<PulseSpec>),
    /// Asymmetric cusp: `A exp((t - t0)/rise)` before `t0`,
    /// `A exp(-(t - t0)/fall)` after.
    ExpRamp {
        t0_us: f64,
        rise_us: f64,
        fall_us: f64,
        amplitude: Complex64,
    },
}

/// `A exp(-rate (t - t0)^2) exp(-i detuning (t - t0))`
#[derive(Debug, Clone, Copy)]
struct GaussianAtom {
    amplitude: Complex64,
    t0: f64,
    rate: f64,
    detuning: f64,
}

impl GaussianAtom {
    fn sample(&self, t: f64) -> Complex64 {
        let u = t - self.t0;
        self.amplitude * (-self.rate * u * u).exp() * Complex64::from_polar(1.0, -self.detuning * u)
    }

    fn spectrum(&self, w: f64) -> Complex64 {
        let shifted = w + self.detuning;
        self.amplitude
            * (PI / self.rate).sqrt()
            * (-shifted * shifted / (4.0 * self.rate)).exp()
            * Complex64::from_polar(1.0, -w * self.t0)
    }

    /// `int conj(self(t)) other(t) dt`
    fn overlap(&self, other: &GaussianAtom) -> Complex64 {
        let i = Complex64::i();
        let p = self.rate + other.rate;
        let q = 2.0 * self.rate * self.t0
            + 2.0 * other.rate * other.t0
            + i * (self.detuning - other.detuning);
        let r = -self.rate * self.t0 * self.t0 - other.rate * other.t0 * other.t0
            - i * self.detuning * self.t0
            + i * other.detuning * other.t0;
        self.amplitude.conj() * other.amplitude * (PI / p).sqrt() * (q * q / (4.0 * p) + r).exp()
    }
}

impl PulseSpec {
    pub fn gaussian(t0_us: f64, fwhm_us: f64, amplitude: f64) -> Self {
        PulseSpec::Gaussian(GaussianPulse::new(t0_us, fwhm_us, amplitude.into(), 0.0))
    }

    /// Checks the structural invariants and that the energy is finite.
    pub fn validate(&self) -> Result<()> {
        self.validate_at_depth(0)?;
        let e = self.energy()?;
        if !e.is_finite() {
            return Err(GemError::Contract("pulse energy is not finite".into()));
        }
        Ok(())
    }

    fn validate_at_depth(&self, depth: usize) -> Result<()> {
        let bad = |msg: String| Err(GemError::Contract(msg));
        let check_gaussian = |g: &GaussianPulse| {
            if !(g.fwhm_us.is_finite() && g.fwhm_us > 0.0) {
                return bad(format!("fwhm must be positive, got {} us", g.fwhm_us));
            }
            if !(g.t0_us.is_finite()
                && g.detuning_rad_per_us.is_finite()
                && g.amplitude.is_finite())
            {
                return bad("non-finite gaussian parameter".into());
            }
            Ok(())
        };
        match self {
            PulseSpec::Gaussian(g) => check_gaussian(g),
            PulseSpec::AmplitudeModulated {
                base,
                mod_freq_rad_per_us,
                mod_depth,
            } => {
                check_gaussian(base)?;
                if !mod_freq_rad_per_us.is_finite() {
                    return bad("non-finite modulation frequency".into());
                }
                if !(0.0..=1.0).contains(mod_depth) {
                    return bad(format!("mod_depth must lie in [0, 1], got {mod_depth}"));
                }
                Ok(())
            }
            PulseSpec::Composite(parts) => {
                if depth > 0 {
                    return bad("composite pulses cannot nest".into());
                }
                parts.iter().try_for_each(|p| p.validate_at_depth(depth + 1))
            }
            PulseSpec::ExpRamp {
                t0_us,
                rise_us,
                fall_us,
                amplitude,
            } => {
                if !(rise_us.is_finite() && *rise_us > 0.0 && fall_us.is_finite() && *fall_us > 0.0)
                {
                    return bad("exp ramp rise and fall must be positive".into());
                }
                if !(t0_us.is_finite() && amplitude.is_finite()) {
                    return bad("non-finite exp ramp parameter".into());
                }
                Ok(())
            }
        }
    }

    /// Envelope value at `t_us`.
    pub fn sample(&self, t_us: f64) -> Complex64 {
        match self {
            PulseSpec::Gaussian(g) => g.atom().sample(t_us),
            PulseSpec::AmplitudeModulated {
                base,
                mod_freq_rad_per_us,
                mod_depth,
            } => {
                let m = 1.0 + mod_depth * (mod_freq_rad_per_us * (t_us - base.t0_us)).cos();
                base.atom().sample(t_us) * m
            }
            PulseSpec::Composite(parts) => parts.iter().map(|p| p.sample(t_us)).sum(),
            PulseSpec::ExpRamp {
                t0_us,
                rise_us,
                fall_us,
                amplitude,
            } => {
                let u = t_us - t0_us;
                let decay = if u < 0.0 { u / rise_us } else { -u / fall_us };
                amplitude * decay.exp()
            }
        }
    }

    /// Decomposition into Gaussian atoms, if every part is Gaussian-based.
    fn atoms(&self) -> Option<Vec<GaussianAtom>> {
        match self {
            PulseSpec::Gaussian(g) => Some(vec![g.atom()]),
            PulseSpec::AmplitudeModulated {
                base,
                mod_freq_rad_per_us,
                mod_depth,
            } => {
                let carrier = base.atom();
                let side = |sign: f64| GaussianAtom {
                    amplitude: carrier.amplitude * (0.5 * mod_depth),
                    detuning: carrier.detuning + sign * mod_freq_rad_per_us,
                    ..carrier
                };
                Some(vec![carrier, side(1.0), side(-1.0)])
            }
            PulseSpec::Composite(parts) => {
                let mut all = Vec::new();
                for p in parts {
                    all.extend(p.atoms()?);
                }
                Some(all)
            }
            PulseSpec::ExpRamp { .. } => None,
        }
    }

    /// Closed-form Fourier transform on `omega_grid` (rad/us).
    ///
    /// Only Gaussian-based pulses have one; an [`PulseSpec::ExpRamp`]
    /// anywhere in the pulse is an error and a numeric transform must be used.
    pub fn analytic_spectrum(&self, omega_grid: &[f64]) -> Result<Vec<Complex64>> {
        let atoms = self
            .atoms()
            .ok_or(GemError::UnsupportedVariant("analytic_spectrum (exp ramp)"))?;
        Ok(omega_grid
            .iter()
            .map(|&w| atoms.iter().map(|a| a.spectrum(w)).sum())
            .collect())
    }

    /// `int |E(t)|^2 dt`: closed form where one exists, adaptive quadrature
    /// otherwise.
    pub fn energy(&self) -> Result<f64> {
        if let Some(atoms) = self.atoms() {
            let mut total = Complex64::new(0.0, 0.0);
            for a in &atoms {
                for b in &atoms {
                    total += a.overlap(b);
                }
            }
            return Ok(total.re.max(0.0));
        }
        if let PulseSpec::ExpRamp {
            rise_us,
            fall_us,
            amplitude,
            ..
        } = self
        {
            return Ok(amplitude.norm_sqr() * (rise_us + fall_us) / 2.0);
        }
        let (lo, hi) = self.support();
        let mut knots = self.kinks();
        knots.retain(|k| *k > lo && *k < hi);
        knots.insert(0, lo);
        knots.push(hi);
        knots.sort_by(f64::total_cmp);
        let f = |t: f64| self.sample(t).norm_sqr();
        let scale = self.peak_power_estimate().max(f64::MIN_POSITIVE);
        let mut total = 0.0;
        for w in knots.windows(2) {
            total += adaptive_simpson(&f, w[0], w[1], 1e-13 * scale, 48)?;
        }
        Ok(total)
    }

    /// Interval outside which the envelope is below ~1e-30 of its peak.
    pub fn support(&self) -> (f64, f64) {
        match self {
            PulseSpec::Gaussian(g) | PulseSpec::AmplitudeModulated { base: g, .. } => {
                // exp(-rate u^2) < 1e-30 for |u| > sqrt(69 / rate)
                let half = (69.1 / g.rate()).sqrt();
                (g.t0_us - half, g.t0_us + half)
            }
            PulseSpec::Composite(parts) => parts
                .iter()
                .map(PulseSpec::support)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (c, d)| {
                    (a.min(c), b.max(d))
                }),
            PulseSpec::ExpRamp {
                t0_us,
                rise_us,
                fall_us,
                ..
            } => (t0_us - 69.1 * rise_us, t0_us + 69.1 * fall_us),
        }
    }

    fn kinks(&self) -> Vec<f64> {
        match self {
            PulseSpec::ExpRamp { t0_us, .. } => vec![*t0_us],
            PulseSpec::Composite(parts) => parts.iter().flat_map(PulseSpec::kinks).collect(),
            _ => Vec::new(),
        }
    }

    fn peak_power_estimate(&self) -> f64 {
        match self {
            PulseSpec::Gaussian(g) => g.amplitude.norm_sqr(),
            PulseSpec::AmplitudeModulated { base, .. } => 4.0 * base.amplitude.norm_sqr(),
            PulseSpec::ExpRamp { amplitude, .. } => amplitude.norm_sqr(),
            PulseSpec::Composite(parts) => {
                let s: f64 = parts.iter().map(|p| p.peak_power_estimate().sqrt()).sum();
                s * s
            }
        }
    }

    /// The same pulse delayed by `dt_us`.
    pub fn shifted(&self, dt_us: f64) -> Self {
        let shift = |g: &GaussianPulse| GaussianPulse {
            t0_us: g.t0_us + dt_us,
            ..*g
        };
        match self {
            PulseSpec::Gaussian(g) => PulseSpec::Gaussian(shift(g)),
            PulseSpec::AmplitudeModulated {
                base,
                mod_freq_rad_per_us,
                mod_depth,
            } => PulseSpec::AmplitudeModulated {
                base: shift(base),
                mod_freq_rad_per_us: *mod_freq_rad_per_us,
                mod_depth: *mod_depth,
            },
            PulseSpec::Composite(parts) => {
                PulseSpec::Composite(parts.iter().map(|p| p.shifted(dt_us)).collect())
            }
            PulseSpec::ExpRamp {
                t0_us,
                rise_us,
                fall_us,
                amplitude,
            } => PulseSpec::ExpRamp {
                t0_us: t0_us + dt_us,
                rise_us: *rise_us,
                fall_us: *fall_us,
                amplitude: *amplitude,
            },
        }
    }

    /// The same pulse with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let scale = |g: &GaussianPulse| GaussianPulse {
            amplitude: g.amplitude * factor,
            ..*g
        };
        match self {
            PulseSpec::Gaussian(g) => PulseSpec::Gaussian(scale(g)),
            PulseSpec::AmplitudeModulated {
                base,
                mod_freq_rad_per_us,
                mod_depth,
            } => PulseSpec::AmplitudeModulated {
                base: scale(base),
                mod_freq_rad_per_us: *mod_freq_rad_per_us,
                mod_depth: *mod_depth,
            },
            PulseSpec::Composite(parts) => {
                PulseSpec::Composite(parts.iter().map(|p| p.scaled(factor)).collect())
            }
            PulseSpec::ExpRamp {
                t0_us,
                rise_us,
                fall_us,
                amplitude,
            } => PulseSpec::ExpRamp {
                t0_us: *t0_us,
                rise_us: *rise_us,
                fall_us: *fall_us,
                amplitude: amplitude * factor,
            },
        }
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(GemError::Quadrature(format!(
                "no convergence on [{a}, {b}] us: residual {:.3e} above tolerance {tol:.3e}",
                delta.abs() / 15.0
            )));
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
    }
    // Pre-split so narrow features inside a wide window are not missed.
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    let mut total = 0.0;
    for i in 0..pieces {
        let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
        let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
        let whole = simpson(f0, fm, f1, x0, x1);
        total += recurse(f, x0, x1, f0, fm, f1, whole, tol / pieces as f64, depth)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Trapezoid rule on a uniform grid; spectrally accurate for these
    /// smooth, rapidly decaying integrands.
    fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h)).sum();
        h * (inner + 0.5 * (f(lo) + f(hi)))
    }

    #[test]
    fn gaussian_peak_and_half_width() {
        let p = PulseSpec::gaussian(15.0, 2.0, 0.7);
        assert_eq!(p.sample(15.0), c(0.7));
        let half = p.sample(16.0).norm_sqr() / p.sample(15.0).norm_sqr();
        assert!((half - 0.5).abs() < 1e-14);
    }

    #[test]
    fn modulated_peak_doubles() {
        let p = PulseSpec::AmplitudeModulated {
            base: GaussianPulse::new(10.0, 5.0, c(1.0), 0.0),
            mod_freq_rad_per_us: 2.0 * PI * 0.4,
            mod_depth: 1.0,
        };
        assert!((p.sample(10.0) - c(2.0)).norm() < 1e-15);
    }

    #[test]
    fn composite_frequency_difference() {
        let short = GaussianPulse::new(40.0, 1.6, c(2f64.sqrt()), 0.0);
        let long = GaussianPulse::new(51.0, 3.2, c(1.0), 6.0);
        let p = PulseSpec::Composite(vec![PulseSpec::Gaussian(short), PulseSpec::Gaussian(long)]);
        // 6 rad/us is 3/pi MHz
        let df_mhz = (long.detuning_rad_per_us - short.detuning_rad_per_us) / (2.0 * PI);
        assert!((df_mhz - 3.0 / PI).abs() < 1e-15);
        for t in [38.0, 40.0, 45.5, 51.0, 53.0] {
            let sum = PulseSpec::Gaussian(short).sample(t) + PulseSpec::Gaussian(long).sample(t);
            assert_eq!(p.sample(t), sum);
        }
        // The long part's spectrum sits at -6 rad/us in the forward convention.
        let w: Vec<f64> = (-1000..=1000).map(|i| i as f64 * 0.01).collect();
        let spec = PulseSpec::Gaussian(long).analytic_spectrum(&w).unwrap();
        let imax = (0..w.len())
            .max_by(|&a, &b| spec[a].norm().total_cmp(&spec[b].norm()))
            .unwrap();
        assert!((w[imax] + 6.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_spectrum_peaks_at_zero() {
        let p = PulseSpec::gaussian(15.0, 2.0, 1.0);
        let w: Vec<f64> = (-200..=200).map(|i| i as f64 * 0.05).collect();
        let s = p.analytic_spectrum(&w).unwrap();
        let imax = (0..w.len())
            .max_by(|&a, &b| s[a].norm().total_cmp(&s[b].norm()))
            .unwrap();
        assert_eq!(w[imax], 0.0);
    }

    #[test]
    fn sidebands_sit_at_modulation_frequency() {
        let wm = 2.0 * PI * 0.4;
        let p = PulseSpec::AmplitudeModulated {
            base: GaussianPulse::new(25.0, 5.0, c(1.0), 0.0),
            mod_freq_rad_per_us: wm,
            mod_depth: 0.8,
        };
        let w: Vec<f64> = (-4000..=4000).map(|i| i as f64 * 0.001).collect();
        let s = p.analytic_spectrum(&w).unwrap();
        let mag: Vec<f64> = s.iter().map(|x| x.norm()).collect();
        let peaks: Vec<f64> = (1..w.len() - 1)
            .filter(|&i| mag[i] > mag[i - 1] && mag[i] >= mag[i + 1] && mag[i] > 0.01 * mag[4000])
            .map(|i| w[i])
            .collect();
        assert_eq!(peaks.len(), 3);
        assert!((peaks[0] + wm).abs() < 2e-3);
        assert!(peaks[1].abs() < 2e-3);
        assert!((peaks[2] - wm).abs() < 2e-3);
        // weight ratio of each lobe to the carrier
        let at = |x: f64| p.analytic_spectrum(&[x]).unwrap()[0].norm();
        assert!((at(wm) / at(0.0) - 0.4).abs() < 1e-6);
        assert!((at(-wm) / at(0.0) - 0.4).abs() < 1e-6);
    }

    #[test]
    fn exp_ramp_has_no_analytic_spectrum() {
        let p = PulseSpec::ExpRamp {
            t0_us: 15.0,
            rise_us: 1.0,
            fall_us: 3.0,
            amplitude: c(1.0),
        };
        assert!(matches!(
            p.analytic_spectrum(&[0.0]),
            Err(GemError::UnsupportedVariant(_))
        ));
    }

    #[test]
    fn parseval_on_analytic_forms() {
        let wm = 2.0 * PI * 0.4;
        let pulses = [
            PulseSpec::gaussian(15.0, 2.0, 1.3),
            PulseSpec::AmplitudeModulated {
                base: GaussianPulse::new(25.0, 5.0, Complex64::new(0.3, -0.8), 1.0),
                mod_freq_rad_per_us: wm,
                mod_depth: 1.0,
            },
            PulseSpec::Composite(vec![
                PulseSpec::Gaussian(GaussianPulse::new(40.0, 1.6, c(1.0), 0.0)),
                PulseSpec::Gaussian(GaussianPulse::new(41.0, 3.2, c(0.5), 1.5)),
            ]),
        ];
        for p in &pulses {
            let energy = p.energy().unwrap();
            let via_spectrum =
                trapezoid(|w| p.analytic_spectrum(&[w]).unwrap()[0].norm_sqr(), -40.0, 40.0, 16000)
                    / (2.0 * PI);
            let (lo, hi) = p.support();
            let via_time = trapezoid(|t| p.sample(t).norm_sqr(), lo, hi, 40000);
            assert!((via_spectrum - energy).abs() / energy < 1e-10, "{p:?}");
            assert!((via_time - energy).abs() / energy < 1e-10, "{p:?}");
        }
    }

    #[test]
    fn energy_scaling() {
        assert_eq!(PulseSpec::gaussian(0.0, 2.0, 0.0).energy().unwrap(), 0.0);
        let p = PulseSpec::gaussian(0.0, 2.0, 1.0);
        let e1 = p.energy().unwrap();
        let e2 = p.scaled(c(2.0)).energy().unwrap();
        assert!((e2 / e1 - 4.0).abs() < 1e-13);
    }

    #[test]
    fn equal_energy_width_rule() {
        let short = PulseSpec::gaussian(40.0, 1.6, 1.0);
        let long = PulseSpec::gaussian(51.0, 3.2, (1.6f64 / 3.2).sqrt());
        let (a, b) = (short.energy().unwrap(), long.energy().unwrap());
        assert!((a - b).abs() / a < 1e-12);
    }

    #[test]
    fn exp_ramp_energy_closed_form_and_quadrature() {
        let ramp = PulseSpec::ExpRamp {
            t0_us: 15.0,
            rise_us: 1.0,
            fall_us: 3.0,
            amplitude: c(1.0),
        };
        assert!((ramp.energy().unwrap() - 2.0).abs() < 1e-15);
        // Mixed composite falls back to quadrature; compare with the
        // exactly known non-overlapping sum.
        let mixed = PulseSpec::Composite(vec![ramp.clone(), PulseSpec::gaussian(300.0, 2.0, 1.0)]);
        let expect = 2.0 + PulseSpec::gaussian(300.0, 2.0, 1.0).energy().unwrap();
        assert!((mixed.energy().unwrap() - expect).abs() / expect < 1e-10);
    }

    #[test]
    fn nested_composite_rejected() {
        let inner = PulseSpec::Composite(vec![PulseSpec::gaussian(0.0, 1.0, 1.0)]);
        assert!(PulseSpec::Composite(vec![inner]).validate().is_err());
        assert!(PulseSpec::gaussian(0.0, 0.0, 1.0).validate().is_err());
    }
}

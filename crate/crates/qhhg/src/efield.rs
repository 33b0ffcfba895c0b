//! Time-resolved statistics of the generated and driving fields:
//! mean and standard deviation traces under the phase-space density,
//! a peak-width report, and the solid-angle emission constant.

use rayon::prelude::*;

use crate::band::BandModel;
use crate::drive::{current_accel, PulseSpec, TimeGrid};
use crate::phasespace::PhaseSpaceGrid;
use crate::quad::{gauss_legendre, periodic_angles, CompensatedSum};
use crate::{QhhgError, Result, AU_TIME_FS, SPEED_OF_LIGHT};

#[derive(Clone, Debug)]
pub struct FieldTrace {
    pub grid: TimeGrid,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Accumulated first and second weighted moments per time sample.
struct MomentAccs {
    m1: Vec<CompensatedSum>,
    m2: Vec<CompensatedSum>,
}

impl MomentAccs {
    fn new(len: usize) -> Self {
        MomentAccs {
            m1: (0..len).map(|_| CompensatedSum::new()).collect(),
            m2: (0..len).map(|_| CompensatedSum::new()).collect(),
        }
    }

    fn merge(&mut self, other: &MomentAccs) {
        for (a, b) in self.m1.iter_mut().zip(&other.m1) {
            a.add(b.value());
        }
        for (a, b) in self.m2.iter_mut().zip(&other.m2) {
            a.add(b.value());
        }
    }

    /// Turn (sum w f, sum w f^2) into (scale1 * mean, scale2 * var)
    /// traces, clamping the tiny negative variances that the two-term
    /// form can leave behind.
    fn into_trace(self, grid: &TimeGrid, mean_scale: f64, var_scale: f64) -> Result<FieldTrace> {
        let mut mean = Vec::with_capacity(self.m1.len());
        let mut std = Vec::with_capacity(self.m1.len());
        let m2_max = self
            .m2
            .iter()
            .fold(0.0f64, |m, acc| m.max(acc.value().abs()));
        for (a1, a2) in self.m1.iter().zip(&self.m2) {
            let s1 = a1.value();
            let s2 = a2.value();
            let var = s2 - s1 * s1;
            if var < -1e-10 * m2_max.max(1e-300) {
                return Err(QhhgError::Quadrature(format!(
                    "variance {var} below the numerical floor"
                )));
            }
            if !s1.is_finite() || !s2.is_finite() {
                return Err(QhhgError::NonFinite("field trace moment".into()));
            }
            mean.push(mean_scale * s1);
            std.push((var_scale * var.max(0.0)).sqrt());
        }
        Ok(FieldTrace { grid: grid.clone(), mean, std })
    }
}

/// Mean and std of the generated far field: mean = -(4/3c^3) <d2j/dt2>,
/// Var = (16/9c^6)[<(d2j/dt2)^2> - <d2j/dt2>^2] over the 2-D
/// phase-space grid. Nodes evaluate in parallel; partial sums combine
/// in fixed chunk order so the output is deterministic.
pub fn generated_field_stats(
    band: &BandModel,
    pulse: &PulseSpec,
    quad2d: &PhaseSpaceGrid,
    grid: &TimeGrid,
) -> Result<FieldTrace> {
    let nt = grid.len();
    let partials: Vec<MomentAccs> = quad2d
        .points
        .par_chunks(32)
        .map(|chunk| -> Result<MomentAccs> {
            let mut acc = MomentAccs::new(nt);
            for &(re, im, w) in chunk {
                let amp = re.hypot(im);
                let phase = im.atan2(re);
                let tr = current_accel(band, pulse, amp, phase, grid)?;
                let d2j = tr.d2j.as_ref().unwrap();
                for (k, &v) in d2j.iter().enumerate() {
                    acc.m1[k].add(w * v);
                    acc.m2[k].add(w * v * v);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = MomentAccs::new(nt);
    for p in &partials {
        total.merge(p);
    }
    let c3 = SPEED_OF_LIGHT.powi(3);
    total.into_trace(grid, -4.0 / (3.0 * c3), 16.0 / (9.0 * c3 * c3))
}

/// Mean and std of the driving field
/// E(t) = 2 g0 sqrt(omega0) (Re a sin(omega0 t) - Im a cos(omega0 t))
/// under the same 2-D quadrature; zero-point term excluded.
pub fn driving_field_stats(
    quad2d: &PhaseSpaceGrid,
    omega0: f64,
    g0: f64,
    grid: &TimeGrid,
) -> Result<FieldTrace> {
    let nt = grid.len();
    let mut acc = MomentAccs::new(nt);
    for &(re, im, w) in &quad2d.points {
        for (k, &t) in grid.times.iter().enumerate() {
            let e = re * (omega0 * t).sin() - im * (omega0 * t).cos();
            acc.m1[k].add(w * e);
            acc.m2[k].add(w * e * e);
        }
    }
    let scale = 2.0 * g0 * omega0.sqrt();
    acc.into_trace(grid, scale, scale * scale)
}

/// Peaks of the trace's characteristic signal (|mean| when the std is
/// negligible, std otherwise) over the flat top: (peak time a.u.,
/// FWHM in fs) per peak.
pub fn peak_width_report(
    trace: &FieldTrace,
    flat_lo: f64,
    flat_hi: f64,
) -> Result<Vec<(f64, f64)>> {
    let max_std = trace.std.iter().cloned().fold(0.0f64, f64::max);
    let max_mean = trace.mean.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let signal: Vec<f64> = if max_std < 1e-10 * max_mean {
        trace.mean.iter().map(|&x| x.abs()).collect()
    } else {
        trace.std.clone()
    };
    let times = &trace.grid.times;
    let in_flat: Vec<usize> = (0..times.len())
        .filter(|&i| times[i] >= flat_lo && times[i] <= flat_hi)
        .collect();
    let top = in_flat
        .iter()
        .map(|&i| signal[i])
        .fold(0.0f64, f64::max);
    if top <= 0.0 {
        return Err(QhhgError::Invalid("trace has no peak above the noise floor".into()));
    }
    let floor = 0.2 * top;
    let mut peaks = Vec::new();
    for &i in &in_flat {
        if i == 0 || i + 1 >= signal.len() {
            continue;
        }
        if signal[i] > floor && signal[i] >= signal[i - 1] && signal[i] > signal[i + 1] {
            if let Some(width) = fwhm_at(&signal, times, i) {
                peaks.push((times[i], width * AU_TIME_FS));
            }
        }
    }
    if peaks.is_empty() {
        return Err(QhhgError::Invalid("no resolvable peak in the flat-top window".into()));
    }
    Ok(peaks)
}

/// Full width at half maximum around a local maximum, by linear
/// interpolation of the half-height crossings. None if a crossing
/// runs outside the trace.
fn fwhm_at(signal: &[f64], times: &[f64], i: usize) -> Option<f64> {
    let half = signal[i] / 2.0;
    let mut l = i;
    while signal[l] > half {
        if l == 0 {
            return None;
        }
        l -= 1;
    }
    let tl = times[l]
        + (times[l + 1] - times[l]) * (half - signal[l]) / (signal[l + 1] - signal[l]);
    let mut r = i;
    while signal[r] > half {
        r += 1;
        if r == signal.len() {
            return None;
        }
    }
    let tr = times[r - 1]
        + (times[r] - times[r - 1]) * (half - signal[r - 1]) / (signal[r] - signal[r - 1]);
    Some(tr - tl)
}

/// Dominant nonzero frequency of a real sample train by discrete
/// Fourier transform magnitude.
pub fn dominant_frequency(samples: &[f64], dt: f64) -> f64 {
    use rustfft::{num_complex::Complex, FftPlanner};
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .map(|&x| Complex::new(x - mean, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut best = 1;
    for k in 1..=n / 2 {
        if buf[k].norm_sqr() > buf[best].norm_sqr() {
            best = k;
        }
    }
    2.0 * std::f64::consts::PI * best as f64 / (n as f64 * dt)
}

/// Solid-angle integral of the polarization sum sum_sigma e_sigma
/// (j_hat . e_sigma) = j_hat - k_hat (k_hat . j_hat), carrying the
/// overall minus sign of the emission prefactor; returns the scalar
/// coefficient of j_hat (analytically -8 pi / 3).
pub fn emission_solid_angle_constant(n_cos: usize, n_phi: usize) -> f64 {
    let (cosines, wc) = gauss_legendre(n_cos);
    let phis = periodic_angles(n_phi);
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    // j_hat = z; by symmetry only the z component survives
    let mut acc = CompensatedSum::new();
    for (&ct, &w) in cosines.iter().zip(&wc) {
        let st = (1.0 - ct * ct).sqrt();
        for &phi in &phis {
            let _k = (st * phi.cos(), st * phi.sin(), ct);
            // z component of j_hat - k_hat (k_hat . j_hat)
            acc.add(w * dphi * (1.0 - ct * ct));
        }
    }
    -acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::EnvelopeKind;
    use crate::phasespace::{phase_space_grid, DrivingField};

    fn zno_setup() -> (BandModel, PulseSpec, TimeGrid) {
        let band = BandModel::zno();
        let pulse = PulseSpec::new(0.005, 4e-8, 10, 3, EnvelopeKind::FlatTopSin2).unwrap();
        let grid = TimeGrid::for_pulse(&pulse, 128).unwrap();
        (band, pulse, grid)
    }

    fn flat_top(pulse: &PulseSpec) -> (f64, f64) {
        let tc = pulse.cycle_period();
        (3.0 * tc, pulse.duration() - 3.0 * tc)
    }

    #[test]
    fn solid_angle_constant() {
        let c = emission_solid_angle_constant(32, 64);
        let want = -8.0 * std::f64::consts::PI / 3.0;
        assert!((c - want).abs() < 1e-10, "constant = {c}");
    }

    #[test]
    fn coherent_generated_field_has_zero_std() {
        let (band, pulse, grid) = zno_setup();
        let field = DrivingField::coherent(8.5732e5, 0.0).unwrap();
        let q = phase_space_grid(&field, 1e-10, 64, 16).unwrap();
        let tr = generated_field_stats(&band, &pulse, &q, &grid).unwrap();
        assert!(tr.std.iter().all(|&s| s == 0.0));
        // mean is the single-trajectory acceleration up to the prefactor
        let base = current_accel(&band, &pulse, 8.5732e5, 0.0, &grid).unwrap();
        let pref = -4.0 / (3.0 * SPEED_OF_LIGHT.powi(3));
        for (m, d) in tr.mean.iter().zip(base.d2j.as_ref().unwrap()) {
            assert!((m - pref * d).abs() <= 1e-15 * m.abs().max(1e-300));
        }
    }

    #[test]
    fn thermal_generated_field_mean_vanishes() {
        let (band, pulse, grid) = zno_setup();
        let field = DrivingField::thermal(7.35e11).unwrap();
        let q = phase_space_grid(&field, 1e-10, 48, 64).unwrap();
        let tr = generated_field_stats(&band, &pulse, &q, &grid).unwrap();
        let max_std = tr.std.iter().cloned().fold(0.0f64, f64::max);
        let max_mean = tr.mean.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        assert!(max_mean < 1e-10 * max_std, "mean {max_mean}, std {max_std}");
        // flat-top std ripple
        let (lo, hi) = flat_top(&pulse);
        let flat: Vec<f64> = grid
            .times
            .iter()
            .zip(&tr.std)
            .filter(|(&t, _)| t >= lo && t <= hi)
            .map(|(_, &s)| s)
            .collect();
        let smax = flat.iter().cloned().fold(0.0f64, f64::max);
        let smin = flat.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((smax - smin) / smax < 0.2, "ripple {} .. {}", smin, smax);
    }

    #[test]
    fn two_term_variance_matches_direct() {
        let (band, pulse, grid) = zno_setup();
        let field = DrivingField::thermal(7.35e11).unwrap();
        let q = phase_space_grid(&field, 1e-10, 24, 16).unwrap();
        let tr = generated_field_stats(&band, &pulse, &q, &grid).unwrap();
        // direct weighted variance of the same samples
        let traces: Vec<Vec<f64>> = q
            .points
            .iter()
            .map(|&(re, im, _)| {
                current_accel(&band, &pulse, re.hypot(im), im.atan2(re), &grid)
                    .unwrap()
                    .d2j
                    .unwrap()
            })
            .collect();
        let pref2 = 16.0 / (9.0 * SPEED_OF_LIGHT.powi(6));
        let max_std = tr.std.iter().cloned().fold(0.0f64, f64::max);
        for k in (0..grid.len()).step_by(97) {
            let mu = crate::quad::csum(
                q.points.iter().zip(&traces).map(|(&(_, _, w), t)| w * t[k]),
            );
            let var = crate::quad::csum(
                q.points
                    .iter()
                    .zip(&traces)
                    .map(|(&(_, _, w), t)| w * (t[k] - mu) * (t[k] - mu)),
            );
            let want = (pref2 * var).sqrt();
            assert!(
                (tr.std[k] - want).abs() <= 1e-10 * max_std,
                "k={k}: {} vs {want}",
                tr.std[k]
            );
        }
    }

    #[test]
    fn driving_field_coherent_and_thermal() {
        let pulse = PulseSpec::new(0.005, 4e-8, 10, 3, EnvelopeKind::FlatTopSin2).unwrap();
        let grid = TimeGrid::for_pulse(&pulse, 64).unwrap();
        let amp = 1000.0;
        let field = DrivingField::coherent(amp, 0.0).unwrap();
        let q = phase_space_grid(&field, 1e-10, 32, 16).unwrap();
        let tr = driving_field_stats(&q, 0.005, 4e-8, &grid).unwrap();
        assert!(tr.std.iter().all(|&s| s == 0.0));
        for (k, &t) in grid.times.iter().enumerate() {
            let want = 2.0 * 4e-8 * 0.005f64.sqrt() * amp * (0.005 * t).sin();
            assert!((tr.mean[k] - want).abs() < 1e-18 + 1e-12 * want.abs());
        }

        let mean_n = 1e6;
        let th = DrivingField::thermal(mean_n).unwrap();
        let q = phase_space_grid(&th, 1e-12, 200, 64).unwrap();
        let tr = driving_field_stats(&q, 0.005, 4e-8, &grid).unwrap();
        // <E^2> = 2 g0^2 omega0 <N>, constant in time
        let want = (2.0 * 4e-8f64 * 4e-8 * 0.005 * mean_n).sqrt();
        let max_mean = tr.mean.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        assert!(max_mean < 1e-8 * want);
        for &s in &tr.std {
            assert!(((s - want) / want).abs() < 1e-6, "std {s} vs {want}");
        }
    }

    #[test]
    fn bsv_driving_field_oscillates_between_quadratures() {
        let r = 1.2f64;
        let omega0 = 0.005;
        let g0 = 4e-8;
        let pulse = PulseSpec::new(omega0, g0, 4, 0, EnvelopeKind::None).unwrap();
        let grid = TimeGrid::for_pulse(&pulse, 256).unwrap();
        let field = DrivingField::bsv(r).unwrap();
        let q = phase_space_grid(&field, 1e-12, 160, 0).unwrap();
        let tr = driving_field_stats(&q, omega0, g0, &grid).unwrap();
        // at t = 0 the field sits on the anti-squeezed quadrature,
        // Q-variance (1 + e^{2r})/4; a quarter cycle later on the
        // squeezed one, (1 + e^{-2r})/4
        let scale2 = 4.0 * g0 * g0 * omega0;
        let k_quarter = 64; // pi/2 into the first cycle
        let want_hi = scale2 * (1.0 + (2.0 * r).exp()) / 4.0;
        let want_lo = scale2 * (1.0 + (-2.0 * r).exp()) / 4.0;
        let v_hi = tr.std[0] * tr.std[0];
        let v_lo = tr.std[k_quarter] * tr.std[k_quarter];
        assert!(((v_hi - want_hi) / want_hi).abs() < 1e-6, "{v_hi} vs {want_hi}");
        assert!(((v_lo - want_lo) / want_lo).abs() < 1e-6, "{v_lo} vs {want_lo}");
        // dominant std^2 oscillation at 2 omega0
        let var: Vec<f64> = tr.std.iter().map(|&s| s * s).collect();
        let f = dominant_frequency(&var[..var.len() - 1], grid.dt());
        assert!((f / (2.0 * omega0) - 1.0).abs() < 0.02, "frequency {f}");
    }

    #[test]
    fn gaussian_bump_fwhm() {
        let pulse = PulseSpec::new(0.005, 4e-8, 10, 0, EnvelopeKind::None).unwrap();
        let grid = TimeGrid::for_pulse(&pulse, 64).unwrap();
        let t0 = 0.5 * pulse.duration();
        let sigma = 200.0;
        let mean: Vec<f64> = grid
            .times
            .iter()
            .map(|&t| (-(t - t0) * (t - t0) / (2.0 * sigma * sigma)).exp())
            .collect();
        let tr = FieldTrace { grid: grid.clone(), mean, std: vec![0.0; grid.len()] };
        let peaks = peak_width_report(&tr, 0.0, pulse.duration()).unwrap();
        assert_eq!(peaks.len(), 1);
        let want = 2.3548 * sigma * AU_TIME_FS;
        assert!((peaks[0].1 / want - 1.0).abs() < 0.01, "fwhm {}", peaks[0].1);

        let zero = FieldTrace {
            grid: grid.clone(),
            mean: vec![0.0; grid.len()],
            std: vec![0.0; grid.len()],
        };
        assert!(peak_width_report(&zero, 0.0, pulse.duration()).is_err());
    }
}

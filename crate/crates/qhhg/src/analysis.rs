//! Scalar diagnostics: cutoff law, exact vs perturbative harmonic
//! signal, and the perturbative-validity threshold.

use crate::band::BandModel;
use crate::phasespace::{radial_grid, DrivingField};
use crate::quad::CompensatedSum;
use crate::specfun::{bessel_j, ln_gamma};
use crate::{QhhgError, Result};

/// Safety factor in the perturbative-validity inequality
/// mu_P + 3 sigma_P <= n / (R l_max g_tilde).
pub const PERTURBATIVE_SAFETY: f64 = 9.0;

#[derive(Clone, Debug)]
pub struct ScalingCurve {
    pub mean_photons: Vec<f64>,
    pub exact_signal: Vec<f64>,
    pub perturbative_signal: Vec<f64>,
    /// Largest mean photon number still inside the validity range.
    pub validity_threshold: f64,
}

/// Cutoff harmonic order l_max * g_tilde * (mu_P + 3 sigma_P),
/// reported unrounded.
pub fn cutoff_order(
    band: &BandModel,
    field: &DrivingField,
    g0: f64,
    omega0: f64,
) -> Result<f64> {
    let g_tilde = band.lattice_coupling(g0, omega0)?;
    let (mu, sigma) = field.moments()?;
    Ok(band.l_max() as f64 * g_tilde * (mu + 3.0 * sigma))
}

/// Exact n-th harmonic signal Int d|a| P(|a|) [sum_l C_l
/// J_n(l g_tilde |a|)]^2 (no omega^2 factor).
pub fn harmonic_signal_exact(
    band: &BandModel,
    field: &DrivingField,
    n: u32,
    g0: f64,
    omega0: f64,
    rel_tail: f64,
    radial_nodes: usize,
) -> Result<f64> {
    if n % 2 == 0 {
        return Err(QhhgError::Invalid(format!("harmonic order {n} must be odd")));
    }
    let g_tilde = band.lattice_coupling(g0, omega0)?;
    let coeffs = band.c_coefficients();
    let rg = radial_grid(field, rel_tail, radial_nodes)?;
    let mut acc = CompensatedSum::new();
    for (&s, &w) in rg.nodes.iter().zip(&rg.weights) {
        let mut inner = 0.0;
        for (i, &c_l) in coeffs.iter().enumerate() {
            inner += c_l * bessel_j(n as i64, (i + 1) as f64 * g_tilde * s)?;
        }
        acc.add(w * inner * inner);
    }
    Ok(acc.value())
}

/// Perturbative n-th harmonic signal
/// K_n g_tilde^{2n} / ((n!)^2 2^{2n}) * g_n(0) * <N>^n, in the log
/// domain throughout.
pub fn harmonic_signal_perturbative(
    band: &BandModel,
    field: &DrivingField,
    n: u32,
    g0: f64,
    omega0: f64,
) -> Result<f64> {
    if n % 2 == 0 {
        return Err(QhhgError::Invalid(format!("harmonic order {n} must be odd")));
    }
    let g_tilde = band.lattice_coupling(g0, omega0)?;
    let ln_k = band.log_k_constant(n)?;
    let g_corr = field.correlation_g(n)?;
    let mean_n = field.mean_photon_number();
    if mean_n == 0.0 || ln_k == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let nf = n as f64;
    let log = ln_k + 2.0 * nf * g_tilde.ln() - 2.0 * ln_gamma(nf + 1.0)
        - 2.0 * nf * std::f64::consts::LN_2
        + g_corr.ln()
        + nf * mean_n.ln();
    let v = log.exp();
    if !v.is_finite() {
        return Err(QhhgError::NonFinite("perturbative signal".into()));
    }
    Ok(v)
}

fn spread(field_kind: &str, mean_n: f64) -> Result<f64> {
    let f = DrivingField::of_mean_photons(field_kind, mean_n)?;
    let (mu, sigma) = f.moments()?;
    Ok(mu + 3.0 * sigma)
}

/// Largest mean photon number with mu_P + 3 sigma_P <=
/// n / (9 l_max g_tilde), found by bisection on the field's photon
/// number. Returns (threshold, safety factor).
pub fn perturbative_limit(
    band: &BandModel,
    field_kind: &str,
    n: u32,
    g0: f64,
    omega0: f64,
) -> Result<(f64, f64)> {
    assert!(n >= 1);
    let g_tilde = band.lattice_coupling(g0, omega0)?;
    let bound = n as f64 / (PERTURBATIVE_SAFETY * band.l_max() as f64 * g_tilde);
    // bracket: grow until the inequality is violated
    let mut lo = 1.0f64;
    if spread(field_kind, lo)? > bound {
        // even a single photon violates it; shrink downwards instead
        let hi = lo;
        for _ in 0..200 {
            lo /= 4.0;
            if spread(field_kind, lo)? <= bound {
                return bisect(field_kind, lo, hi, bound);
            }
        }
        return Err(QhhgError::Quadrature(
            "perturbative threshold bracket not found below <N> = 1".into(),
        ));
    }
    let mut hi = lo;
    let mut found = false;
    for _ in 0..200 {
        hi *= 4.0;
        if spread(field_kind, hi)? > bound {
            found = true;
            break;
        }
        lo = hi;
    }
    if !found {
        return Err(QhhgError::Quadrature(
            "perturbative threshold bracket not found".into(),
        ));
    }
    bisect(field_kind, lo, hi, bound)
}

fn bisect(field_kind: &str, mut lo: f64, mut hi: f64, bound: f64) -> Result<(f64, f64)> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spread(field_kind, mid)? <= bound {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) / hi < 1e-10 {
            break;
        }
    }
    Ok((lo, PERTURBATIVE_SAFETY))
}

/// Sweep the exact and perturbative signals over a mean-photon grid.
pub fn scaling_curve(
    band: &BandModel,
    field_kind: &str,
    n: u32,
    g0: f64,
    omega0: f64,
    mean_photons: &[f64],
    rel_tail: f64,
    radial_nodes: usize,
) -> Result<ScalingCurve> {
    let (threshold, _) = perturbative_limit(band, field_kind, n, g0, omega0)?;
    let mut exact = Vec::with_capacity(mean_photons.len());
    let mut pert = Vec::with_capacity(mean_photons.len());
    for &m in mean_photons {
        let f = DrivingField::of_mean_photons(field_kind, m)?;
        exact.push(harmonic_signal_exact(band, &f, n, g0, omega0, rel_tail, radial_nodes)?);
        pert.push(harmonic_signal_perturbative(band, &f, n, g0, omega0)?);
    }
    Ok(ScalingCurve {
        mean_photons: mean_photons.to_vec(),
        exact_signal: exact,
        perturbative_signal: pert,
        validity_threshold: threshold,
    })
}

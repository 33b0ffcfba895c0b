//! Spectral observables: semiclassical spectrum of a current trace,
//! P-weighted quantum spectrum, analytic Floquet peaks and peak
//! extraction by harmonic window.

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::band::BandModel;
use crate::drive::{current, CurrentTrace, PulseSpec, TimeGrid};
use crate::phasespace::{radial_grid, DrivingField, RadialGrid};
use crate::quad::CompensatedSum;
use crate::specfun::bessel_j;
use crate::{QhhgError, Result};

#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Uniform frequency grid from 0 to Nyquist (a.u.).
    pub omega: Vec<f64>,
    /// omega^2 |FT j|^2, arbitrary units (global constants dropped).
    pub density: Vec<f64>,
}

impl Spectrum {
    pub fn domega(&self) -> f64 {
        self.omega[1] - self.omega[0]
    }
}

#[derive(Clone, Debug)]
pub struct FloquetPeaks {
    pub orders: Vec<u32>,
    pub weights: Vec<f64>,
}

impl FloquetPeaks {
    pub fn weight(&self, n: u32) -> Option<f64> {
        self.orders
            .iter()
            .position(|&m| m == n)
            .map(|i| self.weights[i])
    }
}

/// Semiclassical spectrum omega^2 |FT j|^2 dt^2 of a single trace.
/// The endpoint samples get trapezoid half weights; no window function
/// is applied (the envelope is part of the physics).
pub fn sc_spectrum(trace: &CurrentTrace) -> Result<Spectrum> {
    let grid = &trace.grid;
    let dt = grid.dt();
    let uniform = grid
        .times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() < 1e-9 * dt);
    if !uniform {
        return Err(QhhgError::Quadrature("time grid is not uniform".into()));
    }
    // fold the closing sample onto the opening one: trapezoid end
    // weights, and an exactly periodic signal transforms exactly
    let n = trace.j.len() - 1;
    let mut buf: Vec<Complex<f64>> = trace.j[..n]
        .iter()
        .map(|&x| Complex::new(x, 0.0))
        .collect();
    buf[0] = Complex::new((trace.j[0] + trace.j[n]) / 2.0, 0.0);
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let t_total = grid.t_end - grid.t_start;
    let domega = 2.0 * std::f64::consts::PI / t_total;
    let n_half = n / 2;
    let mut omega = Vec::with_capacity(n_half + 1);
    let mut density = Vec::with_capacity(n_half + 1);
    for k in 0..=n_half {
        let w = k as f64 * domega;
        omega.push(w);
        density.push(w * w * buf[k].norm_sqr() * dt * dt);
    }
    Ok(Spectrum { omega, density })
}

/// Quantum spectrum: radial P-weighted average of semiclassical
/// spectra at fixed driving phase 0. Nodes solve independently in
/// parallel; the reduction is an ordered compensated sum, so results
/// do not depend on scheduling.
pub fn quantum_spectrum(
    band: &BandModel,
    pulse: &PulseSpec,
    field: &DrivingField,
    grid: &TimeGrid,
    rel_tail: f64,
    radial_nodes: usize,
) -> Result<Spectrum> {
    let rg = radial_grid(field, rel_tail, radial_nodes)?;
    quantum_spectrum_on(band, pulse, &rg, grid)
}

pub fn quantum_spectrum_on(
    band: &BandModel,
    pulse: &PulseSpec,
    rg: &RadialGrid,
    grid: &TimeGrid,
) -> Result<Spectrum> {
    let per_node: Vec<Spectrum> = rg
        .nodes
        .par_iter()
        .map(|&amp| {
            let tr = current(band, pulse, amp, 0.0, grid)?;
            sc_spectrum(&tr)
        })
        .collect::<Result<_>>()?;
    let omega = per_node[0].omega.clone();
    let mut density = Vec::with_capacity(omega.len());
    for k in 0..omega.len() {
        let mut acc = CompensatedSum::new();
        for (spec, &w) in per_node.iter().zip(&rg.weights) {
            acc.add(w * spec.density[k]);
        }
        density.push(acc.value());
    }
    Ok(Spectrum { omega, density })
}

/// Floquet peak weights (n omega0)^2 Int d|a| P(|a|) [sum_l C_l
/// J_n(l g_tilde |a|)]^2 for odd n <= n_max, on the field's radial grid.
pub fn floquet_peaks(
    band: &BandModel,
    field: &DrivingField,
    g0: f64,
    omega0: f64,
    n_max: u32,
    rel_tail: f64,
    radial_nodes: usize,
) -> Result<FloquetPeaks> {
    if n_max % 2 == 0 || n_max < 1 {
        return Err(QhhgError::Invalid(format!("n_max = {n_max} must be odd and >= 1")));
    }
    let rg = radial_grid(field, rel_tail, radial_nodes)?;
    let g_tilde = band.lattice_coupling(g0, omega0)?;
    let coeffs = band.c_coefficients();
    let orders: Vec<u32> = (1..=n_max).step_by(2).collect();
    let weights: Vec<f64> = orders
        .par_iter()
        .map(|&n| -> Result<f64> {
            let mut acc = CompensatedSum::new();
            for (&s, &w) in rg.nodes.iter().zip(&rg.weights) {
                let mut inner = 0.0;
                for (i, &c_l) in coeffs.iter().enumerate() {
                    inner += c_l * bessel_j(n as i64, (i + 1) as f64 * g_tilde * s)?;
                }
                acc.add(w * inner * inner);
            }
            let nf = n as f64 * omega0;
            Ok(nf * nf * acc.value())
        })
        .collect::<Result<_>>()?;
    Ok(FloquetPeaks { orders, weights })
}

/// Integrated spectral mass in each harmonic window
/// [(n - 1/2) omega0, (n + 1/2) omega0], by trapezoid on the spectral
/// grid, for n = 1..=n_max.
pub fn harmonic_peak_heights(
    spec: &Spectrum,
    omega0: f64,
    n_max: u32,
) -> Result<Vec<(u32, f64)>> {
    let dw = spec.domega();
    if dw > omega0 / 8.0 {
        return Err(QhhgError::Invalid(format!(
            "spectrum resolution {dw} coarser than omega0/8 = {}",
            omega0 / 8.0
        )));
    }
    let mut out = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let lo = (n as f64 - 0.5) * omega0;
        let hi = (n as f64 + 0.5) * omega0;
        if hi > *spec.omega.last().unwrap() {
            return Err(QhhgError::Invalid(format!(
                "harmonic {n} window exceeds the Nyquist frequency"
            )));
        }
        out.push((n, window_mass(spec, lo, hi)));
    }
    Ok(out)
}

fn window_mass(spec: &Spectrum, lo: f64, hi: f64) -> f64 {
    let dw = spec.domega();
    let i0 = (lo / dw).ceil() as usize;
    let i1 = (hi / dw).floor() as usize;
    let mut acc = CompensatedSum::new();
    for i in i0..=i1 {
        let w = if i == i0 || i == i1 { 0.5 } else { 1.0 };
        acc.add(w * spec.density[i]);
    }
    acc.value() * dw
}

//! Phase-space description of the driving fields: diagonal P/Q densities,
//! their radial reduction, moments, normal-ordered correlation functions
//! and the quadrature grids everything downstream integrates over.
//!
//! Fock and BSV fields are represented by their Husimi Q functions (the
//! approximative positive P), evaluated in the log domain throughout so
//! that photon numbers of order 1e12 stay finite.

use crate::quad::{csum, gauss_legendre_on, log_sum_exp, periodic_angles};
use crate::specfun::{ln_gamma, log_i0_scaled};
use crate::{QhhgError, Result};

/// Driving-field state of the laser mode.
#[derive(Clone, Debug, PartialEq)]
pub enum DrivingField {
    /// Coherent state |alpha_L>; exact point mass in phase space.
    Coherent { alpha_abs: f64, alpha_phase: f64 },
    /// Thermal state with mean photon number `mean_n`.
    Thermal { mean_n: f64 },
    /// Fock state |n>, described by its Husimi Q function.
    Fock { n: u64 },
    /// Bright squeezed vacuum S(r)|0> with real r, Husimi Q function.
    Bsv { r: f64 },
}

use DrivingField::*;

impl DrivingField {
    pub fn coherent(alpha_abs: f64, alpha_phase: f64) -> Result<Self> {
        if !(alpha_abs >= 0.0) || !alpha_phase.is_finite() {
            return Err(QhhgError::Field(format!(
                "coherent amplitude {alpha_abs}, phase {alpha_phase}"
            )));
        }
        Ok(Coherent { alpha_abs, alpha_phase })
    }

    pub fn thermal(mean_n: f64) -> Result<Self> {
        if !(mean_n > 0.0) || !mean_n.is_finite() {
            return Err(QhhgError::Field(format!("thermal mean photons {mean_n} must be > 0")));
        }
        Ok(Thermal { mean_n })
    }

    pub fn fock(n: u64) -> Result<Self> {
        Ok(Fock { n })
    }

    pub fn bsv(r: f64) -> Result<Self> {
        if !r.is_finite() || r.abs() > 300.0 {
            return Err(QhhgError::Field(format!("squeezing parameter r = {r}")));
        }
        Ok(Bsv { r })
    }

    /// Construct a field of the given kind with the given nominal mean
    /// photon number (Fock rounds to the nearest integer).
    pub fn of_mean_photons(kind: &str, mean_n: f64) -> Result<Self> {
        match kind {
            "coherent" => Self::coherent(mean_n.sqrt(), 0.0),
            "thermal" => Self::thermal(mean_n),
            "fock" => Self::fock(mean_n.round() as u64),
            "bsv" => Self::bsv(mean_n.sqrt().asinh()),
            other => Err(QhhgError::Field(format!("unknown field kind `{other}`"))),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Coherent { .. } => "coherent",
            Thermal { .. } => "thermal",
            Fock { .. } => "fock",
            Bsv { .. } => "bsv",
        }
    }

    /// Nominal mean photon number of the state itself: |alpha|^2, <N>,
    /// n, sinh^2 r. For Fock and BSV the APP second moment differs from
    /// this by one photon (see `app_second_moment`).
    pub fn mean_photon_number(&self) -> f64 {
        match *self {
            Coherent { alpha_abs, .. } => alpha_abs * alpha_abs,
            Thermal { mean_n } => mean_n,
            Fock { n } => n as f64,
            Bsv { r } => r.sinh().powi(2),
        }
    }

    /// Second moment integral d^2a P(a) |a|^2 of the distribution in
    /// closed form: |alpha|^2, <N>, n + 1, cosh^2 r.
    pub fn app_second_moment(&self) -> f64 {
        match *self {
            Coherent { alpha_abs, .. } => alpha_abs * alpha_abs,
            Thermal { mean_n } => mean_n,
            Fock { n } => n as f64 + 1.0,
            Bsv { r } => r.cosh().powi(2),
        }
    }

    /// log of the phase-space density at alpha = re + i im.
    pub fn log_density(&self, re: f64, im: f64) -> Result<f64> {
        let s2 = re * re + im * im;
        match *self {
            Coherent { .. } => Err(QhhgError::CoherentPointMass),
            Thermal { mean_n } => {
                Ok(-(std::f64::consts::PI * mean_n).ln() - s2 / mean_n)
            }
            Fock { n } => {
                if s2 == 0.0 {
                    return Ok(if n == 0 {
                        -std::f64::consts::PI.ln()
                    } else {
                        f64::NEG_INFINITY
                    });
                }
                // radial form minus the angular measure 2 pi |alpha|
                let amp = s2.sqrt();
                Ok(self.log_radial_density(amp)?
                    - (2.0 * std::f64::consts::PI * amp).ln())
            }
            Bsv { r } => {
                let (a, b) = bsv_quadrature_coeffs(r);
                Ok(-std::f64::consts::PI.ln() - ln_cosh(r) - a * re * re - b * im * im)
            }
        }
    }

    /// Phase-space density (1/area) at alpha. Errors for Coherent.
    pub fn density(&self, re: f64, im: f64) -> Result<f64> {
        Ok(self.log_density(re, im)?.exp())
    }

    /// log of the radial distribution P(|alpha|) = |alpha| Int dphi P.
    pub fn log_radial_density(&self, amp: f64) -> Result<f64> {
        assert!(amp >= 0.0);
        match *self {
            Coherent { .. } => Err(QhhgError::CoherentPointMass),
            Thermal { mean_n } => {
                if amp == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                Ok((2.0 * amp / mean_n).ln() - amp * amp / mean_n)
            }
            Fock { n } => {
                if amp == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                let nf = n as f64;
                let w = amp * amp;
                if n < 10_000 {
                    return Ok(std::f64::consts::LN_2 + (2.0 * nf + 1.0) * amp.ln()
                        - w
                        - ln_gamma(nf + 1.0));
                }
                // For huge n the direct form subtracts terms of order
                // n ln n and loses ~n eps absolutely; regroup through
                // Stirling so only n [ln(1 + t) - t] remains, with
                // t = (|alpha|^2 - n)/n evaluated by series.
                let t = (w - nf) / nf;
                let phi = if t.abs() < 0.5 {
                    let mut sum = 0.0;
                    let mut pow = t;
                    for k in 2..200 {
                        pow *= -t;
                        let term = pow / k as f64;
                        sum += term;
                        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                            break;
                        }
                    }
                    sum
                } else {
                    libm::log1p(t) - t
                };
                Ok(std::f64::consts::LN_2 + 0.5 * w.ln() + nf * phi
                    - 0.5 * (2.0 * std::f64::consts::PI * nf).ln()
                    - 1.0 / (12.0 * nf)
                    + 1.0 / (360.0 * nf * nf * nf))
            }
            Bsv { r } => {
                if amp == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                // |a| Int dphi exp(-A x^2 - B y^2) / (pi cosh r)
                //   = (2 |a| / cosh r) exp(-B |a|^2) I0(z) e^{-z},
                // z = |a|^2 (A - B) / 2, all in the log domain.
                let (a, b) = bsv_quadrature_coeffs(r);
                let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
                let z = amp * amp * (hi - lo) / 2.0;
                Ok((2.0 * amp).ln() - ln_cosh(r) - lo * amp * amp + log_i0_scaled(z))
            }
        }
    }

    /// Radial distribution P(|alpha|); errors for Coherent.
    pub fn radial_density(&self, amp: f64) -> Result<f64> {
        Ok(self.log_radial_density(amp)?.exp())
    }

    /// Cross-check route for the BSV angular reduction: periodic
    /// trapezoid in phi with `n_phi` nodes. Spectrally accurate only
    /// while the integrand is resolved, i.e. amp^2 * (A - B) not much
    /// larger than n_phi^2; the closed I0 form above is the primary path.
    pub fn radial_density_trapezoid(&self, amp: f64, n_phi: usize) -> Result<f64> {
        let angles = periodic_angles(n_phi);
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let mut acc = 0.0;
        for phi in angles {
            acc += self.density(amp * phi.cos(), amp * phi.sin())?;
        }
        Ok(amp * acc * dphi)
    }

    /// Support window [lo, hi] outside which the radial density carries
    /// mass far below 1e-14, used to anchor the moment quadratures.
    fn support_window(&self) -> (f64, f64) {
        match *self {
            Coherent { alpha_abs, .. } => (alpha_abs, alpha_abs),
            Thermal { mean_n } => (0.0, 8.0 * mean_n.sqrt()),
            Fock { n } => {
                let u = n as f64 + 1.0;
                let spread = 15.0 * u.sqrt();
                let lo = (u - spread).max(0.0).sqrt();
                let hi = (u + spread).sqrt() + 5.0;
                (lo, hi)
            }
            Bsv { r } => (0.0, 8.0 * r.cosh() + 8.0),
        }
    }

    /// Mean and standard deviation of |alpha| under P, by radial
    /// quadrature. Coherent returns (|alpha_L|, 0) exactly.
    pub fn moments(&self) -> Result<(f64, f64)> {
        self.moments_with_nodes(MOMENT_NODES)
    }

    /// Gauss-Legendre nodes and weights over the support, split into
    /// panels when the density has structure far below the support
    /// scale (the BSV radial density turns over on the |alpha| ~ 1
    /// scale while its support extends to ~cosh r).
    pub fn panel_quadrature(&self, nodes: usize) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.support_window();
        let cuts: Vec<f64> = match *self {
            Bsv { .. } if hi > 24.0 => vec![lo.max(0.0), 12.0, hi],
            _ => vec![lo, hi],
        };
        let mut s = Vec::new();
        let mut w = Vec::new();
        for pair in cuts.windows(2) {
            let (si, wi) = gauss_legendre_on(nodes, pair[0], pair[1]);
            s.extend(si);
            w.extend(wi);
        }
        (s, w)
    }

    pub fn moments_with_nodes(&self, nodes: usize) -> Result<(f64, f64)> {
        if let Coherent { alpha_abs, .. } = *self {
            return Ok((alpha_abs, 0.0));
        }
        let (s, w) = self.panel_quadrature(nodes);
        let dens: Vec<f64> = s
            .iter()
            .map(|&si| self.radial_density(si))
            .collect::<Result<_>>()?;
        let norm = csum(w.iter().zip(&dens).map(|(&wi, &p)| wi * p));
        if (norm - 1.0).abs() > 1e-8 {
            return Err(QhhgError::Quadrature(format!(
                "radial density normalization {norm} off by more than 1e-8"
            )));
        }
        let mu = csum(
            s.iter()
                .zip(w.iter().zip(&dens))
                .map(|(&si, (&wi, &p))| wi * p * si),
        );
        // central second moment directly, avoiding the m2 - mu^2
        // cancellation that loses everything at mu ~ 1e6
        let var = csum(
            s.iter()
                .zip(w.iter().zip(&dens))
                .map(|(&si, (&wi, &p))| wi * p * (si - mu) * (si - mu)),
        );
        if var < -1e-10 {
            return Err(QhhgError::Quadrature(format!("negative variance {var}")));
        }
        Ok((mu, var.max(0.0).sqrt()))
    }

    /// Normal-ordered moment integral d^2a P(a) |a|^{2k}, log domain.
    pub fn normal_moment(&self, k: u32) -> Result<f64> {
        assert!(k >= 1);
        if let Coherent { alpha_abs, .. } = *self {
            return Ok(alpha_abs.powi(2 * k as i32));
        }
        let m = self.log_normal_moment(k)?.exp();
        if !m.is_finite() {
            return Err(QhhgError::NonFinite(format!("normal_moment(k={k})")));
        }
        Ok(m)
    }

    fn log_normal_moment(&self, k: u32) -> Result<f64> {
        let (s, w) = self.panel_quadrature(MOMENT_NODES);
        let mut terms = Vec::with_capacity(s.len());
        for (&si, &wi) in s.iter().zip(&w) {
            if si <= 0.0 {
                continue;
            }
            terms.push(wi.ln() + self.log_radial_density(si)? + 2.0 * k as f64 * si.ln());
        }
        Ok(log_sum_exp(&terms))
    }

    /// n-th order equal-time correlation g^{(n)}(0) =
    /// M_{2n} / M_2^n with M the normal-ordered moments.
    pub fn correlation_g(&self, n: u32) -> Result<f64> {
        assert!(n >= 1);
        if matches!(self, Coherent { .. }) {
            return Ok(1.0);
        }
        let l_num = self.log_normal_moment(n)?;
        let l_den = self.log_normal_moment(1)?;
        let g = (l_num - n as f64 * l_den).exp();
        if !g.is_finite() {
            return Err(QhhgError::NonFinite(format!("correlation_g(n={n})")));
        }
        Ok(g)
    }
}

const MOMENT_NODES: usize = 1501;

/// Quadrature-exponent coefficients (A, B) of the BSV Husimi function
/// exp(-A x^2 - B y^2): A = 2/(1+e^{-2r}), B = 2/(1+e^{2r}), both
/// evaluated through the logistic function for stability at large |r|.
fn bsv_quadrature_coeffs(r: f64) -> (f64, f64) {
    let sig = |t: f64| {
        if t >= 0.0 {
            1.0 / (1.0 + (-t).exp())
        } else {
            let e = t.exp();
            e / (1.0 + e)
        }
    };
    (2.0 * sig(2.0 * r), 2.0 * sig(-2.0 * r))
}

fn ln_cosh(r: f64) -> f64 {
    let t = r.abs();
    t + (1.0 + (-2.0 * t).exp()).ln() - std::f64::consts::LN_2
}

/// Radial quadrature grid: nodes on |alpha|, weights carrying the
/// radial distribution, so that sum w_i f(s_i) approximates
/// Int d|alpha| P(|alpha|) f(|alpha|).
#[derive(Clone, Debug)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub is_point_mass: bool,
    /// Mass left outside the quadrature window, by direct tail integration.
    pub tail_mass: f64,
}

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Build the radial grid for a field: Gauss-Legendre on
/// [max(0, mu - k sigma), mu + k sigma], with k raised from 8 until the
/// omitted tail mass drops below `rel_tail` (k <= 12), verified by
/// direct tail integration. Coherent collapses to a single unit-weight
/// node.
pub fn radial_grid(field: &DrivingField, rel_tail: f64, nodes: usize) -> Result<RadialGrid> {
    assert!(nodes >= 16, "need at least 16 radial nodes");
    assert!(rel_tail > 0.0 && rel_tail < 1.0);
    if let Coherent { alpha_abs, .. } = *field {
        return Ok(RadialGrid {
            nodes: vec![alpha_abs],
            weights: vec![1.0],
            is_point_mass: true,
            tail_mass: 0.0,
        });
    }
    let (mu, sigma) = field.moments()?;
    let (_, support_hi) = field.support_window();
    let tail_nodes = 201;
    let mut chosen = None;
    for k in 8..=12 {
        let kf = k as f64;
        let lo = (mu - kf * sigma).max(0.0);
        let hi = (mu + kf * sigma).min(support_hi);
        let mut tail = 0.0;
        if lo > 0.0 {
            let (s, w) = gauss_legendre_on(tail_nodes, 0.0, lo);
            tail += csum(
                s.iter()
                    .zip(&w)
                    .map(|(&si, &wi)| wi * field.radial_density(si).unwrap_or(0.0)),
            );
        }
        if hi < support_hi {
            let (s, w) = gauss_legendre_on(tail_nodes, hi, support_hi);
            tail += csum(
                s.iter()
                    .zip(&w)
                    .map(|(&si, &wi)| wi * field.radial_density(si).unwrap_or(0.0)),
            );
        }
        if tail < rel_tail {
            chosen = Some((lo, hi, tail));
            break;
        }
    }
    let (lo, hi, tail) = chosen.ok_or_else(|| {
        QhhgError::Quadrature(format!(
            "tail mass stayed above {rel_tail} out to 12 sigma for {}",
            field.kind_name()
        ))
    })?;
    let (s, w) = gauss_legendre_on(nodes, lo, hi);
    let mut weights = Vec::with_capacity(nodes);
    for (&si, &wi) in s.iter().zip(&w) {
        weights.push(wi * field.radial_density(si)?);
    }
    Ok(RadialGrid {
        nodes: s,
        weights,
        is_point_mass: false,
        tail_mass: tail,
    })
}

/// Two-dimensional phase-space quadrature: points (re, im, weight) with
/// sum of weights = 1, for observables that depend on the phase of
/// alpha (E-field statistics, quadrature variances).
#[derive(Clone, Debug)]
pub struct PhaseSpaceGrid {
    pub points: Vec<(f64, f64, f64)>,
    pub is_point_mass: bool,
}

impl PhaseSpaceGrid {
    /// (|alpha|, arg alpha, weight) view of the points.
    pub fn polar(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.points
            .iter()
            .map(|&(re, im, w)| (re.hypot(im), im.atan2(re), w))
    }

    pub fn total_weight(&self) -> f64 {
        csum(self.points.iter().map(|&(_, _, w)| w))
    }
}

/// Build the 2-D grid. Phase-symmetric fields (Thermal, Fock) use the
/// radial grid times `n_phi` uniform phases. BSV uses a Cartesian
/// Gauss-Legendre product grid aligned with the squeezing axes: at
/// r ~ 14 the Husimi function is a 1e6-aspect-ratio Gaussian whose polar
/// phase profile a uniform phi grid cannot resolve.
pub fn phase_space_grid(
    field: &DrivingField,
    rel_tail: f64,
    radial_nodes: usize,
    n_phi: usize,
) -> Result<PhaseSpaceGrid> {
    match *field {
        Coherent { alpha_abs, alpha_phase } => Ok(PhaseSpaceGrid {
            points: vec![(
                alpha_abs * alpha_phase.cos(),
                alpha_abs * alpha_phase.sin(),
                1.0,
            )],
            is_point_mass: true,
        }),
        Thermal { .. } | Fock { .. } => {
            let rg = radial_grid(field, rel_tail, radial_nodes)?;
            let angles = periodic_angles(n_phi);
            let mut points = Vec::with_capacity(rg.len() * n_phi);
            for (&si, &wi) in rg.nodes.iter().zip(&rg.weights) {
                for &phi in &angles {
                    points.push((si * phi.cos(), si * phi.sin(), wi / n_phi as f64));
                }
            }
            Ok(PhaseSpaceGrid { points, is_point_mass: false })
        }
        Bsv { r } => {
            let (a, b) = bsv_quadrature_coeffs(r);
            let sx = (1.0 / (2.0 * a)).sqrt();
            let sy = (1.0 / (2.0 * b)).sqrt();
            let span = 8.0;
            let (xs, wx) = gauss_legendre_on(radial_nodes, -span * sx, span * sx);
            let (ys, wy) = gauss_legendre_on(radial_nodes, -span * sy, span * sy);
            let mut points = Vec::with_capacity(xs.len() * ys.len());
            for (&x, &wxi) in xs.iter().zip(&wx) {
                for (&y, &wyi) in ys.iter().zip(&wy) {
                    points.push((x, y, wxi * wyi * field.density(x, y)?));
                }
            }
            Ok(PhaseSpaceGrid { points, is_point_mass: false })
        }
    }
}

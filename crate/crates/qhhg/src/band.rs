//! One-dimensional single-band crystal: dispersion, occupied-state
//! trigonometric sums and the geometric coefficients C_l and K_n that
//! enter the Floquet spectrum and the power-scaling law.

use crate::quad::csum;
use crate::{QhhgError, Result};

/// Immutable band model. `b[l-1]` is the Fourier coefficient b_l of the
/// dispersion, `occupied_q` the crystal momenta of the filled states.
#[derive(Clone, Debug)]
pub struct BandModel {
    pub a: f64,
    pub b: Vec<f64>,
    pub occupied_q: Vec<f64>,
    pub spin_degeneracy: u32,
}

impl BandModel {
    pub fn new(a: f64, b: Vec<f64>, occupied_q: Vec<f64>, spin_degeneracy: u32) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(QhhgError::Band(format!("lattice constant a = {a} must be > 0")));
        }
        if b.is_empty() || b.iter().any(|v| !v.is_finite()) {
            return Err(QhhgError::Band("need at least one finite Fourier coefficient".into()));
        }
        if spin_degeneracy == 0 {
            return Err(QhhgError::Band("spin degeneracy must be positive".into()));
        }
        let bz = std::f64::consts::PI / a;
        for &q in &occupied_q {
            if !q.is_finite() || q.abs() > bz * (1.0 + 1e-12) {
                return Err(QhhgError::Band(format!(
                    "occupied q = {q} outside first Brillouin zone (|q| <= {bz})"
                )));
            }
            let has_mirror = occupied_q.iter().any(|&p| (p + q).abs() <= 1e-12 * bz);
            if !has_mirror {
                return Err(QhhgError::Band(format!(
                    "occupied set not symmetric about 0: missing -({q})"
                )));
            }
        }
        Ok(Self { a, b, occupied_q, spin_degeneracy })
    }

    /// ZnO first conduction band along Gamma-M, five Fourier terms,
    /// with the default occupied set of `occupied_auto10`.
    pub fn zno() -> Self {
        let a = 5.32;
        Self::new(
            a,
            vec![-0.0814, -0.0024, -0.0048, -0.0003, -0.0009],
            Self::occupied_auto10(a),
            2,
        )
        .expect("ZnO defaults are valid")
    }

    /// The default occupied set {0, +-dq, +-2dq} with dq = 2*pi/(10 a):
    /// five momentum states which with spin 2 hold ten electrons.
    pub fn occupied_auto10(a: f64) -> Vec<f64> {
        let dq = 2.0 * std::f64::consts::PI / (10.0 * a);
        vec![0.0, dq, -dq, 2.0 * dq, -2.0 * dq]
    }

    pub fn l_max(&self) -> usize {
        self.b.len()
    }

    /// Band dispersion sum_l b_l cos(a l q).
    pub fn dispersion(&self, q: f64) -> f64 {
        csum(
            self.b
                .iter()
                .enumerate()
                .map(|(i, &bl)| bl * (self.a * (i + 1) as f64 * q).cos()),
        )
    }

    /// spin * sum over occupied q of cos(a l q).
    pub fn occupied_cos_sum(&self, l: u32) -> f64 {
        let s = csum(
            self.occupied_q
                .iter()
                .map(|&q| (self.a * l as f64 * q).cos()),
        );
        self.spin_degeneracy as f64 * s
    }

    /// C_l = l b_l sum_q cos(a l q), the crystal-specific Floquet weight.
    pub fn c_coefficient(&self, l: u32) -> Result<f64> {
        if l < 1 || l as usize > self.l_max() {
            return Err(QhhgError::Band(format!(
                "l = {l} outside 1..={}",
                self.l_max()
            )));
        }
        Ok(l as f64 * self.b[l as usize - 1] * self.occupied_cos_sum(l))
    }

    /// All C_l for l = 1..l_max.
    pub fn c_coefficients(&self) -> Vec<f64> {
        (1..=self.l_max() as u32)
            .map(|l| self.c_coefficient(l).expect("l in range"))
            .collect()
    }

    /// K_n = (sum_l l^n C_l)^2, evaluated as the square of a single sum.
    /// The l^n powers are taken in the log domain so n in the hundreds
    /// stays finite.
    pub fn k_constant(&self, n: u32) -> Result<f64> {
        let ln_k = self.log_k_constant(n)?;
        if ln_k == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let k = ln_k.exp();
        if !k.is_finite() {
            return Err(QhhgError::NonFinite(format!("k_constant(n={n})")));
        }
        Ok(k)
    }

    /// ln K_n; K_n grows roughly like l_max^(2n), which overflows f64
    /// well before n = 200, so callers scaling by other log-domain
    /// factors should stay in logs.
    pub fn log_k_constant(&self, n: u32) -> Result<f64> {
        assert!(n >= 1);
        let mut terms = Vec::with_capacity(self.l_max());
        for l in 1..=self.l_max() as u32 {
            let c = self.c_coefficient(l)?;
            if c == 0.0 {
                continue;
            }
            // l^n * C_l = sign(C_l) * exp(n ln l + ln |C_l|)
            let ln_mag = n as f64 * (l as f64).ln() + c.abs().ln();
            terms.push((c.signum(), ln_mag));
        }
        if terms.is_empty() {
            return Ok(f64::NEG_INFINITY);
        }
        // factor out the largest magnitude to stay finite
        let m = terms
            .iter()
            .map(|&(_, ln)| ln)
            .fold(f64::NEG_INFINITY, f64::max);
        let s = csum(terms.iter().map(|&(sg, ln)| sg * (ln - m).exp()));
        Ok(2.0 * (m + s.abs().ln()))
    }

    /// Lattice-modified coupling g~0 = 2 a g0 / sqrt(omega0).
    pub fn lattice_coupling(&self, g0: f64, omega0: f64) -> Result<f64> {
        if !(omega0 > 0.0) {
            return Err(QhhgError::Band(format!("omega0 = {omega0} must be > 0")));
        }
        assert!(g0 >= 0.0);
        Ok(2.0 * self.a * g0 / omega0.sqrt())
    }
}

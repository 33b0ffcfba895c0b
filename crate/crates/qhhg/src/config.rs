//! Strict flat `section.key = value` config parsing. Unknown keys,
//! duplicate keys and malformed lines are hard errors with line
//! numbers; defaults are applied per key where documented.

use std::collections::BTreeMap;

use crate::band::BandModel;
use crate::drive::{EnvelopeKind, PulseSpec};
use crate::phasespace::DrivingField;
use crate::{QhhgError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunKind {
    Spectrum,
    Floquet,
    Cutoff,
    Scaling,
    Efield,
    ValidateApp,
}

impl RunKind {
    pub fn name(&self) -> &'static str {
        match self {
            RunKind::Spectrum => "spectrum",
            RunKind::Floquet => "floquet",
            RunKind::Cutoff => "cutoff",
            RunKind::Scaling => "scaling",
            RunKind::Efield => "efield",
            RunKind::ValidateApp => "validate-app",
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuadSpec {
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    pub rel_tail: f64,
}

#[derive(Clone, Debug)]
pub struct ScalingSpec {
    pub harmonic: u32,
    pub min_photons: f64,
    pub max_photons: f64,
    pub points: usize,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub kind: RunKind,
    pub band: BandModel,
    pub field: Option<DrivingField>,
    /// Photon-number scale for multi-field runs (cutoff).
    pub field_mean_photons: Option<f64>,
    pub field_r: Option<f64>,
    pub field_kind: Option<String>,
    pub pulse: Option<PulseSpec>,
    pub samples_per_cycle: u32,
    pub quad: QuadSpec,
    pub n_max: u32,
    pub scaling: Option<ScalingSpec>,
    pub out_dir: Option<String>,
    /// Original text, echoed into the run manifest.
    pub echo: String,
}

/// Raw key/value view with consumption tracking for strict mode.
struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
    consumed: std::collections::BTreeSet<String>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(p) => &raw_line[..p],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(QhhgError::Config {
                    line: line_no,
                    msg: format!("expected `section.key = value`, got `{line}`"),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !key.contains('.') || key.starts_with('.') || key.ends_with('.') {
                return Err(QhhgError::Config {
                    line: line_no,
                    msg: format!("key `{key}` is not of the form section.key"),
                });
            }
            if value.is_empty() {
                return Err(QhhgError::Config {
                    line: line_no,
                    msg: format!("key `{key}` has an empty value"),
                });
            }
            if let Some((prev_line, _)) = entries.get(&key) {
                return Err(QhhgError::Config {
                    line: line_no,
                    msg: format!("duplicate key `{key}` (first set on line {prev_line})"),
                });
            }
            entries.insert(key, (line_no, value));
        }
        Ok(RawConfig { entries, consumed: Default::default() })
    }

    fn get(&mut self, key: &str) -> Option<String> {
        if self.entries.contains_key(key) {
            self.consumed.insert(key.to_string());
        }
        self.entries.get(key).map(|(_, v)| v.clone())
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map(|(l, _)| *l).unwrap_or(0)
    }

    fn require(&mut self, key: &str) -> Result<String> {
        self.get(key)
            .ok_or_else(|| QhhgError::MissingKey(key.to_string()))
    }

    fn f64_of(&mut self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<f64>().map(Some).map_err(|_| QhhgError::Config {
                line: self.line_of(key),
                msg: format!("key `{key}`: `{v}` is not a number"),
            }),
        }
    }

    fn require_f64(&mut self, key: &str) -> Result<f64> {
        self.f64_of(key)?.ok_or_else(|| QhhgError::MissingKey(key.to_string()))
    }

    fn u64_of(&mut self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<u64>().map(Some).map_err(|_| QhhgError::Config {
                line: self.line_of(key),
                msg: format!("key `{key}`: `{v}` is not a non-negative integer"),
            }),
        }
    }

    fn reject_unknown(&self) -> Result<()> {
        for (key, (line, _)) in &self.entries {
            if !self.consumed.contains(key) {
                return Err(QhhgError::Config {
                    line: *line,
                    msg: format!("unknown key `{key}`"),
                });
            }
        }
        Ok(())
    }
}

fn parse_band(raw: &mut RawConfig) -> Result<BandModel> {
    let a = raw.require_f64("band.a")?;
    let mut b = Vec::new();
    for l in 1.. {
        match raw.f64_of(&format!("band.b{l}"))? {
            Some(v) => b.push(v),
            None => break,
        }
    }
    if b.is_empty() {
        return Err(QhhgError::MissingKey("band.b1".to_string()));
    }
    let spin = raw.u64_of("band.spin")?.unwrap_or(2) as u32;
    let occupied_mode = raw
        .get("band.occupied")
        .unwrap_or_else(|| "auto10".to_string());
    let occupied = match occupied_mode.as_str() {
        "auto10" => crate::band::BandModel::occupied_auto10(a),
        "explicit" => {
            let line = raw.line_of("band.q_list");
            let list = raw.require("band.q_list")?;
            let mut qs = Vec::new();
            for part in list.split(',') {
                let q: f64 = part.trim().parse().map_err(|_| QhhgError::Config {
                    line,
                    msg: format!("band.q_list entry `{}` is not a number", part.trim()),
                })?;
                qs.push(q);
            }
            qs
        }
        other => {
            return Err(QhhgError::Invalid(format!(
                "band.occupied = `{other}` (expected auto10 or explicit)"
            )))
        }
    };
    BandModel::new(a, b, occupied, spin)
}

fn parse_field(raw: &mut RawConfig) -> Result<DrivingField> {
    let kind = raw.require("field.kind")?;
    match kind.as_str() {
        "coherent" => {
            if let Some(abs) = raw.f64_of("field.alpha_abs")? {
                let phase = raw.f64_of("field.alpha_phase")?.unwrap_or(0.0);
                DrivingField::coherent(abs, phase)
            } else {
                let m = raw.require_f64("field.mean_photons")?;
                let phase = raw.f64_of("field.alpha_phase")?.unwrap_or(0.0);
                DrivingField::coherent(m.sqrt(), phase)
            }
        }
        "thermal" => DrivingField::thermal(raw.require_f64("field.mean_photons")?),
        "fock" => {
            if let Some(n) = raw.u64_of("field.n")? {
                DrivingField::fock(n)
            } else {
                let m = raw.require_f64("field.mean_photons")?;
                DrivingField::fock(m.round() as u64)
            }
        }
        "bsv" => {
            if let Some(r) = raw.f64_of("field.r")? {
                DrivingField::bsv(r)
            } else {
                let m = raw.require_f64("field.mean_photons")?;
                DrivingField::bsv(m.sqrt().asinh())
            }
        }
        other => Err(QhhgError::Field(format!("unknown field.kind `{other}`"))),
    }
}

fn parse_pulse(raw: &mut RawConfig) -> Result<PulseSpec> {
    let omega0 = raw.require_f64("pulse.omega0")?;
    let g0 = raw.require_f64("pulse.g0")?;
    let flat = raw.u64_of("pulse.flat_cycles")?.unwrap_or(10) as u32;
    let ramp = raw.u64_of("pulse.ramp_cycles")?.unwrap_or(3) as u32;
    let env = match raw
        .get("pulse.envelope")
        .unwrap_or_else(|| "flat_top_sin2".to_string())
        .as_str()
    {
        "flat_top_sin2" => EnvelopeKind::FlatTopSin2,
        "none" => EnvelopeKind::None,
        other => {
            return Err(QhhgError::Invalid(format!(
                "pulse.envelope = `{other}` (expected flat_top_sin2 or none)"
            )))
        }
    };
    PulseSpec::new(omega0, g0, flat, ramp, env)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut raw = RawConfig::parse(text)?;
    let kind = match raw.require("run.kind")?.as_str() {
        "spectrum" => RunKind::Spectrum,
        "floquet" => RunKind::Floquet,
        "cutoff" => RunKind::Cutoff,
        "scaling" => RunKind::Scaling,
        "efield" => RunKind::Efield,
        "validate-app" => RunKind::ValidateApp,
        other => {
            return Err(QhhgError::Invalid(format!(
                "run.kind = `{other}` (expected spectrum | floquet | cutoff | scaling | efield | validate-app)"
            )))
        }
    };
    let band = parse_band(&mut raw)?;
    let quad = QuadSpec {
        radial_nodes: raw.u64_of("quad.radial_nodes")?.unwrap_or(400) as usize,
        angular_nodes: raw.u64_of("quad.angular_nodes")?.unwrap_or(256) as usize,
        rel_tail: raw.f64_of("quad.rel_tail")?.unwrap_or(1e-12),
    };
    let samples_per_cycle = raw.u64_of("grid.samples_per_cycle")?.unwrap_or(512) as u32;
    let n_max = raw.u64_of("spectrum.n_max")?.unwrap_or(71) as u32;
    let out_dir = raw.get("out.dir");

    let mut field = None;
    let mut field_kind = None;
    let mut field_mean_photons = None;
    let mut field_r = None;
    let mut pulse = None;
    let mut scaling = None;
    match kind {
        RunKind::Spectrum | RunKind::Efield => {
            field = Some(parse_field(&mut raw)?);
            pulse = Some(parse_pulse(&mut raw)?);
        }
        RunKind::Floquet => {
            field = Some(parse_field(&mut raw)?);
            pulse = Some(parse_pulse(&mut raw)?);
        }
        RunKind::Cutoff => {
            field_mean_photons = Some(raw.require_f64("field.mean_photons")?);
            field_r = raw.f64_of("field.r")?;
            pulse = Some(parse_pulse(&mut raw)?);
        }
        RunKind::Scaling => {
            field_kind = Some(raw.require("field.kind")?.to_string());
            pulse = Some(parse_pulse(&mut raw)?);
            scaling = Some(ScalingSpec {
                harmonic: raw.u64_of("scaling.harmonic")?.unwrap_or(5) as u32,
                min_photons: raw.require_f64("scaling.min_photons")?,
                max_photons: raw.require_f64("scaling.max_photons")?,
                points: raw.u64_of("scaling.points")?.unwrap_or(25) as usize,
            });
        }
        RunKind::ValidateApp => {
            field = Some(parse_field(&mut raw)?);
        }
    }
    raw.reject_unknown()?;
    if let Some(s) = &scaling {
        if !(s.min_photons > 0.0 && s.max_photons > s.min_photons && s.points >= 2) {
            return Err(QhhgError::Invalid(
                "scaling sweep needs 0 < min_photons < max_photons and points >= 2".into(),
            ));
        }
        if s.harmonic % 2 == 0 {
            return Err(QhhgError::Invalid("scaling.harmonic must be odd".into()));
        }
    }
    Ok(RunConfig {
        kind,
        band,
        field,
        field_mean_photons,
        field_r,
        field_kind,
        pulse,
        samples_per_cycle,
        quad,
        n_max,
        scaling,
        out_dir,
        echo: text.to_string(),
    })
}

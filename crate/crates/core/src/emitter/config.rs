//! Flat `key = value` run configuration with unit-suffixed keys.

use std::collections::BTreeMap;

use super::params::{
    pulsed_excitation_probability, pulsed_reference_power, DetectorModel, Drive, EmitterParams, SimConfig,
};
use crate::error::{Error, Result};
use crate::units::{FS, MW, NS, PS};

/// Everything needed to simulate one acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSetup {
    pub emitter: EmitterParams,
    pub sim: SimConfig,
    pub detector: DetectorModel,
    /// Number of detector channels (1, or 2 for a 50:50 splitter).
    pub detectors: u8,
}

const KEYS: &[&str] = &[
    "mode",
    "duration_s",
    "seed",
    "segment_s",
    "t1_ns",
    "t2_star_fs",
    "pump_rate_hz",
    "power_over_psat",
    "power_mw",
    "psat_mw",
    "rep_rate_mhz",
    "pulse_width_ps",
    "excitation_probability",
    "shelve_rate_hz",
    "deshelve_rate_hz",
    "efficiency",
    "jitter_fwhm_ps",
    "dead_time_ns",
    "dark_count_rate_hz",
    "resolution_ps",
    "channels",
];

/// Parsed `key = value` pairs with the line each came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: i + 1,
                message: format!("expected key = value, got `{line}`"),
            })?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::Config {
                    line: i + 1,
                    message: format!("unknown key `{k}`"),
                });
            }
            if entries.insert(k.clone(), (v, i + 1)).is_some() {
                return Err(Error::Config {
                    line: i + 1,
                    message: format!("duplicate key `{k}`"),
                });
            }
        }
        Ok(ConfigMap { entries })
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.1)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.0.as_str())
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::Config {
                        line: self.line(key),
                        message: format!("`{key}` must be a number, got `{v}`"),
                    })
            })
            .transpose()
    }

    fn integer(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>().map_err(|_| Error::Config {
                    line: self.line(key),
                    message: format!("`{key}` must be a non-negative integer, got `{v}`"),
                })
            })
            .transpose()
    }

    /// The pairs as written, for manifests.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        self.entries.iter().map(|(k, v)| (k.clone(), v.0.clone())).collect()
    }
}

fn config_err(map: &ConfigMap, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line: map.line(key),
        message: message.into(),
    }
}

impl SimSetup {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_map(&ConfigMap::parse(text)?)
    }

    /// Builds and validates a setup. Unspecified emitter values default to the
    /// reference emitter.
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let duration = map
            .number("duration_s")?
            .ok_or_else(|| config_err(map, "duration_s", "`duration_s` is required"))?;
        if !(duration > 0.0) {
            return Err(config_err(
                map,
                "duration_s",
                format!("duration_s must be positive, got {duration}"),
            ));
        }
        let seed = map.integer("seed")?.unwrap_or(0);
        let segment_duration = map.number("segment_s")?;
        let t1 = map.number("t1_ns")?.unwrap_or(2.54) * NS;
        let t2_star = map.number("t2_star_fs")?.unwrap_or(382.0) * FS;
        let power_ratio = match (
            map.number("power_over_psat")?,
            map.number("power_mw")?,
            map.number("psat_mw")?,
        ) {
            (Some(s), _, _) => Some(s),
            (None, Some(p), Some(ps)) if ps > 0.0 => Some(p * MW / (ps * MW)),
            (None, Some(_), _) => return Err(config_err(map, "power_mw", "power_mw needs a positive psat_mw")),
            _ => None,
        };
        let mode = map.get("mode").unwrap_or("cw");
        let drive = match mode {
            "cw" => {
                let pump_rate = match (map.number("pump_rate_hz")?, power_ratio) {
                    (Some(r), _) => r,
                    (None, Some(s)) => s / t1,
                    (None, None) => {
                        return Err(config_err(
                            map,
                            "mode",
                            "CW mode needs pump_rate_hz, power_over_psat or power_mw with psat_mw",
                        ))
                    }
                };
                Drive::Cw { pump_rate }
            }
            "pulsed" => {
                let excitation_probability = match (map.number("excitation_probability")?, power_ratio) {
                    (Some(p), _) => p,
                    (None, Some(s)) => pulsed_excitation_probability(s, pulsed_reference_power(1.0))?,
                    (None, None) => {
                        return Err(config_err(
                            map,
                            "mode",
                            "pulsed mode needs excitation_probability, power_over_psat or power_mw with psat_mw",
                        ))
                    }
                };
                Drive::Pulsed {
                    rep_rate: map.number("rep_rate_mhz")?.unwrap_or(40.0) * 1e6,
                    excitation_probability,
                    pulse_width: map.number("pulse_width_ps")?.unwrap_or(0.0) * PS,
                }
            }
            other => {
                return Err(config_err(
                    map,
                    "mode",
                    format!("mode must be cw or pulsed, got `{other}`"),
                ))
            }
        };
        let emitter = EmitterParams {
            t1,
            t2_star,
            drive,
            shelve_rate: map.number("shelve_rate_hz")?.unwrap_or(0.0),
            deshelve_rate: map.number("deshelve_rate_hz")?.unwrap_or(0.0),
            spectrum: None,
        };
        let detector = DetectorModel {
            efficiency: map.number("efficiency")?.unwrap_or(1.0),
            jitter_fwhm: map.number("jitter_fwhm_ps")?.unwrap_or(0.0) * PS,
            dead_time: map.number("dead_time_ns")?.unwrap_or(0.0) * NS,
            dark_count_rate: map.number("dark_count_rate_hz")?.unwrap_or(0.0),
            resolution_ps: map.integer("resolution_ps")?.unwrap_or(1),
        };
        let detectors = map.integer("channels")?.unwrap_or(2);
        if !(1..=2).contains(&detectors) {
            return Err(config_err(
                map,
                "channels",
                format!("channels must be 1 or 2, got {detectors}"),
            ));
        }
        let sim = SimConfig {
            duration,
            seed,
            segment_duration,
        };
        let wrap = |e: Error| match e {
            Error::InvalidParameter(m) => Error::Config { line: 0, message: m },
            other => other,
        };
        emitter.validate().map_err(wrap)?;
        detector.validate().map_err(wrap)?;
        sim.validate().map_err(wrap)?;
        Ok(SimSetup {
            emitter,
            sim,
            detector,
            detectors: detectors as u8,
        })
    }
}

//! Photoluminescence spectra: parametric (sum of Lorentzians) and sampled forms.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Physical origin of a spectral component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ComponentKind {
    #[serde(rename = "ZPL")]
    Zpl,
    #[serde(rename = "LO_phonon")]
    LoPhonon,
    #[serde(rename = "LE_phonon")]
    LePhonon,
    #[serde(rename = "other")]
    Other,
}

impl ComponentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ComponentKind::Zpl => "ZPL",
            ComponentKind::LoPhonon => "LO_phonon",
            ComponentKind::LePhonon => "LE_phonon",
            ComponentKind::Other => "other",
        }
    }
}

/// One area-normalised Lorentzian line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianComponent {
    #[serde(rename = "center_eV")]
    pub center_ev: f64,
    #[serde(rename = "fwhm_eV")]
    pub fwhm_ev: f64,
    pub area: f64,
    pub kind: ComponentKind,
}

impl LorentzianComponent {
    pub fn new(center_ev: f64, fwhm_ev: f64, area: f64, kind: ComponentKind) -> Result<Self> {
        let c = LorentzianComponent {
            center_ev,
            fwhm_ev,
            area,
            kind,
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if !(self.center_ev > 0.0 && self.center_ev.is_finite()) {
            return Err(invalid(format!("component center must be > 0, got {}", self.center_ev)));
        }
        if !(self.fwhm_ev > 0.0 && self.fwhm_ev.is_finite()) {
            return Err(invalid(format!("component fwhm must be > 0, got {}", self.fwhm_ev)));
        }
        if !(self.area >= 0.0 && self.area.is_finite()) {
            return Err(invalid(format!("component area must be >= 0, got {}", self.area)));
        }
        Ok(())
    }

    /// Spectral density (eV⁻¹ per unit area) at `energy_ev`.
    pub fn density(&self, energy_ev: f64) -> f64 {
        let half = 0.5 * self.fwhm_ev;
        let d = energy_ev - self.center_ev;
        self.area * (self.fwhm_ev / (2.0 * PI)) / (d * d + half * half)
    }

    pub fn peak_height(&self) -> f64 {
        2.0 * self.area / (PI * self.fwhm_ev)
    }

    /// Area of this component falling inside `[lo, hi]`.
    pub fn area_between(&self, lo: f64, hi: f64) -> f64 {
        let half = 0.5 * self.fwhm_ev;
        let upper = ((hi - self.center_ev) / half).atan();
        let lower = ((lo - self.center_ev) / half).atan();
        self.area * (upper - lower) / PI
    }
}

/// Sum of Lorentzian components. This is the source of truth for areas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LorentzianComponent>", into = "Vec<LorentzianComponent>")]
pub struct ParametricSpectrum {
    components: Vec<LorentzianComponent>,
}

impl TryFrom<Vec<LorentzianComponent>> for ParametricSpectrum {
    type Error = Error;

    fn try_from(components: Vec<LorentzianComponent>) -> Result<Self> {
        ParametricSpectrum::new(components)
    }
}

impl From<ParametricSpectrum> for Vec<LorentzianComponent> {
    fn from(s: ParametricSpectrum) -> Self {
        s.components
    }
}

impl ParametricSpectrum {
    pub fn new(components: Vec<LorentzianComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        for c in &components {
            c.validate()?;
        }
        Ok(ParametricSpectrum { components })
    }

    pub fn components(&self) -> &[LorentzianComponent] {
        &self.components
    }

    pub fn density(&self, energy_ev: f64) -> f64 {
        self.components.iter().map(|c| c.density(energy_ev)).sum()
    }

    pub fn total_area(&self) -> f64 {
        self.components.iter().map(|c| c.area).sum()
    }

    /// Fraction of the in-window intensity contributed by each component kind.
    pub fn window_fractions(&self, filter: &FilterSpec) -> Vec<(ComponentKind, f64)> {
        let lo = filter.low_edge_ev.unwrap_or(f64::NEG_INFINITY);
        let hi = filter.high_edge_ev.unwrap_or(f64::INFINITY);
        let mut by_kind: Vec<(ComponentKind, f64)> = Vec::new();
        for c in &self.components {
            let a = c.area_between(lo, hi);
            match by_kind.iter_mut().find(|(k, _)| *k == c.kind) {
                Some(entry) => entry.1 += a,
                None => by_kind.push((c.kind, a)),
            }
        }
        let total: f64 = by_kind.iter().map(|(_, a)| a).sum();
        if total > 0.0 {
            for entry in &mut by_kind {
                entry.1 /= total;
            }
        }
        by_kind.sort_by_key(|(k, _)| *k);
        by_kind
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.components)?)
    }
}

/// A spectrum sampled on a strictly increasing energy grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSpectrum {
    energy_ev: Vec<f64>,
    counts: Vec<f64>,
}

impl SampledSpectrum {
    pub fn new(energy_ev: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        if energy_ev.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        if energy_ev.len() != counts.len() {
            return Err(invalid(format!(
                "grid has {} points but counts has {}",
                energy_ev.len(),
                counts.len()
            )));
        }
        check_strictly_increasing(&energy_ev)?;
        if let Some(bad) = counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(invalid(format!("counts must be finite and non-negative, got {bad}")));
        }
        Ok(SampledSpectrum { energy_ev, counts })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energy_ev
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.energy_ev.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energy_ev.is_empty()
    }

    /// Trapezoidal integral of counts over energy.
    pub fn integral(&self) -> f64 {
        self.energy_ev
            .windows(2)
            .zip(self.counts.windows(2))
            .map(|(e, c)| 0.5 * (c[0] + c[1]) * (e[1] - e[0]))
            .sum()
    }

    /// Energy of the largest sample.
    pub fn peak_energy(&self) -> f64 {
        let (idx, _) =
            self.counts.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |best, (i, &c)| if c > best.1 { (i, c) } else { best },
            );
        self.energy_ev[idx]
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut energy = Vec::new();
        let mut counts = Vec::new();
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty spectrum CSV".into()))??;
        if header.trim() != "energy_eV,counts" {
            return Err(Error::Format(format!(
                "expected header `energy_eV,counts`, got `{}`",
                header.trim()
            )));
        }
        for (n, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (e, c) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("line {}: expected two fields", n + 2)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {}: bad number `{}`", n + 2, s.trim())))
            };
            energy.push(parse(e)?);
            counts.push(parse(c)?);
        }
        SampledSpectrum::new(energy, counts)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "energy_eV,counts")?;
        for (e, c) in self.energy_ev.iter().zip(&self.counts) {
            writeln!(w, "{e},{c}")?;
        }
        Ok(())
    }
}

/// Either representation of a spectrum.
#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum {
    Parametric(ParametricSpectrum),
    Sampled(SampledSpectrum),
}

/// Ideal rectangular band-pass in energy. `None` edges are unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterSpec {
    pub low_edge_ev: Option<f64>,
    pub high_edge_ev: Option<f64>,
}

impl FilterSpec {
    pub fn new(low_edge_ev: Option<f64>, high_edge_ev: Option<f64>) -> Result<Self> {
        if let (Some(lo), Some(hi)) = (low_edge_ev, high_edge_ev) {
            if !(lo < hi) {
                return Err(invalid(format!("filter low edge {lo} must be below high edge {hi}")));
            }
        }
        Ok(FilterSpec {
            low_edge_ev,
            high_edge_ev,
        })
    }

    pub fn unbounded() -> Self {
        FilterSpec::default()
    }

    /// Symmetric window of half-width `half_width_ev` around `center_ev`.
    pub fn window(center_ev: f64, half_width_ev: f64) -> Result<Self> {
        FilterSpec::new(Some(center_ev - half_width_ev), Some(center_ev + half_width_ev))
    }

    pub fn passes(&self, energy_ev: f64) -> bool {
        self.low_edge_ev.is_none_or(|lo| energy_ev >= lo) && self.high_edge_ev.is_none_or(|hi| energy_ev <= hi)
    }
}

pub(crate) fn check_strictly_increasing(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::UnsortedGrid);
    }
    Ok(())
}

/// Samples a parametric spectrum on `grid`.
pub fn evaluate_spectrum(spec: &ParametricSpectrum, grid: &[f64]) -> Result<SampledSpectrum> {
    if grid.is_empty() {
        return Err(invalid("evaluation grid is empty"));
    }
    check_strictly_increasing(grid)?;
    let counts = grid.iter().map(|&e| spec.density(e)).collect();
    SampledSpectrum::new(grid.to_vec(), counts)
}

/// Debye-Waller factor: zero-phonon-line area over total area.
pub fn dw_factor(spec: &ParametricSpectrum) -> Result<f64> {
    let mut zpl = 0.0;
    let mut total = 0.0;
    let mut has_zpl = false;
    for c in spec.components() {
        total += c.area;
        if c.kind == ComponentKind::Zpl {
            zpl += c.area;
            has_zpl = true;
        }
    }
    if !has_zpl {
        return Err(invalid("spectrum has no ZPL component"));
    }
    if total <= 0.0 {
        return Err(Error::ZeroArea);
    }
    Ok(zpl / total)
}

/// Zeroes every sample outside the filter pass band. The grid is unchanged.
pub fn apply_filter(spec: &SampledSpectrum, filter: &FilterSpec) -> SampledSpectrum {
    let counts = spec
        .energy_ev
        .iter()
        .zip(&spec.counts)
        .map(|(&e, &c)| if filter.passes(e) { c } else { 0.0 })
        .collect();
    SampledSpectrum {
        energy_ev: spec.energy_ev.clone(),
        counts,
    }
}

/// Uniform grid of `n` points over `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "grid needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

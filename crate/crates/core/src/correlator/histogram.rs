use std::io::Write;

use crate::error::Result;

/// Binned delays with explicit edges (seconds).
///
/// Linear correlation histograms have uniform bins centred on multiples of the
/// bin width. Multi-resolution histograms are folded onto `|τ|` and have
/// widening bins; `folded` marks them so normalisation accounts for both signs.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Number of start events (tags on the first channel).
    pub total_starts: u64,
    /// Number of stop events (tags on the second channel).
    pub total_stops: u64,
    pub folded: bool,
}

impl Histogram {
    pub fn uniform(tau_min: f64, bin_width: f64, counts: Vec<u64>) -> Self {
        let edges = (0..=counts.len()).map(|k| tau_min + k as f64 * bin_width).collect();
        Histogram {
            edges,
            counts,
            total_starts: 0,
            total_stops: 0,
            folded: false,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Width of the first bin; equal to every bin's width for linear histograms.
    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn range(&self) -> (f64, f64) {
        (self.edges[0], *self.edges.last().unwrap())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `tau_s,counts` rows keyed by bin centre.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "tau_s,counts")?;
        for (c, n) in self.centers().iter().zip(&self.counts) {
            writeln!(w, "{c:e},{n}")?;
        }
        Ok(())
    }
}

/// A histogram divided by its uncorrelated coincidence level.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedHistogram {
    pub tau: Vec<f64>,
    pub g2: Vec<f64>,
    /// Poisson 1σ error per bin, with a one-count floor for empty bins.
    pub sigma: Vec<f64>,
}

impl NormalizedHistogram {
    /// Value of the bin whose centre is closest to zero delay.
    pub fn at_zero(&self) -> f64 {
        let k = self
            .tau
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.g2.get(k).copied().unwrap_or(f64::NAN)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "tau_s,g2")?;
        for (t, g) in self.tau.iter().zip(&self.g2) {
            writeln!(w, "{t:e},{g}")?;
        }
        Ok(())
    }
}

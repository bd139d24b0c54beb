//! Full cross-correlation of two tag channels by a sliding two-pointer sweep.

use rayon::prelude::*;

use super::histogram::Histogram;
use crate::error::{invalid, Result};
use crate::tags::TagStream;

const MIN_CHUNK: usize = 1 << 15;

fn ticks_of(len_s: f64, resolution: f64) -> u64 {
    ((len_s / resolution).round() as u64).max(1)
}

/// Symmetric linear binning: bin `k ∈ [−n, n]` collects delays that round to
/// `k·width` (halves away from zero), with `n = floor(window / width)`.
#[derive(Debug, Clone, Copy)]
struct LinearBins {
    width: u64,
    half: i64,
    reach: u64,
}

impl LinearBins {
    fn new(width: u64, window: u64) -> Self {
        let half = (window / width) as i64;
        // Largest |d| whose rounded index is still ≤ half.
        let reach = (2 * width * half as u64 + width - 1) / 2;
        LinearBins { width, half, reach }
    }

    #[inline]
    fn index(&self, d: i64) -> Option<usize> {
        let k = ((2 * d.unsigned_abs() + self.width) / (2 * self.width)) as i64;
        if k > self.half {
            return None;
        }
        Some((if d < 0 { self.half - k } else { self.half + k }) as usize)
    }

    fn len(&self) -> usize {
        (2 * self.half + 1) as usize
    }
}

/// Linear bins of width `b` on `[0, M·b)`, then octave bands `j = 1..=J`, each
/// with `M/2` bins of width `b·2^j` covering `[M·b·2^{j−1}, M·b·2^j)`.
#[derive(Debug, Clone, Copy)]
struct OctaveBins {
    width: u64,
    linear: u64,
    octaves: u32,
    reach: u64,
}

impl OctaveBins {
    fn new(width: u64, linear: u64, octaves: u32) -> Self {
        OctaveBins {
            width,
            linear,
            octaves,
            reach: width * linear * (1u64 << octaves) - 1,
        }
    }

    #[inline]
    fn index(&self, d: i64) -> Option<usize> {
        let d = d.unsigned_abs();
        let q = d / self.width;
        if q < self.linear {
            return Some(q as usize);
        }
        let band = 64 - (q / self.linear).leading_zeros();
        if band > self.octaves {
            return None;
        }
        let band_start = (self.width * self.linear) << (band - 1);
        let bin = (d - band_start) / (self.width << band);
        Some((self.linear + (band as u64 - 1) * (self.linear / 2) + bin) as usize)
    }

    fn len(&self) -> usize {
        (self.linear + self.octaves as u64 * self.linear / 2) as usize
    }

    fn edges(&self) -> Vec<u64> {
        let mut e: Vec<u64> = (0..=self.linear).map(|k| k * self.width).collect();
        for band in 1..=self.octaves {
            let start = (self.width * self.linear) << (band - 1);
            for k in 1..=self.linear / 2 {
                e.push(start + k * (self.width << band));
            }
        }
        e
    }
}

fn sweep<F: Fn(i64) -> Option<usize> + Sync>(
    a: &[u64],
    b: &[u64],
    same: bool,
    reach: u64,
    bins: usize,
    index: F,
) -> Vec<u64> {
    let chunk = (a.len() / (4 * rayon::current_num_threads()).max(1)).max(MIN_CHUNK);
    let partial = |offset: usize, starts: &[u64]| -> Vec<u64> {
        let mut counts = vec![0u64; bins];
        let Some(&first) = starts.first() else { return counts };
        let mut lo = b.partition_point(|&t| t + reach < first);
        for (i, &ta) in starts.iter().enumerate() {
            while lo < b.len() && b[lo] + reach < ta {
                lo += 1;
            }
            let mut j = lo;
            while j < b.len() && b[j] <= ta + reach {
                if !(same && j == offset + i) {
                    if let Some(k) = index(b[j] as i64 - ta as i64) {
                        counts[k] += 1;
                    }
                }
                j += 1;
            }
        }
        counts
    };
    if a.len() <= chunk {
        return partial(0, a);
    }
    a.par_chunks(chunk)
        .enumerate()
        .map(|(c, starts)| partial(c * chunk, starts))
        .reduce(
            || vec![0u64; bins],
            |mut x, y| {
                x.iter_mut().zip(y).for_each(|(p, q)| *p += q);
                x
            },
        )
}

fn channel_pair(stream: &TagStream, ch_a: u8, ch_b: u8) -> Result<(Vec<u64>, Vec<u64>)> {
    stream.check_channel(ch_a)?;
    stream.check_channel(ch_b)?;
    let a = stream.channel_ticks(ch_a);
    let b = if ch_a == ch_b {
        a.clone()
    } else {
        stream.channel_ticks(ch_b)
    };
    Ok((a, b))
}

/// Histogram of every delay `t_b − t_a` within the window, in bins of
/// `bin_width` centred on multiples of it. Self-pairs are skipped when the
/// two channels coincide, which makes the autocorrelation exactly symmetric.
/// Bin width and window are rounded to whole ticks.
pub fn correlate(stream: &TagStream, ch_a: u8, ch_b: u8, bin_width: f64, window: f64) -> Result<Histogram> {
    if !(bin_width > 0.0) || !(window > 0.0) {
        return Err(invalid("bin width and window must be positive"));
    }
    let res = stream.resolution();
    let (a, b) = channel_pair(stream, ch_a, ch_b)?;
    let bins = LinearBins::new(ticks_of(bin_width, res), ticks_of(window, res));
    let counts = sweep(&a, &b, ch_a == ch_b, bins.reach, bins.len(), |d| bins.index(d));
    let width = bins.width as f64 * res;
    let mut h = Histogram::uniform(-(bins.half as f64 + 0.5) * width, width, counts);
    h.total_starts = a.len() as u64;
    h.total_stops = b.len() as u64;
    Ok(h)
}

/// Correlation folded onto `|τ|` with `linear_bins` bins of `bin_width`
/// followed by `octaves` bands of doubling width, so nanosecond antibunching
/// and microsecond bunching share one histogram. `linear_bins` must be even.
pub fn correlate_multires(
    stream: &TagStream,
    ch_a: u8,
    ch_b: u8,
    bin_width: f64,
    linear_bins: usize,
    octaves: u32,
) -> Result<Histogram> {
    if !(bin_width > 0.0) || linear_bins < 2 || !linear_bins.is_multiple_of(2) || octaves > 40 {
        return Err(invalid(
            "need a positive bin width, an even number (≥ 2) of linear bins and ≤ 40 octaves",
        ));
    }
    let res = stream.resolution();
    let (a, b) = channel_pair(stream, ch_a, ch_b)?;
    let bins = OctaveBins::new(ticks_of(bin_width, res), linear_bins as u64, octaves);
    let counts = sweep(&a, &b, ch_a == ch_b, bins.reach, bins.len(), |d| bins.index(d));
    let edges = bins.edges().into_iter().map(|e| e as f64 * res).collect();
    Ok(Histogram {
        edges,
        counts,
        total_starts: a.len() as u64,
        total_stops: b.len() as u64,
        folded: true,
    })
}

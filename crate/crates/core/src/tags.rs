//! Time-tag streams and the PTAG binary format.
//!
//! Layout (little-endian): magic `PTAG`, `u16` version (1), `u64` resolution in
//! picoseconds, `u8` channel count, then 12-byte records of
//! `u8 channel, [u8; 3] reserved (zero), u64 ticks`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const PTAG_MAGIC: &[u8; 4] = b"PTAG";
pub const PTAG_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 8 + 1;
const RECORD_LEN: usize = 12;

/// One detection event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tag {
    pub ticks: u64,
    pub channel: u8,
}

/// Time-ordered detection events. Stored column-wise for fast sweeps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagStream {
    resolution_ps: u64,
    channel_count: u8,
    ticks: Vec<u64>,
    channels: Vec<u8>,
}

impl TagStream {
    pub fn empty(resolution_ps: u64, channel_count: u8) -> Result<Self> {
        Self::from_columns(resolution_ps, channel_count, Vec::new(), Vec::new())
    }

    /// Builds a stream from parallel columns, checking order and channel range.
    pub fn from_columns(resolution_ps: u64, channel_count: u8, ticks: Vec<u64>, channels: Vec<u8>) -> Result<Self> {
        if resolution_ps == 0 {
            return Err(Error::Format("tick resolution must be at least 1 ps".into()));
        }
        if ticks.len() != channels.len() {
            return Err(Error::Format("tick and channel columns differ in length".into()));
        }
        if let Some(i) = ticks.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Format(format!("timestamps decrease at record {}", i + 1)));
        }
        if let Some(&c) = channels.iter().find(|&&c| c >= channel_count) {
            return Err(Error::Format(format!(
                "channel {c} out of range for {channel_count} channels"
            )));
        }
        Ok(TagStream {
            resolution_ps,
            channel_count,
            ticks,
            channels,
        })
    }

    /// Sorts arbitrary tags (by time, then channel) into a stream.
    pub fn from_unsorted(resolution_ps: u64, channel_count: u8, mut tags: Vec<Tag>) -> Result<Self> {
        tags.sort_unstable();
        let (ticks, channels) = tags.into_iter().map(|t| (t.ticks, t.channel)).unzip();
        Self::from_columns(resolution_ps, channel_count, ticks, channels)
    }

    pub fn resolution_ps(&self) -> u64 {
        self.resolution_ps
    }

    /// Seconds per tick.
    pub fn resolution(&self) -> f64 {
        self.resolution_ps as f64 * 1e-12
    }

    pub fn channel_count(&self) -> u8 {
        self.channel_count
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn ticks(&self) -> &[u64] {
        &self.ticks
    }

    pub fn channels(&self) -> &[u8] {
        &self.channels
    }

    pub fn iter(&self) -> impl Iterator<Item = Tag> + '_ {
        self.ticks
            .iter()
            .zip(&self.channels)
            .map(|(&ticks, &channel)| Tag { ticks, channel })
    }

    pub fn check_channel(&self, channel: u8) -> Result<()> {
        if channel < self.channel_count {
            Ok(())
        } else {
            Err(Error::UnknownChannel(channel))
        }
    }

    /// Timestamps (ticks) of one channel.
    pub fn channel_ticks(&self, channel: u8) -> Vec<u64> {
        self.iter().filter(|t| t.channel == channel).map(|t| t.ticks).collect()
    }

    pub fn count(&self, channel: u8) -> usize {
        self.channels.iter().filter(|&&c| c == channel).count()
    }

    /// Time spanned from zero to the last tag, in seconds.
    pub fn span(&self) -> f64 {
        self.ticks.last().map_or(0.0, |&t| t as f64 * self.resolution())
    }

    /// Merges two streams with equal resolution; the channel count is the larger one.
    pub fn merge(&self, other: &TagStream) -> Result<TagStream> {
        if self.resolution_ps != other.resolution_ps {
            return Err(Error::Format("cannot merge streams with different resolutions".into()));
        }
        let n = self.len() + other.len();
        let mut ticks = Vec::with_capacity(n);
        let mut channels = Vec::with_capacity(n);
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let take_self = j >= other.len()
                || (i < self.len() && (self.ticks[i], self.channels[i]) <= (other.ticks[j], other.channels[j]));
            if take_self {
                ticks.push(self.ticks[i]);
                channels.push(self.channels[i]);
                i += 1;
            } else {
                ticks.push(other.ticks[j]);
                channels.push(other.channels[j]);
                j += 1;
            }
        }
        Self::from_columns(
            self.resolution_ps,
            self.channel_count.max(other.channel_count),
            ticks,
            channels,
        )
    }

    pub fn write_ptag<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(PTAG_MAGIC)?;
        w.write_all(&PTAG_VERSION.to_le_bytes())?;
        w.write_all(&self.resolution_ps.to_le_bytes())?;
        w.write_all(&[self.channel_count])?;
        let mut rec = [0u8; RECORD_LEN];
        for t in self.iter() {
            rec[0] = t.channel;
            rec[4..].copy_from_slice(&t.ticks.to_le_bytes());
            w.write_all(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_ptag<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|_| Error::Format("truncated PTAG header".into()))?;
        if &header[0..4] != PTAG_MAGIC {
            return Err(Error::Format("missing PTAG magic".into()));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != PTAG_VERSION {
            return Err(Error::Format(format!("unsupported PTAG version {version}")));
        }
        let resolution_ps = u64::from_le_bytes(header[6..14].try_into().unwrap());
        let channel_count = header[14];
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() % RECORD_LEN != 0 {
            return Err(Error::Format(format!(
                "trailing {} bytes after last record",
                body.len() % RECORD_LEN
            )));
        }
        let n = body.len() / RECORD_LEN;
        let mut ticks = Vec::with_capacity(n);
        let mut channels = Vec::with_capacity(n);
        for rec in body.chunks_exact(RECORD_LEN) {
            channels.push(rec[0]);
            ticks.push(u64::from_le_bytes(rec[4..].try_into().unwrap()));
        }
        Self::from_columns(resolution_ps, channel_count, ticks, channels)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_ptag(File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_ptag(File::open(path)?)
    }
}

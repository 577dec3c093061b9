//! BPSK over AWGN: SNR conversion, all-zeros transmission, LLRs, and the
//! flat binary batch dump.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::tanner::CodeParams;

/// `Eb/N0` in dB to noise variance: `N / (2 K 10^(dB/10))`.
pub fn snr_to_sigma2(ebn0_db: f64, code: &CodeParams) -> Result<f64> {
    if !ebn0_db.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "non-finite Eb/N0 {ebn0_db}"
        )));
    }
    if code.k == 0 {
        return Err(Error::InvalidArgument("code has K = 0".into()));
    }
    Ok(code.n as f64 / (2.0 * code.k as f64 * 10f64.powf(ebn0_db / 10.0)))
}

/// Inverse of [`snr_to_sigma2`].
pub fn sigma2_to_snr_db(sigma2: f64, code: &CodeParams) -> f64 {
    10.0 * (code.n as f64 / (2.0 * code.k as f64 * sigma2)).log10()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnrPoint {
    pub ebn0_db: f64,
    pub sigma2: f64,
}

impl SnrPoint {
    pub fn new(ebn0_db: f64, code: &CodeParams) -> Result<Self> {
        Ok(Self {
            ebn0_db,
            sigma2: snr_to_sigma2(ebn0_db, code)?,
        })
    }

    /// Mean of the channel LLR for a transmitted zero, `2 / sigma^2`.
    pub fn llr_mean(&self) -> f64 {
        2.0 / self.sigma2
    }
}

/// Row-major matrix of LLR frames with their transmitted bits.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelBatch {
    pub batch_size: usize,
    pub n: usize,
    pub llrs: Vec<f64>,
    pub labels: Vec<u8>,
    /// Human-readable description of the generating density.
    pub meta: String,
}

impl ChannelBatch {
    pub fn frame(&self, f: usize) -> &[f64] {
        &self.llrs[f * self.n..(f + 1) * self.n]
    }

    pub fn labels(&self, f: usize) -> &[u8] {
        &self.labels[f * self.n..(f + 1) * self.n]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.llrs.chunks_exact(self.n)
    }
}

/// Independent random streams keyed by `(seed, domain)` with one ChaCha
/// stream per index, so frame `f` draws the same noise regardless of which
/// worker generates it.
pub fn stream_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Stream domain for [`transmit_all_zero`].
pub const DOMAIN_CHANNEL: u64 = 0x4348_414e; // "CHAN"

/// Fills `out` with the LLRs of one all-zeros BPSK frame: `2 (1 + n) / sigma^2`.
pub fn all_zero_frame<R: rand::Rng>(sigma2: f64, rng: &mut R, out: &mut [f64]) {
    let sigma = sigma2.sqrt();
    let scale = 2.0 / sigma2;
    for x in out {
        let noise: f64 = StandardNormal.sample(rng);
        *x = scale * (1.0 + sigma * noise);
    }
}

pub fn transmit_all_zero(
    snr: &SnrPoint,
    n: usize,
    batch_size: usize,
    seed: u64,
) -> Result<ChannelBatch> {
    if batch_size == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "batch size and code length must be positive".into(),
        ));
    }
    let mut llrs = vec![0.0; batch_size * n];
    for (f, frame) in llrs.chunks_exact_mut(n).enumerate() {
        let mut rng = stream_rng(seed, DOMAIN_CHANNEL, f as u64);
        all_zero_frame(snr.sigma2, &mut rng, frame);
    }
    Ok(ChannelBatch {
        batch_size,
        n,
        llrs,
        labels: vec![0; batch_size * n],
        meta: format!(
            "all-zeros BPSK/AWGN at {} dB (sigma2={})",
            snr.ebn0_db, snr.sigma2
        ),
    })
}

/// Bit 0 for non-negative LLRs, 1 otherwise.
#[inline]
pub fn llr_hard_decision(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

const BATCH_MAGIC: &[u8; 8] = b"NNMSLLR1";

/// Writes the 16-byte header (magic, batch size, N as little-endian u32)
/// followed by the LLRs as row-major little-endian f32. Labels are not
/// stored; every dumped batch is an all-zeros transmission.
pub fn write_batch<W: Write>(batch: &ChannelBatch, mut w: W) -> std::io::Result<()> {
    w.write_all(BATCH_MAGIC)?;
    w.write_all(&(batch.batch_size as u32).to_le_bytes())?;
    w.write_all(&(batch.n as u32).to_le_bytes())?;
    for &x in &batch.llrs {
        w.write_all(&(x as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_batch<R: Read>(mut r: R) -> Result<ChannelBatch> {
    let bad = |msg: &str| Error::InvalidArgument(format!("batch file: {msg}"));
    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|_| bad("truncated header"))?;
    if &header[..8] != BATCH_MAGIC {
        return Err(bad("bad magic"));
    }
    let batch_size = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let mut body = Vec::new();
    r.read_to_end(&mut body)
        .map_err(|_| bad("unreadable body"))?;
    if body.len() != batch_size * n * 4 {
        return Err(bad("body length does not match header"));
    }
    let llrs = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(ChannelBatch {
        batch_size,
        n,
        llrs,
        labels: vec![0; batch_size * n],
        meta: "loaded from batch file".into(),
    })
}

pub fn save_batch(batch: &ChannelBatch, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_batch(batch, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_batch(path: &Path) -> Result<ChannelBatch> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_batch(std::io::BufReader::new(f))
}

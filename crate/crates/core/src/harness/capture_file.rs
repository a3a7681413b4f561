//! Single-capture IQ files.
//!
//! Layout, all little-endian:
//!
//! | offset | type     | field                         |
//! |--------|----------|-------------------------------|
//! | 0      | [u8; 4]  | magic `LCIQ`                  |
//! | 4      | u32      | format version (1)            |
//! | 8      | u32      | spreading factor              |
//! | 12     | f64      | bandwidth, Hz                 |
//! | 20     | f64      | sample rate, Hz               |
//! | 28     | u32      | channel index                 |
//! | 32     | u32      | antenna index                 |
//! | 36     | f64      | channel center frequency, Hz  |
//! | 44     | f32 x 2n | interleaved I, Q              |
//!
//! The sample count follows from the file length.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::phy::{ChirpParams, IqCapture};
use crate::{Error, Result, C64};

pub const MAGIC: [u8; 4] = *b"LCIQ";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 44;

/// Radio parameters stored alongside the samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureHeader {
    pub sf: u8,
    pub bw: f64,
    pub fs: f64,
    pub channel_index: usize,
    pub antenna_index: usize,
    pub center_freq: f64,
}

impl CaptureHeader {
    pub fn of(capture: &IqCapture, params: &ChirpParams) -> Self {
        Self {
            sf: params.sf,
            bw: params.bw,
            fs: params.fs,
            channel_index: capture.channel_index,
            antenna_index: capture.antenna_index,
            center_freq: capture.center_freq,
        }
    }

    /// Checks the header against the parameters the reader expects.
    pub fn check(&self, params: &ChirpParams) -> Result<()> {
        if self.sf != params.sf || self.bw != params.bw || self.fs != params.fs {
            return Err(Error::Framing(format!(
                "capture recorded with sf {} bw {} fs {}, expected sf {} bw {} fs {}",
                self.sf, self.bw, self.fs, params.sf, params.bw, params.fs
            )));
        }
        Ok(())
    }
}

pub fn write_capture<W: Write>(mut w: W, capture: &IqCapture, params: &ChirpParams) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&u32::from(params.sf).to_le_bytes())?;
    w.write_all(&params.bw.to_le_bytes())?;
    w.write_all(&params.fs.to_le_bytes())?;
    w.write_all(&(capture.channel_index as u32).to_le_bytes())?;
    w.write_all(&(capture.antenna_index as u32).to_le_bytes())?;
    w.write_all(&capture.center_freq.to_le_bytes())?;
    w.write_all(&encode_samples(&capture.samples))?;
    Ok(())
}

pub fn read_capture<R: Read>(mut r: R) -> Result<(CaptureHeader, IqCapture)> {
    let mut head = [0u8; HEADER_LEN];
    r.read_exact(&mut head)
        .map_err(|_| Error::Framing("capture shorter than its header".into()))?;
    if head[0..4] != MAGIC {
        return Err(Error::Framing("bad capture magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(head[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != FORMAT_VERSION {
        return Err(Error::Framing(format!("unsupported capture version {version}")));
    }
    let sf = u8::try_from(u32_at(8)).map_err(|_| Error::Framing("spreading factor out of range".into()))?;
    let header = CaptureHeader {
        sf,
        bw: f64_at(12),
        fs: f64_at(20),
        channel_index: u32_at(28) as usize,
        antenna_index: u32_at(32) as usize,
        center_freq: f64_at(36),
    };
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    let samples = decode_samples(&body)?;
    Ok((
        header,
        IqCapture {
            channel_index: header.channel_index,
            antenna_index: header.antenna_index,
            samples,
            center_freq: header.center_freq,
        },
    ))
}

/// Interleaved little-endian `f32` I/Q.
pub fn encode_samples(samples: &[C64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 8);
    for s in samples {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    out
}

pub fn decode_samples(bytes: &[u8]) -> Result<Vec<C64>> {
    if bytes.len() % 8 != 0 {
        return Err(Error::Framing(format!(
            "{} payload bytes is not a whole number of I/Q pairs",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            C64::new(f64::from(re), f64::from(im))
        })
        .collect())
}

/// Conventional file name of one capture.
pub fn capture_file_name(ap: usize, capture: &IqCapture) -> String {
    format!("ap{ap}_ch{}_ant{}.iq", capture.channel_index, capture.antenna_index)
}

pub fn save(path: &Path, capture: &IqCapture, params: &ChirpParams) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_capture(&mut w, capture, params)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(CaptureHeader, IqCapture)> {
    read_capture(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Capture files of one AP in `dir`, sorted by channel then antenna.
pub fn list_ap_files(dir: &Path, ap: usize) -> Result<Vec<PathBuf>> {
    let prefix = format!("ap{ap}_");
    let mut files: Vec<(usize, usize, PathBuf)> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter_map(|p| {
            let name = p.file_name()?.to_str()?.to_string();
            let rest = name.strip_prefix(&prefix)?.strip_suffix(".iq")?;
            let (ch, ant) = rest.strip_prefix("ch")?.split_once("_ant")?;
            Some((ch.parse().ok()?, ant.parse().ok()?, p))
        })
        .collect();
    files.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    Ok(files.into_iter().map(|f| f.2).collect())
}

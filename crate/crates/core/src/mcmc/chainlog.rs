//! Append-only binary log of kept snapshots.
//!
//! Layout: the magic bytes, a little-endian u32 version, then one record per
//! snapshot as a u32 payload length followed by the payload. A record cut
//! short by a crash is ignored by the reader.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::Snapshot;
use crate::error::{Error, Result};
use crate::models::{FiniteMixture, MixtureWeights};

pub const CHAIN_LOG_MAGIC: [u8; 4] = *b"PYTL";
pub const CHAIN_LOG_VERSION: u32 = 1;

pub struct ChainLogWriter<W: Write> {
    out: W,
    buf: Vec<u8>,
}

impl ChainLogWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?))
    }
}

fn put_vec(buf: &mut Vec<u8>, xs: &[f64]) {
    buf.write_u32::<LE>(xs.len() as u32).expect("vec write");
    for &x in xs {
        buf.write_f64::<LE>(x).expect("vec write");
    }
}

impl<W: Write> ChainLogWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        out.write_all(&CHAIN_LOG_MAGIC)?;
        out.write_u32::<LE>(CHAIN_LOG_VERSION)?;
        Ok(ChainLogWriter {
            out,
            buf: Vec::new(),
        })
    }

    /// Write one record and flush it.
    pub fn append(&mut self, s: &Snapshot) -> Result<()> {
        let b = &mut self.buf;
        b.clear();
        b.write_u64::<LE>(s.iteration)?;
        b.write_f64::<LE>(s.discount)?;
        b.write_f64::<LE>(s.lambda)?;
        b.write_u32::<LE>(s.occupied)?;
        b.write_f64::<LE>(s.mixture.lambda)?;
        put_vec(b, &s.alpha0);
        match &s.mixture.weights {
            MixtureWeights::Fixed { weights } => {
                b.write_u8(0)?;
                put_vec(b, weights);
            }
            MixtureWeights::Dependent {
                uniforms,
                betas,
                terminal,
            } => {
                b.write_u8(1)?;
                put_vec(b, uniforms);
                put_vec(b, betas);
                b.write_u8(*terminal as u8)?;
            }
        }
        put_vec(b, &s.mixture.atoms);
        put_vec(b, &s.mixture.tail_atoms);
        self.out.write_u32::<LE>(b.len() as u32)?;
        self.out.write_all(b)?;
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub struct ChainLogReader<R: Read> {
    input: R,
    truncated: bool,
}

impl ChainLogReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        Self::new(BufReader::new(File::open(path)?))
    }
}

fn get_vec(r: &mut &[u8]) -> io::Result<Vec<f64>> {
    let n = r.read_u32::<LE>()? as usize;
    if n * 8 > r.len() {
        return Err(io::ErrorKind::UnexpectedEof.into());
    }
    (0..n).map(|_| r.read_f64::<LE>()).collect()
}

fn decode(mut r: &[u8]) -> io::Result<Snapshot> {
    let r = &mut r;
    let iteration = r.read_u64::<LE>()?;
    let discount = r.read_f64::<LE>()?;
    let lambda = r.read_f64::<LE>()?;
    let occupied = r.read_u32::<LE>()?;
    let mix_lambda = r.read_f64::<LE>()?;
    let alpha0 = get_vec(r)?;
    let weights = match r.read_u8()? {
        0 => MixtureWeights::Fixed { weights: get_vec(r)? },
        1 => MixtureWeights::Dependent {
            uniforms: get_vec(r)?,
            betas: get_vec(r)?,
            terminal: r.read_u8()? != 0,
        },
        _ => return Err(io::ErrorKind::InvalidData.into()),
    };
    let atoms = get_vec(r)?;
    let tail_atoms = get_vec(r)?;
    if !r.is_empty() {
        return Err(io::ErrorKind::InvalidData.into());
    }
    Ok(Snapshot {
        iteration,
        discount,
        lambda,
        alpha0,
        occupied,
        mixture: FiniteMixture {
            weights,
            atoms,
            tail_atoms,
            lambda: mix_lambda,
        },
    })
}

impl<R: Read> ChainLogReader<R> {
    pub fn new(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input
            .read_exact(&mut magic)
            .map_err(|_| Error::Log("missing header".into()))?;
        if magic != CHAIN_LOG_MAGIC {
            return Err(Error::Log("not a chain log".into()));
        }
        let version = input
            .read_u32::<LE>()
            .map_err(|_| Error::Log("missing version".into()))?;
        if version != CHAIN_LOG_VERSION {
            return Err(Error::Log(format!("unsupported chain log version {version}")));
        }
        Ok(ChainLogReader {
            input,
            truncated: false,
        })
    }

    /// Whether reading stopped at a partial record.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Next complete record; `None` at the end or at a partial record.
    pub fn next_record(&mut self) -> Result<Option<Snapshot>> {
        let mut len = [0u8; 4];
        match read_full(&mut self.input, &mut len)? {
            0 => return Ok(None),
            4 => {}
            _ => {
                self.truncated = true;
                return Ok(None);
            }
        }
        let len = u32::from_le_bytes(len) as usize;
        let mut payload = vec![0u8; len];
        if read_full(&mut self.input, &mut payload)? < len {
            self.truncated = true;
            return Ok(None);
        }
        decode(&payload)
            .map(Some)
            .map_err(|e| Error::Log(format!("corrupt record: {e}")))
    }

    pub fn read_all(&mut self) -> Result<Vec<Snapshot>> {
        let mut out = Vec::new();
        while let Some(s) = self.next_record()? {
            out.push(s);
        }
        Ok(out)
    }
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(k) => got += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(got)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(i: u64, dependent: bool) -> Snapshot {
        let weights = if dependent {
            MixtureWeights::Dependent {
                uniforms: vec![0.3, 0.6],
                betas: vec![0.1, -0.2, 0.3, 0.4],
                terminal: true,
            }
        } else {
            MixtureWeights::Fixed {
                weights: vec![0.7, 0.2],
            }
        };
        Snapshot {
            iteration: i,
            discount: 0.4,
            lambda: 1.5,
            alpha0: vec![2.0],
            occupied: 2,
            mixture: FiniteMixture {
                weights,
                atoms: vec![1.0, 30.0],
                tail_atoms: vec![5.0],
                lambda: 1.5,
            },
        }
    }

    #[test]
    fn records_come_back_and_a_torn_tail_is_dropped() {
        let mut w = ChainLogWriter::new(Vec::new()).unwrap();
        let all = [snap(1, false), snap(2, true), snap(3, false)];
        for s in &all {
            w.append(s).unwrap();
        }
        let bytes = w.into_inner();
        assert_eq!(&bytes[..4], b"PYTL");
        let back = ChainLogReader::new(&bytes[..]).unwrap().read_all().unwrap();
        assert_eq!(back, all);

        let mut r = ChainLogReader::new(&bytes[..bytes.len() - 5]).unwrap();
        let cut = r.read_all().unwrap();
        assert_eq!(cut, all[..2]);
        assert!(r.truncated());

        assert!(ChainLogReader::new(&b"NOPE\x01\0\0\0"[..]).is_err());
        let mut wrong = bytes.clone();
        wrong[4] = 9;
        assert!(ChainLogReader::new(&wrong[..]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.bin");
        let mut w = ChainLogWriter::create(&path).unwrap();
        w.append(&snap(7, false)).unwrap();
        drop(w);
        let got = ChainLogReader::open(&path).unwrap().read_all().unwrap();
        assert_eq!(got, vec![snap(7, false)]);
    }
}

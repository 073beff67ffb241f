//! Binary model file: little-endian, magic `T2TSUBW1`, config, vocabulary
//! (u32 byte length + UTF-8 + u64 count per word), then the word-input,
//! n-gram-input and output matrices in row-major f32.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::model::{SubwordConfig, SubwordModel};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"T2TSUBW1";

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Validation(format!("{} does not fit in u32", what)))
}

pub(crate) fn write_f32s<W: Write>(w: &mut W, values: &[f32]) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(4096 * 4);
    for chunk in values.chunks(4096) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub(crate) fn read_f32s<R: Read>(r: &mut R, len: usize) -> std::io::Result<Vec<f32>> {
    let mut out = Vec::with_capacity(len);
    let mut buf = vec![0u8; 4096 * 4];
    let mut remaining = len;
    while remaining > 0 {
        let n = remaining.min(4096);
        r.read_exact(&mut buf[..n * 4])?;
        out.extend(
            buf[..n * 4]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
        );
        remaining -= n;
    }
    Ok(out)
}

pub(crate) fn read_string<R: Read>(r: &mut R) -> Result<String> {
    let len = r.read_u32::<LittleEndian>()? as usize;
    let mut bytes = vec![0u8; len];
    r.read_exact(&mut bytes)?;
    String::from_utf8(bytes).map_err(|_| Error::Format("string is not valid UTF-8".to_owned()))
}

pub(crate) fn write_string<W: Write>(w: &mut W, s: &str) -> Result<()> {
    w.write_u32::<LittleEndian>(to_u32(s.len(), "string length")?)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("unexpected end of file".to_owned())
    } else {
        Error::Stream(e)
    }
}

impl SubwordModel {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let c = &self.config;
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(to_u32(c.dim, "dim")?)?;
        w.write_u32::<LittleEndian>(to_u32(c.min_n, "min_n")?)?;
        w.write_u32::<LittleEndian>(to_u32(c.max_n, "max_n")?)?;
        w.write_u32::<LittleEndian>(to_u32(c.epochs, "epochs")?)?;
        w.write_u32::<LittleEndian>(to_u32(c.negatives, "negatives")?)?;
        w.write_f64::<LittleEndian>(c.learning_rate)?;
        w.write_u64::<LittleEndian>(c.bucket_count)?;
        w.write_u64::<LittleEndian>(c.seed)?;

        w.write_u64::<LittleEndian>(self.words.len() as u64)?;
        for (word, &count) in self.words.iter().zip(&self.counts) {
            write_string(&mut w, word)?;
            w.write_u64::<LittleEndian>(count)?;
        }
        write_f32s(&mut w, &self.word_input)?;
        write_f32s(&mut w, &self.ngram_input)?;
        write_f32s(&mut w, &self.output)?;
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        Self::read_inner(&mut r).map_err(|e| match e {
            Error::Stream(e) => truncated(e),
            e => e,
        })
    }

    fn read_inner<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a subword model file".to_owned()));
        }
        let config = SubwordConfig {
            dim: r.read_u32::<LittleEndian>()? as usize,
            min_n: r.read_u32::<LittleEndian>()? as usize,
            max_n: r.read_u32::<LittleEndian>()? as usize,
            epochs: r.read_u32::<LittleEndian>()? as usize,
            negatives: r.read_u32::<LittleEndian>()? as usize,
            learning_rate: r.read_f64::<LittleEndian>()?,
            bucket_count: r.read_u64::<LittleEndian>()?,
            seed: r.read_u64::<LittleEndian>()?,
        };
        config
            .validate()
            .map_err(|e| Error::Format(format!("bad header: {}", e)))?;

        let n_words = r.read_u64::<LittleEndian>()? as usize;
        let mut words = Vec::with_capacity(n_words.min(1 << 20));
        let mut counts = Vec::with_capacity(n_words.min(1 << 20));
        for _ in 0..n_words {
            words.push(read_string(r)?);
            counts.push(r.read_u64::<LittleEndian>()?);
        }
        let dim = config.dim;
        let word_input = read_f32s(r, n_words * dim)?;
        let ngram_input = read_f32s(r, config.bucket_count as usize * dim)?;
        let output = read_f32s(r, n_words * dim)?;
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after output matrix".to_owned()));
        }
        SubwordModel::from_parts(config, words, counts, word_input, ngram_input, output)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(BufWriter::new(file)).map_err(|e| match e {
            Error::Stream(e) => Error::io(path, e),
            e => e,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }
}

//! Exchange format: magic `T2TEMB01`, u32 vocabulary size, u32 dimension,
//! the tokens as u32-length-prefixed UTF-8, then the f32 matrix row-major.
//! All integers and floats are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{Convention, RoleTable, Vocabulary};
use crate::subword::io::{read_f32s, read_string, write_f32s, write_string};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"T2TEMB01";

/// Token-embedding matrix together with its vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    vocab: Vocabulary,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingTable {
    pub fn new(vocab: Vocabulary, dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("embedding dimension must be positive".to_owned()));
        }
        if data.len() != vocab.len() * dim {
            return Err(Error::Dimension(format!(
                "{} values do not form {} rows of width {}",
                data.len(),
                vocab.len(),
                dim
            )));
        }
        Ok(EmbeddingTable { vocab, dim, data })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.vocab.len()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, id: usize) -> &[f32] {
        &self.data[id * self.dim..(id + 1) * self.dim]
    }

    pub fn into_parts(self) -> (Vocabulary, usize, Vec<f32>) {
        (self.vocab, self.dim, self.data)
    }

    /// First token whose row holds a non-finite value.
    pub fn first_non_finite(&self) -> Option<usize> {
        (0..self.rows()).find(|&i| self.row(i).iter().any(|v| !v.is_finite()))
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        if let Some(id) = self.first_non_finite() {
            return Err(Error::NonFinite {
                token: self.vocab.token(id).to_owned(),
            });
        }
        let n = u32::try_from(self.rows())
            .map_err(|_| Error::Validation("vocabulary too large".to_owned()))?;
        let dim = u32::try_from(self.dim)
            .map_err(|_| Error::Validation("dimension too large".to_owned()))?;
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(n)?;
        w.write_u32::<LittleEndian>(dim)?;
        for tok in self.vocab.tokens() {
            write_string(&mut w, tok)?;
        }
        write_f32s(&mut w, &self.data)?;
        w.flush()?;
        Ok(())
    }

    /// Read a table. The vocabulary is stored inline; `convention` and
    /// `roles` say how to interpret it.
    pub fn read<R: Read>(mut r: R, convention: Convention, roles: &RoleTable) -> Result<Self> {
        let eof = |e: Error| match e {
            Error::Stream(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                Error::Format("unexpected end of embedding file".to_owned())
            }
            e => e,
        };
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|e| eof(e.into()))?;
        if &magic != MAGIC {
            return Err(Error::Format("not an embedding exchange file".to_owned()));
        }
        let n = r.read_u32::<LittleEndian>().map_err(|e| eof(e.into()))? as usize;
        let dim = r.read_u32::<LittleEndian>().map_err(|e| eof(e.into()))? as usize;
        if n == 0 {
            return Err(Error::Validation("embedding file has an empty vocabulary".to_owned()));
        }
        let mut tokens = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            tokens.push(read_string(&mut r).map_err(eof)?);
        }
        let data = read_f32s(&mut r, n * dim).map_err(|e| {
            eof(Error::Stream(e))
        })?;
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format(
                "embedding file has more rows than vocabulary entries".to_owned(),
            ));
        }
        let vocab = Vocabulary::new(tokens, convention, roles)?;
        EmbeddingTable::new(vocab, dim, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(BufWriter::new(file)).map_err(|e| match e {
            Error::Stream(e) => Error::io(path, e),
            e => e,
        })
    }

    pub fn load(path: impl AsRef<Path>, convention: Convention, roles: &RoleTable) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file), convention, roles)
    }
}

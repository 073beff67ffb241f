//! JSON-lines mapping files, one [`MappedToken`] record per target token.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{MappedToken, TokenMapping};
use crate::{Error, Result};

impl TokenMapping {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for token in &self.tokens {
            serde_json::to_writer(&mut w, token)
                .map_err(|e| Error::Format(format!("serializing mapping: {}", e)))?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut tokens = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let token: MappedToken = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
            tokens.push(token);
        }
        Ok(TokenMapping { tokens })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_jsonl(BufWriter::new(file)).map_err(|e| match e {
            Error::Stream(e) => Error::io(path, e),
            e => e,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_jsonl(BufReader::new(file))
    }
}

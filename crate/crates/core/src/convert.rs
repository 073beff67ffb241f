//! Build the target embedding table from the source table and a mapping.

use serde::Serialize;

use crate::mapper::{MatchCase, TokenMapping};
use crate::vocab::{EmbeddingTable, Vocabulary};
use crate::{Error, Result};

/// Per-token summary of a conversion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConversionReportRow {
    pub target_id: usize,
    pub case: MatchCase,
    pub candidates: usize,
    pub weight_entropy: f64,
    pub norm: f64,
}

/// Each target row is the weighted sum of its candidates' source rows,
/// accumulated in f64 in candidate order.
pub fn convert(source: &EmbeddingTable, mapping: &TokenMapping, target: &Vocabulary) -> Result<EmbeddingTable> {
    mapping.validate(target, source.rows())?;
    let dim = source.dim();
    let mut data = Vec::with_capacity(target.len() * dim);
    let mut acc = vec![0f64; dim];
    for token in &mapping.tokens {
        acc.iter_mut().for_each(|v| *v = 0.0);
        for c in &token.candidates {
            for (a, &s) in acc.iter_mut().zip(source.row(c.source_id)) {
                *a += c.weight * f64::from(s);
            }
        }
        let start = data.len();
        data.extend(acc.iter().map(|&v| v as f32));
        if data[start..].iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                token: token.target_token.clone(),
            });
        }
    }
    EmbeddingTable::new(target.clone(), dim, data)
}

pub fn conversion_report(table: &EmbeddingTable, mapping: &TokenMapping) -> Vec<ConversionReportRow> {
    mapping
        .tokens
        .iter()
        .map(|t| ConversionReportRow {
            target_id: t.target_id,
            case: t.case,
            candidates: t.candidates.len(),
            weight_entropy: t.weight_entropy(),
            norm: table
                .row(t.target_id)
                .iter()
                .map(|&v| f64::from(v) * f64::from(v))
                .sum::<f64>()
                .sqrt(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub token: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub rows: usize,
    pub violations: Vec<Violation>,
    /// Rows other than the unknown token's that are bit-identical to it.
    pub unk_rows: usize,
}

impl VerifyReport {
    pub fn is_healthy(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check finiteness and count rows that fell back to the unknown embedding.
pub fn verify(table: &EmbeddingTable) -> VerifyReport {
    let vocab = table.vocab();
    let mut report = VerifyReport {
        rows: table.rows(),
        ..VerifyReport::default()
    };
    if table.data().len() != vocab.len() * table.dim() {
        report.violations.push(Violation {
            token: String::new(),
            message: "row count does not match vocabulary".to_owned(),
        });
        return report;
    }
    let unk = vocab.unk_id();
    let unk_bits: Vec<u32> = table.row(unk).iter().map(|v| v.to_bits()).collect();
    for id in 0..table.rows() {
        let row = table.row(id);
        let bad = row.iter().filter(|v| !v.is_finite()).count();
        if bad > 0 {
            report.violations.push(Violation {
                token: vocab.token(id).to_owned(),
                message: format!("{} non-finite value(s)", bad),
            });
        }
        if id != unk && row.iter().map(|v| v.to_bits()).eq(unk_bits.iter().copied()) {
            report.unk_rows += 1;
        }
    }
    report
}

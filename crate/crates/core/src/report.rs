//! Diagnostics over a finished mapping.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::mapper::{MappedToken, MatchCase, Provenance, TokenMapping};
use crate::vocab::Vocabulary;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CosineSummary {
    pub count: usize,
    pub mean: f64,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MappingStats {
    pub target_tokens: usize,
    pub cases: BTreeMap<MatchCase, usize>,
    /// Target tokens that are alphabetic and not special.
    pub alphabetic_tokens: usize,
    /// Dictionary-case tokens over alphabetic tokens.
    pub dictionary_coverage: f64,
    pub first_token_fallbacks: usize,
    pub unk_fallbacks: usize,
    pub distinct_source_tokens: usize,
    pub source_vocab_size: usize,
    /// Best cosine of each subword-case token.
    pub subword_top1_cosine: Option<CosineSummary>,
}

/// Nearest-rank percentile: the smallest value with at least `p`% of the
/// sample at or below it.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let rank = ((p / 100.0) * n as f64).ceil().clamp(1.0, n as f64) as usize;
    let mut scratch = values.to_vec();
    let (_, v, _) = scratch.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Some(*v)
}

pub fn summarize(mapping: &TokenMapping, target: &Vocabulary, source: &Vocabulary) -> MappingStats {
    let mut cases: BTreeMap<MatchCase, usize> = MatchCase::ALL.iter().map(|&c| (c, 0)).collect();
    for t in &mapping.tokens {
        *cases.entry(t.case).or_default() += 1;
    }
    let alphabetic_tokens = target
        .shapes()
        .iter()
        .filter(|s| s.alphabetic && !s.is_special())
        .count();
    let dictionary = cases[&MatchCase::Dictionary];
    let dictionary_coverage = if alphabetic_tokens == 0 {
        0.0
    } else {
        dictionary as f64 / alphabetic_tokens as f64
    };
    let candidates = || mapping.tokens.iter().flat_map(|t| &t.candidates);
    let first_token_fallbacks = candidates()
        .filter(|c| c.provenance == Provenance::DictionaryFirstTokenFallback)
        .count();
    let distinct_source_tokens = candidates().map(|c| c.source_id).collect::<BTreeSet<_>>().len();

    let top1: Vec<f64> = mapping
        .tokens
        .iter()
        .filter(|t| t.case == MatchCase::SubwordFasttext)
        .filter_map(|t| t.candidates.iter().filter_map(|c| c.cosine).reduce(f64::max))
        .collect();
    let subword_top1_cosine = (!top1.is_empty()).then(|| CosineSummary {
        count: top1.len(),
        mean: top1.iter().sum::<f64>() / top1.len() as f64,
        p10: percentile(&top1, 10.0).unwrap(),
        p50: percentile(&top1, 50.0).unwrap(),
        p90: percentile(&top1, 90.0).unwrap(),
    });

    MappingStats {
        target_tokens: mapping.len(),
        unk_fallbacks: cases[&MatchCase::UnkFallback],
        cases,
        alphabetic_tokens,
        dictionary_coverage,
        first_token_fallbacks,
        distinct_source_tokens,
        source_vocab_size: source.len(),
        subword_top1_cosine,
    }
}

fn format_weight(w: f64) -> String {
    let s = format!("{:.4}", w);
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s).to_owned()
}

/// `E_t[token] = w1·E_s[s1] + w2·E_s[s2] + …`
pub fn render_formula(token: &MappedToken) -> String {
    let terms: Vec<String> = token
        .candidates
        .iter()
        .map(|c| format!("{}·E_s[{}]", format_weight(c.weight), c.source_token))
        .collect();
    format!("E_t[{}] = {}", token.target_token, terms.join(" + "))
}

/// Pick up to `n` tokens: split the class by descending weight entropy into
/// `n` strata and draw one token from each.
fn sample_stratified<'m>(tokens: &[&'m MappedToken], n: usize, rng: &mut ChaCha8Rng) -> Vec<&'m MappedToken> {
    let mut sorted = tokens.to_vec();
    sorted.sort_by(|a, b| {
        b.weight_entropy()
            .total_cmp(&a.weight_entropy())
            .then(a.target_id.cmp(&b.target_id))
    });
    if n >= sorted.len() {
        return sorted;
    }
    let m = sorted.len();
    (0..n)
        .map(|i| {
            let lo = i * m / n;
            let hi = (i + 1) * m / n;
            sorted[rng.gen_range(lo..hi)]
        })
        .collect()
}

/// Markdown listing of sample initializations per case. Empty cases are
/// left out; `n_per_case = 0` renders the case headers only.
pub fn render_examples(mapping: &TokenMapping, n_per_case: usize, seed: u64) -> String {
    let mut out = String::new();
    for (stream, case) in MatchCase::ALL.into_iter().enumerate() {
        let members: Vec<&MappedToken> = mapping.tokens.iter().filter(|t| t.case == case).collect();
        if members.is_empty() {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        let _ = writeln!(out, "### {} ({} tokens)\n", case.name(), members.len());
        let picked = sample_stratified(&members, n_per_case, &mut rng);
        for t in &picked {
            let _ = writeln!(out, "- `{}`", render_formula(t));
        }
        if !picked.is_empty() {
            out.push('\n');
        }
    }
    out
}

impl MappingStats {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }

    fn rows(&self) -> Vec<(String, String)> {
        let mut rows = vec![("target_tokens".to_owned(), self.target_tokens.to_string())];
        for (case, count) in &self.cases {
            rows.push((format!("case.{}", case.name()), count.to_string()));
        }
        rows.push(("alphabetic_tokens".into(), self.alphabetic_tokens.to_string()));
        rows.push(("dictionary_coverage".into(), format!("{:.4}", self.dictionary_coverage)));
        rows.push(("first_token_fallbacks".into(), self.first_token_fallbacks.to_string()));
        rows.push(("unk_fallbacks".into(), self.unk_fallbacks.to_string()));
        rows.push(("distinct_source_tokens".into(), self.distinct_source_tokens.to_string()));
        rows.push(("source_vocab_size".into(), self.source_vocab_size.to_string()));
        if let Some(c) = &self.subword_top1_cosine {
            rows.push(("subword_top1_cosine.mean".into(), format!("{:.4}", c.mean)));
            rows.push(("subword_top1_cosine.p10".into(), format!("{:.4}", c.p10)));
            rows.push(("subword_top1_cosine.p50".into(), format!("{:.4}", c.p50)));
            rows.push(("subword_top1_cosine.p90".into(), format!("{:.4}", c.p90)));
        }
        rows
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tvalue\n");
        for (k, v) in self.rows() {
            let _ = writeln!(out, "{}\t{}", k, v);
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| metric | value |\n|---|---|\n");
        for (k, v) in self.rows() {
            let _ = writeln!(out, "| {} | {} |", k, v);
        }
        out
    }
}

/// Tab-separated nearest source tokens of every subword-case target token.
pub fn neighbor_dump(mapping: &TokenMapping) -> String {
    let mut out = String::from("target_token\trank\tsource_token\tcosine\tweight\n");
    for t in mapping.tokens.iter().filter(|t| t.case == MatchCase::SubwordFasttext) {
        for (rank, c) in t.candidates.iter().enumerate() {
            let cos = c.cosine.map(|x| format!("{:.6}", x)).unwrap_or_default();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                t.target_token,
                rank + 1,
                c.source_token,
                cos,
                format_weight(c.weight)
            );
        }
    }
    out
}

/// Statistics table followed by sampled examples.
pub fn render_report(stats: &MappingStats, mapping: &TokenMapping, n_per_case: usize, seed: u64) -> String {
    format!(
        "# Token mapping report\n\n## Statistics\n\n{}\n## Examples\n\n{}",
        stats.to_markdown(),
        render_examples(mapping, n_per_case, seed)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapper::MatchCandidate;
    use crate::vocab::{Convention, RoleTable};

    fn cand(id: usize, tok: &str, w: f64, p: Provenance, cos: Option<f64>) -> MatchCandidate {
        MatchCandidate {
            source_id: id,
            source_token: tok.into(),
            weight: w,
            provenance: p,
            cosine: cos,
        }
    }

    fn mapped(id: usize, tok: &str, case: MatchCase, candidates: Vec<MatchCandidate>) -> MappedToken {
        MappedToken {
            target_id: id,
            target_token: tok.into(),
            case,
            candidates,
        }
    }

    fn fixture() -> (TokenMapping, Vocabulary) {
        let target = Vocabulary::new(
            ["[UNK]", ",", "hond", "##heid", "##ingsbedrijf"].iter().map(|s| s.to_string()).collect(),
            Convention::WordPiece,
            &RoleTable::default(),
        )
        .unwrap();
        let sub = Provenance::SubwordFasttext;
        let mapping = TokenMapping {
            tokens: vec![
                mapped(0, "[UNK]", MatchCase::SpecialRole, vec![cand(0, "<unk>", 1.0, Provenance::SpecialRole, None)]),
                mapped(1, ",", MatchCase::SharedExact, vec![cand(5, ",", 1.0, Provenance::SharedExact, None)]),
                mapped(
                    2,
                    "hond",
                    MatchCase::Dictionary,
                    vec![
                        cand(7, "▁dog", 0.6, Provenance::Dictionary, None),
                        cand(8, "▁hound", 0.4, Provenance::DictionaryFirstTokenFallback, None),
                    ],
                ),
                mapped(
                    3,
                    "##heid",
                    MatchCase::SubwordFasttext,
                    vec![cand(9, "ness", 0.6, sub, Some(0.8)), cand(10, "hood", 0.4, sub, Some(0.7))],
                ),
                mapped(
                    4,
                    "##ingsbedrijf",
                    MatchCase::SubwordFasttext,
                    vec![
                        cand(11, "company", 0.5, sub, Some(0.9)),
                        cand(12, "Company", 0.3, sub, Some(0.85)),
                        cand(13, "▁Company", 0.2, sub, Some(0.8)),
                    ],
                ),
            ],
        };
        (mapping, target)
    }

    #[test]
    fn percentiles_match_full_sort() {
        let values: Vec<f64> = (0..101).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        for p in [10.0, 50.0, 90.0] {
            let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
            assert_eq!(percentile(&values, p), Some(sorted[rank - 1]));
        }
        assert_eq!(percentile(&[], 50.0), None);
        assert_eq!(percentile(&[3.0], 10.0), Some(3.0));
    }

    #[test]
    fn stats_from_fixture() {
        let (mapping, target) = fixture();
        let source = Vocabulary::new(vec!["<unk>".into()], Convention::Plain, &RoleTable::default()).unwrap();
        let s = summarize(&mapping, &target, &source);
        assert_eq!(s.cases.values().sum::<usize>(), 5);
        assert_eq!(s.alphabetic_tokens, 3);
        assert!((s.dictionary_coverage - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.first_token_fallbacks, 1);
        let c = s.subword_top1_cosine.as_ref().unwrap();
        assert_eq!(c.count, 2);
        assert!((c.mean - 0.85).abs() < 1e-12);
        assert!(s.to_tsv().starts_with("metric\tvalue\ntarget_tokens\t5\n"));
        assert!(s.to_json().contains("\"dictionary\": 1"));
    }

    #[test]
    fn examples_follow_the_table_layout() {
        let (mapping, _) = fixture();
        let text = render_examples(&mapping, 5, 0);
        assert!(text.contains(
            "- `E_t[##ingsbedrijf] = 0.5·E_s[company] + 0.3·E_s[Company] + 0.2·E_s[▁Company]`"
        ));
        assert!(text.contains("### dictionary (1 tokens)"));
        assert!(!text.contains("unk_fallback"));
        assert_eq!(text, render_examples(&mapping, 5, 0));
    }

    #[test]
    fn neighbor_dump_lists_subword_tokens() {
        let (mapping, _) = fixture();
        let dump = neighbor_dump(&mapping);
        assert_eq!(dump.lines().count(), 1 + 5);
        assert!(dump.contains("##heid\t1\tness\t0.800000\t0.6\n"));
    }

    #[test]
    fn zero_examples_gives_headers_only() {
        let (mapping, _) = fixture();
        let text = render_examples(&mapping, 0, 0);
        assert!(!text.contains("E_t["));
        assert_eq!(text.matches("### ").count(), 4);
    }

    #[test]
    fn stratified_sampling_prefers_spread() {
        let tokens: Vec<MappedToken> = (0..10)
            .map(|i| {
                let n = i + 1;
                let w = 1.0 / n as f64;
                mapped(
                    i,
                    "t",
                    MatchCase::SubwordFasttext,
                    (0..n).map(|j| cand(j, "s", w, Provenance::SubwordFasttext, Some(0.5))).collect(),
                )
            })
            .collect();
        let refs: Vec<&MappedToken> = tokens.iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let picked = sample_stratified(&refs, 2, &mut rng);
        assert!(picked[0].target_id >= 5 && picked[1].target_id < 5);
    }
}

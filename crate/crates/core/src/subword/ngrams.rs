const BOW: char = '<';
const EOW: char = '>';

const FNV_OFFSET_BASIS: u32 = 2_166_136_261;
const FNV_PRIME: u32 = 16_777_619;

/// FNV-1a, 32 bit.
pub fn fnv1a_32(bytes: &[u8]) -> u32 {
    bytes.iter().fold(FNV_OFFSET_BASIS, |hash, &b| {
        (hash ^ u32::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// Bucket of an n-gram: FNV-1a over its UTF-8 bytes modulo `bucket_count`.
pub fn hash_ngram(ngram: &str, bucket_count: u64) -> u64 {
    u64::from(fnv1a_32(ngram.as_bytes())) % bucket_count
}

fn wrap(word: &str) -> String {
    let mut wrapped = String::with_capacity(word.len() + 2);
    wrapped.push(BOW);
    wrapped.push_str(word);
    wrapped.push(EOW);
    wrapped
}

/// Visit the byte ranges of all n-grams of `<word>`, lengths `min_n..=max_n`
/// in code points, shorter lengths first and left to right within a length.
fn for_each_ngram<F>(wrapped: &str, min_n: usize, max_n: usize, mut f: F)
where
    F: FnMut(&str),
{
    let mut bounds: Vec<usize> = wrapped.char_indices().map(|(i, _)| i).collect();
    bounds.push(wrapped.len());
    let chars = bounds.len() - 1;
    for n in min_n.max(1)..=max_n.min(chars) {
        for start in 0..=chars - n {
            f(&wrapped[bounds[start]..bounds[start + n]]);
        }
    }
}

/// Character n-grams of `word` after wrapping it in `<` and `>`.
pub fn extract_ngrams(word: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let mut ngrams = Vec::new();
    for_each_ngram(&wrap(word), min_n, max_n, |g| ngrams.push(g.to_owned()));
    ngrams
}

/// Buckets of all n-grams of `word`, in [`extract_ngrams`] order.
pub fn ngram_buckets(word: &str, min_n: usize, max_n: usize, bucket_count: u64) -> Vec<usize> {
    let mut buckets = Vec::new();
    for_each_ngram(&wrap(word), min_n, max_n, |g| {
        buckets.push(hash_ngram(g, bucket_count) as usize)
    });
    buckets
}

#![allow(dead_code)]

use lrm::{Alphabet, LabelledTrace, TraceSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn letters() -> Alphabet {
    Alphabet::new(["a", "b", "c", "d"]).unwrap()
}

/// One single-proposition observation per character.
pub fn corpus(words: &[&str]) -> TraceSet {
    let ab = letters();
    let traces = words
        .iter()
        .map(|w| {
            let obs: Vec<_> = w
                .chars()
                .map(|c| ab.obs([c.to_string()]).unwrap())
                .collect();
            let n = obs.len();
            LabelledTrace::new(obs, vec![0.0; n - 1]).unwrap()
        })
        .collect();
    TraceSet::from_traces(ab, traces).unwrap()
}

/// Random words over the first `k` letters.
pub fn random_words(seed: u64, k: usize, count: usize, max_len: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = rng.gen_range(1..=max_len);
            (0..len)
                .map(|_| (b'a' + rng.gen_range(0..k) as u8) as char)
                .collect()
        })
        .collect()
}

pub fn random_corpus(seed: u64, k: usize, count: usize, max_len: usize) -> TraceSet {
    let words = random_words(seed, k, count, max_len);
    let refs: Vec<&str> = words.iter().map(String::as_str).collect();
    corpus(&refs)
}

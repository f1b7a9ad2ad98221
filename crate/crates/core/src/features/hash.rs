/// Output of [`hash_embed`].
#[derive(Debug, Clone, PartialEq)]
pub struct HashEmbedding {
    pub vector: Vec<f64>,
    /// True when the text had no tokens (or every token cancelled out) and
    /// the vector is all zeros.
    pub empty: bool,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn token_hash(token: &str, seed: u64) -> u64 {
    // FNV-1a, then mixed with the seed so different seeds give unrelated buckets.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in token.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(h ^ splitmix64(seed))
}

/// Signed feature hashing of lower-cased whitespace tokens into `dim`
/// buckets, L2-normalised. Token order does not matter.
///
/// Deterministic text stand-in when no sentence encoder output is available.
pub fn hash_embed(text: &str, dim: usize, seed: u64) -> HashEmbedding {
    assert!(dim >= 1, "hash_embed: dim must be >= 1");
    let mut v = vec![0.0; dim];
    for tok in text.split_whitespace() {
        let h = token_hash(&tok.to_lowercase(), seed);
        let bucket = (h % dim as u64) as usize;
        let sign = if (h >> 63) == 0 { 1.0 } else { -1.0 };
        v[bucket] += sign;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return HashEmbedding {
            vector: v,
            empty: true,
        };
    }
    v.iter_mut().for_each(|x| *x /= norm);
    HashEmbedding {
        vector: v,
        empty: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_unit_norm() {
        let a = hash_embed("vote early #resist", 64, 3);
        let b = hash_embed("vote early #resist", 64, 3);
        assert_eq!(a, b);
        let n: f64 = a.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-6);
        assert!(!a.empty);
    }

    #[test]
    fn bag_of_tokens() {
        assert_eq!(hash_embed("a b", 32, 1), hash_embed("b a", 32, 1));
        assert_eq!(hash_embed("A  b", 32, 1), hash_embed("b a", 32, 1));
    }

    #[test]
    fn empty_text_flagged() {
        let e = hash_embed("   ", 8, 0);
        assert!(e.empty);
        assert!(e.vector.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn seed_changes_buckets() {
        assert_ne!(hash_embed("hello world foo", 256, 1), hash_embed("hello world foo", 256, 2));
    }
}

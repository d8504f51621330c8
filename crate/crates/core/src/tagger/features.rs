use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::textnorm::Token;

pub type FeatureId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub hash_dim: usize,
    pub char_ngram_orders: Vec<usize>,
    /// Neighbor tokens considered on each side.
    pub context_window: usize,
    pub use_shape_features: bool,
    pub seed: u64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            hash_dim: 1 << 20,
            char_ngram_orders: vec![2, 3, 4],
            context_window: 2,
            use_shape_features: true,
            seed: 0,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.hash_dim < 2 {
            return Err(format!("hash_dim must be at least 2, got {}", self.hash_dim));
        }
        if self.hash_dim > FeatureId::MAX as usize + 1 {
            return Err(format!("hash_dim {} exceeds the 32-bit feature id range", self.hash_dim));
        }
        if self.char_ngram_orders.contains(&0) {
            return Err("char n-gram orders must be positive".into());
        }
        Ok(())
    }
}

struct Hasher<'a> {
    config: &'a FeatureConfig,
    buf: String,
    out: Vec<FeatureId>,
}

impl Hasher<'_> {
    fn emit(&mut self, prefix: &str, kind: &str, value: &str) {
        self.buf.clear();
        self.buf.push_str(prefix);
        self.buf.push('|');
        self.buf.push_str(kind);
        self.buf.push('=');
        self.buf.push_str(value);
        let h = xxh3_64_with_seed(self.buf.as_bytes(), self.config.seed);
        self.out.push((h % self.config.hash_dim as u64) as FeatureId);
    }

    fn token(&mut self, prefix: &str, surface: &str) {
        let lower = surface.to_lowercase();
        self.emit(prefix, "w", &lower);

        let padded: Vec<char> = std::iter::once('<')
            .chain(lower.chars())
            .chain(std::iter::once('>'))
            .collect();
        let mut gram = String::new();
        for &n in &self.config.char_ngram_orders {
            if n == 0 || n > padded.len() {
                continue;
            }
            let kind = format!("g{n}");
            for window in padded.windows(n) {
                gram.clear();
                gram.extend(window);
                self.emit(prefix, &kind, &gram);
            }
        }

        if self.config.use_shape_features {
            let len = surface.chars().count();
            let bucket = match len {
                0..=1 => "1",
                2 => "2",
                3..=4 => "3-4",
                5..=8 => "5-8",
                _ => "9+",
            };
            self.emit(prefix, "len", bucket);
            if surface.chars().any(|c| c.is_numeric()) {
                self.emit(prefix, "shape", "digit");
            }
            if surface.chars().all(|c| !c.is_alphanumeric()) {
                self.emit(prefix, "shape", "punct");
            }
        }
    }
}

/// Hashed feature ids for `tokens[index]`: the token's own surface, n-grams
/// and shape, plus the same for each neighbor in the window under a
/// relative-position prefix. Ids may repeat.
pub fn extract_features(tokens: &[Token], index: usize, config: &FeatureConfig) -> Vec<FeatureId> {
    let mut h = Hasher {
        config,
        buf: String::new(),
        out: Vec::with_capacity(64),
    };
    h.emit("0", "bias", "");
    h.token("0", &tokens[index].surface);
    let window = config.context_window as isize;
    for rel in -window..=window {
        if rel == 0 {
            continue;
        }
        let prefix = format!("{rel:+}");
        let at = index as isize + rel;
        if at < 0 {
            h.emit(&prefix, "pad", "BOS");
        } else if at as usize >= tokens.len() {
            h.emit(&prefix, "pad", "EOS");
        } else {
            h.token(&prefix, &tokens[at as usize].surface);
        }
    }
    h.out
}

/// Features for every token of a sequence.
pub fn extract_all(tokens: &[Token], config: &FeatureConfig) -> Vec<Vec<FeatureId>> {
    (0..tokens.len()).map(|i| extract_features(tokens, i, config)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textnorm::tokenize;

    #[test]
    fn deterministic() {
        let tokens = tokenize("هذا نص تجريبي: 42!");
        let cfg = FeatureConfig::default();
        for i in 0..tokens.len() {
            let a = extract_features(&tokens, i, &cfg);
            let b = extract_features(&tokens, i, &cfg);
            assert_eq!(a, b);
            assert!(a.iter().all(|&f| (f as usize) < cfg.hash_dim));
        }
    }

    #[test]
    fn window_zero_has_no_neighbor_features() {
        let tokens = tokenize("alpha beta gamma");
        let narrow = FeatureConfig {
            context_window: 0,
            ..FeatureConfig::default()
        };
        let wide = FeatureConfig::default();
        let own = extract_features(&tokens, 1, &narrow);
        let all = extract_features(&tokens, 1, &wide);
        assert!(own.len() < all.len());
        // the narrow set is exactly the position-0 prefix of the wide one
        assert_eq!(&all[..own.len()], &own[..]);
        // a token's own features do not depend on its neighbors
        let alone = tokenize("beta");
        assert_eq!(extract_features(&alone, 0, &narrow), own);
    }

    #[test]
    fn seeds_change_ids() {
        let tokens = tokenize("one two three four five six");
        let a = FeatureConfig::default();
        let b = FeatureConfig {
            seed: 17,
            ..FeatureConfig::default()
        };
        let differs = (0..tokens.len()).any(|i| extract_features(&tokens, i, &a) != extract_features(&tokens, i, &b));
        assert!(differs);
    }

    #[test]
    fn tiny_hash_space_stays_in_range() {
        let tokens = tokenize("x y z");
        let cfg = FeatureConfig {
            hash_dim: 2,
            ..FeatureConfig::default()
        };
        assert!(extract_all(&tokens, &cfg).iter().flatten().all(|&f| f < 2));
        assert!(FeatureConfig { hash_dim: 1, ..cfg.clone() }.validate().is_err());
        assert!(cfg.validate().is_ok());
    }
}

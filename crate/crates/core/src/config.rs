//! TOML configuration file with one section per pipeline stage.
//!
//! Every key is optional; missing keys take the built-in defaults. Character
//! sets are written as strings, e.g. `atom_delimiters = "་"`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atomizer::AtomizerConfig;
use crate::baseline::BaselineConfig;
use crate::error::{Error, Result};
use crate::tagger::TaggerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomizerSection {
    pub atom_delimiters: String,
    pub punctuation_atoms: String,
    pub presegment_chars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub beam: usize,
    pub in_dict_cost: f64,
    pub oov_cost: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpeSection {
    pub merges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaggerSection {
    pub layers: usize,
    pub hidden: usize,
    pub token_emb: usize,
    pub feat_emb: usize,
    pub vocab_size: usize,
    pub dropout: f64,
    pub batch: usize,
    pub epochs: usize,
    pub grad_scale: f64,
    pub clip_lo: f64,
    pub clip_hi: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub xavier_magnitude: f64,
    pub max_len: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub atomizer: AtomizerSection,
    pub baseline: BaselineSection,
    pub bpe: BpeSection,
    pub tagger: TaggerSection,
}

fn chars_to_string(set: &BTreeSet<char>) -> String {
    set.iter().collect()
}

fn string_to_chars(s: &str) -> BTreeSet<char> {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

impl Default for AtomizerSection {
    fn default() -> Self {
        let a = AtomizerConfig::default();
        AtomizerSection {
            atom_delimiters: chars_to_string(&a.atom_delimiters),
            punctuation_atoms: chars_to_string(&a.punctuation_atoms),
            presegment_chars: chars_to_string(&a.presegment_chars),
        }
    }
}

impl Default for BaselineSection {
    fn default() -> Self {
        let b = BaselineConfig::default();
        BaselineSection {
            beam: b.beam,
            in_dict_cost: b.in_dict_cost,
            oov_cost: b.oov_cost,
            epochs: b.epochs,
        }
    }
}

impl Default for BpeSection {
    fn default() -> Self {
        BpeSection { merges: 20_000 }
    }
}

impl Default for TaggerSection {
    fn default() -> Self {
        let t = TaggerConfig::default();
        TaggerSection {
            layers: t.n_layers,
            hidden: t.hidden,
            token_emb: t.token_emb,
            feat_emb: t.feat_emb,
            vocab_size: 18_559,
            dropout: t.dropout,
            batch: t.batch,
            epochs: 10,
            grad_scale: t.grad_scale,
            clip_lo: t.grad_clip.0,
            clip_hi: t.grad_clip.1,
            rho: t.rho,
            epsilon: t.epsilon,
            xavier_magnitude: t.xavier_magnitude,
            max_len: t.max_len,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn atomizer(&self) -> AtomizerConfig {
        AtomizerConfig {
            atom_delimiters: string_to_chars(&self.atomizer.atom_delimiters),
            punctuation_atoms: string_to_chars(&self.atomizer.punctuation_atoms),
            presegment_chars: string_to_chars(&self.atomizer.presegment_chars),
        }
    }

    pub fn baseline(&self) -> BaselineConfig {
        BaselineConfig {
            atomizer: self.atomizer(),
            beam: self.baseline.beam,
            in_dict_cost: self.baseline.in_dict_cost,
            oov_cost: self.baseline.oov_cost,
            epochs: self.baseline.epochs,
        }
    }

    pub fn tagger(&self) -> TaggerConfig {
        let t = &self.tagger;
        TaggerConfig {
            n_layers: t.layers,
            hidden: t.hidden,
            token_emb: t.token_emb,
            feat_emb: t.feat_emb,
            dropout: t.dropout,
            batch: t.batch,
            grad_scale: t.grad_scale,
            grad_clip: (t.clip_lo, t.clip_hi),
            rho: t.rho,
            epsilon: t.epsilon,
            xavier_magnitude: t.xavier_magnitude,
            max_len: t.max_len,
            ..TaggerConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = Config::parse("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.atomizer(), AtomizerConfig::default());
        assert_eq!(c.baseline(), BaselineConfig::default());
        assert_eq!(c.tagger(), TaggerConfig::default());
    }

    #[test]
    fn round_trip_and_overrides() {
        let c = Config::default();
        assert_eq!(Config::parse(&c.to_toml()).unwrap(), c);
        let c =
            Config::parse("[tagger]\nhidden = 64\n\n[atomizer]\natom_delimiters = \"\"\n").unwrap();
        assert_eq!(c.tagger().hidden, 64);
        assert_eq!(c.tagger().batch, 150);
        assert!(c.atomizer().atom_delimiters.is_empty());
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(Config::parse("[tagger]\nhiden = 3\n").is_err());
    }
}

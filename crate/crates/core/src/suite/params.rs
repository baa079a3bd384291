//! Parameter-set registry for the lattice KEM and signature schemes.
//!
//! Byte lengths follow FIPS 203 and FIPS 204 (final).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CryptoError;

/// ML-KEM parameter sets (FIPS 203).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KemParamSet {
    #[serde(rename = "ML-KEM-512")]
    MlKem512,
    #[serde(rename = "ML-KEM-768")]
    MlKem768,
    #[serde(rename = "ML-KEM-1024")]
    MlKem1024,
}

impl KemParamSet {
    pub const ALL: [KemParamSet; 3] = [Self::MlKem512, Self::MlKem768, Self::MlKem1024];

    pub const fn name(self) -> &'static str {
        match self {
            Self::MlKem512 => "ML-KEM-512",
            Self::MlKem768 => "ML-KEM-768",
            Self::MlKem1024 => "ML-KEM-1024",
        }
    }

    /// Encapsulation (public) key length.
    pub const fn ek_len(self) -> usize {
        match self {
            Self::MlKem512 => 800,
            Self::MlKem768 => 1184,
            Self::MlKem1024 => 1568,
        }
    }

    /// Decapsulation (private) key length.
    pub const fn dk_len(self) -> usize {
        match self {
            Self::MlKem512 => 1632,
            Self::MlKem768 => 2400,
            Self::MlKem1024 => 3168,
        }
    }

    pub const fn ct_len(self) -> usize {
        match self {
            Self::MlKem512 => 768,
            Self::MlKem768 => 1088,
            Self::MlKem1024 => 1568,
        }
    }

    pub const fn ss_len(self) -> usize {
        32
    }

    /// Infer the parameter set from an encapsulation key length.
    pub fn from_ek_len(len: usize) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.ek_len() == len)
    }

    /// Infer the parameter set from a decapsulation key length.
    pub fn from_dk_len(len: usize) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.dk_len() == len)
    }
}

impl fmt::Display for KemParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KemParamSet {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "mlkem512" | "512" => Ok(Self::MlKem512),
            "mlkem768" | "768" => Ok(Self::MlKem768),
            "mlkem1024" | "1024" => Ok(Self::MlKem1024),
            _ => Err(CryptoError::UnknownAlgorithm(s.to_string())),
        }
    }
}

/// Signature length of ML-DSA-65 as listed in the pre-final (round 3 /
/// draft) parameter tables. Kept for reference only; every length check uses
/// [`SigParamSet::sig_len`], which carries the FIPS 204 final value (3309).
pub const ML_DSA_65_DRAFT_SIG_LEN: usize = 3293;

/// ML-DSA parameter sets (FIPS 204).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SigParamSet {
    #[serde(rename = "ML-DSA-44")]
    MlDsa44,
    #[serde(rename = "ML-DSA-65")]
    MlDsa65,
    #[serde(rename = "ML-DSA-87")]
    MlDsa87,
}

impl SigParamSet {
    pub const ALL: [SigParamSet; 3] = [Self::MlDsa44, Self::MlDsa65, Self::MlDsa87];

    pub const fn name(self) -> &'static str {
        match self {
            Self::MlDsa44 => "ML-DSA-44",
            Self::MlDsa65 => "ML-DSA-65",
            Self::MlDsa87 => "ML-DSA-87",
        }
    }

    pub const fn vk_len(self) -> usize {
        match self {
            Self::MlDsa44 => 1312,
            Self::MlDsa65 => 1952,
            Self::MlDsa87 => 2592,
        }
    }

    pub const fn sk_len(self) -> usize {
        match self {
            Self::MlDsa44 => 2560,
            Self::MlDsa65 => 4032,
            Self::MlDsa87 => 4896,
        }
    }

    pub const fn sig_len(self) -> usize {
        match self {
            Self::MlDsa44 => 2420,
            Self::MlDsa65 => 3309,
            Self::MlDsa87 => 4627,
        }
    }

    pub fn from_sk_len(len: usize) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.sk_len() == len)
    }

    pub fn from_vk_len(len: usize) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.vk_len() == len)
    }
}

impl fmt::Display for SigParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SigParamSet {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "mldsa44" | "44" => Ok(Self::MlDsa44),
            "mldsa65" | "65" => Ok(Self::MlDsa65),
            "mldsa87" | "87" => Ok(Self::MlDsa87),
            _ => Err(CryptoError::UnknownAlgorithm(s.to_string())),
        }
    }
}

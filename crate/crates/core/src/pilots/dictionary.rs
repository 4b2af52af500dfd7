use std::collections::HashSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matlin::{c64, CMatrix, C64};
use crate::random::complex_gaussian;

pub const DICTIONARY_SIZE: usize = 300;

/// Symbol alphabet of a GSRTM dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DictionaryKind {
    /// i.i.d. CN(0, 1) entries.
    Gaussian,
    Qam4,
    Qam16,
}

impl DictionaryKind {
    pub fn name(&self) -> &'static str {
        match self {
            DictionaryKind::Gaussian => "gauss",
            DictionaryKind::Qam4 => "qam4",
            DictionaryKind::Qam16 => "qam16",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gauss" | "gaussian" => Ok(DictionaryKind::Gaussian),
            "qam4" => Ok(DictionaryKind::Qam4),
            "qam16" => Ok(DictionaryKind::Qam16),
            other => Err(Error::Parse(format!("unknown dictionary `{other}`"))),
        }
    }

    /// Unit average energy constellation, or `None` for the Gaussian case.
    pub fn constellation(&self) -> Option<Vec<C64>> {
        let levels: &[f64] = match self {
            DictionaryKind::Gaussian => return None,
            DictionaryKind::Qam4 => &[-1.0, 1.0],
            DictionaryKind::Qam16 => &[-3.0, -1.0, 1.0, 3.0],
        };
        let energy = 2.0 * levels.iter().map(|l| l * l).sum::<f64>() / levels.len() as f64;
        let scale = energy.sqrt().recip();
        Some(
            levels
                .iter()
                .flat_map(|&re| levels.iter().map(move |&im| c64(re * scale, im * scale)))
                .collect(),
        )
    }
}

/// `rows` distinct candidate pilot rows of length `len`. A finite alphabet
/// with fewer than `rows` distinct words yields all of them that were drawn.
pub fn make_dictionary<R: Rng + ?Sized>(kind: DictionaryKind, rows: usize, len: usize, rng: &mut R) -> CMatrix {
    let Some(points) = kind.constellation() else {
        // Continuous draws are distinct with probability one.
        return complex_gaussian(rng, len, rows).transpose();
    };
    let possible = (points.len() as f64).powi(len as i32);
    let target = if possible < rows as f64 { possible as usize } else { rows };
    let mut seen: HashSet<Vec<u8>> = HashSet::with_capacity(target);
    let mut words = Vec::with_capacity(target);
    while words.len() < target {
        let word: Vec<u8> = (0..len).map(|_| rng.random_range(0..points.len()) as u8).collect();
        if seen.insert(word.clone()) {
            words.push(word);
        }
    }
    CMatrix::from_fn(words.len(), len, |r, c| points[words[r][c] as usize])
}

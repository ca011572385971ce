//! JSON file formats for operators and channels.
//!
//! Matrices are stored as explicit real and imaginary parts so fixtures stay
//! diffable and deterministic; both types round-trip through the serializer
//! without changing a digit.

use az_renyi::channels::{make_channel, ChannelSpec, QuantumMap};
use az_renyi::CMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// A square complex matrix, row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let part = |f: fn(&Complex<f64>) -> f64| -> Vec<Vec<f64>> {
            (0..dim)
                .map(|r| (0..dim).map(|c| f(&m[(r, c)])).collect())
                .collect()
        };
        MatrixFile {
            dim,
            re: part(|v| v.re),
            im: part(|v| v.im),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix, String> {
        if self.dim == 0 {
            return Err("matrix dimension must be positive".into());
        }
        for (name, rows) in [("re", &self.re), ("im", &self.im)] {
            if rows.len() != self.dim || rows.iter().any(|r| r.len() != self.dim) {
                return Err(format!("{name} must be a {0} x {0} array", self.dim));
            }
        }
        Ok(CMatrix::from_fn(self.dim, self.dim, |r, c| {
            Complex::new(self.re[r][c], self.im[r][c])
        }))
    }
}

/// A channel on one matrix algebra: explicit Kraus or transfer data, or a
/// named construction. Every kind this format carries has equal input and
/// output dimensions; rectangular maps stay a library-level feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelFile {
    Kraus { dim: usize, kraus: Vec<MatrixFile> },
    Transfer { dim: usize, matrix: MatrixFile },
    Identity { dim: usize },
    Depolarizing { dim: usize, strength: f64 },
    Pinching { dim: usize, blocks: Vec<Vec<usize>> },
    Unitary { matrix: MatrixFile },
    RandomCptp { dim: usize, seed: u64 },
}

impl ChannelFile {
    pub fn to_map(&self) -> Result<QuantumMap, String> {
        let lib = |e: az_renyi::Error| e.to_string();
        match self {
            ChannelFile::Kraus { dim, kraus } => {
                if kraus.is_empty() {
                    return Err("kraus list is empty".into());
                }
                let ops = kraus
                    .iter()
                    .map(|m| {
                        if m.dim != *dim {
                            return Err(format!(
                                "kraus operator has dim {} but the channel declares {dim}",
                                m.dim
                            ));
                        }
                        m.to_matrix()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                QuantumMap::from_kraus(ops, *dim, *dim).map_err(lib)
            }
            ChannelFile::Transfer { dim, matrix } => {
                if matrix.dim != dim * dim {
                    return Err(format!(
                        "transfer matrix has dim {} but should be dim^2 = {}",
                        matrix.dim,
                        dim * dim
                    ));
                }
                QuantumMap::from_transfer(matrix.to_matrix()?, *dim, *dim).map_err(lib)
            }
            ChannelFile::Identity { dim } => {
                make_channel(&ChannelSpec::Identity(*dim)).map_err(lib)
            }
            ChannelFile::Depolarizing { dim, strength } => make_channel(&ChannelSpec::Depolarizing {
                dim: *dim,
                strength: *strength,
            })
            .map_err(lib),
            ChannelFile::Pinching { dim, blocks } => {
                let total: usize = blocks.iter().map(|b| b.len()).sum();
                if total != *dim {
                    return Err(format!(
                        "pinching blocks cover {total} indices but the channel declares dim {dim}"
                    ));
                }
                make_channel(&ChannelSpec::Pinching(blocks.clone())).map_err(lib)
            }
            ChannelFile::Unitary { matrix } => {
                make_channel(&ChannelSpec::UnitaryConj(matrix.to_matrix()?)).map_err(lib)
            }
            ChannelFile::RandomCptp { dim, seed } => make_channel(&ChannelSpec::RandomCptp {
                dim_in: *dim,
                dim_out: *dim,
                seed: *seed,
            })
            .map_err(lib),
        }
    }

    /// Renders a map whose Kraus operators are known (and square) in the
    /// explicit form, so generated channels reload without reseeding.
    pub fn from_kraus_map(map: &QuantumMap) -> Option<Self> {
        if map.dim_in() != map.dim_out() {
            return None;
        }
        let kraus = map.kraus()?;
        Some(ChannelFile::Kraus {
            dim: map.dim_in(),
            kraus: kraus.iter().map(MatrixFile::from_matrix).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_file_round_trips_bit_exactly() {
        let file = MatrixFile {
            dim: 2,
            re: vec![vec![0.625, 0.15], vec![0.15, 0.375]],
            im: vec![vec![0.0, 0.1], vec![-0.1, 0.0]],
        };
        let text = serde_json::to_string_pretty(&file).unwrap();
        let back: MatrixFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
    }

    #[test]
    fn channel_file_round_trips_bit_exactly() {
        let text = serde_json::to_string_pretty(&ChannelFile::Depolarizing {
            dim: 3,
            strength: 0.1,
        })
        .unwrap();
        let back: ChannelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
    }

    #[test]
    fn ragged_matrix_is_rejected() {
        let file = MatrixFile {
            dim: 2,
            re: vec![vec![1.0, 0.0], vec![0.0]],
            im: vec![vec![0.0; 2]; 2],
        };
        assert!(file.to_matrix().is_err());
    }

    #[test]
    fn kind_tags_use_snake_case() {
        let text = serde_json::to_string(&ChannelFile::RandomCptp { dim: 2, seed: 7 }).unwrap();
        assert!(text.contains("\"kind\":\"random_cptp\""));
    }

    #[test]
    fn named_kinds_build_valid_maps() {
        let pinching = ChannelFile::Pinching {
            dim: 3,
            blocks: vec![vec![0, 1], vec![2]],
        };
        let map = pinching.to_map().unwrap();
        assert!(map.flags().completely_positive);
        assert_eq!(map.dim_in(), 3);

        let mismatch = ChannelFile::Pinching {
            dim: 4,
            blocks: vec![vec![0, 1], vec![2]],
        };
        assert!(mismatch.to_map().is_err());
    }
}

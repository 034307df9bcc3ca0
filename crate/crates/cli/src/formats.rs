//! On-disk formats: JSON descriptions of states, probes, and channels, plus
//! CSV number formatting.
//!
//! Complex numbers are written as explicit `[re, im]` pairs so the files
//! carry no language-specific complex literals. CSV values are printed with
//! 17 significant digits, which round-trips IEEE doubles exactly.

use std::fs;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use gqfi::{
    CMat, CVec, ChannelSpec, GaussianState, ProbeMode, ProbeSpec, RMat, RVec, RealGaussianState,
};

use crate::CliError;

// ---------------------------------------------------------------------------
// State files
// ---------------------------------------------------------------------------

/// A Gaussian state on disk.
///
/// `representation` selects how the numbers are read:
/// - `"complex"`: `displacement` holds the N per-mode ladder means and
///   `covariance.rows` the full 2N x 2N ladder-form covariance;
/// - `"real"`: both are the quadrature form (all x components first, then
///   all p), 2N entries/rows whose imaginary parts must be zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub modes: usize,
    pub representation: String,
    pub displacement: Vec<[f64; 2]>,
    pub covariance: CovarianceRows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceRows {
    pub rows: Vec<Vec<[f64; 2]>>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn complex_matrix(rows: &[Vec<[f64; 2]>], dim: usize, what: &str) -> Result<CMat, CliError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::input(format!(
            "{what} must be a {dim} x {dim} matrix of [re, im] pairs"
        )));
    }
    Ok(CMat::from_fn(dim, dim, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

fn require_real(pairs: &[[f64; 2]], what: &str) -> Result<Vec<f64>, CliError> {
    for p in pairs {
        if p[1] != 0.0 {
            return Err(CliError::input(format!(
                "{what} of a \"real\"-representation state must have zero imaginary parts"
            )));
        }
    }
    Ok(pairs.iter().map(|p| p[0]).collect())
}

fn state_from_file(file: &StateFile) -> Result<GaussianState, CliError> {
    let n = file.modes;
    if n == 0 {
        return Err(CliError::input("state must have at least one mode"));
    }
    match file.representation.as_str() {
        "complex" => {
            if file.displacement.len() != n {
                return Err(CliError::input(format!(
                    "complex-representation displacement must list {n} per-mode entries, got {}",
                    file.displacement.len()
                )));
            }
            let sigma = complex_matrix(&file.covariance.rows, 2 * n, "covariance")?;
            let d_tilde: Vec<C64> = file
                .displacement
                .iter()
                .map(|p| C64::new(p[0], p[1]))
                .collect();
            GaussianState::new(n, CVec::zeros(2 * n), sigma)
                .and_then(|s| s.with_displacement_tilde(&d_tilde))
                .map_err(CliError::from_input_error)
        }
        "real" => {
            if file.displacement.len() != 2 * n {
                return Err(CliError::input(format!(
                    "real-representation displacement must list {} quadrature entries, got {}",
                    2 * n,
                    file.displacement.len()
                )));
            }
            let d = require_real(&file.displacement, "displacement")?;
            let mut sig = RMat::zeros(2 * n, 2 * n);
            if file.covariance.rows.len() != 2 * n
                || file.covariance.rows.iter().any(|r| r.len() != 2 * n)
            {
                return Err(CliError::input(format!(
                    "covariance must be a {0} x {0} matrix of [re, im] pairs",
                    2 * n
                )));
            }
            for (i, row) in file.covariance.rows.iter().enumerate() {
                let vals = require_real(row, "covariance")?;
                for (j, v) in vals.into_iter().enumerate() {
                    sig[(i, j)] = v;
                }
            }
            let real = RealGaussianState::new(RVec::from_vec(d), sig)
                .map_err(CliError::from_input_error)?;
            GaussianState::from_real(&real).map_err(CliError::from_input_error)
        }
        other => Err(CliError::input(format!(
            "unknown representation {other:?}; expected \"complex\" or \"real\""
        ))),
    }
}

pub fn load_state(path: &Path) -> Result<GaussianState, CliError> {
    let file: StateFile = read_json(path)?;
    state_from_file(&file)
        .map_err(|e| CliError::input(format!("{}: {}", path.display(), e.message)))
}

/// Serialize a state in the complex representation (the lossless one).
pub fn state_to_file(state: &GaussianState) -> StateFile {
    let n = state.modes();
    let dt = state.displacement_tilde();
    let sigma = state.covariance();
    StateFile {
        modes: n,
        representation: "complex".into(),
        displacement: (0..n).map(|i| [dt[i].re, dt[i].im]).collect(),
        covariance: CovarianceRows {
            rows: (0..2 * n)
                .map(|i| {
                    (0..2 * n)
                        .map(|j| [sigma[(i, j)].re, sigma[(i, j)].im])
                        .collect()
                })
                .collect(),
        },
    }
}

// ---------------------------------------------------------------------------
// Probe and channel files
// ---------------------------------------------------------------------------

/// One probe mode: thermal occupation, squeezing, squeezing angle, and the
/// complex displacement, all defaulting to zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeModeFile {
    #[serde(default)]
    pub n_th: f64,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub displacement: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeFile {
    pub modes: Vec<ProbeModeFile>,
    #[serde(default)]
    pub tms: Option<f64>,
}

pub fn load_probe(path: &Path) -> Result<ProbeSpec, CliError> {
    let file: ProbeFile = read_json(path)?;
    Ok(ProbeSpec {
        modes: file
            .modes
            .iter()
            .map(|m| ProbeMode {
                n_th: m.n_th,
                r: m.r,
                theta: m.theta,
                displacement: C64::new(m.displacement[0], m.displacement[1]),
            })
            .collect(),
        tms: file.tms,
    })
}

/// A channel descriptor, tagged by `kind`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelFile {
    Squeeze { mode: usize },
    Rotate { mode: usize },
    Displace { mode: usize, rate: [f64; 2] },
    TwoModeSqueeze { modes: [usize; 2] },
}

pub fn load_channel(path: &Path) -> Result<ChannelSpec, CliError> {
    let file: ChannelFile = read_json(path)?;
    Ok(match file {
        ChannelFile::Squeeze { mode } => ChannelSpec::Squeeze { mode },
        ChannelFile::Rotate { mode } => ChannelSpec::Rotate { mode },
        ChannelFile::Displace { mode, rate } => ChannelSpec::Displace {
            mode,
            rate: C64::new(rate[0], rate[1]),
        },
        ChannelFile::TwoModeSqueeze { modes } => ChannelSpec::TwoModeSqueeze {
            modes: (modes[0], modes[1]),
        },
    })
}

// ---------------------------------------------------------------------------
// CSV helpers
// ---------------------------------------------------------------------------

/// 17 significant digits: enough to reproduce any f64 bit-exactly.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Make free text safe for an unquoted CSV field.
pub fn csv_text(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

#[cfg(test)]
mod tests {
    use super::*;
    use gqfi::build_probe;

    fn tmp_json(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write as _;
        let mut f = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn complex_state_round_trips_bit_exactly() {
        let spec = ProbeSpec::single(ProbeMode {
            n_th: 0.3,
            r: 0.7,
            theta: 0.4,
            displacement: C64::new(0.5, -0.2),
        });
        let state = build_probe(&spec).unwrap();
        let file = state_to_file(&state);
        let json = serde_json::to_string_pretty(&file).unwrap();
        let parsed: StateFile = serde_json::from_str(&json).unwrap();
        let back = state_from_file(&parsed).unwrap();
        assert_eq!(state.displacement(), back.displacement());
        assert_eq!(state.covariance(), back.covariance());
    }

    #[test]
    fn real_state_matches_quadrature_conversion() {
        let spec = ProbeSpec::single(ProbeMode {
            n_th: 0.2,
            r: 0.5,
            theta: 0.9,
            displacement: C64::new(-0.3, 0.8),
        });
        let state = build_probe(&spec).unwrap();
        let real = state.to_real();
        let file = StateFile {
            modes: 1,
            representation: "real".into(),
            displacement: real.d.iter().map(|&v| [v, 0.0]).collect(),
            covariance: CovarianceRows {
                rows: (0..2)
                    .map(|i| (0..2).map(|j| [real.sigma[(i, j)], 0.0]).collect())
                    .collect(),
            },
        };
        let back = state_from_file(&file).unwrap();
        let diff = (state.covariance() - back.covariance()).norm();
        assert!(diff < 1e-14, "covariance differs by {diff}");
        let ddiff = (state.displacement() - back.displacement()).norm();
        assert!(ddiff < 1e-14, "displacement differs by {ddiff}");
    }

    #[test]
    fn bad_state_files_are_input_errors() {
        // Unknown representation.
        let f = StateFile {
            modes: 1,
            representation: "polar".into(),
            displacement: vec![[0.0, 0.0]],
            covariance: CovarianceRows {
                rows: vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]],
            },
        };
        assert_eq!(state_from_file(&f).unwrap_err().code, 2);

        // Wrong covariance shape.
        let f = StateFile {
            modes: 1,
            representation: "complex".into(),
            displacement: vec![[0.0, 0.0]],
            covariance: CovarianceRows {
                rows: vec![vec![[1.0, 0.0]]],
            },
        };
        assert_eq!(state_from_file(&f).unwrap_err().code, 2);

        // Nonzero imaginary part in a real-representation file.
        let f = StateFile {
            modes: 1,
            representation: "real".into(),
            displacement: vec![[0.0, 0.5], [0.0, 0.0]],
            covariance: CovarianceRows {
                rows: vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]],
            },
        };
        assert_eq!(state_from_file(&f).unwrap_err().code, 2);

        // Unphysical covariance (below vacuum).
        let f = StateFile {
            modes: 1,
            representation: "complex".into(),
            displacement: vec![[0.0, 0.0]],
            covariance: CovarianceRows {
                rows: vec![vec![[0.5, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [0.5, 0.0]]],
            },
        };
        assert_eq!(state_from_file(&f).unwrap_err().code, 2);
    }

    #[test]
    fn probe_file_defaults_missing_fields_to_zero() {
        let f = tmp_json(r#"{"modes": [{"r": 0.8}]}"#);
        let spec = load_probe(f.path()).unwrap();
        assert_eq!(spec.modes.len(), 1);
        assert_eq!(spec.modes[0].r, 0.8);
        assert_eq!(spec.modes[0].n_th, 0.0);
        assert_eq!(spec.modes[0].displacement, C64::ZERO);
        assert!(spec.tms.is_none());
    }

    #[test]
    fn channel_kinds_parse() {
        let f = tmp_json(r#"{"kind": "squeeze", "mode": 0}"#);
        assert!(matches!(
            load_channel(f.path()).unwrap(),
            ChannelSpec::Squeeze { mode: 0 }
        ));
        let f = tmp_json(r#"{"kind": "displace", "mode": 1, "rate": [0.5, -0.25]}"#);
        match load_channel(f.path()).unwrap() {
            ChannelSpec::Displace { mode, rate } => {
                assert_eq!(mode, 1);
                assert_eq!(rate, C64::new(0.5, -0.25));
            }
            other => panic!("parsed {other:?}"),
        }
        let f = tmp_json(r#"{"kind": "two_mode_squeeze", "modes": [0, 1]}"#);
        assert!(matches!(
            load_channel(f.path()).unwrap(),
            ChannelSpec::TwoModeSqueeze { modes: (0, 1) }
        ));
        let f = tmp_json(r#"{"kind": "amplify", "mode": 0}"#);
        assert_eq!(load_channel(f.path()).unwrap_err().code, 2);
    }

    #[test]
    fn malformed_json_is_an_input_error() {
        let f = tmp_json("{ not json");
        assert_eq!(load_probe(f.path()).unwrap_err().code, 2);
    }

    #[test]
    fn csv_number_format_round_trips() {
        for &v in &[2.0, -1.0 / 3.0, 86.44599495961909, 1e-300, 0.0] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s} does not round-trip");
        }
        assert_eq!(fmt17(2.0), "2.0000000000000000e0");
    }

    #[test]
    fn csv_text_strips_separators() {
        assert_eq!(csv_text("a,b\nc"), "a;b;c");
    }
}

//! Family strings such as `werner:0.5` or `random:2x2:3:7`.

use qcorr::families::{BellKind, StateFamily};
use qcorr::linalg::{CMatrix, C64};
use qcorr::{DensityMatrix, SubsystemLayout};

use crate::error::{CliError, Result};

/// Placeholder for the free parameter in sweep templates.
pub const PLACEHOLDER: &str = "{}";

#[derive(Debug, Clone)]
pub struct ParsedFamily {
    pub name: String,
    pub params: String,
    pub family: StateFamily,
}

impl ParsedFamily {
    pub fn instantiate(&self) -> Result<DensityMatrix> {
        Ok(self.family.instantiate()?)
    }
}

fn bad(text: &str, why: &str) -> CliError {
    CliError::Usage(format!("family '{text}': {why}"))
}

fn number(text: &str, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| bad(text, &format!("'{s}' is not a number")))
}

fn count(text: &str, s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| bad(text, &format!("'{s}' is not a nonnegative integer")))
}

fn dims(text: &str, s: &str) -> Result<Vec<usize>> {
    s.split('x').map(|d| count(text, d)).collect()
}

fn numbers(text: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|v| number(text, v)).collect()
}

/// `(I + r·σ)/2`.
fn bloch_qubit(text: &str, r: &[f64]) -> Result<DensityMatrix> {
    if r.len() != 3 {
        return Err(bad(text, "Bloch vectors have three components"));
    }
    let half = |re: f64, im: f64| C64::new(re / 2.0, im / 2.0);
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[half(1.0 + r[2], 0.0), half(r[0], -r[1]), half(r[0], r[1]), half(1.0 - r[2], 0.0)],
    );
    Ok(DensityMatrix::validate(m, SubsystemLayout::qubits(1)?)?)
}

/// Parses `name:params`. Recognized names:
///
/// | name | params | state |
/// |---|---|---|
/// | `bell` | `phi+`, `phi-`, `psi+`, `psi-` | Bell state |
/// | `werner` | `p` | `p Φ⁺ + (1−p) I/4` |
/// | `ghz`, `w` | `n` | `n`-qubit GHZ or W state |
/// | `cc` | `DAxDB:p00,p01,…` | diagonal joint distribution, row-major |
/// | `cq` | `p:theta` | `p|00⟩⟨00| + (1−p)|1⟩⟨1|⊗|θ⟩⟨θ|`, `|θ⟩ = cos(θ/2)|0⟩ + sin(θ/2)|1⟩` |
/// | `product` | `x,y,z/x,y,z/…` | product of qubits with the given Bloch vectors |
/// | `random` | `DAxDB:rank:seed` | seeded random state of the given rank |
pub fn parse_family(text: &str) -> Result<ParsedFamily> {
    let (name, params) = text.split_once(':').ok_or_else(|| bad(text, "expected name:params"))?;
    let name = name.trim().to_ascii_lowercase();
    let family = match name.as_str() {
        "bell" => StateFamily::Bell(match params.trim().to_ascii_lowercase().as_str() {
            "phi+" => BellKind::PhiPlus,
            "phi-" => BellKind::PhiMinus,
            "psi+" => BellKind::PsiPlus,
            "psi-" => BellKind::PsiMinus,
            _ => return Err(bad(text, "expected phi+, phi-, psi+ or psi-")),
        }),
        "werner" => StateFamily::Werner(number(text, params)?),
        "ghz" => StateFamily::Ghz(count(text, params)?),
        "w" => StateFamily::WState(count(text, params)?),
        "cc" => {
            let (d, probs) = params.split_once(':').ok_or_else(|| bad(text, "expected DAxDB:probabilities"))?;
            StateFamily::ClassicalClassical {
                dims: dims(text, d)?,
                probs: numbers(text, probs)?,
            }
        }
        "cq" => {
            let v = params.split(':').map(|x| number(text, x)).collect::<Result<Vec<f64>>>()?;
            let [p, theta] = v[..] else {
                return Err(bad(text, "expected p:theta"));
            };
            let qubit = SubsystemLayout::qubits(1)?;
            let zero = DensityMatrix::from_diagonal(&[1.0, 0.0], qubit.clone())?;
            let psi = qcorr::linalg::CVector::from_vec(vec![
                C64::new((theta / 2.0).cos(), 0.0),
                C64::new((theta / 2.0).sin(), 0.0),
            ]);
            StateFamily::ClassicalQuantum {
                probs: vec![p, 1.0 - p],
                states: vec![zero, DensityMatrix::from_pure(&psi, qubit)?],
            }
        }
        "product" => {
            let factors = params
                .split('/')
                .map(|r| bloch_qubit(text, &numbers(text, r)?))
                .collect::<Result<Vec<_>>>()?;
            StateFamily::Product(factors)
        }
        "random" => {
            let parts: Vec<&str> = params.split(':').collect();
            let [d, rank, seed] = parts[..] else {
                return Err(bad(text, "expected DAxDB:rank:seed"));
            };
            StateFamily::RandomMixed {
                dims: dims(text, d)?,
                rank: count(text, rank)?,
                seed: seed.trim().parse().map_err(|_| bad(text, "seed must be an integer"))?,
            }
        }
        _ => return Err(bad(text, "unknown family")),
    };
    Ok(ParsedFamily {
        name,
        params: params.trim().to_string(),
        family,
    })
}

/// Replaces the single placeholder in `template` with `value`.
pub fn fill_template(template: &str, value: f64) -> Result<String> {
    match template.matches(PLACEHOLDER).count() {
        1 => Ok(template.replace(PLACEHOLDER, &format_parameter(value))),
        n => Err(CliError::Usage(format!(
            "template '{template}' needs exactly one {PLACEHOLDER} placeholder, found {n}"
        ))),
    }
}

/// Shortest decimal form after rounding to 12 significant digits, so that
/// grid points like 0.30000000000000004 print as 0.3 and 2.0 as 2.
pub fn format_parameter(value: f64) -> String {
    let rounded: f64 = format!("{value:.11e}").parse().unwrap_or(value);
    format!("{rounded}")
}

//! File formats: the inequality CSV, key/record JSON dumps, recovered
//! keys and sweep curves.
//!
//! Inequality rows are `relation,tau,constant,c_0..c_{2ln-1}` with no
//! header. Key dumps are JSON with integer arrays in coefficient order.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::campaign::{Inequality, Relation};
use crate::error::{Error, Result};
use crate::kem::{expand_matrix, EncapsulationRecord, KeyPair};
use crate::params::Scheme;
use crate::solver::SolveResult;

pub fn write_inequalities_csv(path: &Path, inequalities: &[Inequality]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for ineq in inequalities {
        let rel = match ineq.relation {
            Relation::Ge => "GE",
            Relation::Lt => "LT",
        };
        write!(out, "{rel},{},{}", ineq.tau, ineq.constant)?;
        for c in &ineq.coeffs {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_inequalities_csv(path: &Path) -> Result<Vec<Inequality>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    let mut width = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let parse_err = |reason: &str| Error::Parse { line: lineno, reason: reason.into() };
        let relation = match fields.next().map(str::trim) {
            Some("GE") => Relation::Ge,
            Some("LT") => Relation::Lt,
            other => {
                return Err(parse_err(&format!(
                    "expected relation GE or LT, got {other:?}"
                )))
            }
        };
        let mut next_int = |name: &str| -> Result<i32> {
            fields
                .next()
                .ok_or_else(|| parse_err(&format!("missing {name}")))?
                .trim()
                .parse::<i32>()
                .map_err(|e| parse_err(&format!("bad {name}: {e}")))
        };
        let tau = next_int("tau")?;
        let constant = next_int("constant")?;
        let coeffs = fields
            .map(|f| {
                f.trim()
                    .parse::<i16>()
                    .map_err(|e| parse_err(&format!("bad coefficient: {e}")))
            })
            .collect::<Result<Vec<i16>>>()?;
        if coeffs.is_empty() {
            return Err(parse_err("row has no coefficients"));
        }
        match width {
            None => width = Some(coeffs.len()),
            Some(w) if w != coeffs.len() => {
                return Err(parse_err(&format!(
                    "row has {} coefficients, earlier rows had {w}",
                    coeffs.len()
                )));
            }
            _ => {}
        }
        out.push(Inequality { relation, tau, constant, coeffs });
    }
    Ok(out)
}

/// Ground-truth key material plus any retained encapsulation records.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyDump {
    pub version: u32,
    pub scheme: Scheme,
    pub seed: u64,
    #[serde(rename = "A_seed")]
    pub a_seed: u64,
    pub s: Vec<Vec<i16>>,
    pub e: Vec<Vec<i16>>,
    pub b: Vec<Vec<u16>>,
    pub records: Vec<EncapsulationRecord>,
}

impl KeyDump {
    pub fn from_keypair(kp: &KeyPair, records: Vec<EncapsulationRecord>) -> KeyDump {
        KeyDump {
            version: 1,
            scheme: kp.params.name,
            seed: kp.seed,
            a_seed: kp.a_seed,
            s: kp.s.iter().map(|p| p.coeffs.clone()).collect(),
            e: kp.e.iter().map(|p| p.coeffs.clone()).collect(),
            b: kp.b.iter().map(|p| p.coeffs.clone()).collect(),
            records,
        }
    }

    /// Rebuilds the full key pair; the public matrix is regenerated from
    /// its seed.
    pub fn to_keypair(&self) -> Result<KeyPair> {
        let params = self.scheme.params();
        if self.s.len() != params.l || self.e.len() != params.l || self.b.len() != params.l {
            return Err(Error::config("key dump rank does not match scheme"));
        }
        Ok(KeyPair {
            params,
            seed: self.seed,
            a_seed: self.a_seed,
            matrix_a: expand_matrix(&params, self.a_seed),
            b: self
                .b
                .iter()
                .map(|c| crate::ring::Poly { coeffs: c.clone() })
                .collect(),
            s: self
                .s
                .iter()
                .map(|c| crate::ring::SignedPoly { coeffs: c.clone() })
                .collect(),
            e: self
                .e
                .iter()
                .map(|c| crate::ring::SignedPoly { coeffs: c.clone() })
                .collect(),
        })
    }

    /// The unknown vector (e || s) the solver works against.
    pub fn truth_vector(&self) -> Vec<i8> {
        self.e
            .iter()
            .chain(&self.s)
            .flat_map(|p| p.iter().map(|&c| c as i8))
            .collect()
    }
}

/// A solver output in key shape.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveredKey {
    pub version: u32,
    pub scheme: Scheme,
    pub e: Vec<Vec<i8>>,
    pub s: Vec<Vec<i8>>,
    pub confidence: Vec<f64>,
    pub iterations: u32,
    pub converged: bool,
}

impl RecoveredKey {
    pub fn from_solution(scheme: Scheme, result: &SolveResult) -> Result<RecoveredKey> {
        let params = scheme.params();
        if result.key_guess.len() != params.unknowns() {
            return Err(Error::LengthMismatch(
                result.key_guess.len(),
                params.unknowns(),
            ));
        }
        let split = |flat: &[i8], part: usize| -> Vec<Vec<i8>> {
            (0..params.l)
                .map(|b| {
                    let start = (part * params.l + b) * params.n;
                    flat[start..start + params.n].to_vec()
                })
                .collect()
        };
        Ok(RecoveredKey {
            version: 1,
            scheme,
            e: split(&result.key_guess, 0),
            s: split(&result.key_guess, 1),
            confidence: result.confidence.clone(),
            iterations: result.iterations,
            converged: result.converged,
        })
    }

    pub fn guess_vector(&self) -> Vec<i8> {
        self.e
            .iter()
            .chain(&self.s)
            .flat_map(|p| p.iter().copied())
            .collect()
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer(&mut out, value)?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(fs::File::open(path)?))?)
}

/// One success-curve sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub inequalities: u64,
    pub success_fraction: f64,
    pub iterations: u32,
    pub seed: u64,
}

pub fn write_sweep_csv(path: &Path, points: &[SweepPoint]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "inequalities,success_fraction,iterations,seed")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{}",
            p.inequalities, p.success_fraction, p.iterations, p.seed
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepPoint>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if lineno == 1 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                reason: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str, name: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                reason: format!("bad {name}: {e}"),
            })
        };
        out.push(SweepPoint {
            inequalities: parse(fields[0], "inequalities")? as u64,
            success_fraction: parse(fields[1], "success_fraction")?,
            iterations: parse(fields[2], "iterations")? as u32,
            seed: parse(fields[3], "seed")? as u64,
        });
    }
    Ok(out)
}

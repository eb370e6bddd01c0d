//! Problem specifications read from JSON.

use std::collections::BTreeMap;

use polydom_core::berezin::WordPair;
use polydom_core::cpmap::CpTuple;
use polydom_core::gen::Instance;
use polydom_core::linalg::{from_rows, to_rows, CMat};
use polydom_core::poly::NcPoly;
use polydom_core::words::{PositiveSymbol, Word};
use polydom_core::{Error, Result, Tolerances};
use serde::{Deserialize, Serialize};

pub type MatrixRows = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoeffSpec {
    pub word: Word,
    pub a: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymbolSpec {
    pub arity: usize,
    pub coeffs: Vec<CoeffSpec>,
    #[serde(default = "one")]
    pub m: u32,
}

fn one() -> u32 {
    1
}

impl SymbolSpec {
    pub fn symbol(&self) -> PositiveSymbol {
        PositiveSymbol::new(self.arity, self.coeffs.iter().map(|c| (c.word.clone(), c.a)))
    }

    pub fn from_symbol(f: &PositiveSymbol, m: u32) -> Self {
        SymbolSpec {
            arity: f.arity,
            coeffs: f
                .terms()
                .map(|(w, a)| CoeffSpec {
                    word: w.clone(),
                    a,
                })
                .collect(),
            m,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VnMode {
    #[default]
    Polydisc,
    Model,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VnParams {
    #[serde(default)]
    pub mode: VnMode,
    pub matrix: Vec<Vec<NcPoly>>,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    256
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trunc_degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub r_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    /// Positive matrix `R` (kernel, solve, rota embedding, cpsim).
    #[serde(default, rename = "R", alias = "r", skip_serializing_if = "Option::is_none")]
    pub r: Option<MatrixRows>,
    /// Cone element `X`, or the positive `D` of the transform sweep and vn model mode.
    #[serde(default, rename = "X", alias = "x", skip_serializing_if = "Option::is_none")]
    pub x: Option<MatrixRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vn: Option<VnParams>,
    /// Word pairs `(α, β)` for transform values `S_α S_β^*`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<WordPair>,
    /// Run the model embedding alongside the Rota conjugation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embed: Option<bool>,
    /// Include sparse model triplets in the model report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub export: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arities: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub symbols: Vec<SymbolSpec>,
    /// `operators[i][j]` is `A_{i+1,j+1}` as rows of `[re, im]` pairs.
    pub operators: Vec<Vec<MatrixRows>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<NcPoly>,
    /// Treat the operators as raw Kraus families with polyball symbols.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub kraus: bool,
    #[serde(default)]
    pub params: Params,
}

impl ProblemSpec {
    pub fn from_instance(inst: &Instance, seed: u64) -> Self {
        ProblemSpec {
            k: Some(inst.symbols.len()),
            arities: Some(inst.symbols.iter().map(|f| f.arity).collect()),
            dim: inst.ops.first().and_then(|f| f.first()).map(|a| a.nrows()),
            symbols: inst
                .symbols
                .iter()
                .zip(&inst.m)
                .map(|(f, &m)| SymbolSpec::from_symbol(f, m))
                .collect(),
            operators: inst.ops.iter().map(|f| f.iter().map(to_rows).collect()).collect(),
            constraints: inst.constraints.clone(),
            kraus: false,
            params: Params {
                seed: Some(seed),
                ..Params::default()
            },
        }
    }

    pub fn m(&self) -> Vec<u32> {
        self.symbols.iter().map(|s| s.m).collect()
    }

    pub fn tolerances(&self) -> Tolerances {
        self.params.tolerances.unwrap_or_default()
    }

    pub fn operators(&self) -> Result<Vec<Vec<CMat>>> {
        self.operators
            .iter()
            .map(|f| f.iter().map(|a| from_rows(a)).collect())
            .collect()
    }

    /// Schema cross-checks beyond what `serde` enforces.
    pub fn validate(&self) -> Result<()> {
        let k = self.symbols.len();
        if k == 0 || self.operators.len() != k {
            return Err(Error::Invalid(format!(
                "{} symbols for {} operator families",
                k,
                self.operators.len()
            )));
        }
        if let Some(kk) = self.k {
            if kk != k {
                return Err(Error::Invalid(format!("k = {kk} but {k} symbols given")));
            }
        }
        let arities: Vec<usize> = self.symbols.iter().map(|s| s.arity).collect();
        if let Some(a) = &self.arities {
            if *a != arities {
                return Err(Error::Invalid(format!("arities {a:?} disagree with symbols {arities:?}")));
            }
        }
        let mut dim = self.dim;
        for (i, fam) in self.operators.iter().enumerate() {
            if fam.len() != arities[i] {
                return Err(Error::Invalid(format!(
                    "family {} has {} operators, symbol arity is {}",
                    i + 1,
                    fam.len(),
                    arities[i]
                )));
            }
            for a in fam {
                let d = a.len();
                if a.iter().any(|row| row.len() != d) {
                    return Err(Error::Invalid("operators must be square".into()));
                }
                match dim {
                    None => dim = Some(d),
                    Some(dd) if dd != d => {
                        return Err(Error::Invalid(format!("operator of size {d}, expected {dd}")));
                    }
                    _ => {}
                }
            }
        }
        for q in &self.constraints {
            q.check_letters(&arities)?;
        }
        Ok(())
    }

    pub fn cp_tuple(&self) -> Result<CpTuple> {
        self.validate()?;
        let tol = self.tolerances();
        let ops = self.operators()?;
        if self.kraus {
            CpTuple::from_kraus(ops, tol.tol_comm)
        } else {
            CpTuple::from_parts(self.symbols.iter().map(|s| s.symbol()).collect(), ops, &tol)
        }
    }

    pub fn matrix_param(&self, rows: &Option<MatrixRows>, d: usize) -> Result<CMat> {
        match rows {
            None => Ok(CMat::identity(d, d)),
            Some(r) => {
                let x = from_rows(r)?;
                if x.nrows() != d || x.ncols() != d {
                    return Err(Error::Dimension(format!("parameter matrix must be {d}x{d}")));
                }
                Ok(x)
            }
        }
    }
}

/// Input of the `gen` command.
pub type GenSpec = polydom_core::gen::GenParams;

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("polydom".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("report_schema".to_string(), "1".to_string()),
    ])
}

//! JSON documents for persisted artifacts. Field elements are decimal strings.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::interpolate::VanishingSpace;
use crate::poly::{MultiPoly, PolyMap};
use crate::skew::{pair_index, pairs, SkewPolyMatrix};
use crate::szego::SzegoReport;

fn parse<F: PrimeField>(s: &str) -> Result<F> {
    F::parse_decimal(s)
}

fn parse_all<F: PrimeField>(v: &[String]) -> Result<Vec<F>> {
    v.iter().map(|s| parse(s)).collect()
}

fn decimals<F: PrimeField>(v: &[F]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermDoc {
    pub exp: Vec<u32>,
    pub c: String,
}

/// Terms in descending graded-lex order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyDoc {
    pub nvars: usize,
    pub terms: Vec<TermDoc>,
}

impl PolyDoc {
    pub fn encode<F: PrimeField>(p: &MultiPoly<F>) -> Self {
        PolyDoc {
            nvars: p.nvars(),
            terms: p
                .terms()
                .iter()
                .map(|&(m, c)| TermDoc {
                    exp: m.exponents(p.nvars()),
                    c: c.to_string(),
                })
                .collect(),
        }
    }

    pub fn decode<F: PrimeField>(&self) -> Result<MultiPoly<F>> {
        let terms = self
            .terms
            .iter()
            .map(|t| Ok((t.exp.clone(), parse(&t.c)?)))
            .collect::<Result<Vec<_>>>()?;
        MultiPoly::from_exponent_terms(self.nvars, &terms)
    }
}

fn decode_polys<F: PrimeField>(docs: &[PolyDoc]) -> Result<Vec<MultiPoly<F>>> {
    docs.iter().map(PolyDoc::decode).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyMapDoc {
    pub nvars: usize,
    pub degree: u32,
    pub forms: Vec<PolyDoc>,
}

impl PolyMapDoc {
    pub fn encode<F: PrimeField>(m: &PolyMap<F>) -> Self {
        PolyMapDoc {
            nvars: m.nvars(),
            degree: m.degree(),
            forms: m.forms().iter().map(PolyDoc::encode).collect(),
        }
    }

    pub fn decode<F: PrimeField>(&self) -> Result<PolyMap<F>> {
        let map = PolyMap::new(decode_polys(&self.forms)?)?;
        if map.nvars() != self.nvars || map.degree() != self.degree {
            return Err(Error::InvalidInput("polynomial map header disagrees with its forms".into()));
        }
        Ok(map)
    }
}

/// Upper entries keyed `"i,j"` with 1-based `i < j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewDoc {
    pub n: usize,
    pub nvars: usize,
    pub degree: u32,
    pub upper: Map<String, Value>,
}

impl SkewDoc {
    pub fn encode<F: PrimeField>(m: &SkewPolyMatrix<F>) -> Self {
        let upper = pairs(m.size())
            .map(|(i, j)| {
                let doc = PolyDoc::encode(m.upper_entry(i, j));
                (format!("{},{}", i + 1, j + 1), serde_json::to_value(doc).expect("plain data"))
            })
            .collect();
        SkewDoc {
            n: m.size(),
            nvars: m.nvars(),
            degree: m.degree(),
            upper,
        }
    }

    pub fn decode<F: PrimeField>(&self) -> Result<SkewPolyMatrix<F>> {
        let n = self.n;
        let mut upper = vec![None; n * n.saturating_sub(1) / 2];
        for (key, value) in &self.upper {
            let bad = || Error::InvalidInput(format!("bad entry key {key:?}"));
            let (i, j) = key.split_once(',').ok_or_else(bad)?;
            let (i, j): (usize, usize) = (i.trim().parse().map_err(|_| bad())?, j.trim().parse().map_err(|_| bad())?);
            if i == 0 || i >= j || j > n {
                return Err(bad());
            }
            let doc: PolyDoc = serde_json::from_value(value.clone()).map_err(|source| Error::Json {
                context: format!("entry {key}"),
                source,
            })?;
            upper[pair_index(n, i - 1, j - 1)] = Some(doc.decode::<F>()?);
        }
        let upper = upper
            .into_iter()
            .map(|e| e.unwrap_or_else(|| MultiPoly::zero(self.nvars)))
            .collect();
        SkewPolyMatrix::from_upper(n, self.nvars, self.degree, upper)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishingDoc {
    pub degree: u32,
    pub dim: usize,
    pub basis: Vec<PolyDoc>,
    pub samples: usize,
    pub dims: Vec<usize>,
    pub stabilized: bool,
}

impl VanishingDoc {
    pub fn encode<F: PrimeField>(v: &VanishingSpace<F>) -> Self {
        VanishingDoc {
            degree: v.degree,
            dim: v.dim(),
            basis: v.basis.iter().map(PolyDoc::encode).collect(),
            samples: v.samples.len(),
            dims: v.dims.clone(),
            stabilized: v.stabilized,
        }
    }

    /// The basis only; samples are not persisted.
    pub fn decode_basis<F: PrimeField>(&self) -> Result<Vec<MultiPoly<F>>> {
        let basis = decode_polys(&self.basis)?;
        if basis.len() != self.dim || basis.iter().any(|p| !p.is_zero() && p.homogeneous_degree() != Some(self.degree)) {
            return Err(Error::InvalidInput("vanishing space header disagrees with its basis".into()));
        }
        Ok(basis)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SzegoDoc {
    pub ratio: Option<String>,
    pub trials: usize,
    pub degenerate: usize,
    pub pass: bool,
}

impl SzegoDoc {
    pub fn encode<F: PrimeField>(r: &SzegoReport<F>) -> Self {
        SzegoDoc {
            ratio: r.ratio.map(|c| c.to_string()),
            trials: r.trials,
            degenerate: r.degenerate,
            pass: r.pass,
        }
    }

    pub fn decode<F: PrimeField>(&self) -> Result<SzegoReport<F>> {
        Ok(SzegoReport {
            ratio: self.ratio.as_deref().map(parse).transpose()?,
            trials: self.trials,
            degenerate: self.degenerate,
            pass: self.pass,
        })
    }
}

/// Points given by their coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointsDoc {
    pub n: usize,
    /// Number of curve points spanning each sample.
    pub k: usize,
    pub points: Vec<Vec<String>>,
}

impl PointsDoc {
    pub fn encode<F: PrimeField>(n: usize, k: usize, points: &[Vec<F>]) -> Self {
        PointsDoc {
            n,
            k,
            points: points.iter().map(|p| decimals(p)).collect(),
        }
    }

    pub fn decode<F: PrimeField>(&self) -> Result<Vec<Vec<F>>> {
        self.points
            .iter()
            .map(|p| {
                if p.len() != self.n {
                    return Err(Error::ArityMismatch {
                        expected: self.n,
                        found: p.len(),
                    });
                }
                parse_all(p)
            })
            .collect()
    }
}

pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifacts serialize to JSON");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_pretty(value)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })
}

//! Method names, flag-value syntax and the JSON config file.

use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use hsi_tensor::hsi::SyntheticCubeSpec;
use serde::{Deserialize, Serialize};

use crate::error::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Cpd,
    CpdCompressed,
    Lmlra,
    BtdLl1,
    Btd,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Cpd,
        Method::CpdCompressed,
        Method::Lmlra,
        Method::BtdLl1,
        Method::Btd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cpd => "cpd",
            Method::CpdCompressed => "cpd-compressed",
            Method::Lmlra => "lmlra",
            Method::BtdLl1 => "btd-ll1",
            Method::Btd => "btd",
        }
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| BenchError::Usage(format!("unknown method {s:?}")))
    }
}

/// Comma-separated method list, rejecting duplicates.
pub fn parse_methods(s: &str) -> Result<Vec<Method>, BenchError> {
    let methods = s
        .split(',')
        .map(str::parse)
        .collect::<Result<Vec<Method>, _>>()?;
    for (i, m) in methods.iter().enumerate() {
        if methods[..i].contains(m) {
            return Err(BenchError::Usage(format!("method {} listed twice", m.name())));
        }
    }
    Ok(methods)
}

fn parse_usize(s: &str, what: &str) -> Result<usize, BenchError> {
    s.trim()
        .parse()
        .map_err(|_| BenchError::Usage(format!("bad {what} {s:?}")))
}

pub fn parse_mlranks(s: &str) -> Result<Vec<usize>, BenchError> {
    s.split(',').map(|x| parse_usize(x, "multilinear rank")).collect()
}

/// Block shapes from `--blocks`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Blocks {
    /// `L1,L2,...`
    Sizes(Vec<usize>),
    /// `(L,M,N);(L,M,N);...`
    Shapes(Vec<[usize; 3]>),
}

impl Blocks {
    /// Rank-(L,L,1) sizes; explicit shapes must have that form.
    pub fn ll1_sizes(&self) -> Result<Vec<usize>, BenchError> {
        match self {
            Blocks::Sizes(ls) => Ok(ls.clone()),
            Blocks::Shapes(shapes) => shapes
                .iter()
                .map(|&[l, m, n]| {
                    if l == m && n == 1 {
                        Ok(l)
                    } else {
                        Err(BenchError::Usage(format!(
                            "block ({l},{m},{n}) is not of rank-(L,L,1) form"
                        )))
                    }
                })
                .collect(),
        }
    }

    /// General shapes; a bare size `L` means an `L x L x L` core.
    pub fn shapes(&self) -> Vec<[usize; 3]> {
        match self {
            Blocks::Sizes(ls) => ls.iter().map(|&l| [l, l, l]).collect(),
            Blocks::Shapes(shapes) => shapes.clone(),
        }
    }
}

pub fn parse_blocks(s: &str) -> Result<Blocks, BenchError> {
    let s = s.trim();
    if !s.contains('(') {
        return s
            .split(',')
            .map(|x| parse_usize(x, "block size"))
            .collect::<Result<_, _>>()
            .map(Blocks::Sizes);
    }
    s.split(';')
        .filter(|part| !part.trim().is_empty())
        .map(|part| {
            let inner = part
                .trim()
                .strip_prefix('(')
                .and_then(|p| p.strip_suffix(')'))
                .ok_or_else(|| BenchError::Usage(format!("bad block shape {part:?}")))?;
            let v = inner
                .split(',')
                .map(|x| parse_usize(x, "block rank"))
                .collect::<Result<Vec<_>, _>>()?;
            <[usize; 3]>::try_from(v)
                .map_err(|_| BenchError::Usage(format!("block shape {part:?} needs three ranks")))
        })
        .collect::<Result<_, _>>()
        .map(Blocks::Shapes)
}

/// `1..5` (inclusive), `1-5`, or `1,2,3`.
pub fn parse_rank_range(s: &str) -> Result<Vec<usize>, BenchError> {
    let s = s.trim();
    let bounds = s.split_once("..").or_else(|| s.split_once('-'));
    let ranks: Vec<usize> = match bounds {
        Some((lo, hi)) => {
            let lo = parse_usize(lo, "rank")?;
            let hi = parse_usize(hi.trim_start_matches('='), "rank")?;
            (lo..=hi).collect()
        }
        None => s
            .split(',')
            .map(|x| parse_usize(x, "rank"))
            .collect::<Result<_, _>>()?,
    };
    if ranks.is_empty() || ranks.contains(&0) {
        return Err(BenchError::Usage(format!("rank range {s:?} must be nonempty and >= 1")));
    }
    Ok(ranks)
}

/// `P=3,noise=0.02,dims=32x32x64,seed=1,smoothness=0.15`; `dims` is
/// width x height x bands. Unlisted keys keep the generator defaults.
pub fn parse_synth(s: &str) -> Result<SyntheticCubeSpec, BenchError> {
    let mut spec = SyntheticCubeSpec::default();
    let bad = |what: &str, v: &str| BenchError::Usage(format!("bad synth {what} {v:?}"));
    for item in s.split(',').filter(|x| !x.trim().is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| BenchError::Usage(format!("synth item {item:?} is not key=value")))?;
        let value = value.trim();
        match key.trim() {
            "P" | "p" | "endmembers" => spec.num_endmembers = parse_usize(value, "endmember count")?,
            "noise" => spec.noise_sigma = value.parse().map_err(|_| bad("noise", value))?,
            "seed" => spec.seed = value.parse().map_err(|_| bad("seed", value))?,
            "smoothness" => {
                spec.abundance_smoothness = value.parse().map_err(|_| bad("smoothness", value))?
            }
            "dims" => {
                let d = value
                    .split('x')
                    .map(|x| parse_usize(x, "extent"))
                    .collect::<Result<Vec<_>, _>>()?;
                let [w, h, b] = <[usize; 3]>::try_from(d).map_err(|_| bad("dims", value))?;
                (spec.width, spec.height, spec.bands) = (w, h, b);
            }
            other => return Err(BenchError::Usage(format!("unknown synth key {other:?}"))),
        }
    }
    spec.validate()?;
    Ok(spec)
}

/// Contents of `--config FILE`. Keys are the long flag names; values use
/// the same syntax as on the command line. Flags given on the command
/// line take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub cube: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub tensor: Option<PathBuf>,
    pub synth: Option<String>,
    pub method: Option<Method>,
    pub methods: Option<String>,
    pub rank: Option<usize>,
    pub ranks: Option<String>,
    pub threshold: Option<f64>,
    pub mlranks: Option<String>,
    pub blocks: Option<String>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub out: Option<PathBuf>,
    pub deterministic: Option<bool>,
    pub match_budget: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io {
            path: path.to_owned(),
            source: e,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| BenchError::Usage(format!("{}: {e}", path.display())))
    }
}

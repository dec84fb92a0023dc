//! TOML scenario schema. Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::exact::{parse_rational, Rational};
use crate::space::{FiniteSpace, FunctionTable};
use crate::textfmt::parse_document;

/// A rational written as `"p/q"`, a decimal string, or an integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rat(pub Rational);

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Rat;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a rational such as \"3/4\", \"0.25\" or an integer")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Rat, E> {
                Ok(Rat(Rational::from_integer(v.into())))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Rat, E> {
                parse_rational(v).map(Rat).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Cover,
    Vc,
    Tail,
    Bp,
    Halving,
    Dyadic,
    Discretize,
    FullReport,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Cover => "cover",
            Kind::Vc => "vc",
            Kind::Tail => "tail",
            Kind::Bp => "bp",
            Kind::Halving => "halving",
            Kind::Dyadic => "dyadic",
            Kind::Discretize => "discretize",
            Kind::FullReport => "full-report",
        }
    }
}

/// Where a space and class come from. Exactly one of `file`, `rows`,
/// `indicators` must be given.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    /// Text-format document with a `space` and a `class` section,
    /// relative to the scenario file.
    pub file: Option<PathBuf>,
    /// Uniform space on this many points.
    pub points: Option<usize>,
    /// Explicit point weights; overrides `points`.
    pub weights: Option<Vec<Rat>>,
    pub rows: Option<Vec<Vec<Rat>>>,
    /// Indicator rows given by the points of each set.
    pub indicators: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverParams {
    pub data: DataSpec,
    pub epsilons: Vec<Rat>,
    #[serde(default = "default_exponents")]
    pub exponents: Vec<f64>,
    pub dirichlet_draws: Option<usize>,
    pub climb_steps: Option<usize>,
}

fn default_exponents() -> Vec<f64> {
    vec![1.0, 2.0, 3.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VcScenario {
    /// Ground set size for `sets` or `max_size`.
    pub ground: Option<usize>,
    pub sets: Option<Vec<Vec<usize>>>,
    /// All subsets of size at most this.
    pub max_size: Option<usize>,
    /// Indicator class; its rows become the sets.
    pub data: Option<DataSpec>,
    pub b: Rat,
    pub k: u32,
    #[serde(default = "one")]
    pub n_min: usize,
    pub n_max: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSpec {
    /// `theorem1` or `lemma3.1`.
    pub statement: String,
    pub d: f64,
    pub l: Rat,
    pub rho: Rat,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub samples: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailParams {
    pub data: DataSpec,
    pub n: u32,
    pub u: Rat,
    /// `>` instead of `≥`.
    #[serde(default)]
    pub strict: bool,
    pub mc: Option<McSpec>,
    #[serde(default)]
    pub bounds: Vec<BoundSpec>,
    /// Golden value for the exact tail; a mismatch fails the run.
    pub expect: Option<Rat>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    /// Indices of the sets containing the piece.
    pub sets: Vec<usize>,
    pub measure: Rat,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    pub epsilons: Vec<Rat>,
    #[serde(default = "default_exponents")]
    pub exponents: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Theorem1ASpec {
    pub rho: Rat,
    pub l: Rat,
    /// Fixed `D`; otherwise fitted from `fit`.
    pub d: Option<f64>,
    pub fit: Option<FitSpec>,
    pub n0: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BpParams {
    /// Explicit indicator class.
    pub data: Option<DataSpec>,
    /// Implicit family: number of sets and its Venn pieces.
    pub set_count: Option<usize>,
    pub pieces: Option<Vec<PieceSpec>>,
    pub p: Vec<u32>,
    pub theorem1a: Option<Theorem1ASpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub k: u32,
    pub p: u64,
    #[serde(default = "one_f")]
    pub d: f64,
    #[serde(default = "one_f")]
    pub l: f64,
}

fn one_f() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatementBSpec {
    pub data: DataSpec,
    pub rho_next: Rat,
    pub z: Vec<Rat>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalvingParams {
    pub rho: Rat,
    /// Defaults to the largest `N0` in the window.
    pub n0: Option<u64>,
    #[serde(default)]
    pub k_max: u32,
    #[serde(default)]
    pub chain: Vec<ChainSpec>,
    /// Checks the counting-factor identity for every `N_k` up to this.
    pub counting_max: Option<u64>,
    pub statement_b: Option<StatementBSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma31Spec {
    pub d: f64,
    pub l: f64,
    pub rho: Rat,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadicParams {
    pub data: DataSpec,
    pub n: u32,
    pub u: Rat,
    #[serde(default)]
    pub strict: bool,
    #[serde(default = "default_trials")]
    pub trials: u64,
    pub lemma31: Option<Lemma31Spec>,
}

fn default_trials() -> u64 {
    1000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizeParams {
    pub data: DataSpec,
    pub n: u32,
    pub u: Rat,
    pub k: u32,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub sweep: Vec<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntroParams {
    pub points: u64,
    pub max_size: u64,
    pub n_max: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub cover: Option<CoverParams>,
    pub vc: Option<VcScenario>,
    pub tail: Option<TailParams>,
    pub bp: Option<BpParams>,
    pub halving: Option<HalvingParams>,
    pub dyadic: Option<DyadicParams>,
    pub discretize: Option<DiscretizeParams>,
    pub intro: Option<IntroParams>,
    /// Directory that relative data paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scenario {
    fn present(&self) -> Vec<&'static str> {
        [
            ("cover", self.cover.is_some()),
            ("vc", self.vc.is_some()),
            ("tail", self.tail.is_some()),
            ("bp", self.bp.is_some()),
            ("halving", self.halving.is_some()),
            ("dyadic", self.dyadic.is_some()),
            ("discretize", self.discretize.is_some()),
            ("intro", self.intro.is_some()),
        ]
        .into_iter()
        .filter_map(|(n, p)| p.then_some(n))
        .collect()
    }

    fn validate(&self) -> Result<()> {
        let present = self.present();
        let schema = Error::Schema;
        match self.kind {
            Kind::FullReport if present.is_empty() => {
                Err(schema("full-report needs at least one parameter block".into()))
            }
            Kind::FullReport => Ok(()),
            k => {
                let name = k.name();
                if !present.contains(&name) {
                    return Err(schema(format!("kind = \"{name}\" needs a [{name}] block")));
                }
                if let Some(other) = present.iter().find(|p| **p != name) {
                    return Err(schema(format!("block [{other}] is not used by kind = \"{name}\"")));
                }
                Ok(())
            }
        }
    }
}

/// 1-based line of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<Scenario> {
    let mut s: Scenario = toml::from_str(text).map_err(|e| Error::Format {
        line: e.span().map(|r| line_of(text, r.start)).unwrap_or(0),
        msg: e.message().to_string(),
    })?;
    s.base_dir = base_dir.to_path_buf();
    s.validate()?;
    Ok(s)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text, path.parent().unwrap_or(Path::new(".")))
}

impl DataSpec {
    pub fn load(&self, base_dir: &Path) -> Result<(FunctionTable, FiniteSpace)> {
        let schema = |msg: &str| Error::Schema(format!("data: {msg}"));
        let sources = [self.file.is_some(), self.rows.is_some(), self.indicators.is_some()];
        if sources.iter().filter(|s| **s).count() != 1 {
            return Err(schema("give exactly one of file, rows, indicators"));
        }
        if let Some(file) = &self.file {
            if self.points.is_some() || self.weights.is_some() {
                return Err(schema("points and weights come from the file"));
            }
            let path = base_dir.join(file);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| schema(&format!("cannot read {}: {e}", path.display())))?;
            let doc = parse_document(&text)?;
            let class = doc.class.ok_or_else(|| schema("file has no class section"))?;
            let space = match doc.space {
                Some(s) => s,
                None => FiniteSpace::uniform(class.point_count())?,
            };
            return Ok((class, space));
        }
        let space = match (&self.weights, self.points) {
            (Some(w), _) => FiniteSpace::new(w.iter().map(|r| r.0.clone()).collect())?,
            (None, Some(n)) => FiniteSpace::uniform(n)?,
            (None, None) => return Err(schema("give points or weights")),
        };
        let class = match (&self.rows, &self.indicators) {
            (Some(rows), _) => FunctionTable::new(rows.iter().map(|r| r.iter().map(|v| v.0.clone()).collect()).collect())?,
            (_, Some(sets)) => FunctionTable::from_indicators(space.point_count(), sets)?,
            _ => unreachable!("one source checked above"),
        };
        class.check_space(&space)?;
        Ok((class, space))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario> {
        parse_scenario(text, Path::new("."))
    }

    #[test]
    fn minimal_tail_scenario() {
        let s = parse(
            "kind = \"tail\"\n[tail]\nn = 2\nu = \"2\"\n[tail.data]\npoints = 4\nindicators = [[0],[1],[2],[3]]\n",
        )
        .unwrap();
        assert_eq!(s.kind, Kind::Tail);
        assert_eq!(s.seed, 0);
        let (class, space) = s.tail.unwrap().data.load(Path::new(".")).unwrap();
        assert_eq!((class.class_size(), space.point_count()), (4, 4));
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let err = parse("kind = \"tail\"\n[tail]\nn = 2\nu = 1\nbogus = 3\n[tail.data]\npoints = 1\nrows = [[1]]\n").unwrap_err();
        match err {
            Error::Format { line, msg } => {
                assert_eq!(line, 5);
                assert!(msg.contains("bogus"), "{msg}");
            }
            e => panic!("{e}"),
        }
        assert!(parse("kind = \"tail\"\nsed = 1\n").is_err());
    }

    #[test]
    fn kind_and_blocks_must_agree() {
        assert!(parse("kind = \"vc\"\n").is_err());
        assert!(parse("kind = \"full-report\"\n").is_err());
        assert!(parse("kind = \"nope\"\n").is_err());
        let t = "kind = \"halving\"\n[halving]\nrho = \"1/1000\"\n[intro]\npoints = 3\nmax_size = 1\nn_max = 2\n";
        assert!(parse(t).is_err());
        assert!(parse(&t.replace("\"halving\"", "\"full-report\"")).is_ok());
    }

    #[test]
    fn rationals_accept_three_spellings() {
        #[derive(Deserialize)]
        struct T {
            a: Rat,
            b: Rat,
            c: Rat,
        }
        let t: T = toml::from_str("a = 3\nb = \"1/4\"\nc = \"0.5\"").unwrap();
        assert_eq!(t.a.0, Rational::from_integer(3.into()));
        assert_eq!(t.b.0, Rational::new(1.into(), 4.into()));
        assert_eq!(t.c.0, Rational::new(1.into(), 2.into()));
        assert!(toml::from_str::<T>("a = 1.5\nb = 1\nc = 1").is_err());
    }

    #[test]
    fn data_needs_one_source() {
        let d = DataSpec { points: Some(2), ..Default::default() };
        assert!(d.load(Path::new(".")).is_err());
    }
}

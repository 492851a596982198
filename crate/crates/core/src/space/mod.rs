//! The search space: integer domains for the two cell counts, the genome
//! codec and the canonical architecture plan with its parameter count.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

mod plan;

pub use plan::{
    build_plan, count_params, format_size_millions, plan_pooling, ArchitecturePlan, Layer,
    PlanConfig, Shape,
};

/// A set of admissible non-negative integers, either listed explicitly or
/// given as an inclusive range.
///
/// In configuration files an enumerated domain is a plain array (`[0, 2, 3, 4]`)
/// and a range is a table (`{ lo = 2, hi = 8 }`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain", into = "RawDomain")]
pub enum IntDomain {
    Enumerated(Vec<u32>),
    Range { lo: u32, hi: u32 },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawDomain {
    Enumerated(Vec<u32>),
    Range { lo: u32, hi: u32 },
}

impl TryFrom<RawDomain> for IntDomain {
    type Error = Error;

    fn try_from(raw: RawDomain) -> Result<Self> {
        match raw {
            RawDomain::Enumerated(values) => IntDomain::enumerated(values),
            RawDomain::Range { lo, hi } => IntDomain::range(lo, hi),
        }
    }
}

impl From<IntDomain> for RawDomain {
    fn from(d: IntDomain) -> Self {
        match d {
            IntDomain::Enumerated(values) => RawDomain::Enumerated(values),
            IntDomain::Range { lo, hi } => RawDomain::Range { lo, hi },
        }
    }
}

impl IntDomain {
    /// An explicit value list. Order is kept; it fixes grid enumeration order.
    pub fn enumerated(values: impl Into<Vec<u32>>) -> Result<Self> {
        let values = values.into();
        if values.is_empty() {
            return Err(Error::Config("enumerated domain is empty".into()));
        }
        for (i, v) in values.iter().enumerate() {
            if values[..i].contains(v) {
                return Err(Error::Config(format!(
                    "enumerated domain repeats value {v}"
                )));
            }
        }
        Ok(IntDomain::Enumerated(values))
    }

    pub fn range(lo: u32, hi: u32) -> Result<Self> {
        if lo > hi {
            return Err(Error::Config(format!("range domain has lo {lo} > hi {hi}")));
        }
        Ok(IntDomain::Range { lo, hi })
    }

    pub fn is_enumerated(&self) -> bool {
        matches!(self, IntDomain::Enumerated(_))
    }

    /// All admissible values in domain order.
    pub fn values(&self) -> Vec<u32> {
        match self {
            IntDomain::Enumerated(values) => values.clone(),
            IntDomain::Range { lo, hi } => (*lo..=*hi).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            IntDomain::Enumerated(values) => values.len(),
            IntDomain::Range { lo, hi } => (hi - lo) as usize + 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, value: u32) -> bool {
        match self {
            IntDomain::Enumerated(values) => values.contains(&value),
            IntDomain::Range { lo, hi } => (*lo..=*hi).contains(&value),
        }
    }

    pub fn min(&self) -> u32 {
        match self {
            IntDomain::Enumerated(values) => *values.iter().min().expect("non-empty"),
            IntDomain::Range { lo, .. } => *lo,
        }
    }

    pub fn max(&self) -> u32 {
        match self {
            IntDomain::Enumerated(values) => *values.iter().max().expect("non-empty"),
            IntDomain::Range { hi, .. } => *hi,
        }
    }

    /// Draws one value uniformly from the domain.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match self {
            IntDomain::Enumerated(values) => values[rng.random_range(0..values.len())],
            IntDomain::Range { lo, hi } => rng.random_range(*lo..=*hi),
        }
    }
}

impl fmt::Display for IntDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntDomain::Enumerated(values) => {
                let parts: Vec<String> = values.iter().map(u32::to_string).collect();
                write!(f, "({})", parts.join(", "))
            }
            IntDomain::Range { lo, hi } => write!(f, "[{lo}, {hi}]"),
        }
    }
}

/// Bit layout of a genome: a conv-count field followed by a dense-count
/// field, each read as an unsigned integer, most significant bit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawLayout", into = "RawLayout")]
pub struct GenomeLayout {
    conv_bits: u32,
    dense_bits: u32,
}

#[derive(Serialize, Deserialize)]
struct RawLayout {
    conv_bits: u32,
    dense_bits: u32,
}

impl TryFrom<RawLayout> for GenomeLayout {
    type Error = Error;

    fn try_from(raw: RawLayout) -> Result<Self> {
        GenomeLayout::new(raw.conv_bits, raw.dense_bits)
    }
}

impl From<GenomeLayout> for RawLayout {
    fn from(l: GenomeLayout) -> Self {
        RawLayout {
            conv_bits: l.conv_bits,
            dense_bits: l.dense_bits,
        }
    }
}

impl Default for GenomeLayout {
    /// Eight bits: four for the conv count, four for the dense count.
    fn default() -> Self {
        GenomeLayout {
            conv_bits: 4,
            dense_bits: 4,
        }
    }
}

impl GenomeLayout {
    /// Field widths must lie in `1..=16`.
    pub fn new(conv_bits: u32, dense_bits: u32) -> Result<Self> {
        for (name, bits) in [("conv_bits", conv_bits), ("dense_bits", dense_bits)] {
            if !(1..=16).contains(&bits) {
                return Err(Error::Config(format!(
                    "{name} must be in 1..=16, got {bits}"
                )));
            }
        }
        Ok(GenomeLayout {
            conv_bits,
            dense_bits,
        })
    }

    pub fn conv_bits(&self) -> u32 {
        self.conv_bits
    }

    pub fn dense_bits(&self) -> u32 {
        self.dense_bits
    }

    pub fn total_bits(&self) -> usize {
        (self.conv_bits + self.dense_bits) as usize
    }

    pub fn max_conv(&self) -> u32 {
        (1 << self.conv_bits) - 1
    }

    pub fn max_dense(&self) -> u32 {
        (1 << self.dense_bits) - 1
    }
}

/// A point in the search space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Candidate {
    pub conv_cells: u32,
    pub dense_cells: u32,
}

impl Candidate {
    pub const fn new(conv_cells: u32, dense_cells: u32) -> Self {
        Candidate {
            conv_cells,
            dense_cells,
        }
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "conv={} dense={}", self.conv_cells, self.dense_cells)
    }
}

/// A fixed-length bit vector. Displays and parses as a `0`/`1` string.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Genome(Vec<bool>);

impl Genome {
    pub fn new(bits: Vec<bool>) -> Self {
        Genome(bits)
    }

    /// Builds a genome from the low `len` bits of `value`, MSB first.
    pub fn from_bits(value: u64, len: usize) -> Self {
        Genome((0..len).rev().map(|i| (value >> i) & 1 == 1).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in &self.0 {
            f.write_str(if *bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Genome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Codec(format!("invalid genome character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Genome)
    }
}

impl Serialize for Genome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Genome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn read_field(bits: &[bool]) -> u32 {
    bits.iter().fold(0, |acc, b| (acc << 1) | u32::from(*b))
}

/// Reads the conv field then the dense field, each MSB first.
pub fn decode_genome(genome: &Genome, layout: &GenomeLayout) -> Result<Candidate> {
    if genome.len() != layout.total_bits() {
        return Err(Error::Codec(format!(
            "genome has {} bits, layout expects {}",
            genome.len(),
            layout.total_bits()
        )));
    }
    let (conv, dense) = genome.bits().split_at(layout.conv_bits as usize);
    Ok(Candidate::new(read_field(conv), read_field(dense)))
}

/// Inverse of [`decode_genome`].
pub fn encode_architecture(candidate: Candidate, layout: &GenomeLayout) -> Result<Genome> {
    if candidate.conv_cells > layout.max_conv() {
        return Err(Error::Range {
            value: candidate.conv_cells,
            bits: layout.conv_bits,
        });
    }
    if candidate.dense_cells > layout.max_dense() {
        return Err(Error::Range {
            value: candidate.dense_cells,
            bits: layout.dense_bits,
        });
    }
    let mut bits = Genome::from_bits(candidate.conv_cells.into(), layout.conv_bits as usize).0;
    bits.extend(Genome::from_bits(candidate.dense_cells.into(), layout.dense_bits as usize).0);
    Ok(Genome(bits))
}

/// Domains for both cell counts plus the genome layout that encodes them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct SearchSpace {
    conv: IntDomain,
    dense: IntDomain,
    layout: GenomeLayout,
}

#[derive(Serialize, Deserialize)]
struct RawSpace {
    conv: IntDomain,
    dense: IntDomain,
    #[serde(default = "default_bits")]
    conv_bits: u32,
    #[serde(default = "default_bits")]
    dense_bits: u32,
}

fn default_bits() -> u32 {
    4
}

impl TryFrom<RawSpace> for SearchSpace {
    type Error = Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        SearchSpace::new(
            raw.conv,
            raw.dense,
            GenomeLayout::new(raw.conv_bits, raw.dense_bits)?,
        )
    }
}

impl From<SearchSpace> for RawSpace {
    fn from(s: SearchSpace) -> Self {
        RawSpace {
            conv: s.conv,
            dense: s.dense,
            conv_bits: s.layout.conv_bits,
            dense_bits: s.layout.dense_bits,
        }
    }
}

impl Default for SearchSpace {
    /// Conv cells in (0, 2, 3, 4), dense cells in (1, 2), 4+4 bit genome.
    fn default() -> Self {
        SearchSpace::new(
            IntDomain::Enumerated(vec![0, 2, 3, 4]),
            IntDomain::Enumerated(vec![1, 2]),
            GenomeLayout::default(),
        )
        .expect("default space is valid")
    }
}

impl SearchSpace {
    pub fn new(conv: IntDomain, dense: IntDomain, layout: GenomeLayout) -> Result<Self> {
        if conv.max() > layout.max_conv() {
            return Err(Error::Range {
                value: conv.max(),
                bits: layout.conv_bits,
            });
        }
        if dense.max() > layout.max_dense() {
            return Err(Error::Range {
                value: dense.max(),
                bits: layout.dense_bits,
            });
        }
        Ok(SearchSpace {
            conv,
            dense,
            layout,
        })
    }

    /// Conv in [2, 8], dense in [1, 4].
    pub fn random_bounds() -> Self {
        SearchSpace::new(
            IntDomain::Range { lo: 2, hi: 8 },
            IntDomain::Range { lo: 1, hi: 4 },
            GenomeLayout::default(),
        )
        .expect("valid space")
    }

    /// Every value a 4+4 bit genome can express.
    pub fn full_genome() -> Self {
        let layout = GenomeLayout::default();
        SearchSpace::new(
            IntDomain::Range {
                lo: 0,
                hi: layout.max_conv(),
            },
            IntDomain::Range {
                lo: 0,
                hi: layout.max_dense(),
            },
            layout,
        )
        .expect("valid space")
    }

    pub fn conv(&self) -> &IntDomain {
        &self.conv
    }

    pub fn dense(&self) -> &IntDomain {
        &self.dense
    }

    pub fn layout(&self) -> &GenomeLayout {
        &self.layout
    }

    pub fn contains(&self, candidate: Candidate) -> bool {
        self.conv.contains(candidate.conv_cells) && self.dense.contains(candidate.dense_cells)
    }
}

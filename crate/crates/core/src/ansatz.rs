//! Ansatz families as ordered lists of gate generators.
//!
//! Every generator `H` enters the circuit as `e^{−iθH}`; generators are applied to the
//! initial state in list order. An 𝕏-ansatz is an ansatz whose generators are all
//! X-strings `Π_{i∈S} X_i`; it is fully described by its mask collection `𝒜`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{full_mask, Mask, MAX_VERTICES};

/// Largest `n` for which [`Ansatz::full_nonsymmetric`] will build `2^(n−1) − 1` masks.
pub const FULL_NONSYMMETRIC_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    /// `Π_{i∈S} X_i`.
    XString(Mask),
    /// `Π_{i∈S} Z_i`.
    ZString(Mask),
    /// `Σ_i X_i`, one shared angle for all qubits.
    GlobalXMixer,
    /// Single-qubit `X_q` inside a QAOA layer, with its own angle.
    LocalX(usize),
    /// The problem Hamiltonian `H_p` itself.
    ProblemPhase,
    /// `Σ_i Z_i`, one shared angle for all qubits.
    GlobalZField,
}

impl Generator {
    /// Vertex support for string-like generators.
    pub fn mask(&self) -> Option<Mask> {
        match *self {
            Generator::XString(m) | Generator::ZString(m) => Some(m),
            Generator::LocalX(q) => Some(1 << q),
            _ => None,
        }
    }

    /// True for generators diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        matches!(
            self,
            Generator::ZString(_) | Generator::ProblemPhase | Generator::GlobalZField
        )
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Generator::XString(_) => "x_string",
            Generator::ZString(_) => "z_string",
            Generator::GlobalXMixer => "global_x_mixer",
            Generator::LocalX(_) => "local_x_layer_element",
            Generator::ProblemPhase => "problem_phase",
            Generator::GlobalZField => "global_z_field",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    AllZeros,
    AllPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XzVariant {
    /// z-part is the k-body Z-string on the same mask as the preceding X-string.
    KBodyZ,
    /// z-part is the summed single-qubit field `Σ Z_i`.
    GlobalZ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QaoaVariant {
    Standard,
    LocalX,
    LocalXZeroStart,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ansatz {
    n: usize,
    generators: Vec<Generator>,
    initial: InitialState,
}

impl Ansatz {
    pub fn new(n: usize, generators: Vec<Generator>, initial: InitialState) -> Result<Self> {
        if n == 0 || n > MAX_VERTICES {
            return Err(Error::input(format!("qubit count {n} outside 1..=64")));
        }
        let full = full_mask(n);
        for g in &generators {
            match *g {
                Generator::XString(m) | Generator::ZString(m) if m == 0 || m & !full != 0 => {
                    return Err(Error::input(format!(
                        "{} mask {m:#x} invalid for n={n}",
                        g.kind_name()
                    )));
                }
                Generator::LocalX(q) if q >= n => {
                    return Err(Error::input(format!("local X on qubit {q} but n={n}")));
                }
                _ => {}
            }
        }
        Ok(Self {
            n,
            generators,
            initial,
        })
    }

    /// 𝕏-ansatz from a mask collection, starting in `|0…0⟩`.
    pub fn from_masks(n: usize, masks: impl IntoIterator<Item = Mask>) -> Result<Self> {
        let gens = masks.into_iter().map(Generator::XString).collect();
        Self::new(n, gens, InitialState::AllZeros)
    }

    /// `n` single-qubit X rotations.
    pub fn classical(n: usize) -> Result<Self> {
        Self::from_masks(n, (0..n).map(|q| 1 << q))
    }

    /// All non-empty masks of popcount at most `depth`, ordered by (popcount, value).
    pub fn x_depth(n: usize, depth: usize) -> Result<Self> {
        if depth < 1 || depth > n {
            return Err(Error::input(format!("k-body depth {depth} outside 1..={n}")));
        }
        check_enumerable(n)?;
        Self::from_masks(n, masks_up_to_depth(n, depth))
    }

    /// One representative from every complementary pair of proper non-empty subsets.
    ///
    /// The representative is the side with fewer vertices; for equal halves, the side
    /// without vertex `n−1`. The full vertex set is never included.
    pub fn full_nonsymmetric(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::input("non-symmetric ansatz needs n >= 2"));
        }
        if n > FULL_NONSYMMETRIC_CAP {
            return Err(Error::Cap {
                what: "n",
                value: n,
                cap: FULL_NONSYMMETRIC_CAP,
                reason: "the non-symmetric ansatz has 2^(n-1) - 1 elements",
            });
        }
        let full = full_mask(n);
        let high = 1u64 << (n - 1);
        let mut masks: Vec<Mask> = (1..full)
            .filter(|&m| {
                let c = full ^ m;
                let (pm, pc) = (m.count_ones(), c.count_ones());
                pm < pc || (pm == pc && m & high == 0)
            })
            .collect();
        masks.sort_by_key(|&m| (m.count_ones(), m));
        Self::from_masks(n, masks)
    }

    /// Nested prefixes `{0}, {0,1}, …, {0,…,n−2}`.
    pub fn path(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::input("path ansatz needs n >= 2"));
        }
        Self::from_masks(n, (1..n).map(|len| full_mask(len)))
    }

    /// `n` rotated copies of the path construction, one per starting vertex.
    pub fn ring(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::input("ring ansatz needs n >= 2"));
        }
        let mut masks = Vec::with_capacity(n * (n - 1));
        for start in 0..n {
            let mut m: Mask = 0;
            for len in 0..n - 1 {
                m |= 1 << ((start + len) % n);
                masks.push(m);
            }
        }
        Self::from_masks(n, masks)
    }

    /// X-strings up to `depth`, each immediately followed by its Z-part.
    pub fn xz(n: usize, depth: usize, variant: XzVariant) -> Result<Self> {
        if depth < 1 || depth > n {
            return Err(Error::input(format!("k-body depth {depth} outside 1..={n}")));
        }
        check_enumerable(n)?;
        let mut gens = Vec::new();
        for m in masks_up_to_depth(n, depth) {
            gens.push(Generator::XString(m));
            gens.push(match variant {
                XzVariant::KBodyZ => Generator::ZString(m),
                XzVariant::GlobalZ => Generator::GlobalZField,
            });
        }
        Self::new(n, gens, InitialState::AllZeros)
    }

    /// `p` layers of problem phase followed by a mixer.
    pub fn qaoa(n: usize, layers: usize, variant: QaoaVariant) -> Result<Self> {
        if layers < 1 {
            return Err(Error::input("QAOA needs at least one layer"));
        }
        let mut gens = Vec::new();
        for _ in 0..layers {
            gens.push(Generator::ProblemPhase);
            match variant {
                QaoaVariant::Standard => gens.push(Generator::GlobalXMixer),
                QaoaVariant::LocalX | QaoaVariant::LocalXZeroStart => {
                    gens.extend((0..n).map(Generator::LocalX))
                }
            }
        }
        let initial = match variant {
            QaoaVariant::LocalXZeroStart => InitialState::AllZeros,
            _ => InitialState::AllPlus,
        };
        Self::new(n, gens, initial)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// Number of variational parameters `M`.
    pub fn n_params(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn initial_state(&self) -> InitialState {
        self.initial
    }

    /// True when every generator is an X-string and the start state is `|0…0⟩`.
    pub fn is_x_ansatz(&self) -> bool {
        self.initial == InitialState::AllZeros
            && self
                .generators
                .iter()
                .all(|g| matches!(g, Generator::XString(_)))
    }

    /// Largest X-string support.
    pub fn kbody_depth(&self) -> usize {
        self.generators
            .iter()
            .filter_map(|g| match g {
                Generator::XString(m) => Some(m.count_ones() as usize),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// The mask collection `𝒜` of a pure 𝕏-ansatz.
    pub fn x_masks(&self) -> Result<Vec<Mask>> {
        if !self.is_x_ansatz() {
            return Err(Error::UnsupportedAnsatz(
                "operation requires a pure X-string ansatz starting from |0...0>".into(),
            ));
        }
        Ok(self
            .generators
            .iter()
            .filter_map(|g| g.mask())
            .collect())
    }

    pub fn to_toml(&self) -> String {
        let file = AnsatzFile {
            n: self.n,
            initial_state: self.initial,
            generators: self
                .generators
                .iter()
                .map(|g| GeneratorEntry {
                    kind: g.kind_name().to_string(),
                    mask: g.mask().map(|m| format!("{m:#x}")),
                })
                .collect(),
        };
        toml::to_string(&file).expect("ansatz serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: AnsatzFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut gens = Vec::with_capacity(file.generators.len());
        for entry in file.generators {
            let mask = entry
                .mask
                .as_deref()
                .map(|s| {
                    let digits = s.trim_start_matches("0x");
                    Mask::from_str_radix(digits, 16)
                        .map_err(|_| Error::Parse(format!("bad hex mask {s:?}")))
                })
                .transpose()?;
            let need = |m: Option<Mask>| {
                m.ok_or_else(|| Error::Parse(format!("{} requires a mask", entry.kind)))
            };
            let g = match entry.kind.as_str() {
                "x_string" => Generator::XString(need(mask)?),
                "z_string" => Generator::ZString(need(mask)?),
                "local_x_layer_element" => {
                    let m = need(mask)?;
                    if m.count_ones() != 1 {
                        return Err(Error::Parse(format!("local X mask {m:#x} not a singleton")));
                    }
                    Generator::LocalX(m.trailing_zeros() as usize)
                }
                "global_x_mixer" => Generator::GlobalXMixer,
                "problem_phase" => Generator::ProblemPhase,
                "global_z_field" => Generator::GlobalZField,
                other => return Err(Error::Parse(format!("unknown generator kind {other:?}"))),
            };
            gens.push(g);
        }
        Ansatz::new(file.n, gens, file.initial_state)
    }

    /// Loads a serialized ansatz if `arg` names a file, otherwise parses it as a
    /// [`AnsatzSpec`] string.
    pub fn resolve(arg: &str) -> Result<Self> {
        let path = std::path::Path::new(arg);
        if path.is_file() {
            Self::from_toml(&std::fs::read_to_string(path)?)
        } else {
            arg.parse::<AnsatzSpec>()?.build()
        }
    }
}

#[derive(Serialize, Deserialize)]
struct AnsatzFile {
    n: usize,
    initial_state: InitialState,
    generators: Vec<GeneratorEntry>,
}

#[derive(Serialize, Deserialize)]
struct GeneratorEntry {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    mask: Option<String>,
}

fn check_enumerable(n: usize) -> Result<()> {
    if n > FULL_NONSYMMETRIC_CAP {
        return Err(Error::Cap {
            what: "n",
            value: n,
            cap: FULL_NONSYMMETRIC_CAP,
            reason: "depth ansatze enumerate subsets of all n vertices",
        });
    }
    Ok(())
}

fn masks_up_to_depth(n: usize, depth: usize) -> Vec<Mask> {
    let mut masks: Vec<Mask> = (1..=full_mask(n))
        .filter(|m| (m.count_ones() as usize) <= depth)
        .collect();
    masks.sort_by_key(|&m| (m.count_ones(), m));
    masks
}

/// Compact textual description of an ansatz family.
///
/// Forms: `classical:N`, `xdepth:N:D`, `full:N`, `path:N`, `ring:N`,
/// `xz:N:D:{kbody|global}`, `qaoa:N:P:{standard|localx|localx0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnsatzSpec {
    Classical(usize),
    XDepth(usize, usize),
    FullNonSymmetric(usize),
    Path(usize),
    Ring(usize),
    Xz(usize, usize, XzVariant),
    Qaoa(usize, usize, QaoaVariant),
}

impl AnsatzSpec {
    pub fn build(&self) -> Result<Ansatz> {
        match *self {
            AnsatzSpec::Classical(n) => Ansatz::classical(n),
            AnsatzSpec::XDepth(n, d) => Ansatz::x_depth(n, d),
            AnsatzSpec::FullNonSymmetric(n) => Ansatz::full_nonsymmetric(n),
            AnsatzSpec::Path(n) => Ansatz::path(n),
            AnsatzSpec::Ring(n) => Ansatz::ring(n),
            AnsatzSpec::Xz(n, d, v) => Ansatz::xz(n, d, v),
            AnsatzSpec::Qaoa(n, p, v) => Ansatz::qaoa(n, p, v),
        }
    }
}

impl FromStr for AnsatzSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<usize> {
            parts
                .get(i)
                .ok_or_else(|| Error::input(format!("ansatz spec {s:?} is missing a field")))?
                .parse()
                .map_err(|_| Error::input(format!("ansatz spec {s:?} has a bad number")))
        };
        let word = |i: usize| parts.get(i).copied().unwrap_or("");
        let arity = |k: usize| -> Result<()> {
            if parts.len() != k {
                return Err(Error::input(format!("ansatz spec {s:?} expects {k} fields")));
            }
            Ok(())
        };
        match parts[0] {
            "classical" => arity(2).and(Ok(AnsatzSpec::Classical(num(1)?))),
            "xdepth" => arity(3).and(Ok(AnsatzSpec::XDepth(num(1)?, num(2)?))),
            "full" => arity(2).and(Ok(AnsatzSpec::FullNonSymmetric(num(1)?))),
            "path" => arity(2).and(Ok(AnsatzSpec::Path(num(1)?))),
            "ring" => arity(2).and(Ok(AnsatzSpec::Ring(num(1)?))),
            "xz" => {
                arity(4)?;
                let v = match word(3) {
                    "kbody" | "a" => XzVariant::KBodyZ,
                    "global" | "b" => XzVariant::GlobalZ,
                    other => return Err(Error::input(format!("unknown xz variant {other:?}"))),
                };
                Ok(AnsatzSpec::Xz(num(1)?, num(2)?, v))
            }
            "qaoa" => {
                arity(4)?;
                let v = match word(3) {
                    "standard" => QaoaVariant::Standard,
                    "localx" => QaoaVariant::LocalX,
                    "localx0" => QaoaVariant::LocalXZeroStart,
                    other => return Err(Error::input(format!("unknown qaoa variant {other:?}"))),
                };
                Ok(AnsatzSpec::Qaoa(num(1)?, num(2)?, v))
            }
            other => Err(Error::input(format!("unknown ansatz family {other:?}"))),
        }
    }
}

impl fmt::Display for AnsatzSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AnsatzSpec::Classical(n) => write!(f, "classical:{n}"),
            AnsatzSpec::XDepth(n, d) => write!(f, "xdepth:{n}:{d}"),
            AnsatzSpec::FullNonSymmetric(n) => write!(f, "full:{n}"),
            AnsatzSpec::Path(n) => write!(f, "path:{n}"),
            AnsatzSpec::Ring(n) => write!(f, "ring:{n}"),
            AnsatzSpec::Xz(n, d, v) => {
                let v = if v == XzVariant::KBodyZ { "kbody" } else { "global" };
                write!(f, "xz:{n}:{d}:{v}")
            }
            AnsatzSpec::Qaoa(n, p, v) => {
                let v = match v {
                    QaoaVariant::Standard => "standard",
                    QaoaVariant::LocalX => "localx",
                    QaoaVariant::LocalXZeroStart => "localx0",
                };
                write!(f, "qaoa:{n}:{p}:{v}")
            }
        }
    }
}

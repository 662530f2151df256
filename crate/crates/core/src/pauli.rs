//! Phased Pauli strings on up to 64 sites, stored as an X bitmask, a Z
//! bitmask and a power of `i`.
//!
//! A site with both bits set carries `Y`. Products and commutation checks
//! reduce to popcounts, which is what keeps the cluster enumeration cheap.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::dense::{ensure_dense, DenseOperator, C64, DEFAULT_DENSE_CUTOFF};
use crate::error::{Error, Result};

pub const MAX_PAULI_SITES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    X,
    Y,
    Z,
}

impl Letter {
    fn bits(self) -> (bool, bool) {
        match self {
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Option<Self> {
        match (x, z) {
            (true, false) => Some(Letter::X),
            (true, true) => Some(Letter::Y),
            (false, true) => Some(Letter::Z),
            (false, false) => None,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }
}

/// `i^k` for `k ∈ {0,1,2,3}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn value(self) -> C64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn conj(self) -> Self {
        Phase((4 - self.0) % 4)
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    fn token(self) -> &'static str {
        match self.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// Letters of a string with the phase stripped; the natural map key for
/// sums of strings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliKey {
    pub x: u64,
    pub z: u64,
}

impl PauliKey {
    pub fn string(self) -> PauliString {
        PauliString {
            x: self.x,
            z: self.z,
            phase: Phase::ONE,
        }
    }

    pub fn support_mask(self) -> u64 {
        self.x | self.z
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    x: u64,
    z: u64,
    phase: Phase,
}

impl PauliString {
    pub fn identity() -> Self {
        Self {
            x: 0,
            z: 0,
            phase: Phase::ONE,
        }
    }

    pub fn single(site: usize, letter: Letter) -> Result<Self> {
        Self::from_letters([(site, letter)])
    }

    /// Product of single-site letters; a site may appear at most once.
    pub fn from_letters<I: IntoIterator<Item = (usize, Letter)>>(letters: I) -> Result<Self> {
        let mut out = Self::identity();
        for (site, letter) in letters {
            if site >= MAX_PAULI_SITES {
                return Err(Error::InvalidArgument(format!(
                    "site {site} exceeds the {MAX_PAULI_SITES}-site Pauli limit"
                )));
            }
            let bit = 1u64 << site;
            if (out.x | out.z) & bit != 0 {
                return Err(Error::InvalidArgument(format!("site {site} given twice")));
            }
            let (x, z) = letter.bits();
            if x {
                out.x |= bit;
            }
            if z {
                out.z |= bit;
            }
        }
        Ok(out)
    }

    pub fn from_key(key: PauliKey, phase: Phase) -> Self {
        Self {
            x: key.x,
            z: key.z,
            phase,
        }
    }

    pub fn with_phase(self, phase: Phase) -> Self {
        Self { phase, ..self }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn key(&self) -> PauliKey {
        PauliKey {
            x: self.x,
            z: self.z,
        }
    }

    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    pub fn support(&self) -> Vec<usize> {
        bits(self.support_mask()).collect()
    }

    pub fn weight(&self) -> usize {
        self.support_mask().count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.support_mask() == 0
    }

    pub fn letter(&self, site: usize) -> Option<Letter> {
        if site >= MAX_PAULI_SITES {
            return None;
        }
        Letter::from_bits(self.x >> site & 1 == 1, self.z >> site & 1 == 1)
    }

    pub fn letters(&self) -> impl Iterator<Item = (usize, Letter)> + '_ {
        bits(self.support_mask()).map(|s| (s, self.letter(s).expect("site is in the support")))
    }

    /// `P†`: the letters are Hermitian, so only the phase conjugates.
    pub fn adjoint(&self) -> Self {
        self.with_phase(self.phase.conj())
    }

    pub fn multiply(&self, other: &PauliString) -> PauliString {
        // Letter form ↔ X^x Z^z form: a Y site contributes a factor i.
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let k = self.phase.power() as u32
            + other.phase.power() as u32
            + (self.x & self.z).count_ones()
            + (other.x & other.z).count_ones()
            + 2 * (self.z & other.x).count_ones()
            + 3 * (x & z).count_ones();
        PauliString {
            x,
            z,
            phase: Phase::from_power(k),
        }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// `[P, Q]/2` as a single phased string, or `None` when `P` and `Q`
    /// commute.
    pub fn commutator(&self, other: &PauliString) -> Option<PauliString> {
        if self.commutes_with(other) {
            None
        } else {
            Some(self.multiply(other))
        }
    }

    /// `P|b⟩` for the basis state `b`: returns `(b', amplitude)`.
    #[inline]
    pub fn apply_basis(&self, b: usize) -> (usize, C64) {
        let b64 = b as u64;
        let k = self.phase.power() as u32
            + (self.x & self.z).count_ones()
            + 2 * (self.z & b64).count_ones();
        ((b64 ^ self.x) as usize, Phase::from_power(k).value())
    }

    /// `P·v` for a state vector on `log2(v.len())` sites.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for (b, amp) in v.iter().enumerate() {
            let (b2, phase) = self.apply_basis(b);
            out[b2] = phase * amp;
        }
        out
    }

    pub fn max_site(&self) -> Option<usize> {
        let m = self.support_mask();
        (m != 0).then(|| 63 - m.leading_zeros() as usize)
    }

    pub fn to_dense(&self, n: usize) -> Result<DenseOperator> {
        self.to_dense_within(n, DEFAULT_DENSE_CUTOFF)
    }

    pub fn to_dense_within(&self, n: usize, cutoff: usize) -> Result<DenseOperator> {
        ensure_dense(n, cutoff)?;
        if let Some(s) = self.max_site() {
            if s >= n {
                return Err(Error::SiteOutOfRange { site: s, n });
            }
        }
        let mut out = DenseOperator::zeros(n);
        for b in 0..1usize << n {
            let (row, amp) = self.apply_basis(b);
            out.set(row, b, amp);
        }
        Ok(out)
    }
}

pub(crate) fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let s = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(s)
        }
    })
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*", self.phase.token())?;
        if self.is_identity() {
            return write!(f, "I");
        }
        for (k, (site, letter)) in self.letters().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}{}", letter.symbol(), site)?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts an optional phase prefix (`1*`, `+1*`, `-1*`, `i*`, `+i*`,
    /// `-i*`) followed by whitespace-separated letter-site tokens, or `I`.
    fn from_str(input: &str) -> Result<Self> {
        let fail = |reason: &str| Error::PauliParse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let trimmed = input.trim();
        let (phase, body) = match trimmed.split_once('*') {
            Some((p, rest)) => {
                let phase = match p.trim() {
                    "1" | "+1" => Phase::ONE,
                    "-1" => Phase::MINUS_ONE,
                    "i" | "+i" => Phase::I,
                    "-i" => Phase::MINUS_I,
                    _ => return Err(fail("unknown phase prefix")),
                };
                (phase, rest)
            }
            None => (Phase::ONE, trimmed),
        };
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.is_empty() {
            return Err(fail("no letters"));
        }
        if tokens == ["I"] {
            return Ok(PauliString::identity().with_phase(phase));
        }
        let mut letters = Vec::with_capacity(tokens.len());
        for tok in tokens {
            let mut chars = tok.chars();
            let letter = match chars.next() {
                Some('X') => Letter::X,
                Some('Y') => Letter::Y,
                Some('Z') => Letter::Z,
                _ => return Err(fail("letters must be X, Y or Z")),
            };
            let site: usize = chars
                .as_str()
                .parse()
                .map_err(|_| fail("letter must be followed by a site index"))?;
            letters.push((site, letter));
        }
        PauliString::from_letters(letters)
            .map(|p| p.with_phase(phase))
            .map_err(|e| fail(&e.to_string()))
    }
}

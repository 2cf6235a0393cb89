//! Signed Pauli strings in the symplectic bit-mask representation.
//!
//! A string over `L` sites is `(-1)^sign * P_1 ⊗ ... ⊗ P_L` with each site
//! operator the Hermitian Pauli encoded by an (x, z) bit pair: I = (0,0),
//! X = (1,0), Z = (0,1), Y = (1,1). Products of commuting strings stay in
//! this ±1-phase set; the transient `i` phases arising from site-wise
//! products are tracked mod 4 internally and must cancel, so the API rejects
//! sign-exact multiplication of anticommuting inputs.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::f2::BitVec;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PauliError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("site {site} out of range for {len} qubits")]
    SiteOutOfRange { site: usize, len: usize },
    #[error("sign-exact product of anticommuting Pauli strings")]
    AnticommutingProduct,
    #[error("invalid Pauli text: {0}")]
    ParseError(String),
}

/// A single-site Pauli axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// (x, z) encoding of the Hermitian operator on this axis.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Axis::X => (true, false),
            Axis::Y => (true, true),
            Axis::Z => (false, true),
        }
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::ALL[rng.gen_range(0..3)]
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X => write!(f, "X"),
            Axis::Y => write!(f, "Y"),
            Axis::Z => write!(f, "Z"),
        }
    }
}

/// A Clifford gate from the circuit model's gate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Gate {
    /// CNOT with the given control and target sites.
    Cnot { control: usize, target: usize },
    /// Single-site phase gate: X -> Y, Y -> -X, Z -> Z.
    Phase { site: usize },
}

impl Gate {
    fn check(self, len: usize) -> Result<(), PauliError> {
        let bad = |site| PauliError::SiteOutOfRange { site, len };
        match self {
            Gate::Cnot { control, target } => {
                if control >= len {
                    return Err(bad(control));
                }
                if target >= len {
                    return Err(bad(target));
                }
                if control == target {
                    return Err(PauliError::ParseError("CNOT with control == target".into()));
                }
                Ok(())
            }
            Gate::Phase { site } => {
                if site >= len {
                    return Err(bad(site));
                }
                Ok(())
            }
        }
    }
}

/// A signed `L`-site Pauli string.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    len: usize,
    x: BitVec,
    z: BitVec,
    sign: bool,
}

impl PauliString {
    pub fn identity(len: usize) -> Self {
        Self { len, x: BitVec::zeros(len), z: BitVec::zeros(len), sign: false }
    }

    /// `+A_site` on an otherwise-identity string.
    pub fn single(len: usize, site: usize, axis: Axis) -> Self {
        assert!(site < len, "site {site} out of range for {len} qubits");
        let mut p = Self::identity(len);
        let (x, z) = axis.bits();
        p.x.set(site, x);
        p.z.set(site, z);
        p
    }

    pub fn from_parts(x: BitVec, z: BitVec, sign: bool) -> Self {
        assert_eq!(x.len(), z.len(), "x/z mask lengths differ");
        Self { len: x.len(), x, z, sign }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    pub fn sign(&self) -> bool {
        self.sign
    }

    pub fn set_sign(&mut self, sign: bool) {
        self.sign = sign;
    }

    pub fn flip_sign(&mut self) {
        self.sign = !self.sign;
    }

    pub fn x_bit(&self, site: usize) -> bool {
        self.x.get(site)
    }

    pub fn z_bit(&self, site: usize) -> bool {
        self.z.get(site)
    }

    pub fn x_mask(&self) -> &BitVec {
        &self.x
    }

    pub fn z_mask(&self) -> &BitVec {
        &self.z
    }

    /// The site operator as an axis, or `None` for identity.
    pub fn axis_at(&self, site: usize) -> Option<Axis> {
        match (self.x.get(site), self.z.get(site)) {
            (false, false) => None,
            (true, false) => Some(Axis::X),
            (true, true) => Some(Axis::Y),
            (false, true) => Some(Axis::Z),
        }
    }

    pub fn set_site(&mut self, site: usize, axis: Option<Axis>) {
        let (x, z) = axis.map_or((false, false), Axis::bits);
        self.x.set(site, x);
        self.z.set(site, z);
    }

    /// Number of sites with a non-identity operator.
    pub fn weight(&self) -> usize {
        self.x
            .words()
            .iter()
            .zip(self.z.words())
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    /// Whether the symplectic product vanishes.
    pub fn commutes_with(&self, other: &Self) -> Result<bool, PauliError> {
        if self.len != other.len {
            return Err(PauliError::LengthMismatch(self.len, other.len));
        }
        Ok(!(self.x.dot(&other.z) ^ self.z.dot(&other.x)))
    }

    /// Exponent of `i` accumulated by site-wise products, mod 4.
    fn phase_exponent(&self, other: &Self) -> u8 {
        let mut plus = 0u32;
        let mut minus = 0u32;
        let iter = self
            .x
            .words()
            .iter()
            .zip(self.z.words())
            .zip(other.x.words().iter().zip(other.z.words()));
        for ((&x1, &z1), (&x2, &z2)) in iter {
            // X.Y = iZ, Y.Z = iX, Z.X = iY
            plus += ((x1 & !z1 & x2 & z2)
                | (x1 & z1 & !x2 & z2)
                | (!x1 & z1 & x2 & !z2))
                .count_ones();
            // X.Z = -iY, Y.X = -iZ, Z.Y = -iX
            minus += ((x1 & !z1 & !x2 & z2)
                | (x1 & z1 & x2 & !z2)
                | (!x1 & z1 & x2 & z2))
                .count_ones();
        }
        (plus.wrapping_sub(minus) & 3) as u8
    }

    /// Sign-exact group product. Valid only between commuting strings, where
    /// the accumulated `i` phases cancel to ±1.
    pub fn multiply(&self, other: &Self) -> Result<Self, PauliError> {
        self.multiply_with_extra_phase(other, 0)
    }

    /// Product with an extra `i^extra` prefactor, used to build Hermitian
    /// operators like `iXZ` from anticommuting factors. Errors if the total
    /// phase is not ±1.
    pub fn multiply_with_extra_phase(
        &self,
        other: &Self,
        extra: u8,
    ) -> Result<Self, PauliError> {
        if self.len != other.len {
            return Err(PauliError::LengthMismatch(self.len, other.len));
        }
        let exponent = (2 * u8::from(self.sign)
            + 2 * u8::from(other.sign)
            + self.phase_exponent(other)
            + extra)
            & 3;
        if exponent & 1 != 0 {
            return Err(PauliError::AnticommutingProduct);
        }
        let mut x = self.x.clone();
        x.xor_assign(&other.x);
        let mut z = self.z.clone();
        z.xor_assign(&other.z);
        Ok(Self { len: self.len, x, z, sign: exponent == 2 })
    }

    /// Conjugate in place by a gate: `P -> U P U^dagger`, signs exact.
    pub fn apply_gate(&mut self, gate: Gate) -> Result<(), PauliError> {
        gate.check(self.len)?;
        match gate {
            Gate::Cnot { control: c, target: t } => {
                // X_c -> X_c X_t, Z_t -> Z_c Z_t; the sign flips exactly for
                // the X_c Z_t - and Y_c Y_t -type combinations.
                let flip = self.x.get(c)
                    & self.z.get(t)
                    & !(self.x.get(t) ^ self.z.get(c));
                if flip {
                    self.sign = !self.sign;
                }
                if self.x.get(c) {
                    self.x.flip(t);
                }
                if self.z.get(t) {
                    self.z.flip(c);
                }
            }
            Gate::Phase { site } => {
                if self.x.get(site) & self.z.get(site) {
                    self.sign = !self.sign;
                }
                if self.x.get(site) {
                    self.z.flip(site);
                }
            }
        }
        Ok(())
    }

    pub fn conjugate_by_gate(&self, gate: Gate) -> Result<Self, PauliError> {
        let mut p = self.clone();
        p.apply_gate(gate)?;
        Ok(p)
    }

    /// Conjugate in place by the inverse phase gate: X -> -Y, Y -> X, Z -> Z.
    pub(crate) fn apply_phase_inverse(&mut self, site: usize) {
        if self.x.get(site) & !self.z.get(site) {
            self.sign = !self.sign;
        }
        if self.x.get(site) {
            self.z.flip(site);
        }
    }

    /// Conjugate in place by a Hadamard: X <-> Z, Y -> -Y.
    pub(crate) fn apply_hadamard(&mut self, site: usize) {
        if self.x.get(site) & self.z.get(site) {
            self.sign = !self.sign;
        }
        let x = self.x.get(site);
        self.x.set(site, self.z.get(site));
        self.z.set(site, x);
    }

    /// Conjugate in place by Z at `site`: flips the sign iff the site
    /// operator anticommutes with Z (X or Y there).
    pub(crate) fn apply_z_conjugation(&mut self, site: usize) {
        if self.x.get(site) {
            self.sign = !self.sign;
        }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut p = Self::identity(len);
        for i in 0..len {
            match rng.gen_range(0..4) {
                0 => {}
                1 => p.set_site(i, Some(Axis::X)),
                2 => p.set_site(i, Some(Axis::Y)),
                _ => p.set_site(i, Some(Axis::Z)),
            }
        }
        p.sign = rng.gen();
        p
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if self.sign { '-' } else { '+' })?;
        for i in 0..self.len {
            match self.axis_at(i) {
                None => write!(f, "I")?,
                Some(a) => write!(f, "{a}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    /// Parse the text form `+XIZY`: a sign character followed by one letter
    /// per site. Round-trips with `Display`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let sign = match chars.next() {
            Some('+') => false,
            Some('-') => true,
            other => {
                return Err(PauliError::ParseError(format!(
                    "expected sign character, found {other:?}"
                )))
            }
        };
        let rest: Vec<char> = chars.collect();
        let mut p = Self::identity(rest.len());
        p.sign = sign;
        for (i, c) in rest.iter().enumerate() {
            match c {
                'I' => {}
                'X' => p.set_site(i, Some(Axis::X)),
                'Y' => p.set_site(i, Some(Axis::Y)),
                'Z' => p.set_site(i, Some(Axis::Z)),
                c => {
                    return Err(PauliError::ParseError(format!(
                        "unexpected character {c:?} at site {i}"
                    )))
                }
            }
        }
        Ok(p)
    }
}

/// A product basis fixed by choosing one diagonal Pauli axis per site.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocalPauliBasis {
    axes: Vec<Axis>,
}

impl LocalPauliBasis {
    pub fn new(axes: Vec<Axis>) -> Self {
        Self { axes }
    }

    pub fn uniform(axis: Axis, len: usize) -> Self {
        Self { axes: vec![axis; len] }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self { axes: (0..len).map(|_| Axis::sample(rng)).collect() }
    }

    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn axis_at(&self, site: usize) -> Axis {
        self.axes[site]
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// The single-site diagonal operator `+A_site`.
    pub fn operator_at(&self, site: usize, len: usize) -> PauliString {
        PauliString::single(len, site, self.axes[site])
    }
}

impl fmt::Display for LocalPauliBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.axes {
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

//! Arithmetic in GF(2^8) with reduction polynomial x^8 + x^4 + x^3 + x^2 + 1.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Sub, SubAssign};

use crate::error::{Error, Result};

/// Reduction polynomial, including the x^8 term.
pub const POLY: u16 = 0x11D;

const fn build_tables() -> ([u8; 512], [u8; 256]) {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= POLY;
        }
        i += 1;
    }
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    (exp, log)
}

const TABLES: ([u8; 512], [u8; 256]) = build_tables();
static EXP: [u8; 512] = TABLES.0;
static LOG: [u8; 256] = TABLES.1;

const fn build_mul_table() -> [[u8; 256]; 256] {
    let mut table = [[0u8; 256]; 256];
    let mut a = 1;
    while a < 256 {
        let mut b = 1;
        while b < 256 {
            table[a][b] = TABLES.0[TABLES.1[a] as usize + TABLES.1[b] as usize];
            b += 1;
        }
        a += 1;
    }
    table
}

/// Full product table, used by the row operations in [`crate::matrix`].
pub(crate) static MUL_TABLE: [[u8; 256]; 256] = build_mul_table();

/// One symbol of the code alphabet.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(transparent)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    #[inline]
    pub const fn new(value: u8) -> Self {
        Gf256(value)
    }

    #[inline]
    pub const fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Multiplicative inverse. Zero has none.
    pub fn inv(self) -> Result<Gf256> {
        if self.0 == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(Gf256(EXP[255 - LOG[self.0 as usize] as usize]))
    }

    pub fn pow(self, mut e: u32) -> Gf256 {
        let mut base = self;
        let mut acc = Gf256::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

impl fmt::Display for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

impl From<u8> for Gf256 {
    fn from(v: u8) -> Self {
        Gf256(v)
    }
}

impl From<Gf256> for u8 {
    fn from(v: Gf256) -> Self {
        v.0
    }
}

impl Add for Gf256 {
    type Output = Gf256;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl Sub for Gf256 {
    type Output = Gf256;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl AddAssign for Gf256 {
    #[inline]
    fn add_assign(&mut self, rhs: Gf256) {
        self.0 ^= rhs.0;
    }
}

impl SubAssign for Gf256 {
    #[inline]
    fn sub_assign(&mut self, rhs: Gf256) {
        self.0 ^= rhs.0;
    }
}

impl Mul for Gf256 {
    type Output = Gf256;
    #[inline]
    fn mul(self, rhs: Gf256) -> Gf256 {
        Gf256(MUL_TABLE[self.0 as usize][rhs.0 as usize])
    }
}

impl MulAssign for Gf256 {
    #[inline]
    fn mul_assign(&mut self, rhs: Gf256) {
        *self = *self * rhs;
    }
}

impl Div for Gf256 {
    type Output = Gf256;
    /// Panics on division by zero, like integer division.
    fn div(self, rhs: Gf256) -> Gf256 {
        self * rhs.inv().expect("division by zero in GF(2^8)")
    }
}

impl std::iter::Sum for Gf256 {
    fn sum<I: Iterator<Item = Gf256>>(iter: I) -> Gf256 {
        iter.fold(Gf256::ZERO, |a, b| a + b)
    }
}

#[inline]
pub fn add(a: Gf256, b: Gf256) -> Gf256 {
    a + b
}

#[inline]
pub fn mul(a: Gf256, b: Gf256) -> Gf256 {
    a * b
}

#[inline]
pub fn inv(a: Gf256) -> Result<Gf256> {
    a.inv()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Shift-and-add multiply with reduction after every shift.
    fn slow_mul(mut a: u8, mut b: u8) -> u8 {
        let mut acc = 0u8;
        while b != 0 {
            if b & 1 != 0 {
                acc ^= a;
            }
            let carry = a & 0x80 != 0;
            a <<= 1;
            if carry {
                a ^= (POLY & 0xFF) as u8;
            }
            b >>= 1;
        }
        acc
    }

    fn search_inverse(a: u8) -> u8 {
        (1..=255u8).find(|&b| slow_mul(a, b) == 1).unwrap()
    }

    #[test]
    fn add_examples() {
        assert_eq!(add(Gf256(0x00), Gf256(0x5A)), Gf256(0x5A));
        assert_eq!(add(Gf256(0x5A), Gf256(0x5A)), Gf256(0x00));
        assert_eq!(add(Gf256(0x0F), Gf256(0xF0)), Gf256(0xFF));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(mul(Gf256(0x01), Gf256(0xAB)), Gf256(0xAB));
        assert_eq!(slow_mul(0x02, 0x80), 0x1D);
        assert_eq!(mul(Gf256(0x02), Gf256(0x80)), Gf256(0x1D));
    }

    #[test]
    fn table_matches_shift_and_add() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(mul(Gf256(a), Gf256(b)).0, slow_mul(a, b), "{a} * {b}");
            }
        }
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(inv(Gf256(1)).unwrap(), Gf256(1));
        assert_eq!(search_inverse(0x02), 0x8E);
        assert_eq!(inv(Gf256(0x02)).unwrap(), Gf256(0x8E));
        assert!(matches!(inv(Gf256(0)), Err(Error::ZeroInverse)));
    }

    #[test]
    fn inverse_exhaustive() {
        for a in 1..=255u8 {
            let ia = inv(Gf256(a)).unwrap();
            assert_eq!(Gf256(a) * ia, Gf256::ONE);
            assert_eq!(ia.0, search_inverse(a));
            assert_eq!(ia.inv().unwrap(), Gf256(a));
        }
    }

    #[test]
    fn distributivity_exhaustive() {
        for a in 0..=255u8 {
            let a = Gf256(a);
            for b in 0..=255u8 {
                let b = Gf256(b);
                let ab = a * b;
                for c in 0..=255u8 {
                    let c = Gf256(c);
                    assert_eq!(a * (b + c), ab + a * c);
                }
            }
        }
    }

    #[test]
    fn pow_and_div() {
        assert_eq!(Gf256(2).pow(8), Gf256(0x1D));
        assert_eq!(Gf256(7).pow(0), Gf256::ONE);
        for a in 1..=255u8 {
            assert_eq!(Gf256(a).pow(255), Gf256::ONE);
            assert_eq!(Gf256(a) / Gf256(a), Gf256::ONE);
        }
    }
}

//! Systematic `(n, k)` MDS base code built from a Cauchy matrix.
//!
//! Codeword positions `0..k` are the data symbols, positions `k..n` are the
//! parities `f_1..f_r`. Parity `j` (zero-based) is `sum_i P[j][i] * data[i]`
//! with `P[j][i] = 1 / (x_j + y_i)`, `x_j = j`, `y_i = r + i`. All `x` and
//! `y` values are distinct field elements, so every square submatrix of `P`
//! is nonsingular and every `k`-subset of the stacked `[I; P]` is invertible.

use crate::error::{param_err, Error, Result};
use crate::field::Gf256;
use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseCode {
    n: usize,
    k: usize,
    parity: Matrix,
}

impl BaseCode {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n > 256 {
            return Err(param_err(format!("n = {n} exceeds the field size 256")));
        }
        if k == 0 || k >= n {
            return Err(param_err(format!("need 0 < k < n, got n = {n}, k = {k}")));
        }
        let r = n - k;
        let mut parity = Matrix::zeros(r, k);
        for j in 0..r {
            for i in 0..k {
                let x = Gf256(j as u8);
                let y = Gf256((r + i) as u8);
                parity.set(j, i, (x + y).inv()?);
            }
        }
        Ok(BaseCode { n, k, parity })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.n - self.k
    }

    /// The `r x k` parity coefficient matrix.
    pub fn parity_matrix(&self) -> &Matrix {
        &self.parity
    }

    /// Coefficients of codeword position `pos` as a function of the data.
    pub fn generator_row(&self, pos: usize) -> Vec<Gf256> {
        if pos < self.k {
            let mut row = vec![Gf256::ZERO; self.k];
            row[pos] = Gf256::ONE;
            row
        } else {
            self.parity.row(pos - self.k).to_vec()
        }
    }

    fn generator_rows(&self, positions: &[usize]) -> Result<Matrix> {
        let mut rows = Vec::with_capacity(positions.len());
        for (idx, &p) in positions.iter().enumerate() {
            if p >= self.n {
                return Err(param_err(format!("codeword position {p} out of range")));
            }
            if positions[..idx].contains(&p) {
                return Err(Error::DuplicateRow(p));
            }
            rows.push(self.generator_row(p));
        }
        Matrix::from_rows(&rows)
    }

    /// The `r` parities of one column.
    pub fn encode_column(&self, data: &[Gf256]) -> Result<Vec<Gf256>> {
        if data.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                got: data.len(),
            });
        }
        self.parity.mul_vec(data)
    }

    /// The full `n`-symbol codeword of one column.
    pub fn codeword(&self, data: &[Gf256]) -> Result<Vec<Gf256>> {
        let mut word = data.to_vec();
        word.extend(self.encode_column(data)?);
        Ok(word)
    }

    /// Recovers the data from any `k` (position, value) pairs.
    pub fn decode_any_k(&self, cells: &[(usize, Gf256)]) -> Result<Vec<Gf256>> {
        if cells.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                got: cells.len(),
            });
        }
        let positions: Vec<usize> = cells.iter().map(|c| c.0).collect();
        let inv = self.generator_rows(&positions)?.inverse()?;
        let values: Vec<Gf256> = cells.iter().map(|c| c.1).collect();
        inv.mul_vec(&values)
    }

    /// Matrix mapping the values at `sources` (exactly `k` distinct
    /// positions) to the values at `targets`.
    pub fn reconstruction_matrix(&self, sources: &[usize], targets: &[usize]) -> Result<Matrix> {
        if sources.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                got: sources.len(),
            });
        }
        let inv = self.generator_rows(sources)?.inverse()?;
        let mut rows = Vec::with_capacity(targets.len());
        for &t in targets {
            if t >= self.n {
                return Err(param_err(format!("codeword position {t} out of range")));
            }
            rows.push(self.generator_row(t));
        }
        Matrix::from_rows(&rows)?.mul(&inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        rec(0, n, k, &mut cur, &mut out);
        out
    }

    #[test]
    fn small_code_every_subset_invertible() {
        let code = BaseCode::new(4, 2).unwrap();
        let all = subsets(4, 2);
        assert_eq!(all.len(), 6);
        for s in all {
            let rows: Vec<Vec<Gf256>> = s.iter().map(|&p| code.generator_row(p)).collect();
            assert_eq!(Matrix::from_rows(&rows).unwrap().rank(), 2, "{s:?}");
        }
    }

    #[test]
    fn mds_exhaustive_for_golden_sizes() {
        for (n, k) in [(11, 6), (12, 7), (12, 8), (9, 5)] {
            let code = BaseCode::new(n, k).unwrap();
            for s in subsets(n, k) {
                let rows: Vec<Vec<Gf256>> = s.iter().map(|&p| code.generator_row(p)).collect();
                assert!(Matrix::from_rows(&rows).unwrap().is_invertible(), "({n},{k}) {s:?}");
            }
        }
    }

    #[test]
    fn param_errors() {
        assert!(matches!(BaseCode::new(257, 2), Err(Error::Param(_))));
        assert!(matches!(BaseCode::new(5, 5), Err(Error::Param(_))));
        assert!(BaseCode::new(256, 200).is_ok());
    }

    #[test]
    fn encode_zero_and_unit() {
        let code = BaseCode::new(11, 6).unwrap();
        assert!(code
            .encode_column(&[Gf256::ZERO; 6])
            .unwrap()
            .iter()
            .all(|v| v.is_zero()));
        for i in 0..6 {
            let mut e = vec![Gf256::ZERO; 6];
            e[i] = Gf256::ONE;
            let p = code.encode_column(&e).unwrap();
            for j in 0..5 {
                assert_eq!(p[j], code.parity_matrix().get(j, i));
            }
        }
        assert!(matches!(
            code.encode_column(&[Gf256::ONE; 5]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn decode_roundtrip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let code = BaseCode::new(12, 7).unwrap();
        for _ in 0..200 {
            let data: Vec<Gf256> = (0..7).map(|_| Gf256(rng.gen())).collect();
            let word = code.codeword(&data).unwrap();
            let mut positions: Vec<usize> = (0..12).collect();
            // erase r rows at random, keep the remaining k
            for _ in 0..5 {
                let idx = rng.gen_range(0..positions.len());
                positions.remove(idx);
            }
            positions.truncate(7);
            let cells: Vec<(usize, Gf256)> = positions.iter().map(|&p| (p, word[p])).collect();
            let back = code.decode_any_k(&cells).unwrap();
            assert_eq!(back, data);
            assert_eq!(code.encode_column(&back).unwrap(), word[7..].to_vec());
        }
    }

    #[test]
    fn decode_systematic_and_zero() {
        let code = BaseCode::new(6, 3).unwrap();
        let cells = [(0, Gf256(5)), (1, Gf256(6)), (2, Gf256(7))];
        assert_eq!(code.decode_any_k(&cells).unwrap(), vec![Gf256(5), Gf256(6), Gf256(7)]);
        let zero = [(3, Gf256(0)), (4, Gf256(0)), (5, Gf256(0))];
        assert!(code.decode_any_k(&zero).unwrap().iter().all(|v| v.is_zero()));
        let dup = [(3, Gf256(0)), (3, Gf256(0)), (5, Gf256(0))];
        assert!(matches!(code.decode_any_k(&dup), Err(Error::DuplicateRow(3))));
    }

    #[test]
    fn decode_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let code = BaseCode::new(9, 5).unwrap();
        let rows = [1usize, 3, 5, 6, 8];
        for _ in 0..50 {
            let alpha = Gf256(rng.gen());
            let o1: Vec<Gf256> = (0..5).map(|_| Gf256(rng.gen())).collect();
            let o2: Vec<Gf256> = (0..5).map(|_| Gf256(rng.gen())).collect();
            let mix: Vec<(usize, Gf256)> = rows
                .iter()
                .zip(o1.iter().zip(&o2))
                .map(|(&p, (&a, &b))| (p, alpha * a + b))
                .collect();
            let d1 = code
                .decode_any_k(&rows.iter().copied().zip(o1.iter().copied()).collect::<Vec<_>>())
                .unwrap();
            let d2 = code
                .decode_any_k(&rows.iter().copied().zip(o2.iter().copied()).collect::<Vec<_>>())
                .unwrap();
            let dm = code.decode_any_k(&mix).unwrap();
            for i in 0..5 {
                assert_eq!(dm[i], alpha * d1[i] + d2[i]);
            }
        }
    }

    #[test]
    fn reconstruction_matrix_recovers_missing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let code = BaseCode::new(11, 6).unwrap();
        let data: Vec<Gf256> = (0..6).map(|_| Gf256(rng.gen())).collect();
        let word = code.codeword(&data).unwrap();
        let sources = [1, 2, 3, 4, 5, 6];
        let targets = [0, 7, 10];
        let rm = code.reconstruction_matrix(&sources, &targets).unwrap();
        let obs: Vec<Gf256> = sources.iter().map(|&p| word[p]).collect();
        let out = rm.mul_vec(&obs).unwrap();
        assert_eq!(out, targets.iter().map(|&t| word[t]).collect::<Vec<_>>());
    }
}

//! Cells and symbol grids.
//!
//! All indices in the library are zero-based: node `0..n`, column `0..m`.
//! Human-readable output ([`Cell`]'s `Display`, plan listings, the CLI) is
//! one-based.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::Gf256;

/// A single symbol position in a stripe: node (row) and column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub node: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(node: usize, col: usize) -> Self {
        Cell { node, col }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.node + 1, self.col + 1)
    }
}

/// Dense row-major grid of symbols. A stripe is an `n x m` grid whose row
/// `v` is node `v`'s shard; a data grid is `k x m`.
#[derive(Clone, PartialEq, Eq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    cells: Vec<Gf256>,
}

pub type Stripe = Grid;

impl Grid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Grid {
            rows,
            cols,
            cells: vec![Gf256::ZERO; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Gf256>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut cells = Vec::with_capacity(nrows * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(Error::LengthMismatch {
                    expected: ncols,
                    got: row.len(),
                });
            }
            cells.extend(row);
        }
        Ok(Grid {
            rows: nrows,
            cols: ncols,
            cells,
        })
    }

    pub fn from_bytes(rows: usize, cols: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: bytes.len(),
            });
        }
        Ok(Grid {
            rows,
            cols,
            cells: bytes.iter().copied().map(Gf256).collect(),
        })
    }

    /// Fills a grid from a generator in row-major order.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Gf256) -> Self {
        let mut cells = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                cells.push(f(r, c));
            }
        }
        Grid { rows, cols, cells }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, cell: Cell) -> Gf256 {
        self.cells[cell.node * self.cols + cell.col]
    }

    #[inline]
    pub fn set(&mut self, cell: Cell, v: Gf256) {
        self.cells[cell.node * self.cols + cell.col] = v;
    }

    #[inline]
    pub fn add_to(&mut self, cell: Cell, v: Gf256) {
        self.cells[cell.node * self.cols + cell.col] += v;
    }

    pub fn row(&self, r: usize) -> &[Gf256] {
        &self.cells[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Gf256] {
        &mut self.cells[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Gf256> {
        (0..self.rows).map(|r| self.cells[r * self.cols + c]).collect()
    }

    pub fn cells(&self) -> &[Gf256] {
        &self.cells
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(|v| v.is_zero())
    }

    pub fn check_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if self.rows != rows || self.cols != cols {
            return Err(Error::Shape {
                expected_rows: rows,
                expected_cols: cols,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Grid {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(|v| format!("{:02x}", v.0)).collect();
            writeln!(f, "  {}", line.join(" "))?;
        }
        Ok(())
    }
}

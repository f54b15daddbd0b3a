//! Sweeps C1 codes with m = 4 over r and k and prints the CSV table.

use piggyback::analysis::{c1_optimal_l, sweep, to_csv};
use piggyback::{CodeParams, Result};

fn main() -> Result<()> {
    let mut grid = Vec::new();
    for r in 4..=6 {
        for k in [r, 2 * r, 4 * r] {
            let (_, l) = c1_optimal_l(4, r, k + r)?;
            grid.push(CodeParams::c1(k + r, k, 4, l));
        }
    }
    print!("{}", to_csv(&sweep(&grid)));
    Ok(())
}

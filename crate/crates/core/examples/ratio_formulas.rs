//! Closed-form repair ratios next to measured ones, and the optimal
//! number of subsets.

use piggyback::analysis::{c1_gamma_bounds, c1_optimal_l, c2_gamma_parity, c2_gamma_sys_bounds, c2_optimal_l, to_f64};
use piggyback::{bandwidth_table, C1Spec, C2Spec, Result, DEFAULT_THETA};

fn main() -> Result<()> {
    let (n, k, m) = (36, 30, 4);
    let (l_star, l) = c1_optimal_l(m, n - k, n)?;
    println!("C1 n={n} k={k} m={m}: L* = {l_star:.4}, chosen L = {l}");
    let bounds = c1_gamma_bounds(n, k, m, l)?;
    let measured = bandwidth_table(&C1Spec::new(n, k, m, l)?)?.gamma_all();
    println!(
        "  bounds [{:.6}, {:.6}], measured {:.6} = {measured}",
        bounds.min_f64(),
        bounds.max_f64(),
        to_f64(measured)
    );

    let (n, k, s) = (28, 24, 4);
    let (l_star, l) = c2_optimal_l(s, n - k, k)?;
    println!("C2 n={n} k={k} s={s}: L* = {l_star:.4}, chosen L = {l}");
    let table = bandwidth_table(&C2Spec::new(n, k, s, l, DEFAULT_THETA)?)?;
    let bounds = c2_gamma_sys_bounds(n, k, s, l)?;
    println!(
        "  data: predicted [{:.6}, {:.6}], measured {:.6}",
        bounds.min_f64(),
        bounds.max_f64(),
        to_f64(table.gamma_sys())
    );
    println!(
        "  parity: formula {}, measured {}",
        c2_gamma_parity(n, k, s, l)?,
        table.gamma_parity()
    );
    Ok(())
}

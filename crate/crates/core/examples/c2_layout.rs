//! Shows the slot placement and the parity transform pairs of C2(12,8,16,2).

use piggyback::{C2Spec, Result, DEFAULT_THETA};

fn main() -> Result<()> {
    let code = C2Spec::new(12, 8, 4, 2, DEFAULT_THETA)?;
    println!("theta = {}", code.theta());
    for slot in code.slots() {
        let terms: Vec<String> = slot.terms.iter().map(|c| c.to_string()).collect();
        println!("  subset {} slot {:>2} -> {}: {}", slot.subset, slot.slot, slot.target, terms.join(" + "));
    }
    let pairs = code.transform_pairs();
    println!("{} transform pairs, first group:", pairs.len());
    for p in pairs.iter().filter(|p| p.group == 1) {
        println!("  rows {}/{}: upper {} lower {}", p.low_row, p.high_row, p.upper, p.lower);
    }
    Ok(())
}

//! Prints the node partition and every piggyback function of C1(11,6,4,2).

use piggyback::{C1Spec, Result};

fn main() -> Result<()> {
    let code = C1Spec::new(11, 6, 4, 2)?;
    println!("subsets (1-based nodes):");
    for (i, subset) in code.partition().iter().enumerate() {
        let nodes: Vec<String> = subset.iter().map(|v| (v + 1).to_string()).collect();
        println!("  S{}: {}  (protects {} symbols)", i + 1, nodes.join(" "), code.protected_count(i + 1));
    }
    println!("piggybacks:");
    for g in code.piggybacks() {
        let terms: Vec<String> = g.terms.iter().map(|c| c.to_string()).collect();
        println!("  g({},{}) -> {}: {}", g.alpha, g.beta, g.target, terms.join(" + "));
    }
    Ok(())
}

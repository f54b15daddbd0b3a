//! Builds the repair plan for one data node and one parity node, prints the
//! listing and runs it against an encoded stripe.

use piggyback::{ArrayCode, C1Spec, ErasedStripe, Gf256, Grid, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let code = C1Spec::new(11, 6, 4, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let data = Grid::from_fn(code.k(), code.m(), |_, _| Gf256(rng.gen()));
    let stripe = code.encode(&data)?;

    for failed in [0, 8] {
        let plan = code.plan_repair(failed)?;
        println!("{}", plan.listing());
        let row = plan.execute(code.base(), &ErasedStripe { stripe: &stripe, erased: failed })?;
        assert_eq!(row, stripe.row(failed));
        println!(
            "node {} rebuilt from {} symbols instead of {}\n",
            failed + 1,
            plan.bandwidth(),
            code.k() * code.m()
        );
    }
    Ok(())
}

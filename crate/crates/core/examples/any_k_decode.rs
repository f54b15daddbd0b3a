//! Erases r nodes of a stripe, decodes from the survivors, then checks every
//! k-subset.

use piggyback::{decode_any_k, verify_mds, ArrayCode, CodeParams, Gf256, Grid, Result};

fn main() -> Result<()> {
    for params in [CodeParams::c1(11, 6, 4, 2), CodeParams::c2_default(12, 8, 4, 2)] {
        let code = params.build()?;
        let data = Grid::from_fn(code.k(), code.m(), |r, c| Gf256((r * 37 + c * 11) as u8));
        let stripe = code.encode(&data)?;

        let survivors: Vec<usize> = (code.n() - code.k()..code.n()).collect();
        let rows: Vec<&[Gf256]> = survivors.iter().map(|&v| stripe.row(v)).collect();
        assert_eq!(decode_any_k(&code, &survivors, &rows)?, data);
        println!("{params}: decoded from the last {} nodes", code.k());

        println!("{params}: {}", verify_mds(&code)?);
    }
    Ok(())
}

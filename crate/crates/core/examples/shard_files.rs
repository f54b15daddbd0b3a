//! Encodes a file into shard files, deletes one shard, repairs it and
//! decodes the file back.

use piggyback::shard::{decode_files, encode_file, repair_file, shard_path};
use piggyback::{CodeParams, Result};

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join(format!("pbk-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let input = dir.join("input.bin");
    let bytes: Vec<u8> = (0..100_000u32).map(|i| (i.wrapping_mul(2_654_435_761) >> 24) as u8).collect();
    std::fs::write(&input, &bytes)?;

    let code = CodeParams::c2_default(12, 8, 4, 2).build()?;
    let manifest = encode_file(&code, &input, &dir, "input")?;
    println!("{} bytes -> {} stripes per shard", manifest.file_length, manifest.stripe_count);

    let lost = 3;
    std::fs::remove_file(shard_path(&dir, "input", lost))?;
    let report = repair_file(&dir, "input", lost)?;
    println!(
        "repaired node {}: {} of {} symbols per stripe (ratio {:.4})",
        lost + 1,
        report.symbols_per_stripe,
        report.data_symbols_per_stripe,
        report.ratio()
    );

    let output = dir.join("output.bin");
    let used = decode_files(&dir, "input", Some(&[11, 10, 9, 8, 7, 6, 5, 4]), &output)?;
    assert_eq!(std::fs::read(&output)?, bytes);
    println!("decoded from nodes {:?} (0-based)", used);

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

// Read a decode profile CSV and find the throughput each TPOT target allows.

use std::fs::File;
use std::path::Path;

use pd_planner::decode::{decode_throughput_for_tpot, read_decode_csv};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/decode_profile_engine.csv");
    let (profile, diagnostics) = read_decode_csv(File::open(path)?, 6144, 512)?;
    for d in &diagnostics {
        println!("diagnostic: {d}");
    }
    println!("tpot_target_ms,batch,tpot_ms,throughput_tps");
    for target_ms in [6.0, 8.0, 12.0, 15.0, 20.0, 25.0, 40.0] {
        match decode_throughput_for_tpot(&profile, target_ms / 1000.0) {
            Ok((op, saturated)) => {
                println!(
                    "{target_ms},{:.2},{:.3},{:.1}{}",
                    op.batch_size,
                    op.tpot * 1000.0,
                    op.throughput,
                    if saturated.is_some() {
                        " (saturated)"
                    } else {
                        ""
                    }
                );
            }
            Err(e) => println!("{target_ms},,,{e}"),
        }
    }
    Ok(())
}

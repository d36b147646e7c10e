//! A field scan through the library front end, written as CSV and JSON.

use std::path::PathBuf;

use ness::cli::{execute, parse_config, parse_overrides};

fn main() -> ness::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ness_field_scan"));
    let args: Vec<String> = [
        "--n_sites",
        "4",
        "--d_max",
        "16",
        "--gamma",
        "1.0",
        "--scan_parameter",
        "h",
        "--scan_start",
        "-1.0",
        "--scan_stop",
        "1.0",
        "--scan_steps",
        "5",
        "--format",
        "both",
        "--verify",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut config = parse_config(None, &parse_overrides(&args)?)?;
    config.out = out;
    for row in execute(&config)? {
        let xx = row
            .observables
            .iter()
            .find(|o| o.name == "XX@1,2")
            .map_or(f64::NAN, |o| o.re);
        let err = row
            .verification
            .as_ref()
            .and_then(|v| v.max_abs_error)
            .unwrap_or(f64::NAN);
        println!(
            "h = {:+.2}: <X1 X2> = {xx:+.6}, {}, oracle error {err:.1e}",
            row.model.field_h, row.status
        );
    }
    println!("results in {}", config.out.display());
    Ok(())
}

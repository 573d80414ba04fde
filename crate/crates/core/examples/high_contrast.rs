//! Drives the experiment harness on a small periodic high-contrast medium
//! and prints the resulting CSV.

use msgfem::experiments::{run, write_csv, ExperimentConfig, ExperimentKind};

const CONFIG: &str = r#"
experiment = "high_contrast"

[problem]
wavenumbers = [6.0]
degree = 2
mesh = { elements = [48] }
boundary_data = "zero"
source = { kind = "point", x = 0.125, y = 0.5 }
medium = { kind = "periodic_inclusions", epsilons = [0.25, 0.125] }

[partition]
subdomains = [6]
overlap = { layers = 2 }
oversampling = [{ layers = 2 }]

[coarse]
rho = ["0.25", "0.125"]
"#;

fn main() -> msgfem::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let out = run(ExperimentKind::HighContrast, &cfg)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    write_csv(std::io::stdout().lock(), &cfg, &out.rows)?;
    Ok(())
}

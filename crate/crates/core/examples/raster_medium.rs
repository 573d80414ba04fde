//! Builds a synthetic layered velocity raster, writes it to a temporary file
//! and solves the point-source problem on it through the experiment harness.

use std::io::Write;

use msgfem::experiments::{run, ExperimentConfig, ExperimentKind};

fn main() -> msgfem::Result<()> {
    let (nx, ny) = (30, 10);
    let dir = std::env::temp_dir().join(format!("msgfem-raster-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("velocity.txt");
    let mut file = std::fs::File::create(&path)?;
    writeln!(file, "{nx} {ny}")?;
    for row in 0..ny {
        let depth = (row as f64 + 0.5) / ny as f64;
        let v = 1500.0 + 2000.0 * depth;
        let line: Vec<String> = (0..nx).map(|_| format!("{v:.0}")).collect();
        writeln!(file, "{}", line.join(" "))?;
    }
    drop(file);

    let text = format!(
        r#"
        experiment = "raster_medium"
        [problem]
        frequencies = [3.0]
        degree = 2
        mesh = {{ per_wavelength = 10.0 }}
        boundary_data = "zero"
        source = {{ kind = "point", x = 0.3333, y = 0.02 }}
        medium = {{ kind = "raster", path = "{}", width = 3000.0, depth = 1000.0 }}
        [partition]
        subdomains = [2]
        aspect = 3
        [coarse]
        n_loc = [10, 20]
        "#,
        path.display()
    );
    let cfg = ExperimentConfig::from_toml(&text)?;
    let out = run(ExperimentKind::RasterMedium, &cfg)?;
    for r in &out.rows {
        println!(
            "f = {:.1} Hz, {}x{} elements, {} dofs, {}x{} subdomains, n_loc {:?}: {:?} iterations, coarse dimension {:?}",
            r.frequency.unwrap_or(f64::NAN),
            r.nx,
            r.ny,
            r.dofs,
            r.mx,
            r.my,
            r.n_loc,
            r.iterations,
            r.coarse_dim
        );
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

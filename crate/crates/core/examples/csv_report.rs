//! Write a CSV, then run the `fit` and `bootstrap` commands on it in-process.

use std::io::Write;

use scents::{cli, generate, DgpConfig};

fn main() -> scents::Result<()> {
    let data = generate(&DgpConfig::reference(600, 9))?;
    let dir = std::env::temp_dir().join("scents-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("sample.csv");
    let mut file = std::fs::File::create(&path)?;
    writeln!(file, "y,q,x_1,x_2,z_1,z_2")?;
    for i in 0..data.n() {
        writeln!(
            file,
            "{},{},{},{},{},{}",
            data.y[i], data.q[i], data.x[(i, 0)], data.x[(i, 1)], data.z[(i, 0)], data.z[(i, 1)]
        )?;
    }
    drop(file);

    let input = path.to_string_lossy().into_owned();
    let mut stdout = std::io::stdout();
    let mut stderr = std::io::stderr();
    for args in [
        vec!["scents", "fit", "--input", &input, "--seed", "7"],
        vec!["scents", "bootstrap", "--input", &input, "--B", "100", "--seed", "7"],
    ] {
        let code = cli::run(args, &mut stdout, &mut stderr);
        eprintln!("exit status {code}");
    }
    Ok(())
}

//! Write sample inputs: planted synthetic spectra, a cube domain and a run
//! config. Usage: `cargo run --example make_inputs -- <dir>`.

use std::fs;
use std::path::PathBuf;

use diracflow::oneform::DomainSpec;
use diracflow::SyntheticSpectrum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> diracflow::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "sample".into()));
    fs::create_dir_all(&dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in [0, 2, 4] {
        let (s, planted) = SyntheticSpectrum::planted(&mut rng, n)?;
        fs::write(dir.join(format!("planted{n}.json")), s.to_json()? + "\n")?;
        println!("planted{n}.json: crossings {planted:?}");
    }
    fs::write(dir.join("cube.json"), DomainSpec::cube(0.3, [1, 0, 0])?.to_json()? + "\n")?;
    let config = "synthetic = \"planted2.json\"\ndomain = \"cube.json\"\nspinc = 0\noutput = \"out\"\n\n[certify]\ntau_grid = 801\n\n[plot]\ntau_points = 2000\n\n[oneform]\niterations = 2000\nseed = 1\n";
    fs::write(dir.join("run.toml"), config)?;
    Ok(())
}

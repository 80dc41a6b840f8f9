//! Regenerates `scenarios/*.json` from the built-in canonical scenarios.

use std::path::PathBuf;

use crimefair::scenarios::canonical;
use crimefair_cli::scenario_file::ScenarioDoc;

fn main() -> std::io::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("scenarios"));
    std::fs::create_dir_all(&dir)?;
    for (name, scenario) in canonical() {
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, ScenarioDoc::from_scenario(&scenario).to_json())?;
        println!("{}", path.display());
    }
    Ok(())
}

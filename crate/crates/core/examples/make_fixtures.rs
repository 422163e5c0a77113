//! Regenerates the shipped fixtures: `cargo run -p specforge-core --example make_fixtures -- fixtures`

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "fixtures".to_string());
    specforge_core::synth::write_fixtures(std::path::Path::new(&dir))?;
    println!("fixtures written to {dir}");
    Ok(())
}

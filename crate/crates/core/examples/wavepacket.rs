//! Evolve a wave packet past the monopole and compare with the Ehrenfest relations.
//!
//! Usage: `cargo run --release --example wavepacket [free-limit|static|flyby]`

use qmonopole::dynamics::{ehrenfest, evolve, EvolutionConfig, Preset};

fn main() -> qmonopole::Result<()> {
    let preset: Preset = std::env::args().nth(1).as_deref().unwrap_or("free-limit").parse()?;
    let cfg = EvolutionConfig::preset(preset);
    println!("{preset:?}: {}³ lattice, dt = {}, {} steps", cfg.lattice.n(), cfg.dt, cfg.steps);
    let (traj, _) = evolve(&cfg)?;
    let every = (traj.len() / 10).max(1);
    println!("{:>6} {:>28} {:>28} {:>10}", "t", "⟨X⟩", "⟨v⟩", "energy");
    for s in traj.samples.iter().step_by(every) {
        let f = |v: [f64; 3]| format!("({:7.3},{:7.3},{:7.3})", v[0], v[1], v[2]);
        println!("{:>6.2} {:>28} {:>28} {:>10.6}", s.t, f(s.position.0), f(s.velocity.0), s.energy);
    }
    println!("\nnorm drift {:.1e}", traj.norm_drift());
    println!("{}", ehrenfest(&traj, &preset.tolerances()).summary());
    Ok(())
}

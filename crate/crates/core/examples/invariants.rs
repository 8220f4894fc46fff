//! Discrete mass and energies of the soliton initial data.

use fnls::{Grid, InitialCondition, Invariants, Spectral};

fn main() -> fnls::Result<()> {
    let grid = Grid::new(20.0, 101)?;
    let u = InitialCondition::soliton().sample(&grid);
    let shifted = InitialCondition { center: 10.5, ..InitialCondition::soliton() }.sample(&grid);
    let spectral = Spectral::new(grid);
    for alpha in [2.0, 1.6, 1.2] {
        let inv = Invariants::new(&spectral, alpha)?;
        println!(
            "alpha = {alpha}: M = {:.12}  H~ = {:.12}  H(U, U shifted) = {:.12}",
            inv.mass(&u)?,
            inv.energy_single(&u)?,
            inv.energy_two_step(&u, &shifted)?
        );
    }
    Ok(())
}

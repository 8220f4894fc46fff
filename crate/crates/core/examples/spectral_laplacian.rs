//! Applies the fractional Laplacian to a single Fourier mode and checks the eigenvalue.

use std::f64::consts::PI;

use fnls::{Grid, Spectral, C64};

fn main() -> fnls::Result<()> {
    let grid = Grid::new(20.0, 101)?;
    let spectral = Spectral::new(grid.clone());
    let k = 3.0;
    let mode = grid.sample(|x| C64::from_polar(1.0, 2.0 * PI * k * x / 20.0));
    for alpha in [2.0, 1.6, 1.2] {
        let symbol = spectral.symbol(alpha)?;
        let out = spectral.apply_multiplier(&mode, &symbol)?;
        let expected = (2.0 * PI * k / 20.0).powf(alpha);
        let err = out
            .iter()
            .zip(mode.iter())
            .map(|(a, b)| (a - expected * b).norm())
            .fold(0.0, f64::max);
        println!("alpha = {alpha}: eigenvalue {expected:.6}, max deviation {err:.2e}");
    }
    Ok(())
}
